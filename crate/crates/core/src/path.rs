//! Piecewise-linear paths with knots at the integer times `0, 1, …, n-1`.

use std::path::Path;

use crate::error::{Error, Result};

/// `X: [0, n-1] → R^d`, linear between consecutive knots, knot `i` at time `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearPath {
    dim: usize,
    // row-major n × d
    knots: Vec<f64>,
}

impl PiecewiseLinearPath {
    /// Builds a path from knot rows. Needs at least two knots, all of the
    /// same positive dimension, with finite entries.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if dim == 0 {
            return Err(Error::domain("path knots must have at least one coordinate"));
        }
        if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != dim) {
            return Err(Error::domain(format!(
                "knot {i} has {} coordinates, expected {dim}",
                row.len()
            )));
        }
        Self::from_flat(dim, rows.into_iter().flatten().collect())
    }

    /// Builds a path from a row-major knot buffer.
    pub fn from_flat(dim: usize, knots: Vec<f64>) -> Result<Self> {
        if dim == 0 || !knots.len().is_multiple_of(dim) {
            return Err(Error::domain(format!(
                "{} values do not form rows of dimension {dim}",
                knots.len()
            )));
        }
        if knots.len() / dim < 2 {
            return Err(Error::domain("a path needs at least two knots"));
        }
        if let Some(pos) = knots.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!(
                "non-finite coordinate in knot {}",
                pos / dim
            )));
        }
        Ok(Self { dim, knots })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_knots(&self) -> usize {
        self.knots.len() / self.dim
    }

    pub fn n_segments(&self) -> usize {
        self.n_knots() - 1
    }

    /// Right end of the time domain, `n - 1`.
    pub fn end_time(&self) -> f64 {
        self.n_segments() as f64
    }

    pub fn knot(&self, i: usize) -> &[f64] {
        &self.knots[i * self.dim..(i + 1) * self.dim]
    }

    /// Position at time `t ∈ [0, n-1]`.
    pub fn evaluate(&self, t: f64) -> Result<Vec<f64>> {
        if !(t >= 0.0 && t <= self.end_time()) {
            return Err(Error::domain(format!(
                "time {t} outside [0, {}]",
                self.end_time()
            )));
        }
        let i = (t.floor() as usize).min(self.n_segments() - 1);
        let frac = t - i as f64;
        if frac == 0.0 {
            return Ok(self.knot(i).to_vec());
        }
        if frac == 1.0 {
            return Ok(self.knot(i + 1).to_vec());
        }
        Ok(self
            .knot(i)
            .iter()
            .zip(self.knot(i + 1))
            .map(|(a, b)| a * (1.0 - frac) + b * frac)
            .collect())
    }

    /// Increment `A_{i+1} - A_i` over segment `i` (the constant derivative).
    pub fn segment_slope(&self, i: usize) -> Result<Vec<f64>> {
        if i >= self.n_segments() {
            return Err(Error::domain(format!(
                "segment {i} out of range (path has {} segments)",
                self.n_segments()
            )));
        }
        Ok(self.slope_unchecked(i))
    }

    pub(crate) fn slope_unchecked(&self, i: usize) -> Vec<f64> {
        self.knot(i + 1)
            .iter()
            .zip(self.knot(i))
            .map(|(b, a)| b - a)
            .collect()
    }

    /// All segment increments, one row per segment.
    pub fn increments(&self) -> Vec<Vec<f64>> {
        (0..self.n_segments()).map(|i| self.slope_unchecked(i)).collect()
    }

    /// Total increment `A_{n-1} - A_0`.
    pub fn total_increment(&self) -> Vec<f64> {
        let last = self.n_knots() - 1;
        self.knot(last)
            .iter()
            .zip(self.knot(0))
            .map(|(b, a)| b - a)
            .collect()
    }

    /// Every knot shifted by `c`.
    pub fn translate(&self, c: &[f64]) -> Result<Self> {
        if c.len() != self.dim {
            return Err(Error::domain(format!(
                "shift has dimension {}, path has {}",
                c.len(),
                self.dim
            )));
        }
        let knots = self
            .knots
            .chunks(self.dim)
            .flat_map(|row| row.iter().zip(c).map(|(x, s)| x + s))
            .collect();
        Self::from_flat(self.dim, knots)
    }

    /// Slows the path down by an integer factor: the new path traces the same
    /// image over `[0, factor·(n-1)]`, with `factor - 1` interpolated knots per
    /// original segment.
    pub fn time_dilate(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::domain("dilation factor must be at least 1"));
        }
        let mut knots = Vec::with_capacity((factor * self.n_segments() + 1) * self.dim);
        for i in 0..self.n_segments() {
            let (a, b) = (self.knot(i), self.knot(i + 1));
            for j in 0..factor {
                let frac = j as f64 / factor as f64;
                knots.extend(a.iter().zip(b).map(|(x, y)| x + (y - x) * frac));
            }
        }
        knots.extend_from_slice(self.knot(self.n_knots() - 1));
        Self::from_flat(self.dim, knots)
    }

    /// The restriction to `[a, b]`, re-timed to start at 0.
    pub fn sub_path(&self, a: usize, b: usize) -> Result<Self> {
        if a >= b || b >= self.n_knots() {
            return Err(Error::domain(format!(
                "sub-path [{a}, {b}] invalid for {} knots",
                self.n_knots()
            )));
        }
        Self::from_flat(self.dim, self.knots[a * self.dim..(b + 1) * self.dim].to_vec())
    }

    /// Concatenation: `other` is translated so that it starts where `self`
    /// ends, and its segments follow those of `self`.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if other.dim != self.dim {
            return Err(Error::domain("cannot concatenate paths of different dimension"));
        }
        let end = self.knot(self.n_knots() - 1);
        let shift: Vec<f64> = end.iter().zip(other.knot(0)).map(|(e, s)| e - s).collect();
        let moved = other.translate(&shift)?;
        let mut knots = self.knots.clone();
        knots.extend_from_slice(&moved.knots[self.dim..]);
        Self::from_flat(self.dim, knots)
    }

    /// Reads a path from CSV text: one knot per row, comma-separated numbers.
    /// A first line that does not parse as numbers is taken as a header.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> =
                line.split(',').map(|f| f.trim().parse::<f64>()).collect();
            match parsed {
                Ok(row) => rows.push(row),
                Err(_) if rows.is_empty() && lineno == 0 => continue,
                Err(e) => {
                    return Err(Error::Data(format!("line {}: {e}", lineno + 1)));
                }
            }
        }
        Self::new(rows).map_err(|e| match e {
            Error::Domain(msg) => Error::Data(msg),
            other => other,
        })
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text)
    }
}
