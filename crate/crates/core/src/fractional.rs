//! Continuous fractional signature of piecewise-linear paths.
//!
//! For a word `I = J·i` the coefficient at time `t` is the Riemann-Liouville
//! integral of order α of `S^α(X)^J_{0,s} Ẋ^i_s`, so every level is obtained
//! from the previous one by applying the same operator. Single linear
//! segments have the closed form in [`linear_closed_form`]; general paths go
//! through the product-integration operator in [`crate::quadrature`].

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::path::PiecewiseLinearPath;
use crate::quadrature::ProductGrid;
use crate::specfun::{beta, gamma};
use crate::words::{word_index, TruncatedSignature, Word};

/// Fractional order `α > 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Alpha(f64);

impl Alpha {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value.is_finite() {
            Ok(Alpha(value))
        } else {
            Err(Error::domain(format!("alpha must be positive and finite, got {value}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Fractional signature coefficient of a linear segment from `A` to `B` over
/// `[a, b]`:
///
/// `Π_j (B-A)_{i_j} / (Γ(α)Γ(1+(k-1)α)) · (b-a)^((α-1)k) · β((k-1)α+1, α)`
///
/// `delta` is the full increment `B - A`, indexed by channel.
pub fn linear_closed_form(delta: &[f64], alpha: Alpha, a: f64, b: f64, word: &Word) -> Result<f64> {
    if !(b > a) {
        return Err(Error::domain(format!("interval [{a}, {b}] is empty")));
    }
    word_index(word, delta.len())?;
    if word.is_empty() {
        return Ok(1.0);
    }
    let k = word.len() as f64;
    let al = alpha.value();
    let prod: f64 = word.channels().iter().map(|&c| delta[c - 1]).product();
    let scale = (b - a).powf((al - 1.0) * k);
    let inner = (k - 1.0) * al + 1.0;
    Ok(prod / (gamma(al)? * gamma(inner)?) * scale * beta(inner, al)?)
}

/// Grid functions `t ↦ S^α(X)^J_{0,t}` for every word up to some level,
/// sampled on the product-integration nodes.
#[derive(Debug, Clone)]
pub struct PrefixFunctionGrid {
    dim: usize,
    times: Vec<f64>,
    knot_nodes: Vec<usize>,
    // values[k][word_offset * n_nodes + node]
    values: Vec<Vec<f64>>,
}

impl PrefixFunctionGrid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> usize {
        self.values.len() - 1
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn n_nodes(&self) -> usize {
        self.times.len()
    }

    /// Node index of knot `i` (time `i`).
    pub fn knot_node(&self, i: usize) -> usize {
        self.knot_nodes[i]
    }

    /// `S^α(X)^word_{0, t_node}`.
    pub fn value(&self, word: &Word, node: usize) -> Result<f64> {
        let (k, offset) = word_index(word, self.dim)?;
        if k > self.level() {
            return Err(Error::domain(format!("word {word} beyond level {}", self.level())));
        }
        Ok(self.values[k][offset * self.n_nodes() + node])
    }

    /// Whole truncated signature over `[0, t_node]`.
    pub fn signature_at(&self, node: usize) -> TruncatedSignature {
        let n = self.n_nodes();
        let levels = self
            .values
            .iter()
            .map(|lvl| lvl.iter().skip(node).step_by(n).copied().collect())
            .collect();
        TruncatedSignature::from_levels_unchecked(self.dim, levels)
    }
}

fn check_inputs(path: &PiecewiseLinearPath, level: usize) -> Result<()> {
    if level == 0 {
        return Err(Error::domain("truncation level must be at least 1"));
    }
    if path.dim() == 0 {
        return Err(Error::domain("path has no channels"));
    }
    Ok(())
}

fn slope_table(path: &PiecewiseLinearPath) -> Vec<f64> {
    path.increments().into_iter().flatten().collect()
}

/// One level of the sweep: for every prefix grid function at `level - 1`,
/// integrate it against each channel's slope at the requested targets.
fn next_level(grid: &ProductGrid, prev: &[f64], slopes: &[f64], dim: usize, targets: &[usize]) -> Vec<f64> {
    let n_nodes = grid.n_nodes();
    let n_targets = targets.len();
    let blocks: Vec<Vec<f64>> = prev
        .par_chunks(n_nodes)
        .map(|values| {
            let out = grid.apply(values, slopes, dim, targets);
            // out is target-major; regroup to word-major
            let mut regrouped = vec![0.0; dim * n_targets];
            for (t, row) in out.chunks(dim).enumerate() {
                for (c, v) in row.iter().enumerate() {
                    regrouped[c * n_targets + t] = *v;
                }
            }
            regrouped
        })
        .collect();
    blocks.concat()
}

/// Fractional signature grid functions for all words up to `level`, on a
/// product-integration grid of `grid_n` cells aligned to the knots.
pub fn prefix_function_grid(
    path: &PiecewiseLinearPath,
    alpha: Alpha,
    level: usize,
    grid_n: usize,
) -> Result<PrefixFunctionGrid> {
    check_inputs(path, level)?;
    let grid = ProductGrid::new(alpha.value(), path.n_segments(), grid_n)?;
    Ok(sweep(&grid, path, level, false))
}

pub(crate) fn sweep(grid: &ProductGrid, path: &PiecewiseLinearPath, level: usize, endpoint_only_last: bool) -> PrefixFunctionGrid {
    let dim = path.dim();
    let n_nodes = grid.n_nodes();
    let slopes = slope_table(path);
    let all: Vec<usize> = (0..n_nodes).collect();
    let last = [n_nodes - 1];
    let mut values = vec![vec![1.0; n_nodes]];
    for k in 1..=level {
        let targets: &[usize] = if endpoint_only_last && k == level { &last } else { &all };
        let lvl = next_level(grid, &values[k - 1], &slopes, dim, targets);
        values.push(lvl);
    }
    PrefixFunctionGrid {
        dim,
        times: grid.node_times(),
        knot_nodes: (0..path.n_knots()).map(|i| grid.knot_node(i)).collect(),
        values,
    }
}

/// Fractional signature `S^α(X)_{0,n-1}` truncated at `level`.
///
/// `grid_n` is the total number of quadrature cells and must be a multiple
/// of the segment count with at least two cells per segment.
pub fn fractional_signature(
    path: &PiecewiseLinearPath,
    alpha: Alpha,
    level: usize,
    grid_n: usize,
) -> Result<TruncatedSignature> {
    check_inputs(path, level)?;
    let grid = ProductGrid::new(alpha.value(), path.n_segments(), grid_n)?;
    let sweep = sweep(&grid, path, level, true);
    let n_nodes = grid.n_nodes();
    let levels = sweep
        .values
        .into_iter()
        .enumerate()
        .map(|(k, lvl)| {
            if k == level {
                lvl
            } else {
                lvl.into_iter().skip(n_nodes - 1).step_by(n_nodes).collect()
            }
        })
        .collect();
    Ok(TruncatedSignature::from_levels_unchecked(path.dim(), levels))
}

/// First-level coefficients of `X_t = t` on `[0, 1]` and of its slowed-down
/// reparametrization `Y_t = t/2` on `[0, 2]`. They differ by `2^(α-1)`.
pub fn reparametrization_counterexample(alpha: Alpha) -> Result<(f64, f64)> {
    let first = Word::new(vec![1], 1)?;
    let original = linear_closed_form(&[1.0], alpha, 0.0, 1.0, &first)?;
    let dilated = linear_closed_form(&[1.0], alpha, 0.0, 2.0, &first)?;
    Ok((original, dilated))
}
