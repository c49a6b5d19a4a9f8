//! Discrete fractional signature of piecewise-linear paths.
//!
//! Unit intervals `[a, a+1]` are evaluated in closed form through the
//! incomplete beta function, with a horizon `d ≥ b` controlling its upper
//! limit. Longer intervals split at `h = ⌈(a+b)/2⌉` and recombine three
//! sub-results per word:
//!
//! ```text
//! S_d[a,b]^I = S_d[a,h]^I + Σ_{r=1}^{k-1} S_u[a,h]^(i_1..i_r) · S_d[h,b]^(i_{r+1}..i_k) + S_d[h,b]^I
//! ```
//!
//! with `u = (b+h)/2`. Horizons are always integers or half-integers, so
//! sub-results are memoized on `(a, b, 2·horizon)`.

use std::collections::HashMap;
use std::rc::Rc;

use crate::error::{Error, Result};
use crate::fractional::Alpha;
use crate::path::PiecewiseLinearPath;
use crate::specfun::{gamma, incomplete_beta};
use crate::words::{merge, word_index, TruncatedSignature, Word};

/// An integer interval `[a, b]` of the path domain with its horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HorizonContext {
    a: usize,
    b: usize,
    // horizon in half units
    horizon2: u64,
}

impl HorizonContext {
    /// Validates `0 ≤ a < b ≤ n-1` and `horizon ≥ b`. The horizon must be a
    /// multiple of 1/2, the only values the recursion produces.
    pub fn new(path: &PiecewiseLinearPath, a: usize, b: usize, horizon: f64) -> Result<Self> {
        if a >= b || b > path.n_segments() {
            return Err(Error::domain(format!(
                "interval [{a}, {b}] invalid for a path on [0, {}]",
                path.n_segments()
            )));
        }
        let horizon2 = half_units(horizon)?;
        if horizon2 < 2 * b as u64 {
            return Err(Error::domain(format!("horizon {horizon} is below the interval end {b}")));
        }
        Ok(Self { a, b, horizon2 })
    }

    pub fn a(&self) -> usize {
        self.a
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn horizon(&self) -> f64 {
        self.horizon2 as f64 / 2.0
    }
}

fn half_units(horizon: f64) -> Result<u64> {
    let twice = horizon * 2.0;
    if !(twice.is_finite() && twice >= 0.0 && twice.fract() == 0.0 && twice < 2f64.powi(52)) {
        return Err(Error::domain(format!(
            "horizon {horizon} must be a non-negative multiple of 1/2"
        )));
    }
    Ok(twice as u64)
}

/// Per-level scalar of the unit-interval formula, so that the level-`k`
/// coefficient of word `I` is `Π_j Δ_{i_j} · factor[k-1]`, where
/// `D = horizon - a`:
///
/// `factor_k = D^(kα) β_{1/D}((k-1)α+1, α) / (Γ(α)Γ(1+(k-1)α))`
fn unit_interval_factors(span: f64, alpha: f64, level: usize) -> Result<Vec<f64>> {
    let g_alpha = gamma(alpha)?;
    let z = 1.0 / span;
    (1..=level)
        .map(|k| {
            let inner = (k as f64 - 1.0) * alpha + 1.0;
            let ib = incomplete_beta(z, inner, alpha)?;
            Ok(span.powf(k as f64 * alpha) * ib / (g_alpha * gamma(inner)?))
        })
        .collect()
}

/// Discrete fractional signature coefficient of `word` on the unit interval
/// `[a, a+1]` with the given horizon.
pub fn base_case(path: &PiecewiseLinearPath, a: usize, horizon: f64, word: &Word, alpha: Alpha) -> Result<f64> {
    if a + 1 > path.n_segments() {
        return Err(Error::domain(format!(
            "unit interval [{a}, {}] outside the path domain",
            a + 1
        )));
    }
    if !(horizon >= (a + 1) as f64) || !horizon.is_finite() {
        return Err(Error::domain(format!("horizon {horizon} is below {}", a + 1)));
    }
    word_index(word, path.dim())?;
    if word.is_empty() {
        return Ok(1.0);
    }
    let delta = path.slope_unchecked(a);
    let factors = unit_interval_factors(horizon - a as f64, alpha.value(), word.len())?;
    let prod: f64 = word.channels().iter().map(|&c| delta[c - 1]).product();
    Ok(prod * factors[word.len() - 1])
}

/// Knobs for the recursion.
#[derive(Debug, Clone, Copy)]
pub struct DiscreteOptions {
    /// Reuse sub-results across the recursion tree.
    pub memoize: bool,
}

impl Default for DiscreteOptions {
    fn default() -> Self {
        Self { memoize: true }
    }
}

struct Recursion<'p> {
    path: &'p PiecewiseLinearPath,
    alpha: f64,
    level: usize,
    memoize: bool,
    memo: HashMap<(usize, usize, u64), Rc<TruncatedSignature>>,
    // unit-interval factors keyed by 2·(horizon - a)
    factors: HashMap<u64, Rc<Vec<f64>>>,
}

impl Recursion<'_> {
    fn solve(&mut self, a: usize, b: usize, horizon2: u64) -> Result<Rc<TruncatedSignature>> {
        if self.memoize {
            if let Some(hit) = self.memo.get(&(a, b, horizon2)) {
                return Ok(Rc::clone(hit));
            }
        }
        let sig = if b == a + 1 {
            self.unit(a, horizon2)?
        } else {
            let h = (a + b).div_ceil(2);
            let u2 = (b + h) as u64;
            let left_full = self.solve(a, h, horizon2)?;
            let left_mixed = self.solve(a, h, u2)?;
            let right = self.solve(h, b, horizon2)?;
            merge(&left_full, &left_mixed, &right)
        };
        let sig = Rc::new(sig);
        if self.memoize {
            self.memo.insert((a, b, horizon2), Rc::clone(&sig));
        }
        Ok(sig)
    }

    fn unit(&mut self, a: usize, horizon2: u64) -> Result<TruncatedSignature> {
        let span2 = horizon2 - 2 * a as u64;
        let factors = match self.factors.get(&span2) {
            Some(f) => Rc::clone(f),
            None => {
                let f = Rc::new(unit_interval_factors(span2 as f64 / 2.0, self.alpha, self.level)?);
                self.factors.insert(span2, Rc::clone(&f));
                f
            }
        };
        let delta = self.path.slope_unchecked(a);
        let dim = delta.len();
        let mut levels = Vec::with_capacity(self.level + 1);
        levels.push(vec![1.0]);
        // tensor powers of delta, scaled per level
        let mut power = vec![1.0];
        for factor in factors.iter() {
            let mut next = Vec::with_capacity(power.len() * dim);
            for &p in &power {
                next.extend(delta.iter().map(|&x| p * x));
            }
            levels.push(next.iter().map(|v| v * factor).collect());
            power = next;
        }
        Ok(TruncatedSignature::from_levels_unchecked(dim, levels))
    }
}

/// `_dS̃^α(X)_{a,b}` truncated at `level`.
pub fn discrete_signature_interval(
    path: &PiecewiseLinearPath,
    a: usize,
    b: usize,
    horizon: f64,
    alpha: Alpha,
    level: usize,
) -> Result<TruncatedSignature> {
    discrete_signature_interval_with(path, a, b, horizon, alpha, level, DiscreteOptions::default())
}

pub fn discrete_signature_interval_with(
    path: &PiecewiseLinearPath,
    a: usize,
    b: usize,
    horizon: f64,
    alpha: Alpha,
    level: usize,
    options: DiscreteOptions,
) -> Result<TruncatedSignature> {
    if level == 0 {
        return Err(Error::domain("truncation level must be at least 1"));
    }
    let ctx = HorizonContext::new(path, a, b, horizon)?;
    let mut rec = Recursion {
        path,
        alpha: alpha.value(),
        level,
        memoize: options.memoize,
        memo: HashMap::new(),
        factors: HashMap::new(),
    };
    let sig = rec.solve(ctx.a, ctx.b, ctx.horizon2)?;
    drop(rec);
    Ok(Rc::try_unwrap(sig).unwrap_or_else(|shared| (*shared).clone()))
}

/// Discrete fractional signature over the whole path, horizon `n - 1`.
pub fn discrete_signature(path: &PiecewiseLinearPath, alpha: Alpha, level: usize) -> Result<TruncatedSignature> {
    discrete_signature_with(path, alpha, level, DiscreteOptions::default())
}

pub fn discrete_signature_with(
    path: &PiecewiseLinearPath,
    alpha: Alpha,
    level: usize,
    options: DiscreteOptions,
) -> Result<TruncatedSignature> {
    let end = path.n_segments();
    discrete_signature_interval_with(path, 0, end, end as f64, alpha, level, options)
}

/// Upper bound on `(k-1)·grid_n²` for [`base_case_simplex_oracle`].
pub const ORACLE_BUDGET: usize = 2_000_000_000;

/// Independent check of [`base_case`]: evaluates
///
/// `ΠΔ / Γ(α)^k ∫_{a<t_1<…<t_k<a+1} (horizon - t_k)^(α-1) Π_j (t_{j+1} - t_j)^(α-1) dt`
///
/// by nesting one-dimensional sums on a uniform grid of `grid_n` cells. Each
/// nested function is averaged over a cell and multiplied by the exact mass
/// of the kernel on that cell, so the weak singularities stay integrable.
/// First-order accurate in `1/grid_n`.
pub fn base_case_simplex_oracle(
    path: &PiecewiseLinearPath,
    a: usize,
    horizon: f64,
    word: &Word,
    alpha: Alpha,
    grid_n: usize,
) -> Result<f64> {
    let k = word.len();
    if k > 3 {
        return Err(Error::domain(format!("simplex oracle supports words up to length 3, got {k}")));
    }
    if grid_n < 2 {
        return Err(Error::domain("oracle grid needs at least 2 cells"));
    }
    if a + 1 > path.n_segments() {
        return Err(Error::domain(format!("unit interval [{a}, {}] outside the path domain", a + 1)));
    }
    let start = a as f64;
    if !(horizon >= start + 1.0) || !horizon.is_finite() {
        return Err(Error::domain(format!("horizon {horizon} is below {}", a + 1)));
    }
    word_index(word, path.dim())?;
    if k == 0 {
        return Ok(1.0);
    }
    if (k - 1).saturating_mul(grid_n.saturating_mul(grid_n)) > ORACLE_BUDGET {
        return Err(Error::Budget(format!(
            "simplex oracle with k={k} on {grid_n} cells exceeds {ORACLE_BUDGET}"
        )));
    }
    let al = alpha.value();
    let h = 1.0 / grid_n as f64;
    // kernel mass of (t_m - s)^(α-1) over a cell `lag` cells behind t_m
    let mass: Vec<f64> = (0..=grid_n)
        .map(|lag| {
            if lag == 0 {
                0.0
            } else {
                h.powf(al) * ((lag as f64).powf(al) - (lag as f64 - 1.0).powf(al)) / al
            }
        })
        .collect();
    let mut inner = vec![1.0; grid_n + 1];
    for _ in 1..k {
        let avg: Vec<f64> = inner.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let mut next = vec![0.0; grid_n + 1];
        for (m, slot) in next.iter_mut().enumerate().skip(1) {
            *slot = avg[..m].iter().enumerate().map(|(c, v)| v * mass[m - c]).sum();
        }
        inner = next;
    }
    let span = horizon - start;
    let outer: f64 = inner
        .windows(2)
        .enumerate()
        .map(|(c, w)| {
            let near = span - (c + 1) as f64 * h;
            let far = span - c as f64 * h;
            let near_pow = if near <= 0.0 { 0.0 } else { near.powf(al) };
            0.5 * (w[0] + w[1]) * (far.powf(al) - near_pow) / al
        })
        .sum();
    let delta = path.slope_unchecked(a);
    let prod: f64 = word.channels().iter().map(|&c| delta[c - 1]).product();
    Ok(prod * outer / gamma(al)?.powi(k as i32))
}
