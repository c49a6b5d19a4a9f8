//! Linear controlled Caputo equations
//!
//! ```text
//! Y_t = y + (1/Γ(α)) ∫_0^t (t-s)^(α-1) V(Y_s) Ẋ_s ds,   0 < α ≤ 1
//! ```
//!
//! solved by Picard iteration on the product-integration grid, and the
//! expansion of the iterates in fractional-signature coefficients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fractional::{sweep, Alpha};
use crate::path::PiecewiseLinearPath;
use crate::quadrature::{aligned_cells, ProductGrid};
use crate::words::{word_index, TruncatedSignature, Word};

/// Linear map `y ↦ V(y) ∈ L(R^d, R^e)` with `V(y)_{q,i} = Σ_p V[q][i][p] y_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearVectorField {
    e: usize,
    d: usize,
    // tensor[(q * d + i) * e + p]
    tensor: Vec<f64>,
}

impl LinearVectorField {
    pub fn new(e: usize, d: usize, tensor: Vec<f64>) -> Result<Self> {
        if e == 0 || d == 0 {
            return Err(Error::domain("vector field dimensions must be positive"));
        }
        if tensor.len() != e * d * e {
            return Err(Error::domain(format!(
                "expected {} entries for e={e}, d={d}, got {}",
                e * d * e,
                tensor.len()
            )));
        }
        if tensor.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("vector field entries must be finite"));
        }
        Ok(Self { e, d, tensor })
    }

    /// Entries drawn uniformly from `[-1, 1]`.
    pub fn random<R: Rng>(e: usize, d: usize, rng: &mut R) -> Result<Self> {
        Self::new(e, d, (0..e * d * e).map(|_| rng.gen_range(-1.0..=1.0)).collect())
    }

    pub fn state_dim(&self) -> usize {
        self.e
    }

    pub fn control_dim(&self) -> usize {
        self.d
    }

    pub fn entry(&self, q: usize, i: usize, p: usize) -> f64 {
        self.tensor[(q * self.d + i) * self.e + p]
    }

    /// `V(y)` as an `e × d` row-major matrix.
    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        self.tensor
            .chunks(self.e)
            .map(|row| row.iter().zip(y).map(|(v, yp)| v * yp).sum())
            .collect()
    }

    /// `V(y) · x` for a control direction `x ∈ R^d`, written into `out`.
    fn apply_to(&self, y: &[f64], x: &[f64], out: &mut [f64]) {
        for (q, o) in out.iter_mut().enumerate() {
            *o = (0..self.d)
                .map(|i| {
                    let row = &self.tensor[(q * self.d + i) * self.e..(q * self.d + i + 1) * self.e];
                    x[i] * row.iter().zip(y).map(|(v, yp)| v * yp).sum::<f64>()
                })
                .sum();
        }
    }
}

/// Picard iterates `Y^0..Y^n` sampled on the product-integration grid.
#[derive(Debug, Clone)]
pub struct PicardIterates {
    e: usize,
    times: Vec<f64>,
    knot_nodes: Vec<usize>,
    // iterates[n][node * e + q]
    iterates: Vec<Vec<f64>>,
}

impl PicardIterates {
    pub fn n_iterates(&self) -> usize {
        self.iterates.len() - 1
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn knot_node(&self, i: usize) -> usize {
        self.knot_nodes[i]
    }

    /// `Y^n` at grid node `node`.
    pub fn value(&self, n: usize, node: usize) -> &[f64] {
        &self.iterates[n][node * self.e..(node + 1) * self.e]
    }

    /// `Y^n` at the end of the path.
    pub fn endpoint(&self, n: usize) -> &[f64] {
        self.value(n, self.times.len() - 1)
    }

    /// Max-norm distance between `Y^n` and `Y^{n-1}` over the grid.
    pub fn step_size(&self, n: usize) -> f64 {
        max_abs_diff(&self.iterates[n], &self.iterates[n - 1])
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

fn check_problem(field: &LinearVectorField, path: &PiecewiseLinearPath, y0: &[f64], alpha: Alpha) -> Result<()> {
    if alpha.value() > 1.0 {
        return Err(Error::domain(format!(
            "Caputo solver needs 0 < alpha <= 1, got {}",
            alpha.value()
        )));
    }
    if path.dim() != field.d {
        return Err(Error::domain(format!(
            "path has {} channels but the vector field expects {}",
            path.dim(),
            field.d
        )));
    }
    if y0.len() != field.e {
        return Err(Error::domain(format!(
            "initial value has {} components, expected {}",
            y0.len(),
            field.e
        )));
    }
    Ok(())
}

struct PicardSweep<'a> {
    field: &'a LinearVectorField,
    grid: ProductGrid,
    slopes: Vec<Vec<f64>>,
    y0: Vec<f64>,
}

impl PicardSweep<'_> {
    fn initial(&self) -> Vec<f64> {
        self.y0.repeat(self.grid.n_nodes())
    }

    fn step(&self, prev: &[f64]) -> Vec<f64> {
        let e = self.field.e;
        let mut next = self.grid.apply_per_segment(e, |seg, node, out| {
            self.field.apply_to(&prev[node * e..(node + 1) * e], &self.slopes[seg], out);
        });
        for chunk in next.chunks_mut(e) {
            for (v, y) in chunk.iter_mut().zip(&self.y0) {
                *v += y;
            }
        }
        next
    }
}

fn sweep_for<'a>(
    field: &'a LinearVectorField,
    path: &PiecewiseLinearPath,
    y0: &[f64],
    alpha: Alpha,
    grid_n: usize,
) -> Result<PicardSweep<'a>> {
    check_problem(field, path, y0, alpha)?;
    let grid = ProductGrid::new(alpha.value(), path.n_segments(), grid_n)?;
    Ok(sweep_on(field, path, y0, grid))
}

fn sweep_on<'a>(field: &'a LinearVectorField, path: &PiecewiseLinearPath, y0: &[f64], grid: ProductGrid) -> PicardSweep<'a> {
    PicardSweep {
        field,
        grid,
        slopes: path.increments(),
        y0: y0.to_vec(),
    }
}

fn package(sweep: &PicardSweep, path: &PiecewiseLinearPath, iterates: Vec<Vec<f64>>) -> PicardIterates {
    PicardIterates {
        e: sweep.field.e,
        times: sweep.grid.node_times(),
        knot_nodes: (0..path.n_knots()).map(|i| sweep.grid.knot_node(i)).collect(),
        iterates,
    }
}

/// `n_iter` Picard iterates starting from the constant `y0`. Each iterate
/// applies the same product-integration operator as the fractional
/// signature, so the two share one discretization.
pub fn picard_iterates(
    field: &LinearVectorField,
    path: &PiecewiseLinearPath,
    y0: &[f64],
    alpha: Alpha,
    n_iter: usize,
    grid_n: usize,
) -> Result<PicardIterates> {
    let sweep = sweep_for(field, path, y0, alpha, grid_n)?;
    Ok(iterate(&sweep, path, n_iter))
}

fn iterate(sweep: &PicardSweep, path: &PiecewiseLinearPath, n_iter: usize) -> PicardIterates {
    let mut iterates = vec![sweep.initial()];
    for n in 0..n_iter {
        let next = sweep.step(&iterates[n]);
        iterates.push(next);
    }
    package(sweep, path, iterates)
}

/// Relative change below which [`solve`] stops iterating.
pub const STAGNATION_TOL: f64 = 1e-14;

/// Result of [`solve`].
#[derive(Debug, Clone)]
pub struct Solution {
    pub iterates: PicardIterates,
    /// True if the stagnation test fired before the iteration cap.
    pub converged: bool,
}

impl Solution {
    pub fn endpoint(&self) -> &[f64] {
        self.iterates.endpoint(self.iterates.n_iterates())
    }
}

/// Iterates until the max-norm change relative to the current iterate drops
/// below [`STAGNATION_TOL`], or `max_iter` iterates have been taken.
pub fn solve(
    field: &LinearVectorField,
    path: &PiecewiseLinearPath,
    y0: &[f64],
    alpha: Alpha,
    grid_n: usize,
    max_iter: usize,
) -> Result<Solution> {
    let sweep = sweep_for(field, path, y0, alpha, grid_n)?;
    let mut iterates = vec![sweep.initial()];
    let mut converged = false;
    while iterates.len() <= max_iter {
        let next = sweep.step(iterates.last().unwrap());
        let change = max_abs_diff(&next, iterates.last().unwrap());
        let scale = max_abs(&next);
        iterates.push(next);
        if change <= STAGNATION_TOL * scale || change == 0.0 {
            converged = true;
            break;
        }
    }
    Ok(Solution {
        iterates: package(&sweep, path, iterates),
        converged,
    })
}

/// Coefficients `c_J ∈ R^e` of `Y^n = Σ_{|J| ≤ n} c_J S^α(X)^J`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionCoefficients {
    e: usize,
    d: usize,
    // levels[k][offset * e + q]
    levels: Vec<Vec<f64>>,
}

impl ExpansionCoefficients {
    pub fn level(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn get(&self, word: &Word) -> Result<&[f64]> {
        let (k, offset) = word_index(word, self.d)?;
        if k > self.level() {
            return Err(Error::domain(format!("word {word} beyond level {}", self.level())));
        }
        Ok(&self.levels[k][offset * self.e..(offset + 1) * self.e])
    }
}

/// `c_∅ = y0`, and `c_{J·i}` is column `i` of `V(c_J)`.
pub fn expansion_coefficients(field: &LinearVectorField, y0: &[f64], n: usize) -> Result<ExpansionCoefficients> {
    if y0.len() != field.e {
        return Err(Error::domain(format!(
            "initial value has {} components, expected {}",
            y0.len(),
            field.e
        )));
    }
    let (e, d) = (field.e, field.d);
    let mut levels = vec![y0.to_vec()];
    for k in 1..=n {
        let prev = &levels[k - 1];
        let mut next = vec![0.0; prev.len() * d];
        for (offset, c) in prev.chunks(e).enumerate() {
            let m = field.apply(c);
            for i in 0..d {
                for q in 0..e {
                    next[(offset * d + i) * e + q] = m[q * d + i];
                }
            }
        }
        levels.push(next);
    }
    Ok(ExpansionCoefficients { e, d, levels })
}

/// `Σ_J c_J S^J` over all words up to the coefficients' level.
pub fn evaluate_expansion(coeffs: &ExpansionCoefficients, sig: &TruncatedSignature) -> Result<Vec<f64>> {
    if sig.dim() != coeffs.d {
        return Err(Error::domain(format!(
            "signature has dimension {}, coefficients expect {}",
            sig.dim(),
            coeffs.d
        )));
    }
    if sig.level() < coeffs.level() {
        return Err(Error::domain(format!(
            "signature truncated at level {} but coefficients reach level {}",
            sig.level(),
            coeffs.level()
        )));
    }
    let mut out = vec![0.0; coeffs.e];
    for (k, lvl) in coeffs.levels.iter().enumerate() {
        let s = sig.level_coeffs(k);
        for (c, &sj) in lvl.chunks(coeffs.e).zip(s) {
            for (o, cq) in out.iter_mut().zip(c) {
                *o += cq * sj;
            }
        }
    }
    Ok(out)
}

/// One row of the expansion check: worst relative error between the
/// Picard iterate and the signature expansion over all knot times.
#[derive(Debug, Clone, PartialEq)]
pub struct BatteryRow {
    pub case: usize,
    pub alpha: f64,
    pub e: usize,
    pub d: usize,
    pub n_knots: usize,
    pub iterate: usize,
    pub max_rel_err: f64,
}

/// Settings of the built-in verification battery.
#[derive(Debug, Clone)]
pub struct BatteryConfig {
    pub seed: u64,
    pub cases_per_alpha: usize,
    pub alphas: Vec<f64>,
    pub max_iterate: usize,
    pub grid_n: usize,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        Self {
            seed: 20,
            cases_per_alpha: 6,
            alphas: vec![0.5, 0.8, 1.0],
            max_iterate: 4,
            grid_n: 2048,
        }
    }
}

/// Compares Picard iterates with the expansion in fractional-signature
/// coefficients on random vector fields (`e, d ≤ 3`, entries in `[-1, 1]`)
/// and random paths (at most 4 knots), at every knot time. The grid is
/// rounded up to the next size aligned with the path's segments.
pub fn verification_battery(config: &BatteryConfig) -> Result<Vec<BatteryRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut cases = Vec::new();
    for &alpha in &config.alphas {
        for _ in 0..config.cases_per_alpha {
            let e = rng.gen_range(1..=3);
            let d = rng.gen_range(1..=3);
            let n = rng.gen_range(2..=4);
            let field = LinearVectorField::random(e, d, &mut rng)?;
            let rows = (0..n).map(|_| (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect()).collect();
            let path = PiecewiseLinearPath::new(rows)?;
            let y0: Vec<f64> = (0..e).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            cases.push((cases.len(), alpha, field, path, y0));
        }
    }
    let per_case: Vec<Vec<BatteryRow>> = cases
        .par_iter()
        .map(|(case, alpha, field, path, y0)| {
            let al = Alpha::new(*alpha)?;
            let grid_n = aligned_cells(path.n_segments(), config.grid_n);
            check_problem(field, path, y0, al)?;
            // one operator for both sides of the comparison
            let grid = ProductGrid::new(*alpha, path.n_segments(), grid_n)?;
            let prefix = sweep(&grid, path, config.max_iterate.max(1), false);
            let picard = iterate(&sweep_on(field, path, y0, grid), path, config.max_iterate);
            (1..=config.max_iterate)
                .map(|it| {
                    let coeffs = expansion_coefficients(field, y0, it)?;
                    let mut worst: f64 = 0.0;
                    for knot in 0..path.n_knots() {
                        let node = picard.knot_node(knot);
                        let expansion = evaluate_expansion(&coeffs, &prefix.signature_at(node))?;
                        let got = picard.value(it, node);
                        let scale = max_abs(&expansion).max(f64::MIN_POSITIVE);
                        worst = worst.max(max_abs_diff(got, &expansion) / scale);
                    }
                    Ok(BatteryRow {
                        case: *case,
                        alpha: *alpha,
                        e: field.e,
                        d: field.d,
                        n_knots: path.n_knots(),
                        iterate: it,
                        max_rel_err: worst,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(per_case.into_iter().flatten().collect())
}

/// `|Y^n(1) - e|` for `Y' = Y`, `Y_0 = 1` driven by `X_t = t` with α = 1.
pub fn scalar_exp_error(n_iter: usize, grid_n: usize) -> Result<f64> {
    let field = LinearVectorField::new(1, 1, vec![1.0])?;
    let path = PiecewiseLinearPath::new(vec![vec![0.0], vec![1.0]])?;
    let it = picard_iterates(&field, &path, &[1.0], Alpha::new(1.0)?, n_iter, grid_n)?;
    Ok((it.endpoint(n_iter)[0] - std::f64::consts::E).abs())
}
