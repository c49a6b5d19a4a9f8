//! Product integration for the Riemann-Liouville operator
//! `(I^α g)(t) = (1/Γ(α)) ∫_0^t (t-s)^(α-1) g(s) ds` on piecewise-linear
//! time domains.
//!
//! Every segment `[i, i+1]` carries its own mesh, graded towards the segment
//! start where integrands pick up `(t-i)^α`-type singularities from the jump
//! in the path derivative. On each cell the smooth factor is replaced by a
//! local Lagrange interpolant (stencil kept inside the segment) and the
//! kernel is integrated against it: exactly via monomial moments for cells
//! adjacent to the target, by Gauss-Legendre where the kernel is smooth.
//!
//! The result is a dense weight matrix mapping node values, split by
//! segment, to values of `I^α` at every node.

use crate::error::{Error, Result};
use crate::specfun::gamma;

/// Highest local interpolation degree.
pub const MAX_DEGREE: usize = 4;
const MAX_GRADING: f64 = 6.0;

/// Cells per segment for a total cell budget of at least `at_least`.
pub fn aligned_cells(n_segments: usize, at_least: usize) -> usize {
    at_least.div_ceil(n_segments.max(1)) * n_segments.max(1)
}

/// Weight matrix of the discrete operator for a fixed `(α, segments, cells)`.
#[derive(Debug, Clone)]
pub struct ProductGrid {
    alpha: f64,
    n_segments: usize,
    per_segment: usize,
    local: Vec<f64>,
    // (n_nodes) × (n_slots), slot = seg * (per_segment + 1) + j
    weights: Vec<f64>,
    // number of leading slots that can be nonzero in each row
    active: Vec<usize>,
}

impl ProductGrid {
    /// Builds the operator on `n_segments` unit segments with `total_cells`
    /// cells in all; `total_cells` must split evenly into at least two cells
    /// per segment.
    pub fn new(alpha: f64, n_segments: usize, total_cells: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::domain(format!("alpha must be positive, got {alpha}")));
        }
        if n_segments == 0 {
            return Err(Error::domain("need at least one segment"));
        }
        if total_cells < 2 * n_segments || !total_cells.is_multiple_of(n_segments) {
            return Err(Error::domain(format!(
                "grid of {total_cells} cells is not aligned to {n_segments} segments \
                 (need a multiple of {n_segments} with at least 2 cells per segment)"
            )));
        }
        let per_segment = total_cells / n_segments;
        let grading = ((MAX_DEGREE as f64 + 1.0) / (1.0 + alpha)).clamp(1.0, MAX_GRADING);
        let local: Vec<f64> = (0..=per_segment)
            .map(|j| (j as f64 / per_segment as f64).powf(grading))
            .collect();
        let mut grid = Self {
            alpha,
            n_segments,
            per_segment,
            local,
            weights: Vec::new(),
            active: Vec::new(),
        };
        grid.build()?;
        Ok(grid)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n_segments(&self) -> usize {
        self.n_segments
    }

    pub fn cells_per_segment(&self) -> usize {
        self.per_segment
    }

    pub fn n_nodes(&self) -> usize {
        self.n_segments * self.per_segment + 1
    }

    fn n_slots(&self) -> usize {
        self.n_segments * (self.per_segment + 1)
    }

    /// Global node index of knot `i`.
    pub fn knot_node(&self, i: usize) -> usize {
        i * self.per_segment
    }

    /// Time of node `g`.
    pub fn node_time(&self, g: usize) -> f64 {
        let (seg, j) = self.locate(g);
        seg as f64 + self.local[j]
    }

    pub fn node_times(&self) -> Vec<f64> {
        (0..self.n_nodes()).map(|g| self.node_time(g)).collect()
    }

    // node g as (segment, local index), knots belonging to the segment they end
    fn locate(&self, g: usize) -> (usize, usize) {
        if g == 0 {
            return (0, 0);
        }
        let seg = (g - 1) / self.per_segment;
        (seg, g - seg * self.per_segment)
    }

    fn slot_node(&self, slot: usize) -> usize {
        let seg = slot / (self.per_segment + 1);
        seg * self.per_segment + slot % (self.per_segment + 1)
    }

    fn degree(&self) -> usize {
        MAX_DEGREE.min(self.per_segment)
    }

    fn stencil_start(&self, cell: usize) -> usize {
        let p = self.degree();
        cell.saturating_sub(p / 2).min(self.per_segment - p)
    }

    fn build(&mut self) -> Result<()> {
        let p = self.degree();
        let m_cells = self.per_segment;
        let alpha = self.alpha;
        let inv_gamma = 1.0 / gamma(alpha)?;
        let rules: Vec<GaussRule> = GL_SIZES.iter().map(|&n| GaussRule::new(n)).collect();

        // per-cell geometry, shared by every segment
        let cells: Vec<CellGeometry> = (0..m_cells)
            .map(|c| {
                let width = self.local[c + 1] - self.local[c];
                let start = self.stencil_start(c);
                let xs: Vec<f64> = (0..=p)
                    .map(|l| (self.local[start + l] - self.local[c]) / width)
                    .collect();
                let monomials = lagrange_monomials(&xs);
                let at_nodes = rules
                    .iter()
                    .map(|rule| {
                        rule.nodes
                            .iter()
                            .map(|&x| (0..=p).map(|l| lagrange_eval(&xs, l, x)).collect())
                            .collect()
                    })
                    .collect();
                CellGeometry {
                    width,
                    width_pow: width.powf(alpha),
                    start,
                    monomials,
                    at_nodes,
                }
            })
            .collect();

        let n_nodes = self.n_nodes();
        let n_slots = self.n_slots();
        let mut weights = vec![0.0; n_nodes * n_slots];
        let mut active = vec![0; n_nodes];
        let mut kern = vec![0.0; p + 1];
        for g in 1..n_nodes {
            let (seg_m, j_m) = self.locate(g);
            let t_local = self.local[j_m];
            let row = &mut weights[g * n_slots..(g + 1) * n_slots];
            for seg in 0..=seg_m {
                let n_cells = if seg == seg_m { j_m } else { m_cells };
                let base = seg * (m_cells + 1);
                for (c, cell) in cells.iter().enumerate().take(n_cells) {
                    let right = self.local[c + 1];
                    let dist = if seg == seg_m {
                        t_local - right
                    } else {
                        ((seg_m - seg) as f64 - right) + t_local
                    };
                    let d = dist / cell.width;
                    cell_kernel_integrals(alpha, d, cell, &rules, &mut kern);
                    let scale = cell.width_pow * inv_gamma;
                    for (l, k) in kern.iter().enumerate() {
                        row[base + cell.start + l] += scale * k;
                    }
                }
            }
            // stencils only move right, so the last cell reaches furthest
            active[g] = seg_m * (m_cells + 1) + cells[j_m - 1].start + p + 1;
        }
        self.weights = weights;
        self.active = active;
        Ok(())
    }

    /// Applies `I^α` to a piecewise-defined integrand `F(s)·c_seg(s)` for
    /// several piecewise-constant factors at once.
    ///
    /// `values` holds `F` at every node; `factors[seg * n_factors + i]` is the
    /// constant value of factor `i` on segment `seg`. Row `g` of the output
    /// (`n_factors` entries) is the integral up to node `g`, for every node in
    /// `targets`.
    pub fn apply(
        &self,
        values: &[f64],
        factors: &[f64],
        n_factors: usize,
        targets: &[usize],
    ) -> Vec<f64> {
        debug_assert_eq!(values.len(), self.n_nodes());
        debug_assert_eq!(factors.len(), self.n_segments * n_factors);
        let stride = self.per_segment + 1;
        let slot_values: Vec<f64> = (0..self.n_slots()).map(|s| values[self.slot_node(s)]).collect();
        let mut out = vec![0.0; targets.len() * n_factors];
        let mut per_seg = vec![0.0; self.n_segments];
        for (t, &g) in targets.iter().enumerate() {
            let n_slots = self.n_slots();
            let row = &self.weights[g * n_slots..g * n_slots + self.active[g]];
            per_seg.iter_mut().for_each(|v| *v = 0.0);
            for (seg, (wchunk, vchunk)) in row.chunks(stride).zip(slot_values.chunks(stride)).enumerate() {
                per_seg[seg] = wchunk.iter().zip(vchunk).map(|(w, v)| w * v).sum();
            }
            let dst = &mut out[t * n_factors..(t + 1) * n_factors];
            for (seg, &acc) in per_seg.iter().enumerate() {
                if acc == 0.0 {
                    continue;
                }
                for (o, f) in dst.iter_mut().zip(&factors[seg * n_factors..(seg + 1) * n_factors]) {
                    *o += acc * f;
                }
            }
        }
        out
    }

    /// Applies `I^α` to a vector-valued integrand that may take different
    /// values on either side of a knot. `value_at(seg, node, out)` fills the
    /// integrand at `node` as seen from segment `seg`. Returns the integral
    /// at every node, `components` values per node.
    pub(crate) fn apply_per_segment<F>(&self, components: usize, mut value_at: F) -> Vec<f64>
    where
        F: FnMut(usize, usize, &mut [f64]),
    {
        let stride = self.per_segment + 1;
        let n_slots = self.n_slots();
        let mut slot_values = vec![0.0; n_slots * components];
        for slot in 0..n_slots {
            let seg = slot / stride;
            value_at(
                seg,
                self.slot_node(slot),
                &mut slot_values[slot * components..(slot + 1) * components],
            );
        }
        let n_nodes = self.n_nodes();
        let mut out = vec![0.0; n_nodes * components];
        for g in 1..n_nodes {
            let row = &self.weights[g * n_slots..g * n_slots + self.active[g]];
            let dst = &mut out[g * components..(g + 1) * components];
            for (slot, &w) in row.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let src = &slot_values[slot * components..(slot + 1) * components];
                for (o, v) in dst.iter_mut().zip(src) {
                    *o += w * v;
                }
            }
        }
        out
    }
}

struct CellGeometry {
    width: f64,
    width_pow: f64,
    start: usize,
    // monomials[l][q]: coefficient of x^q in the l-th Lagrange basis polynomial
    monomials: Vec<Vec<f64>>,
    // at_nodes[rule][point][l]
    at_nodes: Vec<Vec<Vec<f64>>>,
}

const GL_SIZES: [usize; 4] = [16, 10, 6, 4];

fn rule_for(d: f64) -> usize {
    if d <= 4.0 {
        0
    } else if d <= 20.0 {
        1
    } else if d <= 100.0 {
        2
    } else {
        3
    }
}

/// `kern[l] = ∫_0^1 (d + 1 - x)^(α-1) ℓ_l(x) dx`, where `d` is the gap
/// between the cell's right end and the target, in cell widths.
fn cell_kernel_integrals(alpha: f64, d: f64, cell: &CellGeometry, rules: &[GaussRule], kern: &mut [f64]) {
    if d <= 1.0 {
        let moments = kernel_moments(alpha, d, kern.len());
        for (k, poly) in kern.iter_mut().zip(&cell.monomials) {
            *k = poly.iter().zip(&moments).map(|(c, m)| c * m).sum();
        }
        return;
    }
    let r = rule_for(d);
    let rule = &rules[r];
    kern.iter_mut().for_each(|k| *k = 0.0);
    for ((&x, &wq), basis) in rule.nodes.iter().zip(&rule.weights).zip(&cell.at_nodes[r]) {
        let kv = wq * (d + 1.0 - x).powf(alpha - 1.0);
        for (k, b) in kern.iter_mut().zip(basis) {
            *k += kv * b;
        }
    }
}

/// `μ_q = ∫_0^1 (d + 1 - x)^(α-1) x^q dx` for `q < count`, in closed form.
fn kernel_moments(alpha: f64, d: f64, count: usize) -> Vec<f64> {
    let top = d + 1.0;
    // ∫_d^{d+1} u^(α-1+l) du
    let power_integrals: Vec<f64> = (0..count)
        .map(|l| {
            let e = alpha + l as f64;
            let lower = if d == 0.0 { 0.0 } else { d.powf(e) };
            (top.powf(e) - lower) / e
        })
        .collect();
    (0..count)
        .map(|q| {
            // (top - u)^q = Σ_l C(q,l) top^(q-l) (-u)^l
            let mut binom = 1.0;
            let mut acc = 0.0;
            for (l, pi) in power_integrals.iter().enumerate().take(q + 1) {
                let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * binom * top.powi((q - l) as i32) * pi;
                binom = binom * (q - l) as f64 / (l + 1) as f64;
            }
            acc
        })
        .collect()
}

fn lagrange_eval(xs: &[f64], l: usize, x: f64) -> f64 {
    xs.iter()
        .enumerate()
        .filter(|&(m, _)| m != l)
        .map(|(_, &xm)| (x - xm) / (xs[l] - xm))
        .product()
}

fn lagrange_monomials(xs: &[f64]) -> Vec<Vec<f64>> {
    (0..xs.len())
        .map(|l| {
            let mut coeffs = vec![1.0];
            let mut denom = 1.0;
            for (m, &xm) in xs.iter().enumerate() {
                if m == l {
                    continue;
                }
                denom *= xs[l] - xm;
                let mut next = vec![0.0; coeffs.len() + 1];
                for (q, c) in coeffs.iter().enumerate() {
                    next[q + 1] += c;
                    next[q] -= c * xm;
                }
                coeffs = next;
            }
            coeffs.iter().map(|c| c / denom).collect()
        })
        .collect()
}

/// Gauss-Legendre rule mapped to `[0, 1]`.
pub(crate) struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = 0.5 * (1.0 - x);
            nodes[n - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        Self { nodes, weights }
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
