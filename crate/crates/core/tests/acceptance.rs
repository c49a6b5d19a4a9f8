//! End-to-end acceptance checks. Each test prints one PASS/FAIL line with the
//! worst observed deviation, then asserts.

use std::time::Instant;

use fracsig::caputo::{scalar_exp_error, verification_battery, BatteryConfig};
use fracsig::classical::{brute_force_iterated_integral, signature};
use fracsig::discrete::{base_case, base_case_simplex_oracle, discrete_signature};
use fracsig::fractional::{fractional_signature, linear_closed_form, reparametrization_counterexample};
use fracsig::quadrature::aligned_cells;
use fracsig::specfun::gamma;
use fracsig::words::{enumerate_words, Word};
use fracsig::{Alpha, PiecewiseLinearPath};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(name: &str, pass: bool, detail: String, started: Instant) {
    println!(
        "{} {name}: {detail} ({:.2}s)",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
    assert!(pass, "{name}: {detail}");
}

fn random_path(rng: &mut ChaCha8Rng, n: usize, d: usize) -> PiecewiseLinearPath {
    PiecewiseLinearPath::new((0..n).map(|_| (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect()).collect()).unwrap()
}

fn a(v: f64) -> Alpha {
    Alpha::new(v).unwrap()
}

#[test]
fn linear_segment_closed_form() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for &al in &[0.3, 0.5, 1.0, 1.5] {
        for _ in 0..4 {
            let d = rng.gen_range(1..=3);
            let path = random_path(&mut rng, 2, d);
            let delta = path.segment_slope(0).unwrap();
            let sig = fractional_signature(&path, a(al), 4, 1024).unwrap();
            for word in enumerate_words(d, 4).unwrap() {
                let exact = linear_closed_form(&delta, a(al), 0.0, 1.0, &word).unwrap();
                worst = worst.max((sig.get(&word).unwrap() - exact).abs() / exact.abs());
            }
        }
    }
    let elapsed = t.elapsed().as_secs_f64();
    report(
        "single-segment closed form, grid 1024",
        worst < 1e-6 && elapsed < 10.0,
        format!("max relative error {worst:.2e} (limit 1e-6)"),
        t,
    );
}

#[test]
fn unit_alpha_reductions() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst_disc, mut worst_frac): (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        let n = rng.gen_range(2..=16);
        let d = rng.gen_range(1..=3);
        let level = rng.gen_range(1..=5);
        let path = random_path(&mut rng, n, d);
        let classical = signature(&path, level).unwrap();
        let disc = discrete_signature(&path, a(1.0), level).unwrap();
        let frac = fractional_signature(&path, a(1.0), level, aligned_cells(n - 1, 1024)).unwrap();
        worst_disc = worst_disc.max(disc.max_abs_diff(&classical));
        worst_frac = worst_frac.max(frac.max_abs_diff(&classical));
    }
    let elapsed = t.elapsed().as_secs_f64();
    report(
        "alpha=1 reductions on 100 random paths",
        worst_disc < 1e-12 && worst_frac < 1e-8 && elapsed < 30.0,
        format!("discrete {worst_disc:.2e} (limit 1e-12), fractional {worst_frac:.2e} (limit 1e-8)"),
        t,
    );
}

#[test]
fn translation_and_reparametrization() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_shift: f64 = 0.0;
    for &al in &[0.5, 1.15, 2.0] {
        for _ in 0..5 {
            let n = rng.gen_range(2..=6);
            let path = random_path(&mut rng, n, 3);
            let shift: Vec<f64> = (0..3).map(|_| rng.gen_range(-10.0..=10.0)).collect();
            let moved = path.translate(&shift).unwrap();
            let grid = aligned_cells(n - 1, 256);
            let pairs = [
                (signature(&path, 4).unwrap(), signature(&moved, 4).unwrap()),
                (
                    fractional_signature(&path, a(al), 4, grid).unwrap(),
                    fractional_signature(&moved, a(al), 4, grid).unwrap(),
                ),
                (
                    discrete_signature(&path, a(al), 4).unwrap(),
                    discrete_signature(&moved, a(al), 4).unwrap(),
                ),
            ];
            for (x, y) in &pairs {
                worst_shift = worst_shift.max(x.max_abs_diff(y));
            }
        }
    }
    let mut worst_pair: f64 = 0.0;
    let mut distinct = true;
    for &al in &[0.5, 1.15, 2.0] {
        let (x, y) = reparametrization_counterexample(a(al)).unwrap();
        let g = gamma(1.0 + al).unwrap();
        worst_pair = worst_pair.max((x - 1.0 / g).abs()).max((y - 2f64.powf(al - 1.0) / g).abs());
        distinct &= (x - y).abs() > 1e-3;
    }
    report(
        "translation invariance and reparametrization counterexample",
        worst_shift < 1e-12 && worst_pair < 1e-12 && distinct,
        format!("translation {worst_shift:.2e}, pair {worst_pair:.2e} (limits 1e-12), pairs distinct: {distinct}"),
        t,
    );
}

#[test]
fn discrete_and_fractional_agreement() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_first: f64 = 0.0;
    let mut worst_single: f64 = 0.0;
    for &al in &[0.3, 0.5, 0.8, 1.15, 1.5, 2.0] {
        for _ in 0..5 {
            let n = rng.gen_range(2..=12);
            let d = rng.gen_range(1..=3);
            let path = random_path(&mut rng, n, d);
            let disc = discrete_signature(&path, a(al), 1).unwrap();
            let frac = fractional_signature(&path, a(al), 1, aligned_cells(n - 1, 64)).unwrap();
            worst_first = worst_first.max(disc.max_abs_diff(&frac));

            let seg = random_path(&mut rng, 2, d);
            let disc = discrete_signature(&seg, a(al), 4).unwrap();
            let frac = fractional_signature(&seg, a(al), 4, 1024).unwrap();
            for word in enumerate_words(d, 4).unwrap() {
                let (x, y) = (disc.get(&word).unwrap(), frac.get(&word).unwrap());
                worst_single = worst_single.max((x - y).abs() / y.abs().max(1.0));
            }
        }
    }
    report(
        "discrete vs fractional: first level and single segment",
        worst_first < 1e-10 && worst_single < 1e-10,
        format!("first level {worst_first:.2e}, single segment {worst_single:.2e} (limits 1e-10)"),
        t,
    );
}

#[test]
fn fde_expansion_battery() {
    let t = Instant::now();
    let rows = verification_battery(&BatteryConfig::default()).unwrap();
    let worst = rows.iter().map(|r| r.max_rel_err).fold(0.0, f64::max);
    let exp_err = scalar_exp_error(20, 1024).unwrap();
    let elapsed = t.elapsed().as_secs_f64();
    report(
        "Picard iterates vs signature expansion, grid 2048",
        worst < 1e-4 && exp_err < 1e-6 && elapsed < 120.0,
        format!(
            "{} rows, max relative error {worst:.2e} (limit 1e-4); exp limit error {exp_err:.2e} (limit 1e-6)",
            rows.len()
        ),
        t,
    );
}

#[test]
fn base_case_against_simplex_oracle() {
    let t = Instant::now();
    let grid_n = 2000;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let path = random_path(&mut rng, 5, 3);
    // relative budget of the first-order oracle
    let budget = 1.0 / grid_n as f64;
    let mut worst: f64 = 0.0;
    for &al in &[0.5, 1.15] {
        for seg in [0usize, 2, 3] {
            let b = (seg + 1) as f64;
            for horizon in [b, b + 1.0, b + 2.5] {
                for k in 1..=3 {
                    let word = Word::new((0..k).map(|_| rng.gen_range(1..=3)).collect(), 3).unwrap();
                    let exact = base_case(&path, seg, horizon, &word, a(al)).unwrap();
                    let approx = base_case_simplex_oracle(&path, seg, horizon, &word, a(al), grid_n).unwrap();
                    worst = worst.max((approx - exact).abs() / exact.abs());
                }
            }
        }
    }
    report(
        "unit-interval closed form vs simplex quadrature, grid 2000",
        worst < budget,
        format!("max relative error {worst:.2e} (budget 1/grid = {budget:.1e})"),
        t,
    );
}

#[test]
fn brute_force_equivalence() {
    let t = Instant::now();
    let fixtures = [
        PiecewiseLinearPath::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap(),
        PiecewiseLinearPath::new(vec![vec![0.0], vec![1.0], vec![2.0]]).unwrap(),
        PiecewiseLinearPath::new(vec![
            vec![0.0, 0.0, 1.0],
            vec![1.0, 0.5, 0.0],
            vec![0.5, 2.0, -1.0],
            vec![-1.0, 1.0, 0.5],
        ])
        .unwrap(),
    ];
    let mut worst: f64 = 0.0;
    for path in &fixtures {
        let sig = signature(path, 3).unwrap();
        for word in enumerate_words(path.dim(), 3).unwrap() {
            let brute = brute_force_iterated_integral(path, &word, 2000).unwrap();
            worst = worst.max((brute - sig.get(&word).unwrap()).abs());
        }
    }
    report(
        "classical signature vs nested Riemann sums, grid 2000",
        worst < 5e-3,
        format!("max abs error {worst:.2e} (limit 5e-3)"),
        t,
    );
}
