//! Classical signature of piecewise-linear paths, and a brute-force
//! iterated-sum oracle for checking it.

use crate::error::{Error, Result};
use crate::path::PiecewiseLinearPath;
use crate::words::{chen_product, TruncatedSignature, Word};

/// Signature of one linear segment with increment `delta`: the word
/// `(i_1..i_k)` gets `Π_j δ_{i_j} / k!`.
pub fn segment_signature(delta: &[f64], level: usize) -> Result<TruncatedSignature> {
    let mut sig = TruncatedSignature::identity(delta.len(), level)?;
    for k in 1..=level {
        let (lower, upper) = split_levels(&mut sig, k);
        let inv_k = 1.0 / k as f64;
        for (p, &prev) in lower.iter().enumerate() {
            for (c, &step) in delta.iter().enumerate() {
                upper[p * delta.len() + c] = prev * step * inv_k;
            }
        }
    }
    Ok(sig)
}

fn split_levels(sig: &mut TruncatedSignature, k: usize) -> (Vec<f64>, &mut [f64]) {
    let lower = sig.level_coeffs(k - 1).to_vec();
    (lower, sig.level_coeffs_mut(k))
}

/// Signature of the whole path, folded segment by segment through the
/// concatenation product.
pub fn signature(path: &PiecewiseLinearPath, level: usize) -> Result<TruncatedSignature> {
    let mut acc = TruncatedSignature::identity(path.dim(), level)?;
    for delta in path.increments() {
        acc = chen_product(&acc, &segment_signature(&delta, level)?)?;
    }
    Ok(acc)
}

/// Upper bound on `word length × grid cells` for the brute-force oracle.
pub const BRUTE_FORCE_BUDGET: usize = 500_000_000;

/// Iterated integral of `word` over the whole path as a strictly ordered
/// left Riemann sum on a uniform grid of `grid_n` cells:
/// `Σ_{m_1 < … < m_k} Π_j ΔX^{i_j}_{m_j}`.
///
/// The error is first order in `1/grid_n`; a length-one word telescopes to
/// the exact increment.
pub fn brute_force_iterated_integral(
    path: &PiecewiseLinearPath,
    word: &Word,
    grid_n: usize,
) -> Result<f64> {
    if grid_n < 2 {
        return Err(Error::domain("brute-force grid needs at least 2 cells"));
    }
    let k = word.len();
    if k == 0 {
        return Ok(1.0);
    }
    if let Some(&c) = word.channels().iter().find(|&&c| c == 0 || c > path.dim()) {
        return Err(Error::domain(format!("channel {c} outside 1..={}", path.dim())));
    }
    if k.saturating_mul(grid_n) > BRUTE_FORCE_BUDGET {
        return Err(Error::Budget(format!(
            "word of length {k} on {grid_n} cells exceeds {BRUTE_FORCE_BUDGET}"
        )));
    }
    let end = path.end_time();
    let h = end / grid_n as f64;
    let channels: Vec<usize> = word.channels().iter().map(|c| c - 1).collect();
    // partial[j] = sum over the first j+1 letters of strictly increasing cell tuples
    let mut partial = vec![0.0; k];
    let mut prev = path.evaluate(0.0)?;
    for m in 0..grid_n {
        let t = if m + 1 == grid_n { end } else { (m + 1) as f64 * h };
        let next = path.evaluate(t)?;
        for j in (0..k).rev() {
            let dx = next[channels[j]] - prev[channels[j]];
            let below = if j == 0 { 1.0 } else { partial[j - 1] };
            partial[j] += below * dx;
        }
        prev = next;
    }
    Ok(partial[k - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::enumerate_words;

    fn p(rows: &[&[f64]]) -> PiecewiseLinearPath {
        PiecewiseLinearPath::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn w(c: &[usize]) -> Word {
        Word::new(c.to_vec(), 3).unwrap()
    }

    #[test]
    fn segment_signature_examples() {
        let s = segment_signature(&[1.0], 3).unwrap();
        assert_eq!(s.level_coeffs(1), &[1.0]);
        assert_eq!(s.level_coeffs(2), &[0.5]);
        assert!((s.level_coeffs(3)[0] - 1.0 / 6.0).abs() < 1e-16);
        assert_eq!(
            segment_signature(&[0.0, 0.0], 3).unwrap(),
            TruncatedSignature::identity(2, 3).unwrap()
        );
        let s = segment_signature(&[1.0, 2.0], 2).unwrap();
        assert_eq!(s.level_coeffs(2), &[0.5, 1.0, 1.0, 2.0]);
    }

    #[test]
    fn signature_examples() {
        let s = signature(&p(&[&[0.0], &[1.0], &[2.0]]), 2).unwrap();
        assert_eq!(s.level_coeffs(1), &[2.0]);
        assert_eq!(s.level_coeffs(2), &[2.0]);

        let l = p(&[&[0.0, 0.0], &[1.0, 0.0], &[1.0, 1.0]]);
        let s = signature(&l, 2).unwrap();
        assert_eq!(s.get(&w(&[1, 2])).unwrap(), 1.0);
        assert_eq!(s.get(&w(&[2, 1])).unwrap(), 0.0);

        let q = p(&[&[0.5, 1.0, -2.0], &[1.5, 0.0, 0.0], &[-1.0, 3.0, 1.0]]);
        let s = signature(&q, 1).unwrap();
        assert_eq!(s.level_coeffs(1), q.total_increment().as_slice());
    }

    #[test]
    fn brute_force_examples() {
        let l = p(&[&[0.0, 0.0], &[1.0, 0.0], &[1.0, 1.0]]);
        assert!((brute_force_iterated_integral(&l, &w(&[1]), 2000).unwrap() - 1.0).abs() < 1e-12);
        assert!(brute_force_iterated_integral(&l, &w(&[2, 1]), 2000).unwrap().abs() < 5e-3);
        let line = p(&[&[0.0], &[1.0]]);
        let v = brute_force_iterated_integral(&line, &Word::new(vec![1, 1], 1).unwrap(), 2000).unwrap();
        assert!((v - 0.5).abs() < 1e-3);
    }

    #[test]
    fn brute_force_guards() {
        let line = p(&[&[0.0], &[1.0]]);
        let word = Word::new(vec![1, 1], 1).unwrap();
        assert!(brute_force_iterated_integral(&line, &word, 1).is_err());
        assert!(matches!(
            brute_force_iterated_integral(&line, &word, BRUTE_FORCE_BUDGET),
            Err(Error::Budget(_))
        ));
    }

    #[test]
    fn shuffle_identity_at_level_two() {
        let q = p(&[&[0.0, 1.0, 2.0], &[1.0, -1.0, 0.5], &[0.2, 0.3, 0.4], &[2.0, 2.0, -1.0]]);
        let s = signature(&q, 2).unwrap();
        for i in 1..=3 {
            for j in 1..=3 {
                let lhs = s.get(&w(&[i])).unwrap() * s.get(&w(&[j])).unwrap();
                let rhs = s.get(&w(&[i, j])).unwrap() + s.get(&w(&[j, i])).unwrap();
                assert!((lhs - rhs).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn brute_force_converges_to_signature() {
        let q = p(&[&[0.0, 0.0], &[1.0, 0.5], &[0.0, 1.5], &[-0.5, 1.0]]);
        let s = signature(&q, 3).unwrap();
        for word in enumerate_words(2, 3).unwrap() {
            let exact = s.get(&word).unwrap();
            let coarse = (brute_force_iterated_integral(&q, &word, 300).unwrap() - exact).abs();
            let fine = (brute_force_iterated_integral(&q, &word, 3000).unwrap() - exact).abs();
            assert!(fine < 1e-2, "{word}: {fine}");
            assert!(fine <= coarse + 1e-12, "{word}: {coarse} -> {fine}");
        }
    }

    #[test]
    fn dilation_invariance() {
        let q = p(&[&[0.0, 1.0], &[2.0, -1.0], &[0.5, 0.5]]);
        let s = signature(&q, 4).unwrap();
        for factor in 2..5 {
            let slow = signature(&q.time_dilate(factor).unwrap(), 4).unwrap();
            assert!(s.max_abs_diff(&slow) < 1e-12);
        }
    }

    #[test]
    fn chen_identity_for_concatenation() {
        let a = p(&[&[0.0, 0.0], &[1.0, 2.0], &[0.5, -1.0]]);
        let b = p(&[&[3.0, 3.0], &[2.0, 4.0], &[2.5, 2.5], &[1.0, 1.0]]);
        let whole = signature(&a.concat(&b).unwrap(), 4).unwrap();
        let split = chen_product(&signature(&a, 4).unwrap(), &signature(&b, 4).unwrap()).unwrap();
        assert!(whole.max_abs_diff(&split) < 1e-12);
    }
}
