//! Multi-indexes and the dense truncated coefficient container shared by all
//! three signature flavours.
//!
//! Level `k` of a [`TruncatedSignature`] holds `d^k` coefficients in
//! lexicographic word order, so the word `(i_1, …, i_k)` (channels counted
//! from 1) sits at offset `Σ_j (i_j - 1)·d^(k-j)`.

use std::fmt;

use crate::error::{Error, Result};

/// A multi-index `(i_1, …, i_k)` with channels counted from 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<usize>);

impl Word {
    /// The empty word (level 0).
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// Builds a word, checking every channel lies in `1..=dim`.
    pub fn new(channels: Vec<usize>, dim: usize) -> Result<Self> {
        if let Some(&bad) = channels.iter().find(|&&c| c == 0 || c > dim) {
            return Err(Error::domain(format!("channel {bad} outside 1..={dim}")));
        }
        Ok(Word(channels))
    }

    pub fn channels(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Canonical CSV column name, `s_<i1>_<i2>_…`.
    pub fn column_name(&self) -> String {
        let mut name = String::from("s");
        for c in &self.0 {
            name.push('_');
            name.push_str(&c.to_string());
        }
        name
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (j, c) in self.0.iter().enumerate() {
            if j > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

fn check_shape(dim: usize, level: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::domain("dimension must be at least 1"));
    }
    if level == 0 {
        return Err(Error::domain("truncation level must be at least 1"));
    }
    Ok(())
}

/// All words of length `1..=level` over `dim` channels: shorter words first,
/// lexicographic within a length.
pub fn enumerate_words(dim: usize, level: usize) -> Result<Vec<Word>> {
    check_shape(dim, level)?;
    let mut out = Vec::with_capacity(feature_count(dim, level));
    for k in 1..=level {
        let count = dim.pow(k as u32);
        for offset in 0..count {
            out.push(word_at(dim, k, offset));
        }
    }
    Ok(out)
}

/// Number of words of length `1..=level`, i.e. `Σ_k dim^k`.
pub fn feature_count(dim: usize, level: usize) -> usize {
    (1..=level).map(|k| dim.pow(k as u32)).sum()
}

/// Inverse of [`word_index`] within one level.
pub fn word_at(dim: usize, level: usize, mut offset: usize) -> Word {
    let mut channels = vec![0; level];
    for slot in channels.iter_mut().rev() {
        *slot = offset % dim + 1;
        offset /= dim;
    }
    Word(channels)
}

/// `(level, offset)` of a word in the dense layout.
pub fn word_index(word: &Word, dim: usize) -> Result<(usize, usize)> {
    let mut offset = 0;
    for &c in word.channels() {
        if c == 0 || c > dim {
            return Err(Error::domain(format!("channel {c} outside 1..={dim}")));
        }
        offset = offset * dim + (c - 1);
    }
    Ok((word.len(), offset))
}

/// Truncated signature: level 0 is the scalar 1, level `k` holds `d^k`
/// coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSignature {
    dim: usize,
    levels: Vec<Vec<f64>>,
}

impl TruncatedSignature {
    /// The unit of the concatenation product: 1 at level 0, zero elsewhere.
    pub fn identity(dim: usize, level: usize) -> Result<Self> {
        check_shape(dim, level)?;
        let levels = (0..=level)
            .map(|k| {
                let mut v = vec![0.0; dim.pow(k as u32)];
                if k == 0 {
                    v[0] = 1.0;
                }
                v
            })
            .collect();
        Ok(Self { dim, levels })
    }

    /// Builds a signature from levels `1..=L`; level 0 is set to 1.
    pub fn from_levels(dim: usize, levels: Vec<Vec<f64>>) -> Result<Self> {
        check_shape(dim, levels.len())?;
        let mut all = Vec::with_capacity(levels.len() + 1);
        all.push(vec![1.0]);
        for (i, lvl) in levels.into_iter().enumerate() {
            let k = i + 1;
            if lvl.len() != dim.pow(k as u32) {
                return Err(Error::domain(format!(
                    "level {k} has {} coefficients, expected {}",
                    lvl.len(),
                    dim.pow(k as u32)
                )));
            }
            all.push(lvl);
        }
        Ok(Self { dim, levels: all })
    }

    pub(crate) fn from_levels_unchecked(dim: usize, levels: Vec<Vec<f64>>) -> Self {
        debug_assert!(levels[0] == [1.0]);
        Self { dim, levels }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Truncation level `L`.
    pub fn level(&self) -> usize {
        self.levels.len() - 1
    }

    /// Coefficients of level `k` in lexicographic order.
    pub fn level_coeffs(&self, k: usize) -> &[f64] {
        &self.levels[k]
    }

    pub(crate) fn level_coeffs_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.levels[k]
    }

    pub fn get(&self, word: &Word) -> Result<f64> {
        let (k, offset) = word_index(word, self.dim)?;
        if k > self.level() {
            return Err(Error::domain(format!(
                "word {word} longer than truncation level {}",
                self.level()
            )));
        }
        Ok(self.levels[k][offset])
    }

    /// Levels `1..=L` concatenated in canonical column order.
    pub fn flatten(&self) -> Vec<f64> {
        self.levels[1..].iter().flatten().copied().collect()
    }

    /// Largest absolute coefficient difference over all levels.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.levels
            .iter()
            .flatten()
            .zip(other.levels.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim || self.level() != other.level() {
            return Err(Error::domain(format!(
                "shape mismatch: (d={}, L={}) vs (d={}, L={})",
                self.dim,
                self.level(),
                other.dim,
                other.level()
            )));
        }
        Ok(())
    }
}

/// Truncated concatenation product `(S₁·S₂)^I = Σ_r S₁^(i₁..i_r) S₂^(i_{r+1}..i_k)`.
pub fn chen_product(left: &TruncatedSignature, right: &TruncatedSignature) -> Result<TruncatedSignature> {
    left.check_compatible(right)?;
    Ok(merge(left, left, right))
}

/// Three-way merge used by the discrete recursion: the full-left term comes
/// from `left_full`, the mixed terms take their prefix factor from
/// `left_mixed`, and the suffix factor and full-right term from `right`.
///
/// With `left_full == left_mixed` this is the concatenation product.
pub(crate) fn merge(
    left_full: &TruncatedSignature,
    left_mixed: &TruncatedSignature,
    right: &TruncatedSignature,
) -> TruncatedSignature {
    let dim = right.dim;
    let depth = right.level();
    let mut levels = Vec::with_capacity(depth + 1);
    levels.push(vec![1.0]);
    for k in 1..=depth {
        let mut out = left_full.levels[k].clone();
        for (o, r) in out.iter_mut().zip(&right.levels[k]) {
            *o += r;
        }
        for r in 1..k {
            let prefixes = &left_mixed.levels[r];
            let suffixes = &right.levels[k - r];
            let stride = suffixes.len();
            for (p, &lv) in prefixes.iter().enumerate() {
                if lv == 0.0 {
                    continue;
                }
                let block = &mut out[p * stride..(p + 1) * stride];
                for (o, &rv) in block.iter_mut().zip(suffixes) {
                    *o += lv * rv;
                }
            }
        }
        levels.push(out);
    }
    TruncatedSignature { dim, levels }
}
