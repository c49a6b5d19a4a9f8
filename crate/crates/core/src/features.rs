//! Digit classification features: each 28×28 image becomes the 3-D path
//! through `(i div 28, i mod 28, pixel_i)`, `i = 0..783`, and its truncated
//! discrete fractional signature is the feature vector.

use std::env;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::discrete::{discrete_signature_with, DiscreteOptions};
use crate::error::{Error, Result};
use crate::fractional::Alpha;
use crate::idx::{self, PIXELS, SIDE};
use crate::path::PiecewiseLinearPath;
use crate::words::{enumerate_words, feature_count};

/// Environment variable naming the directory that holds the IDX files.
pub const DATA_DIR_ENV: &str = "FRACSIG_DATA_DIR";

/// Dimension of the embedded digit paths.
pub const EMBED_DIM: usize = 3;

/// Default ceiling on the truncation level; level 7 already has 3279 columns.
pub const DEFAULT_MAX_LEVEL: usize = 7;

/// One 28×28 grayscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitImage(Vec<u8>);

impl DigitImage {
    pub fn new(pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != PIXELS {
            return Err(Error::Data(format!("image has {} pixels, expected {PIXELS}", pixels.len())));
        }
        Ok(Self(pixels))
    }

    pub fn pixels(&self) -> &[u8] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledDigit {
    pub image: DigitImage,
    pub label: u8,
}

/// Reads an image file and its label file.
pub fn load_idx(images_file: &Path, labels_file: &Path) -> Result<Vec<LabeledDigit>> {
    let images = idx::parse_images(&idx::read(images_file)?)?;
    let labels = idx::parse_labels(&idx::read(labels_file)?)?;
    if images.len() != labels.len() {
        return Err(Error::Format {
            offset: 4,
            message: format!(
                "{} holds {} images but {} holds {} labels",
                images_file.display(),
                images.len(),
                labels_file.display(),
                labels.len()
            ),
        });
    }
    Ok(images
        .into_iter()
        .zip(labels)
        .map(|(pixels, label)| LabeledDigit {
            image: DigitImage(pixels),
            label,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    /// Standard MNIST file names `(images, labels)`.
    pub fn file_names(self) -> (&'static str, &'static str) {
        match self {
            Split::Train => ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
            Split::Test => ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
        }
    }
}

/// Dataset directory: `explicit` if given, else `$FRACSIG_DATA_DIR`, else `data`.
pub fn data_dir(explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| env::var_os(DATA_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("data"))
}

pub fn load_split(dir: &Path, split: Split) -> Result<Vec<LabeledDigit>> {
    let (images, labels) = split.file_names();
    load_idx(&dir.join(images), &dir.join(labels))
}

/// Knot `i` is `(i div 28, i mod 28, pixel_i)`, with raw pixel values.
pub fn embed_digit(image: &DigitImage) -> PiecewiseLinearPath {
    let knots = image
        .0
        .iter()
        .enumerate()
        .flat_map(|(i, &px)| [(i / SIDE) as f64, (i % SIDE) as f64, px as f64])
        .collect();
    PiecewiseLinearPath::from_flat(EMBED_DIM, knots).expect("784 finite knots")
}

/// Samples × flattened signature words, with the sample labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    level: usize,
    labels: Vec<u8>,
    // row-major
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(level: usize, labels: Vec<u8>, data: Vec<f64>) -> Result<Self> {
        let cols = feature_count(EMBED_DIM, level);
        if data.len() != labels.len() * cols {
            return Err(Error::domain(format!(
                "{} values do not fill {} rows of {cols} columns",
                data.len(),
                labels.len()
            )));
        }
        Ok(Self { level, labels, data })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_cols(&self) -> usize {
        feature_count(EMBED_DIM, self.level)
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.n_cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n_cols().max(1)).take(self.n_rows())
    }

    /// `s_1, s_2, s_3, s_1_1, …` in canonical word order.
    pub fn column_names(&self) -> Vec<String> {
        enumerate_words(EMBED_DIM, self.level)
            .expect("level validated")
            .iter()
            .map(|w| w.column_name())
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ExtractOptions {
    /// Levels above this are refused.
    pub max_level: usize,
    pub memoize: bool,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self {
            max_level: DEFAULT_MAX_LEVEL,
            memoize: true,
        }
    }
}

/// Discrete fractional signatures of the embedded digits, one row per sample
/// in input order.
pub fn extract_features(dataset: &[LabeledDigit], alpha: Alpha, level: usize) -> Result<FeatureMatrix> {
    extract_features_with(dataset, alpha, level, ExtractOptions::default())
}

pub fn extract_features_with(
    dataset: &[LabeledDigit],
    alpha: Alpha,
    level: usize,
    options: ExtractOptions,
) -> Result<FeatureMatrix> {
    if level == 0 {
        return Err(Error::domain("truncation level must be at least 1"));
    }
    if level > options.max_level {
        return Err(Error::domain(format!(
            "level {level} exceeds the cost guard of {}; raise the limit explicitly",
            options.max_level
        )));
    }
    let discrete = DiscreteOptions {
        memoize: options.memoize,
    };
    let rows: Vec<Vec<f64>> = dataset
        .par_iter()
        .map(|digit| Ok(discrete_signature_with(&embed_digit(&digit.image), alpha, level, discrete)?.flatten()))
        .collect::<Result<_>>()?;
    FeatureMatrix::new(level, dataset.iter().map(|d| d.label).collect(), rows.concat())
}

/// Columns whose standard deviation is at most this fraction of their largest
/// magnitude are treated as constant.
pub const CONSTANT_COLUMN_TOL: f64 = 1e-12;

/// Per-column statistics fit on a training matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Stats {
    pub means: Vec<f64>,
    /// Population standard deviations; a zero entry marks a column that is
    /// only centred.
    pub std_devs: Vec<f64>,
}

impl Stats {
    pub fn fit(matrix: &FeatureMatrix) -> Self {
        let cols = matrix.n_cols();
        let n = matrix.n_rows() as f64;
        let mut means = vec![0.0; cols];
        let mut std_devs = vec![0.0; cols];
        if matrix.n_rows() == 0 {
            return Self { means, std_devs };
        }
        for row in matrix.rows() {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        for row in matrix.rows() {
            for ((s, v), m) in std_devs.iter_mut().zip(row).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        let mut peaks = vec![0.0f64; cols];
        for row in matrix.rows() {
            for (p, v) in peaks.iter_mut().zip(row) {
                *p = p.max(v.abs());
            }
        }
        for (s, peak) in std_devs.iter_mut().zip(peaks) {
            *s = (*s / n).sqrt();
            // spread at rounding level: the column is constant
            if *s <= CONSTANT_COLUMN_TOL * peak {
                *s = 0.0;
            }
        }
        Self { means, std_devs }
    }

    pub fn apply(&self, matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
        if matrix.n_cols() != self.means.len() {
            return Err(Error::domain(format!(
                "matrix has {} columns, statistics have {}",
                matrix.n_cols(),
                self.means.len()
            )));
        }
        let cols = self.means.len().max(1);
        let data = matrix
            .data
            .chunks(cols)
            .flat_map(|row| {
                row.iter().zip(&self.means).zip(&self.std_devs).map(|((v, m), s)| {
                    let centred = v - m;
                    if *s > 0.0 {
                        centred / s
                    } else {
                        centred
                    }
                })
            })
            .collect();
        Ok(FeatureMatrix {
            level: matrix.level,
            labels: matrix.labels.clone(),
            data,
        })
    }
}

/// Z-scores both matrices with the training mean and population standard
/// deviation.
pub fn standardize(train: &FeatureMatrix, test: &FeatureMatrix) -> Result<(FeatureMatrix, FeatureMatrix, Stats)> {
    if train.n_cols() != test.n_cols() {
        return Err(Error::domain(format!(
            "train has {} columns, test has {}",
            train.n_cols(),
            test.n_cols()
        )));
    }
    let stats = Stats::fit(train);
    Ok((stats.apply(train)?, stats.apply(test)?, stats))
}

/// Location of the statistics written next to `csv`: same stem, `.stats`.
pub fn stats_path(csv: &Path) -> PathBuf {
    csv.with_extension("stats")
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Data(format!("{}: {other:?}", path.display())),
    }
}

fn write_csv<I, R>(path: &Path, header: Option<Vec<String>>, records: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    if let Some(h) = header {
        w.write_record(h).map_err(|e| csv_err(path, e))?;
    }
    for rec in records {
        w.write_record(rec).map_err(|e| csv_err(path, e))?;
    }
    let mut inner = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    inner.flush().map_err(|e| Error::io(path, e))
}

/// Writes `label,s_1,…` rows to `path` and the statistics (means row, then
/// standard deviations row) to [`stats_path`]. Floats use the shortest
/// representation that parses back to the same value.
pub fn export_features(matrix: &FeatureMatrix, stats: &Stats, path: &Path) -> Result<()> {
    if stats.means.len() != matrix.n_cols() || stats.std_devs.len() != matrix.n_cols() {
        return Err(Error::domain("statistics do not match the matrix columns"));
    }
    let mut header = vec!["label".to_string()];
    header.extend(matrix.column_names());
    let rows = matrix
        .labels
        .iter()
        .zip(matrix.rows())
        .map(|(label, row)| std::iter::once(label.to_string()).chain(row.iter().map(f64::to_string)));
    write_csv(path, Some(header), rows)?;
    let stat_rows = [&stats.means, &stats.std_devs].map(|r| r.iter().map(f64::to_string));
    write_csv(&stats_path(path), None, stat_rows)
}

fn parse_field(path: &Path, line: u64, field: &str) -> Result<f64> {
    field
        .parse()
        .map_err(|_| Error::Data(format!("{}: line {line}: {field:?} is not a number", path.display())))
}

/// Reads back a file written by [`export_features`] with its statistics.
pub fn import_features(path: &Path) -> Result<(FeatureMatrix, Stats)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
    let cols = header.len().saturating_sub(1);
    let level = (1..=32)
        .find(|&l| feature_count(EMBED_DIM, l) == cols)
        .ok_or_else(|| Error::Data(format!("{}: {cols} feature columns match no level", path.display())))?;
    let mut labels = Vec::new();
    let mut data = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let label = rec[0]
            .parse()
            .map_err(|_| Error::Data(format!("{}: line {line}: bad label {:?}", path.display(), &rec[0])))?;
        labels.push(label);
        for f in rec.iter().skip(1) {
            data.push(parse_field(path, line, f)?);
        }
    }
    let matrix = FeatureMatrix::new(level, labels, data)?;
    if header.iter().skip(1).ne(matrix.column_names().iter().map(String::as_str)) {
        return Err(Error::Data(format!("{}: columns are not in canonical order", path.display())));
    }
    let spath = stats_path(path);
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(&spath)
        .map_err(|e| csv_err(&spath, e))?;
    let mut stat_rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(&spath, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        stat_rows.push(rec.iter().map(|f| parse_field(&spath, line, f)).collect::<Result<Vec<_>>>()?);
    }
    match <[Vec<f64>; 2]>::try_from(stat_rows) {
        Ok([means, std_devs]) if means.len() == cols && std_devs.len() == cols => Ok((matrix, Stats { means, std_devs })),
        _ => Err(Error::Data(format!(
            "{}: expected two rows of {cols} statistics",
            spath.display()
        ))),
    }
}
