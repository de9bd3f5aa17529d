//! Datasets, synthetic generation, label corruption, splitting, CSV IO.
//!
//! The corruption model flips each label independently: a positive label
//! becomes negative with probability `rho_plus`, a negative label becomes
//! positive with probability `rho_minus`. Features are never touched.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Binary class label in {-1, +1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Plus,
    Minus,
}

impl Label {
    /// +1.0 or -1.0.
    pub fn sign(self) -> f64 {
        match self {
            Label::Plus => 1.0,
            Label::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Label {
        match self {
            Label::Plus => Label::Minus,
            Label::Minus => Label::Plus,
        }
    }

    pub fn is_plus(self) -> bool {
        self == Label::Plus
    }

    /// Parses "1", "+1" or "-1".
    pub fn parse(s: &str) -> Option<Label> {
        match s.trim() {
            "1" | "+1" => Some(Label::Plus),
            "-1" => Some(Label::Minus),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Plus => write!(f, "1"),
            Label::Minus => write!(f, "-1"),
        }
    }
}

/// Feature matrix with index-aligned labels in {-1, +1}.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Matrix,
    labels: Vec<Label>,
}

impl LabeledDataset {
    pub fn new(features: Matrix, labels: Vec<Label>) -> Result<Self> {
        if features.rows() == 0 || features.cols() == 0 {
            return Err(Error::invalid_argument(
                "dataset needs at least one row and one feature column",
            ));
        }
        if features.rows() != labels.len() {
            return Err(Error::invalid_argument(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        Ok(LabeledDataset { features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn point(&self, i: usize) -> &[f64] {
        self.features.row(i)
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    /// Replaces the labels, keeping features untouched.
    pub fn with_labels(&self, labels: Vec<Label>) -> Result<Self> {
        LabeledDataset::new(self.features.clone(), labels)
    }

    /// Indices of the examples carrying the given label.
    pub fn indices_of(&self, label: Label) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == label)
            .map(|(i, _)| i)
            .collect()
    }

    /// Sub-dataset of the listed rows, in order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        LabeledDataset::new(self.features.select_rows(indices), labels)
    }
}

/// Class-conditional flip probabilities, optionally with inversed rates.
///
/// `rho_plus` is the probability that a clean +1 is observed as -1;
/// `rho_minus` the probability that a clean -1 is observed as +1. The
/// inversed rates condition the other way: `pi_plus` = P(Y=-1 | observed +1),
/// `pi_minus` = P(Y=+1 | observed -1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisePair {
    rho_plus: f64,
    rho_minus: f64,
    inversed: Option<(f64, f64)>,
}

impl NoisePair {
    pub fn new(rho_plus: f64, rho_minus: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rho_plus) || !(0.0..1.0).contains(&rho_minus) {
            return Err(Error::invalid_argument(format!(
                "noise rates must lie in [0, 1): got ({rho_plus}, {rho_minus})"
            )));
        }
        if rho_plus + rho_minus >= 1.0 {
            return Err(Error::invalid_argument(format!(
                "noise rates must satisfy rho_plus + rho_minus < 1: got ({rho_plus}, {rho_minus})"
            )));
        }
        Ok(NoisePair {
            rho_plus,
            rho_minus,
            inversed: None,
        })
    }

    /// Attaches inversed rates (pi_plus, pi_minus) with pi_plus + pi_minus <= 1.
    pub fn with_inversed(mut self, pi_plus: f64, pi_minus: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&pi_plus)
            || !(0.0..=1.0).contains(&pi_minus)
            || pi_plus + pi_minus > 1.0
        {
            return Err(Error::invalid_argument(format!(
                "inversed rates must be nonnegative and sum to at most 1: got ({pi_plus}, {pi_minus})"
            )));
        }
        self.inversed = Some((pi_plus, pi_minus));
        Ok(self)
    }

    pub fn rho_plus(&self) -> f64 {
        self.rho_plus
    }

    pub fn rho_minus(&self) -> f64 {
        self.rho_minus
    }

    pub fn sum(&self) -> f64 {
        self.rho_plus + self.rho_minus
    }

    /// The flip probability of the given clean label.
    pub fn rho_of(&self, label: Label) -> f64 {
        match label {
            Label::Plus => self.rho_plus,
            Label::Minus => self.rho_minus,
        }
    }

    /// `rho_{-label}`: the rate associated with the opposite class of an
    /// observed label, as it appears in the reweighting formula.
    pub fn rho_opposite(&self, observed: Label) -> f64 {
        match observed {
            Label::Plus => self.rho_minus,
            Label::Minus => self.rho_plus,
        }
    }

    pub fn inversed(&self) -> Option<(f64, f64)> {
        self.inversed
    }
}

/// Master seed plus deterministic stream derivation per (repetition, stage).
///
/// Identical `(master, repetition, stage)` always yields a bit-identical
/// generator, so every randomized pipeline stage can be reproduced in
/// isolation.
#[derive(Debug, Clone, Copy)]
pub struct SeedStream {
    master: u64,
}

impl SeedStream {
    pub fn new(master: u64) -> Self {
        SeedStream { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// Generator for the given (repetition, stage) pair.
    pub fn rng(&self, repetition: u64, stage: &str) -> ChaCha12Rng {
        let stage_hash = fnv1a(stage.as_bytes());
        let mut seed = [0u8; 32];
        seed[0..8].copy_from_slice(&self.master.to_le_bytes());
        seed[8..16].copy_from_slice(&repetition.to_le_bytes());
        seed[16..24].copy_from_slice(&stage_hash.to_le_bytes());
        seed[24..32]
            .copy_from_slice(&splitmix64(self.master ^ repetition ^ stage_hash).to_le_bytes());
        ChaCha12Rng::from_seed(seed)
    }

    /// A 64-bit sub-seed for APIs that take a plain seed.
    pub fn derive(&self, repetition: u64, stage: &str) -> u64 {
        splitmix64(self.master ^ splitmix64(repetition) ^ fnv1a(stage.as_bytes()))
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Clean posterior of the synthetic generator: 1 inside the positive
/// half-cube (coordinate sum >= m/2, ties positive), 0 outside.
pub fn synthetic_posterior_plus(x: &[f64]) -> f64 {
    let half = x.len() as f64 / 2.0;
    if x.iter().sum::<f64>() >= half {
        1.0
    } else {
        0.0
    }
}

/// Draws `n` points uniformly from the unit cube `[0,1]^m` and labels them by
/// the hyperplane through the cube center: +1 iff the coordinate sum is at
/// least m/2. The symmetry of the uniform law makes the classes balanced in
/// distribution.
pub fn generate_synthetic(n: usize, m: usize, rng: &mut ChaCha12Rng) -> Result<LabeledDataset> {
    if n < 2 {
        return Err(Error::invalid_argument("n must be at least 2"));
    }
    if m == 0 {
        return Err(Error::invalid_argument("m must be at least 1"));
    }
    let mut data = Vec::with_capacity(n * m);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let start = data.len();
        for _ in 0..m {
            data.push(rng.gen::<f64>());
        }
        let label = if synthetic_posterior_plus(&data[start..]) > 0.5 {
            Label::Plus
        } else {
            Label::Minus
        };
        labels.push(label);
    }
    LabeledDataset::new(Matrix::from_vec(n, m, data)?, labels)
}

/// Flips each label independently according to the noise pair. Features are
/// returned unchanged.
pub fn corrupt_labels(
    data: &LabeledDataset,
    noise: &NoisePair,
    rng: &mut ChaCha12Rng,
) -> LabeledDataset {
    let labels = data
        .labels()
        .iter()
        .map(|&y| {
            let flip: f64 = rng.gen();
            if flip < noise.rho_of(y) {
                y.flip()
            } else {
                y
            }
        })
        .collect();
    // Unwrap is fine: lengths are preserved.
    data.with_labels(labels).expect("label count preserved")
}

/// Random disjoint partition with `round(train_frac * n)` training examples.
pub fn split(
    data: &LabeledDataset,
    train_frac: f64,
    rng: &mut ChaCha12Rng,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(0.0..1.0).contains(&train_frac) || train_frac == 0.0 {
        return Err(Error::invalid_argument(format!(
            "train fraction must lie in (0, 1): got {train_frac}"
        )));
    }
    let n = data.len();
    let n_train = (train_frac * n as f64).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::invalid_argument(format!(
            "split of {n} examples at fraction {train_frac} leaves one side empty"
        )));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    // Fisher-Yates with draws from the stage generator.
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        indices.swap(i, j);
    }
    let train = data.subset(&indices[..n_train])?;
    let test = data.subset(&indices[n_train..])?;
    Ok((train, test))
}

/// Writes the dataset as comma-separated rows: m feature columns followed by
/// the label (1 or -1). Floats use the shortest representation that
/// round-trips, so save -> load reproduces every entry. LF line endings and a
/// trailing newline.
pub fn save_csv(data: &LabeledDataset, path: impl AsRef<Path>, header: bool) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    if header {
        let names: Vec<String> = (1..=data.dim()).map(|j| format!("x{j}")).collect();
        writeln!(w, "{},label", names.join(","))?;
    }
    for i in 0..data.len() {
        let row: Vec<String> = data.point(i).iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{},{}", row.join(","), data.label(i))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a dataset written by [`save_csv`]. Every row must have the same
/// number of feature columns and end with a label in {1, +1, -1}. Errors name
/// the offending 1-based line.
pub fn load_csv(path: impl AsRef<Path>, header: bool) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    let reader = BufReader::new(file);
    let mut features: Vec<f64> = Vec::new();
    let mut labels = Vec::new();
    let mut cols: Option<usize> = None;
    let skip = usize::from(header);
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if idx < skip || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 2 {
            return Err(Error::Parse {
                line: line_no,
                message: "expected at least one feature column and a label".into(),
            });
        }
        let m = fields.len() - 1;
        match cols {
            None => cols = Some(m),
            Some(c) if c != m => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("row has {m} feature columns, expected {c}"),
                });
            }
            _ => {}
        }
        for field in &fields[..m] {
            let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("cannot parse feature value {field:?}"),
            })?;
            features.push(v);
        }
        let label = Label::parse(fields[m]).ok_or_else(|| Error::Parse {
            line: line_no,
            message: format!("label must be 1 or -1, got {:?}", fields[m]),
        })?;
        labels.push(label);
    }
    let n = labels.len();
    let m = cols.ok_or_else(|| Error::Parse {
        line: 0,
        message: format!("{}: no data rows", path.display()),
    })?;
    LabeledDataset::new(Matrix::from_vec(n, m, features)?, labels)
}
