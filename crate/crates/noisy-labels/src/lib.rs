//! Binary classification when training labels carry class-conditional random
//! noise.
//!
//! The library estimates the posterior of the observed (noisy) label, derives
//! the unknown flip rates from its minimum over the sample, converts the
//! posterior and rates into per-example importance weights, and trains
//! weighted empirical-risk-minimization classifiers that target the clean
//! distribution. An experiment harness reproduces the synthetic and
//! benchmark protocols at desk scale, and a companion CLI crate drives
//! everything from the command line.
//!
//! Modules:
//! - [`data`]: datasets, synthetic generation, label corruption, splits, CSV.
//! - [`kernels`]: Gaussian kernel, Gram matrices, bandwidth rules.
//! - [`density`]: noisy-posterior estimation (KDE + Bayes, KLIEP, LSIF).
//! - [`rates`]: noise-rate estimation from the posterior minimum, with a
//!   quantile variant and a cross-validation baseline.
//! - [`learn`]: importance weights, surrogate losses, weighted-ERM trainers
//!   and the unbiased / label-dependent baselines.
//! - [`harness`]: seeded experiment pipelines and result tables.

pub mod data;
pub mod density;
pub mod error;
pub mod harness;
pub mod kernels;
pub mod learn;
pub mod matrix;
pub mod rates;

pub use data::{
    corrupt_labels, generate_synthetic, load_csv, save_csv, split, Label, LabeledDataset,
    NoisePair, SeedStream,
};
pub use error::{Error, Result};
