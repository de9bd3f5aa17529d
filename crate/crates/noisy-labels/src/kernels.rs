//! Gaussian (RBF) kernel, Gram matrices and bandwidth selection.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand::SeedableRng;

use crate::error::{Error, Result};
use crate::matrix::{squared_distance, Matrix};

/// Gaussian kernel `exp(-||x1 - x2||^2 / (2 sigma^2))` with bandwidth sigma.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianKernel {
    width: f64,
}

impl GaussianKernel {
    pub fn new(width: f64) -> Result<Self> {
        if !width.is_finite() || width <= 0.0 {
            return Err(Error::invalid_argument(format!(
                "kernel width must be positive, got {width}"
            )));
        }
        Ok(GaussianKernel { width })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// Kernel value in (0, 1]; equals 1 iff the points coincide.
    pub fn eval(&self, x1: &[f64], x2: &[f64]) -> Result<f64> {
        if x1.len() != x2.len() {
            return Err(Error::invalid_argument(format!(
                "kernel arguments have dimensions {} and {}",
                x1.len(),
                x2.len()
            )));
        }
        Ok(self.eval_sq_dist(squared_distance(x1, x2)))
    }

    fn eval_sq_dist(&self, d2: f64) -> f64 {
        (-d2 / (2.0 * self.width * self.width)).exp()
    }

    /// Gram matrix with entry (i, j) = eval(a_i, b_j).
    pub fn gram(&self, a: &Matrix, b: &Matrix) -> Result<Matrix> {
        if a.cols() != b.cols() {
            return Err(Error::invalid_argument(format!(
                "point sets have dimensions {} and {}",
                a.cols(),
                b.cols()
            )));
        }
        let mut g = Matrix::zeros(a.rows(), b.rows());
        for i in 0..a.rows() {
            let xi = a.row(i);
            for j in 0..b.rows() {
                g.set(i, j, self.eval_sq_dist(squared_distance(xi, b.row(j))));
            }
        }
        Ok(g)
    }
}

/// Bandwidth selection rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WidthRule {
    /// Pooled per-coordinate standard deviation with the population (1/n)
    /// convention: sigma = sqrt(mean over coordinates of the per-coordinate
    /// variance).
    Stddev,
    /// Median pairwise Euclidean distance. Point sets larger than 1000 are
    /// subsampled with the given seed to bound the quadratic cost.
    MedianHeuristic { seed: u64 },
    /// Use the given bandwidth unchanged.
    Fixed(f64),
}

/// Applies a width rule to a point set.
pub fn select_width(points: &Matrix, rule: WidthRule) -> Result<GaussianKernel> {
    match rule {
        WidthRule::Fixed(w) => GaussianKernel::new(w),
        WidthRule::Stddev => {
            require_points(points)?;
            let n = points.rows() as f64;
            let m = points.cols();
            let mut pooled = 0.0;
            for j in 0..m {
                let mean = (0..points.rows()).map(|i| points.get(i, j)).sum::<f64>() / n;
                let var = (0..points.rows())
                    .map(|i| {
                        let d = points.get(i, j) - mean;
                        d * d
                    })
                    .sum::<f64>()
                    / n;
                pooled += var;
            }
            let sigma = (pooled / m as f64).sqrt();
            if sigma <= 0.0 {
                return Err(Error::invalid_argument(
                    "all points identical: standard-deviation width rule is undefined",
                ));
            }
            GaussianKernel::new(sigma)
        }
        WidthRule::MedianHeuristic { seed } => {
            require_points(points)?;
            let sample = subsample_rows(points, 1000, seed);
            let mut dists = Vec::with_capacity(sample.rows() * (sample.rows() - 1) / 2);
            for i in 0..sample.rows() {
                for j in i + 1..sample.rows() {
                    dists.push(squared_distance(sample.row(i), sample.row(j)).sqrt());
                }
            }
            dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let sigma = median_of_sorted(&dists);
            if sigma <= 0.0 {
                return Err(Error::invalid_argument(
                    "all points identical: median-heuristic width rule is undefined",
                ));
            }
            GaussianKernel::new(sigma)
        }
    }
}

fn require_points(points: &Matrix) -> Result<()> {
    if points.rows() < 2 {
        return Err(Error::invalid_argument(
            "data-driven width rules need at least 2 points",
        ));
    }
    Ok(())
}

fn median_of_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn subsample_rows(points: &Matrix, cap: usize, seed: u64) -> Matrix {
    if points.rows() <= cap {
        return points.clone();
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..points.rows()).collect();
    for i in (1..indices.len()).rev() {
        let j = rng.gen_range(0..=i);
        indices.swap(i, j);
    }
    indices.truncate(cap);
    indices.sort_unstable();
    points.select_rows(&indices)
}
