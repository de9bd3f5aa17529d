//! Estimating the noisy-label posterior P(Y_obs | X).
//!
//! Two routes are provided. The kernel-density route fits one normalized
//! Gaussian KDE per observed class and combines them through Bayes' rule with
//! the empirical class prior; it works well in low dimension. The
//! ratio-matching route models the density ratio r(x) = P(x | class) / P(x)
//! directly as a nonnegative kernel expansion, fit either by KLIEP
//! (log-likelihood under a unit-mean constraint) or by the square-distance
//! Bregman objective with a closed-form ridge solve; it is preferred in
//! higher dimension where separate density estimates degrade.
//!
//! All posteriors are clamped to `[epsilon, 1 - epsilon]` and complements sum
//! to one exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::data::{Label, LabeledDataset};
use crate::error::{Error, Result};
use crate::kernels::GaussianKernel;
use crate::matrix::{solve_linear, Matrix};

/// Default clamp floor for estimated posteriors.
pub const DEFAULT_EPSILON: f64 = 1e-3;
/// Default ridge for the square-distance ratio fit.
pub const DEFAULT_RIDGE: f64 = 1e-3;
/// KLIEP convergence tolerance on the objective.
pub const KLIEP_TOL: f64 = 1e-7;
/// KLIEP iteration budget.
pub const KLIEP_MAX_ITER: usize = 5000;
/// At most this many kernel centers; larger numerator samples are subsampled.
pub const CENTER_CAP: usize = 100;

/// Empirical probability of the observed positive class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassPrior {
    p_plus: f64,
}

impl ClassPrior {
    pub fn p_plus(&self) -> f64 {
        self.p_plus
    }

    pub fn p_minus(&self) -> f64 {
        1.0 - self.p_plus
    }

    pub fn of(&self, label: Label) -> f64 {
        match label {
            Label::Plus => self.p_plus(),
            Label::Minus => self.p_minus(),
        }
    }
}

/// Fraction of observed +1 labels.
pub fn class_prior(labels: &[Label]) -> Result<ClassPrior> {
    if labels.is_empty() {
        return Err(Error::invalid_argument("class prior needs at least one label"));
    }
    let plus = labels.iter().filter(|l| l.is_plus()).count() as f64;
    Ok(ClassPrior {
        p_plus: plus / labels.len() as f64,
    })
}

/// Kernel density estimate with the normalized Gaussian density kernel, so
/// evaluations are genuine densities (the per-kernel mass integrates to 1).
#[derive(Debug, Clone, PartialEq)]
pub struct KdeEstimate {
    points: Matrix,
    width: f64,
    log_norm: f64,
}

/// Fits a KDE on the given points with the kernel's bandwidth.
pub fn kde_fit(points: &Matrix, kernel: &GaussianKernel) -> Result<KdeEstimate> {
    if points.rows() == 0 {
        return Err(Error::invalid_argument("KDE needs at least one point"));
    }
    let m = points.cols() as f64;
    let sigma = kernel.width();
    // (2 pi sigma^2)^(-m/2) as a log for stability in higher dimension.
    let log_norm = -0.5 * m * (2.0 * std::f64::consts::PI * sigma * sigma).ln();
    Ok(KdeEstimate {
        points: points.clone(),
        width: sigma,
        log_norm,
    })
}

/// Density value (1/n) sum_i phi_sigma(x - x_i); strictly positive.
pub fn kde_eval(est: &KdeEstimate, x: &[f64]) -> Result<f64> {
    if x.len() != est.points.cols() {
        return Err(Error::invalid_argument(format!(
            "KDE evaluated at dimension {}, fitted with {}",
            x.len(),
            est.points.cols()
        )));
    }
    let inv = 1.0 / (2.0 * est.width * est.width);
    let norm = est.log_norm.exp();
    let sum: f64 = est
        .points
        .iter_rows()
        .map(|p| (-crate::matrix::squared_distance(x, p) * inv).exp())
        .sum();
    Ok(norm * sum / est.points.rows() as f64)
}

impl KdeEstimate {
    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        kde_eval(self, x)
    }
}

/// Nonnegative kernel-expansion model of a density ratio:
/// r(x) = sum_l alpha_l K(x, c_l).
#[derive(Debug, Clone, PartialEq)]
pub struct RatioModel {
    centers: Matrix,
    alphas: Vec<f64>,
    width: f64,
}

impl RatioModel {
    /// Builds a model from explicit parts; coefficients must be nonnegative.
    pub fn new(centers: Matrix, alphas: Vec<f64>, width: f64) -> Result<Self> {
        if alphas.len() != centers.rows() {
            return Err(Error::invalid_argument(format!(
                "{} coefficients for {} centers",
                alphas.len(),
                centers.rows()
            )));
        }
        if alphas.iter().any(|&a| !(a >= 0.0)) {
            return Err(Error::invalid_argument(
                "ratio-model coefficients must be nonnegative",
            ));
        }
        if !(width > 0.0) {
            return Err(Error::invalid_argument("ratio-model width must be positive"));
        }
        Ok(RatioModel {
            centers,
            alphas,
            width,
        })
    }

    pub fn centers(&self) -> &Matrix {
        &self.centers
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.centers.cols() {
            return Err(Error::invalid_argument(format!(
                "ratio model evaluated at dimension {}, fitted with {}",
                x.len(),
                self.centers.cols()
            )));
        }
        let inv = 1.0 / (2.0 * self.width * self.width);
        Ok(self
            .centers
            .iter_rows()
            .zip(&self.alphas)
            .map(|(c, a)| a * (-crate::matrix::squared_distance(x, c) * inv).exp())
            .sum())
    }

    pub fn eval_many(&self, points: &Matrix) -> Result<Vec<f64>> {
        (0..points.rows()).map(|i| self.eval(points.row(i))).collect()
    }
}

/// KLIEP: maximizes the mean log ratio over the numerator sample subject to
/// unit mean over the denominator sample and nonnegative coefficients.
///
/// Projected gradient ascent with step halving; every candidate step is
/// pulled back to the constraint (equality correction, clip at zero,
/// renormalize) before its objective is evaluated, so accepted objectives are
/// monotone. Converged when an accepted step improves the objective by less
/// than `tol`, or when no step of any length improves it.
pub fn kliep_fit(
    numerator: &Matrix,
    denominator: &Matrix,
    centers: &Matrix,
    kernel: &GaussianKernel,
    tol: f64,
    max_iter: usize,
) -> Result<RatioModel> {
    if numerator.rows() == 0 || denominator.rows() == 0 {
        return Err(Error::invalid_argument("KLIEP needs nonempty samples"));
    }
    if centers.rows() == 0 {
        return Err(Error::invalid_argument("KLIEP needs at least one center"));
    }
    let k_nu = kernel.gram(numerator, centers)?;
    let k_de = kernel.gram(denominator, centers)?;
    let n1 = numerator.rows();
    let n2 = denominator.rows();
    let l = centers.rows();

    // b_l = mean denominator kernel activation of center l; strictly positive.
    let mut b = vec![0.0; l];
    for i in 0..n2 {
        for (j, bj) in b.iter_mut().enumerate() {
            *bj += k_de.get(i, j);
        }
    }
    for bj in &mut b {
        *bj /= n2 as f64;
    }
    let b_dot_b: f64 = b.iter().map(|v| v * v).sum();

    let project = |alpha: &mut Vec<f64>| -> bool {
        // Equality correction toward b' alpha = 1, then clip, then rescale.
        let dot: f64 = alpha.iter().zip(&b).map(|(a, bj)| a * bj).sum();
        let corr = (1.0 - dot) / b_dot_b;
        for (a, bj) in alpha.iter_mut().zip(&b) {
            *a = (*a + corr * bj).max(0.0);
        }
        let dot: f64 = alpha.iter().zip(&b).map(|(a, bj)| a * bj).sum();
        if dot <= f64::MIN_POSITIVE {
            return false;
        }
        for a in alpha.iter_mut() {
            *a /= dot;
        }
        true
    };

    let ratios_nu = |alpha: &[f64]| -> Vec<f64> {
        (0..n1)
            .map(|i| {
                alpha
                    .iter()
                    .enumerate()
                    .map(|(j, a)| a * k_nu.get(i, j))
                    .sum()
            })
            .collect()
    };
    let objective = |r_nu: &[f64]| -> f64 {
        r_nu.iter().map(|&r| r.max(1e-300).ln()).sum::<f64>() / n1 as f64
    };

    // Feasible start: uniform coefficients scaled onto the constraint.
    let mut alpha = vec![1.0; l];
    if !project(&mut alpha) {
        return Err(Error::estimation("KLIEP constraint degenerate at start"));
    }
    let mut r_nu = ratios_nu(&alpha);
    let mut obj = objective(&r_nu);
    let mut trace = vec![obj];
    let mut step = 1.0;

    for _ in 0..max_iter {
        // Gradient of the mean log ratio; nonnegative since kernels are.
        let mut grad = vec![0.0; l];
        for (i, &ri) in r_nu.iter().enumerate() {
            let inv_r = 1.0 / ri.max(1e-12);
            for (j, gj) in grad.iter_mut().enumerate() {
                *gj += k_nu.get(i, j) * inv_r;
            }
        }
        for gj in &mut grad {
            *gj /= n1 as f64;
        }

        let mut accepted = false;
        while step >= 1e-14 {
            let mut candidate: Vec<f64> = alpha
                .iter()
                .zip(&grad)
                .map(|(a, g)| a + step * g)
                .collect();
            if !project(&mut candidate) {
                step *= 0.5;
                continue;
            }
            let cand_r_nu = ratios_nu(&candidate);
            let cand_obj = objective(&cand_r_nu);
            if cand_obj > obj {
                let gain = cand_obj - obj;
                alpha = candidate;
                r_nu = cand_r_nu;
                obj = cand_obj;
                trace.push(obj);
                step *= 1.2;
                accepted = true;
                if gain < tol {
                    return Ok(finish_kliep(centers, alpha, kernel, &b));
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // No step length improves the projected objective: stationary.
            return Ok(finish_kliep(centers, alpha, kernel, &b));
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        objective_trace: trace,
    })
}

fn finish_kliep(centers: &Matrix, mut alpha: Vec<f64>, kernel: &GaussianKernel, b: &[f64]) -> RatioModel {
    // Exact unit mean over the denominator sample.
    let dot: f64 = alpha.iter().zip(b).map(|(a, bj)| a * bj).sum();
    for a in alpha.iter_mut() {
        *a /= dot;
    }
    RatioModel {
        centers: centers.clone(),
        alphas: alpha,
        width: kernel.width(),
    }
}

/// Square-distance Bregman ratio fit (least-squares importance fitting):
/// minimizes (1/2n2) sum r(x_de)^2 - (1/n1) sum r(x_nu) + ridge ||alpha||^2
/// in closed form, then clips the coefficients at zero.
pub fn lsif_fit(
    numerator: &Matrix,
    denominator: &Matrix,
    centers: &Matrix,
    kernel: &GaussianKernel,
    ridge: f64,
) -> Result<RatioModel> {
    if numerator.rows() == 0 || denominator.rows() == 0 {
        return Err(Error::invalid_argument("ratio fit needs nonempty samples"));
    }
    if centers.rows() == 0 {
        return Err(Error::invalid_argument("ratio fit needs at least one center"));
    }
    if ridge < 0.0 {
        return Err(Error::invalid_argument("ridge must be nonnegative"));
    }
    let k_nu = kernel.gram(numerator, centers)?;
    let k_de = kernel.gram(denominator, centers)?;
    let n1 = numerator.rows();
    let n2 = denominator.rows();
    let l = centers.rows();

    // H = (1/n2) K_de' K_de, h = (1/n1) K_nu' 1.
    let mut h_mat = Matrix::zeros(l, l);
    for a in 0..l {
        for b in a..l {
            let mut acc = 0.0;
            for i in 0..n2 {
                acc += k_de.get(i, a) * k_de.get(i, b);
            }
            acc /= n2 as f64;
            h_mat.set(a, b, acc);
            h_mat.set(b, a, acc);
        }
    }
    for d in 0..l {
        h_mat.set(d, d, h_mat.get(d, d) + 2.0 * ridge);
    }
    let mut rhs = vec![0.0; l];
    for i in 0..n1 {
        for (j, r) in rhs.iter_mut().enumerate() {
            *r += k_nu.get(i, j);
        }
    }
    for r in &mut rhs {
        *r /= n1 as f64;
    }

    let alpha = solve_linear(h_mat, rhs).map_err(|e| match e {
        Error::Estimation(_) => Error::estimation(
            "square-distance ratio system is singular; use a nonzero ridge",
        ),
        other => other,
    })?;
    let alpha = alpha.into_iter().map(|a| a.max(0.0)).collect();
    Ok(RatioModel {
        centers: centers.clone(),
        alphas: alpha,
        width: kernel.width(),
    })
}

/// Convex generator for the empirical Bregman discrepancy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BregmanF {
    /// f(t) = (t - 1)^2 / 2, the square-distance case.
    Square,
}

impl BregmanF {
    fn value(self, t: f64) -> f64 {
        match self {
            BregmanF::Square => 0.5 * (t - 1.0) * (t - 1.0),
        }
    }

    fn grad(self, t: f64) -> f64 {
        match self {
            BregmanF::Square => t - 1.0,
        }
    }
}

/// Empirical Bregman discrepancy of a ratio model:
/// mean_de[grad f(r) * r] - mean_de[f(r)] - mean_nu[grad f(r)].
pub fn bregman_empirical(
    model: &RatioModel,
    f: BregmanF,
    numerator: &Matrix,
    denominator: &Matrix,
) -> Result<f64> {
    if numerator.rows() == 0 || denominator.rows() == 0 {
        return Err(Error::invalid_argument(
            "Bregman discrepancy needs nonempty samples",
        ));
    }
    let r_de = model.eval_many(denominator)?;
    let r_nu = model.eval_many(numerator)?;
    let n2 = r_de.len() as f64;
    let n1 = r_nu.len() as f64;
    let de_term: f64 = r_de.iter().map(|&r| f.grad(r) * r - f.value(r)).sum::<f64>() / n2;
    let nu_term: f64 = r_nu.iter().map(|&r| f.grad(r)).sum::<f64>() / n1;
    Ok(de_term - nu_term)
}

/// Which estimator produced a posterior.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PosteriorMethod {
    Kde,
    Kliep,
    Lsif,
    /// Values supplied directly (oracle injection); cannot evaluate new points.
    Given,
}

impl PosteriorMethod {
    pub fn name(self) -> &'static str {
        match self {
            PosteriorMethod::Kde => "kde",
            PosteriorMethod::Kliep => "kliep",
            PosteriorMethod::Lsif => "lsif",
            PosteriorMethod::Given => "given",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "kde" => Some(PosteriorMethod::Kde),
            "kliep" => Some(PosteriorMethod::Kliep),
            "lsif" => Some(PosteriorMethod::Lsif),
            "given" => Some(PosteriorMethod::Given),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum PosteriorModel {
    Kde { pos: KdeEstimate, neg: KdeEstimate },
    Ratio { plus: RatioModel, minus: RatioModel },
    Given,
}

/// Estimated noisy posterior: per-training-point values of P(+1 | x_i) plus
/// an evaluator for new points. Values are clamped to `[epsilon, 1-epsilon]`
/// and the negative-class probability is the exact complement.
#[derive(Debug, Clone, PartialEq)]
pub struct CondProbEstimate {
    method: PosteriorMethod,
    prior_plus: f64,
    epsilon: f64,
    train_values: Vec<f64>,
    model: PosteriorModel,
}

impl CondProbEstimate {
    /// Wraps externally supplied per-point posteriors (clamped). Used to
    /// inject exact posteriors in oracle checks; cannot evaluate new points.
    pub fn from_values(values: Vec<f64>, epsilon: f64) -> Result<Self> {
        validate_epsilon(epsilon)?;
        if values.is_empty() {
            return Err(Error::invalid_argument("posterior needs at least one value"));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid_argument(
                "posterior values must lie in [0, 1]",
            ));
        }
        let clamped: Vec<f64> = values
            .iter()
            .map(|&v| clamp_prob(v, epsilon))
            .collect();
        let prior_plus = clamped.iter().sum::<f64>() / clamped.len() as f64;
        Ok(CondProbEstimate {
            method: PosteriorMethod::Given,
            prior_plus,
            epsilon,
            train_values: clamped,
            model: PosteriorModel::Given,
        })
    }

    pub fn method(&self) -> PosteriorMethod {
        self.method
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn prior_plus(&self) -> f64 {
        self.prior_plus
    }

    /// Clamped P(+1 | x_i) on the fitting points.
    pub fn train_values(&self) -> &[f64] {
        &self.train_values
    }

    /// P(+1 | x) at a new point.
    pub fn eval_plus(&self, x: &[f64]) -> Result<f64> {
        match &self.model {
            PosteriorModel::Given => Err(Error::estimation(
                "posterior built from injected values cannot evaluate new points",
            )),
            PosteriorModel::Kde { pos, neg } => {
                let q_plus = pos.eval(x)? * self.prior_plus;
                let q_minus = neg.eval(x)? * (1.0 - self.prior_plus);
                Ok(self.normalize(q_plus, q_minus))
            }
            PosteriorModel::Ratio { plus, minus } => {
                let q_plus = plus.eval(x)? * self.prior_plus;
                let q_minus = minus.eval(x)? * (1.0 - self.prior_plus);
                Ok(self.normalize(q_plus, q_minus))
            }
        }
    }

    /// P(label | x); the exact complement of `eval_plus` for the negative class.
    pub fn eval_label(&self, x: &[f64], label: Label) -> Result<f64> {
        let p = self.eval_plus(x)?;
        Ok(match label {
            Label::Plus => p,
            Label::Minus => 1.0 - p,
        })
    }

    /// P(observed label | x_i) per training point.
    pub fn observed_train(&self, labels: &[Label]) -> Result<Vec<f64>> {
        if labels.len() != self.train_values.len() {
            return Err(Error::invalid_argument(format!(
                "{} labels for {} posterior values",
                labels.len(),
                self.train_values.len()
            )));
        }
        Ok(self
            .train_values
            .iter()
            .zip(labels)
            .map(|(&p, l)| match l {
                Label::Plus => p,
                Label::Minus => 1.0 - p,
            })
            .collect())
    }

    fn normalize(&self, q_plus: f64, q_minus: f64) -> f64 {
        let total = q_plus + q_minus;
        if total < 1e-12 {
            // Evidence underflow far from all support: fall back to the prior.
            clamp_prob(self.prior_plus, self.epsilon)
        } else {
            clamp_prob(q_plus / total, self.epsilon)
        }
    }
}

fn clamp_prob(p: f64, epsilon: f64) -> f64 {
    p.max(epsilon).min(1.0 - epsilon)
}

fn validate_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::invalid_argument(format!(
            "clamp epsilon must lie in (0, 0.5), got {epsilon}"
        )));
    }
    Ok(())
}

/// Class-conditional KDEs combined by Bayes' rule, default clamp.
pub fn cond_prob_kde(train: &LabeledDataset, kernel: &GaussianKernel) -> Result<CondProbEstimate> {
    cond_prob_kde_with(train, kernel, DEFAULT_EPSILON)
}

/// As [`cond_prob_kde`] with an explicit clamp floor.
pub fn cond_prob_kde_with(
    train: &LabeledDataset,
    kernel: &GaussianKernel,
    epsilon: f64,
) -> Result<CondProbEstimate> {
    validate_epsilon(epsilon)?;
    let (pos_idx, neg_idx) = both_classes(train)?;
    let prior = class_prior(train.labels())?;
    let pos = kde_fit(&train.features().select_rows(&pos_idx), kernel)?;
    let neg = kde_fit(&train.features().select_rows(&neg_idx), kernel)?;
    let est = CondProbEstimate {
        method: PosteriorMethod::Kde,
        prior_plus: prior.p_plus(),
        epsilon,
        train_values: Vec::new(),
        model: PosteriorModel::Kde { pos, neg },
    };
    with_train_values(est, train)
}

/// Two density-ratio fits (one per observed class against the pooled sample)
/// normalized into a posterior, default clamp.
pub fn cond_prob_ratio(
    train: &LabeledDataset,
    kernel: &GaussianKernel,
    method: RatioMethod,
    seed: u64,
) -> Result<CondProbEstimate> {
    cond_prob_ratio_with(train, kernel, method, seed, DEFAULT_EPSILON)
}

/// Ratio-matching backend for [`cond_prob_ratio`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatioMethod {
    Kliep,
    Lsif,
}

/// As [`cond_prob_ratio`] with an explicit clamp floor.
pub fn cond_prob_ratio_with(
    train: &LabeledDataset,
    kernel: &GaussianKernel,
    method: RatioMethod,
    seed: u64,
    epsilon: f64,
) -> Result<CondProbEstimate> {
    validate_epsilon(epsilon)?;
    let (pos_idx, neg_idx) = both_classes(train)?;
    let prior = class_prior(train.labels())?;
    let all = train.features();
    let pos_points = all.select_rows(&pos_idx);
    let neg_points = all.select_rows(&neg_idx);
    let fit_one = |nu: &Matrix, sub_seed: u64| -> Result<RatioModel> {
        let centers = pick_centers(nu, sub_seed);
        match method {
            RatioMethod::Kliep => kliep_fit(nu, all, &centers, kernel, KLIEP_TOL, KLIEP_MAX_ITER),
            RatioMethod::Lsif => lsif_fit(nu, all, &centers, kernel, DEFAULT_RIDGE),
        }
    };
    let plus = fit_one(&pos_points, seed)?;
    let minus = fit_one(&neg_points, seed.wrapping_add(1))?;
    let est = CondProbEstimate {
        method: match method {
            RatioMethod::Kliep => PosteriorMethod::Kliep,
            RatioMethod::Lsif => PosteriorMethod::Lsif,
        },
        prior_plus: prior.p_plus(),
        epsilon,
        train_values: Vec::new(),
        model: PosteriorModel::Ratio { plus, minus },
    };
    with_train_values(est, train)
}

fn with_train_values(mut est: CondProbEstimate, train: &LabeledDataset) -> Result<CondProbEstimate> {
    let mut values = Vec::with_capacity(train.len());
    for i in 0..train.len() {
        values.push(est.eval_plus(train.point(i))?);
    }
    est.train_values = values;
    Ok(est)
}

fn both_classes(train: &LabeledDataset) -> Result<(Vec<usize>, Vec<usize>)> {
    let pos = train.indices_of(Label::Plus);
    let neg = train.indices_of(Label::Minus);
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::estimation(
            "posterior estimation needs both observed classes present",
        ));
    }
    Ok((pos, neg))
}

/// All numerator points up to [`CENTER_CAP`], else a seeded uniform subsample.
fn pick_centers(numerator: &Matrix, seed: u64) -> Matrix {
    if numerator.rows() <= CENTER_CAP {
        return numerator.clone();
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..numerator.rows()).collect();
    for i in (1..indices.len()).rev() {
        let j = rng.gen_range(0..=i);
        indices.swap(i, j);
    }
    indices.truncate(CENTER_CAP);
    indices.sort_unstable();
    numerator.select_rows(&indices)
}

// ----------------------------------------------------------------------
// Plain-text serialization of fitted posteriors.
//
// Line-oriented format:
//   posterior v1
//   method <kde|kliep|lsif|given>
//   epsilon <float>
//   prior_plus <float>
//   ... method-specific blocks ...
//   end
// Point blocks are "<name> <rows> <cols>" followed by one comma-separated
// row per line; coefficient blocks are "<name> <len>" followed by one
// comma-separated line.
// ----------------------------------------------------------------------

impl CondProbEstimate {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = File::create(path)?;
        let mut w = BufWriter::new(file);
        writeln!(w, "posterior v1")?;
        writeln!(w, "method {}", self.method.name())?;
        writeln!(w, "epsilon {}", self.epsilon)?;
        writeln!(w, "prior_plus {}", self.prior_plus)?;
        match &self.model {
            PosteriorModel::Kde { pos, neg } => {
                writeln!(w, "width {}", pos.width)?;
                write_points(&mut w, "pos_points", &pos.points)?;
                write_points(&mut w, "neg_points", &neg.points)?;
            }
            PosteriorModel::Ratio { plus, minus } => {
                for (name, model) in [("plus", plus), ("minus", minus)] {
                    writeln!(w, "ratio_{name} {}", model.width)?;
                    write_points(&mut w, &format!("centers_{name}"), &model.centers)?;
                    write_coeffs(&mut w, &format!("alphas_{name}"), &model.alphas)?;
                }
            }
            PosteriorModel::Given => {
                write_coeffs(&mut w, "values", &self.train_values)?;
            }
        }
        if !matches!(self.model, PosteriorModel::Given) {
            write_coeffs(&mut w, "train_values", &self.train_values)?;
        }
        writeln!(w, "end")?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = File::open(path.as_ref())?;
        let mut lines = Lines::new(BufReader::new(file));
        lines.expect_exact("posterior v1")?;
        let method_line = lines.expect_prefix("method ")?;
        let method = PosteriorMethod::parse(method_line.trim())
            .ok_or_else(|| lines.error(format!("unknown method {method_line:?}")))?;
        let epsilon: f64 = lines.parse_value("epsilon ")?;
        let prior_plus: f64 = lines.parse_value("prior_plus ")?;
        let (model, train_values) = match method {
            PosteriorMethod::Kde => {
                let width: f64 = lines.parse_value("width ")?;
                let kernel = GaussianKernel::new(width)
                    .map_err(|e| lines.error(e.to_string()))?;
                let pos = kde_fit(&lines.read_points("pos_points")?, &kernel)
                    .map_err(|e| lines.error(e.to_string()))?;
                let neg = kde_fit(&lines.read_points("neg_points")?, &kernel)
                    .map_err(|e| lines.error(e.to_string()))?;
                let tv = lines.read_coeffs("train_values")?;
                (PosteriorModel::Kde { pos, neg }, tv)
            }
            PosteriorMethod::Kliep | PosteriorMethod::Lsif => {
                let mut models = Vec::new();
                for name in ["plus", "minus"] {
                    let width: f64 = lines.parse_value(&format!("ratio_{name} "))?;
                    let centers = lines.read_points(&format!("centers_{name}"))?;
                    let alphas = lines.read_coeffs(&format!("alphas_{name}"))?;
                    if alphas.len() != centers.rows() {
                        return Err(lines.error("coefficient/center count mismatch"));
                    }
                    models.push(RatioModel {
                        centers,
                        alphas,
                        width,
                    });
                }
                let minus = models.pop().expect("two models");
                let plus = models.pop().expect("two models");
                let tv = lines.read_coeffs("train_values")?;
                (PosteriorModel::Ratio { plus, minus }, tv)
            }
            PosteriorMethod::Given => {
                let tv = lines.read_coeffs("values")?;
                (PosteriorModel::Given, tv)
            }
        };
        lines.expect_exact("end")?;
        validate_epsilon(epsilon)?;
        Ok(CondProbEstimate {
            method,
            prior_plus,
            epsilon,
            train_values,
            model,
        })
    }
}

fn write_points<W: Write>(w: &mut W, name: &str, points: &Matrix) -> Result<()> {
    writeln!(w, "{name} {} {}", points.rows(), points.cols())?;
    for row in points.iter_rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

fn write_coeffs<W: Write>(w: &mut W, name: &str, values: &[f64]) -> Result<()> {
    writeln!(w, "{name} {}", values.len())?;
    let cells: Vec<String> = values.iter().map(|v| format!("{v}")).collect();
    writeln!(w, "{}", cells.join(","))?;
    Ok(())
}

/// Line reader tracking 1-based position for error messages. Shared by the
/// posterior and classifier model loaders.
pub(crate) struct Lines<R: BufRead> {
    reader: R,
    line_no: usize,
}

impl<R: BufRead> Lines<R> {
    pub(crate) fn new(reader: R) -> Self {
        Lines { reader, line_no: 0 }
    }

    pub(crate) fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line_no,
            message: message.into(),
        }
    }

    pub(crate) fn next_line(&mut self) -> Result<String> {
        let mut buf = String::new();
        let n = self.reader.read_line(&mut buf)?;
        if n == 0 {
            return Err(self.error("unexpected end of file"));
        }
        self.line_no += 1;
        Ok(buf.trim_end_matches(['\n', '\r']).to_string())
    }

    pub(crate) fn expect_exact(&mut self, expected: &str) -> Result<()> {
        let line = self.next_line()?;
        if line != expected {
            return Err(self.error(format!("expected {expected:?}, got {line:?}")));
        }
        Ok(())
    }

    pub(crate) fn expect_prefix(&mut self, prefix: &str) -> Result<String> {
        let line = self.next_line()?;
        line.strip_prefix(prefix)
            .map(str::to_string)
            .ok_or_else(|| self.error(format!("expected line starting with {prefix:?}, got {line:?}")))
    }

    pub(crate) fn parse_value<T: std::str::FromStr>(&mut self, prefix: &str) -> Result<T> {
        let rest = self.expect_prefix(prefix)?;
        rest.trim()
            .parse()
            .map_err(|_| self.error(format!("cannot parse value {rest:?}")))
    }

    pub(crate) fn read_points(&mut self, name: &str) -> Result<Matrix> {
        let head = self.expect_prefix(&format!("{name} "))?;
        let mut parts = head.split_whitespace();
        let rows: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| self.error("bad point block header"))?;
        let cols: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| self.error("bad point block header"))?;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let line = self.next_line()?;
            for cell in line.split(',') {
                let v: f64 = cell
                    .trim()
                    .parse()
                    .map_err(|_| self.error(format!("cannot parse number {cell:?}")))?;
                data.push(v);
            }
        }
        Matrix::from_vec(rows, cols, data).map_err(|e| self.error(e.to_string()))
    }

    pub(crate) fn read_coeffs(&mut self, name: &str) -> Result<Vec<f64>> {
        let head = self.expect_prefix(&format!("{name} "))?;
        let len: usize = head
            .trim()
            .parse()
            .map_err(|_| self.error("bad coefficient block header"))?;
        let line = self.next_line()?;
        let values: Result<Vec<f64>> = line
            .split(',')
            .map(|cell| {
                cell.trim()
                    .parse()
                    .map_err(|_| self.error(format!("cannot parse number {cell:?}")))
            })
            .collect();
        let values = values?;
        if values.len() != len {
            return Err(self.error(format!("expected {len} values, got {}", values.len())));
        }
        Ok(values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SeedStream;
    use crate::kernels::{select_width, WidthRule};

    fn rng(seed: u64) -> ChaCha12Rng {
        SeedStream::new(seed).rng(0, "density-test")
    }

    fn uniform_points(n: usize, m: usize, lo: f64, hi: f64, seed: u64) -> Matrix {
        let mut r = rng(seed);
        let data: Vec<f64> = (0..n * m).map(|_| lo + (hi - lo) * r.gen::<f64>()).collect();
        Matrix::from_vec(n, m, data).unwrap()
    }

    fn normal_points(n: usize, m: usize, mean: &[f64], sd: f64, seed: u64) -> Matrix {
        let mut r = rng(seed);
        let mut data = Vec::with_capacity(n * m);
        for _ in 0..n {
            for mj in mean.iter().take(m) {
                data.push(mj + sd * box_muller(&mut r));
            }
        }
        Matrix::from_vec(n, m, data).unwrap()
    }

    fn box_muller(r: &mut ChaCha12Rng) -> f64 {
        let u1: f64 = r.gen::<f64>().max(1e-12);
        let u2: f64 = r.gen();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    #[test]
    fn class_prior_counts() {
        assert_eq!(class_prior(&[Label::Plus; 4]).unwrap().p_plus(), 1.0);
        let mixed = [Label::Plus, Label::Minus, Label::Minus, Label::Plus];
        assert_eq!(class_prior(&mixed).unwrap().p_plus(), 0.5);
        assert!(class_prior(&[]).is_err());
    }

    #[test]
    fn class_prior_binomial_concentration() {
        let mut r = rng(17);
        let labels: Vec<Label> = (0..100_000)
            .map(|_| if r.gen::<f64>() < 0.6 { Label::Plus } else { Label::Minus })
            .collect();
        let p = class_prior(&labels).unwrap().p_plus();
        assert!((p - 0.6).abs() <= 0.01, "{p}");
    }

    #[test]
    fn kde_single_point_density_value() {
        // One point at the origin, sigma 1, 1-D: density at 0 is 1/sqrt(2 pi).
        let pts = Matrix::from_rows(&[vec![0.0]]).unwrap();
        let est = kde_fit(&pts, &GaussianKernel::new(1.0).unwrap()).unwrap();
        let v = est.eval(&[0.0]).unwrap();
        let expected = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert!((v - expected).abs() < 1e-12, "{v} vs {expected}");
    }

    #[test]
    fn kde_integrates_to_one() {
        let pts = uniform_points(25, 1, -1.0, 1.0, 23);
        let est = kde_fit(&pts, &GaussianKernel::new(0.4).unwrap()).unwrap();
        // Trapezoid quadrature over [-8, 8].
        let steps = 16_000usize;
        let h = 16.0 / steps as f64;
        let mut integral = 0.0;
        for k in 0..=steps {
            let x = -8.0 + k as f64 * h;
            let w = if k == 0 || k == steps { 0.5 } else { 1.0 };
            integral += w * est.eval(&[x]).unwrap();
        }
        integral *= h;
        assert!((integral - 1.0).abs() <= 1e-3, "{integral}");
    }

    #[test]
    fn kde_consistent_at_origin_for_standard_normal() {
        // 1e4 standard-normal draws, bandwidth 0.15: the KDE at 0 estimates
        // the N(0, 1 + sigma^2) density at 0, within Monte Carlo error of
        // the N(0,1) value 0.3989.
        let pts = normal_points(10_000, 1, &[0.0], 1.0, 29);
        let est = kde_fit(&pts, &GaussianKernel::new(0.15).unwrap()).unwrap();
        let v = est.eval(&[0.0]).unwrap();
        assert!((v - 0.3989).abs() <= 0.02, "{v}");
    }

    #[test]
    fn kde_rejects_dimension_mismatch() {
        let pts = uniform_points(5, 2, 0.0, 1.0, 31);
        let est = kde_fit(&pts, &GaussianKernel::new(1.0).unwrap()).unwrap();
        assert!(est.eval(&[0.5]).is_err());
    }

    #[test]
    fn cond_prob_kde_symmetric_data_is_half_at_center() {
        // Positives mirrored onto negatives: at the axis of symmetry the
        // class evidence cancels exactly.
        let pos: Vec<Vec<f64>> = vec![vec![0.5], vec![1.0], vec![1.7], vec![0.2]];
        let neg: Vec<Vec<f64>> = pos.iter().map(|p| vec![-p[0]]).collect();
        let mut rows = pos.clone();
        rows.extend(neg);
        let features = Matrix::from_rows(&rows).unwrap();
        let labels: Vec<Label> = std::iter::repeat(Label::Plus)
            .take(4)
            .chain(std::iter::repeat(Label::Minus).take(4))
            .collect();
        let train = LabeledDataset::new(features, labels).unwrap();
        let est = cond_prob_kde(&train, &GaussianKernel::new(0.8).unwrap()).unwrap();
        let p = est.eval_plus(&[0.0]).unwrap();
        assert!((p - 0.5).abs() <= 1e-9, "{p}");
    }

    #[test]
    fn cond_prob_kde_confident_inside_separated_blob() {
        let pos = normal_points(200, 2, &[2.0, 2.0], 0.3, 37);
        let neg = normal_points(200, 2, &[-2.0, -2.0], 0.3, 38);
        let mut rows: Vec<Vec<f64>> = pos.iter_rows().map(<[f64]>::to_vec).collect();
        rows.extend(neg.iter_rows().map(<[f64]>::to_vec));
        let features = Matrix::from_rows(&rows).unwrap();
        let labels: Vec<Label> = std::iter::repeat(Label::Plus)
            .take(200)
            .chain(std::iter::repeat(Label::Minus).take(200))
            .collect();
        let train = LabeledDataset::new(features, labels).unwrap();
        let est = cond_prob_kde(&train, &GaussianKernel::new(0.5).unwrap()).unwrap();
        let p = est.eval_plus(&[2.0, 2.0]).unwrap();
        assert!(p >= 1.0 - DEFAULT_EPSILON - 0.05, "{p}");
    }

    #[test]
    fn cond_prob_kde_requires_both_classes() {
        let features = uniform_points(10, 1, 0.0, 1.0, 41);
        let train = LabeledDataset::new(features, vec![Label::Plus; 10]).unwrap();
        assert!(cond_prob_kde(&train, &GaussianKernel::new(1.0).unwrap()).is_err());
    }

    fn kliep_constraint_residual(model: &RatioModel, de: &Matrix) -> f64 {
        let r = model.eval_many(de).unwrap();
        (r.iter().sum::<f64>() / r.len() as f64 - 1.0).abs()
    }

    #[test]
    fn kliep_identical_samples_give_flat_ratio() {
        let sample = uniform_points(500, 2, 0.0, 1.0, 43);
        let centers = sample.select_rows(&(0..100).collect::<Vec<_>>());
        let kernel = select_width(&sample, WidthRule::MedianHeuristic { seed: 1 }).unwrap();
        let model =
            kliep_fit(&sample, &sample, &centers, &kernel, KLIEP_TOL, KLIEP_MAX_ITER).unwrap();
        assert!(model.alphas().iter().all(|&a| a >= 0.0));
        assert!(kliep_constraint_residual(&model, &sample) <= 1e-6);
        let worst = model
            .eval_many(&sample)
            .unwrap()
            .into_iter()
            .fold(0.0f64, |acc, r| acc.max((r - 1.0).abs()));
        assert!(worst <= 0.2, "max |r - 1| = {worst}");
    }

    #[test]
    fn kliep_ranks_numerator_region_higher() {
        // Numerator supported on the right half of [0,1]: the fitted ratio
        // must be larger there than on the left half.
        let nu = uniform_points(500, 1, 0.5, 1.0, 47);
        let de = uniform_points(500, 1, 0.0, 1.0, 48);
        let centers = nu.select_rows(&(0..100).collect::<Vec<_>>());
        let kernel = GaussianKernel::new(0.2).unwrap();
        let model = kliep_fit(&nu, &de, &centers, &kernel, KLIEP_TOL, KLIEP_MAX_ITER).unwrap();
        let grid = |lo: f64, hi: f64| -> f64 {
            let vals: Vec<f64> = (0..50)
                .map(|k| {
                    let x = lo + (hi - lo) * (k as f64 + 0.5) / 50.0;
                    model.eval(&[x]).unwrap()
                })
                .collect();
            vals.iter().sum::<f64>() / vals.len() as f64
        };
        let left = grid(0.0, 0.5);
        let right = grid(0.5, 1.0);
        assert!(left < right, "left {left}, right {right}");
    }

    #[test]
    fn lsif_identical_samples_near_one() {
        let sample = uniform_points(500, 2, 0.0, 1.0, 53);
        let centers = sample.select_rows(&(0..100).collect::<Vec<_>>());
        let kernel = select_width(&sample, WidthRule::MedianHeuristic { seed: 2 }).unwrap();
        let model = lsif_fit(&sample, &sample, &centers, &kernel, DEFAULT_RIDGE).unwrap();
        let worst = model
            .eval_many(&sample)
            .unwrap()
            .into_iter()
            .fold(0.0f64, |acc, r| acc.max((r - 1.0).abs()));
        assert!(worst <= 0.2, "max |r - 1| = {worst}");
    }

    #[test]
    fn lsif_huge_ridge_shrinks_to_zero() {
        let sample = uniform_points(100, 1, 0.0, 1.0, 59);
        let centers = sample.select_rows(&(0..20).collect::<Vec<_>>());
        let kernel = GaussianKernel::new(0.3).unwrap();
        let model = lsif_fit(&sample, &sample, &centers, &kernel, 1e9).unwrap();
        assert!(model.alphas().iter().all(|&a| a.abs() <= 1e-6));
    }

    #[test]
    fn lsif_improves_on_zero_model() {
        let nu = uniform_points(300, 1, 0.5, 1.0, 61);
        let de = uniform_points(300, 1, 0.0, 1.0, 62);
        let centers = nu.select_rows(&(0..50).collect::<Vec<_>>());
        let kernel = GaussianKernel::new(0.25).unwrap();
        let fitted = lsif_fit(&nu, &de, &centers, &kernel, DEFAULT_RIDGE).unwrap();
        let zero = RatioModel::new(centers.clone(), vec![0.0; 50], kernel.width()).unwrap();
        let fitted_obj = bregman_empirical(&fitted, BregmanF::Square, &nu, &de).unwrap();
        let zero_obj = bregman_empirical(&zero, BregmanF::Square, &nu, &de).unwrap();
        assert!(fitted_obj < zero_obj, "{fitted_obj} vs {zero_obj}");
    }

    #[test]
    fn bregman_zero_at_flat_unit_ratio() {
        // A single coefficient of 1 with an extremely wide kernel makes the
        // model effectively r(x) = 1, where every square-distance term of the
        // empirical discrepancy vanishes.
        let nu = uniform_points(50, 1, 0.0, 1.0, 67);
        let de = uniform_points(50, 1, 0.0, 1.0, 68);
        let centers = Matrix::from_rows(&[vec![0.5]]).unwrap();
        let model = RatioModel::new(centers, vec![1.0], 1e9).unwrap();
        let v = bregman_empirical(&model, BregmanF::Square, &nu, &de).unwrap();
        assert!(v.abs() <= 1e-9, "{v}");
    }

    #[test]
    fn bregman_matches_direct_summation() {
        let nu = uniform_points(40, 2, 0.0, 1.0, 71);
        let de = uniform_points(60, 2, 0.0, 1.0, 72);
        let centers = nu.select_rows(&(0..10).collect::<Vec<_>>());
        let kernel = GaussianKernel::new(0.4).unwrap();
        let model = lsif_fit(&nu, &de, &centers, &kernel, DEFAULT_RIDGE).unwrap();
        // Independent brute-force evaluation of the same three sums.
        let f = |t: f64| 0.5 * (t - 1.0) * (t - 1.0);
        let fp = |t: f64| t - 1.0;
        let mut de_term = 0.0;
        for i in 0..de.rows() {
            let r = model.eval(de.row(i)).unwrap();
            de_term += fp(r) * r - f(r);
        }
        de_term /= de.rows() as f64;
        let mut nu_term = 0.0;
        for i in 0..nu.rows() {
            nu_term += fp(model.eval(nu.row(i)).unwrap());
        }
        nu_term /= nu.rows() as f64;
        let direct = de_term - nu_term;
        let lib = bregman_empirical(&model, BregmanF::Square, &nu, &de).unwrap();
        assert!((lib - direct).abs() <= 1e-12, "{lib} vs {direct}");
    }

    #[test]
    fn bregman_invariant_under_duplication() {
        let nu = uniform_points(30, 1, 0.0, 1.0, 73);
        let de = uniform_points(30, 1, 0.0, 1.0, 74);
        let centers = nu.select_rows(&(0..10).collect::<Vec<_>>());
        let kernel = GaussianKernel::new(0.3).unwrap();
        let model = lsif_fit(&nu, &de, &centers, &kernel, DEFAULT_RIDGE).unwrap();
        let dup = |m: &Matrix| -> Matrix {
            let indices: Vec<usize> = (0..m.rows()).chain(0..m.rows()).collect();
            m.select_rows(&indices)
        };
        let once = bregman_empirical(&model, BregmanF::Square, &nu, &de).unwrap();
        let twice = bregman_empirical(&model, BregmanF::Square, &dup(&nu), &dup(&de)).unwrap();
        assert!((once - twice).abs() <= 1e-12);
    }

    fn blob_dataset(n_per: usize, seed: u64) -> LabeledDataset {
        let pos = normal_points(n_per, 2, &[1.5, 1.5], 0.4, seed);
        let neg = normal_points(n_per, 2, &[-1.5, -1.5], 0.4, seed + 1);
        let mut rows: Vec<Vec<f64>> = pos.iter_rows().map(<[f64]>::to_vec).collect();
        rows.extend(neg.iter_rows().map(<[f64]>::to_vec));
        let labels: Vec<Label> = std::iter::repeat(Label::Plus)
            .take(n_per)
            .chain(std::iter::repeat(Label::Minus).take(n_per))
            .collect();
        LabeledDataset::new(Matrix::from_rows(&rows).unwrap(), labels).unwrap()
    }

    #[test]
    fn cond_prob_ratio_confident_on_blob_cores() {
        let train = blob_dataset(200, 79);
        let kernel = select_width(train.features(), WidthRule::MedianHeuristic { seed: 3 }).unwrap();
        for method in [RatioMethod::Kliep, RatioMethod::Lsif] {
            let est = cond_prob_ratio(&train, &kernel, method, 11).unwrap();
            let p_pos = est.eval_plus(&[1.5, 1.5]).unwrap();
            let p_neg = est.eval_plus(&[-1.5, -1.5]).unwrap();
            assert!(p_pos >= 0.9, "{method:?}: core posterior {p_pos}");
            assert!(p_neg <= 0.1, "{method:?}: opposite core posterior {p_neg}");
        }
    }

    #[test]
    fn cond_prob_ratio_near_prior_when_labels_independent() {
        // Labels drawn independently of the features: the posterior must sit
        // near the class prior everywhere.
        let features = uniform_points(400, 2, 0.0, 1.0, 83);
        let mut r = rng(84);
        let labels: Vec<Label> = (0..400)
            .map(|_| if r.gen::<f64>() < 0.6 { Label::Plus } else { Label::Minus })
            .collect();
        let train = LabeledDataset::new(features, labels).unwrap();
        let p_plus = class_prior(train.labels()).unwrap().p_plus();
        let kernel = select_width(train.features(), WidthRule::MedianHeuristic { seed: 5 }).unwrap();
        let est = cond_prob_ratio(&train, &kernel, RatioMethod::Kliep, 13).unwrap();
        for i in 0..10 {
            for j in 0..10 {
                let x = [(i as f64 + 0.5) / 10.0, (j as f64 + 0.5) / 10.0];
                let p = est.eval_plus(&x).unwrap();
                assert!((p - p_plus).abs() <= 0.1, "grid ({i},{j}): {p} vs {p_plus}");
            }
        }
    }

    #[test]
    fn posterior_complement_is_exact() {
        let train = blob_dataset(50, 89);
        let kernel = GaussianKernel::new(0.6).unwrap();
        let est = cond_prob_kde(&train, &kernel).unwrap();
        let x = [0.3, -0.2];
        let p = est.eval_label(&x, Label::Plus).unwrap();
        let q = est.eval_label(&x, Label::Minus).unwrap();
        assert_eq!(p + q, 1.0);
    }

    #[test]
    fn posterior_values_respect_clamp() {
        let train = blob_dataset(100, 91);
        let kernel = GaussianKernel::new(0.3).unwrap();
        let est = cond_prob_kde_with(&train, &kernel, 1e-3).unwrap();
        for &v in est.train_values() {
            assert!((1e-3..=1.0 - 1e-3).contains(&v));
        }
        // Deep inside the positive blob the clamp ceiling binds.
        let p = est.eval_plus(&[1.5, 1.5]).unwrap();
        assert!(p <= 1.0 - 1e-3);
    }

    #[test]
    fn forward_model_calibration_on_synthetic_grid() {
        // Corrupt the deterministic synthetic labels at known rates and
        // compare the KDE posterior against the forward-model identity on a
        // held-out grid.
        use crate::data::{corrupt_labels, generate_synthetic, synthetic_posterior_plus, NoisePair};
        let stream = SeedStream::new(2024);
        let clean = generate_synthetic(10_000, 2, &mut stream.rng(0, "gen")).unwrap();
        let noise = NoisePair::new(0.3, 0.1).unwrap();
        let noisy = corrupt_labels(&clean, &noise, &mut stream.rng(0, "corrupt"));
        let est = cond_prob_kde(&noisy, &GaussianKernel::new(0.1).unwrap()).unwrap();
        let mut abs_err = 0.0;
        let mut count = 0usize;
        for i in 0..15 {
            for j in 0..15 {
                let x = [(i as f64 + 0.5) / 15.0, (j as f64 + 0.5) / 15.0];
                let truth = (1.0 - noise.sum()) * synthetic_posterior_plus(&x) + noise.rho_minus();
                abs_err += (est.eval_plus(&x).unwrap() - truth).abs();
                count += 1;
            }
        }
        let mae = abs_err / count as f64;
        assert!(mae <= 0.08, "forward-model MAE {mae}");
    }

    #[test]
    fn posterior_from_values_clamps_and_rejects() {
        let est = CondProbEstimate::from_values(vec![0.0, 0.5, 1.0], 1e-3).unwrap();
        assert_eq!(est.train_values(), &[1e-3, 0.5, 1.0 - 1e-3]);
        assert!(est.eval_plus(&[0.0]).is_err());
        assert!(CondProbEstimate::from_values(vec![1.2], 1e-3).is_err());
        assert!(CondProbEstimate::from_values(vec![], 1e-3).is_err());
    }

    #[test]
    fn posterior_save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let train = blob_dataset(40, 97);
        let kernel = GaussianKernel::new(0.7).unwrap();
        for (name, est) in [
            ("kde.txt", cond_prob_kde(&train, &kernel).unwrap()),
            (
                "kliep.txt",
                cond_prob_ratio(&train, &kernel, RatioMethod::Kliep, 3).unwrap(),
            ),
        ] {
            let path = dir.path().join(name);
            est.save(&path).unwrap();
            let loaded = CondProbEstimate::load(&path).unwrap();
            assert_eq!(loaded, est);
            let x = [0.4, 0.1];
            assert_eq!(loaded.eval_plus(&x).unwrap(), est.eval_plus(&x).unwrap());
        }
    }

    #[test]
    fn observed_train_flips_for_negative_labels() {
        let est = CondProbEstimate::from_values(vec![0.7, 0.7], 1e-3).unwrap();
        let obs = est
            .observed_train(&[Label::Plus, Label::Minus])
            .unwrap();
        assert!((obs[0] - 0.7).abs() < 1e-15);
        assert!((obs[1] - 0.3).abs() < 1e-15);
    }
}
