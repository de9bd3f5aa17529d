//! Importance weights, surrogate losses, and weighted-ERM training.
//!
//! The importance weight of a noisy example is
//! `beta = (P(y_obs | x) - rho_opposite) / ((1 - rho_plus - rho_minus) * P(y_obs | x))`,
//! clamped at zero when estimation error drives the numerator negative. The
//! inversed-rate form `beta = ((1 - pi_minus - pi_plus) * P(y_obs | x) + pi_opposite) / P(y_obs | x)`
//! is also provided.
//!
//! Training minimizes the weighted regularized empirical risk with
//! deterministic full-batch gradient descent and Armijo backtracking, so a
//! run is reproducible from its inputs alone. Two baselines are included:
//! the unbiased-estimator loss correction and label-dependent per-class
//! costs.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use crate::data::{Label, LabeledDataset, NoisePair};
use crate::density::Lines;
use crate::error::{Error, Result};
use crate::kernels::GaussianKernel;
use crate::matrix::Matrix;

/// Per-example nonnegative importance weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid_argument(
                "weights must be finite and nonnegative",
            ));
        }
        Ok(WeightVector(weights))
    }

    pub fn ones(n: usize) -> Self {
        WeightVector(vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Lemma-1 weights from the posterior of each observed label and the noise
/// rates. `observed_posteriors[i]` is the estimated probability of the label
/// actually observed at example i.
pub fn compute_beta(
    observed_posteriors: &[f64],
    labels: &[Label],
    rates: &NoisePair,
) -> Result<WeightVector> {
    if observed_posteriors.len() != labels.len() {
        return Err(Error::invalid_argument(format!(
            "{} posteriors for {} labels",
            observed_posteriors.len(),
            labels.len()
        )));
    }
    let denom_scale = 1.0 - rates.sum();
    let weights = observed_posteriors
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid_argument(format!(
                    "posterior {p} outside [0, 1]"
                )));
            }
            if p == 0.0 {
                // Zero-probability observation: weight zero by convention.
                return Ok(0.0);
            }
            let numer = p - rates.rho_opposite(y);
            Ok((numer / (denom_scale * p)).max(0.0))
        })
        .collect::<Result<Vec<f64>>>()?;
    WeightVector::new(weights)
}

/// Inversed-rate weights: `pi_plus` = P(Y=-1 | observed +1),
/// `pi_minus` = P(Y=+1 | observed -1), with `pi_plus + pi_minus <= 1`.
pub fn compute_beta_inversed(
    observed_posteriors: &[f64],
    labels: &[Label],
    pi_plus: f64,
    pi_minus: f64,
) -> Result<WeightVector> {
    if observed_posteriors.len() != labels.len() {
        return Err(Error::invalid_argument(format!(
            "{} posteriors for {} labels",
            observed_posteriors.len(),
            labels.len()
        )));
    }
    if !(0.0..=1.0).contains(&pi_plus)
        || !(0.0..=1.0).contains(&pi_minus)
        || pi_plus + pi_minus > 1.0
    {
        return Err(Error::invalid_argument(format!(
            "inversed rates must be nonnegative and sum to at most 1: ({pi_plus}, {pi_minus})"
        )));
    }
    let scale = 1.0 - pi_minus - pi_plus;
    let weights = observed_posteriors
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid_argument(format!(
                    "posterior {p} outside [0, 1]"
                )));
            }
            if p == 0.0 {
                return Ok(0.0);
            }
            let pi_opposite = match y {
                Label::Plus => pi_minus,
                Label::Minus => pi_plus,
            };
            Ok((scale * p + pi_opposite) / p)
        })
        .collect::<Result<Vec<f64>>>()?;
    WeightVector::new(weights)
}

/// Surrogate losses over the margin `t * y`. The zero-one loss is for
/// evaluation only and cannot be trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurrogateLoss {
    Logistic,
    Hinge,
    Square,
    /// exp(-2ty) for t <= 0, exp(-ty) for t > 0. Convex but not
    /// classification-calibrated.
    AsymExponential,
    ZeroOne,
}

impl SurrogateLoss {
    pub fn value(self, t: f64, y: f64) -> f64 {
        let margin = t * y;
        match self {
            SurrogateLoss::Logistic => {
                // log(1 + exp(-margin)) without overflow.
                if margin >= 0.0 {
                    (-margin).exp().ln_1p()
                } else {
                    -margin + margin.exp().ln_1p()
                }
            }
            SurrogateLoss::Hinge => (1.0 - margin).max(0.0),
            SurrogateLoss::Square => (t - y) * (t - y),
            SurrogateLoss::AsymExponential => {
                if t <= 0.0 {
                    (-2.0 * t * y).exp()
                } else {
                    (-t * y).exp()
                }
            }
            SurrogateLoss::ZeroOne => {
                let predicted = if t >= 0.0 { 1.0 } else { -1.0 };
                if predicted == y {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }

    /// Derivative in t; the hinge subgradient is 0 at its kink and the
    /// zero-one "gradient" is identically 0.
    pub fn grad(self, t: f64, y: f64) -> f64 {
        let margin = t * y;
        match self {
            SurrogateLoss::Logistic => -y / (1.0 + margin.exp()),
            SurrogateLoss::Hinge => {
                if margin < 1.0 {
                    -y
                } else {
                    0.0
                }
            }
            SurrogateLoss::Square => 2.0 * (t - y),
            SurrogateLoss::AsymExponential => {
                if t <= 0.0 {
                    -2.0 * y * (-2.0 * t * y).exp()
                } else {
                    -y * (-t * y).exp()
                }
            }
            SurrogateLoss::ZeroOne => 0.0,
        }
    }

    pub fn trainable(self) -> bool {
        self != SurrogateLoss::ZeroOne
    }

    /// Everywhere twice differentiable with a label-symmetric second
    /// derivative; such losses keep the unbiased correction convex.
    fn smooth_symmetric(self) -> bool {
        matches!(self, SurrogateLoss::Logistic | SurrogateLoss::Square)
    }

    pub fn name(self) -> &'static str {
        match self {
            SurrogateLoss::Logistic => "logistic",
            SurrogateLoss::Hinge => "hinge",
            SurrogateLoss::Square => "square",
            SurrogateLoss::AsymExponential => "asym-exp",
            SurrogateLoss::ZeroOne => "zero-one",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "logistic" => Some(SurrogateLoss::Logistic),
            "hinge" => Some(SurrogateLoss::Hinge),
            "square" => Some(SurrogateLoss::Square),
            "asym-exp" => Some(SurrogateLoss::AsymExponential),
            "zero-one" => Some(SurrogateLoss::ZeroOne),
            _ => None,
        }
    }
}

/// Model family to train.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    Linear,
    /// Kernel expansion over all training points with the given width.
    Kernel { width: f64 },
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Linear => "linear",
            ModelKind::Kernel { .. } => "kernel",
        }
    }
}

/// Trained decision function; predictions are sign(f(x)) with sign(0) = +1.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassifierModel {
    Linear {
        weights: Vec<f64>,
        bias: f64,
    },
    Kernel {
        support: Matrix,
        coeffs: Vec<f64>,
        width: f64,
        bias: f64,
    },
}

impl ClassifierModel {
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        match self {
            ClassifierModel::Linear { weights, bias } => {
                if x.len() != weights.len() {
                    return Err(Error::invalid_argument(format!(
                        "point has dimension {}, model {}",
                        x.len(),
                        weights.len()
                    )));
                }
                Ok(weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + bias)
            }
            ClassifierModel::Kernel {
                support,
                coeffs,
                width,
                bias,
            } => {
                if x.len() != support.cols() {
                    return Err(Error::invalid_argument(format!(
                        "point has dimension {}, model {}",
                        x.len(),
                        support.cols()
                    )));
                }
                let inv = 1.0 / (2.0 * width * width);
                let sum: f64 = support
                    .iter_rows()
                    .zip(coeffs)
                    .map(|(s, c)| c * (-crate::matrix::squared_distance(x, s) * inv).exp())
                    .sum();
                Ok(sum + bias)
            }
        }
    }

    pub fn decision_values(&self, points: &Matrix) -> Result<Vec<f64>> {
        (0..points.rows()).map(|i| self.decision(points.row(i))).collect()
    }

    pub fn predict(&self, points: &Matrix) -> Result<Vec<Label>> {
        Ok(self
            .decision_values(points)?
            .into_iter()
            .map(|t| if t >= 0.0 { Label::Plus } else { Label::Minus })
            .collect())
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ClassifierModel::Linear { .. } => "linear",
            ClassifierModel::Kernel { .. } => "kernel",
        }
    }
}

/// Optimizer settings for the deterministic full-batch trainer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    /// Ridge strength on the model norm (RKHS norm for kernel models).
    pub lambda: f64,
    /// Initial step size for the backtracking search.
    pub step_init: f64,
    pub max_epochs: usize,
    /// Relative objective-decrease threshold for convergence.
    pub tol: f64,
    /// Reserved for stochastic variants; the default full-batch optimizer is
    /// deterministic and ignores it.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda: 1e-3,
            step_init: 1.0,
            max_epochs: 500,
            tol: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.lambda < 0.0 {
            return Err(Error::invalid_argument("lambda must be nonnegative"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid_argument("tolerance must be positive"));
        }
        if self.step_init <= 0.0 {
            return Err(Error::invalid_argument("initial step must be positive"));
        }
        Ok(())
    }
}

/// Result of a training run: the model plus the optimizer record.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ClassifierModel,
    /// Final objective value.
    pub objective: f64,
    pub epochs: usize,
    pub converged: bool,
    /// Objective after initialization and after every accepted step;
    /// non-increasing for convex losses.
    pub objective_trace: Vec<f64>,
    /// True when the effective training loss may be non-convex (unbiased
    /// correction of a non-smooth or label-asymmetric surrogate).
    pub nonconvex_surrogate: bool,
}

/// Per-example training term: value and derivative of the effective loss at
/// the decision value t for example i. Mean over examples forms the data
/// objective.
trait ExampleLoss {
    fn eval(&self, i: usize, t: f64) -> (f64, f64);
}

struct WeightedLoss<'a> {
    loss: SurrogateLoss,
    labels: &'a [Label],
    weights: Vec<f64>,
}

impl ExampleLoss for WeightedLoss<'_> {
    fn eval(&self, i: usize, t: f64) -> (f64, f64) {
        let y = self.labels[i].sign();
        let w = self.weights[i];
        (w * self.loss.value(t, y), w * self.loss.grad(t, y))
    }
}

struct UnbiasedLoss<'a> {
    loss: SurrogateLoss,
    labels: &'a [Label],
    rho_plus: f64,
    rho_minus: f64,
}

impl ExampleLoss for UnbiasedLoss<'_> {
    fn eval(&self, i: usize, t: f64) -> (f64, f64) {
        let y = self.labels[i].sign();
        // rho of the observed label and of its opposite.
        let (rho_own, rho_opp) = if y > 0.0 {
            (self.rho_plus, self.rho_minus)
        } else {
            (self.rho_minus, self.rho_plus)
        };
        let scale = 1.0 - self.rho_plus - self.rho_minus;
        let value =
            ((1.0 - rho_opp) * self.loss.value(t, y) - rho_own * self.loss.value(t, -y)) / scale;
        let grad =
            ((1.0 - rho_opp) * self.loss.grad(t, y) - rho_own * self.loss.grad(t, -y)) / scale;
        (value, grad)
    }
}

/// Minimizes the weighted regularized empirical risk
/// `(1/n) sum beta_i l(f(x_i), y_i) + (lambda/2) ||f||^2`.
///
/// Weights are normalized to mean one before optimizing, so rescaling all
/// weights by a positive constant leaves both the effective objective and the
/// returned model unchanged. All-zero weights short-circuit to the
/// regularizer minimizer (the zero model).
pub fn train_weighted_erm(
    train: &LabeledDataset,
    weights: &WeightVector,
    loss: SurrogateLoss,
    kind: ModelKind,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    require_trainable(loss)?;
    if weights.len() != train.len() {
        return Err(Error::invalid_argument(format!(
            "{} weights for {} examples",
            weights.len(),
            train.len()
        )));
    }
    let total: f64 = weights.as_slice().iter().sum();
    if total == 0.0 {
        let model = zero_model(train, kind);
        return Ok(TrainOutcome {
            objective: 0.0,
            epochs: 0,
            converged: true,
            objective_trace: vec![0.0],
            nonconvex_surrogate: false,
            model,
        });
    }
    let mean = total / weights.len() as f64;
    let normalized: Vec<f64> = weights.as_slice().iter().map(|w| w / mean).collect();
    let example_loss = WeightedLoss {
        loss,
        labels: train.labels(),
        weights: normalized,
    };
    optimize(train, kind, config, &example_loss, false)
}

/// Unbiased-estimator baseline: plain ERM on the corrected loss
/// `((1 - rho_opp) l(t, y) - rho_own l(t, -y)) / (1 - rho_plus - rho_minus)`.
/// The correction can destroy convexity for non-smooth surrogates; the
/// outcome flags this and the optimizer settles for the best iterate seen.
pub fn train_unbiased(
    train: &LabeledDataset,
    rates: &NoisePair,
    loss: SurrogateLoss,
    kind: ModelKind,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    require_trainable(loss)?;
    let example_loss = UnbiasedLoss {
        loss,
        labels: train.labels(),
        rho_plus: rates.rho_plus(),
        rho_minus: rates.rho_minus(),
    };
    let nonconvex = !loss.smooth_symmetric() && rates.sum() > 0.0;
    optimize(train, kind, config, &example_loss, nonconvex)
}

/// Label-dependent-cost baseline: per-class weights `1 - alpha` on observed
/// positives and `alpha` on observed negatives with
/// `alpha = (1 + rho_minus - rho_plus) / 2`.
pub fn train_label_dependent(
    train: &LabeledDataset,
    rates: &NoisePair,
    loss: SurrogateLoss,
    kind: ModelKind,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    let alpha = label_dependent_alpha(rates);
    let weights: Vec<f64> = train
        .labels()
        .iter()
        .map(|l| match l {
            Label::Plus => 1.0 - alpha,
            Label::Minus => alpha,
        })
        .collect();
    train_weighted_erm(train, &WeightVector::new(weights)?, loss, kind, config)
}

/// The cost parameter of the label-dependent baseline.
pub fn label_dependent_alpha(rates: &NoisePair) -> f64 {
    (1.0 + rates.rho_minus() - rates.rho_plus()) / 2.0
}

fn require_trainable(loss: SurrogateLoss) -> Result<()> {
    if !loss.trainable() {
        return Err(Error::invalid_argument(
            "the zero-one loss is for evaluation only and cannot be trained on",
        ));
    }
    Ok(())
}

fn zero_model(train: &LabeledDataset, kind: ModelKind) -> ClassifierModel {
    match kind {
        ModelKind::Linear => ClassifierModel::Linear {
            weights: vec![0.0; train.dim()],
            bias: 0.0,
        },
        ModelKind::Kernel { width } => ClassifierModel::Kernel {
            support: train.features().clone(),
            coeffs: vec![0.0; train.len()],
            width,
            bias: 0.0,
        },
    }
}

/// Deterministic full-batch gradient descent with Armijo backtracking from a
/// zero initialization. Accepted steps are monotone in the objective; for
/// non-convex corrected losses the search simply stops when no step length
/// improves, leaving the best-seen iterate as the result.
fn optimize(
    train: &LabeledDataset,
    kind: ModelKind,
    config: &TrainConfig,
    example_loss: &dyn ExampleLoss,
    nonconvex: bool,
) -> Result<TrainOutcome> {
    let n = train.len();
    let inv_n = 1.0 / n as f64;
    // Kernel models need the training Gram matrix for both decision values
    // and the RKHS-norm gradient.
    let gram = match kind {
        ModelKind::Linear => None,
        ModelKind::Kernel { width } => {
            let kernel = GaussianKernel::new(width)?;
            Some(kernel.gram(train.features(), train.features())?)
        }
    };
    let dim = match kind {
        ModelKind::Linear => train.dim(),
        ModelKind::Kernel { .. } => n,
    };

    let decisions = |coef: &[f64], bias: f64| -> Vec<f64> {
        match &gram {
            None => (0..n)
                .map(|i| {
                    coef.iter()
                        .zip(train.point(i))
                        .map(|(w, x)| w * x)
                        .sum::<f64>()
                        + bias
                })
                .collect(),
            Some(k) => (0..n)
                .map(|i| {
                    (0..n).map(|j| k.get(i, j) * coef[j]).sum::<f64>() + bias
                })
                .collect(),
        }
    };

    let regularizer = |coef: &[f64]| -> f64 {
        match &gram {
            None => coef.iter().map(|w| w * w).sum::<f64>(),
            Some(k) => {
                let mut acc = 0.0;
                for i in 0..n {
                    let mut row = 0.0;
                    for j in 0..n {
                        row += k.get(i, j) * coef[j];
                    }
                    acc += coef[i] * row;
                }
                acc
            }
        }
    };

    let objective = |coef: &[f64], bias: f64| -> f64 {
        let t = decisions(coef, bias);
        let data: f64 = t
            .iter()
            .enumerate()
            .map(|(i, &ti)| example_loss.eval(i, ti).0)
            .sum::<f64>()
            * inv_n;
        data + 0.5 * config.lambda * regularizer(coef)
    };

    let mut coef = vec![0.0; dim];
    let mut bias = 0.0;
    let mut obj = objective(&coef, bias);
    if !obj.is_finite() {
        return Err(Error::Training(format!(
            "objective not finite at initialization: {obj}"
        )));
    }
    let mut trace = vec![obj];
    let mut step = config.step_init;
    let mut converged = false;
    let mut epochs = 0;

    for epoch in 0..config.max_epochs {
        epochs = epoch + 1;
        let t = decisions(&coef, bias);
        // Mean per-example loss derivatives.
        let g: Vec<f64> = t
            .iter()
            .enumerate()
            .map(|(i, &ti)| example_loss.eval(i, ti).1 * inv_n)
            .collect();
        let mut grad_coef = vec![0.0; dim];
        let grad_bias: f64 = g.iter().sum();
        match &gram {
            None => {
                for (i, gi) in g.iter().enumerate() {
                    if *gi == 0.0 {
                        continue;
                    }
                    for (w, x) in grad_coef.iter_mut().zip(train.point(i)) {
                        *w += gi * x;
                    }
                }
                for (gw, w) in grad_coef.iter_mut().zip(&coef) {
                    *gw += config.lambda * w;
                }
            }
            Some(k) => {
                // grad_c = K (g + lambda c)
                let inner: Vec<f64> = g
                    .iter()
                    .zip(&coef)
                    .map(|(gi, ci)| gi + config.lambda * ci)
                    .collect();
                for (i, gc) in grad_coef.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (j, v) in inner.iter().enumerate() {
                        acc += k.get(i, j) * v;
                    }
                    *gc = acc;
                }
            }
        }
        let grad_norm2: f64 =
            grad_coef.iter().map(|v| v * v).sum::<f64>() + grad_bias * grad_bias;
        if !grad_norm2.is_finite() {
            return Err(Error::Training(format!(
                "gradient not finite at epoch {epoch} (objective {obj})"
            )));
        }
        if grad_norm2 <= 1e-24 {
            converged = true;
            break;
        }

        let mut accepted = false;
        while step >= 1e-16 {
            let cand_coef: Vec<f64> = coef
                .iter()
                .zip(&grad_coef)
                .map(|(c, gc)| c - step * gc)
                .collect();
            let cand_bias = bias - step * grad_bias;
            let cand_obj = objective(&cand_coef, cand_bias);
            if cand_obj.is_finite() && cand_obj <= obj - 1e-4 * step * grad_norm2 {
                let gain = obj - cand_obj;
                coef = cand_coef;
                bias = cand_bias;
                obj = cand_obj;
                trace.push(obj);
                accepted = true;
                step = (step * 1.5).min(1e6);
                if gain <= config.tol * obj.abs().max(1.0) {
                    converged = true;
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // No step length improves: stationary up to line-search precision.
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }

    let model = match kind {
        ModelKind::Linear => ClassifierModel::Linear {
            weights: coef,
            bias,
        },
        ModelKind::Kernel { width } => ClassifierModel::Kernel {
            support: train.features().clone(),
            coeffs: coef,
            width,
            bias,
        },
    };
    Ok(TrainOutcome {
        model,
        objective: obj,
        epochs,
        converged,
        objective_trace: trace,
        nonconvex_surrogate: nonconvex,
    })
}

// Plain-text model serialization: kind, parameters, kernel width, bias.

impl ClassifierModel {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = File::create(path)?;
        let mut w = BufWriter::new(file);
        writeln!(w, "classifier v1")?;
        match self {
            ClassifierModel::Linear { weights, bias } => {
                writeln!(w, "kind linear")?;
                write_line(&mut w, "weights", weights)?;
                writeln!(w, "bias {bias}")?;
            }
            ClassifierModel::Kernel {
                support,
                coeffs,
                width,
                bias,
            } => {
                writeln!(w, "kind kernel")?;
                writeln!(w, "width {width}")?;
                writeln!(w, "support {} {}", support.rows(), support.cols())?;
                for row in support.iter_rows() {
                    let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
                    writeln!(w, "{}", cells.join(","))?;
                }
                write_line(&mut w, "coeffs", coeffs)?;
                writeln!(w, "bias {bias}")?;
            }
        }
        writeln!(w, "end")?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = File::open(path.as_ref())?;
        let mut lines = Lines::new(BufReader::new(file));
        lines.expect_exact("classifier v1")?;
        let kind = lines.expect_prefix("kind ")?;
        let model = match kind.trim() {
            "linear" => {
                let weights = lines.read_coeffs("weights")?;
                let bias: f64 = lines.parse_value("bias ")?;
                ClassifierModel::Linear { weights, bias }
            }
            "kernel" => {
                let width: f64 = lines.parse_value("width ")?;
                let support = lines.read_points("support")?;
                let coeffs = lines.read_coeffs("coeffs")?;
                if coeffs.len() != support.rows() {
                    return Err(lines.error("coefficient/support count mismatch"));
                }
                let bias: f64 = lines.parse_value("bias ")?;
                ClassifierModel::Kernel {
                    support,
                    coeffs,
                    width,
                    bias,
                }
            }
            other => return Err(lines.error(format!("unknown model kind {other:?}"))),
        };
        lines.expect_exact("end")?;
        Ok(model)
    }
}

fn write_line<W: Write>(w: &mut W, name: &str, values: &[f64]) -> Result<()> {
    writeln!(w, "{name} {}", values.len())?;
    let cells: Vec<String> = values.iter().map(|v| format!("{v}")).collect();
    writeln!(w, "{}", cells.join(","))?;
    Ok(())
}
