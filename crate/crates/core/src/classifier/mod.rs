//! Binary logistic regression with an L2 penalty on the weights.
//!
//! Training minimizes
//!
//! ```text
//! J(w, b) = sum_i c_i * [softplus(z_i) - y_i * z_i] + (lambda / 2) * |w|^2,
//! z_i = w . x_i + b
//! ```
//!
//! where `c_i` are per-sample loss weights (default 1) and the intercept
//! `b` is not penalized. The solver is a line-searched truncated Newton
//! method: Newton directions from conjugate gradients on Hessian-vector
//! products, with Armijo backtracking so `J` never increases.

mod cv;
mod io;

use ndarray::{Array1, ArrayView1, ArrayView2};

use crate::embedset::EmbeddingSplit;
use crate::error::{Error, Result};

pub use cv::{cross_validate, stratified_folds, CvConfig, CvResult, LambdaScore, Regime};
pub use io::{load_logreg, save_logreg};

pub const DEFAULT_MAX_ITER: usize = 4000;
pub const DEFAULT_GRAD_TOL: f64 = 1e-6;

const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lambda: f64,
    pub sample_weights: Option<Vec<f64>>,
    pub max_iter: usize,
    pub grad_tol: f64,
}

impl TrainConfig {
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            sample_weights: None,
            max_iter: DEFAULT_MAX_ITER,
            grad_tol: DEFAULT_GRAD_TOL,
        }
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Self {
        self.sample_weights = Some(weights);
        self
    }

    fn validate(&self, n: usize) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!("lambda {} must be positive", self.lambda)));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::InvalidConfig("grad_tol must be positive".into()));
        }
        if let Some(c) = &self.sample_weights {
            if c.len() != n {
                return Err(Error::DimMismatch {
                    expected: n,
                    found: c.len(),
                    context: "sample weights".into(),
                });
            }
            if c.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(Error::InvalidConfig("sample weights must be positive".into()));
            }
        }
        Ok(())
    }
}

/// A trained classifier `p(y = 1 | x) = sigmoid(w . x + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRegModel {
    pub weights: Array1<f64>,
    pub intercept: f64,
    pub lambda: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub labels: Vec<u8>,
    pub probabilities: Array1<f64>,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// The training objective for fixed data, exposed for diagnostics and
/// gradient checks.
#[derive(Debug, Clone, Copy)]
pub struct Objective<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a [u8],
    weights: Option<&'a [f64]>,
    lambda: f64,
}

impl<'a> Objective<'a> {
    pub fn new(x: ArrayView2<'a, f64>, y: &'a [u8], weights: Option<&'a [f64]>, lambda: f64) -> Self {
        Self { x, y, weights, lambda }
    }

    fn c(&self, i: usize) -> f64 {
        self.weights.map_or(1.0, |c| c[i])
    }

    fn margins(&self, w: ArrayView1<'_, f64>, b: f64) -> Array1<f64> {
        self.x.dot(&w) + b
    }

    pub fn value(&self, w: ArrayView1<'_, f64>, b: f64) -> f64 {
        self.value_at(&self.margins(w, b), w)
    }

    fn value_at(&self, z: &Array1<f64>, w: ArrayView1<'_, f64>) -> f64 {
        let loss: f64 = z
            .iter()
            .enumerate()
            .map(|(i, &zi)| self.c(i) * (softplus(zi) - self.y[i] as f64 * zi))
            .sum();
        loss + 0.5 * self.lambda * w.dot(&w)
    }

    /// `J(w + t dw, b + t db) - J(w, b)` given margins `z` and their
    /// direction `dz`, computed per sample as
    /// `log1p(expm1(+-t dz) * sigmoid(-+z))` so that differences far below
    /// the rounding error of `J` itself stay accurate.
    fn increment(
        &self,
        z: &Array1<f64>,
        dz: &Array1<f64>,
        w: ArrayView1<'_, f64>,
        dw: &Array1<f64>,
        t: f64,
    ) -> f64 {
        let loss: f64 = z
            .iter()
            .zip(dz)
            .enumerate()
            .map(|(i, (&zi, &dzi))| {
                let delta = t * dzi;
                let term = if self.y[i] == 1 {
                    (-delta).exp_m1() * sigmoid(-zi)
                } else {
                    delta.exp_m1() * sigmoid(zi)
                };
                self.c(i) * term.ln_1p()
            })
            .sum();
        loss + self.lambda * t * (w.dot(dw) + 0.5 * t * dw.dot(dw))
    }

    /// `(dJ/dw, dJ/db)`.
    pub fn gradient(&self, w: ArrayView1<'_, f64>, b: f64) -> (Array1<f64>, f64) {
        let z = self.margins(w, b);
        self.gradient_at(&z, w).0
    }

    /// Gradient plus the per-sample curvature `c_i p_i (1 - p_i)`.
    fn gradient_at(&self, z: &Array1<f64>, w: ArrayView1<'_, f64>) -> ((Array1<f64>, f64), Array1<f64>) {
        let n = z.len();
        let mut resid = Array1::zeros(n);
        let mut curv = Array1::zeros(n);
        for i in 0..n {
            let p = sigmoid(z[i]);
            let c = self.c(i);
            resid[i] = c * (p - self.y[i] as f64);
            curv[i] = c * p * (1.0 - p);
        }
        let gw = self.x.t().dot(&resid) + &(&w * self.lambda);
        ((gw, resid.sum()), curv)
    }

    /// Hessian-vector product for direction `(vw, vb)`.
    fn hess_vec(&self, curv: &Array1<f64>, vw: &Array1<f64>, vb: f64) -> (Array1<f64>, f64) {
        let t = (self.x.dot(vw) + vb) * curv;
        (self.x.t().dot(&t) + &(vw * self.lambda), t.sum())
    }
}

fn check_inputs(x: ArrayView2<'_, f64>, y: &[u8]) -> Result<()> {
    if y.len() != x.nrows() {
        return Err(Error::DimMismatch {
            expected: x.nrows(),
            found: y.len(),
            context: "labels vs rows".into(),
        });
    }
    if let Some(row) = y.iter().position(|&l| l > 1) {
        return Err(Error::BadLabel {
            split: "training".into(),
            row,
            label: y[row] as i64,
        });
    }
    let pos = y.iter().filter(|&&l| l == 1).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::SingleClass);
    }
    Ok(())
}

/// Trains a model and returns it together with the objective value after
/// every accepted iteration, starting with the value at zero. Later values
/// are accumulated from the accurate per-step increments, so the trace is
/// non-increasing even where successive values differ by less than the
/// rounding error of a fresh evaluation.
pub fn train_traced(x: ArrayView2<'_, f64>, y: &[u8], cfg: &TrainConfig) -> Result<(LogRegModel, Vec<f64>)> {
    check_inputs(x, y)?;
    cfg.validate(x.nrows())?;
    let d = x.ncols();
    let obj = Objective::new(x, y, cfg.sample_weights.as_deref(), cfg.lambda);

    let mut w = Array1::<f64>::zeros(d);
    let mut b = 0.0;
    let mut z = obj.margins(w.view(), b);
    let mut j = obj.value_at(&z, w.view());
    let mut history = vec![j];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iter {
        let ((gw, gb), curv) = obj.gradient_at(&z, w.view());
        let gmax = gw.iter().fold(gb.abs(), |m, v| m.max(v.abs()));
        if !gmax.is_finite() {
            return Err(Error::NonFiniteLoss(iterations));
        }
        if gmax <= cfg.grad_tol {
            converged = true;
            break;
        }
        let (dw, db) = newton_direction(&obj, &curv, &gw, gb);
        let slope = gw.dot(&dw) + gb * db;
        let (dw, db, slope) = if slope < 0.0 {
            (dw, db, slope)
        } else {
            // CG failed to produce a descent direction; fall back to -g.
            (-&gw, -gb, -(gw.dot(&gw) + gb * gb))
        };

        let dz = x.dot(&dw) + db;
        let mut step = 1.0;
        let accepted = loop {
            let delta = obj.increment(&z, &dz, w.view(), &dw, step);
            if delta.is_finite() && delta <= ARMIJO * step * slope {
                break Some(delta);
            }
            step *= 0.5;
            if step < MIN_STEP {
                break None;
            }
        };
        iterations += 1;
        let Some(delta) = accepted else {
            // No further decrease representable in floating point.
            break;
        };
        w.scaled_add(step, &dw);
        b += step * db;
        z = obj.margins(w.view(), b);
        j += delta;
        if !j.is_finite() {
            return Err(Error::NonFiniteLoss(iterations));
        }
        history.push(j);
    }
    if !converged {
        let ((gw, gb), _) = obj.gradient_at(&z, w.view());
        converged = gw.iter().fold(gb.abs(), |m, v| m.max(v.abs())) <= cfg.grad_tol;
    }
    let model = LogRegModel {
        weights: w,
        intercept: b,
        lambda: cfg.lambda,
        iterations,
        converged,
    };
    Ok((model, history))
}

pub fn train(x: ArrayView2<'_, f64>, y: &[u8], cfg: &TrainConfig) -> Result<LogRegModel> {
    train_traced(x, y, cfg).map(|(m, _)| m)
}

/// Approximately solves `H d = -g` by conjugate gradients, stopping at the
/// usual inexact-Newton forcing tolerance.
fn newton_direction(obj: &Objective<'_>, curv: &Array1<f64>, gw: &Array1<f64>, gb: f64) -> (Array1<f64>, f64) {
    let d = gw.len();
    let gnorm = (gw.dot(gw) + gb * gb).sqrt();
    let tol = gnorm.sqrt().min(0.5) * gnorm;
    let mut xw = Array1::<f64>::zeros(d);
    let mut xb = 0.0;
    let mut rw = -gw;
    let mut rb = -gb;
    let mut pw = rw.clone();
    let mut pb = rb;
    let mut rr = rw.dot(&rw) + rb * rb;
    for it in 0..(2 * (d + 1)).max(20) {
        if rr.sqrt() <= tol {
            break;
        }
        let (hw, hb) = obj.hess_vec(curv, &pw, pb);
        let curvature = pw.dot(&hw) + pb * hb;
        if curvature <= 0.0 {
            if it == 0 {
                return (-gw, -gb);
            }
            break;
        }
        let alpha = rr / curvature;
        xw.scaled_add(alpha, &pw);
        xb += alpha * pb;
        rw.scaled_add(-alpha, &hw);
        rb -= alpha * hb;
        let rr_new = rw.dot(&rw) + rb * rb;
        let beta = rr_new / rr;
        pw = &rw + &(&pw * beta);
        pb = rb + beta * pb;
        rr = rr_new;
    }
    (xw, xb)
}

pub fn predict(model: &LogRegModel, x: ArrayView2<'_, f64>) -> Result<Prediction> {
    if x.ncols() != model.weights.len() {
        return Err(Error::DimMismatch {
            expected: model.weights.len(),
            found: x.ncols(),
            context: "prediction input".into(),
        });
    }
    let probabilities = (x.dot(&model.weights) + model.intercept).mapv(sigmoid);
    let labels = probabilities.iter().map(|&p| u8::from(p >= 0.5)).collect();
    Ok(Prediction {
        labels,
        probabilities,
    })
}

/// Fraction of rows of `split` whose predicted label matches.
pub fn accuracy(model: &LogRegModel, split: &EmbeddingSplit) -> Result<f64> {
    if split.is_empty() {
        return Err(Error::EmptySplit(split.name().to_string()));
    }
    accuracy_on(model, split.vectors(), split.labels())
}

pub(crate) fn accuracy_on(model: &LogRegModel, x: ArrayView2<'_, f64>, y: &[u8]) -> Result<f64> {
    let pred = predict(model, x)?;
    let correct = pred.labels.iter().zip(y).filter(|(a, b)| a == b).count();
    Ok(correct as f64 / y.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn separable_1d() -> (Array2<f64>, Vec<u8>) {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..10 {
            x.push(-1.0);
            y.push(0);
            x.push(1.0);
            y.push(1);
        }
        (Array2::from_shape_vec((20, 1), x).unwrap(), y)
    }

    #[test]
    fn separable_data_is_fit() {
        let (x, y) = separable_1d();
        let m = train(x.view(), &y, &TrainConfig::new(1e-3)).unwrap();
        assert!(m.weights[0] > 0.0);
        assert!(m.converged);
        assert_eq!(accuracy_on(&m, x.view(), &y).unwrap(), 1.0);
    }

    #[test]
    fn huge_lambda_shrinks_weights_to_zero() {
        let (x, y) = separable_1d();
        let m = train(x.view(), &y, &TrainConfig::new(1e6)).unwrap();
        assert!(m.weights.dot(&m.weights).sqrt() <= 1e-2);
        let p = predict(&m, x.view()).unwrap();
        assert!(p.probabilities.iter().all(|&v| (v - 0.5).abs() < 1e-3));
    }

    #[test]
    fn single_class_and_shape_errors() {
        let x = array![[1.0], [2.0]];
        assert_eq!(train(x.view(), &[1, 1], &TrainConfig::new(1.0)).unwrap_err().code(), "SingleClass");
        assert_eq!(train(x.view(), &[1], &TrainConfig::new(1.0)).unwrap_err().code(), "DimMismatch");
        let bad = TrainConfig::new(1.0).with_weights(vec![1.0, -1.0]);
        assert_eq!(train(x.view(), &[0, 1], &bad).unwrap_err().code(), "InvalidConfig");
        assert_eq!(train(x.view(), &[0, 1], &TrainConfig::new(0.0)).unwrap_err().code(), "InvalidConfig");
    }

    #[test]
    fn zero_model_predicts_half_and_label_one() {
        let m = LogRegModel {
            weights: array![0.0, 0.0],
            intercept: 0.0,
            lambda: 1.0,
            iterations: 0,
            converged: true,
        };
        let p = predict(&m, array![[3.0, -4.0]].view()).unwrap();
        assert_eq!(p.probabilities[0], 0.5);
        assert_eq!(p.labels, vec![1]);
    }

    #[test]
    fn confident_positive() {
        let m = LogRegModel {
            weights: array![1.0],
            intercept: 0.0,
            lambda: 1.0,
            iterations: 0,
            converged: true,
        };
        let p = predict(&m, array![[10.0]].view()).unwrap();
        assert!(p.probabilities[0] > 0.9999);
        assert_eq!(p.labels, vec![1]);
        assert_eq!(predict(&m, array![[1.0, 2.0]].view()).unwrap_err().code(), "DimMismatch");
    }

    #[test]
    fn accuracy_counts() {
        let m = LogRegModel {
            weights: array![1.0],
            intercept: 0.0,
            lambda: 1.0,
            iterations: 0,
            converged: true,
        };
        let n = 488;
        let x = Array2::from_shape_fn((n, 1), |(i, _)| if i % 2 == 0 { 1.0 } else { -1.0 });
        let right: Vec<u8> = (0..n).map(|i| u8::from(i % 2 == 0)).collect();
        let flipped: Vec<u8> = right.iter().map(|l| 1 - l).collect();
        let half: Vec<u8> = (0..n).map(|i| u8::from(i < n / 2) * right[i] + u8::from(i >= n / 2) * flipped[i]).collect();
        let split = |y: Vec<u8>| EmbeddingSplit::unpaired("t", x.clone(), y).unwrap();
        assert_eq!(accuracy(&m, &split(right)).unwrap(), 1.0);
        assert_eq!(accuracy(&m, &split(flipped)).unwrap(), 0.0);
        assert_eq!(accuracy(&m, &split(half)).unwrap(), 0.5);
        let empty = EmbeddingSplit::empty("e", 1).unwrap();
        assert_eq!(accuracy(&m, &empty).unwrap_err().code(), "EmptySplit");
    }

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-1000.0) >= 0.0 && softplus(-1000.0) < 1e-300);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
    }
}
