use ndarray::{ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{accuracy_on, train, TrainConfig, DEFAULT_GRAD_TOL, DEFAULT_MAX_ITER};
use crate::error::{Error, Result};

/// Range of L2 strengths searched by cross-validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// `lambda in {1e-3, 1e-2, ..., 1e3}`.
    Free,
    /// `lambda in {1, 10, 100, 1000}`.
    Strong,
}

impl Regime {
    pub fn grid(self) -> Vec<f64> {
        match self {
            Regime::Free => vec![1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3],
            Regime::Strong => vec![1.0, 1e1, 1e2, 1e3],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvConfig {
    pub folds: usize,
    pub grid: Vec<f64>,
    pub max_iter: usize,
    pub grad_tol: f64,
}

impl CvConfig {
    pub fn for_regime(regime: Regime) -> Self {
        Self::with_grid(regime.grid())
    }

    pub fn with_grid(grid: Vec<f64>) -> Self {
        Self {
            folds: 4,
            grid,
            max_iter: DEFAULT_MAX_ITER,
            grad_tol: DEFAULT_GRAD_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaScore {
    pub lambda: f64,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub best_lambda: f64,
    pub scores: Vec<LambdaScore>,
}

/// Label-stratified fold assignment: each class is shuffled and dealt
/// round-robin, continuing the deal across classes so fold sizes differ by
/// at most one.
pub fn stratified_folds(y: &[u8], folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; y.len()];
    let mut next = 0;
    for label in [0u8, 1] {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == label).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            assignment[i] = next % folds;
            next += 1;
        }
    }
    assignment
}

/// Picks the L2 strength with the best mean validation accuracy over
/// stratified folds. Ties go to the largest lambda. Validation accuracy is
/// unweighted even when training uses sample weights.
pub fn cross_validate(
    x: ArrayView2<'_, f64>,
    y: &[u8],
    weights: Option<&[f64]>,
    cv: &CvConfig,
    seed: u64,
) -> Result<CvResult> {
    let n = x.nrows();
    if y.len() != n {
        return Err(Error::DimMismatch {
            expected: n,
            found: y.len(),
            context: "labels vs rows".into(),
        });
    }
    if cv.grid.is_empty() || cv.grid.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidConfig(format!("bad lambda grid {:?}", cv.grid)));
    }
    if cv.folds < 2 || n < cv.folds {
        return Err(Error::TooFewSamples(format!(
            "{n} samples for {} folds",
            cv.folds
        )));
    }
    let assignment = stratified_folds(y, cv.folds, seed);
    let mut splits = Vec::with_capacity(cv.folds);
    for f in 0..cv.folds {
        let (val, fit): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| assignment[i] == f);
        let fit_y: Vec<u8> = fit.iter().map(|&i| y[i]).collect();
        let pos = fit_y.iter().filter(|&&l| l == 1).count();
        if pos == 0 || pos == fit_y.len() {
            return Err(Error::DegenerateFold(format!(
                "training part of fold {f} has a single class"
            )));
        }
        splits.push((fit, val));
    }

    let jobs: Vec<(usize, usize)> = (0..cv.grid.len())
        .flat_map(|g| (0..cv.folds).map(move |f| (g, f)))
        .collect();
    let results: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(g, f)| {
            let (fit, val) = &splits[f];
            let fx = x.select(Axis(0), fit);
            let fy: Vec<u8> = fit.iter().map(|&i| y[i]).collect();
            let mut cfg = TrainConfig::new(cv.grid[g]);
            cfg.max_iter = cv.max_iter;
            cfg.grad_tol = cv.grad_tol;
            if let Some(c) = weights {
                cfg.sample_weights = Some(fit.iter().map(|&i| c[i]).collect());
            }
            let model = train(fx.view(), &fy, &cfg)?;
            let vx = x.select(Axis(0), val);
            let vy: Vec<u8> = val.iter().map(|&i| y[i]).collect();
            accuracy_on(&model, vx.view(), &vy)
        })
        .collect();

    let mut scores = Vec::with_capacity(cv.grid.len());
    let mut it = results.into_iter();
    for &lambda in &cv.grid {
        let fold_accuracies = it.by_ref().take(cv.folds).collect::<Result<Vec<_>>>()?;
        let mean_accuracy = fold_accuracies.iter().sum::<f64>() / cv.folds as f64;
        scores.push(LambdaScore {
            lambda,
            fold_accuracies,
            mean_accuracy,
        });
    }
    let best = scores
        .iter()
        .max_by(|a, b| {
            a.mean_accuracy
                .total_cmp(&b.mean_accuracy)
                .then(a.lambda.total_cmp(&b.lambda))
        })
        .expect("grid is non-empty");
    Ok(CvResult {
        best_lambda: best.lambda,
        scores,
    })
}
