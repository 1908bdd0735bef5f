//! The experiment matrix: per seed, sample counterfactual pairs, build the
//! variant's training set, pick lambda by cross-validation, retrain on
//! everything, and evaluate on the ID, CAD and OOD test sets.
//!
//! Every random choice for seed `s` comes from [`crate::seeding`] streams
//! keyed by `(s, spec.experiment, purpose)`, so a seed's result depends
//! only on the spec and the seed. Variants that share `(n, k, seed)` see
//! the same counterfactual subset.

mod training_set;

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{accuracy, cross_validate, train, CvConfig, Regime, TrainConfig};
use crate::embedset::{DatasetBundle, EmbeddingSplit};
use crate::error::{Error, Result};
use crate::seeding;

pub use training_set::{
    build_training_set, sample_counterfactual_subset, SourceCounts, TrainingSet, DEFAULT_EXPERIMENT,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    /// Twice as many unrevised originals.
    Original,
    /// All originals with loss weight `k/n`, plus the `k` manual counterfactuals.
    Weighted,
    /// Only the `k` sampled pairs.
    Paired,
    MeanOffset,
    MeanOffsetRegression,
    RandomOffset,
    MeanIdOffset,
    DirectLinear,
    /// Originals plus externally supplied counterfactual vectors.
    ExternalAugmentation,
}

impl Variant {
    pub const ALL: [Variant; 9] = [
        Variant::Original,
        Variant::Weighted,
        Variant::Paired,
        Variant::MeanOffset,
        Variant::MeanOffsetRegression,
        Variant::RandomOffset,
        Variant::MeanIdOffset,
        Variant::DirectLinear,
        Variant::ExternalAugmentation,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Variant::Original => "Original",
            Variant::Weighted => "Weighted",
            Variant::Paired => "Paired",
            Variant::MeanOffset => "Mean Offset",
            Variant::MeanOffsetRegression => "Mean Offset + Regression",
            Variant::RandomOffset => "Random Offset",
            Variant::MeanIdOffset => "Mean-ID Offset",
            Variant::DirectLinear => "Linear Regression",
            Variant::ExternalAugmentation => "External augmentation",
        }
    }

    /// Free for baselines without generated counterfactuals, Strong
    /// otherwise.
    pub fn default_regime(self) -> Regime {
        match self {
            Variant::Original | Variant::Weighted | Variant::Paired => Regime::Free,
            _ => Regime::Strong,
        }
    }

    pub fn uses_manual_counterfactuals(self) -> bool {
        matches!(
            self,
            Variant::Weighted
                | Variant::Paired
                | Variant::MeanOffset
                | Variant::MeanOffsetRegression
                | Variant::RandomOffset
                | Variant::DirectLinear
        )
    }

    /// Closed-form training-set size for `n` originals, `k` pairs, `extra`
    /// pool rows (Original) and `external` rows (ExternalAugmentation).
    pub fn training_size(self, n: usize, k: usize, extra: usize, external: usize) -> usize {
        match self {
            Variant::Original => n + extra,
            Variant::Weighted => n + k,
            Variant::Paired => 2 * k,
            Variant::MeanOffset | Variant::MeanOffsetRegression | Variant::RandomOffset | Variant::DirectLinear => {
                n + k + (n - k)
            }
            Variant::MeanIdOffset => 2 * n,
            Variant::ExternalAugmentation => n + external,
        }
    }
}

/// One cell of the experiment matrix.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub variant: Variant,
    /// Number of ID originals; rows of `id_train` are subsampled per seed
    /// when this is smaller than the split.
    pub n: usize,
    pub k: usize,
    pub seeds: Vec<u64>,
    pub regime: Regime,
    /// Replaces the regime's lambda grid when set.
    pub grid: Option<Vec<f64>>,
    pub folds: usize,
    pub max_iter: usize,
    pub grad_tol: f64,
    /// Pool rows added by the Original baseline; defaults to `n`.
    pub extra_originals: Option<usize>,
    /// Name mixed into every random stream.
    pub experiment: String,
    pub external_split: Option<Arc<EmbeddingSplit>>,
}

impl ExperimentSpec {
    /// Defaults: seeds `0..50`, the variant's default regime, 4 folds.
    pub fn new(variant: Variant, n: usize, k: usize) -> Self {
        Self {
            variant,
            n,
            k,
            seeds: (0..50).collect(),
            regime: variant.default_regime(),
            grid: None,
            folds: 4,
            max_iter: crate::classifier::DEFAULT_MAX_ITER,
            grad_tol: crate::classifier::DEFAULT_GRAD_TOL,
            extra_originals: None,
            experiment: DEFAULT_EXPERIMENT.to_string(),
            external_split: None,
        }
    }

    /// Same settings for another variant, with that variant's default
    /// regime.
    pub fn for_variant(&self, variant: Variant) -> Self {
        Self {
            variant,
            regime: variant.default_regime(),
            ..self.clone()
        }
    }

    pub fn cv_config(&self) -> CvConfig {
        let mut cv = CvConfig::with_grid(self.grid.clone().unwrap_or_else(|| self.regime.grid()));
        cv.folds = self.folds;
        cv.max_iter = self.max_iter;
        cv.grad_tol = self.grad_tol;
        cv
    }

    pub fn validate(&self, bundle: &DatasetBundle) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidExperiment(msg));
        let total = bundle.id_train().len();
        if self.n == 0 || self.n > total {
            return bad(format!("n = {} with {total} ID training rows", self.n));
        }
        if self.k % 2 != 0 || self.k > self.n {
            return bad(format!("k = {} must be even and at most n = {}", self.k, self.n));
        }
        if self.variant.uses_manual_counterfactuals() && self.k < 2 {
            return bad(format!("{:?} needs k >= 2", self.variant));
        }
        if self.seeds.is_empty() {
            return bad("no seeds".into());
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return bad("seeds must be distinct".into());
        }
        Ok(())
    }
}

/// Accuracies of one seed, as fractions in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub lambda: f64,
    pub converged: bool,
    pub train_size: usize,
    pub accuracy_id: f64,
    pub accuracy_cad: f64,
    pub accuracy_ood: BTreeMap<String, f64>,
    pub accuracy_ood_mean: f64,
    pub accuracy_avg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 for one value.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub variant: Variant,
    pub n: usize,
    pub k: usize,
    pub regime: Regime,
    pub seeds: Vec<u64>,
    pub lambda: MeanStd,
    pub id: MeanStd,
    pub cad: MeanStd,
    pub ood: BTreeMap<String, MeanStd>,
    pub ood_mean: MeanStd,
    pub avg: MeanStd,
}

impl AggregateResult {
    /// Folds seed-ordered runs into means and sample deviations.
    pub fn from_runs(spec: &ExperimentSpec, runs: &[RunResult]) -> Self {
        let col = |f: &dyn Fn(&RunResult) -> f64| MeanStd::of(&runs.iter().map(f).collect::<Vec<_>>());
        let ood = runs
            .first()
            .map(|r| r.accuracy_ood.keys().cloned().collect::<Vec<_>>())
            .unwrap_or_default()
            .into_iter()
            .map(|name| {
                let v = col(&|r: &RunResult| r.accuracy_ood[&name]);
                (name, v)
            })
            .collect();
        Self {
            variant: spec.variant,
            n: spec.n,
            k: spec.k,
            regime: spec.regime,
            seeds: runs.iter().map(|r| r.seed).collect(),
            lambda: col(&|r| r.lambda),
            id: col(&|r| r.accuracy_id),
            cad: col(&|r| r.accuracy_cad),
            ood,
            ood_mean: col(&|r| r.accuracy_ood_mean),
            avg: col(&|r| r.accuracy_avg),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub runs: Vec<RunResult>,
    pub aggregate: AggregateResult,
}

/// Runs one seed end to end.
pub fn run_seed(bundle: &DatasetBundle, spec: &ExperimentSpec, seed: u64) -> Result<RunResult> {
    if bundle.ood_sets().is_empty() {
        return Err(Error::NoOodSets);
    }
    let set = build_training_set(bundle, spec, seed)?;
    let weights = (spec.variant == Variant::Weighted).then_some(set.weights.as_slice());
    let cv_seed = seeding::derive_seed(seed, &spec.experiment, "cv-folds");
    let cv = cross_validate(set.x.view(), &set.y, weights, &spec.cv_config(), cv_seed)?;
    let mut cfg = TrainConfig::new(cv.best_lambda);
    cfg.max_iter = spec.max_iter;
    cfg.grad_tol = spec.grad_tol;
    cfg.sample_weights = weights.map(<[f64]>::to_vec);
    let model = train(set.x.view(), &set.y, &cfg)?;

    let accuracy_id = accuracy(&model, bundle.id_test())?;
    let accuracy_cad = accuracy(&model, bundle.cad_test())?;
    let accuracy_ood = bundle
        .ood_sets()
        .iter()
        .map(|(name, s)| Ok((name.clone(), accuracy(&model, s)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let accuracy_ood_mean = accuracy_ood.values().sum::<f64>() / accuracy_ood.len() as f64;
    let accuracy_avg = (accuracy_id + accuracy_cad + accuracy_ood_mean) / 3.0;
    Ok(RunResult {
        seed,
        lambda: cv.best_lambda,
        converged: model.converged,
        train_size: set.len(),
        accuracy_id,
        accuracy_cad,
        accuracy_ood,
        accuracy_ood_mean,
        accuracy_avg,
    })
}

/// Runs every seed of `spec` (in parallel) and aggregates in seed order.
pub fn run_experiment(bundle: &DatasetBundle, spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate(bundle)?;
    if bundle.ood_sets().is_empty() {
        return Err(Error::NoOodSets);
    }
    let runs = spec
        .seeds
        .par_iter()
        .map(|&s| run_seed(bundle, spec, s))
        .collect::<Result<Vec<_>>>()?;
    let aggregate = AggregateResult::from_runs(spec, &runs);
    Ok(ExperimentResult { runs, aggregate })
}

/// Error recorded for a failed sweep cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellError {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub variant: Variant,
    pub k: usize,
    pub outcome: std::result::Result<ExperimentResult, CellError>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub cells: Vec<SweepCell>,
}

impl SweepTable {
    pub fn get(&self, variant: Variant, k: usize) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.variant == variant && c.k == k)
    }
}

/// Runs `variants x ks`, sharing every other setting with `base`. Each
/// variant uses its default regime unless `regime` overrides it. Cell
/// failures are recorded, not propagated.
pub fn k_sweep(
    bundle: &DatasetBundle,
    base: &ExperimentSpec,
    variants: &[Variant],
    ks: &[usize],
    regime: Option<Regime>,
) -> SweepTable {
    let mut cells = Vec::new();
    for &variant in variants {
        for &k in ks {
            let mut spec = base.for_variant(variant);
            spec.k = k;
            if let Some(r) = regime {
                spec.regime = r;
            }
            let outcome = run_experiment(bundle, &spec).map_err(|e| CellError {
                code: e.code().to_string(),
                message: e.to_string(),
            });
            cells.push(SweepCell { variant, k, outcome });
        }
    }
    SweepTable { cells }
}
