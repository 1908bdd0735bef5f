use ndarray::{concatenate, Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;

use super::{ExperimentSpec, Variant};
use crate::embedset::{DatasetBundle, EmbeddingSplit, Pairing};
use crate::error::{Error, Result};
use crate::seeding;
use crate::transforms::{
    fit_direct_linear, fit_mean_id_offset, fit_mean_offset, fit_offset_regression,
    generate_counterfactuals, make_random_offset, OffsetModel, PairSet,
};

/// Experiment name used by [`sample_counterfactual_subset`] when called
/// outside an [`ExperimentSpec`].
pub const DEFAULT_EXPERIMENT: &str = "cfaug";

/// Labelled, weighted rows ready for the classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub x: Array2<f64>,
    pub y: Vec<u8>,
    pub weights: Vec<f64>,
    pub counts: SourceCounts,
}

/// Where the rows of a [`TrainingSet`] came from, in row order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SourceCounts {
    pub originals: usize,
    pub extra_originals: usize,
    pub manual_counterfactuals: usize,
    pub generated_counterfactuals: usize,
    pub external_counterfactuals: usize,
}

impl TrainingSet {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// Draws `k/2` rows per label from `candidates` (rows of `labels`)
/// uniformly without replacement by partial Fisher-Yates shuffles.
/// Returned indices are sorted.
pub(crate) fn sample_balanced<R: Rng>(
    candidates: &[usize],
    labels: &[u8],
    k: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if k % 2 != 0 {
        return Err(Error::InvalidExperiment(format!("k = {k} must be even")));
    }
    let half = k / 2;
    let mut picked = Vec::with_capacity(k);
    for label in [0u8, 1] {
        let mut pool: Vec<usize> = candidates
            .iter()
            .copied()
            .filter(|&i| labels[i] == label)
            .collect();
        if pool.len() < half {
            return Err(Error::InsufficientClassSamples {
                label,
                available: pool.len(),
                required: half,
            });
        }
        let (chosen, _) = pool.partial_shuffle(rng, half);
        picked.extend_from_slice(chosen);
    }
    picked.sort_unstable();
    Ok(picked)
}

fn sample_without_replacement<R: Rng>(len: usize, count: usize, rng: &mut R) -> Vec<usize> {
    let mut all: Vec<usize> = (0..len).collect();
    let (chosen, _) = all.partial_shuffle(rng, count);
    let mut chosen = chosen.to_vec();
    chosen.sort_unstable();
    chosen
}

/// `k` paired rows of `id_train`, `k/2` per label, deterministic in
/// `(k, seed)`.
pub fn sample_counterfactual_subset(bundle: &DatasetBundle, k: usize, seed: u64) -> Result<Vec<usize>> {
    subset_for(bundle, DEFAULT_EXPERIMENT, &paired_rows(bundle.id_train()), k, seed)
}

fn paired_rows(split: &EmbeddingSplit) -> Vec<usize> {
    (0..split.len()).filter(|&i| split.partner(i).is_some()).collect()
}

fn subset_for(
    bundle: &DatasetBundle,
    experiment: &str,
    candidates: &[usize],
    k: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    let mut rng = seeding::stream(seed, experiment, &format!("cad-subset/k={k}"));
    sample_balanced(candidates, bundle.id_train().labels(), k, &mut rng)
}

/// Rows of `id_train` used as the `n` originals for one seed.
pub(crate) fn original_rows(bundle: &DatasetBundle, spec: &ExperimentSpec, seed: u64) -> Vec<usize> {
    let total = bundle.id_train().len();
    if spec.n == total {
        return (0..total).collect();
    }
    let mut rng = seeding::stream(seed, &spec.experiment, &format!("id-subset/n={}", spec.n));
    sample_without_replacement(total, spec.n, &mut rng)
}

/// The counterfactual rows of `id_train` selected for one seed (empty for
/// variants that use none).
pub(crate) fn selected_pairs(
    bundle: &DatasetBundle,
    spec: &ExperimentSpec,
    originals: &[usize],
    seed: u64,
) -> Result<Vec<usize>> {
    if !spec.variant.uses_manual_counterfactuals() {
        return Ok(Vec::new());
    }
    let id = bundle.id_train();
    let candidates: Vec<usize> = originals
        .iter()
        .copied()
        .filter(|&i| id.partner(i).is_some())
        .collect();
    subset_for(bundle, &spec.experiment, &candidates, spec.k, seed)
}

fn fit_generator(variant: Variant, pairs: &PairSet, spec: &ExperimentSpec, seed: u64) -> Result<OffsetModel> {
    match variant {
        Variant::MeanOffset => fit_mean_offset(pairs),
        Variant::MeanOffsetRegression => fit_offset_regression(pairs),
        Variant::DirectLinear => fit_direct_linear(pairs),
        Variant::RandomOffset => {
            let reference = fit_mean_offset(pairs)?;
            let s = seeding::derive_seed(seed, &spec.experiment, &format!("random-offset/k={}", spec.k));
            make_random_offset(&reference, s)
        }
        other => unreachable!("{other:?} does not fit a generator from pairs"),
    }
}

struct Builder {
    blocks: Vec<Array2<f64>>,
    y: Vec<u8>,
    weights: Vec<f64>,
    counts: SourceCounts,
}

impl Builder {
    fn new() -> Self {
        Self {
            blocks: Vec::new(),
            y: Vec::new(),
            weights: Vec::new(),
            counts: SourceCounts::default(),
        }
    }

    fn push(&mut self, split: &EmbeddingSplit, weight: f64) -> usize {
        self.blocks.push(split.vectors().to_owned());
        self.y.extend_from_slice(split.labels());
        self.weights.extend(std::iter::repeat_n(weight, split.len()));
        split.len()
    }

    fn finish(self, dim: usize) -> TrainingSet {
        let views: Vec<_> = self.blocks.iter().map(|b| b.view()).collect();
        let x = if views.is_empty() {
            Array2::zeros((0, dim))
        } else {
            concatenate(Axis(0), &views).expect("blocks share the bundle dimension")
        };
        TrainingSet {
            x,
            y: self.y,
            weights: self.weights,
            counts: self.counts,
        }
    }
}

/// Assembles the training rows for one seed of `spec`.
pub fn build_training_set(bundle: &DatasetBundle, spec: &ExperimentSpec, seed: u64) -> Result<TrainingSet> {
    spec.validate(bundle)?;
    let id = bundle.id_train();
    let cad = bundle.cad_train();
    let originals_rows = original_rows(bundle, spec, seed);
    let selected = selected_pairs(bundle, spec, &originals_rows, seed)?;
    let originals = id.subset(&originals_rows, Pairing::Keep)?;
    let manual = || {
        let partners: Vec<usize> = selected.iter().map(|&r| id.partner(r).unwrap()).collect();
        cad.subset(&partners, Pairing::Drop)
    };

    let mut b = Builder::new();
    match spec.variant {
        Variant::Original => {
            let m = spec.extra_originals.unwrap_or(spec.n);
            let pool = bundle
                .extra_pool()
                .ok_or_else(|| Error::MissingExtraPool("bundle has none".into()))?;
            if pool.len() < m {
                return Err(Error::MissingExtraPool(format!(
                    "pool has {} rows, {m} requested",
                    pool.len()
                )));
            }
            let mut rng = seeding::stream(seed, &spec.experiment, &format!("extra-pool/m={m}"));
            let rows = sample_without_replacement(pool.len(), m, &mut rng);
            b.counts.originals = b.push(&originals, 1.0);
            b.counts.extra_originals = b.push(&pool.subset(&rows, Pairing::Drop)?, 1.0);
        }
        Variant::Weighted => {
            let w = spec.k as f64 / spec.n as f64;
            b.counts.originals = b.push(&originals, w);
            b.counts.manual_counterfactuals = b.push(&manual()?, 1.0);
        }
        Variant::Paired => {
            b.counts.originals = b.push(&id.subset(&selected, Pairing::Drop)?, 1.0);
            b.counts.manual_counterfactuals = b.push(&manual()?, 1.0);
        }
        Variant::MeanOffset | Variant::MeanOffsetRegression | Variant::RandomOffset | Variant::DirectLinear => {
            let pairs = PairSet::from_splits(id, cad, &selected)?;
            let model = fit_generator(spec.variant, &pairs, spec, seed)?;
            // Positions of the selected rows within the originals subset.
            let skip: Vec<usize> = originals_rows
                .iter()
                .enumerate()
                .filter(|(_, r)| selected.binary_search(r).is_ok())
                .map(|(pos, _)| pos)
                .collect();
            let generated = generate_counterfactuals(&model, &originals, &skip)?;
            b.counts.originals = b.push(&originals, 1.0);
            b.counts.manual_counterfactuals = b.push(&manual()?, 1.0);
            b.counts.generated_counterfactuals = b.push(&generated, 1.0);
        }
        Variant::MeanIdOffset => {
            let model = fit_mean_id_offset(&originals)?;
            let generated = generate_counterfactuals(&model, &originals, &[])?;
            b.counts.originals = b.push(&originals, 1.0);
            b.counts.generated_counterfactuals = b.push(&generated, 1.0);
        }
        Variant::ExternalAugmentation => {
            let ext = spec.external_split.as_deref().ok_or(Error::MissingExternalSplit)?;
            if ext.dim() != bundle.dim() {
                return Err(Error::DimMismatch {
                    expected: bundle.dim(),
                    found: ext.dim(),
                    context: format!("external split {}", ext.name()),
                });
            }
            b.counts.originals = b.push(&originals, 1.0);
            b.counts.external_counterfactuals = b.push(ext, 1.0);
        }
    }
    Ok(b.finish(bundle.dim()))
}
