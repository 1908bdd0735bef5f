//! How close generated counterfactuals come to the manual ones: R², RMSE
//! and the average pairwise cosine distance ("diversity") of a set.

use std::fmt::Write as _;

use ndarray::{ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedset::{DatasetBundle, EmbeddingSplit, Pairing};
use crate::error::{Error, Result};
use crate::protocol::{sample_counterfactual_subset, MeanStd, DEFAULT_EXPERIMENT};
use crate::seeding;
use crate::transforms::{
    fit_direct_linear, fit_mean_id_offset, fit_mean_offset, fit_offset_regression, make_random_offset,
    OffsetModel, PairSet, TransformKind,
};

/// How per-dimension R² scores are combined.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum R2Mode {
    /// Uniform mean over dimensions with non-zero target variance.
    #[default]
    PerDimension,
    /// `1 - SSE / SST` with both sums taken over all entries
    /// (dimensions weighted by their target variance).
    Pooled,
}

fn same_shape(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::ShapeMismatch(a.dim(), b.dim()));
    }
    Ok(())
}

/// Coefficient of determination of `predicted` against `target`,
/// averaged uniformly over target dimensions.
pub fn r_squared(predicted: ArrayView2<'_, f64>, target: ArrayView2<'_, f64>) -> Result<f64> {
    r_squared_with(predicted, target, R2Mode::PerDimension)
}

pub fn r_squared_with(predicted: ArrayView2<'_, f64>, target: ArrayView2<'_, f64>, mode: R2Mode) -> Result<f64> {
    same_shape(predicted, target)?;
    let n = target.nrows();
    if n < 2 {
        return Err(Error::TooFewRows { required: 2, found: n });
    }
    let mut per_dim = Vec::with_capacity(target.ncols());
    let (mut sse_all, mut sst_all) = (0.0, 0.0);
    for (p, t) in predicted.axis_iter(Axis(1)).zip(target.axis_iter(Axis(1))) {
        let mean = t.sum() / n as f64;
        let sst: f64 = t.iter().map(|v| (v - mean) * (v - mean)).sum();
        let sse: f64 = p.iter().zip(t.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
        sse_all += sse;
        sst_all += sst;
        if sst > 0.0 {
            per_dim.push(1.0 - sse / sst);
        }
    }
    if sst_all == 0.0 {
        return Err(Error::AllTargetsConstant);
    }
    Ok(match mode {
        R2Mode::PerDimension => per_dim.iter().sum::<f64>() / per_dim.len() as f64,
        R2Mode::Pooled => 1.0 - sse_all / sst_all,
    })
}

/// Root mean squared error over all `n * d` entries.
pub fn rmse(predicted: ArrayView2<'_, f64>, target: ArrayView2<'_, f64>) -> Result<f64> {
    same_shape(predicted, target)?;
    if target.is_empty() {
        return Err(Error::TooFewRows { required: 1, found: 0 });
    }
    let sse: f64 = predicted
        .iter()
        .zip(target.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((sse / target.len() as f64).sqrt())
}

/// Mean cosine distance over all unordered pairs of rows.
///
/// Rows are processed in parallel; per-row partial sums are added in row
/// order so the result does not depend on the thread count.
pub fn diversity(vectors: ArrayView2<'_, f64>) -> Result<f64> {
    let n = vectors.nrows();
    if n < 2 {
        return Err(Error::TooFewRows { required: 2, found: n });
    }
    let sq: Vec<f64> = vectors.axis_iter(Axis(0)).map(|r| r.dot(&r)).collect();
    if let Some(i) = sq.iter().position(|&s| s == 0.0) {
        return Err(Error::ZeroNormRow(i));
    }
    let partial: Vec<f64> = (0..n - 1)
        .into_par_iter()
        .map(|i| {
            let a = vectors.row(i);
            (i + 1..n)
                .map(|j| {
                    let cos = a.dot(&vectors.row(j)) / (sq[i] * sq[j]).sqrt();
                    (1.0 - cos).clamp(0.0, 2.0)
                })
                .sum::<f64>()
        })
        .collect();
    let pairs = (n * (n - 1) / 2) as f64;
    Ok(partial.iter().sum::<f64>() / pairs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub method: String,
    pub n: usize,
    pub d: usize,
    pub r2: f64,
    pub rmse: f64,
    pub diversity_generated: f64,
    pub diversity_reference: f64,
}

/// Applies `model` to every paired row of `id_test` and scores the result
/// against the partner rows of `cad_test`.
pub fn quality_report(model: &OffsetModel, id_test: &EmbeddingSplit, cad_test: &EmbeddingSplit) -> Result<QualityReport> {
    quality_report_with(model, id_test, cad_test, R2Mode::PerDimension)
}

pub fn quality_report_with(
    model: &OffsetModel,
    id_test: &EmbeddingSplit,
    cad_test: &EmbeddingSplit,
    mode: R2Mode,
) -> Result<QualityReport> {
    let rows: Vec<usize> = (0..id_test.len()).filter(|&i| id_test.partner(i).is_some()).collect();
    let partners: Vec<usize> = rows.iter().map(|&i| id_test.partner(i).unwrap()).collect();
    let src = id_test.subset(&rows, Pairing::Drop)?;
    let reference = cad_test.subset(&partners, Pairing::Drop)?;
    let generated = model.apply_rows(src.vectors(), src.labels())?;
    Ok(QualityReport {
        method: model.kind().name().to_string(),
        n: rows.len(),
        d: id_test.dim(),
        r2: r_squared_with(generated.view(), reference.vectors(), mode)?,
        rmse: rmse(generated.view(), reference.vectors())?,
        diversity_generated: diversity(generated.view())?,
        diversity_reference: diversity(reference.vectors())?,
    })
}

/// Repeated fits on sampled pairs, one per seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub k: usize,
    pub seeds: Vec<u64>,
    pub methods: Vec<TransformKind>,
    #[serde(default)]
    pub r2_mode: R2Mode,
}

impl StudyConfig {
    /// The four standard generators, 50 seeds.
    pub fn new(k: usize) -> Self {
        Self {
            k,
            seeds: (0..50).collect(),
            methods: vec![
                TransformKind::DirectLinear,
                TransformKind::RandomOffset,
                TransformKind::MeanOffset,
                TransformKind::MeanOffsetRegression,
            ],
            r2_mode: R2Mode::PerDimension,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub method: String,
    pub r2: MeanStd,
    pub rmse: MeanStd,
    pub diversity: MeanStd,
    pub reports: Vec<QualityReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub config: StudyConfig,
    /// `id_test` scored as its own counterfactuals.
    pub original: QualityReport,
    pub methods: Vec<StudyRow>,
}

fn fit_for(kind: TransformKind, bundle: &DatasetBundle, k: usize, seed: u64) -> Result<OffsetModel> {
    if kind == TransformKind::MeanIdOffset {
        return fit_mean_id_offset(bundle.id_train());
    }
    let rows = sample_counterfactual_subset(bundle, k, seed)?;
    let pairs = PairSet::from_splits(bundle.id_train(), bundle.cad_train(), &rows)?;
    match kind {
        TransformKind::MeanOffset => fit_mean_offset(&pairs),
        TransformKind::MeanOffsetRegression => fit_offset_regression(&pairs),
        TransformKind::DirectLinear => fit_direct_linear(&pairs),
        TransformKind::RandomOffset => {
            let s = seeding::derive_seed(seed, DEFAULT_EXPERIMENT, &format!("random-offset/k={k}"));
            make_random_offset(&fit_mean_offset(&pairs)?, s)
        }
        TransformKind::MeanIdOffset => unreachable!(),
    }
}

/// Scores every method of `cfg` on the bundle's test pairs, averaging
/// the metric values (not the vectors) over seeds.
pub fn quality_study(bundle: &DatasetBundle, cfg: &StudyConfig) -> Result<StudyResult> {
    if cfg.seeds.is_empty() {
        return Err(Error::InvalidExperiment("no seeds".into()));
    }
    let (id, cad) = (bundle.id_test(), bundle.cad_test());
    let mut original = quality_report_with(&OffsetModel::identity(bundle.dim()), id, cad, cfg.r2_mode)?;
    original.method = "Original samples".into();
    let methods = cfg
        .methods
        .iter()
        .map(|&kind| {
            let reports = cfg
                .seeds
                .par_iter()
                .map(|&s| quality_report_with(&fit_for(kind, bundle, cfg.k, s)?, id, cad, cfg.r2_mode))
                .collect::<Result<Vec<_>>>()?;
            let col = |f: fn(&QualityReport) -> f64| MeanStd::of(&reports.iter().map(f).collect::<Vec<_>>());
            Ok(StudyRow {
                method: kind.name().to_string(),
                r2: col(|r| r.r2),
                rmse: col(|r| r.rmse),
                diversity: col(|r| r.diversity_generated),
                reports,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StudyResult {
        config: cfg.clone(),
        original,
        methods,
    })
}

impl StudyResult {
    /// Markdown table with R², RMSE and diversity columns; arrows compare
    /// each method with the original samples (R²) and the manual
    /// counterfactuals (diversity, within 0.005 counts as similar).
    pub fn to_markdown(&self) -> String {
        let o = &self.original;
        let mut s = String::new();
        s.push_str("| Samples | R² | RMSE | Diversity |\n|---|---:|---:|---:|\n");
        let _ = writeln!(
            s,
            "| Original samples (id_test) | **{:.3}** | {:.7} | {:.3} |",
            o.r2, o.rmse, o.diversity_generated
        );
        let _ = writeln!(
            s,
            "| Manual counterfactuals (cad_test) | - | - | **{:.3}** |",
            o.diversity_reference
        );
        for row in &self.methods {
            let up = if row.r2.mean > o.r2 { "↑" } else { "↓" };
            let div = if (row.diversity.mean - o.diversity_reference).abs() <= 0.005 {
                "≈"
            } else if row.diversity.mean < o.diversity_reference {
                "↓"
            } else {
                "↑"
            };
            let _ = writeln!(
                s,
                "| {} | {:.3} {up} | {:.7} | {:.3} {div} |",
                row.method, row.r2.mean, row.rmse.mean, row.diversity.mean
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn column_means_score_zero() {
        let t = array![[1.0, 2.0], [3.0, 6.0], [5.0, 1.0]];
        let m = t.mean_axis(Axis(0)).unwrap();
        let p = ndarray::Array2::from_shape_fn((3, 2), |(_, j)| m[j]);
        assert!(r_squared(p.view(), t.view()).unwrap().abs() < 1e-15);
    }

    #[test]
    fn constant_dimensions_are_skipped() {
        let t = array![[1.0, 7.0], [3.0, 7.0]];
        let p = array![[1.0, 0.0], [3.0, 0.0]];
        assert_eq!(r_squared(p.view(), t.view()).unwrap(), 1.0);
        let c = array![[7.0, 7.0], [7.0, 7.0]];
        assert!(matches!(r_squared(c.view(), c.view()), Err(Error::AllTargetsConstant)));
    }

    #[test]
    fn pooled_weights_by_variance() {
        let t = array![[0.0, 0.0], [2.0, 20.0]];
        let p = array![[0.0, 1.0], [2.0, 19.0]];
        // dim 0 perfect, dim 1: sse 2, sst 200.
        let pooled = r_squared_with(p.view(), t.view(), R2Mode::Pooled).unwrap();
        assert!((pooled - (1.0 - 2.0 / 202.0)).abs() < 1e-15);
        let per = r_squared(p.view(), t.view()).unwrap();
        assert!((per - (1.0 + 0.99) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn constant_error_rmse() {
        let t = array![[1.0, 2.0], [3.0, 4.0]];
        let p = &t + 0.1;
        assert!((rmse(p.view(), t.view()).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn error_paths() {
        let a = array![[1.0, 2.0]];
        let b = array![[1.0, 2.0, 3.0]];
        assert!(matches!(rmse(a.view(), b.view()), Err(Error::ShapeMismatch(..))));
        assert!(matches!(r_squared(a.view(), a.view()), Err(Error::TooFewRows { .. })));
        assert!(matches!(diversity(a.view()), Err(Error::TooFewRows { .. })));
        let z = array![[1.0, 0.0], [0.0, 0.0]];
        assert!(matches!(diversity(z.view()), Err(Error::ZeroNormRow(1))));
    }

    #[test]
    fn opposite_rows_are_two_apart() {
        let v = array![[1.0, 2.0], [-1.0, -2.0]];
        assert_eq!(diversity(v.view()).unwrap(), 2.0);
    }
}
