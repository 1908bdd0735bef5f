//! Counterfactual generators in embedding space.
//!
//! Each model holds one map per label direction:
//!
//! * `minus` turns positive originals (label 1) into negative
//!   counterfactuals (label 0);
//! * `plus` turns negative originals into positive counterfactuals.
//!
//! A direction map is `x -> x + offset + residual(x)` where `residual` is an
//! optional affine correction `W x + b`. The direct linear ablation is the
//! degenerate case with no identity term: `x -> W x + b`.

mod io;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::embedset::{EmbeddingSplit, Pairing, UNPAIRED};
use crate::error::{Error, Result};
use crate::linalg::{column_mean, fit_affine};

pub use io::{load_model, save_model};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TransformKind {
    MeanOffset,
    MeanOffsetRegression,
    RandomOffset,
    MeanIdOffset,
    DirectLinear,
}

impl TransformKind {
    pub fn name(self) -> &'static str {
        match self {
            TransformKind::MeanOffset => "Mean Offset",
            TransformKind::MeanOffsetRegression => "Mean Offset + Regression",
            TransformKind::RandomOffset => "Random Offset",
            TransformKind::MeanIdOffset => "Mean-ID Offset",
            TransformKind::DirectLinear => "Linear Regression",
        }
    }
}

/// Which way a map flips the label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Positive original to negative counterfactual.
    Minus,
    /// Negative original to positive counterfactual.
    Plus,
}

impl Direction {
    /// The direction applied to an original with this label.
    pub fn for_label(label: u8) -> Self {
        if label == 1 {
            Direction::Minus
        } else {
            Direction::Plus
        }
    }

    pub fn source_label(self) -> u8 {
        match self {
            Direction::Minus => 1,
            Direction::Plus => 0,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Direction::Minus => "minus",
            Direction::Plus => "plus",
        }
    }
}

/// `x -> weight * x + bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl AffineMap {
    pub fn new(weight: Array2<f64>, bias: Array1<f64>) -> Result<Self> {
        let d = bias.len();
        if weight.dim() != (d, d) {
            return Err(Error::DimMismatch {
                expected: d,
                found: weight.nrows().max(weight.ncols()),
                context: format!("affine weight of shape {:?}", weight.dim()),
            });
        }
        if weight.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NumericalFailure("non-finite affine map".into()));
        }
        Ok(Self { weight, bias })
    }

    pub fn dim(&self) -> usize {
        self.bias.len()
    }

    pub fn apply(&self, x: ArrayView1<'_, f64>) -> Array1<f64> {
        self.weight.dot(&x) + &self.bias
    }

    /// Applies the map to every row.
    pub fn apply_rows(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        x.dot(&self.weight.t()) + &self.bias.view().insert_axis(Axis(0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionMap {
    pub offset: Array1<f64>,
    pub residual: Option<AffineMap>,
}

/// A fitted counterfactual generator.
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetModel {
    kind: TransformKind,
    dim: usize,
    minus: Option<DirectionMap>,
    plus: Option<DirectionMap>,
}

impl OffsetModel {
    pub fn new(
        kind: TransformKind,
        dim: usize,
        minus: Option<DirectionMap>,
        plus: Option<DirectionMap>,
    ) -> Result<Self> {
        for m in minus.iter().chain(plus.iter()) {
            let bad = m.offset.len() != dim || m.residual.as_ref().is_some_and(|r| r.dim() != dim);
            if bad {
                return Err(Error::DimMismatch {
                    expected: dim,
                    found: m.offset.len(),
                    context: "direction map".into(),
                });
            }
        }
        if kind == TransformKind::DirectLinear
            && minus.iter().chain(plus.iter()).any(|m| m.residual.is_none())
        {
            return Err(Error::InvalidReference(
                "direct linear maps need an affine map per direction".into(),
            ));
        }
        Ok(Self { kind, dim, minus, plus })
    }

    /// The identity generator: every counterfactual equals its original.
    pub fn identity(dim: usize) -> Self {
        let zero = || {
            Some(DirectionMap {
                offset: Array1::zeros(dim),
                residual: None,
            })
        };
        Self {
            kind: TransformKind::MeanOffset,
            dim,
            minus: zero(),
            plus: zero(),
        }
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn direction(&self, dir: Direction) -> Option<&DirectionMap> {
        match dir {
            Direction::Minus => self.minus.as_ref(),
            Direction::Plus => self.plus.as_ref(),
        }
    }

    pub fn o_minus(&self) -> Option<ArrayView1<'_, f64>> {
        self.minus.as_ref().map(|m| m.offset.view())
    }

    pub fn o_plus(&self) -> Option<ArrayView1<'_, f64>> {
        self.plus.as_ref().map(|m| m.offset.view())
    }

    pub fn residual_minus(&self) -> Option<&AffineMap> {
        self.minus.as_ref().and_then(|m| m.residual.as_ref())
    }

    pub fn residual_plus(&self) -> Option<&AffineMap> {
        self.plus.as_ref().and_then(|m| m.residual.as_ref())
    }

    fn map_for(&self, dir: Direction) -> Result<&DirectionMap> {
        self.direction(dir).ok_or(Error::EmptyDirection(dir.name()))
    }

    /// Counterfactual of a single original with the given label.
    pub fn apply(&self, x: ArrayView1<'_, f64>, label: u8) -> Result<Array1<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                found: x.len(),
                context: "transform input".into(),
            });
        }
        let map = self.map_for(Direction::for_label(label))?;
        let mut out = match (&map.residual, self.kind) {
            (Some(r), TransformKind::DirectLinear) => return Ok(r.apply(x)),
            (Some(r), _) => &x + &r.apply(x),
            (None, _) => x.to_owned(),
        };
        out += &map.offset;
        Ok(out)
    }

    /// Counterfactuals for every row of `x`, each transformed according to
    /// its label.
    pub fn apply_rows(&self, x: ArrayView2<'_, f64>, labels: &[u8]) -> Result<Array2<f64>> {
        if x.ncols() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                found: x.ncols(),
                context: "transform input".into(),
            });
        }
        let mut out = Array2::zeros(x.dim());
        for dir in [Direction::Minus, Direction::Plus] {
            let rows: Vec<usize> = (0..x.nrows())
                .filter(|&i| labels[i] == dir.source_label())
                .collect();
            if rows.is_empty() {
                continue;
            }
            let map = self.map_for(dir)?;
            let src = x.select(Axis(0), &rows);
            let mut gen = match (&map.residual, self.kind) {
                (Some(r), TransformKind::DirectLinear) => r.apply_rows(src.view()),
                (Some(r), _) => &src + &r.apply_rows(src.view()),
                (None, _) => src,
            };
            if self.kind != TransformKind::DirectLinear {
                gen += &map.offset.view().insert_axis(Axis(0));
            }
            for (k, &i) in rows.iter().enumerate() {
                out.row_mut(i).assign(&gen.row(k));
            }
        }
        Ok(out)
    }
}

/// Aligned (original, counterfactual, original label) triples used to fit
/// a generator.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSet {
    originals: Array2<f64>,
    counterfactuals: Array2<f64>,
    labels: Vec<u8>,
}

impl PairSet {
    pub fn new(originals: Array2<f64>, counterfactuals: Array2<f64>, labels: Vec<u8>) -> Result<Self> {
        if originals.dim() != counterfactuals.dim() {
            return Err(Error::DimMismatch {
                expected: originals.ncols(),
                found: counterfactuals.ncols(),
                context: format!(
                    "pair shapes {:?} vs {:?}",
                    originals.dim(),
                    counterfactuals.dim()
                ),
            });
        }
        if labels.len() != originals.nrows() {
            return Err(Error::DimMismatch {
                expected: originals.nrows(),
                found: labels.len(),
                context: "pair labels".into(),
            });
        }
        if let Some(row) = labels.iter().position(|&l| l > 1) {
            return Err(Error::BadLabel {
                split: "pairs".into(),
                row,
                label: labels[row] as i64,
            });
        }
        Ok(Self {
            originals,
            counterfactuals,
            labels,
        })
    }

    /// Pairs `rows` of `originals` with their partners in `counterfactuals`.
    pub fn from_splits(
        originals: &EmbeddingSplit,
        counterfactuals: &EmbeddingSplit,
        rows: &[usize],
    ) -> Result<Self> {
        let orig = originals.subset(rows, Pairing::Keep)?;
        let partners = rows
            .iter()
            .map(|&r| {
                originals.partner(r).ok_or_else(|| Error::BrokenPairing {
                    left: originals.name().into(),
                    right: counterfactuals.name().into(),
                    row: r,
                    reason: "row has no counterfactual".into(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let cf = counterfactuals.subset(&partners, Pairing::Keep)?;
        let labels = orig.labels().to_vec();
        Self::new(orig.into_parts().0, cf.into_parts().0, labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.originals.ncols()
    }

    pub fn originals(&self) -> ArrayView2<'_, f64> {
        self.originals.view()
    }

    pub fn counterfactuals(&self) -> ArrayView2<'_, f64> {
        self.counterfactuals.view()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// `(originals, counterfactuals)` restricted to one direction, or
    /// `None` when that direction has no pairs.
    fn direction(&self, dir: Direction) -> Option<(Array2<f64>, Array2<f64>)> {
        let rows: Vec<usize> = (0..self.len())
            .filter(|&i| self.labels[i] == dir.source_label())
            .collect();
        (!rows.is_empty()).then(|| {
            (
                self.originals.select(Axis(0), &rows),
                self.counterfactuals.select(Axis(0), &rows),
            )
        })
    }
}

fn fit_per_direction(
    pairs: &PairSet,
    kind: TransformKind,
    fit: impl Fn(ArrayView2<'_, f64>, ArrayView2<'_, f64>) -> Result<DirectionMap>,
) -> Result<OffsetModel> {
    if pairs.is_empty() {
        return Err(Error::EmptyDirection("minus and plus"));
    }
    let mut maps = [None, None];
    for (slot, dir) in maps.iter_mut().zip([Direction::Minus, Direction::Plus]) {
        if let Some((x, cf)) = pairs.direction(dir) {
            *slot = Some(fit(x.view(), cf.view())?);
        }
    }
    let [minus, plus] = maps;
    OffsetModel::new(kind, pairs.dim(), minus, plus)
}

/// Average counterfactual-minus-original difference, per direction.
pub fn fit_mean_offset(pairs: &PairSet) -> Result<OffsetModel> {
    fit_per_direction(pairs, TransformKind::MeanOffset, |x, cf| {
        Ok(DirectionMap {
            offset: column_mean((&cf - &x).view()),
            residual: None,
        })
    })
}

/// Mean offset plus an affine residual fit by minimum-norm OLS to what the
/// offset leaves unexplained.
pub fn fit_offset_regression(pairs: &PairSet) -> Result<OffsetModel> {
    fit_per_direction(pairs, TransformKind::MeanOffsetRegression, |x, cf| {
        let diff = &cf - &x;
        let offset = column_mean(diff.view());
        let targets = &diff - &offset.view().insert_axis(Axis(0));
        let (weight, bias) = fit_affine(x, targets.view())?;
        Ok(DirectionMap {
            offset,
            residual: Some(AffineMap::new(weight, bias)?),
        })
    })
}

/// Affine map from originals straight to counterfactuals, fit by
/// minimum-norm OLS, with no offset term.
pub fn fit_direct_linear(pairs: &PairSet) -> Result<OffsetModel> {
    fit_per_direction(pairs, TransformKind::DirectLinear, |x, cf| {
        let (weight, bias) = fit_affine(x, cf)?;
        Ok(DirectionMap {
            offset: Array1::zeros(x.ncols()),
            residual: Some(AffineMap::new(weight, bias)?),
        })
    })
}

/// Offset between the class means of unpaired originals: negatives' mean
/// minus positives' mean for the minus direction, its negation for plus.
pub fn fit_mean_id_offset(originals: &EmbeddingSplit) -> Result<OffsetModel> {
    let class_mean = |label: u8, dir: &'static str| {
        let rows: Vec<usize> = (0..originals.len())
            .filter(|&i| originals.labels()[i] == label)
            .collect();
        if rows.is_empty() {
            return Err(Error::EmptyDirection(dir));
        }
        Ok(column_mean(originals.vectors().select(Axis(0), &rows).view()))
    };
    let pos = class_mean(1, "minus")?;
    let neg = class_mean(0, "plus")?;
    let o_minus = &neg - &pos;
    let o_plus = -&o_minus;
    OffsetModel::new(
        TransformKind::MeanIdOffset,
        originals.dim(),
        Some(DirectionMap {
            offset: o_minus,
            residual: None,
        }),
        Some(DirectionMap {
            offset: o_plus,
            residual: None,
        }),
    )
}

/// Isotropically random offsets with the same per-direction L2 norms as a
/// fitted mean-offset model.
pub fn make_random_offset(reference: &OffsetModel, seed: u64) -> Result<OffsetModel> {
    if reference.kind() != TransformKind::MeanOffset {
        return Err(Error::InvalidReference(format!(
            "expected a Mean Offset model, got {:?}",
            reference.kind()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = reference.dim();
    let mut draw = |map: Option<&DirectionMap>, dir: Direction| -> Result<Option<DirectionMap>> {
        let Some(map) = map else { return Ok(None) };
        let target = norm(map.offset.view());
        if target == 0.0 {
            return Err(Error::DegenerateReference(dir.name()));
        }
        let z: Array1<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let zn = norm(z.view());
        Ok(Some(DirectionMap {
            offset: z * (target / zn),
            residual: None,
        }))
    };
    let minus = draw(reference.direction(Direction::Minus), Direction::Minus)?;
    let plus = draw(reference.direction(Direction::Plus), Direction::Plus)?;
    OffsetModel::new(TransformKind::RandomOffset, d, minus, plus)
}

pub(crate) fn norm(v: ArrayView1<'_, f64>) -> f64 {
    v.dot(&v).sqrt()
}

/// Applies `model` to every original not listed in `skip`. Output rows
/// carry the flipped label and link back to their source row through
/// `pair_index`.
pub fn generate_counterfactuals(
    model: &OffsetModel,
    originals: &EmbeddingSplit,
    skip: &[usize],
) -> Result<EmbeddingSplit> {
    let n = originals.len();
    if originals.dim() != model.dim() {
        return Err(Error::DimMismatch {
            expected: model.dim(),
            found: originals.dim(),
            context: format!("originals {}", originals.name()),
        });
    }
    let mut skipped = vec![false; n];
    for &s in skip {
        if s >= n {
            return Err(Error::IndexOutOfRange { index: s, len: n });
        }
        skipped[s] = true;
    }
    let rows: Vec<usize> = (0..n).filter(|&i| !skipped[i]).collect();
    let src = originals.subset(&rows, Pairing::Drop)?;
    let generated = model.apply_rows(src.vectors(), src.labels())?;
    let labels = src.labels().iter().map(|&l| 1 - l).collect();
    let links = rows.iter().map(|&r| r as i64).collect();
    debug_assert!(rows.iter().all(|&r| r as i64 != UNPAIRED));
    EmbeddingSplit::new(format!("{}_generated", originals.name()), generated, labels, links)
}
