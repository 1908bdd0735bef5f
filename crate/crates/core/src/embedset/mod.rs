//! Embedding datasets: labelled, optionally paired matrices of sentence
//! vectors, their on-disk formats, and the bundle that ties the ID,
//! counterfactual and OOD splits together.

pub mod emb1;
mod manifest;
pub mod sidecar;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

pub use manifest::{load_bundle, save_bundle, Manifest, Provenance, SplitEntry};

/// Marker for rows without a partner.
pub const UNPAIRED: i64 = -1;

/// An `n x d` matrix of embeddings with one binary label per row and an
/// optional link from each row to a row of a partner split.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSplit {
    name: String,
    vectors: Array2<f64>,
    labels: Vec<u8>,
    pair_index: Vec<i64>,
}

/// What [`EmbeddingSplit::subset`] does with `pair_index`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pairing {
    /// Keep links into the (unchanged) partner split.
    Keep,
    /// Mark every retained row unpaired.
    Drop,
}

impl EmbeddingSplit {
    pub fn new(
        name: impl Into<String>,
        vectors: Array2<f64>,
        labels: Vec<u8>,
        pair_index: Vec<i64>,
    ) -> Result<Self> {
        let name = name.into();
        let (n, d) = vectors.dim();
        if d == 0 {
            return Err(Error::DimMismatch {
                expected: 1,
                found: 0,
                context: format!("split {name} has zero dimension"),
            });
        }
        for (len, what) in [(labels.len(), "labels"), (pair_index.len(), "pair_index")] {
            if len != n {
                return Err(Error::DimMismatch {
                    expected: n,
                    found: len,
                    context: format!("{what} length of split {name}"),
                });
            }
        }
        if let Some(row) = labels.iter().position(|&l| l > 1) {
            return Err(Error::BadLabel {
                split: name,
                row,
                label: labels[row] as i64,
            });
        }
        if let Some(row) = pair_index.iter().position(|&p| p < UNPAIRED) {
            return Err(Error::BrokenPairing {
                left: name.clone(),
                right: name,
                row,
                reason: format!("pair_index {} is negative", pair_index[row]),
            });
        }
        for ((row, col), v) in vectors.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite { split: name, row, col });
            }
        }
        Ok(Self {
            name,
            vectors,
            labels,
            pair_index,
        })
    }

    /// A split whose rows have no partner.
    pub fn unpaired(name: impl Into<String>, vectors: Array2<f64>, labels: Vec<u8>) -> Result<Self> {
        let n = vectors.nrows();
        Self::new(name, vectors, labels, vec![UNPAIRED; n])
    }

    pub fn empty(name: impl Into<String>, dim: usize) -> Result<Self> {
        Self::new(name, Array2::zeros((0, dim)), Vec::new(), Vec::new())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn len(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn vectors(&self) -> ArrayView2<'_, f64> {
        self.vectors.view()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.vectors.row(i)
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn pair_index(&self) -> &[i64] {
        &self.pair_index
    }

    /// Partner row of row `i`, if any.
    pub fn partner(&self, i: usize) -> Option<usize> {
        let p = self.pair_index[i];
        (p != UNPAIRED).then_some(p as usize)
    }

    /// Row counts per label, `[negatives, positives]`.
    pub fn label_counts(&self) -> [usize; 2] {
        let pos = self.labels.iter().filter(|&&l| l == 1).count();
        [self.len() - pos, pos]
    }

    /// Copies `rows` in the given order.
    pub fn subset(&self, rows: &[usize], pairing: Pairing) -> Result<Self> {
        let n = self.len();
        let mut seen = vec![false; n];
        for &r in rows {
            if r >= n {
                return Err(Error::IndexOutOfRange { index: r, len: n });
            }
            if std::mem::replace(&mut seen[r], true) {
                return Err(Error::DuplicateIndex(r));
            }
        }
        let vectors = self.vectors.select(Axis(0), rows);
        let labels = rows.iter().map(|&r| self.labels[r]).collect();
        let pair_index = match pairing {
            Pairing::Keep => rows.iter().map(|&r| self.pair_index[r]).collect(),
            Pairing::Drop => vec![UNPAIRED; rows.len()],
        };
        Ok(Self {
            name: self.name.clone(),
            vectors,
            labels,
            pair_index,
        })
    }

    /// Consumes the split, returning `(vectors, labels, pair_index)`.
    pub fn into_parts(self) -> (Array2<f64>, Vec<u8>, Vec<i64>) {
        (self.vectors, self.labels, self.pair_index)
    }
}

/// Sidecar path used by [`save_split`] / [`load_split`]: the vector file
/// with its extension replaced by `csv`.
pub fn sidecar_path(vectors_path: &Path) -> PathBuf {
    vectors_path.with_extension("csv")
}

/// Writes the EMB1 payload to `path` and the label sidecar next to it.
///
/// Vectors are narrowed to `f32`; a split whose values are all exactly
/// representable as `f32` (in particular, anything loaded from disk)
/// round-trips bit-exactly.
pub fn save_split(split: &EmbeddingSplit, path: &Path) -> Result<()> {
    emb1::write(path, split.vectors())?;
    sidecar::write(&sidecar_path(path), split.labels(), split.pair_index())
}

/// Reads a split written by [`save_split`]. The split is named after the
/// file stem.
pub fn load_split(path: &Path) -> Result<EmbeddingSplit> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    load_split_from(&name, path, &sidecar_path(path))
}

pub(crate) fn load_split_from(name: &str, vectors: &Path, labels: &Path) -> Result<EmbeddingSplit> {
    let m = emb1::read(vectors)?;
    let (labels, pairs) = sidecar::read(labels, name)?;
    if labels.len() != m.nrows() {
        return Err(Error::DimMismatch {
            expected: m.nrows(),
            found: labels.len(),
            context: format!("sidecar rows of split {name}"),
        });
    }
    EmbeddingSplit::new(name, m, labels, pairs)
}

/// Checks that `left` and `right` link to each other symmetrically and
/// that every link flips the label. With `complete`, every row of both
/// splits must be paired and the splits must have equal length.
pub fn check_pairing(left: &EmbeddingSplit, right: &EmbeddingSplit, complete: bool) -> Result<()> {
    let broken = |a: &EmbeddingSplit, b: &EmbeddingSplit, row: usize, reason: String| {
        Error::BrokenPairing {
            left: a.name().to_string(),
            right: b.name().to_string(),
            row,
            reason,
        }
    };
    if complete && left.len() != right.len() {
        return Err(broken(
            left,
            right,
            0,
            format!("{} rows vs {} rows", left.len(), right.len()),
        ));
    }
    for (a, b) in [(left, right), (right, left)] {
        for i in 0..a.len() {
            let Some(j) = a.partner(i) else {
                if complete {
                    return Err(broken(a, b, i, "row is unpaired".into()));
                }
                continue;
            };
            if j >= b.len() {
                return Err(broken(a, b, i, format!("partner {j} out of range")));
            }
            if b.partner(j) != Some(i) {
                return Err(broken(
                    a,
                    b,
                    i,
                    format!("partner {j} links back to {:?}", b.partner(j)),
                ));
            }
            if b.labels()[j] != 1 - a.labels()[i] {
                return Err(broken(
                    a,
                    b,
                    i,
                    format!("label {} is not flipped by partner {j}", a.labels()[i]),
                ));
            }
        }
    }
    Ok(())
}

/// All splits used by an experiment. Immutable once validated.
#[derive(Debug, Clone)]
pub struct DatasetBundle {
    pub name: String,
    pub provenance: Provenance,
    id_train: EmbeddingSplit,
    cad_train: EmbeddingSplit,
    id_test: EmbeddingSplit,
    cad_test: EmbeddingSplit,
    ood_sets: BTreeMap<String, EmbeddingSplit>,
    extra_pool: Option<EmbeddingSplit>,
}

impl DatasetBundle {
    pub fn new(
        name: impl Into<String>,
        id_train: EmbeddingSplit,
        cad_train: EmbeddingSplit,
        id_test: EmbeddingSplit,
        cad_test: EmbeddingSplit,
        ood_sets: BTreeMap<String, EmbeddingSplit>,
        extra_pool: Option<EmbeddingSplit>,
    ) -> Result<Self> {
        let dim = id_train.dim();
        let all = [&cad_train, &id_test, &cad_test]
            .into_iter()
            .chain(ood_sets.values())
            .chain(extra_pool.iter());
        for s in all {
            if s.dim() != dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    found: s.dim(),
                    context: format!("split {}", s.name()),
                });
            }
        }
        check_pairing(&id_train, &cad_train, true)?;
        check_pairing(&id_test, &cad_test, true)?;
        for s in ood_sets.values().chain(extra_pool.iter()) {
            if let Some(row) = s.pair_index().iter().position(|&p| p != UNPAIRED) {
                return Err(Error::BrokenPairing {
                    left: s.name().to_string(),
                    right: "<none>".into(),
                    row,
                    reason: "split has no declared partner".into(),
                });
            }
        }
        Ok(Self {
            name: name.into(),
            provenance: Provenance::default(),
            id_train,
            cad_train,
            id_test,
            cad_test,
            ood_sets,
            extra_pool,
        })
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn dim(&self) -> usize {
        self.id_train.dim()
    }

    pub fn id_train(&self) -> &EmbeddingSplit {
        &self.id_train
    }

    pub fn cad_train(&self) -> &EmbeddingSplit {
        &self.cad_train
    }

    pub fn id_test(&self) -> &EmbeddingSplit {
        &self.id_test
    }

    pub fn cad_test(&self) -> &EmbeddingSplit {
        &self.cad_test
    }

    pub fn ood_sets(&self) -> &BTreeMap<String, EmbeddingSplit> {
        &self.ood_sets
    }

    pub fn extra_pool(&self) -> Option<&EmbeddingSplit> {
        self.extra_pool.as_ref()
    }
}
