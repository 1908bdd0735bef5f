//! Bundle manifest: one JSON document naming every split file.
//!
//! ```json
//! {
//!   "name": "imdb-sroberta-large",
//!   "dim": 1024,
//!   "provenance": { "encoder": "sentence-transformers/all-roberta-large-v1" },
//!   "splits": {
//!     "id_train":  { "vectors": "id_train.emb1",  "labels": "id_train.csv",  "rows": 1707, "paired_with": "cad_train" },
//!     "cad_train": { "vectors": "cad_train.emb1", "labels": "cad_train.csv", "rows": 1707, "paired_with": "id_train" },
//!     "id_test":   { "vectors": "id_test.emb1",   "labels": "id_test.csv",   "rows": 488,  "paired_with": "cad_test" },
//!     "cad_test":  { "vectors": "cad_test.emb1",  "labels": "cad_test.csv",  "rows": 488,  "paired_with": "id_test" },
//!     "extra_pool": { "vectors": "extra.emb1", "labels": "extra.csv", "rows": 22300 }
//!   },
//!   "ood": {
//!     "amazon": { "vectors": "amazon.emb1", "labels": "amazon.csv", "rows": 5766 }
//!   }
//! }
//! ```
//!
//! Paths are relative to the manifest's directory. `extra_pool` is optional.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{emb1, load_split_from, save_split, sidecar_path, DatasetBundle, EmbeddingSplit};
use crate::error::{Error, Result};

const PAIRED: [(&str, &str); 4] = [
    ("id_train", "cad_train"),
    ("cad_train", "id_train"),
    ("id_test", "cad_test"),
    ("cad_test", "id_test"),
];
const EXTRA_POOL: &str = "extra_pool";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoder: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
    /// Anything else the producer wants to record (truncation length,
    /// preprocessing flags, ...).
    #[serde(flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitEntry {
    pub vectors: PathBuf,
    pub labels: PathBuf,
    pub rows: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paired_with: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub name: String,
    pub dim: usize,
    #[serde(default)]
    pub provenance: Provenance,
    pub splits: BTreeMap<String, SplitEntry>,
    #[serde(default)]
    pub ood: BTreeMap<String, SplitEntry>,
}

impl Manifest {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    fn check_structure(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Manifest("dim must be positive".into()));
        }
        for (name, partner) in PAIRED {
            let entry = self
                .splits
                .get(name)
                .ok_or_else(|| Error::Manifest(format!("missing split {name}")))?;
            if entry.paired_with.as_deref() != Some(partner) {
                return Err(Error::Manifest(format!(
                    "split {name} must declare paired_with = {partner}, found {:?}",
                    entry.paired_with
                )));
            }
        }
        for (name, entry) in &self.splits {
            if !PAIRED.iter().any(|(p, _)| p == name) && name != EXTRA_POOL {
                return Err(Error::Manifest(format!("unknown split {name}")));
            }
            if name == EXTRA_POOL && entry.paired_with.is_some() {
                return Err(Error::Manifest("extra_pool cannot be paired".into()));
            }
        }
        if let Some((name, _)) = self.ood.iter().find(|(_, e)| e.paired_with.is_some()) {
            return Err(Error::Manifest(format!("OOD split {name} cannot be paired")));
        }
        Ok(())
    }
}

fn load_entry(base: &Path, name: &str, entry: &SplitEntry, dim: usize) -> Result<EmbeddingSplit> {
    let vectors = base.join(&entry.vectors);
    let bytes = fs::read(&vectors).map_err(|e| Error::io(&vectors, e))?;
    let (n, d) = emb1::decode_header(&bytes, &vectors)?;
    if n != entry.rows {
        return Err(Error::MalformedHeader {
            path: vectors,
            reason: format!("header declares {n} rows, manifest {}", entry.rows),
        });
    }
    if d != dim {
        return Err(Error::DimMismatch {
            expected: dim,
            found: d,
            context: format!("header of split {name}"),
        });
    }
    drop(bytes);
    load_split_from(name, &vectors, &base.join(&entry.labels))
}

/// Loads and fully validates the bundle described by `manifest_path`.
pub fn load_bundle(manifest_path: &Path) -> Result<DatasetBundle> {
    let manifest = Manifest::from_path(manifest_path)?;
    manifest.check_structure()?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let dim = manifest.dim;
    let get = |name: &str| load_entry(base, name, &manifest.splits[name], dim);
    let extra_pool = manifest
        .splits
        .get(EXTRA_POOL)
        .map(|e| load_entry(base, EXTRA_POOL, e, dim))
        .transpose()?;
    let ood = manifest
        .ood
        .iter()
        .map(|(name, e)| Ok((name.clone(), load_entry(base, name, e, dim)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let bundle = DatasetBundle::new(
        manifest.name.clone(),
        get("id_train")?,
        get("cad_train")?,
        get("id_test")?,
        get("cad_test")?,
        ood,
        extra_pool,
    )?;
    Ok(bundle.with_provenance(manifest.provenance))
}

/// Writes every split of `bundle` into `dir` as `<name>.emb1` plus
/// `<name>.csv`, and the manifest as `manifest.json`. Returns the manifest
/// path.
pub fn save_bundle(bundle: &DatasetBundle, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |file_stem: String, split: &EmbeddingSplit, paired_with: Option<&str>| {
        let vectors = PathBuf::from(format!("{file_stem}.emb1"));
        save_split(split, &dir.join(&vectors))?;
        Ok::<_, Error>(SplitEntry {
            labels: sidecar_path(&vectors),
            vectors,
            rows: split.len(),
            paired_with: paired_with.map(str::to_string),
        })
    };
    let mut splits = BTreeMap::new();
    let named = [
        ("id_train", bundle.id_train()),
        ("cad_train", bundle.cad_train()),
        ("id_test", bundle.id_test()),
        ("cad_test", bundle.cad_test()),
    ];
    for ((name, split), (_, partner)) in named.into_iter().zip(PAIRED) {
        splits.insert(name.to_string(), write(name.to_string(), split, Some(partner))?);
    }
    if let Some(pool) = bundle.extra_pool() {
        splits.insert(EXTRA_POOL.to_string(), write(EXTRA_POOL.to_string(), pool, None)?);
    }
    let mut ood = BTreeMap::new();
    for (name, split) in bundle.ood_sets() {
        ood.insert(name.clone(), write(format!("ood_{name}"), split, None)?);
    }
    let manifest = Manifest {
        name: bundle.name.clone(),
        dim: bundle.dim(),
        provenance: bundle.provenance.clone(),
        splits,
        ood,
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
