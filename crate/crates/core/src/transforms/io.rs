//! Model files: a JSON descriptor plus one EMB1 payload per array.
//!
//! `save_model(m, "dir/mo.json")` writes `dir/mo.json` and, per fitted
//! direction, `dir/mo.<dir>.offset.emb1` (1 x d) and, when present,
//! `dir/mo.<dir>.weight.emb1` (d x d) and `dir/mo.<dir>.bias.emb1` (1 x d).
//! Payloads are stored as `f32`.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::{AffineMap, Direction, DirectionMap, OffsetModel, TransformKind};
use crate::embedset::emb1;
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DirectionFiles {
    offset: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weight: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bias: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    kind: TransformKind,
    dim: usize,
    minus: Option<DirectionFiles>,
    plus: Option<DirectionFiles>,
}

fn row(v: &Array1<f64>) -> Array2<f64> {
    v.view().insert_axis(Axis(0)).to_owned()
}

pub fn save_model(model: &OffsetModel, json_path: &Path) -> Result<()> {
    let dir = json_path.parent().unwrap_or(Path::new("."));
    let stem = json_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".into());
    let save_dir = |map: Option<&DirectionMap>, tag: &str| -> Result<Option<DirectionFiles>> {
        let Some(map) = map else { return Ok(None) };
        let file = |part: &str| PathBuf::from(format!("{stem}.{tag}.{part}.emb1"));
        let offset = file("offset");
        emb1::write(&dir.join(&offset), row(&map.offset).view())?;
        let (mut weight, mut bias) = (None, None);
        if let Some(r) = &map.residual {
            let (w, b) = (file("weight"), file("bias"));
            emb1::write(&dir.join(&w), r.weight.view())?;
            emb1::write(&dir.join(&b), row(&r.bias).view())?;
            weight = Some(w);
            bias = Some(b);
        }
        Ok(Some(DirectionFiles { offset, weight, bias }))
    };
    let meta = ModelFile {
        kind: model.kind(),
        dim: model.dim(),
        minus: save_dir(model.direction(Direction::Minus), "minus")?,
        plus: save_dir(model.direction(Direction::Plus), "plus")?,
    };
    let text = serde_json::to_string_pretty(&meta).expect("model metadata serializes");
    fs::write(json_path, text + "\n").map_err(|e| Error::io(json_path, e))
}

pub fn load_model(json_path: &Path) -> Result<OffsetModel> {
    let dir = json_path.parent().unwrap_or(Path::new("."));
    let text = fs::read_to_string(json_path).map_err(|e| Error::io(json_path, e))?;
    let meta: ModelFile = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: json_path.to_path_buf(),
        message: e.to_string(),
    })?;
    let d = meta.dim;
    let read_vec = |p: &Path| -> Result<Array1<f64>> {
        let m = emb1::read(&dir.join(p))?;
        if m.dim() != (1, d) {
            return Err(Error::DimMismatch {
                expected: d,
                found: m.ncols(),
                context: format!("vector payload {}", p.display()),
            });
        }
        Ok(m.row(0).to_owned())
    };
    let load_dir = |files: Option<DirectionFiles>| -> Result<Option<DirectionMap>> {
        let Some(f) = files else { return Ok(None) };
        let offset = read_vec(&f.offset)?;
        let residual = match (f.weight, f.bias) {
            (Some(w), Some(b)) => {
                let weight = emb1::read(&dir.join(&w))?;
                Some(AffineMap::new(weight, read_vec(&b)?)?)
            }
            (None, None) => None,
            _ => {
                return Err(Error::Json {
                    path: json_path.to_path_buf(),
                    message: "weight and bias must be given together".into(),
                })
            }
        };
        Ok(Some(DirectionMap { offset, residual }))
    };
    OffsetModel::new(meta.kind, d, load_dir(meta.minus)?, load_dir(meta.plus)?)
}
