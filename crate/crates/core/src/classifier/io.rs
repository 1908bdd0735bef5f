//! Classifier files: JSON metadata plus a `1 x d` EMB1 weight payload
//! named `<stem>.weights.emb1` next to the JSON file.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Axis;
use serde::{Deserialize, Serialize};

use super::LogRegModel;
use crate::embedset::emb1;
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    dim: usize,
    weights: PathBuf,
    intercept: f64,
    lambda: f64,
    iterations: usize,
    converged: bool,
}

pub fn save_logreg(model: &LogRegModel, json_path: &Path) -> Result<()> {
    let dir = json_path.parent().unwrap_or(Path::new("."));
    let stem = json_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "classifier".into());
    let weights = PathBuf::from(format!("{stem}.weights.emb1"));
    emb1::write(&dir.join(&weights), model.weights.view().insert_axis(Axis(0)))?;
    let meta = ModelFile {
        dim: model.weights.len(),
        weights,
        intercept: model.intercept,
        lambda: model.lambda,
        iterations: model.iterations,
        converged: model.converged,
    };
    let text = serde_json::to_string_pretty(&meta).expect("classifier metadata serializes");
    fs::write(json_path, text + "\n").map_err(|e| Error::io(json_path, e))
}

pub fn load_logreg(json_path: &Path) -> Result<LogRegModel> {
    let dir = json_path.parent().unwrap_or(Path::new("."));
    let text = fs::read_to_string(json_path).map_err(|e| Error::io(json_path, e))?;
    let meta: ModelFile = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: json_path.to_path_buf(),
        message: e.to_string(),
    })?;
    let w = emb1::read(&dir.join(&meta.weights))?;
    if w.dim() != (1, meta.dim) {
        return Err(Error::DimMismatch {
            expected: meta.dim,
            found: w.ncols(),
            context: "classifier weight payload".into(),
        });
    }
    Ok(LogRegModel {
        weights: w.row(0).to_owned(),
        intercept: meta.intercept,
        lambda: meta.lambda,
        iterations: meta.iterations,
        converged: meta.converged,
    })
}
