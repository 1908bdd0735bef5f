//! Label/pairing sidecar: UTF-8 CSV with header `row,label,pair_index`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    row: usize,
    label: i64,
    pair_index: i64,
}

pub fn write(path: &Path, labels: &[u8], pair_index: &[i64]) -> Result<()> {
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for (row, (&label, &pair_index)) in labels.iter().zip(pair_index).enumerate() {
        w.serialize(Record {
            row,
            label: label as i64,
            pair_index,
        })
        .map_err(csv_err)?;
    }
    // An empty split still gets its header line.
    if labels.is_empty() {
        w.write_record(["row", "label", "pair_index"]).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads the sidecar; `split` names the split in error messages.
pub fn read(path: &Path, split: &str) -> Result<(Vec<u8>, Vec<i64>)> {
    let csv_err = |message: String| Error::Csv {
        path: path.to_path_buf(),
        message,
    };
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        },
        _ => csv_err(e.to_string()),
    })?;
    let headers = r.headers().map_err(|e| csv_err(e.to_string()))?;
    if headers != vec!["row", "label", "pair_index"] {
        return Err(csv_err(format!(
            "expected header row,label,pair_index, found {:?}",
            headers.iter().collect::<Vec<_>>()
        )));
    }
    let mut labels = Vec::new();
    let mut pairs = Vec::new();
    for (i, rec) in r.deserialize::<Record>().enumerate() {
        let rec = rec.map_err(|e| csv_err(e.to_string()))?;
        if rec.row != i {
            return Err(csv_err(format!("row column reads {} at position {i}", rec.row)));
        }
        if rec.label != 0 && rec.label != 1 {
            return Err(Error::BadLabel {
                split: split.to_string(),
                row: i,
                label: rec.label,
            });
        }
        if rec.pair_index < -1 {
            return Err(csv_err(format!("pair_index {} at row {i}", rec.pair_index)));
        }
        labels.push(rec.label as u8);
        pairs.push(rec.pair_index);
    }
    Ok((labels, pairs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_exact_text() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write(&p, &[1, 0], &[1, -1]).unwrap();
        assert_eq!(
            std::fs::read_to_string(&p).unwrap(),
            "row,label,pair_index\n0,1,1\n1,0,-1\n"
        );
        assert_eq!(read(&p, "s").unwrap(), (vec![1, 0], vec![1, -1]));
    }

    #[test]
    fn empty_sidecar_has_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.csv");
        write(&p, &[], &[]).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "row,label,pair_index\n");
        assert_eq!(read(&p, "e").unwrap(), (vec![], vec![]));
    }

    #[test]
    fn label_two_is_bad_label() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.csv");
        std::fs::write(&p, "row,label,pair_index\n0,2,-1\n").unwrap();
        assert_eq!(read(&p, "b").unwrap_err().code(), "BadLabel");
    }

    #[test]
    fn out_of_order_rows_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("o.csv");
        std::fs::write(&p, "row,label,pair_index\n1,0,-1\n0,1,-1\n").unwrap();
        assert_eq!(read(&p, "o").unwrap_err().code(), "Csv");
    }
}
