mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use cfaug::embedset::{emb1, load_bundle, load_split, save_bundle, save_split, EmbeddingSplit, Pairing};
use cfaug::Error;
use ndarray::Array2;
use proptest::prelude::*;
use rand::seq::SliceRandom;

/// EMB1 bytes written by hand.
fn emb1_bytes(rows: &[Vec<f32>]) -> Vec<u8> {
    let d = rows.first().map_or(1, Vec::len);
    let mut out = b"EMB1".to_vec();
    out.extend((rows.len() as u32).to_le_bytes());
    out.extend((d as u32).to_le_bytes());
    for r in rows {
        for v in r {
            out.extend(v.to_le_bytes());
        }
    }
    out
}

fn write_split(dir: &Path, name: &str, rows: &[Vec<f32>], labels: &[u8], pairs: &[i64]) {
    fs::write(dir.join(format!("{name}.emb1")), emb1_bytes(rows)).unwrap();
    let mut csv = String::from("row,label,pair_index\n");
    for i in 0..labels.len() {
        csv += &format!("{i},{},{}\n", labels[i], pairs[i]);
    }
    fs::write(dir.join(format!("{name}.csv")), csv).unwrap();
}

fn entry(name: &str, rows: usize, paired: Option<&str>) -> String {
    let p = paired.map_or("null".to_string(), |p| format!("\"{p}\""));
    format!(r#"{{"vectors": "{name}.emb1", "labels": "{name}.csv", "rows": {rows}, "paired_with": {p}}}"#)
}

/// Two paired 3-row splits for train and test, d = 4, one OOD set.
fn fixture(dir: &Path, cad_train_labels: [u8; 3]) -> std::path::PathBuf {
    let m = |off: f32| -> Vec<Vec<f32>> { (0..3).map(|i| (0..4).map(|j| off + (i * 4 + j) as f32 * 0.25).collect()).collect() };
    write_split(dir, "id_train", &m(0.0), &[0, 1, 0], &[0, 1, 2]);
    write_split(dir, "cad_train", &m(1.0), &cad_train_labels, &[0, 1, 2]);
    write_split(dir, "id_test", &m(2.0), &[1, 0, 1], &[2, 1, 0]);
    write_split(dir, "cad_test", &m(3.0), &[0, 1, 0], &[2, 1, 0]);
    write_split(dir, "ood_a", &m(4.0), &[1, 1, 0], &[-1, -1, -1]);
    let json = format!(
        r#"{{"name": "fixture", "dim": 4,
  "provenance": {{"encoder": "hand", "notes": null, "lowercase": false}},
  "splits": {{"id_train": {}, "cad_train": {}, "id_test": {}, "cad_test": {}}},
  "ood": {{"a": {}}}}}"#,
        entry("id_train", 3, Some("cad_train")),
        entry("cad_train", 3, Some("id_train")),
        entry("id_test", 3, Some("cad_test")),
        entry("cad_test", 3, Some("id_test")),
        entry("ood_a", 3, None),
    );
    let p = dir.join("manifest.json");
    fs::write(&p, json).unwrap();
    p
}

#[test]
fn valid_fixture_loads() {
    let dir = tempfile::tempdir().unwrap();
    let b = load_bundle(&fixture(dir.path(), [1, 0, 1])).unwrap();
    assert_eq!(b.id_train().len(), 3);
    assert_eq!(b.cad_test().len(), 3);
    assert_eq!(b.dim(), 4);
    assert_eq!(b.ood_sets()["a"].labels(), &[1, 1, 0]);
    assert_eq!(b.id_test().partner(0), Some(2));
    assert_eq!(b.cad_train().row(2)[3] as f32, 1.0 + 11.0 * 0.25);
    assert_eq!(b.provenance.encoder.as_deref(), Some("hand"));
}

#[test]
fn equal_labels_across_a_pair_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let err = load_bundle(&fixture(dir.path(), [0, 0, 1])).unwrap_err();
    assert!(matches!(err, Error::BrokenPairing { row: 0, .. }), "{err:?}");
}

#[test]
fn asymmetric_pairing_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = fixture(dir.path(), [1, 0, 1]);
    let rows: Vec<Vec<f32>> = (0..3).map(|_| vec![1.0; 4]).collect();
    write_split(dir.path(), "cad_train", &rows, &[1, 0, 1], &[0, 2, 1]);
    assert!(matches!(load_bundle(&p), Err(Error::BrokenPairing { .. })));
}

#[test]
fn truncated_payload_is_a_malformed_header() {
    let dir = tempfile::tempdir().unwrap();
    let p = fixture(dir.path(), [1, 0, 1]);
    let f = dir.path().join("id_test.emb1");
    let mut bytes = fs::read(&f).unwrap();
    bytes.truncate(bytes.len() - 4);
    fs::write(&f, &bytes).unwrap();
    assert!(matches!(load_bundle(&p), Err(Error::MalformedHeader { .. })));
    bytes.extend([0u8; 8]);
    fs::write(&f, &bytes).unwrap();
    assert!(matches!(load_bundle(&p), Err(Error::MalformedHeader { .. })));
}

#[test]
fn header_dim_must_match_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let p = fixture(dir.path(), [1, 0, 1]);
    write_split(dir.path(), "ood_a", &vec![vec![0.5f32; 2]; 3], &[0, 1, 0], &[-1, -1, -1]);
    assert!(matches!(load_bundle(&p), Err(Error::DimMismatch { expected: 4, found: 2, .. })));
}

#[test]
fn out_of_range_label_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let p = fixture(dir.path(), [1, 0, 1]);
    write_split(dir.path(), "ood_a", &vec![vec![0.5f32; 4]; 3], &[0, 2, 0], &[-1, -1, -1]);
    assert!(matches!(load_bundle(&p), Err(Error::BadLabel { row: 1, label: 2, .. })));
}

#[test]
fn unknown_manifest_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = fixture(dir.path(), [1, 0, 1]);
    let text = fs::read_to_string(&p).unwrap().replacen('{', r#"{"colour": 1, "#, 1);
    fs::write(&p, text).unwrap();
    assert!(matches!(load_bundle(&p), Err(Error::Json { .. })));
}

#[test]
fn one_by_one_split_round_trips_to_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let s = EmbeddingSplit::unpaired("one", Array2::from_elem((1, 1), 0.5), vec![1]).unwrap();
    let p = dir.path().join("one.emb1");
    save_split(&s, &p).unwrap();
    assert_eq!(fs::read(&p).unwrap(), emb1_bytes(&[vec![0.5]]));
    assert_eq!(load_split(&p).unwrap(), s);
}

#[test]
fn file_size_is_header_plus_payload() {
    let dir = tempfile::tempdir().unwrap();
    let s = EmbeddingSplit::unpaired("m", Array2::from_elem((3, 4), 1.5), vec![0, 1, 0]).unwrap();
    let p = dir.path().join("m.emb1");
    save_split(&s, &p).unwrap();
    assert_eq!(fs::metadata(&p).unwrap().len(), 12 + 3 * 4 * 4);
}

#[test]
fn bundle_round_trip_through_manifest() {
    let src = tempfile::tempdir().unwrap();
    let b = load_bundle(&fixture(src.path(), [1, 0, 1])).unwrap();
    let out = tempfile::tempdir().unwrap();
    let back = load_bundle(&save_bundle(&b, out.path()).unwrap()).unwrap();
    assert_eq!(back.id_train(), b.id_train());
    assert_eq!(back.cad_test(), b.cad_test());
    assert_eq!(back.ood_sets(), b.ood_sets());
    assert_eq!(back.provenance, b.provenance);
}

#[test]
fn subset_matches_direct_permutation() {
    let mut rng = common::rng(3);
    let x = common::normal_matrix(&mut rng, 20, 5);
    let labels: Vec<u8> = (0..20).map(|i| (i * 7 % 3 == 0) as u8).collect();
    let pairs: Vec<i64> = (0..20).map(|i| if i % 4 == 0 { -1 } else { 19 - i }).collect();
    let s = EmbeddingSplit::new("s", x.clone(), labels.clone(), pairs.clone()).unwrap();
    let mut perm: Vec<usize> = (0..20).collect();
    perm.shuffle(&mut rng);
    let sub = s.subset(&perm, Pairing::Keep).unwrap();
    for (i, &p) in perm.iter().enumerate() {
        assert_eq!(sub.row(i).to_vec(), x.row(p).to_vec());
        assert_eq!(sub.labels()[i], labels[p]);
        assert_eq!(sub.pair_index()[i], pairs[p]);
    }
    let mut a = sub.labels().to_vec();
    let mut b = labels.clone();
    a.sort();
    b.sort();
    assert_eq!(a, b);

    let dropped = s.subset(&[1, 0], Pairing::Drop).unwrap();
    assert_eq!(dropped.pair_index(), &[-1, -1]);
    assert_eq!(s.subset(&[], Pairing::Keep).unwrap().len(), 0);
    assert!(matches!(s.subset(&[0, 0], Pairing::Keep), Err(Error::DuplicateIndex(_))));
    assert!(matches!(s.subset(&[20], Pairing::Keep), Err(Error::IndexOutOfRange { index: 20, len: 20 })));
}

#[test]
fn non_finite_vectors_are_rejected() {
    let mut x = Array2::zeros((2, 2));
    x[[1, 0]] = f64::NAN;
    assert!(matches!(EmbeddingSplit::unpaired("n", x, vec![0, 1]), Err(Error::NonFinite { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn random_split_round_trips_bit_exactly(seed in any::<u64>(), n in 0usize..100, d in 1usize..16) {
        let mut rng = common::rng(seed);
        // Values representable in f32 survive the on-disk format.
        let x = common::normal_matrix(&mut rng, n, d).mapv(|v| v as f32 as f64);
        let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let s = EmbeddingSplit::unpaired("r", x, labels).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.emb1");
        save_split(&s, &p).unwrap();
        let back = load_split(&p).unwrap();
        prop_assert_eq!(back.labels(), s.labels());
        prop_assert_eq!(back.pair_index(), s.pair_index());
        for (a, b) in back.vectors().iter().zip(s.vectors().iter()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn encode_matches_hand_written_bytes(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let x = common::normal_matrix(&mut rng, 100, 16).mapv(|v| v as f32 as f64);
        let rows: Vec<Vec<f32>> = x.outer_iter().map(|r| r.iter().map(|&v| v as f32).collect()).collect();
        prop_assert_eq!(emb1::encode(x.view()), emb1_bytes(&rows));
    }
}

#[test]
fn label_counts_survive_round_trip_of_synthetic_bundle() {
    let b = cfaug::synthetic::generate(&cfaug::synthetic::SyntheticConfig {
        train_pairs: 30,
        test_pairs: 10,
        extra_pool: 0,
        ..Default::default()
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let back = load_bundle(&save_bundle(&b, dir.path()).unwrap()).unwrap();
    let counts: BTreeMap<_, _> = back.ood_sets().iter().map(|(k, v)| (k.clone(), v.label_counts())).collect();
    let expect: BTreeMap<_, _> = b.ood_sets().iter().map(|(k, v)| (k.clone(), v.label_counts())).collect();
    assert_eq!(counts, expect);
    assert!(back.extra_pool().is_none());
}
