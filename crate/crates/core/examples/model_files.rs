//! Saves a fitted generator and a classifier as JSON + EMB1 files and
//! loads them back.

use cfaug::classifier::{load_logreg, predict, save_logreg, train, TrainConfig};
use cfaug::protocol::sample_counterfactual_subset;
use cfaug::synthetic::{generate, SyntheticConfig};
use cfaug::transforms::{fit_offset_regression, load_model, save_model, PairSet};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let bundle = generate(&SyntheticConfig::default())?;
    let dir = tempfile::tempdir()?;

    let rows = sample_counterfactual_subset(&bundle, 16, 3)?;
    let pairs = PairSet::from_splits(bundle.id_train(), bundle.cad_train(), &rows)?;
    let gen = fit_offset_regression(&pairs)?;
    save_model(&gen, &dir.path().join("mor.json"))?;
    let back = load_model(&dir.path().join("mor.json"))?;
    println!("generator kind {:?}, dim {}", back.kind(), back.dim());

    let clf = train(bundle.id_train().vectors(), bundle.id_train().labels(), &TrainConfig::new(10.0))?;
    save_logreg(&clf, &dir.path().join("clf.json"))?;
    let clf2 = load_logreg(&dir.path().join("clf.json"))?;
    let a = predict(&clf, bundle.id_test().vectors())?;
    let b = predict(&clf2, bundle.id_test().vectors())?;
    let same = a.labels.iter().zip(&b.labels).filter(|(x, y)| x == y).count();
    println!("reloaded classifier agrees on {same}/{} test rows", a.labels.len());

    let mut files: Vec<_> = std::fs::read_dir(dir.path())?
        .map(|e| e.map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect::<Result<_, _>>()?;
    files.sort();
    println!("files: {}", files.join(" "));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
