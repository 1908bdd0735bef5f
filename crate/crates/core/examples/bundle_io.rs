//! Writes a synthetic bundle to disk, validates it and reads it back.
//!
//! `cargo run --example bundle_io -- target/synthetic-bundle` leaves a
//! bundle that the `cfaug` binary can use.

use std::path::{Path, PathBuf};

use cfaug::embedset::{emb1, load_bundle, save_bundle};
use cfaug::jobs::validate_bundle;
use cfaug::synthetic::{generate, SyntheticConfig};

pub fn write_bundle(dir: &Path, cfg: &SyntheticConfig) -> cfaug::Result<PathBuf> {
    save_bundle(&generate(cfg)?, dir)
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    run_with(None)
}

pub fn run_with(dir: Option<PathBuf>) -> Result<(), Box<dyn std::error::Error>> {
    let tmp = tempfile::tempdir()?;
    let dir = dir.unwrap_or_else(|| tmp.path().to_path_buf());
    let cfg = SyntheticConfig {
        train_pairs: 100,
        test_pairs: 60,
        extra_pool: 100,
        ..Default::default()
    };
    let manifest = write_bundle(&dir, &cfg)?;
    println!("manifest: {}", manifest.display());
    print!("{}", validate_bundle(&manifest).to_text());

    let bundle = load_bundle(&manifest)?;
    let path = dir.join("id_train.emb1");
    let (n, d) = emb1::decode_header(&std::fs::read(&path)?, &path)?;
    println!("id_train.emb1 header: n={n} d={d}");
    // Vectors go through f32 on disk.
    let orig = generate(&cfg)?;
    let err = (&orig.id_train().vectors() - &bundle.id_train().vectors())
        .iter()
        .fold(0f64, |m, v| m.max(v.abs()));
    println!("max round-trip error: {err:.2e}");
    assert!(err < 1e-6);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_with(std::env::args().nth(1).map(PathBuf::from))
}
