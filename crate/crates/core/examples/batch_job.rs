//! The library side of `cfaug run`: resolve a JSON job config against
//! overrides and write the result files.

use cfaug::embedset::save_bundle;
use cfaug::jobs::{run_job, Overrides, RunConfig};
use cfaug::synthetic::{generate, SyntheticConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let bundle = generate(&SyntheticConfig {
        train_pairs: 120,
        test_pairs: 60,
        extra_pool: 120,
        ..Default::default()
    })?;
    let manifest = save_bundle(&bundle, &dir.path().join("bundle"))?;
    let config: RunConfig = serde_json::from_str(&format!(
        r#"{{
            "bundle": {:?},
            "variants": ["Paired", "MeanOffset"],
            "k": [16],
            "seeds": 2
        }}"#,
        manifest
    ))?;
    let overrides = Overrides {
        out: Some(dir.path().join("out")),
        ..Default::default()
    };
    let report = run_job(&config.resolve(&overrides)?)?;
    for f in &report.files {
        println!("wrote {}", f.file_name().unwrap().to_string_lossy());
    }
    print!("{}", std::fs::read_to_string(dir.path().join("out/aggregate.md"))?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
