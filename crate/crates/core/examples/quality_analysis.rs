//! R², RMSE and diversity of generated counterfactuals, averaged over
//! repeated fits on sampled pairs.

use cfaug::analysis::{quality_study, StudyConfig};
use cfaug::synthetic::{generate, SyntheticConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let bundle = generate(&SyntheticConfig::default())?;
    let mut cfg = StudyConfig::new(16);
    cfg.seeds = (0..10).collect();
    let study = quality_study(&bundle, &cfg)?;
    print!("{}", study.to_markdown());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
