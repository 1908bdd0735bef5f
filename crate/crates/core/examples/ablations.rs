//! Mean offset against the ablations: a random direction of the same
//! length, the difference of class means, and a direct linear map.

use cfaug::protocol::{run_experiment, ExperimentSpec, Variant};
use cfaug::synthetic::{generate, SyntheticConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    run_with(8)
}

pub fn run_with(seeds: u64) -> Result<(), Box<dyn std::error::Error>> {
    let bundle = generate(&SyntheticConfig::default())?;
    let n = bundle.id_train().len();
    let mut rows = Vec::new();
    for variant in [
        Variant::MeanOffset,
        Variant::RandomOffset,
        Variant::MeanIdOffset,
        Variant::DirectLinear,
    ] {
        let mut spec = ExperimentSpec::new(variant, n, 16);
        spec.seeds = (0..seeds).collect();
        let a = run_experiment(&bundle, &spec)?.aggregate;
        println!("{:<20} avg {:.3} ± {:.3}", variant.label(), a.avg.mean, a.avg.std);
        rows.push(a.avg.mean);
    }
    println!("mean offset ahead of random: {}", rows[0] > rows[1]);
    println!("mean offset ahead of mean-ID: {}", rows[0] > rows[2]);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_with(std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(8))
}
