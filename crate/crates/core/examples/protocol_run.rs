//! The main comparison: baselines against mean-offset augmentation,
//! reported as ID / CAD / OOD / Avg accuracy over seeds.
//!
//! `cargo run --release --example protocol_run -- 50` for 50 seeds.

use cfaug::protocol::{run_experiment, ExperimentSpec, Variant};
use cfaug::synthetic::{generate, SyntheticConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    run_with(8)
}

pub fn run_with(seeds: u64) -> Result<(), Box<dyn std::error::Error>> {
    let bundle = generate(&SyntheticConfig::default())?;
    let n = bundle.id_train().len();
    println!("n = {n}, k = 16, {seeds} seeds\n");
    println!("| Model | Regime | Orig. | CAD | OOD | Avg |");
    println!("|---|---|---:|---:|---:|---:|");
    for variant in [
        Variant::Original,
        Variant::Weighted,
        Variant::Paired,
        Variant::MeanOffset,
        Variant::MeanOffsetRegression,
    ] {
        let mut spec = ExperimentSpec::new(variant, n, 16);
        spec.seeds = (0..seeds).collect();
        let a = run_experiment(&bundle, &spec)?.aggregate;
        let pct = |m: cfaug::protocol::MeanStd| format!("{:.1} ± {:.1}", 100.0 * m.mean, 100.0 * m.std);
        println!(
            "| {} | {:?} | {} | {} | {} | {} |",
            variant.label(),
            spec.regime,
            pct(a.id),
            pct(a.cad),
            pct(a.ood_mean),
            pct(a.avg)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_with(std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(8))
}
