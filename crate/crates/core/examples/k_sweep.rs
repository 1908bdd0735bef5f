//! Accuracy as a function of the number of counterfactual pairs, printed
//! as plot-ready CSV. Cells that cannot run (odd k here) are reported,
//! not fatal.

use cfaug::protocol::{k_sweep, ExperimentSpec, Variant};
use cfaug::synthetic::{generate, SyntheticConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let bundle = generate(&SyntheticConfig {
        train_pairs: 200,
        ..Default::default()
    })?;
    let mut base = ExperimentSpec::new(Variant::MeanOffset, bundle.id_train().len(), 16);
    base.seeds = (0..4).collect();
    let ks = [4, 16, 64, 7];
    let table = k_sweep(&bundle, &base, &[Variant::Paired, Variant::MeanOffset], &ks, None);
    println!("variant,k,avg_mean,avg_std");
    for cell in &table.cells {
        match &cell.outcome {
            Ok(r) => println!("{:?},{},{:.4},{:.4}", cell.variant, cell.k, r.aggregate.avg.mean, r.aggregate.avg.std),
            Err(e) => println!("{:?},{},error,{}", cell.variant, cell.k, e.code),
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
