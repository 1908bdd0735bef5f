//! Fits the mean offset on 16 sampled pairs and checks how well the
//! generated counterfactuals match the manual ones on the test split.

use cfaug::analysis::quality_report;
use cfaug::protocol::sample_counterfactual_subset;
use cfaug::synthetic::{generate, planted_directions, SyntheticConfig};
use cfaug::transforms::{fit_mean_offset, generate_counterfactuals, PairSet};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SyntheticConfig::default();
    let bundle = generate(&cfg)?;
    let (causal, _) = planted_directions(&cfg);

    let rows = sample_counterfactual_subset(&bundle, 16, 0)?;
    let pairs = PairSet::from_splits(bundle.id_train(), bundle.cad_train(), &rows)?;
    let model = fit_mean_offset(&pairs)?;
    let o_minus = model.o_minus().unwrap();
    let o_plus = model.o_plus().unwrap();
    // Planted offsets are -2s (positive to negative) and +2s.
    println!("o_minus . s = {:+.3} (planted -2)", o_minus.dot(&causal));
    println!("o_plus  . s = {:+.3} (planted +2)", o_plus.dot(&causal));
    println!("|o_minus + o_plus| = {:.3}", (&o_minus + &o_plus).dot(&(&o_minus + &o_plus)).sqrt());

    // Sampled rows already have manual counterfactuals, so skip them.
    let generated = generate_counterfactuals(&model, bundle.id_train(), &rows)?;
    println!("{} generated from {} originals", generated.len(), bundle.id_train().len());

    let q = quality_report(&model, bundle.id_test(), bundle.cad_test())?;
    println!(
        "test pairs: R2 {:.3}  RMSE {:.4}  diversity {:.3} (manual {:.3})",
        q.r2, q.rmse, q.diversity_generated, q.diversity_reference
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
