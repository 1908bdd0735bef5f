//! Cross-validated logistic regression on the original training split.

use cfaug::classifier::{accuracy, cross_validate, predict, train, CvConfig, Regime, TrainConfig};
use cfaug::synthetic::{generate, SyntheticConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let bundle = generate(&SyntheticConfig::default())?;
    let train_split = bundle.id_train();
    for regime in [Regime::Free, Regime::Strong] {
        let cv = cross_validate(train_split.vectors(), train_split.labels(), None, &CvConfig::for_regime(regime), 0)?;
        println!("{regime:?} grid:");
        for s in &cv.scores {
            println!("  lambda {:>7}  fold accuracy {:.3}", s.lambda, s.mean_accuracy);
        }
        let model = train(train_split.vectors(), train_split.labels(), &TrainConfig::new(cv.best_lambda))?;
        println!(
            "  picked {} ({} Newton steps): id {:.3} cad {:.3}",
            cv.best_lambda,
            model.iterations,
            accuracy(&model, bundle.id_test())?,
            accuracy(&model, bundle.cad_test())?
        );
        let p = predict(&model, bundle.id_test().vectors())?;
        println!("  first probabilities {:.3?}", &p.probabilities.as_slice().unwrap()[..4]);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
