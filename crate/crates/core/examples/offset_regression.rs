//! Mean offset plus a least-squares residual map, and the direct linear
//! map, on a small problem with a planted affine residual.

use cfaug::transforms::{fit_direct_linear, fit_mean_offset, fit_offset_regression, PairSet};
use ndarray::{array, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (k, d) = (12, 3);
    let x = Array2::from_shape_fn((k, d), |_| StandardNormal.sample(&mut rng));
    // cf = x + o + (A x + c) with a zero-mean residual over the pairs.
    let a = array![[0.2, -0.1, 0.0], [0.05, 0.1, 0.3], [0.0, 0.0, -0.2]];
    let o = array![1.0, -2.0, 0.5];
    let mut cf = &x + &x.dot(&a.t());
    let shift = &o - &x.dot(&a.t()).mean_axis(ndarray::Axis(0)).unwrap();
    cf += &shift;
    let pairs = PairSet::new(x.clone(), cf.clone(), vec![1; k])?;

    let mo = fit_mean_offset(&pairs)?;
    let mor = fit_offset_regression(&pairs)?;
    let lin = fit_direct_linear(&pairs)?;
    println!("mean offset: {:.4}", mo.o_minus().unwrap());
    println!("residual weight:\n{:.4}", mor.residual_minus().unwrap().weight);

    let err = |m: &cfaug::transforms::OffsetModel| -> cfaug::Result<f64> {
        let g = m.apply_rows(x.view(), pairs.labels())?;
        Ok((&g - &cf).iter().fold(0f64, |acc, v| acc.max(v.abs())))
    };
    println!("max fit error  mean offset {:.2e}", err(&mo)?);
    println!("max fit error  + regression {:.2e}", err(&mor)?);
    println!("max fit error  direct linear {:.2e}", err(&lin)?);
    assert!(err(&mor)? < 1e-8);
    assert!(mo.o_plus().is_none());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
