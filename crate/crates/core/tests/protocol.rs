mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use cfaug::embedset::{DatasetBundle, EmbeddingSplit};
use cfaug::protocol::{
    build_training_set, k_sweep, run_experiment, run_seed, sample_counterfactual_subset, ExperimentSpec, Variant,
};
use cfaug::synthetic::{generate, SyntheticConfig};
use cfaug::Error;
use ndarray::Array2;

fn big_bundle() -> DatasetBundle {
    generate(&SyntheticConfig {
        dim: 8,
        train_pairs: 1707,
        test_pairs: 20,
        extra_pool: 1707,
        ..Default::default()
    })
    .unwrap()
}

fn small_bundle() -> DatasetBundle {
    generate(&SyntheticConfig {
        dim: 8,
        train_pairs: 60,
        test_pairs: 30,
        extra_pool: 60,
        ..Default::default()
    })
    .unwrap()
}

fn external(rows: usize, dim: usize) -> Arc<EmbeddingSplit> {
    let x = Array2::from_shape_fn((rows, dim), |(i, j)| ((i * dim + j) % 7) as f64 - 3.0);
    Arc::new(EmbeddingSplit::unpaired("ext", x, (0..rows).map(|i| (i % 2) as u8).collect()).unwrap())
}

/// Sizes written out from the variant definitions.
fn expected_size(v: Variant, n: usize, k: usize, ext: usize) -> usize {
    match v {
        Variant::Original => 2 * n,
        Variant::Weighted => n + k,
        Variant::Paired => k + k,
        Variant::MeanOffset | Variant::MeanOffsetRegression | Variant::RandomOffset | Variant::DirectLinear => {
            n + k + (n - k)
        }
        Variant::MeanIdOffset => n + n,
        Variant::ExternalAugmentation => n + ext,
    }
}

#[test]
fn training_set_sizes_match_closed_forms() {
    let b = big_bundle();
    let ext = external(50, 8);
    for (n, k) in [(100, 16), (1707, 16), (1707, 128)] {
        for v in Variant::ALL {
            let mut spec = ExperimentSpec::new(v, n, k);
            spec.external_split = Some(ext.clone());
            for seed in [0, 1] {
                let t = build_training_set(&b, &spec, seed).unwrap();
                assert_eq!(t.len(), expected_size(v, n, k, 50), "{v:?} n={n} k={k}");
                assert_eq!(t.x.nrows(), t.len());
                assert_eq!(t.weights.len(), t.len());
                if v == Variant::Weighted {
                    let w = k as f64 / n as f64;
                    assert!(t.weights[..n].iter().all(|&x| x == w));
                    assert!(t.weights[n..].iter().all(|&x| x == 1.0));
                } else {
                    assert!(t.weights.iter().all(|&x| x == 1.0));
                }
            }
        }
    }
}

#[test]
fn paired_set_is_balanced_and_labels_flip() {
    let b = big_bundle();
    let t = build_training_set(&b, &ExperimentSpec::new(Variant::Paired, 1707, 16), 4).unwrap();
    assert_eq!(t.len(), 32);
    assert_eq!(t.y.iter().filter(|&&l| l == 1).count(), 16);
    // Originals first, then their counterfactuals in the same order.
    for i in 0..16 {
        assert_eq!(t.y[16 + i], 1 - t.y[i]);
    }
    let t = build_training_set(&b, &ExperimentSpec::new(Variant::MeanOffset, 100, 16), 4).unwrap();
    let (n, k) = (100, 16);
    let gen_labels = &t.y[n + k..];
    let orig_labels = &t.y[..n];
    let flipped_orig: usize = orig_labels.iter().filter(|&&l| l == 1).count();
    let gen_neg = gen_labels.iter().filter(|&&l| l == 0).count();
    // Generated rows come from the n - k originals without manual pairs,
    // whose positives number flipped_orig - k/2.
    assert_eq!(gen_neg, flipped_orig - k / 2);
}

#[test]
fn sampler_gives_half_per_class_and_is_deterministic() {
    let b = big_bundle();
    let labels = b.id_train().labels();
    for k in [2, 16, 64, 128] {
        for seed in 0..20 {
            let rows = sample_counterfactual_subset(&b, k, seed).unwrap();
            assert_eq!(rows.len(), k);
            assert_eq!(rows.iter().filter(|&&r| labels[r] == 1).count(), k / 2);
            let mut u = rows.clone();
            u.sort_unstable();
            u.dedup();
            assert_eq!(u.len(), k);
            assert_eq!(sample_counterfactual_subset(&b, k, seed).unwrap(), rows);
        }
    }
}

#[test]
fn sampler_is_uniform_over_rows() {
    let b = big_bundle();
    let labels = b.id_train().labels();
    let seeds = 1000;
    let mut counts = vec![0usize; labels.len()];
    for seed in 0..seeds {
        for r in sample_counterfactual_subset(&b, 16, seed).unwrap() {
            counts[r] += 1;
        }
    }
    for class in [0u8, 1] {
        let rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        let m = rows.len() as f64;
        let expect = seeds as f64 * 8.0 / m;
        // Chi-square statistic of the per-row counts, against its mean
        // (m - 1) and standard deviation sqrt(2 (m - 1)).
        let chi: f64 = rows.iter().map(|&r| (counts[r] as f64 - expect).powi(2) / expect).sum();
        let df = m - 1.0;
        assert!((chi - df).abs() <= 3.0 * (2.0 * df).sqrt(), "class {class}: chi2 {chi} df {df}");
        assert_eq!(rows.iter().map(|&r| counts[r]).sum::<usize>(), 8 * seeds as usize);
    }
}

#[test]
fn two_pair_dataset_selects_both() {
    let x = Array2::from_shape_fn((2, 2), |(i, j)| (i + j) as f64);
    let id = EmbeddingSplit::new("id", x.clone(), vec![0, 1], vec![0, 1]).unwrap();
    let cad = EmbeddingSplit::new("cad", x + 1.0, vec![1, 0], vec![0, 1]).unwrap();
    let b = DatasetBundle::new("two", id.clone(), cad.clone(), id, cad, BTreeMap::new(), None).unwrap();
    assert_eq!(sample_counterfactual_subset(&b, 2, 9).unwrap(), vec![0, 1]);
    assert!(matches!(
        sample_counterfactual_subset(&b, 4, 9),
        Err(Error::InsufficientClassSamples { required: 2, available: 1, .. })
    ));
}

#[test]
fn missing_inputs_are_reported() {
    let b = small_bundle();
    let spec = ExperimentSpec::new(Variant::ExternalAugmentation, 60, 16);
    assert!(matches!(build_training_set(&b, &spec, 0), Err(Error::MissingExternalSplit)));

    let mut spec = ExperimentSpec::new(Variant::Original, 60, 16);
    spec.extra_originals = Some(61);
    assert!(matches!(build_training_set(&b, &spec, 0), Err(Error::MissingExtraPool(_))));
    let no_pool = generate(&SyntheticConfig {
        dim: 8,
        train_pairs: 20,
        test_pairs: 10,
        extra_pool: 0,
        ..Default::default()
    })
    .unwrap();
    let spec = ExperimentSpec::new(Variant::Original, 20, 4);
    assert!(matches!(build_training_set(&no_pool, &spec, 0), Err(Error::MissingExtraPool(_))));

    let mut spec = ExperimentSpec::new(Variant::ExternalAugmentation, 60, 16);
    spec.external_split = Some(external(5, 3));
    assert!(matches!(build_training_set(&b, &spec, 0), Err(Error::DimMismatch { .. })));

    for (k, n) in [(3, 60), (70, 60), (0, 60)] {
        let spec = ExperimentSpec::new(Variant::Paired, n, k);
        assert!(matches!(build_training_set(&b, &spec, 0), Err(Error::InvalidExperiment(_))), "k={k}");
    }
}

#[test]
fn single_seed_single_lambda_aggregate() {
    let b = small_bundle();
    let mut spec = ExperimentSpec::new(Variant::MeanOffset, 60, 8);
    spec.seeds = vec![0];
    spec.grid = Some(vec![1.0]);
    let r = run_experiment(&b, &spec).unwrap();
    assert_eq!(r.runs.len(), 1);
    assert_eq!(r.runs[0].lambda, 1.0);
    assert_eq!(r.aggregate.avg.mean, r.runs[0].accuracy_avg);
    assert_eq!(r.aggregate.avg.std, 0.0);
    assert_eq!(r.aggregate.seeds, vec![0]);
}

#[test]
fn runs_are_bitwise_reproducible_and_seed_isolated() {
    let b = small_bundle();
    let mut spec = ExperimentSpec::new(Variant::MeanOffsetRegression, 60, 8);
    spec.seeds = vec![1, 2, 3];
    let a = run_experiment(&b, &spec).unwrap();
    let again = run_experiment(&b, &spec).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&again).unwrap());
    assert_eq!(a.aggregate.avg.mean.to_bits(), again.aggregate.avg.mean.to_bits());
    let alone = run_seed(&b, &spec, 3).unwrap();
    assert_eq!(alone, a.runs[2]);

    for r in &a.runs {
        let ood_mean = r.accuracy_ood.values().sum::<f64>() / r.accuracy_ood.len() as f64;
        assert!((ood_mean - r.accuracy_ood_mean).abs() <= 1e-12);
        let avg = (r.accuracy_id + r.accuracy_cad + r.accuracy_ood_mean) / 3.0;
        assert!((avg - r.accuracy_avg).abs() <= 1e-12);
    }
    let mean = a.runs.iter().map(|r| r.accuracy_avg).sum::<f64>() / 3.0;
    let var = a.runs.iter().map(|r| (r.accuracy_avg - mean).powi(2)).sum::<f64>() / 2.0;
    assert!((a.aggregate.avg.mean - mean).abs() < 1e-15);
    assert!((a.aggregate.avg.std - var.sqrt()).abs() < 1e-15);
}

#[test]
fn sweep_cells_match_direct_runs_and_record_errors() {
    let b = small_bundle();
    let mut base = ExperimentSpec::new(Variant::MeanOffset, 60, 8);
    base.seeds = vec![0, 1];
    let table = k_sweep(&b, &base, &[Variant::MeanOffset], &[8, 40], None);
    let direct = run_experiment(&b, &base).unwrap();
    assert_eq!(table.get(Variant::MeanOffset, 8).unwrap().outcome.as_ref().unwrap(), &direct);
    let skewed = skewed_bundle();
    let mut spec = ExperimentSpec::new(Variant::Paired, 60, 4);
    spec.seeds = vec![0];
    let table = k_sweep(&skewed, &spec, &[Variant::Paired], &[40, 4], None);
    // Only 15 positive pairs, 20 needed.
    let err = table.get(Variant::Paired, 40).unwrap().outcome.as_ref().unwrap_err();
    assert_eq!(err.code, "InsufficientClassSamples");
    assert!(table.get(Variant::Paired, 4).unwrap().outcome.is_ok());
}

fn skewed_bundle() -> DatasetBundle {
    let mut rng = common::rng(40);
    let labels: Vec<u8> = (0..60).map(|i| (i % 4 == 0) as u8).collect();
    let x = common::normal_matrix(&mut rng, 60, 4);
    let links: Vec<i64> = (0..60).collect();
    let flip: Vec<u8> = labels.iter().map(|l| 1 - l).collect();
    let id = EmbeddingSplit::new("id", x.clone(), labels.clone(), links.clone()).unwrap();
    let cad = EmbeddingSplit::new("cad", -x.clone(), flip, links).unwrap();
    let ood = BTreeMap::from([("o".to_string(), EmbeddingSplit::unpaired("o", x, labels).unwrap())]);
    DatasetBundle::new("skewed", id.clone(), cad.clone(), id, cad, ood, None).unwrap()
}

#[test]
fn mean_offset_does_not_degrade_with_more_pairs() {
    let b = generate(&SyntheticConfig {
        train_pairs: 200,
        test_pairs: 100,
        ..Default::default()
    })
    .unwrap();
    let mut base = ExperimentSpec::new(Variant::MeanOffset, 200, 4);
    base.seeds = (0..50).collect();
    let t = k_sweep(&b, &base, &[Variant::MeanOffset], &[4, 16, 64], None);
    let cell = |k| t.get(Variant::MeanOffset, k).unwrap().outcome.as_ref().unwrap().aggregate.avg;
    let (lo, hi) = (cell(4), cell(64));
    let se = ((lo.std.powi(2) + hi.std.powi(2)) / 50.0).sqrt();
    assert!(hi.mean >= lo.mean - 2.0 * se, "k=4 {lo:?} k=64 {hi:?}");
    assert!(cell(16).mean >= lo.mean - 2.0 * se);
}
