//! Seeded synthetic bundles that mimic the structure of counterfactually
//! augmented sentiment data.
//!
//! Two orthonormal directions are drawn at random: a *causal* direction
//! `s` and a *spurious* direction `u`. With `y' = +1` for positives and
//! `-1` for negatives, an original is
//!
//! ```text
//! x = y' * signal * s + a * y' * spurious * u + noise * N(0, I)
//! ```
//!
//! where `a = +1` with probability `spurious_agreement` and `-1`
//! otherwise. Its counterfactual flips only the causal part:
//!
//! ```text
//! x_cf = x - 2 * y' * signal * s + edit_noise * N(0, I)
//! ```
//!
//! so in counterfactual test data the spurious feature points the wrong
//! way. OOD sets have weaker spurious agreement and a constant shift.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::embedset::{DatasetBundle, EmbeddingSplit, Provenance};
use crate::error::Result;
use crate::seeding;

#[derive(Debug, Clone, PartialEq)]
pub struct OodSpec {
    pub name: String,
    pub rows: usize,
    pub spurious_agreement: f64,
    /// Norm of the constant shift added to every row.
    pub shift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub dim: usize,
    pub train_pairs: usize,
    pub test_pairs: usize,
    pub extra_pool: usize,
    pub signal: f64,
    pub spurious: f64,
    pub spurious_agreement: f64,
    pub noise: f64,
    pub edit_noise: f64,
    pub ood: Vec<OodSpec>,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        let ood = |name: &str, spurious_agreement: f64, shift: f64| OodSpec {
            name: name.to_string(),
            rows: 400,
            spurious_agreement,
            shift,
        };
        Self {
            dim: 32,
            train_pairs: 400,
            test_pairs: 300,
            extra_pool: 800,
            signal: 1.0,
            spurious: 1.0,
            spurious_agreement: 0.8,
            noise: 1.0,
            edit_noise: 0.1,
            ood: vec![
                ood("shift_a", 0.5, 1.0),
                ood("shift_b", 0.3, 1.5),
                ood("shift_c", 0.6, 2.0),
            ],
            seed: 0,
        }
    }
}

struct Generator<'a> {
    cfg: &'a SyntheticConfig,
    causal: Array1<f64>,
    spurious: Array1<f64>,
}

fn gaussian<R: Rng>(rng: &mut R, d: usize) -> Array1<f64> {
    (0..d).map(|_| StandardNormal.sample(rng)).collect()
}

fn unit(v: Array1<f64>) -> Array1<f64> {
    let n = v.dot(&v).sqrt();
    v / n
}

impl<'a> Generator<'a> {
    fn new(cfg: &'a SyntheticConfig) -> Self {
        let mut rng = seeding::stream(cfg.seed, "synthetic", "directions");
        let causal = unit(gaussian(&mut rng, cfg.dim));
        let raw = gaussian(&mut rng, cfg.dim);
        let spurious = unit(&raw - &(&causal * causal.dot(&raw)));
        Self { cfg, causal, spurious }
    }

    fn sign(label: u8) -> f64 {
        if label == 1 {
            1.0
        } else {
            -1.0
        }
    }

    /// Balanced labels (alternating), originals, and optional
    /// counterfactuals.
    fn originals<R: Rng>(
        &self,
        rng: &mut R,
        rows: usize,
        agreement: f64,
        shift: Option<&Array1<f64>>,
    ) -> (Array2<f64>, Vec<u8>) {
        let d = self.cfg.dim;
        let mut x = Array2::zeros((rows, d));
        let labels: Vec<u8> = (0..rows).map(|i| (i % 2) as u8).collect();
        for (i, &label) in labels.iter().enumerate() {
            let y = Self::sign(label);
            let a = if rng.random::<f64>() < agreement { 1.0 } else { -1.0 };
            let mut row = gaussian(rng, d) * self.cfg.noise;
            row.scaled_add(y * self.cfg.signal, &self.causal);
            row.scaled_add(a * y * self.cfg.spurious, &self.spurious);
            if let Some(s) = shift {
                row += s;
            }
            x.row_mut(i).assign(&row);
        }
        (x, labels)
    }

    fn counterfactuals<R: Rng>(&self, rng: &mut R, x: &Array2<f64>, labels: &[u8]) -> Array2<f64> {
        let mut cf = x.clone();
        for (i, &label) in labels.iter().enumerate() {
            let mut row = cf.row_mut(i);
            row.scaled_add(-2.0 * Self::sign(label) * self.cfg.signal, &self.causal);
            row += &(gaussian(rng, self.cfg.dim) * self.cfg.edit_noise);
        }
        cf
    }

    fn paired(&self, tag: &str, rows: usize) -> Result<(EmbeddingSplit, EmbeddingSplit)> {
        let mut rng = seeding::stream(self.cfg.seed, "synthetic", tag);
        let (x, labels) = self.originals(&mut rng, rows, self.cfg.spurious_agreement, None);
        let cf = self.counterfactuals(&mut rng, &x, &labels);
        let links: Vec<i64> = (0..rows as i64).collect();
        let flipped = labels.iter().map(|l| 1 - l).collect();
        Ok((
            EmbeddingSplit::new(format!("id_{tag}"), x, labels, links.clone())?,
            EmbeddingSplit::new(format!("cad_{tag}"), cf, flipped, links)?,
        ))
    }
}

/// Builds the bundle described by `cfg`.
pub fn generate(cfg: &SyntheticConfig) -> Result<DatasetBundle> {
    let g = Generator::new(cfg);
    let (id_train, cad_train) = g.paired("train", cfg.train_pairs)?;
    let (id_test, cad_test) = g.paired("test", cfg.test_pairs)?;

    let mut ood_sets = BTreeMap::new();
    for o in &cfg.ood {
        let mut rng = seeding::stream(cfg.seed, "synthetic", &format!("ood/{}", o.name));
        let shift = unit(gaussian(&mut rng, cfg.dim)) * o.shift;
        let (x, labels) = g.originals(&mut rng, o.rows, o.spurious_agreement, Some(&shift));
        ood_sets.insert(o.name.clone(), EmbeddingSplit::unpaired(o.name.clone(), x, labels)?);
    }

    let extra_pool = if cfg.extra_pool > 0 {
        let mut rng = seeding::stream(cfg.seed, "synthetic", "extra");
        let (x, labels) = g.originals(&mut rng, cfg.extra_pool, cfg.spurious_agreement, None);
        Some(EmbeddingSplit::unpaired("extra_pool", x, labels)?)
    } else {
        None
    };

    let bundle = DatasetBundle::new(
        format!("synthetic-d{}-seed{}", cfg.dim, cfg.seed),
        id_train.with_name("id_train"),
        cad_train.with_name("cad_train"),
        id_test.with_name("id_test"),
        cad_test.with_name("cad_test"),
        ood_sets,
        extra_pool,
    )?;
    Ok(bundle.with_provenance(Provenance {
        encoder: Some("synthetic".into()),
        notes: Some(format!("{cfg:?}")),
        extra: BTreeMap::new(),
    }))
}

/// The planted causal and spurious directions of `cfg`.
pub fn planted_directions(cfg: &SyntheticConfig) -> (Array1<f64>, Array1<f64>) {
    let g = Generator::new(cfg);
    (g.causal, g.spurious)
}
