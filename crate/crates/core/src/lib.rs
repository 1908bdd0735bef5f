//! Counterfactual data augmentation in a frozen sentence-embedding space.
//!
//! Given a few (original, counterfactual) embedding pairs, the crate fits
//! simple generators that map originals to counterfactual vectors, uses
//! them to augment a training set, trains L2-regularized logistic
//! regression on the result, and evaluates in-distribution, counterfactual
//! and out-of-distribution accuracy over many seeds.
//!
//! Modules, bottom-up:
//!
//! * [`embedset`]: embedding splits, bundles, EMB1/CSV/JSON I/O.
//! * [`transforms`]: Mean Offset, Mean Offset + Regression and ablations.
//! * [`classifier`]: logistic regression and cross-validated lambda.
//! * [`protocol`]: seeded experiment runs and aggregation.
//! * [`analysis`]: R², RMSE and diversity of generated vectors.
//! * [`jobs`]: JSON job configs and report files behind the `cfaug` binary.
//! * [`synthetic`]: seeded synthetic bundles with a planted spurious feature.

pub mod analysis;
pub mod classifier;
pub mod embedset;
mod error;
pub mod jobs;
pub mod linalg;
pub mod protocol;
pub mod seeding;
pub mod synthetic;
pub mod transforms;

pub use error::{Error, Result};
