//! Curriculum learning engine.
//!
//! Samples are scored for easiness (by a trained model, by text statistics,
//! or by ensembles of either), a staircase pacing function decides how many
//! of them each epoch sees, and a greedy or probabilistic trainer picks
//! which ones. The [`harness`] module runs multi-trial comparisons.

pub mod data;
pub mod error;
pub mod harness;
pub mod nn;
pub mod pacing;
pub mod rng;
pub mod scores;
pub mod scoring_model;
pub mod scoring_text;
pub mod trainers;

pub use data::{Dataset, DatasetKind, Features, Sample};
pub use error::{Error, Result};
pub use rng::Rng;
pub use scores::{uniform_scores, ScoreVector};
