//! Class-level semantic similarity for classifier training and evaluation.
//!
//! Weight matrices built from instance labels, class-pair Likert ratings or a
//! taxonomy ([`weights`], [`taxonomy`]) feed a weighted cross-entropy
//! ([`loss`]) used to train small classifiers ([`trainer`]). Competing
//! classifiers are compared on how explicable their shared mistakes are
//! ([`metrics`]), and [`simulation`] maps the loss over a three-class simplex.

pub mod formats;
pub mod loss;
pub mod metrics;
pub mod simulation;
pub mod taxonomy;
pub mod trainer;
pub mod weights;

pub use loss::{LogitVector, ProbVector};
pub use taxonomy::{LabelMap, Taxonomy};
pub use weights::WeightMatrix;
