//! Multilevel training of weighted support vector machines on imbalanced
//! binary data.
//!
//! Each class is coarsened separately into a hierarchy of k-NN affinity
//! graphs by algebraic-multigrid aggregation. A weighted SVM is tuned on the
//! coarsest level and then refined level by level on the fine points behind
//! the support vectors of the coarser model.

pub mod cli;
pub mod coarsening;
pub mod data;
pub mod error;
pub mod knn;
pub mod metrics;
pub mod multilevel;
pub mod sparse;
pub mod svm;
pub mod tuning;

pub use data::Dataset;
pub use error::{Error, Result};
pub use metrics::{compute_metrics, Metrics};
pub use svm::{ModelParams, TrainedModel};
