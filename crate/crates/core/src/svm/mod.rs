//! Weighted soft-margin SVM with a Gaussian kernel.

mod cache;
mod kernel;
mod model;
mod smo;

pub use cache::RowCache;
pub use kernel::rbf_kernel;
pub use model::{ModelParams, TrainedModel};
pub use smo::{train, train_with_stats, SolverConfig, SolverStats};
