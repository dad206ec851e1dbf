//! Multi-linear multi-view clustering.
//!
//! Each instance is seen through `V` views. Every view is augmented with a
//! constant feature, and the full-order interaction tensor between views is
//! regressed onto an orthonormal cluster indicator through a CP-factorized
//! weight tensor with row-sparse (ℓ2,1) factors. Fitting alternates between
//! matrix-free conjugate gradient solves for each view factor, per-row SPD
//! solves for the cluster factor, and an orthogonal Procrustes step for the
//! indicator.
//!
//! Modules:
//! - [`data`]: dataset ingestion, normalization and bias augmentation.
//! - [`solver`]: the model and its alternating minimization.
//! - [`metrics`]: clustering accuracy and normalized mutual information.
//! - [`synth`]: synthetic benchmark generators.
//! - [`baseline`]: single-regression clustering on concatenated views.
//! - [`oracle`]: slow brute-force reference implementations.
//! - [`checks`]: dual-path equivalence suites built on the oracles.

pub mod baseline;
pub mod checks;
pub mod data;
pub mod error;
pub mod metrics;
pub mod oracle;
pub mod solver;
pub mod synth;

mod kmeans;
mod serde_mat;

pub use data::{augment, load_dataset, normalize_views, AugmentedViews, MultiViewDataset};
pub use error::{Error, Result};
pub use metrics::{accuracy, nmi, optimal_label_matching, Partition};
pub use solver::{
    fit, ClusterIndicator, CpWeights, FitConfig, FitReport, IrlsState, IterationRecord,
};
