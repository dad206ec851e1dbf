//! The multi-linear multi-view clustering model and its alternating solver.
//!
//! The weight tensor over `(D_1+1) × … × (D_V+1) × K` is never formed. It is
//! held as CP factors `W^(1..V)` (one per view, `(D_v+1) × R`) plus a cluster
//! factor `W^(V+1)` (`K × R`), and predictions go through the embedding
//! `Π = ∗_v Z^(v)ᵀ W^(v)` (an `N × R` Hadamard product).
//!
//! One outer iteration of [`fit`] refreshes the IRLS weights and re-solves
//! each view factor by matrix-free CG, then the cluster factor by per-row SPD
//! solves, then the indicator by orthogonal Procrustes. Every step minimizes
//! a majorizer of the objective, so the recorded objective trace is
//! non-increasing up to floating-point slack.

mod cg;
mod irls;
mod model;
mod updates;

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{augment, normalize_views, MultiViewDataset};
use crate::error::{Error, Result};
use crate::serde_mat;

pub use cg::{apply_h, update_view_weights, CgOutcome, ViewSystem};
pub use irls::{irls_diag, l21_norm};
pub use model::{compute_embedding, init_model, objective, predict_scores, Objective};
pub use updates::{cluster_system_residual, procrustes, update_cluster_weights, update_indicator};

/// Number of K-means restarts used when reading discrete labels off `F`.
pub const KMEANS_RESTARTS: usize = 20;

/// CP factors of the weight tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpWeights {
    /// `W^(v)`, shape `(D_v + 1) × R`. The last row holds the bias factors.
    #[serde(with = "serde_mat::vec")]
    pub view_factors: Vec<DMatrix<f64>>,
    /// `W^(V+1)`, shape `K × R`.
    #[serde(with = "serde_mat")]
    pub cluster_factor: DMatrix<f64>,
}

impl CpWeights {
    pub fn new(view_factors: Vec<DMatrix<f64>>, cluster_factor: DMatrix<f64>) -> Result<Self> {
        let w = Self {
            view_factors,
            cluster_factor,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.view_factors.is_empty() {
            return Err(Error::Shape("no view factors".into()));
        }
        let r = self.rank();
        if r == 0 {
            return Err(Error::Shape("rank must be at least 1".into()));
        }
        for (v, w) in self.view_factors.iter().enumerate() {
            if w.ncols() != r {
                return Err(Error::Shape(format!(
                    "view factor {v} has {} columns, expected rank {r}",
                    w.ncols()
                )));
            }
        }
        if self.cluster_factor.ncols() != r {
            return Err(Error::Shape(format!(
                "cluster factor has {} columns, expected rank {r}",
                self.cluster_factor.ncols()
            )));
        }
        let finite = self
            .view_factors
            .iter()
            .chain(std::iter::once(&self.cluster_factor))
            .all(|m| m.iter().all(|x| x.is_finite()));
        if !finite {
            return Err(Error::NonFinite("CP factors".into()));
        }
        Ok(())
    }

    pub fn rank(&self) -> usize {
        self.cluster_factor.ncols()
    }

    pub fn num_views(&self) -> usize {
        self.view_factors.len()
    }

    pub fn num_clusters(&self) -> usize {
        self.cluster_factor.nrows()
    }

    /// Free parameters held by the factors: `R · (K + Σ_v (D_v + 1))`.
    pub fn num_params(&self) -> usize {
        self.view_factors
            .iter()
            .chain(std::iter::once(&self.cluster_factor))
            .map(|m| m.len())
            .sum()
    }

    /// All `V + 1` factors in order, cluster factor last.
    pub fn factors(&self) -> impl Iterator<Item = &DMatrix<f64>> {
        self.view_factors
            .iter()
            .chain(std::iter::once(&self.cluster_factor))
    }
}

/// The relaxed cluster indicator `F` (`N × K`, orthonormal columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClusterIndicator(#[serde(with = "serde_mat")] DMatrix<f64>);

impl ClusterIndicator {
    pub const ORTHONORMALITY_TOL: f64 = 1e-8;

    pub fn new(f: DMatrix<f64>) -> Result<Self> {
        if f.ncols() > f.nrows() {
            return Err(Error::TooManyClusters {
                k: f.ncols(),
                n: f.nrows(),
            });
        }
        let c = Self(f);
        let err = c.orthonormality_error();
        if !(err < Self::ORTHONORMALITY_TOL) {
            return Err(Error::Shape(format!(
                "indicator columns are not orthonormal (max |FᵀF - I| = {err:e})"
            )));
        }
        Ok(c)
    }

    /// Skip the orthonormality check; used for degenerate test inputs.
    pub fn new_unchecked(f: DMatrix<f64>) -> Self {
        Self(f)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn num_instances(&self) -> usize {
        self.0.nrows()
    }

    pub fn num_clusters(&self) -> usize {
        self.0.ncols()
    }

    /// `‖FᵀF − I‖∞` (largest absolute entry).
    pub fn orthonormality_error(&self) -> f64 {
        let k = self.0.ncols();
        let g = self.0.tr_mul(&self.0) - DMatrix::<f64>::identity(k, k);
        g.amax()
    }
}

/// IRLS weights `P^(1..V+1)` for the ℓ2,1 terms.
#[derive(Debug, Clone, PartialEq)]
pub struct IrlsState {
    pub p_diags: Vec<DVector<f64>>,
    pub epsilon: f64,
}

impl IrlsState {
    pub fn from_weights(w: &CpWeights, epsilon: f64) -> Self {
        Self {
            p_diags: w.factors().map(|m| irls_diag(m, epsilon)).collect(),
            epsilon,
        }
    }

    pub fn refresh_view(&mut self, v: usize, w: &CpWeights) {
        self.p_diags[v] = irls_diag(&w.view_factors[v], self.epsilon);
    }

    pub fn refresh_cluster(&mut self, w: &CpWeights) {
        let last = self.p_diags.len() - 1;
        self.p_diags[last] = irls_diag(&w.cluster_factor, self.epsilon);
    }

    pub fn cluster(&self) -> &DVector<f64> {
        self.p_diags
            .last()
            .expect("IRLS state holds V + 1 diagonals")
    }
}

/// Hyperparameters and solver controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    /// CP rank `R`.
    pub rank: usize,
    /// ℓ2,1 regularization weight `γ`.
    pub gamma: f64,
    pub max_outer_iters: usize,
    /// Stop once `|J_t − J_{t+1}| / max(J_t, 1e-30)` falls below this.
    pub outer_tol: f64,
    /// Relative residual target for the view-factor CG solves.
    pub cg_tol: f64,
    pub cg_max_iters: usize,
    /// Row-norm floor inside `p_ii = 1 / (2 max(‖w^i‖, ε))`.
    pub irls_epsilon: f64,
    pub seed: u64,
    /// Factors start i.i.d. uniform on `[-init_scale, init_scale]`.
    pub init_scale: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            rank: 10,
            gamma: 0.01,
            max_outer_iters: 100,
            outer_tol: 1e-6,
            cg_tol: 1e-8,
            cg_max_iters: 500,
            irls_epsilon: 1e-12,
            seed: 0,
            init_scale: 0.5,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::Config("rank must be at least 1".into()));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!(
                "gamma must be >= 0, got {}",
                self.gamma
            )));
        }
        if self.max_outer_iters == 0 || self.cg_max_iters == 0 {
            return Err(Error::Config("iteration limits must be positive".into()));
        }
        for (name, value) in [
            ("outer_tol", self.outer_tol),
            ("cg_tol", self.cg_tol),
            ("irls_epsilon", self.irls_epsilon),
            ("init_scale", self.init_scale),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::Config(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        Ok(())
    }
}

/// One completed outer iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub fit_term: f64,
    pub reg_term: f64,
    /// CG iterations spent on each view factor.
    pub cg_iterations: Vec<usize>,
    /// Final relative residual `‖H x − e‖ / ‖e‖` of each view solve.
    pub cg_residuals: Vec<f64>,
    /// Whether each view solve met `cg_tol`.
    pub cg_converged: Vec<bool>,
    pub elapsed_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub num_clusters: usize,
    pub config: FitConfig,
    /// Objective at the random initialization, before any update.
    pub initial_objective: f64,
    pub iterations: Vec<IterationRecord>,
    pub converged: bool,
    pub weights: CpWeights,
    pub indicator: ClusterIndicator,
    pub labels: Vec<usize>,
    pub total_secs: f64,
}

impl FitReport {
    pub fn objectives(&self) -> Vec<f64> {
        self.iterations.iter().map(|r| r.objective).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// The report with wall-clock fields zeroed, for reproducibility checks.
    pub fn without_timings(&self) -> Self {
        let mut r = self.clone();
        r.total_secs = 0.0;
        for it in &mut r.iterations {
            it.elapsed_secs = 0.0;
        }
        r
    }
}

/// Read discrete labels off the indicator by K-means on its rows.
pub fn extract_labels(f: &ClusterIndicator, seed: u64) -> Vec<usize> {
    kmeans_rows(f.matrix(), f.num_clusters(), seed)
}

/// K-means with `k` centers on the rows of `points`, same restarts and
/// seeding as [`extract_labels`].
pub fn kmeans_rows(points: &DMatrix<f64>, k: usize, seed: u64) -> Vec<usize> {
    crate::kmeans::kmeans(points, k.max(1), KMEANS_RESTARTS, seed).labels
}

/// Relative objective change used as the outer stopping rule.
pub(crate) fn relative_change(prev: f64, next: f64) -> f64 {
    (prev - next).abs() / prev.max(1e-30)
}

/// Run the full alternating minimization on a dataset.
pub fn fit(d: &MultiViewDataset, k: usize, cfg: &FitConfig) -> Result<FitReport> {
    cfg.validate()?;
    let n = d.num_instances();
    if k == 0 || k > n {
        return Err(Error::TooManyClusters { k, n });
    }
    let start = Instant::now();
    let z = augment(&normalize_views(d)?);
    let (mut w, mut f) = init_model(&z, cfg, k)?;
    let v_count = z.num_views();

    let initial = objective(&z, &w, &f, cfg.gamma)?;
    let mut prev = initial.total;
    let mut irls = IrlsState::from_weights(&w, cfg.irls_epsilon);
    let mut records = Vec::new();
    let mut converged = false;

    for t in 0..cfg.max_outer_iters {
        let iter_start = Instant::now();
        let mut cg_iterations = Vec::with_capacity(v_count);
        let mut cg_residuals = Vec::with_capacity(v_count);
        let mut cg_converged = Vec::with_capacity(v_count);
        for v in 0..v_count {
            irls.refresh_view(v, &w);
            let (wv, outcome) = update_view_weights(v, &z, &w, &f, &irls, cfg)?;
            if !outcome.converged {
                log::debug!(
                    "iteration {t}: view {v} CG stopped at {} iterations, residual {:e}",
                    outcome.iterations,
                    outcome.relative_residual
                );
            }
            w.view_factors[v] = wv;
            cg_iterations.push(outcome.iterations);
            cg_residuals.push(outcome.relative_residual);
            cg_converged.push(outcome.converged);
        }
        irls.refresh_cluster(&w);
        w.cluster_factor = update_cluster_weights(&z, &w, &f, &irls, cfg.gamma)?;
        f = update_indicator(&z, &w)?;
        let obj = objective(&z, &w, &f, cfg.gamma)?;
        if !obj.total.is_finite() {
            return Err(Error::NonFinite(format!("objective at iteration {t}")));
        }
        records.push(IterationRecord {
            iteration: t,
            objective: obj.total,
            fit_term: obj.fit,
            reg_term: obj.reg,
            cg_iterations,
            cg_residuals,
            cg_converged,
            elapsed_secs: iter_start.elapsed().as_secs_f64(),
        });
        log::debug!("iteration {t}: objective {:.12e}", obj.total);

        let change = relative_change(prev, obj.total);
        prev = obj.total;
        if change < cfg.outer_tol {
            converged = true;
            break;
        }
    }

    let labels = extract_labels(&f, cfg.seed);
    Ok(FitReport {
        num_clusters: k,
        config: cfg.clone(),
        initial_objective: initial.total,
        iterations: records,
        converged,
        weights: w,
        indicator: f,
        labels,
        total_secs: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn toy_dataset() -> MultiViewDataset {
        let a = DMatrix::from_fn(3, 12, |i, j| {
            ((i * 7 + j * 3) % 5) as f64 - 2.0 + (j % 3) as f64
        });
        let b = DMatrix::from_fn(2, 12, |i, j| {
            ((i + 2 * j) % 4) as f64 + 0.5 * (j % 3) as f64
        });
        MultiViewDataset::new(vec![a, b], None, None).unwrap()
    }

    #[test]
    fn param_count_matches_formula() {
        let w = CpWeights::new(
            vec![DMatrix::zeros(4, 3), DMatrix::zeros(6, 3)],
            DMatrix::zeros(2, 3),
        )
        .unwrap();
        assert_eq!(w.num_params(), 3 * (2 + 4 + 6));
    }

    #[test]
    fn rank_mismatch_rejected() {
        assert!(CpWeights::new(vec![DMatrix::zeros(4, 3)], DMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn indicator_checks_orthonormality() {
        assert!(ClusterIndicator::new(dmatrix![1.0, 0.0; 0.0, 1.0; 0.0, 0.0]).is_ok());
        assert!(ClusterIndicator::new(dmatrix![1.0, 1.0; 0.0, 1.0; 0.0, 0.0]).is_err());
        assert!(ClusterIndicator::new(dmatrix![1.0, 0.0]).is_err());
    }

    #[test]
    fn single_iteration_gives_single_record() {
        let cfg = FitConfig {
            rank: 3,
            max_outer_iters: 1,
            ..FitConfig::default()
        };
        let report = fit(&toy_dataset(), 2, &cfg).unwrap();
        assert_eq!(report.iterations.len(), 1);
        assert_eq!(report.labels.len(), 12);
    }

    #[test]
    fn fit_rejects_bad_inputs() {
        let d = toy_dataset();
        assert!(matches!(
            fit(&d, 13, &FitConfig::default()),
            Err(Error::TooManyClusters { .. })
        ));
        let cfg = FitConfig {
            rank: 0,
            ..FitConfig::default()
        };
        assert!(matches!(fit(&d, 2, &cfg), Err(Error::Config(_))));
        let cfg = FitConfig {
            cg_tol: 0.0,
            ..FitConfig::default()
        };
        assert!(fit(&d, 2, &cfg).is_err());
    }

    #[test]
    fn objective_trace_is_monotone_on_toy_data() {
        let cfg = FitConfig {
            rank: 4,
            seed: 3,
            ..FitConfig::default()
        };
        let report = fit(&toy_dataset(), 3, &cfg).unwrap();
        let mut prev = report.initial_objective;
        for j in report.objectives() {
            assert!(j <= prev * (1.0 + 1e-9), "{j} > {prev}");
            prev = j;
        }
    }

    #[test]
    fn report_json_roundtrip() {
        let cfg = FitConfig {
            rank: 2,
            max_outer_iters: 3,
            ..FitConfig::default()
        };
        let report = fit(&toy_dataset(), 2, &cfg).unwrap();
        let back = FitReport::from_json(&report.to_json().unwrap()).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn extract_labels_block_structure() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let f = ClusterIndicator::new(dmatrix![
            s, 0.0, 0.0;
            0.0, s, 0.0;
            0.0, 0.0, s;
            s, 0.0, 0.0;
            0.0, s, 0.0;
            0.0, 0.0, s
        ])
        .unwrap();
        let labels = extract_labels(&f, 1);
        assert_eq!(labels[0], labels[3]);
        assert_eq!(labels[1], labels[4]);
        assert_eq!(labels[2], labels[5]);
        let mut distinct = labels[..3].to_vec();
        distinct.sort();
        assert_eq!(distinct, vec![0, 1, 2]);
    }

    #[test]
    fn extract_labels_identity_is_permutation() {
        let f = ClusterIndicator::new(DMatrix::identity(4, 4)).unwrap();
        let mut labels = extract_labels(&f, 9);
        labels.sort();
        assert_eq!(labels, vec![0, 1, 2, 3]);
    }
}
