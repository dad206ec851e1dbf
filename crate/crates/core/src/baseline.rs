//! Single linear regression clustering on the concatenated views.
//!
//! Minimizes `‖Zᵀ W − F‖²_F + γ ‖W‖²_F` subject to `FᵀF = I`, where `Z`
//! stacks every normalized view and one shared constant row. Only linear
//! (first-order) features are available, so no cross-view products enter.

use std::time::Instant;

use nalgebra::DMatrix;

use crate::data::{normalize_views, MultiViewDataset};
use crate::error::{Error, Result};
use crate::solver::{
    extract_labels, procrustes, relative_change, ClusterIndicator, CpWeights, FitConfig, FitReport,
    IterationRecord,
};

fn stacked(d: &MultiViewDataset) -> Result<DMatrix<f64>> {
    let norm = normalize_views(d)?;
    let rows: usize = norm.dims().iter().sum::<usize>() + 1;
    let n = norm.num_instances();
    let mut z = DMatrix::zeros(rows, n);
    let mut offset = 0;
    for x in norm.views() {
        z.rows_mut(offset, x.nrows()).copy_from(x);
        offset += x.nrows();
    }
    z.row_mut(offset).fill(1.0);
    Ok(z)
}

struct Terms {
    total: f64,
    fit: f64,
    reg: f64,
}

fn terms(z: &DMatrix<f64>, w: &DMatrix<f64>, f: &DMatrix<f64>, gamma: f64) -> Terms {
    let fit = (z.tr_mul(w) - f).norm_squared();
    let reg = gamma * w.norm_squared();
    Terms {
        total: fit + reg,
        fit,
        reg,
    }
}

/// Fit the baseline. `cfg.rank` is ignored: the weight matrix is
/// `(ΣD_v + 1) × K`, reported as a single view factor of rank `K` with an
/// identity cluster factor.
pub fn baseline_regression_cluster(
    d: &MultiViewDataset,
    k: usize,
    cfg: &FitConfig,
) -> Result<FitReport> {
    cfg.validate()?;
    let n = d.num_instances();
    if k == 0 || k > n {
        return Err(Error::TooManyClusters { k, n });
    }
    let start = Instant::now();
    let z = stacked(d)?;
    let rows = z.nrows();

    // Same RNG stream and orthonormalization as the MMC initializer.
    let init_cfg = FitConfig {
        rank: k,
        ..cfg.clone()
    };
    let aug = crate::data::AugmentedViews::from_matrices(vec![z.clone()])?;
    let (_, f0) = crate::solver::init_model(&aug, &init_cfg, k)?;
    let mut f = f0.into_matrix();

    // The ridge system never changes; factor it once.
    let mut gram = &z * z.transpose();
    for i in 0..rows {
        gram[(i, i)] += cfg.gamma;
    }
    let chol = gram.clone().cholesky();
    let solve = |rhs: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        match &chol {
            Some(c) => Ok(c.solve(rhs)),
            None => {
                let pinv = gram
                    .clone()
                    .pseudo_inverse(1e-12)
                    .map_err(|e| Error::NonFinite(e.to_string()))?;
                Ok(pinv * rhs)
            }
        }
    };

    let mut w = DMatrix::zeros(rows, k);
    let initial = terms(&z, &w, &f, cfg.gamma).total;
    let mut prev = initial;
    let mut records = Vec::new();
    let mut converged = false;
    for t in 0..cfg.max_outer_iters {
        let iter_start = Instant::now();
        w = solve(&(&z * &f))?;
        f = procrustes(&z.tr_mul(&w))?;
        let obj = terms(&z, &w, &f, cfg.gamma);
        if !obj.total.is_finite() {
            return Err(Error::NonFinite(format!(
                "baseline objective at iteration {t}"
            )));
        }
        records.push(IterationRecord {
            iteration: t,
            objective: obj.total,
            fit_term: obj.fit,
            reg_term: obj.reg,
            cg_iterations: vec![],
            cg_residuals: vec![],
            cg_converged: vec![],
            elapsed_secs: iter_start.elapsed().as_secs_f64(),
        });
        let change = relative_change(prev, obj.total);
        prev = obj.total;
        if change < cfg.outer_tol {
            converged = true;
            break;
        }
    }

    let indicator = ClusterIndicator::new_unchecked(f);
    let labels = extract_labels(&indicator, cfg.seed);
    let weights = CpWeights::new(vec![w], DMatrix::identity(k, k))?;
    Ok(FitReport {
        num_clusters: k,
        config: FitConfig {
            rank: k,
            ..cfg.clone()
        },
        initial_objective: initial,
        iterations: records,
        converged,
        weights,
        indicator,
        labels,
        total_secs: start.elapsed().as_secs_f64(),
    })
}
