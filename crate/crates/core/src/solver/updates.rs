use nalgebra::{DMatrix, DVector};

use super::model::{check_shapes, compute_embedding};
use super::{ClusterIndicator, CpWeights, IrlsState};
use crate::data::AugmentedViews;
use crate::error::{Error, Result};

/// Solve `W Πᵀ Π + γ P W = Fᵀ Π` for the cluster factor.
///
/// `P` is diagonal, so row `k` decouples into the `R × R` SPD system
/// `(ΠᵀΠ + γ p_kk I) w_kᵀ = (Fᵀ Π)_kᵀ`.
pub fn update_cluster_weights(
    z: &AugmentedViews,
    w: &CpWeights,
    f: &ClusterIndicator,
    irls: &IrlsState,
    gamma: f64,
) -> Result<DMatrix<f64>> {
    check_shapes(z, w)?;
    let pi = compute_embedding(z, w, None)?;
    let f = f.matrix();
    let k = w.num_clusters();
    if f.nrows() != pi.nrows() || f.ncols() != k {
        return Err(Error::Shape(format!(
            "indicator is {:?}, expected {}x{k}",
            f.shape(),
            pi.nrows()
        )));
    }
    let p = irls.cluster();
    if p.len() != k {
        return Err(Error::Shape(
            "IRLS state does not match cluster factor".into(),
        ));
    }
    solve_cluster_rows(&pi, f, p, gamma)
}

fn solve_cluster_rows(
    pi: &DMatrix<f64>,
    f: &DMatrix<f64>,
    p: &DVector<f64>,
    gamma: f64,
) -> Result<DMatrix<f64>> {
    let r = pi.ncols();
    let gram = pi.tr_mul(pi);
    let rhs = f.tr_mul(pi);
    let jitter = {
        let t = gram.trace() / r as f64;
        if t > 0.0 {
            1e-10 * t
        } else {
            1e-10
        }
    };
    let mut out = DMatrix::zeros(f.ncols(), r);
    for k in 0..f.ncols() {
        let mut sys = gram.clone();
        for j in 0..r {
            sys[(j, j)] += gamma * p[k];
        }
        let chol = match sys.clone().cholesky() {
            Some(c) => c,
            None => {
                log::warn!("cluster row {k}: singular system, adding jitter {jitter:e}");
                for j in 0..r {
                    sys[(j, j)] += jitter;
                }
                sys.cholesky().ok_or(Error::Singular { row: k })?
            }
        };
        let sol = chol.solve(&rhs.row(k).transpose());
        if sol.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("cluster factor row {k}")));
        }
        out.set_row(k, &sol.transpose());
    }
    Ok(out)
}

/// Frobenius norm of `W ΠᵀΠ + γ P W − FᵀΠ`.
pub fn cluster_system_residual(
    pi: &DMatrix<f64>,
    wk: &DMatrix<f64>,
    f: &DMatrix<f64>,
    p: &DVector<f64>,
    gamma: f64,
) -> f64 {
    let lhs = wk * pi.tr_mul(pi) + DMatrix::from_diagonal(&(p * gamma)) * wk;
    (lhs - f.tr_mul(pi)).norm()
}

/// Nearest matrix with orthonormal columns: `U [I; 0] Vᵀ` from `A = U Λ Vᵀ`.
pub fn procrustes(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, k) = a.shape();
    if k > n {
        return Err(Error::TooManyClusters { k, n });
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("Procrustes input".into()));
    }
    // The polar factor of A = Q R is Q times the polar factor of the small
    // K×K triangle. nalgebra's bidiagonal SVD can return mismatched factors
    // on tall rank-deficient input, so every decomposition is checked.
    let qr = a.clone().qr();
    let (q, r) = (qr.q(), qr.r());
    let polar = small_polar(&r)
        .or_else(|| small_polar(&r.transpose()).map(|p| p.transpose()))
        .ok_or_else(|| Error::NonFinite("SVD failed to reconstruct its input".into()))?;
    Ok(q * polar)
}

fn small_polar(r: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let svd = r.clone().try_svd(true, true, f64::EPSILON, 0)?;
    let u = svd.u.as_ref()?;
    let v_t = svd.v_t.as_ref()?;
    let rebuilt = u * DMatrix::from_diagonal(&svd.singular_values) * v_t;
    let tol = 1e-8 * r.norm().max(f64::MIN_POSITIVE);
    ((rebuilt - r).norm() <= tol).then(|| u * v_t)
}

/// Closed-form indicator update from the current scores `Π W^(V+1)ᵀ`.
pub fn update_indicator(z: &AugmentedViews, w: &CpWeights) -> Result<ClusterIndicator> {
    let scores = super::predict_scores(z, w)?;
    Ok(ClusterIndicator::new_unchecked(procrustes(&scores)?))
}
