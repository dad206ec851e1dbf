//! Matrix-free solve of the view-factor normal equations.
//!
//! With the other factors fixed, the optimality condition for `W^(v)` reads
//!
//! ```text
//! A (B ∗ ((B ∗ (Aᵀ X)) C)) + γ P X = E
//! A = Z^(v), B = Π^(−v), C = W^(V+1)ᵀ W^(V+1), P = P^(v),
//! E = Z^(v) (Π^(−v) ∗ (F W^(V+1)))
//! ```
//!
//! which is `H vec(X) = vec(E)` with
//! `H = I⊗γP + (I⊗A) diag(vec B) (Cᵀ⊗I) diag(vec B) (I⊗Aᵀ)`.
//! `H` is `(M R) × (M R)` and never formed; CG only needs the left-hand side.

use nalgebra::{DMatrix, DVector};

use super::model::{check_shapes, hadamard_except, view_projections};
use super::{ClusterIndicator, CpWeights, FitConfig, IrlsState};
use crate::data::AugmentedViews;
use crate::error::{Error, Result};

fn check_operands(
    x_len: usize,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d_diag: &DVector<f64>,
) -> Result<()> {
    let (m, n) = a.shape();
    let r = b.ncols();
    if b.nrows() != n || c.shape() != (r, r) || d_diag.len() != m || x_len != m * r {
        return Err(Error::Shape(format!(
            "H operands: A {:?}, B {:?}, C {:?}, D {}, x {}",
            a.shape(),
            b.shape(),
            c.shape(),
            d_diag.len(),
            x_len
        )));
    }
    Ok(())
}

fn apply_unchecked(
    x: &DMatrix<f64>,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d_diag: &DVector<f64>,
    gamma: f64,
) -> DMatrix<f64> {
    let mut t = a.tr_mul(x);
    t.component_mul_assign(b);
    let mut t = t * c;
    t.component_mul_assign(b);
    let mut y = a * t;
    let m = y.nrows();
    for (idx, (yi, xi)) in y.iter_mut().zip(x.iter()).enumerate() {
        *yi += gamma * d_diag[idx % m] * xi;
    }
    y
}

/// `H · x` without forming `H`. `x` is `vec(X)` for an `M × R` matrix `X`
/// stored column-major.
pub fn apply_h(
    x: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d_diag: &DVector<f64>,
    gamma: f64,
) -> Result<DVector<f64>> {
    check_operands(x.len(), a, b, c, d_diag)?;
    let xm = DMatrix::from_column_slice(a.nrows(), b.ncols(), x.as_slice());
    let y = apply_unchecked(&xm, a, b, c, d_diag, gamma);
    Ok(DVector::from_column_slice(y.as_slice()))
}

/// Result of one CG solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    /// `‖H x − e‖ / ‖e‖` at exit, recomputed from scratch.
    pub relative_residual: f64,
    pub converged: bool,
}

/// The linear system for one view factor.
#[derive(Debug, Clone)]
pub struct ViewSystem<'a> {
    pub a: &'a DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d_diag: DVector<f64>,
    pub gamma: f64,
    /// `vec(E)`.
    pub rhs: DVector<f64>,
}

impl<'a> ViewSystem<'a> {
    pub fn new(
        v: usize,
        z: &'a AugmentedViews,
        w: &CpWeights,
        f: &ClusterIndicator,
        irls: &IrlsState,
        gamma: f64,
    ) -> Result<Self> {
        check_shapes(z, w)?;
        let views = z.num_views();
        if v >= views {
            return Err(Error::ViewIndex { index: v, views });
        }
        let f = f.matrix();
        let (n, r) = (z.num_instances(), w.rank());
        if f.nrows() != n || f.ncols() != w.num_clusters() {
            return Err(Error::Shape(format!(
                "indicator is {:?}, expected {n}x{}",
                f.shape(),
                w.num_clusters()
            )));
        }
        let a = &z.views()[v];
        if irls.p_diags.len() != views + 1 || irls.p_diags[v].len() != a.nrows() {
            return Err(Error::Shape(format!("IRLS state does not match view {v}")));
        }
        let b = hadamard_except(&view_projections(z, w), Some(v), n, r);
        let wk = &w.cluster_factor;
        let c = wk.tr_mul(wk);
        let e = a * (f * wk).component_mul(&b);
        Ok(Self {
            a,
            b,
            c,
            d_diag: irls.p_diags[v].clone(),
            gamma,
            rhs: DVector::from_column_slice(e.as_slice()),
        })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows() * self.b.ncols()
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let xm = DMatrix::from_column_slice(self.a.nrows(), self.b.ncols(), x.as_slice());
        let y = apply_unchecked(&xm, self.a, &self.b, &self.c, &self.d_diag, self.gamma);
        DVector::from_column_slice(y.as_slice())
    }

    /// Diagonal of `H`: `γ p_i + C_rr Σ_n A_in² B_nr²`.
    pub fn diagonal(&self) -> DVector<f64> {
        let m = self.a.nrows();
        let r = self.b.ncols();
        let s = self.a.component_mul(self.a) * self.b.component_mul(&self.b);
        DVector::from_fn(m * r, |idx, _| {
            let (i, j) = (idx % m, idx / m);
            self.gamma * self.d_diag[i] + self.c[(j, j)] * s[(i, j)]
        })
    }

    pub fn relative_residual(&self, x: &DVector<f64>) -> f64 {
        let norm_e = self.rhs.norm();
        let res = (&self.rhs - self.apply(x)).norm();
        if norm_e == 0.0 {
            res
        } else {
            res / norm_e
        }
    }

    /// Jacobi-preconditioned CG from `x0`. Stops once the recomputed residual
    /// satisfies `‖H x − e‖ ≤ tol ‖e‖` or after `max_iters` iterations.
    pub fn solve(
        &self,
        x0: DVector<f64>,
        tol: f64,
        max_iters: usize,
    ) -> Result<(DVector<f64>, CgOutcome)> {
        let norm_e = self.rhs.norm();
        if norm_e == 0.0 {
            // H is SPD whenever γ > 0, so the solution is exactly zero.
            let x = DVector::zeros(self.dim());
            return Ok((
                x,
                CgOutcome {
                    iterations: 0,
                    relative_residual: 0.0,
                    converged: true,
                },
            ));
        }
        let target = tol * norm_e;
        let inv_diag = self.diagonal().map(|d| {
            if d > 0.0 && d.is_finite() {
                1.0 / d
            } else {
                1.0
            }
        });

        let mut x = x0;
        let mut iters = 0;
        let mut residual = &self.rhs - self.apply(&x);
        loop {
            let res_norm = residual.norm();
            if !res_norm.is_finite() {
                return Err(Error::NonFinite("CG residual".into()));
            }
            if res_norm <= target {
                return Ok((x, self.outcome(iters, res_norm / norm_e, true)));
            }
            if iters >= max_iters {
                return Ok((x, self.outcome(iters, res_norm / norm_e, false)));
            }

            // One CG cycle on the current residual; restarted cycles pick up
            // any drift between the recurred and the true residual.
            let mut zr = residual.component_mul(&inv_diag);
            let mut p = zr.clone();
            let mut rz = residual.dot(&zr);
            let mut stalled = false;
            while iters < max_iters {
                let q = self.apply(&p);
                let pq = p.dot(&q);
                if !pq.is_finite() {
                    return Err(Error::NonFinite("CG search direction".into()));
                }
                if pq <= 0.0 {
                    stalled = true;
                    break;
                }
                let alpha = rz / pq;
                x.axpy(alpha, &p, 1.0);
                residual.axpy(-alpha, &q, 1.0);
                iters += 1;
                if residual.norm() <= target {
                    break;
                }
                zr = residual.component_mul(&inv_diag);
                let rz_next = residual.dot(&zr);
                let beta = rz_next / rz;
                rz = rz_next;
                p *= beta;
                p += &zr;
            }
            residual = &self.rhs - self.apply(&x);
            if stalled {
                let res_norm = residual.norm();
                let ok = res_norm <= target;
                return Ok((x, self.outcome(iters, res_norm / norm_e, ok)));
            }
        }
    }

    fn outcome(&self, iterations: usize, relative_residual: f64, converged: bool) -> CgOutcome {
        CgOutcome {
            iterations,
            relative_residual,
            converged,
        }
    }
}

/// Re-solve `W^(v)` with everything else fixed, warm-started from the
/// current factor.
pub fn update_view_weights(
    v: usize,
    z: &AugmentedViews,
    w: &CpWeights,
    f: &ClusterIndicator,
    irls: &IrlsState,
    cfg: &FitConfig,
) -> Result<(DMatrix<f64>, CgOutcome)> {
    let system = ViewSystem::new(v, z, w, f, irls, cfg.gamma)?;
    let x0 = DVector::from_column_slice(w.view_factors[v].as_slice());
    let (x, outcome) = system.solve(x0, cfg.cg_tol, cfg.cg_max_iters)?;
    if x.iter().any(|e| !e.is_finite()) {
        return Err(Error::NonFinite(format!("view factor {v}")));
    }
    let (m, r) = w.view_factors[v].shape();
    Ok((DMatrix::from_column_slice(m, r, x.as_slice()), outcome))
}
