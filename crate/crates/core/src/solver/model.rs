use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{l21_norm, ClusterIndicator, CpWeights, FitConfig};
use crate::data::AugmentedViews;
use crate::error::{Error, Result};

/// Draw starting factors and an orthonormal indicator, deterministically
/// from `cfg.seed`.
pub fn init_model(
    z: &AugmentedViews,
    cfg: &FitConfig,
    k: usize,
) -> Result<(CpWeights, ClusterIndicator)> {
    let n = z.num_instances();
    if k == 0 || k > n {
        return Err(Error::TooManyClusters { k, n });
    }
    if cfg.rank == 0 {
        return Err(Error::Config("rank must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let s = cfg.init_scale;
    let r = cfg.rank;
    let mut uniform = |rows: usize| {
        let data: Vec<f64> = (0..rows * r).map(|_| rng.random_range(-s..=s)).collect();
        DMatrix::from_vec(rows, r, data)
    };
    let view_factors: Vec<_> = z.dims().into_iter().map(&mut uniform).collect();
    let cluster_factor = uniform(k);

    let gauss: Vec<f64> = (0..n * k).map(|_| rng.sample(StandardNormal)).collect();
    let q = DMatrix::from_vec(n, k, gauss).qr().q();
    let w = CpWeights::new(view_factors, cluster_factor)?;
    Ok((w, ClusterIndicator::new_unchecked(q)))
}

pub(crate) fn check_shapes(z: &AugmentedViews, w: &CpWeights) -> Result<()> {
    if z.num_views() != w.num_views() {
        return Err(Error::Shape(format!(
            "{} views but {} view factors",
            z.num_views(),
            w.num_views()
        )));
    }
    for (v, (zv, wv)) in z.views().iter().zip(&w.view_factors).enumerate() {
        if zv.nrows() != wv.nrows() {
            return Err(Error::Shape(format!(
                "view {v}: data has {} rows, factor has {}",
                zv.nrows(),
                wv.nrows()
            )));
        }
        if wv.ncols() != w.rank() {
            return Err(Error::Shape(format!("view factor {v} rank mismatch")));
        }
    }
    Ok(())
}

/// `Z^(v)ᵀ W^(v)` for every view.
pub(crate) fn view_projections(z: &AugmentedViews, w: &CpWeights) -> Vec<DMatrix<f64>> {
    z.views()
        .iter()
        .zip(&w.view_factors)
        .map(|(zv, wv)| zv.tr_mul(wv))
        .collect()
}

/// Hadamard product of all projections except `exclude`; all-ones if none remain.
pub(crate) fn hadamard_except(
    projections: &[DMatrix<f64>],
    exclude: Option<usize>,
    n: usize,
    r: usize,
) -> DMatrix<f64> {
    let mut pi = DMatrix::from_element(n, r, 1.0);
    for (v, p) in projections.iter().enumerate() {
        if Some(v) != exclude {
            pi.component_mul_assign(p);
        }
    }
    pi
}

/// The embedding `Π` (or `Π^(−v)` when `exclude = Some(v)`), shape `N × R`.
pub fn compute_embedding(
    z: &AugmentedViews,
    w: &CpWeights,
    exclude: Option<usize>,
) -> Result<DMatrix<f64>> {
    check_shapes(z, w)?;
    if let Some(v) = exclude {
        if v >= z.num_views() {
            return Err(Error::ViewIndex {
                index: v,
                views: z.num_views(),
            });
        }
    }
    let proj = view_projections(z, w);
    Ok(hadamard_except(&proj, exclude, z.num_instances(), w.rank()))
}

/// Cluster scores `F̂ = Π W^(V+1)ᵀ`, shape `N × K`.
pub fn predict_scores(z: &AugmentedViews, w: &CpWeights) -> Result<DMatrix<f64>> {
    let pi = compute_embedding(z, w, None)?;
    Ok(pi * w.cluster_factor.transpose())
}

/// Objective value split into its data-fit and ℓ2,1 parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    pub total: f64,
    pub fit: f64,
    pub reg: f64,
}

/// `‖Π W^(V+1)ᵀ − F‖²_F + γ Σ_{v=1}^{V+1} ‖W^(v)‖_{2,1}`.
pub fn objective(
    z: &AugmentedViews,
    w: &CpWeights,
    f: &ClusterIndicator,
    gamma: f64,
) -> Result<Objective> {
    let scores = predict_scores(z, w)?;
    let f = f.matrix();
    if scores.shape() != f.shape() {
        return Err(Error::Shape(format!(
            "scores are {:?} but indicator is {:?}",
            scores.shape(),
            f.shape()
        )));
    }
    let fit = (scores - f).norm_squared();
    let reg = gamma * w.factors().map(l21_norm).sum::<f64>();
    Ok(Objective {
        total: fit + reg,
        fit,
        reg,
    })
}
