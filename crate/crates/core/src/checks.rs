//! Dual-path equivalence suites: the fast solver and metric code paths
//! against the brute-force oracles, on seeded random instances.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::data::{augment, AugmentedViews, MultiViewDataset};
use crate::error::Result;
use crate::metrics::{accuracy, nmi, Partition};
use crate::oracle;
use crate::solver::{
    apply_h, cluster_system_residual, compute_embedding, objective, predict_scores, procrustes,
    update_cluster_weights, ClusterIndicator, CpWeights, IrlsState,
};

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub cases: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    fn new(name: &'static str, cases: usize, max_error: f64, tolerance: f64) -> Self {
        Self {
            name,
            cases,
            max_error,
            tolerance,
            passed: max_error <= tolerance,
        }
    }
}

fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

fn random_instance(
    rng: &mut ChaCha8Rng,
    max_views: usize,
    max_dim: usize,
    max_k: usize,
    max_rank: usize,
) -> (AugmentedViews, CpWeights) {
    let v = rng.random_range(1..=max_views);
    let k = rng.random_range(1..=max_k);
    let r = rng.random_range(1..=max_rank);
    let n = rng.random_range(k.max(2)..=6);
    let dims: Vec<usize> = (0..v).map(|_| rng.random_range(1..=max_dim)).collect();
    let views = dims.iter().map(|&d| uniform(rng, d, n)).collect();
    let z = augment(&MultiViewDataset::new(views, None, None).expect("valid random views"));
    let w = CpWeights::new(
        dims.iter().map(|&d| uniform(rng, d + 1, r)).collect(),
        uniform(rng, k, r),
    )
    .expect("valid random factors");
    (z, w)
}

/// Factorized scores against `⟨𝒵_n ∘ e_k, 𝒲⟩` with `𝒲` materialized.
pub fn model_equivalence(seed: u64, cases: usize) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_err: f64 = 0.0;
    for _ in 0..cases {
        let (z, w) = random_instance(&mut rng, 3, 4, 3, 3);
        let fast = predict_scores(&z, &w)?;
        let full = oracle::materialize_cp(&w, oracle::DEFAULT_TENSOR_CAP)?;
        let slow = oracle::full_tensor_scores(&z, &full)?;
        max_err = max_err.max((fast - slow).amax());
    }
    Ok(CheckResult::new("model_equivalence", cases, max_err, 1e-10))
}

/// Matrix-free `H x` against the explicit Kronecker `H`.
pub fn operator_equivalence(seed: u64, cases: usize) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_err: f64 = 0.0;
    for _ in 0..cases {
        let m = rng.random_range(1..=6);
        let n = rng.random_range(1..=6);
        let r = rng.random_range(1..=6);
        let a = uniform(&mut rng, m, n);
        let b = uniform(&mut rng, n, r);
        let c = uniform(&mut rng, r, r);
        let d: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..2.0)).collect();
        let gamma = rng.random_range(0.0..1.0);
        let x = DVector::from_fn(m * r, |_, _| rng.random_range(-1.0..1.0));
        let fast = apply_h(&x, &a, &b, &c, &DVector::from_vec(d.clone()), gamma)?;
        let h = oracle::dense_h(&a, &b, &c, &d, gamma, oracle::DEFAULT_H_CAP)?;
        let slow = oracle::matmul(&h, &DMatrix::from_column_slice(m * r, 1, x.as_slice()));
        let scale = slow.norm().max(f64::MIN_POSITIVE);
        let err = (DMatrix::from_column_slice(m * r, 1, fast.as_slice()) - slow).norm() / scale;
        max_err = max_err.max(err);
    }
    Ok(CheckResult::new(
        "operator_equivalence",
        cases,
        max_err,
        1e-10,
    ))
}

/// `(Bᵀ ⊗ A) vec(X) = vec(A X B)`.
pub fn kron_vec_identity(seed: u64, cases: usize) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_err: f64 = 0.0;
    for _ in 0..cases {
        let (p, q, s, t) = (
            rng.random_range(1..=5),
            rng.random_range(1..=5),
            rng.random_range(1..=5),
            rng.random_range(1..=5),
        );
        let a = uniform(&mut rng, p, q);
        let x = uniform(&mut rng, q, s);
        let b = uniform(&mut rng, s, t);
        let lhs = &a * &x * &b;
        let kron = oracle::kron(&b.transpose(), &a);
        let rhs = oracle::matmul(&kron, &DMatrix::from_vec(q * s, 1, oracle::vec_of(&x)));
        let err = lhs
            .iter()
            .zip(rhs.iter())
            .map(|(l, r)| (l - r).abs())
            .fold(0.0, f64::max);
        max_err = max_err.max(err);
    }
    Ok(CheckResult::new("kron_vec_identity", cases, max_err, 1e-12))
}

/// Objective against the scalar-loop evaluation.
pub fn objective_equivalence(seed: u64, cases: usize) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_err: f64 = 0.0;
    for _ in 0..cases {
        let (z, w) = random_instance(&mut rng, 3, 4, 3, 3);
        let n = z.num_instances();
        let k = w.num_clusters();
        let f = uniform(&mut rng, n, k).qr().q();
        let gamma = rng.random_range(0.0..0.5);
        let fast = objective(&z, &w, &ClusterIndicator::new_unchecked(f.clone()), gamma)?;
        let slow = oracle::scalar_objective(&z, &w, &f, gamma);
        max_err = max_err.max((fast.total - slow).abs() / slow.abs().max(1.0));
    }
    Ok(CheckResult::new(
        "objective_equivalence",
        cases,
        max_err,
        1e-10,
    ))
}

/// Cluster-factor solve plugged back into its normal equation.
pub fn cluster_residual(seed: u64, cases: usize) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_err: f64 = 0.0;
    for _ in 0..cases {
        let (z, w) = random_instance(&mut rng, 3, 4, 3, 3);
        let f = uniform(&mut rng, z.num_instances(), w.num_clusters())
            .qr()
            .q();
        let gamma = rng.random_range(0.001..0.5);
        let irls = IrlsState::from_weights(&w, 1e-12);
        let fi = ClusterIndicator::new_unchecked(f.clone());
        let wk = update_cluster_weights(&z, &w, &fi, &irls, gamma)?;
        let pi = compute_embedding(&z, &w, None)?;
        let res = cluster_system_residual(&pi, &wk, &f, irls.cluster(), gamma);
        max_err = max_err.max(res / (1.0 + f.tr_mul(&pi).norm()));
    }
    Ok(CheckResult::new("cluster_residual", cases, max_err, 1e-8))
}

/// Procrustes beats random orthonormal candidates on `tr(FᵀA)`. The error
/// reported is the largest margin by which any candidate wins.
pub fn procrustes_optimality(seed: u64, cases: usize, candidates: usize) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let k = rng.random_range(1..=4);
        let n = rng.random_range(k..=8);
        let a = uniform(&mut rng, n, k);
        let f = procrustes(&a)?;
        let best = f.tr_mul(&a).trace();
        let orth = ClusterIndicator::new_unchecked(f).orthonormality_error();
        worst = worst.max(orth);
        for _ in 0..candidates {
            let g = DMatrix::from_fn(n, k, |_, _| rng.random_range(-1.0..1.0))
                .qr()
                .q();
            worst = worst.max(g.tr_mul(&a).trace() - best);
        }
    }
    Ok(CheckResult::new(
        "procrustes_optimality",
        cases,
        worst,
        1e-8,
    ))
}

/// Hungarian accuracy against exhaustive relabeling on every pair of
/// partitions of `n ≤ max_n` items.
pub fn accuracy_exhaustive(max_n: usize) -> Result<CheckResult> {
    let mut max_err: f64 = 0.0;
    let mut cases = 0;
    for n in 1..=max_n {
        let parts = oracle::all_partitions(n);
        for t in &parts {
            let tp = Partition::new(t.clone())?;
            for p in &parts {
                let pp = Partition::new(p.clone())?;
                let fast = accuracy(&tp, &pp)?;
                let slow = oracle::brute_force_accuracy(t, p);
                max_err = max_err.max((fast - slow).abs());
                cases += 1;
            }
        }
    }
    Ok(CheckResult::new("accuracy_exhaustive", cases, max_err, 0.0))
}

/// NMI against the entropy-identity recomputation on random partitions.
pub fn nmi_contingency(seed: u64, cases: usize) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_err: f64 = 0.0;
    for _ in 0..cases {
        let n = rng.random_range(1..=40);
        let kt = rng.random_range(1..=5);
        let kp = rng.random_range(1..=5);
        let t: Vec<usize> = (0..n).map(|_| rng.random_range(0..kt)).collect();
        let p: Vec<usize> = (0..n).map(|_| rng.random_range(0..kp)).collect();
        let fast = nmi(&Partition::new(t.clone())?, &Partition::new(p.clone())?)?;
        let slow = oracle::contingency_nmi(&t, &p);
        max_err = max_err.max((fast - slow).abs());
    }
    Ok(CheckResult::new("nmi_contingency", cases, max_err, 1e-12))
}

/// Every suite with its default sizes.
pub fn run_all(seed: u64) -> Result<Vec<CheckResult>> {
    Ok(vec![
        model_equivalence(seed, 200)?,
        operator_equivalence(seed, 100)?,
        kron_vec_identity(seed, 100)?,
        objective_equivalence(seed, 100)?,
        cluster_residual(seed, 100)?,
        procrustes_optimality(seed, 20, 1000)?,
        accuracy_exhaustive(6)?,
        nmi_contingency(seed, 200)?,
    ])
}
