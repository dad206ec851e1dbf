use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mmc::baseline::baseline_regression_cluster;
use mmc::solver::{
    compute_embedding, init_model, irls_diag, kmeans_rows, update_cluster_weights,
    update_indicator, update_view_weights, ViewSystem,
};
use mmc::synth::{generate, SynthSpec};
use mmc::{
    accuracy, augment, fit, normalize_views, ClusterIndicator, CpWeights, FitConfig, IrlsState,
    MultiViewDataset, Partition,
};

fn acc(truth: &[usize], pred: &[usize]) -> f64 {
    accuracy(
        &Partition::new(truth.to_vec()).unwrap(),
        &Partition::new(pred.to_vec()).unwrap(),
    )
    .unwrap()
}

fn spec(n: usize, dims: Vec<usize>, separation: f64, seed: u64) -> SynthSpec {
    SynthSpec {
        n,
        k: 3,
        dims,
        separation,
        noise_views: 0,
        seed,
    }
}

#[test]
fn single_view_identity_cluster_factor_is_ridge_regression() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (n, d, k) = (20, 4, 3);
    let x = DMatrix::from_fn(d, n, |_, _| rng.random_range(-1.0..1.0));
    let z = augment(&MultiViewDataset::new(vec![x], None, None).unwrap());
    let w0 = DMatrix::from_fn(d + 1, k, |_, _| rng.random_range(-1.0..1.0));
    let w = CpWeights::new(vec![w0], DMatrix::identity(k, k)).unwrap();
    let f = DMatrix::from_fn(n, k, |_, _| rng.random_range(-1.0..1.0))
        .qr()
        .q();
    let f = ClusterIndicator::new(f).unwrap();
    let irls = IrlsState::from_weights(&w, 1e-12);
    let cfg = FitConfig {
        rank: k,
        gamma: 1.0,
        ..FitConfig::default()
    };
    let (wv, out) = update_view_weights(0, &z, &w, &f, &irls, &cfg).unwrap();
    assert!(out.converged);

    // (Z Zᵀ + γ P) W = Z F, solved densely.
    let zm = &z.views()[0];
    let p = irls_diag(&w.view_factors[0], 1e-12);
    let lhs = zm * zm.transpose() + DMatrix::from_diagonal(&p);
    let rhs = zm * f.matrix();
    let dense = lhs.clone().lu().solve(&rhs).unwrap();
    let residual = (&lhs * &wv - &rhs).norm() / rhs.norm();
    assert!(
        residual <= cfg.cg_tol,
        "normal-equation residual {residual:e}"
    );
    assert!((wv - dense).amax() < 1e-6);
}

#[test]
fn warm_start_beats_zero_start_at_equal_budget() {
    for seed in 0..10 {
        let d = generate(&spec(60, vec![5, 4], 3.0, seed)).unwrap();
        let z = augment(&normalize_views(&d).unwrap());
        let cfg = FitConfig {
            rank: 4,
            seed,
            ..FitConfig::default()
        };
        let (mut w, mut f) = init_model(&z, &cfg, 3).unwrap();
        let mut irls = IrlsState::from_weights(&w, cfg.irls_epsilon);
        for _ in 0..5 {
            for v in 0..2 {
                irls.refresh_view(v, &w);
                w.view_factors[v] = update_view_weights(v, &z, &w, &f, &irls, &cfg).unwrap().0;
            }
            irls.refresh_cluster(&w);
            w.cluster_factor = update_cluster_weights(&z, &w, &f, &irls, cfg.gamma).unwrap();
            f = update_indicator(&z, &w).unwrap();
        }
        irls.refresh_view(0, &w);
        let system = ViewSystem::new(0, &z, &w, &f, &irls, cfg.gamma).unwrap();
        let warm = DVector::from_column_slice(w.view_factors[0].as_slice());
        let zero = DVector::zeros(system.dim());
        for budget in [1, 3, 5] {
            let (_, a) = system.solve(warm.clone(), 1e-14, budget).unwrap();
            let (_, b) = system.solve(zero.clone(), 1e-14, budget).unwrap();
            assert!(
                a.relative_residual <= b.relative_residual,
                "seed {seed}, budget {budget}: warm {:e} vs zero {:e}",
                a.relative_residual,
                b.relative_residual
            );
        }
    }
}

#[test]
fn cluster_update_minimizes_its_surrogate() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for seed in 0..5 {
        let d = generate(&spec(40, vec![3, 4], 2.0, seed)).unwrap();
        let z = augment(&normalize_views(&d).unwrap());
        let cfg = FitConfig {
            rank: 4,
            seed,
            ..FitConfig::default()
        };
        let (mut w, f) = init_model(&z, &cfg, 3).unwrap();
        let irls = IrlsState::from_weights(&w, cfg.irls_epsilon);
        w.cluster_factor = update_cluster_weights(&z, &w, &f, &irls, cfg.gamma).unwrap();
        let pi = compute_embedding(&z, &w, None).unwrap();
        let p = irls.cluster().clone();
        let surrogate = |wk: &DMatrix<f64>| {
            let fit = (&pi * wk.transpose() - f.matrix()).norm_squared();
            let reg: f64 = (0..wk.nrows())
                .map(|i| p[i] * wk.row(i).norm_squared())
                .sum();
            fit + cfg.gamma * reg
        };
        let base = surrogate(&w.cluster_factor);
        for _ in 0..50 {
            let dir = DMatrix::from_fn(3, 4, |_, _| rng.random_range(-1.0..1.0));
            let step = dir.clone() * (1e-3 / dir.norm());
            assert!(surrogate(&(&w.cluster_factor + step)) >= base);
        }
    }
}

#[test]
fn pure_noise_gives_chance_accuracy() {
    let mut mean = 0.0;
    for seed in 0..50 {
        let d = generate(&spec(150, vec![5, 5], 0.0, seed)).unwrap();
        let cfg = FitConfig {
            rank: 5,
            max_outer_iters: 30,
            seed,
            ..FitConfig::default()
        };
        let report = fit(&d, 3, &cfg).unwrap();
        mean += acc(d.labels().unwrap(), &report.labels) / 50.0;
    }
    assert!((mean - 1.0 / 3.0).abs() <= 0.1, "mean ACC {mean}");
}

#[test]
fn well_separated_single_view_kmeans() {
    for seed in 0..5 {
        let d = generate(&spec(150, vec![6, 8, 4], 10.0, seed)).unwrap();
        for x in d.views() {
            let labels = kmeans_rows(&x.transpose(), 3, seed);
            let a = acc(d.labels().unwrap(), &labels);
            assert!(a >= 0.95, "seed {seed}: ACC {a}");
        }
    }
}

#[test]
fn baseline_recovers_separated_clusters() {
    let mut mean = 0.0;
    for seed in 0..20 {
        let d = generate(&spec(300, vec![10, 10, 10], 6.0, seed)).unwrap();
        let cfg = FitConfig {
            seed,
            ..FitConfig::default()
        };
        let report = baseline_regression_cluster(&d, 3, &cfg).unwrap();
        let mut prev = report.initial_objective;
        for j in report.objectives() {
            assert!(j <= prev + 1e-9 * prev.abs());
            prev = j;
        }
        mean += acc(d.labels().unwrap(), &report.labels) / 20.0;
    }
    assert!(mean >= 0.9, "mean ACC {mean}");
}

#[test]
fn orthonormality_held_through_a_fit() {
    let d = generate(&spec(50, vec![4, 3, 2], 3.0, 4)).unwrap();
    let cfg = FitConfig {
        rank: 3,
        max_outer_iters: 15,
        ..FitConfig::default()
    };
    let report = fit(&d, 3, &cfg).unwrap();
    assert!(report.indicator.orthonormality_error() < 1e-8);
    assert!(report.labels.iter().all(|&l| l < 3));
    for rec in &report.iterations {
        for (&res, &ok) in rec.cg_residuals.iter().zip(&rec.cg_converged) {
            assert!(!ok || res <= cfg.cg_tol);
        }
    }
}
