use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use mmc::metrics::{accuracy, nmi, Partition};
use mmc::oracle;
use mmc::solver::{apply_h, compute_embedding, objective, predict_scores};
use mmc::{augment, ClusterIndicator, CpWeights, MultiViewDataset};

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0f64..1.0, rows * cols)
        .prop_map(move |v| DMatrix::from_vec(rows, cols, v))
}

/// Views, factors and an orthonormal indicator with consistent shapes.
fn instance() -> impl Strategy<Value = (Vec<DMatrix<f64>>, CpWeights, DMatrix<f64>)> {
    (
        prop::collection::vec(1usize..=4, 1..=3),
        1usize..=3,
        1usize..=3,
        3usize..=6,
    )
        .prop_flat_map(|(dims, k, r, n)| {
            let views: Vec<_> = dims.iter().map(|&d| matrix(d, n)).collect();
            let factors: Vec<_> = dims.iter().map(|&d| matrix(d + 1, r)).collect();
            (views, factors, matrix(k, r), matrix(n, k))
        })
        .prop_map(|(views, factors, cluster, g)| {
            let w = CpWeights::new(factors, cluster).unwrap();
            (views, w, g.qr().q())
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn factorized_scores_match_full_tensor((views, w, _) in instance()) {
        let z = augment(&MultiViewDataset::new(views, None, None).unwrap());
        let fast = predict_scores(&z, &w).unwrap();
        let full = oracle::materialize_cp(&w, oracle::DEFAULT_TENSOR_CAP).unwrap();
        let slow = oracle::full_tensor_scores(&z, &full).unwrap();
        prop_assert!((fast - slow).amax() < 1e-10);
    }

    #[test]
    fn objective_matches_scalar_loops((views, w, f) in instance(), gamma in 0.0f64..1.0) {
        let z = augment(&MultiViewDataset::new(views, None, None).unwrap());
        let fast = objective(&z, &w, &ClusterIndicator::new_unchecked(f.clone()), gamma).unwrap();
        let slow = oracle::scalar_objective(&z, &w, &f, gamma);
        prop_assert!((fast.total - slow).abs() <= 1e-10 * slow.abs().max(1.0));
        prop_assert!((fast.fit + fast.reg - fast.total).abs() < 1e-12);
    }

    #[test]
    fn embedding_matches_entrywise_products((views, w, _) in instance()) {
        let z = augment(&MultiViewDataset::new(views, None, None).unwrap());
        let pi = compute_embedding(&z, &w, None).unwrap();
        for n in 0..pi.nrows() {
            for r in 0..pi.ncols() {
                let mut prod = 1.0;
                for (zv, wv) in z.views().iter().zip(&w.view_factors) {
                    prod *= (0..zv.nrows()).map(|d| zv[(d, n)] * wv[(d, r)]).sum::<f64>();
                }
                prop_assert!((pi[(n, r)] - prod).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn operator_matches_dense_kronecker(
        (a, b, c, d, x) in (1usize..=6, 1usize..=6, 1usize..=6).prop_flat_map(|(m, n, r)| (
            matrix(m, n),
            matrix(n, r),
            matrix(r, r),
            prop::collection::vec(0.1f64..2.0, m),
            prop::collection::vec(-1.0f64..1.0, m * r),
        )),
        gamma in 0.0f64..1.0,
    ) {
        let x = DVector::from_vec(x);
        let fast = apply_h(&x, &a, &b, &c, &DVector::from_vec(d.clone()), gamma).unwrap();
        let h = oracle::dense_h(&a, &b, &c, &d, gamma, oracle::DEFAULT_H_CAP).unwrap();
        let slow = oracle::matmul(&h, &DMatrix::from_column_slice(x.len(), 1, x.as_slice()));
        let slow = DVector::from_column_slice(slow.as_slice());
        prop_assert!((&fast - &slow).norm() <= 1e-10 * slow.norm().max(f64::MIN_POSITIVE));
    }

    #[test]
    fn metrics_match_brute_force(
        pairs in prop::collection::vec((0usize..4, 0usize..4), 1..=7)
    ) {
        let (t, p): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
        let tp = Partition::new(t.clone()).unwrap();
        let pp = Partition::new(p.clone()).unwrap();
        prop_assert_eq!(accuracy(&tp, &pp).unwrap(), oracle::brute_force_accuracy(&t, &p));
        prop_assert!((nmi(&tp, &pp).unwrap() - oracle::contingency_nmi(&t, &p)).abs() < 1e-12);
    }
}
