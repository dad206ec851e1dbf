use nalgebra::{DMatrix, DVector};

/// Sum of row 2-norms.
pub fn l21_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|row| row.norm()).sum()
}

/// IRLS diagonal for the ℓ2,1 term: `1 / (2 max(‖row i‖₂, ε))`.
pub fn irls_diag(w: &DMatrix<f64>, epsilon: f64) -> DVector<f64> {
    DVector::from_iterator(
        w.nrows(),
        w.row_iter()
            .map(|row| 1.0 / (2.0 * row.norm().max(epsilon))),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use proptest::prelude::*;

    #[test]
    fn three_four_five() {
        let p = irls_diag(&dmatrix![3.0, 4.0], 1e-12);
        assert!((p[0] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn zero_row_hits_guard() {
        let p = irls_diag(&dmatrix![0.0, 0.0; 1.0, 0.0], 1e-12);
        assert!((p[0] - 5e11).abs() < 1e-3);
        assert!((p[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn l21_of_rows() {
        assert!((l21_norm(&dmatrix![3.0, 4.0; 0.0, -2.0]) - 7.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn matches_guard_formula(values in prop::collection::vec(-5.0f64..5.0, 12)) {
            let w = DMatrix::from_vec(4, 3, values);
            let p = irls_diag(&w, 1e-12);
            for i in 0..4 {
                let norm = (0..3).map(|j| w[(i, j)] * w[(i, j)]).sum::<f64>().sqrt();
                let expected = 1.0 / (2.0 * norm.max(1e-12));
                prop_assert!(p[i] > 0.0 && p[i].is_finite());
                prop_assert!((p[i] - expected).abs() <= 1e-14 * expected.max(1.0));
            }
        }
    }
}
