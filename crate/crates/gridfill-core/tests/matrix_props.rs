//! Oracle and property tests for the matrix primitives: construction
//! validation, masked arithmetic, singular spectra, and approximate rank.

use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use gridfill_core::{
    approximate_rank, mae_missing, masked_residual, singular_values, DenseMatrix, MaskMatrix,
    MatrixError, ObservedMatrix, SingularSpectrum,
};

#[test]
fn construction_rejects_bad_shapes_and_values() {
    assert!(matches!(
        DenseMatrix::zeros(0, 3),
        Err(MatrixError::EmptyDimensions { .. })
    ));
    assert!(matches!(
        DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]),
        Err(MatrixError::ShapeMismatch { .. })
    ));
    assert!(matches!(
        DenseMatrix::from_rows(&[vec![1.0, f64::NAN]]),
        Err(MatrixError::NonFinite { .. })
    ));
    assert!(matches!(
        DenseMatrix::from_rows(&[vec![f64::INFINITY]]),
        Err(MatrixError::NonFinite { .. })
    ));
    assert!(matches!(
        MaskMatrix::from_rows(&[vec![0, 2]]),
        Err(MatrixError::InvalidMaskBit { .. })
    ));
}

#[test]
#[should_panic]
fn set_rejects_non_finite() {
    let mut m = DenseMatrix::zeros(2, 2).unwrap();
    m.set(0, 0, f64::NAN);
}

#[test]
fn transpose_is_an_involution() {
    let m = DenseMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
    let back = m.transposed().transposed();
    assert_eq!(m.array(), back.array());
    assert_eq!(m.transposed().get(2, 1), 6.0);
}

#[test]
fn frobenius_and_mean_abs_oracles() {
    let m = DenseMatrix::from_rows(&[vec![3.0, -4.0]]).unwrap();
    assert_abs_diff_eq!(m.frobenius_norm(), 5.0, epsilon = 1e-15);
    assert_abs_diff_eq!(m.mean_abs(), 3.5, epsilon = 1e-15);
}

#[test]
fn mask_counts_are_complementary() {
    let mask = MaskMatrix::from_fn(7, 5, |i, j| (i + j) % 3 != 0).unwrap();
    assert_eq!(mask.count_missing() + mask.count_observed(), 35);
    let dense = mask.to_f64();
    let ones: f64 = dense.iter().sum();
    assert_eq!(ones as usize, mask.count_observed());
}

#[test]
fn fully_missing_row_detection() {
    let mask = MaskMatrix::from_rows(&[vec![1, 1], vec![0, 0], vec![1, 0]]).unwrap();
    assert!(mask.has_fully_missing_row());
    let mask = MaskMatrix::from_rows(&[vec![1, 0], vec![0, 1]]).unwrap();
    assert!(!mask.has_fully_missing_row());
}

#[test]
fn observed_matrix_zeroes_masked_positions() {
    let values = DenseMatrix::from_rows(&[vec![1.0, 9.0], vec![3.0, 4.0]]).unwrap();
    let mask = MaskMatrix::from_rows(&[vec![1, 0], vec![1, 1]]).unwrap();
    let observed = ObservedMatrix::new(values, mask).unwrap();
    assert_eq!(observed.values().get(0, 1), 0.0);
    assert_eq!(observed.values().get(0, 0), 1.0);
    assert_eq!(observed.values().get(1, 1), 4.0);
}

#[test]
fn observed_transpose_carries_the_mask() {
    let values = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
    let mask = MaskMatrix::from_rows(&[vec![1, 0], vec![1, 1]]).unwrap();
    let t = ObservedMatrix::new(values, mask).unwrap().transposed();
    assert!(!t.mask().is_observed(1, 0));
    assert_eq!(t.values().get(0, 1), 3.0);
}

#[test]
fn masked_residual_ignores_missing_cells() {
    let x = DenseMatrix::from_rows(&[vec![1.0, 100.0], vec![3.0, 4.0]]).unwrap();
    let m = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
    let mask = MaskMatrix::from_rows(&[vec![1, 0], vec![1, 1]]).unwrap();
    let r = masked_residual(&x, &m, &mask).unwrap();
    assert_eq!(r.frobenius_norm(), 0.0);
}

#[test]
fn singular_values_match_diagonal_oracle() {
    let m = DenseMatrix::from_rows(&[vec![3.0, 0.0], vec![0.0, -4.0]]).unwrap();
    let sv = singular_values(&m);
    assert_abs_diff_eq!(sv.values()[0], 4.0, epsilon = 1e-12);
    assert_abs_diff_eq!(sv.values()[1], 3.0, epsilon = 1e-12);
}

#[test]
fn spectrum_energy_equals_frobenius_norm() {
    let m = DenseMatrix::from_rows(&[vec![1.0, 2.0, 0.5], vec![-3.0, 4.0, 2.0]]).unwrap();
    let sv = singular_values(&m);
    let energy: f64 = sv.values().iter().map(|s| s * s).sum();
    assert_abs_diff_eq!(energy.sqrt(), m.frobenius_norm(), epsilon = 1e-12);
}

#[test]
fn approximate_rank_oracles() {
    // sqrt-energy fractions for [3, 4] (descending [4, 3]): r=1 covers 4/5.
    let spectrum = SingularSpectrum::new(vec![3.0, 4.0]);
    assert_eq!(approximate_rank(&spectrum, 0.8).unwrap(), 1);
    assert_eq!(approximate_rank(&spectrum, 0.81).unwrap(), 2);
    assert_eq!(approximate_rank(&spectrum, 1.0).unwrap(), 2);

    // A numerically rank-one matrix reports rank 1 even at beta = 1.
    let rank_one = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
    assert_eq!(approximate_rank(&singular_values(&rank_one), 1.0).unwrap(), 1);

    assert!(matches!(
        approximate_rank(&spectrum, 0.0),
        Err(MatrixError::InvalidBeta(_))
    ));
    assert!(matches!(
        approximate_rank(&spectrum, 1.2),
        Err(MatrixError::InvalidBeta(_))
    ));
    assert_eq!(
        approximate_rank(&SingularSpectrum::new(vec![0.0, 0.0]), 0.9).unwrap(),
        0
    );
}

#[test]
fn mae_missing_oracle_and_errors() {
    let truth = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
    let xhat = DenseMatrix::from_rows(&[vec![1.0, 2.5], vec![2.0, 4.0]]).unwrap();
    let mask = MaskMatrix::from_rows(&[vec![1, 0], vec![0, 1]]).unwrap();
    // missing cells err by 0.5 and 1.0
    assert_abs_diff_eq!(
        mae_missing(&xhat, &truth, &mask).unwrap(),
        0.75,
        epsilon = 1e-15
    );
    let all = MaskMatrix::ones(2, 2).unwrap();
    assert!(matches!(
        mae_missing(&xhat, &truth, &all),
        Err(MatrixError::NoMissingEntries)
    ));
}

proptest! {
    // Approximate rank never decreases as beta grows.
    #[test]
    fn approximate_rank_is_monotone_in_beta(
        values in proptest::collection::vec(0.01f64..100.0, 1..12),
        beta_lo in 0.05f64..1.0,
        beta_hi in 0.05f64..1.0,
    ) {
        let (lo, hi) = if beta_lo <= beta_hi { (beta_lo, beta_hi) } else { (beta_hi, beta_lo) };
        let spectrum = SingularSpectrum::new(values);
        let r_lo = approximate_rank(&spectrum, lo).unwrap();
        let r_hi = approximate_rank(&spectrum, hi).unwrap();
        prop_assert!(r_lo <= r_hi, "rank at beta={lo} is {r_lo}, at beta={hi} is {r_hi}");
    }

    // The masked residual never exceeds the unmasked difference.
    #[test]
    fn masked_residual_is_bounded_by_full_difference(
        seed_vals in proptest::collection::vec(-10.0f64..10.0, 12),
        mask_bits in proptest::collection::vec(any::<bool>(), 12),
    ) {
        let x = DenseMatrix::from_array(
            ndarray::Array2::from_shape_vec((3, 4), seed_vals.clone()).unwrap()
        ).unwrap();
        let m = DenseMatrix::zeros(3, 4).unwrap();
        let mask = MaskMatrix::from_fn(3, 4, |i, j| mask_bits[i * 4 + j]).unwrap();
        let masked = masked_residual(&x, &m, &mask).unwrap().frobenius_norm();
        prop_assert!(masked <= x.frobenius_norm() + 1e-12);
    }
}
