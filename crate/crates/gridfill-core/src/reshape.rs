//! Cut-column reshaping and its exact inverse.
//!
//! When every channel drops out at the same sampling instants, whole rows of
//! the observed matrix are missing and no column-space information survives
//! for them — a completion solver can say nothing about those rows. Cutting
//! each length-n1 column into n* segments of length L = n1/n* and laying the
//! segments out as separate columns turns each fully missing row into a
//! partially missing row of the L x (n2*n*) reshaped matrix, where the
//! segment correlation structure makes recovery possible again.

use crate::matrix::{DenseMatrix, MaskMatrix, MatrixError, ObservedMatrix};
use ndarray::Array2;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReshapeError {
    #[error("cut factor {n_star} does not divide the row count {n1}")]
    NotADivisor { n1: usize, n_star: usize },
    #[error("matrix is {rows}x{cols} but the plan expects {expected_rows}x{expected_cols}")]
    PlanShapeMismatch {
        rows: usize,
        cols: usize,
        expected_rows: usize,
        expected_cols: usize,
    },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// Describes one cut-column layout: original n1 x n2, cut factor n*, and the
/// segment length L = n1/n* (the reshaped row count). The reshaped matrix is
/// L x (n2 * n*). Keeping the plan alongside a reshaped matrix makes the
/// inverse exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReshapePlan {
    pub n1: usize,
    pub n2: usize,
    pub n_star: usize,
    pub seg_len: usize,
}

impl ReshapePlan {
    pub fn reshaped_rows(&self) -> usize {
        self.seg_len
    }

    pub fn reshaped_cols(&self) -> usize {
        self.n2 * self.n_star
    }
}

/// Picks the cut factor for an n1 x n2 matrix: the largest divisor n* of n1
/// whose segment length n1/n* is at least n2, or 1 when no divisor
/// qualifies (no reshape possible). Cutting as finely as the bound allows
/// turns each fully missing row into isolated missing entries spread across
/// many columns while the reshaped matrix still has at least as many rows
/// as the original had columns; equality (segment length exactly n2) is
/// deliberately allowed, e.g. a 6x2 matrix cuts into 3 segments of length 2.
pub fn select_cut_factor(n1: usize, n2: usize) -> usize {
    let mut best = 1;
    for d in 1..=n1 {
        if n1.is_multiple_of(d) && n1 / d >= n2 {
            best = best.max(d);
        }
    }
    best
}

/// The cut as one fused gather pass over values and mask together: output
/// entry (i, c) equals input entry (s*L + i, j) with j = c / n_star and
/// s = c % n_star (0-based).
///
/// Loop order is chosen for the tall shapes this transform exists for
/// (n1 >> n2): for each output row the n_star source row-chunks are read
/// sequentially, while the writes scatter only within the current output
/// row — a working set small enough to stay in the fastest cache. Moving
/// values and bits in one pass shares the index walk and keeps both source
/// rows hot. Each element is validity-checked as it moves (debug builds),
/// so the caller may assemble the result without rescanning it.
fn cut_parts(
    values: &Array2<f64>,
    bits: &Array2<u8>,
    n_star: usize,
    seg_len: usize,
) -> (Array2<f64>, Array2<u8>) {
    let n2 = values.ncols();
    let out_cols = n2 * n_star;
    let vstore = values.as_standard_layout();
    let vsrc = vstore.as_slice().expect("standard layout");
    let mstore = bits.as_standard_layout();
    let msrc = mstore.as_slice().expect("standard layout");
    let stride = seg_len * n2;
    let mut vout = vec![0.0f64; seg_len * out_cols];
    let mut mout = vec![0u8; seg_len * out_cols];
    for i in 0..seg_len {
        let vrow = &mut vout[i * out_cols..(i + 1) * out_cols];
        let mrow = &mut mout[i * out_cols..(i + 1) * out_cols];
        // Output positions j*n_star + s for s = 0..n_star are one
        // contiguous chunk per j; the strided source reads revisit the same
        // n_star rows for every j, so the whole source working set of the
        // row stays resident.
        let vchunks = vrow.chunks_exact_mut(n_star);
        let mchunks = mrow.chunks_exact_mut(n_star);
        for (j, (vchunk, mchunk)) in vchunks.zip(mchunks).enumerate() {
            // Source index (s*L + i)*n2 + j walks s with a fixed stride.
            let mut idx = i * n2 + j;
            for (vd, md) in vchunk.iter_mut().zip(mchunk) {
                let v = vsrc[idx];
                let b = msrc[idx];
                debug_assert!(
                    v.is_finite() && b <= 1 && (b == 1 || v == 0.0),
                    "reshape input violates the observed-matrix invariants"
                );
                *vd = v;
                *md = b;
                idx += stride;
            }
        }
    }
    (
        Array2::from_shape_vec((seg_len, out_cols), vout).expect("element count is unchanged"),
        Array2::from_shape_vec((seg_len, out_cols), mout).expect("element count is unchanged"),
    )
}

/// Exact inverse of [`cut_parts`]'s index map for a single array: output
/// entry (s*L + i, j) equals input entry (i, j*n_star + s). Same
/// access-order reasoning, mirrored: each input row i stays cache-resident
/// while the n_star destination rows are written sequentially.
fn uncut_axes<A: Copy + Default>(
    x: &Array2<A>,
    n_star: usize,
    seg_len: usize,
    n2: usize,
) -> Array2<A> {
    let in_cols = n2 * n_star;
    let src_store = x.as_standard_layout();
    let src = src_store.as_slice().expect("standard layout");
    let mut out = vec![A::default(); n_star * seg_len * n2];
    for i in 0..seg_len {
        let src_row = &src[i * in_cols..(i + 1) * in_cols];
        for s in 0..n_star {
            let dst_row = &mut out[(s * seg_len + i) * n2..(s * seg_len + i + 1) * n2];
            for (dst, &v) in dst_row.iter_mut().zip(src_row[s..].iter().step_by(n_star)) {
                *dst = v;
            }
        }
    }
    Array2::from_shape_vec((n_star * seg_len, n2), out).expect("element count is unchanged")
}

/// Cuts each column into `n_star` segments of length n1/n_star and lays the
/// segments out as columns: output entry (i, c) equals input entry
/// (s*L + i, j) with j = c / n_star and s = c % n_star (0-based). Values and
/// mask travel through the identical index permutation, so the entry
/// multiset and the missing count are preserved exactly.
pub fn ccrm_reshape(
    observed: &ObservedMatrix,
    n_star: usize,
) -> Result<(ObservedMatrix, ReshapePlan), ReshapeError> {
    let (n1, n2) = (observed.rows(), observed.cols());
    if n_star == 0 || n1 % n_star != 0 {
        return Err(ReshapeError::NotADivisor { n1, n_star });
    }
    let seg_len = n1 / n_star;
    let plan = ReshapePlan {
        n1,
        n2,
        n_star,
        seg_len,
    };
    // Values and mask travel through the identical permutation, so the
    // missing-entry zeros stay paired with their mask bits; the gather
    // itself validates each element in debug builds.
    let (values, bits) = cut_parts(
        observed.values().array(),
        observed.mask().bits(),
        n_star,
        seg_len,
    );
    Ok((ObservedMatrix::from_gathered(values, bits), plan))
}

/// Exact inverse of [`ccrm_reshape`]'s index map, applied to a dense matrix
/// (typically a completed reshaped matrix).
pub fn ccrm_inverse(x: &DenseMatrix, plan: &ReshapePlan) -> Result<DenseMatrix, ReshapeError> {
    if x.rows() != plan.reshaped_rows() || x.cols() != plan.reshaped_cols() {
        return Err(ReshapeError::PlanShapeMismatch {
            rows: x.rows(),
            cols: x.cols(),
            expected_rows: plan.reshaped_rows(),
            expected_cols: plan.reshaped_cols(),
        });
    }
    Ok(DenseMatrix::from_invariant_array(uncut_axes(
        x.array(),
        plan.n_star,
        plan.seg_len,
        plan.n2,
    )))
}

/// Inverse of the reshape permutation applied to a mask.
pub fn ccrm_inverse_mask(
    mask: &MaskMatrix,
    plan: &ReshapePlan,
) -> Result<MaskMatrix, ReshapeError> {
    if mask.rows() != plan.reshaped_rows() || mask.cols() != plan.reshaped_cols() {
        return Err(ReshapeError::PlanShapeMismatch {
            rows: mask.rows(),
            cols: mask.cols(),
            expected_rows: plan.reshaped_rows(),
            expected_cols: plan.reshaped_cols(),
        });
    }
    Ok(MaskMatrix::from_invariant_bits(uncut_axes(
        mask.bits(),
        plan.n_star,
        plan.seg_len,
        plan.n2,
    )))
}
