//! Last-observed-value persistence, the model-free baseline.

use super::SolverError;
use crate::matrix::{DenseMatrix, ObservedMatrix};

/// Fills each channel (column) by carrying its last observed value forward
/// in time; missing samples before the first observation are backfilled with
/// that first observed value. A channel with no observed samples at all is
/// an error ([`SolverError::AllMissingColumn`], 1-based column index).
///
/// On steady data this baseline is exact; it only degrades when values move
/// while a channel is dark, which is precisely when model-based recovery
/// earns its keep.
pub fn persistent_fill(observed: &ObservedMatrix) -> Result<DenseMatrix, SolverError> {
    let mask = observed.mask();
    let mut out = observed.values().array().clone();
    for j in 0..observed.cols() {
        let first = (0..observed.rows())
            .find(|&i| mask.is_observed(i, j))
            .ok_or(SolverError::AllMissingColumn { column: j + 1 })?;
        let mut last = out[(first, j)];
        for i in 0..observed.rows() {
            if mask.is_observed(i, j) {
                last = out[(i, j)];
            } else {
                out[(i, j)] = last;
            }
        }
    }
    Ok(DenseMatrix::from_array(out)?)
}
