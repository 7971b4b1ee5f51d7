//! Dense matrices, 0/1 masks, mask algebra, spectra, and the recovery metric.
//!
//! Conventions used across the crate:
//!
//! * values are 64-bit reals and must stay finite — constructors reject
//!   NaN/infinity so downstream numerics never have to re-check;
//! * a [`MaskMatrix`] entry of 1 marks an observed position, 0 a missing one;
//! * an [`ObservedMatrix`] stores zero at every missing position, so the mask
//!   is the sole source of truth for missingness and a genuine zero
//!   measurement is represented as value 0 with mask 1.

use ndarray::Array2;
use thiserror::Error;

/// Errors from matrix construction and the metric operations.
#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("shape mismatch: {left_rows}x{left_cols} vs {right_rows}x{right_cols} ({context})")]
    ShapeMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
        context: &'static str,
    },
    #[error("matrix dimensions must be positive, got {rows}x{cols}")]
    EmptyDimensions { rows: usize, cols: usize },
    #[error("non-finite value {value} at ({row}, {col})")]
    NonFinite { row: usize, col: usize, value: f64 },
    #[error("mask entry at ({row}, {col}) is {value}, expected 0 or 1")]
    InvalidMaskBit { row: usize, col: usize, value: f64 },
    #[error("beta must lie in (0, 1], got {0}")]
    InvalidBeta(f64),
    #[error("metric undefined: the mask marks no entry as missing")]
    NoMissingEntries,
}

/// Dense row-major matrix of finite 64-bit reals.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    data: Array2<f64>,
}

impl DenseMatrix {
    /// All-zero matrix. Dimensions must be positive.
    pub fn zeros(rows: usize, cols: usize) -> Result<Self, MatrixError> {
        if rows == 0 || cols == 0 {
            return Err(MatrixError::EmptyDimensions { rows, cols });
        }
        Ok(Self {
            data: Array2::zeros((rows, cols)),
        })
    }

    /// Builds from nested rows, validating rectangularity and finiteness.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MatrixError> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if n_rows == 0 || n_cols == 0 {
            return Err(MatrixError::EmptyDimensions {
                rows: n_rows,
                cols: n_cols,
            });
        }
        let mut data = Array2::zeros((n_rows, n_cols));
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(MatrixError::ShapeMismatch {
                    left_rows: n_rows,
                    left_cols: n_cols,
                    right_rows: i + 1,
                    right_cols: row.len(),
                    context: "ragged row",
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(MatrixError::NonFinite {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
                data[(i, j)] = v;
            }
        }
        Ok(Self { data })
    }

    /// Wraps storage whose entries are already covered by this type's
    /// invariant — e.g. a permutation of an existing `DenseMatrix` — so no
    /// revalidation pass is needed.
    pub(crate) fn from_invariant_array(data: Array2<f64>) -> Self {
        debug_assert!(data.nrows() > 0 && data.ncols() > 0);
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Self { data }
    }

    /// Wraps an existing array, validating finiteness.
    pub fn from_array(data: Array2<f64>) -> Result<Self, MatrixError> {
        let (rows, cols) = data.dim();
        if rows == 0 || cols == 0 {
            return Err(MatrixError::EmptyDimensions { rows, cols });
        }
        for ((i, j), &v) in data.indexed_iter() {
            if !v.is_finite() {
                return Err(MatrixError::NonFinite {
                    row: i,
                    col: j,
                    value: v,
                });
            }
        }
        Ok(Self { data })
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[(row, col)]
    }

    /// Sets one entry. Panics on non-finite input; the finite-entries
    /// invariant is part of the type's contract.
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        assert!(
            value.is_finite(),
            "DenseMatrix entries must be finite, got {value}"
        );
        self.data[(row, col)] = value;
    }

    /// Borrow of the underlying storage for numeric kernels.
    pub fn array(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_array(self) -> Array2<f64> {
        self.data
    }

    /// Square root of the sum of squared entries.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Mean of |entry| over the whole matrix.
    pub fn mean_abs(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum::<f64>() / (self.rows() * self.cols()) as f64
    }

    /// Transposed copy.
    pub fn transposed(&self) -> Self {
        Self {
            data: self.data.t().to_owned(),
        }
    }
}

/// 0/1 mask; 1 = observed, 0 = missing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskMatrix {
    bits: Array2<u8>,
}

impl MaskMatrix {
    /// All-observed mask.
    pub fn ones(rows: usize, cols: usize) -> Result<Self, MatrixError> {
        if rows == 0 || cols == 0 {
            return Err(MatrixError::EmptyDimensions { rows, cols });
        }
        Ok(Self {
            bits: Array2::from_elem((rows, cols), 1),
        })
    }

    /// Builds from nested rows of 0/1 values.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self, MatrixError> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if n_rows == 0 || n_cols == 0 {
            return Err(MatrixError::EmptyDimensions {
                rows: n_rows,
                cols: n_cols,
            });
        }
        let mut bits = Array2::zeros((n_rows, n_cols));
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(MatrixError::ShapeMismatch {
                    left_rows: n_rows,
                    left_cols: n_cols,
                    right_rows: i + 1,
                    right_cols: row.len(),
                    context: "ragged mask row",
                });
            }
            for (j, &b) in row.iter().enumerate() {
                if b > 1 {
                    return Err(MatrixError::InvalidMaskBit {
                        row: i,
                        col: j,
                        value: b as f64,
                    });
                }
                bits[(i, j)] = b;
            }
        }
        Ok(Self { bits })
    }

    /// Wraps bits already known to be 0/1 and non-empty — e.g. a permutation
    /// of an existing mask — so no revalidation pass is needed.
    pub(crate) fn from_invariant_bits(bits: Array2<u8>) -> Self {
        debug_assert!(bits.nrows() > 0 && bits.ncols() > 0);
        debug_assert!(bits.iter().all(|&b| b <= 1));
        Self { bits }
    }

    /// Borrow of the raw bits for index-free kernels.
    pub(crate) fn bits(&self) -> &Array2<u8> {
        &self.bits
    }

    /// Builds by evaluating a predicate at every position (true = observed).
    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut observed: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self, MatrixError> {
        if rows == 0 || cols == 0 {
            return Err(MatrixError::EmptyDimensions { rows, cols });
        }
        Ok(Self {
            bits: Array2::from_shape_fn((rows, cols), |(i, j)| u8::from(observed(i, j))),
        })
    }

    pub fn rows(&self) -> usize {
        self.bits.nrows()
    }

    pub fn cols(&self) -> usize {
        self.bits.ncols()
    }

    pub fn is_observed(&self, row: usize, col: usize) -> bool {
        self.bits[(row, col)] == 1
    }

    pub fn count_missing(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 0).count()
    }

    pub fn count_observed(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    /// True if some row has every entry missing.
    pub fn has_fully_missing_row(&self) -> bool {
        (0..self.rows()).any(|i| (0..self.cols()).all(|j| !self.is_observed(i, j)))
    }

    /// Mask as an f64 array (1.0 observed / 0.0 missing) for Hadamard products.
    pub fn to_f64(&self) -> Array2<f64> {
        self.bits.map(|&b| f64::from(b))
    }
}

/// A value matrix paired with its mask; missing positions store zero.
///
/// The constructor zeroes masked-out positions, so the invariant holds by
/// construction no matter what the value source contained there.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedMatrix {
    values: DenseMatrix,
    mask: MaskMatrix,
}

impl ObservedMatrix {
    pub fn new(mut values: DenseMatrix, mask: MaskMatrix) -> Result<Self, MatrixError> {
        if values.rows() != mask.rows() || values.cols() != mask.cols() {
            return Err(MatrixError::ShapeMismatch {
                left_rows: values.rows(),
                left_cols: values.cols(),
                right_rows: mask.rows(),
                right_cols: mask.cols(),
                context: "values vs mask",
            });
        }
        for i in 0..values.rows() {
            for j in 0..values.cols() {
                if !mask.is_observed(i, j) {
                    values.set(i, j, 0.0);
                }
            }
        }
        Ok(Self { values, mask })
    }

    /// Assembles parts from a gather routine that validates every element
    /// as it moves it (finite values, 0/1 bits, zeros at missing
    /// positions), so not even debug builds rescan the data — only the
    /// shape agreement is debug-checked. Callers must check each element
    /// inline.
    pub(crate) fn from_gathered(values: Array2<f64>, bits: Array2<u8>) -> Self {
        debug_assert_eq!(values.dim(), bits.dim());
        debug_assert!(values.nrows() > 0 && values.ncols() > 0);
        Self {
            values: DenseMatrix { data: values },
            mask: MaskMatrix { bits },
        }
    }

    /// Treats a fully observed matrix as an ObservedMatrix with an all-ones mask.
    pub fn fully_observed(values: DenseMatrix) -> Self {
        let mask = MaskMatrix::ones(values.rows(), values.cols()).expect("non-empty");
        Self { values, mask }
    }

    pub fn values(&self) -> &DenseMatrix {
        &self.values
    }

    pub fn mask(&self) -> &MaskMatrix {
        &self.mask
    }

    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn cols(&self) -> usize {
        self.values.cols()
    }

    /// Transposed copy (values and mask).
    pub fn transposed(&self) -> Self {
        let values = self.values.transposed();
        let mask = MaskMatrix {
            bits: self.mask.bits.t().to_owned(),
        };
        Self { values, mask }
    }
}

/// Singular values sorted in descending order.
#[derive(Debug, Clone)]
pub struct SingularSpectrum {
    values: Vec<f64>,
}

impl SingularSpectrum {
    /// Builds from raw singular values; sorts descending and validates
    /// nonnegativity.
    pub fn new(mut values: Vec<f64>) -> Self {
        assert!(
            values.iter().all(|v| v.is_finite() && *v >= 0.0),
            "singular values must be finite and nonnegative"
        );
        values.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Relative threshold under which a singular value counts as zero:
/// sigma_i < 1e-12 * sigma_1. Floating-point SVDs of rank-deficient inputs
/// produce tiny positive values rather than exact zeros.
pub const SINGULAR_ZERO_REL_TOL: f64 = 1e-12;

/// Entrywise (X - M) ⊙ mask: the residual restricted to observed positions.
/// Zero at every missing position regardless of X and M.
pub fn masked_residual(
    x: &DenseMatrix,
    m: &DenseMatrix,
    mask: &MaskMatrix,
) -> Result<DenseMatrix, MatrixError> {
    if x.rows() != m.rows()
        || x.cols() != m.cols()
        || x.rows() != mask.rows()
        || x.cols() != mask.cols()
    {
        return Err(MatrixError::ShapeMismatch {
            left_rows: x.rows(),
            left_cols: x.cols(),
            right_rows: m.rows(),
            right_cols: m.cols(),
            context: "masked_residual operands",
        });
    }
    let mut out = Array2::zeros((x.rows(), x.cols()));
    for ((i, j), v) in out.indexed_iter_mut() {
        if mask.is_observed(i, j) {
            *v = x.get(i, j) - m.get(i, j);
        }
    }
    DenseMatrix::from_array(out)
}

/// Square root of the sum of squared entries.
pub fn frobenius_norm(x: &DenseMatrix) -> f64 {
    x.frobenius_norm()
}

/// Full singular spectrum, descending. Length = min(rows, cols).
pub fn singular_values(x: &DenseMatrix) -> SingularSpectrum {
    let (rows, cols) = (x.rows(), x.cols());
    let m = nalgebra::DMatrix::from_fn(rows, cols, |i, j| x.get(i, j));
    let svd = m.svd(false, false);
    SingularSpectrum::new(svd.singular_values.iter().copied().collect())
}

/// Smallest r such that the leading r singular values carry at least a
/// `beta` fraction of the Frobenius norm:
/// sqrt(sum_{i<=r} sigma_i^2) / sqrt(sum_i sigma_i^2) >= beta.
///
/// Singular values below [`SINGULAR_ZERO_REL_TOL`] * sigma_1 are treated as
/// zero and excluded, so `beta = 1.0` returns the count of nonzero singular
/// values. An all-zero spectrum yields 0.
pub fn approximate_rank(spectrum: &SingularSpectrum, beta: f64) -> Result<usize, MatrixError> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(MatrixError::InvalidBeta(beta));
    }
    let sigma1 = spectrum.values().first().copied().unwrap_or(0.0);
    if sigma1 <= 0.0 {
        return Ok(0);
    }
    let tol = SINGULAR_ZERO_REL_TOL * sigma1;
    let effective: Vec<f64> = spectrum
        .values()
        .iter()
        .copied()
        .filter(|s| *s >= tol)
        .collect();
    let total: f64 = effective.iter().map(|s| s * s).sum();
    if total <= 0.0 {
        return Ok(0);
    }
    let total_root = total.sqrt();
    let mut partial = 0.0;
    for (r, s) in effective.iter().enumerate() {
        partial += s * s;
        if partial.sqrt() / total_root >= beta {
            return Ok(r + 1);
        }
    }
    Ok(effective.len())
}

/// Mean absolute error over missing positions only:
/// sum over mask=0 of |X̂ - X| divided by the count of mask-0 positions.
/// Errors when the mask marks nothing as missing.
pub fn mae_missing(
    xhat: &DenseMatrix,
    x: &DenseMatrix,
    mask: &MaskMatrix,
) -> Result<f64, MatrixError> {
    if xhat.rows() != x.rows()
        || xhat.cols() != x.cols()
        || xhat.rows() != mask.rows()
        || xhat.cols() != mask.cols()
    {
        return Err(MatrixError::ShapeMismatch {
            left_rows: xhat.rows(),
            left_cols: xhat.cols(),
            right_rows: x.rows(),
            right_cols: x.cols(),
            context: "mae_missing operands",
        });
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            if !mask.is_observed(i, j) {
                sum += (xhat.get(i, j) - x.get(i, j)).abs();
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(MatrixError::NoMissingEntries);
    }
    Ok(sum / count as f64)
}
