//! Dual-ascent factorization solver.
//!
//! The estimate is factored as X = AᵀB where, for internal data shape
//! n1 x n2 (rows ≥ columns), A is n2 x n1 and B is n2 x n2. With a dual
//! matrix w supported on the observed set and E = (AᵀB − M) ⊙ I, one
//! iteration performs the sweeps
//!
//! ```text
//! A ← −B (w ⊙ I + ρE)ᵀ          (E from the current estimate)
//! B ← −A (w ⊙ I + ρE′)          (E′ re-evaluated with the new A)
//! w ← w + ρ ((AᵀB − M) ⊙ I)
//! ```
//!
//! and stops when successive estimates move less than `eps` in Frobenius
//! norm. Each A/B sweep substitutes the other factor into its own
//! zero-gradient condition, and the final step is gradient ascent on the
//! dual of the observed-entry constraints.
//!
//! Two start-up choices matter in practice and are part of the contract:
//!
//! * the dual starts at −M/σ₁ (observed data scaled to unit spectral norm)
//!   rather than zero. A stationary dual has unit spectral norm; starting
//!   from zero makes the first sweeps shrink both factors by a factor of ρ,
//!   then ramps the dual far past its stationary size, and the iteration
//!   blows up for any factor-initialization scale. The warm start removes
//!   that transient entirely and makes `init_scale` nearly irrelevant.
//! * the `eps` test only counts while the current iterate is near-feasible
//!   (see [`super::FEASIBLE_FRACTION`]): the start-up shrinkage — and, with a
//!   too-large step size, momentary lulls of an oscillating trajectory — make
//!   successive iterates close while the estimate is still far from the data,
//!   and stopping there would return garbage as if it had converged.

use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, Zip};
use std::time::{Duration, Instant};

use super::{
    sigma1_power, AdmmConfig, RecoveryResult, SolverError, SolverState, DIVERGENCE_CAP,
    FEASIBLE_FRACTION,
};
use crate::matrix::{DenseMatrix, ObservedMatrix};
use crate::rng::GaussianSource;

/// The dual-ascent solver, one iteration at a time.
///
/// [`admm_complete`] drives this to completion; tests can instead call
/// [`AdmmIteration::step`] directly and inspect [`AdmmIteration::state`].
pub struct AdmmIteration {
    /// Observed values, zeros at missing positions (internal orientation).
    m: Array2<f64>,
    /// Mask as 0.0/1.0.
    mask: Array2<f64>,
    a: Array2<f64>,
    b: Array2<f64>,
    w: Array2<f64>,
    /// Current estimate AᵀB.
    x: Array2<f64>,
    /// Previous estimate; doubles as scratch inside a step.
    x_prev: Array2<f64>,
    /// Scratch for (w ⊙ I + ρE).
    we: Array2<f64>,
    rho: f64,
    eps: f64,
    norm_m: f64,
    k: usize,
    converged: bool,
    transposed: bool,
    masked_residual: f64,
    history: Vec<f64>,
}

impl AdmmIteration {
    pub fn new(observed: &ObservedMatrix, config: &AdmmConfig) -> Result<Self, SolverError> {
        config.validate()?;
        if observed.mask().count_observed() == 0 {
            return Err(SolverError::DegenerateInput(
                "every entry is missing".into(),
            ));
        }
        let norm_m = observed.values().frobenius_norm();
        if norm_m == 0.0 {
            return Err(SolverError::DegenerateInput(
                "all observed entries are zero".into(),
            ));
        }
        let transposed = observed.rows() < observed.cols();
        let work = if transposed {
            observed.transposed()
        } else {
            observed.clone()
        };
        let m = work.values().array().clone();
        let mask = work.mask().to_f64();
        let sigma1 = sigma1_power(&m);
        if !(sigma1.is_finite() && sigma1 > 0.0) {
            return Err(SolverError::DegenerateInput(
                "spectral norm of the observed data is zero".into(),
            ));
        }
        let (n1, n2) = m.dim();
        let sd = config.init_scale / (n2 as f64).sqrt();
        let mut rng = GaussianSource::new(config.init_seed);
        let mut a = Array2::zeros((n2, n1));
        for v in a.iter_mut() {
            *v = sd * rng.next_gaussian();
        }
        let mut b = Array2::zeros((n2, n2));
        for v in b.iter_mut() {
            *v = sd * rng.next_gaussian();
        }
        let w = m.mapv(|v| -v / sigma1);
        let mut x = Array2::zeros((n1, n2));
        general_mat_mul(1.0, &a.t(), &b, 0.0, &mut x);
        let x_prev = x.clone();
        Ok(Self {
            m,
            mask,
            a,
            b,
            w,
            x,
            x_prev,
            we: Array2::zeros((n1, n2)),
            rho: config.rho,
            eps: config.eps,
            norm_m,
            k: 0,
            converged: false,
            transposed,
            masked_residual: f64::INFINITY,
            history: Vec::new(),
        })
    }

    /// Runs one full iteration (A sweep, B sweep, dual ascent) and returns
    /// the Frobenius distance between the new and previous estimates.
    pub fn step(&mut self) -> Result<f64, SolverError> {
        let rho = self.rho;
        // (w ⊙ I + ρE) from the current estimate
        Zip::from(&mut self.we)
            .and(&self.w)
            .and(&self.x)
            .and(&self.m)
            .and(&self.mask)
            .for_each(|we, &w, &x, &m, &i| *we = (w + rho * (x * i - m)) * i);
        general_mat_mul(-1.0, &self.b, &self.we.t(), 0.0, &mut self.a);
        // mid-sweep estimate with the new A and old B (x_prev is scratch
        // here; the previous estimate we still need lives in self.x)
        general_mat_mul(1.0, &self.a.t(), &self.b, 0.0, &mut self.x_prev);
        Zip::from(&mut self.we)
            .and(&self.w)
            .and(&self.x_prev)
            .and(&self.m)
            .and(&self.mask)
            .for_each(|we, &w, &x, &m, &i| *we = (w + rho * (x * i - m)) * i);
        general_mat_mul(-1.0, &self.a, &self.we, 0.0, &mut self.b);
        // new estimate and dual ascent on its masked residual
        general_mat_mul(1.0, &self.a.t(), &self.b, 0.0, &mut self.x_prev);
        let mut residual_sq = 0.0;
        let mut finite = true;
        let mut max_abs = 0.0f64;
        Zip::from(&mut self.w)
            .and(&self.x_prev)
            .and(&self.m)
            .and(&self.mask)
            .for_each(|w, &x, &m, &i| {
                let e = x * i - m;
                *w += rho * e;
                residual_sq += e * e;
                if !(x.is_finite() && w.is_finite()) {
                    finite = false;
                }
                max_abs = max_abs.max(x.abs());
            });
        self.k += 1;
        if !finite || max_abs > DIVERGENCE_CAP {
            return Err(SolverError::Divergence {
                iteration: self.k,
                rho,
            });
        }
        let mut diff_sq = 0.0;
        Zip::from(&self.x_prev).and(&self.x).for_each(|&new, &old| {
            let d = new - old;
            diff_sq += d * d;
        });
        let diff = diff_sq.sqrt();
        std::mem::swap(&mut self.x, &mut self.x_prev);
        self.masked_residual = residual_sq.sqrt();
        self.history.push(diff);
        if self.near_feasible() && diff < self.eps {
            self.converged = true;
        }
        Ok(diff)
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    /// Iterations performed so far.
    pub fn iterations(&self) -> usize {
        self.k
    }

    /// Whether the current iterate is close enough to the observed data for
    /// the stopping test to count (see [`FEASIBLE_FRACTION`]).
    pub fn near_feasible(&self) -> bool {
        self.masked_residual <= FEASIBLE_FRACTION * self.norm_m
    }

    /// ‖(X − M) ⊙ I‖_F of the current estimate (infinite before step 1).
    pub fn masked_residual(&self) -> f64 {
        self.masked_residual
    }

    /// Whether the input was transposed into internal orientation.
    pub fn is_transposed(&self) -> bool {
        self.transposed
    }

    pub fn residual_history(&self) -> &[f64] {
        &self.history
    }

    /// Snapshot of the factors and dual, in internal orientation.
    pub fn state(&self) -> SolverState {
        SolverState {
            a: self.a.clone(),
            b: self.b.clone(),
            w: self.w.clone(),
            k: self.k,
        }
    }

    /// Current estimate AᵀB, in the caller's orientation.
    pub fn current_estimate(&self) -> Array2<f64> {
        if self.transposed {
            self.x.t().to_owned()
        } else {
            self.x.clone()
        }
    }

    fn into_result(self, elapsed: Duration) -> Result<RecoveryResult, SolverError> {
        let x = if self.transposed {
            self.x.t().to_owned()
        } else {
            self.x
        };
        Ok(RecoveryResult {
            xhat: DenseMatrix::from_array(x)?,
            converged: self.converged,
            iterations: self.k,
            residual_history: self.history,
            elapsed,
        })
    }
}

/// Recovers the missing entries by dual-ascent factorization.
///
/// Returns `converged = false` when the iteration cap is reached without the
/// stopping test firing; divergence (non-finite or runaway iterates) is an
/// error naming the step size.
pub fn admm_complete(
    observed: &ObservedMatrix,
    config: &AdmmConfig,
) -> Result<RecoveryResult, SolverError> {
    let start = Instant::now();
    let mut iteration = AdmmIteration::new(observed, config)?;
    while !iteration.converged() && iteration.iterations() < config.k_max {
        iteration.step()?;
    }
    iteration.into_result(start.elapsed())
}
