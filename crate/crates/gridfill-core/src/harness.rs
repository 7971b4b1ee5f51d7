//! Monte Carlo experiment runner: MAE-versus-observed-probability grids and
//! the three-way burst comparison.
//!
//! Reproducibility contract: every trial's randomness derives from
//! (base_seed, cell_index, trial_index) through [`crate::rng::mix_seed`], so
//! results do not depend on execution order, thread count, or on how many
//! other trials run. Trials within a cell run in parallel and are collected
//! in index order.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::datagen::{
    apply_burst_mask, apply_random_mask, apply_row_mask, generate_synthetic, DatagenError,
    ScenarioSpec,
};
use crate::matrix::{mae_missing, DenseMatrix, MatrixError, ObservedMatrix};
use crate::reshape::{ccrm_inverse, ccrm_reshape, select_cut_factor, ReshapeError, ReshapePlan};
use crate::rng::mix_seed;
use crate::solvers::{
    admm_complete, als_complete, persistent_fill, AdmmConfig, AlsConfig, SolverError,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid benchmark grid: {0}")]
    InvalidGrid(String),
    #[error("invalid burst comparison: {0}")]
    InvalidBurst(String),
    #[error(transparent)]
    Datagen(#[from] DatagenError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Reshape(#[from] ReshapeError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// The recovery method a trial runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MethodId {
    Admm,
    Als,
    Persistent,
}

impl MethodId {
    pub const ALL: [MethodId; 3] = [MethodId::Admm, MethodId::Als, MethodId::Persistent];

    pub fn as_str(&self) -> &'static str {
        match self {
            MethodId::Admm => "admm",
            MethodId::Als => "als",
            MethodId::Persistent => "persistent",
        }
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "admm" => Ok(MethodId::Admm),
            "als" => Ok(MethodId::Als),
            "persistent" => Ok(MethodId::Persistent),
            other => Err(format!(
                "unknown method {other:?}; expected admm, als, or persistent"
            )),
        }
    }
}

/// How entries go missing in a Monte Carlo trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskRegime {
    /// Each entry observed independently with probability p.
    Entrywise,
    /// Each row (sampling instant) kept with probability p; dropped rows are
    /// fully missing. Direct completion cannot recover them, which is what
    /// the cut-column reshape exists to fix.
    Rows,
}

impl MaskRegime {
    pub fn as_str(&self) -> &'static str {
        match self {
            MaskRegime::Entrywise => "random",
            MaskRegime::Rows => "rows",
        }
    }
}

impl fmt::Display for MaskRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MaskRegime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(MaskRegime::Entrywise),
            "rows" => Ok(MaskRegime::Rows),
            other => Err(format!("unknown mask regime {other:?}; expected random or rows")),
        }
    }
}

/// Whether a trial inserts the cut-column reshape before the solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReshapeMode {
    /// Reshape exactly when the mask has a fully missing row, using
    /// [`select_cut_factor`].
    Auto,
    /// Never reshape (the control arm).
    Off,
    /// Always reshape with this cut factor (must divide the row count).
    Cut(usize),
}

impl ReshapeMode {
    /// The cut plan this mode produces for `observed`: `Off` yields none,
    /// `Auto` cuts by [`select_cut_factor`] exactly when some row is fully
    /// missing, and `Cut(k)` always requests k (divisibility is checked by
    /// the reshape itself). A resolved factor of 1 means no reshape.
    pub fn plan_for(&self, observed: &ObservedMatrix) -> Option<ReshapePlan> {
        let (n1, n2) = (observed.rows(), observed.cols());
        let n_star = match self {
            ReshapeMode::Off => return None,
            ReshapeMode::Auto => {
                if !observed.mask().has_fully_missing_row() {
                    return None;
                }
                select_cut_factor(n1, n2)
            }
            ReshapeMode::Cut(k) => *k,
        };
        if n_star <= 1 {
            return None;
        }
        Some(ReshapePlan {
            n1,
            n2,
            n_star,
            seg_len: n1 / n_star,
        })
    }
}

impl fmt::Display for ReshapeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReshapeMode::Auto => f.write_str("auto"),
            ReshapeMode::Off => f.write_str("off"),
            ReshapeMode::Cut(k) => write!(f, "n={k}"),
        }
    }
}

impl FromStr for ReshapeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(ReshapeMode::Auto),
            "off" => Ok(ReshapeMode::Off),
            other => {
                if let Some(num) = other.strip_prefix("n=") {
                    let k: usize = num.parse().map_err(|_| {
                        format!("bad cut factor {num:?}; expected a positive integer")
                    })?;
                    if k == 0 {
                        return Err("cut factor must be at least 1".into());
                    }
                    Ok(ReshapeMode::Cut(k))
                } else {
                    Err(format!(
                        "unknown reshape mode {other:?}; expected auto, off, or n=<k>"
                    ))
                }
            }
        }
    }
}

/// One Monte Carlo experiment: a scenario crossed with observation
/// probabilities and methods, `trials` trials per (method, probability)
/// cell.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkGrid {
    /// Scenario template. Its `seed` field is ignored here: each trial's
    /// ground truth is seeded from `base_seed` and the trial indices so the
    /// grid is reproducible from one number.
    pub scenario: ScenarioSpec,
    pub probabilities: Vec<f64>,
    pub methods: Vec<MethodId>,
    pub trials: usize,
    pub base_seed: u64,
    pub regime: MaskRegime,
    pub reshape: ReshapeMode,
}

impl BenchmarkGrid {
    /// Desk-scale default: the reference scenario, probabilities 0.50 to
    /// 0.95 in steps of 0.05, the two factorization methods, 50 trials per
    /// cell, entrywise masking, no reshape.
    pub fn desk_default() -> Self {
        Self {
            scenario: ScenarioSpec::default(),
            probabilities: (0..10).map(|i| 0.5 + 0.05 * i as f64).collect(),
            methods: vec![MethodId::Admm, MethodId::Als],
            trials: 50,
            base_seed: 1,
            regime: MaskRegime::Entrywise,
            reshape: ReshapeMode::Off,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.scenario.validate()?;
        if self.trials == 0 {
            return Err(HarnessError::InvalidGrid("trials must be at least 1".into()));
        }
        if self.probabilities.is_empty() {
            return Err(HarnessError::InvalidGrid(
                "probability list must not be empty".into(),
            ));
        }
        for &p in &self.probabilities {
            if !(0.0..=1.0).contains(&p) {
                return Err(HarnessError::InvalidGrid(format!(
                    "probability {p} outside [0, 1]"
                )));
            }
        }
        if self.methods.is_empty() {
            return Err(HarnessError::InvalidGrid(
                "method list must not be empty".into(),
            ));
        }
        if let ReshapeMode::Cut(k) = self.reshape {
            if k == 0 || !self.scenario.rows.is_multiple_of(k) {
                return Err(HarnessError::InvalidGrid(format!(
                    "cut factor {k} does not divide the row count {}",
                    self.scenario.rows
                )));
            }
        }
        Ok(())
    }
}

/// What one trial produced.
#[derive(Debug, Clone, PartialEq)]
pub enum TrialOutcome {
    Completed {
        mae: f64,
        iterations: usize,
        converged: bool,
        elapsed: Duration,
    },
    /// The mask came out with nothing missing (e.g. p = 1), so MAE is
    /// undefined; not a failure.
    NoMissingEntries,
    /// The solver or setup errored; the trial is excluded from statistics
    /// but counted.
    Failed { reason: String },
}

/// MAE statistics for one (method, scenario, observed-probability) cell.
///
/// `trials` counts the trials that enter the statistics; `per_trial` has
/// exactly that length and `mean` is its arithmetic mean. Excluded and
/// counted separately: solver errors (`failures`), runs that hit the
/// iteration cap without meeting the stopping criterion (`not_converged` —
/// their estimate exists but reflects no fixed point, so averaging it in
/// would corrupt the cell), and vacuous masks (`no_missing`).
#[derive(Debug, Clone, PartialEq)]
pub struct MaeStats {
    pub method: MethodId,
    pub scenario: String,
    pub observed_probability: f64,
    pub trials: usize,
    pub failures: usize,
    pub not_converged: usize,
    pub no_missing: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub per_trial: Vec<f64>,
}

impl MaeStats {
    fn from_outcomes(
        method: MethodId,
        scenario: &ScenarioSpec,
        observed_probability: f64,
        outcomes: &[TrialOutcome],
    ) -> Self {
        let mut per_trial = Vec::new();
        let mut failures = 0;
        let mut not_converged = 0;
        let mut no_missing = 0;
        for outcome in outcomes {
            match outcome {
                TrialOutcome::Completed {
                    mae,
                    converged: true,
                    ..
                } => per_trial.push(*mae),
                TrialOutcome::Completed {
                    converged: false, ..
                } => not_converged += 1,
                TrialOutcome::NoMissingEntries => no_missing += 1,
                TrialOutcome::Failed { .. } => failures += 1,
            }
        }
        let trials = per_trial.len();
        let (mean, min, max) = if trials == 0 {
            (f64::NAN, f64::NAN, f64::NAN)
        } else {
            let sum: f64 = per_trial.iter().sum();
            let min = per_trial.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = per_trial.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (sum / trials as f64, min, max)
        };
        Self {
            method,
            scenario: scenario_label(scenario),
            observed_probability,
            trials,
            failures,
            not_converged,
            no_missing,
            mean,
            min,
            max,
            per_trial,
        }
    }
}

/// Compact human/CSV label for a scenario.
pub fn scenario_label(spec: &ScenarioSpec) -> String {
    let event = match &spec.event {
        Some(e) => format!("event@{}", e.onset),
        None => "no-event".to_string(),
    };
    format!(
        "{}x{}-r{}-noise{}-{}",
        spec.rows, spec.cols, spec.signal_rank, spec.noise_var, event
    )
}

/// Seed-domain tags separating the independent random streams of one trial.
const DOMAIN_TRUTH: u64 = 1;
const DOMAIN_MASK: u64 = 2;
const DOMAIN_INIT: u64 = 3;

/// Runs one trial: generate truth, mask it at level `p` under `regime`,
/// optionally reshape, recover with `method`, and score MAE over the missing
/// entries against the truth. The outcome is fully determined by the
/// arguments; all randomness is derived from `trial_seed`.
///
/// Setup and solver errors tag the trial as [`TrialOutcome::Failed`] rather
/// than propagating, so a grid never aborts midway.
pub fn run_trial(
    spec: &ScenarioSpec,
    regime: MaskRegime,
    p: f64,
    method: MethodId,
    reshape: ReshapeMode,
    trial_seed: u64,
) -> TrialOutcome {
    match try_run_trial(spec, regime, p, method, reshape, trial_seed) {
        Ok(outcome) => outcome,
        Err(err) => TrialOutcome::Failed {
            reason: err.to_string(),
        },
    }
}

fn try_run_trial(
    spec: &ScenarioSpec,
    regime: MaskRegime,
    p: f64,
    method: MethodId,
    reshape: ReshapeMode,
    trial_seed: u64,
) -> Result<TrialOutcome, HarnessError> {
    let truth_spec = ScenarioSpec {
        seed: mix_seed(trial_seed, &[DOMAIN_TRUTH]),
        ..spec.clone()
    };
    let truth = generate_synthetic(&truth_spec)?;
    let mask_seed = mix_seed(trial_seed, &[DOMAIN_MASK]);
    let observed = match regime {
        MaskRegime::Entrywise => apply_random_mask(&truth, p, mask_seed)?,
        MaskRegime::Rows => apply_row_mask(&truth, p, mask_seed)?,
    };
    if observed.mask().count_missing() == 0 {
        return Ok(TrialOutcome::NoMissingEntries);
    }
    let init_seed = mix_seed(trial_seed, &[DOMAIN_INIT]);
    let (xhat, iterations, converged, elapsed) =
        recover(&observed, method, reshape, init_seed)?;
    let mae = mae_missing(&xhat, &truth, observed.mask())?;
    Ok(TrialOutcome::Completed {
        mae,
        iterations,
        converged,
        elapsed,
    })
}

/// Shared recovery path: optional reshape, method dispatch, inverse reshape.
/// Returns the estimate in the original orientation plus run metadata.
pub(crate) fn recover(
    observed: &ObservedMatrix,
    method: MethodId,
    reshape: ReshapeMode,
    init_seed: u64,
) -> Result<(DenseMatrix, usize, bool, Duration), HarnessError> {
    let plan = reshape.plan_for(observed);
    let work;
    let solver_input = match &plan {
        Some(plan) => {
            work = ccrm_reshape(observed, plan.n_star)?.0;
            &work
        }
        None => observed,
    };
    let (estimate, iterations, converged, elapsed) = match method {
        MethodId::Admm => {
            let config = AdmmConfig {
                init_seed,
                ..AdmmConfig::for_observed(solver_input)?
            };
            let result = admm_complete(solver_input, &config)?;
            (result.xhat, result.iterations, result.converged, result.elapsed)
        }
        MethodId::Als => {
            let config = AlsConfig {
                init_seed,
                ..AlsConfig::default()
            };
            let result = als_complete(solver_input, &config)?;
            (result.xhat, result.iterations, result.converged, result.elapsed)
        }
        MethodId::Persistent => {
            let start = Instant::now();
            let filled = persistent_fill(solver_input)?;
            (filled, 0, true, start.elapsed())
        }
    };
    let xhat = match &plan {
        Some(plan) => ccrm_inverse(&estimate, plan)?,
        None => estimate,
    };
    Ok((xhat, iterations, converged, elapsed))
}

/// Runs every (method, probability) cell of the grid. Cell order is
/// methods-major (all probabilities of the first method, then the next);
/// trial seeds are `mix_seed(base_seed, [cell_index, trial_index])`.
pub fn run_monte_carlo(grid: &BenchmarkGrid) -> Result<Vec<MaeStats>, HarnessError> {
    grid.validate()?;
    let mut stats = Vec::with_capacity(grid.methods.len() * grid.probabilities.len());
    for (m_idx, &method) in grid.methods.iter().enumerate() {
        for (p_idx, &p) in grid.probabilities.iter().enumerate() {
            let cell_index = (m_idx * grid.probabilities.len() + p_idx) as u64;
            let outcomes: Vec<TrialOutcome> = (0..grid.trials)
                .into_par_iter()
                .map(|trial| {
                    let trial_seed = mix_seed(grid.base_seed, &[cell_index, trial as u64]);
                    run_trial(&grid.scenario, grid.regime, p, method, grid.reshape, trial_seed)
                })
                .collect();
            stats.push(MaeStats::from_outcomes(
                method,
                &grid.scenario,
                p,
                &outcomes,
            ));
        }
    }
    Ok(stats)
}

/// Setup of the three-way burst comparison: the listed channels (1-based)
/// all go missing over the burst window, and the emitted table tabulates
/// truth and reconstructions over the trace window. Both windows are
/// 1-based inclusive instant ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct BurstScenario {
    pub channels: Vec<usize>,
    pub burst_start: usize,
    pub burst_end: usize,
    pub trace_start: usize,
    pub trace_end: usize,
}

impl Default for BurstScenario {
    fn default() -> Self {
        Self {
            channels: (1..=9).collect(),
            burst_start: 90,
            burst_end: 200,
            trace_start: 1,
            trace_end: 300,
        }
    }
}

/// Per-method summary of a burst comparison. `mae` is None when the burst
/// masked nothing (no channels), in which case MAE is undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct BurstMethodSummary {
    pub method: MethodId,
    pub mae: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub elapsed: Duration,
}

/// One row of the trace table: the truth and every method's reconstruction
/// at one (channel, instant) position. `recovered` is aligned with the
/// comparison's method list.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub channel: usize,
    pub instant: usize,
    pub truth: f64,
    pub recovered: Vec<f64>,
}

/// Full result of [`compare_methods`].
#[derive(Debug, Clone, PartialEq)]
pub struct BurstComparison {
    pub scenario: String,
    pub channels: Vec<usize>,
    pub burst: (usize, usize),
    pub trace_window: (usize, usize),
    pub methods: Vec<BurstMethodSummary>,
    pub rows: Vec<TraceRow>,
}

/// Runs all three methods on the same burst-masked realization of the
/// scenario (seeded by `spec.seed`) and tabulates truth plus the three
/// reconstructions for each masked channel over the trace window, with
/// per-method MAE over the burst. Solver errors propagate.
pub fn compare_methods(
    spec: &ScenarioSpec,
    burst: &BurstScenario,
) -> Result<BurstComparison, HarnessError> {
    let truth = generate_synthetic(spec)?;
    if burst.trace_start == 0 || burst.trace_start > burst.trace_end || burst.trace_end > spec.rows
    {
        return Err(HarnessError::InvalidBurst(format!(
            "trace window [{}, {}] invalid for 1..={}",
            burst.trace_start, burst.trace_end, spec.rows
        )));
    }
    let observed = if burst.channels.is_empty() {
        ObservedMatrix::fully_observed(truth.clone())
    } else {
        apply_burst_mask(&truth, &burst.channels, burst.burst_start, burst.burst_end)?
    };
    let mut methods = Vec::new();
    let mut estimates = Vec::new();
    for method in MethodId::ALL {
        let (xhat, iterations, converged, elapsed) =
            recover(&observed, method, ReshapeMode::Off, spec.seed)?;
        let mae = match mae_missing(&xhat, &truth, observed.mask()) {
            Ok(mae) => Some(mae),
            Err(MatrixError::NoMissingEntries) => None,
            Err(other) => return Err(other.into()),
        };
        methods.push(BurstMethodSummary {
            method,
            mae,
            iterations,
            converged,
            elapsed,
        });
        estimates.push(xhat);
    }
    let mut rows = Vec::new();
    for &channel in &burst.channels {
        for instant in burst.trace_start..=burst.trace_end {
            let (i, j) = (instant - 1, channel - 1);
            rows.push(TraceRow {
                channel,
                instant,
                truth: truth.get(i, j),
                recovered: estimates.iter().map(|x| x.get(i, j)).collect(),
            });
        }
    }
    Ok(BurstComparison {
        scenario: scenario_label(spec),
        channels: burst.channels.clone(),
        burst: (burst.burst_start, burst.burst_end),
        trace_window: (burst.trace_start, burst.trace_end),
        methods,
        rows,
    })
}
