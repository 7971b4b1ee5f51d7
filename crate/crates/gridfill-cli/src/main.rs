//! `gridfill` — command-line front end for the matrix-completion toolkit.
//!
//! Five verbs cover the full workflow:
//!
//! * `simulate`  — generate a synthetic low-rank sensor matrix (CSV).
//! * `mask`      — knock entries out of a matrix under one of three regimes.
//! * `complete`  — recover the missing entries of a partially observed
//!   matrix with the dual-ascent solver, alternating least squares, or a
//!   persistent fill, optionally routing through the cut-column reshape.
//! * `svdrank`   — print the singular spectrum and approximate rank.
//! * `benchmark` — run a Monte Carlo grid and emit the MAE statistics table.
//!
//! Matrices read and write as comma-separated numeric rows; a missing entry
//! is a blank (or NaN) field, or a 0 in a sidecar 0/1 mask file. Matrix
//! output goes to `--output` when given, otherwise to stdout; progress and
//! run summaries go to stderr.
//!
//! Exit codes: 0 success, 2 parameter error, 3 degenerate input, 4 solver
//! divergence, 5 I/O error.

use std::fmt::Display;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};

use gridfill_core::datagen::{
    apply_burst_mask, apply_random_mask, apply_row_mask, generate_synthetic, DatagenError,
    ScenarioSpec,
};
use gridfill_core::harness::{run_monte_carlo, BenchmarkGrid, HarnessError, MethodId, ReshapeMode};
use gridfill_core::io::{
    dense_csv_string, observed_csv_string, read_dense_csv, read_grid_config, read_matrix_csv,
    read_observed_with_sidecar, read_scenario_config, stats_csv_string, write_dense_csv,
    write_mask_csv, write_observed_csv, write_report, write_stats_csv, write_trials_csv, IoError,
    MissingPolicy, RunReport,
};
use gridfill_core::{
    admm_complete, als_complete, approximate_rank, ccrm_inverse, ccrm_reshape, clamp_observed,
    mae_missing, persistent_fill, singular_values, AdmmConfig, AlsConfig, DenseMatrix,
    MatrixError, ObservedMatrix, ReshapeError, ReshapePlan, SolverError,
};

// ---------------------------------------------------------------------------
// Exit-code policy
// ---------------------------------------------------------------------------

const EXIT_PARAMETER: u8 = 2;
const EXIT_DEGENERATE: u8 = 3;
const EXIT_DIVERGENCE: u8 = 4;
const EXIT_IO: u8 = 5;

/// A classified failure: the message for stderr plus the process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Display) -> Self {
        Self {
            code,
            message: message.to_string(),
        }
    }
}

impl From<IoError> for Failure {
    fn from(err: IoError) -> Self {
        let code = match &err {
            // Bad keys or values in a user-authored config file are
            // parameter errors; everything else is an I/O-domain failure
            // (unreadable file or malformed data).
            IoError::UnknownKey { .. } | IoError::MissingKey { .. } | IoError::BadValue { .. } => {
                EXIT_PARAMETER
            }
            IoError::Matrix(inner) => matrix_code(inner),
            _ => EXIT_IO,
        };
        Failure::new(code, err)
    }
}

fn matrix_code(err: &MatrixError) -> u8 {
    match err {
        // Beta comes straight from a flag, so it is a parameter error; the
        // rest describe input data the math cannot accept.
        MatrixError::InvalidBeta(_) => EXIT_PARAMETER,
        _ => EXIT_DEGENERATE,
    }
}

impl From<MatrixError> for Failure {
    fn from(err: MatrixError) -> Self {
        Failure::new(matrix_code(&err), err)
    }
}

impl From<SolverError> for Failure {
    fn from(err: SolverError) -> Self {
        let code = match &err {
            SolverError::Divergence { .. } => EXIT_DIVERGENCE,
            SolverError::DegenerateInput(_) | SolverError::AllMissingColumn { .. } => {
                EXIT_DEGENERATE
            }
            SolverError::Parameter(_) => EXIT_PARAMETER,
            SolverError::Matrix(inner) => matrix_code(inner),
        };
        Failure::new(code, err)
    }
}

impl From<DatagenError> for Failure {
    fn from(err: DatagenError) -> Self {
        let code = match &err {
            DatagenError::Matrix(inner) => matrix_code(inner),
            _ => EXIT_PARAMETER,
        };
        Failure::new(code, err)
    }
}

impl From<ReshapeError> for Failure {
    fn from(err: ReshapeError) -> Self {
        let code = match &err {
            ReshapeError::NotADivisor { .. } => EXIT_PARAMETER,
            ReshapeError::PlanShapeMismatch { .. } => EXIT_DEGENERATE,
            ReshapeError::Matrix(inner) => matrix_code(inner),
        };
        Failure::new(code, err)
    }
}

impl From<HarnessError> for Failure {
    fn from(err: HarnessError) -> Self {
        match err {
            HarnessError::InvalidGrid(_) | HarnessError::InvalidBurst(_) => {
                Failure::new(EXIT_PARAMETER, err)
            }
            HarnessError::Datagen(inner) => inner.into(),
            HarnessError::Solver(inner) => inner.into(),
            HarnessError::Reshape(inner) => inner.into(),
            HarnessError::Matrix(inner) => inner.into(),
        }
    }
}

// ---------------------------------------------------------------------------
// Argument grammar
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "gridfill",
    version,
    about = "Low-rank completion of partially observed sensor matrices",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Recover the missing entries of a partially observed matrix.
    Complete(CompleteArgs),
    /// Generate a synthetic low-rank sensor matrix.
    Simulate(SimulateArgs),
    /// Knock entries out of a fully observed matrix.
    Mask(MaskArgs),
    /// Print the singular spectrum and the approximate rank.
    Svdrank(SvdrankArgs),
    /// Run a Monte Carlo benchmark grid and emit MAE statistics.
    Benchmark(BenchmarkArgs),
}

fn parse_method(s: &str) -> Result<MethodId, String> {
    s.parse()
}

fn parse_reshape(s: &str) -> Result<ReshapeMode, String> {
    s.parse()
}

/// Comma-separated 1-based channel list, e.g. `1,2,9`.
#[derive(Debug, Clone)]
struct ChannelList(Vec<usize>);

fn parse_channels(s: &str) -> Result<ChannelList, String> {
    s.split(',')
        .map(|token| {
            let token = token.trim();
            token
                .parse::<usize>()
                .map_err(|e| format!("bad channel index {token:?}: {e}"))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(ChannelList)
}

#[derive(Args)]
struct CompleteArgs {
    /// Value CSV. Without --mask, blank or NaN fields are the missing
    /// entries; with --mask the sidecar is authoritative.
    #[arg(long)]
    input: PathBuf,

    /// Sidecar 0/1 mask CSV (1 = observed), same shape as the values.
    #[arg(long)]
    mask: Option<PathBuf>,

    /// Recovery method.
    #[arg(long, default_value = "admm", value_parser = parse_method)]
    method: MethodId,

    /// Dual step size (admm). Default is derived from the data as
    /// 0.264 / sigma_1; on the reference 1800x86 scenario that is ~0.00075.
    #[arg(long)]
    rho: Option<f64>,

    /// Successive-iterate stopping threshold (admm). Default is derived
    /// from the data as 1e-4 * max(1, ||M||_F).
    #[arg(long)]
    eps: Option<f64>,

    /// Iteration cap (admm); hitting it reports converged=false.
    #[arg(long, default_value_t = 5000)]
    k_max: usize,

    /// Factor rank (als).
    #[arg(long, default_value_t = 20)]
    rank: usize,

    /// Ridge weight on both factors (als).
    #[arg(long, default_value_t = 1.5)]
    lambda: f64,

    /// Sweep cap (als); hitting it reports converged=false.
    #[arg(long, default_value_t = 200)]
    max_iters: usize,

    /// Relative objective-change stopping threshold (als).
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,

    /// Seed for the random factor initialization (admm, als).
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Cut-column reshape: `auto` reshapes exactly when some row is fully
    /// missing, `off` never, `n=<k>` always cuts each column into k
    /// segments (k must divide the row count).
    #[arg(long, default_value = "auto", value_parser = parse_reshape)]
    reshape: ReshapeMode,

    /// Ground-truth CSV; when given, the report carries the mean absolute
    /// error over the missing entries.
    #[arg(long)]
    truth: Option<PathBuf>,

    /// Overwrite observed positions of the estimate with their observed
    /// values, so only missing entries are model output.
    #[arg(long)]
    clamp: bool,

    /// Completed-matrix CSV destination; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,

    /// Run-report destination (flat key=value text).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario config file (flat key=value); flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Sampling instants (rows) [reference default: 1800].
    #[arg(long)]
    rows: Option<usize>,

    /// Channels (columns) [reference default: 86].
    #[arg(long)]
    cols: Option<usize>,

    /// Signal rank of the noiseless part [reference default: 1].
    #[arg(long)]
    rank: Option<usize>,

    /// Entrywise Gaussian noise variance [reference default: 1e-3].
    #[arg(long)]
    noise_var: Option<f64>,

    /// Generator seed [reference default: 7].
    #[arg(long)]
    seed: Option<u64>,

    /// Drop the event transient (a flat baseline only).
    #[arg(long, conflicts_with_all = ["onset", "amplitude", "damping", "frequency"])]
    no_event: bool,

    /// Event onset instant, 1-based [reference default: 90].
    #[arg(long)]
    onset: Option<usize>,

    /// Event amplitude [reference default: 0.05].
    #[arg(long)]
    amplitude: Option<f64>,

    /// Event damping rate [reference default: 0.02].
    #[arg(long)]
    damping: Option<f64>,

    /// Event frequency in cycles per sample [reference default: 0.02].
    #[arg(long)]
    frequency: Option<f64>,

    /// Matrix CSV destination; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

/// How `mask` selects the entries to drop.
#[derive(Debug, Clone, Copy, ValueEnum)]
enum RegimeArg {
    /// Each entry observed independently with probability p.
    Random,
    /// Each row kept with probability p; dropped rows are fully missing.
    Rows,
    /// The listed channels all missing over [start, end].
    Burst,
}

#[derive(Args)]
struct MaskArgs {
    /// Fully observed value CSV.
    #[arg(long)]
    input: PathBuf,

    /// Masking regime.
    #[arg(long, value_enum, default_value_t = RegimeArg::Random)]
    regime: RegimeArg,

    /// Observation probability (random, rows).
    #[arg(long, default_value_t = 0.9)]
    p: f64,

    /// Comma-separated 1-based channels to drop (burst).
    #[arg(long, default_value = "1,2,3,4,5,6,7,8,9", value_parser = parse_channels)]
    channels: ChannelList,

    /// First masked instant, 1-based inclusive (burst).
    #[arg(long, default_value_t = 90)]
    start: usize,

    /// Last masked instant, 1-based inclusive (burst).
    #[arg(long, default_value_t = 200)]
    end: usize,

    /// Mask seed (random, rows).
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Masked-matrix CSV destination (missing entries blank); stdout when
    /// omitted.
    #[arg(long)]
    output: Option<PathBuf>,

    /// Also write the 0/1 mask as a sidecar file.
    #[arg(long)]
    mask_out: Option<PathBuf>,
}

#[derive(Args)]
struct SvdrankArgs {
    /// Fully observed value CSV.
    #[arg(long)]
    input: PathBuf,

    /// Energy fraction defining the approximate rank: the smallest k whose
    /// leading k singular values hold at least beta of the total squared
    /// spectrum.
    #[arg(long, default_value_t = 0.995)]
    beta: f64,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Grid config file (flat key=value). Omitted keys keep the desk-scale
    /// defaults; omitting the file runs them as-is.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Statistics CSV destination; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,

    /// Per-trial MAE CSV destination (file only).
    #[arg(long)]
    trials_out: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// Output plumbing
// ---------------------------------------------------------------------------

/// Writes text to stdout, mapping failures (e.g. a closed pipe) to the I/O
/// exit code instead of panicking.
fn emit_stdout(text: &str) -> Result<(), Failure> {
    std::io::stdout()
        .write_all(text.as_bytes())
        .map_err(|e| Failure::new(EXIT_IO, format!("stdout: {e}")))
}

fn emit_dense(matrix: &DenseMatrix, output: Option<&Path>) -> Result<(), Failure> {
    match output {
        Some(path) => Ok(write_dense_csv(matrix, path)?),
        None => emit_stdout(&dense_csv_string(matrix)),
    }
}

fn emit_observed(observed: &ObservedMatrix, output: Option<&Path>) -> Result<(), Failure> {
    match output {
        Some(path) => Ok(write_observed_csv(observed, path)?),
        None => emit_stdout(&observed_csv_string(observed)),
    }
}

// ---------------------------------------------------------------------------
// Verb: complete
// ---------------------------------------------------------------------------

/// What one solver run produced, normalized across the three methods.
struct SolveOutcome {
    estimate: DenseMatrix,
    converged: bool,
    iterations: usize,
    final_residual: f64,
    elapsed: Duration,
}

fn run_complete(args: &CompleteArgs) -> Result<(), Failure> {
    let observed = match &args.mask {
        Some(mask_path) => read_observed_with_sidecar(&args.input, mask_path)?,
        None => read_matrix_csv(&args.input, MissingPolicy::EmptyOrNan)?,
    };

    // Resolve the reshape decision once, up front, so the report can echo
    // the exact plan; the reshape call itself re-validates divisibility.
    let requested = args.reshape.plan_for(&observed);
    let (solver_input, plan): (ObservedMatrix, Option<ReshapePlan>) = match requested {
        Some(p) => {
            let (reshaped, plan) = ccrm_reshape(&observed, p.n_star)?;
            (reshaped, Some(plan))
        }
        None => (observed.clone(), None),
    };

    let mut report = RunReport::new(args.method.as_str());
    report.push_config("input", args.input.display());
    if let Some(mask) = &args.mask {
        report.push_config("mask", mask.display());
    }
    if let Some(truth) = &args.truth {
        report.push_config("truth", truth.display());
    }
    report.push_config("reshape", args.reshape);
    report.push_config("clamp", args.clamp);

    let outcome = match args.method {
        MethodId::Admm => {
            let derived = AdmmConfig::for_observed(&solver_input)?;
            let config = AdmmConfig {
                rho: args.rho.unwrap_or(derived.rho),
                eps: args.eps.unwrap_or(derived.eps),
                k_max: args.k_max,
                init_seed: args.seed,
                init_scale: derived.init_scale,
            };
            report.push_config("rho", config.rho);
            report.push_config("eps", config.eps);
            report.push_config("k_max", config.k_max);
            report.push_config("init_seed", config.init_seed);
            let result = admm_complete(&solver_input, &config)?;
            SolveOutcome {
                estimate: result.xhat,
                converged: result.converged,
                iterations: result.iterations,
                final_residual: result.residual_history.last().copied().unwrap_or(f64::NAN),
                elapsed: result.elapsed,
            }
        }
        MethodId::Als => {
            let config = AlsConfig {
                rank_r: args.rank,
                lambda: args.lambda,
                max_iters: args.max_iters,
                tol: args.tol,
                init_seed: args.seed,
            };
            report.push_config("rank_r", config.rank_r);
            report.push_config("lambda", config.lambda);
            report.push_config("max_iters", config.max_iters);
            report.push_config("tol", config.tol);
            report.push_config("init_seed", config.init_seed);
            let result = als_complete(&solver_input, &config)?;
            SolveOutcome {
                estimate: result.xhat,
                converged: result.converged,
                iterations: result.iterations,
                final_residual: result.residual_history.last().copied().unwrap_or(f64::NAN),
                elapsed: result.elapsed,
            }
        }
        MethodId::Persistent => {
            let start = Instant::now();
            let filled = persistent_fill(&solver_input)?;
            SolveOutcome {
                estimate: filled,
                converged: true,
                iterations: 0,
                final_residual: f64::NAN,
                elapsed: start.elapsed(),
            }
        }
    };

    let mut estimate = match &plan {
        Some(plan) => ccrm_inverse(&outcome.estimate, plan)?,
        None => outcome.estimate,
    };
    if args.clamp {
        estimate = clamp_observed(&estimate, &observed)?;
    }

    let mae = match &args.truth {
        Some(truth_path) => {
            let truth = read_dense_csv(truth_path)?;
            Some(mae_missing(&estimate, &truth, observed.mask())?)
        }
        None => None,
    };

    report.converged = outcome.converged;
    report.iterations = outcome.iterations;
    report.final_residual = outcome.final_residual;
    report.elapsed_ms = outcome.elapsed.as_secs_f64() * 1e3;
    report.mae = mae;
    report.reshape = plan;

    emit_dense(&estimate, args.output.as_deref())?;
    if let Some(report_path) = &args.report {
        write_report(&report, report_path)?;
    }

    let mae_note = match mae {
        Some(mae) => format!(" mae={mae:.6}"),
        None => String::new(),
    };
    eprintln!(
        "completed {}x{} via {}: converged={} iterations={} elapsed_ms={:.1}{}",
        observed.rows(),
        observed.cols(),
        args.method,
        outcome.converged,
        outcome.iterations,
        report.elapsed_ms,
        mae_note
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// Verb: simulate
// ---------------------------------------------------------------------------

fn run_simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let mut spec = match &args.config {
        Some(path) => read_scenario_config(path)?,
        None => ScenarioSpec::default(),
    };
    if let Some(rows) = args.rows {
        spec.rows = rows;
    }
    if let Some(cols) = args.cols {
        spec.cols = cols;
    }
    if let Some(rank) = args.rank {
        spec.signal_rank = rank;
    }
    if let Some(noise_var) = args.noise_var {
        spec.noise_var = noise_var;
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if args.no_event {
        spec.event = None;
    } else if args.onset.is_some()
        || args.amplitude.is_some()
        || args.damping.is_some()
        || args.frequency.is_some()
    {
        let mut event = spec.event.unwrap_or_default();
        if let Some(onset) = args.onset {
            event.onset = onset;
        }
        if let Some(amplitude) = args.amplitude {
            event.amplitude = amplitude;
        }
        if let Some(damping) = args.damping {
            event.damping = damping;
        }
        if let Some(frequency) = args.frequency {
            event.frequency = frequency;
        }
        spec.event = Some(event);
    }

    let truth = generate_synthetic(&spec)?;
    emit_dense(&truth, args.output.as_deref())
}

// ---------------------------------------------------------------------------
// Verb: mask
// ---------------------------------------------------------------------------

fn run_mask(args: &MaskArgs) -> Result<(), Failure> {
    let truth = read_dense_csv(&args.input)?;
    let observed = match args.regime {
        RegimeArg::Random => apply_random_mask(&truth, args.p, args.seed)?,
        RegimeArg::Rows => apply_row_mask(&truth, args.p, args.seed)?,
        RegimeArg::Burst => apply_burst_mask(&truth, &args.channels.0, args.start, args.end)?,
    };
    emit_observed(&observed, args.output.as_deref())?;
    if let Some(mask_path) = &args.mask_out {
        write_mask_csv(observed.mask(), mask_path)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Verb: svdrank
// ---------------------------------------------------------------------------

fn run_svdrank(args: &SvdrankArgs) -> Result<(), Failure> {
    let matrix = read_dense_csv(&args.input)?;
    let spectrum = singular_values(&matrix);
    let rank = approximate_rank(&spectrum, args.beta)?;
    let mut out = String::new();
    out.push_str(&format!("beta={}\n", args.beta));
    out.push_str(&format!("approximate_rank={rank}\n"));
    for (i, sigma) in spectrum.values().iter().enumerate() {
        out.push_str(&format!("sigma.{}={sigma}\n", i + 1));
    }
    emit_stdout(&out)
}

// ---------------------------------------------------------------------------
// Verb: benchmark
// ---------------------------------------------------------------------------

fn run_benchmark(args: &BenchmarkArgs) -> Result<(), Failure> {
    let grid = match &args.config {
        Some(path) => read_grid_config(path)?,
        None => BenchmarkGrid::desk_default(),
    };
    eprintln!(
        "benchmark: {} methods x {} probabilities, {} trials per cell on {}x{}",
        grid.methods.len(),
        grid.probabilities.len(),
        grid.trials,
        grid.scenario.rows,
        grid.scenario.cols
    );
    let start = Instant::now();
    let stats = run_monte_carlo(&grid)?;
    eprintln!(
        "benchmark: {} cells in {:.1}s",
        stats.len(),
        start.elapsed().as_secs_f64()
    );
    match &args.output {
        Some(path) => write_stats_csv(&stats, path)?,
        None => emit_stdout(&stats_csv_string(&stats))?,
    }
    if let Some(trials_path) = &args.trials_out {
        write_trials_csv(&stats, trials_path)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Complete(args) => run_complete(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Mask(args) => run_mask(args),
        Command::Svdrank(args) => run_svdrank(args),
        Command::Benchmark(args) => run_benchmark(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
