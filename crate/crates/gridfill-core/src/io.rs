//! CSV matrix/mask serialization, flat key=value configuration files, and
//! run reports.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so a
//! write-then-read cycle reproduces every finite 64-bit value exactly.
//! Missing entries can be encoded two ways:
//!
//! * blank fields or the token `NaN` inside the value file
//!   ([`MissingPolicy::EmptyOrNan`]), or
//! * a sidecar 0/1 mask file of the same shape, which is authoritative:
//!   whatever the value file holds at a mask-0 cell is zeroed on load. Use
//!   the sidecar form whenever genuine zero measurements can occur.
//!
//! Configuration files and run reports are flat `key=value` text: one pair
//! per line, `#` starts a comment, blank lines are ignored.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::datagen::ScenarioSpec;
use crate::harness::{
    BenchmarkGrid, BurstComparison, MaeStats, MaskRegime, MethodId, ReshapeMode,
};
use crate::matrix::{DenseMatrix, MaskMatrix, MatrixError, ObservedMatrix};
use crate::reshape::ReshapePlan;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: no data rows")]
    Empty { path: PathBuf },
    #[error("{path}:{line}: expected {expected} fields, got {got}")]
    RaggedRow {
        path: PathBuf,
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error("{path}:{line}: field {field}: cannot parse {token:?} as a finite number")]
    BadNumber {
        path: PathBuf,
        line: usize,
        field: usize,
        token: String,
    },
    #[error("{path}:{line}: field {field}: mask entry {token:?} is not 0 or 1")]
    BadMaskBit {
        path: PathBuf,
        line: usize,
        field: usize,
        token: String,
    },
    #[error("mask shape {mask_rows}x{mask_cols} does not match value shape {rows}x{cols}")]
    MaskShapeMismatch {
        rows: usize,
        cols: usize,
        mask_rows: usize,
        mask_cols: usize,
    },
    #[error("{path}:{line}: field {field}: cell is marked observed by the mask but holds no value")]
    ObservedValueMissing {
        path: PathBuf,
        line: usize,
        field: usize,
    },
    #[error("{path}:{line}: expected key=value, got {content:?}")]
    BadLine {
        path: PathBuf,
        line: usize,
        content: String,
    },
    #[error("{path}: unknown key {key:?}")]
    UnknownKey { path: PathBuf, key: String },
    #[error("{path}: missing required key {key:?}")]
    MissingKey { path: PathBuf, key: String },
    #[error("{path}: bad value for {key:?}: {message}")]
    BadValue {
        path: PathBuf,
        key: String,
        message: String,
    },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// How a value file may encode missing entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MissingPolicy {
    /// Every field must be a finite number; the result is fully observed.
    Strict,
    /// Blank fields and the token `NaN` load as missing (mask 0, value 0).
    EmptyOrNan,
}

fn read_to_string(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_string(path: &Path, content: &str) -> Result<(), IoError> {
    std::fs::write(path, content).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parsed numeric grid: values (0 where missing) and a parallel presence
/// grid.
struct NumericGrid {
    values: Vec<Vec<f64>>,
    present: Vec<Vec<u8>>,
}

fn parse_numeric_grid(path: &Path, policy: MissingPolicy) -> Result<NumericGrid, IoError> {
    let content = read_to_string(path)?;
    let mut values: Vec<Vec<f64>> = Vec::new();
    let mut present: Vec<Vec<u8>> = Vec::new();
    let mut expected = None;
    for (idx, raw_line) in content.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut value_row = Vec::new();
        let mut present_row = Vec::new();
        for (f_idx, raw_token) in line.split(',').enumerate() {
            let token = raw_token.trim();
            if token.is_empty() {
                match policy {
                    MissingPolicy::EmptyOrNan => {
                        value_row.push(0.0);
                        present_row.push(0);
                        continue;
                    }
                    MissingPolicy::Strict => {
                        return Err(IoError::BadNumber {
                            path: path.to_path_buf(),
                            line: line_no,
                            field: f_idx + 1,
                            token: raw_token.to_string(),
                        });
                    }
                }
            }
            match token.parse::<f64>() {
                Ok(v) if v.is_finite() => {
                    value_row.push(v);
                    present_row.push(1);
                }
                Ok(v) if v.is_nan() && policy == MissingPolicy::EmptyOrNan => {
                    value_row.push(0.0);
                    present_row.push(0);
                }
                _ => {
                    return Err(IoError::BadNumber {
                        path: path.to_path_buf(),
                        line: line_no,
                        field: f_idx + 1,
                        token: token.to_string(),
                    });
                }
            }
        }
        if let Some(expected) = expected {
            if value_row.len() != expected {
                return Err(IoError::RaggedRow {
                    path: path.to_path_buf(),
                    line: line_no,
                    expected,
                    got: value_row.len(),
                });
            }
        } else {
            expected = Some(value_row.len());
        }
        values.push(value_row);
        present.push(present_row);
    }
    if values.is_empty() {
        return Err(IoError::Empty {
            path: path.to_path_buf(),
        });
    }
    Ok(NumericGrid { values, present })
}

/// Reads a fully observed matrix; any blank or non-finite field is an error.
pub fn read_dense_csv(path: &Path) -> Result<DenseMatrix, IoError> {
    let grid = parse_numeric_grid(path, MissingPolicy::Strict)?;
    Ok(DenseMatrix::from_rows(&grid.values)?)
}

/// Reads a value file under the given missing-value policy. With
/// [`MissingPolicy::Strict`] the result has an all-ones mask.
pub fn read_matrix_csv(path: &Path, policy: MissingPolicy) -> Result<ObservedMatrix, IoError> {
    let grid = parse_numeric_grid(path, policy)?;
    let values = DenseMatrix::from_rows(&grid.values)?;
    let mask = MaskMatrix::from_rows(&grid.present)?;
    Ok(ObservedMatrix::new(values, mask)?)
}

/// Reads a 0/1 mask file (1 = observed).
pub fn read_mask_csv(path: &Path) -> Result<MaskMatrix, IoError> {
    let content = read_to_string(path)?;
    let mut rows: Vec<Vec<u8>> = Vec::new();
    let mut expected = None;
    for (idx, raw_line) in content.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for (f_idx, raw_token) in line.split(',').enumerate() {
            let token = raw_token.trim();
            match token {
                "0" => row.push(0),
                "1" => row.push(1),
                _ => {
                    return Err(IoError::BadMaskBit {
                        path: path.to_path_buf(),
                        line: line_no,
                        field: f_idx + 1,
                        token: token.to_string(),
                    });
                }
            }
        }
        if let Some(expected) = expected {
            if row.len() != expected {
                return Err(IoError::RaggedRow {
                    path: path.to_path_buf(),
                    line: line_no,
                    expected,
                    got: row.len(),
                });
            }
        } else {
            expected = Some(row.len());
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(IoError::Empty {
            path: path.to_path_buf(),
        });
    }
    Ok(MaskMatrix::from_rows(&rows)?)
}

/// Reads a value file with an authoritative sidecar mask. Value cells under
/// mask 0 are zeroed no matter what the file held; a mask-1 cell whose value
/// field is blank or NaN is an error.
pub fn read_observed_with_sidecar(
    values_path: &Path,
    mask_path: &Path,
) -> Result<ObservedMatrix, IoError> {
    let grid = parse_numeric_grid(values_path, MissingPolicy::EmptyOrNan)?;
    let mask = read_mask_csv(mask_path)?;
    let rows = grid.values.len();
    let cols = grid.values[0].len();
    if mask.rows() != rows || mask.cols() != cols {
        return Err(IoError::MaskShapeMismatch {
            rows,
            cols,
            mask_rows: mask.rows(),
            mask_cols: mask.cols(),
        });
    }
    for (i, present_row) in grid.present.iter().enumerate() {
        for (j, &present) in present_row.iter().enumerate() {
            if present == 0 && mask.is_observed(i, j) {
                return Err(IoError::ObservedValueMissing {
                    path: values_path.to_path_buf(),
                    // data line number: rows are written consecutively
                    line: i + 1,
                    field: j + 1,
                });
            }
        }
    }
    let values = DenseMatrix::from_rows(&grid.values)?;
    Ok(ObservedMatrix::new(values, mask)?)
}

/// Renders a dense matrix as comma-separated rows, shortest round-trip
/// number formatting.
pub fn dense_csv_string(matrix: &DenseMatrix) -> String {
    let mut out = String::new();
    for i in 0..matrix.rows() {
        for j in 0..matrix.cols() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", matrix.get(i, j));
        }
        out.push('\n');
    }
    out
}

/// Writes [`dense_csv_string`] output to a file.
pub fn write_dense_csv(matrix: &DenseMatrix, path: &Path) -> Result<(), IoError> {
    write_string(path, &dense_csv_string(matrix))
}

/// Renders a mask as comma-separated 0/1 rows.
pub fn mask_csv_string(mask: &MaskMatrix) -> String {
    let mut out = String::new();
    for i in 0..mask.rows() {
        for j in 0..mask.cols() {
            if j > 0 {
                out.push(',');
            }
            out.push(if mask.is_observed(i, j) { '1' } else { '0' });
        }
        out.push('\n');
    }
    out
}

/// Writes [`mask_csv_string`] output to a file.
pub fn write_mask_csv(mask: &MaskMatrix, path: &Path) -> Result<(), IoError> {
    write_string(path, &mask_csv_string(mask))
}

/// Renders an observed matrix in the missing-as-blank convention: observed
/// values printed, missing cells left empty. Round-trips through
/// [`read_matrix_csv`] with [`MissingPolicy::EmptyOrNan`].
pub fn observed_csv_string(observed: &ObservedMatrix) -> String {
    let mut out = String::new();
    for i in 0..observed.rows() {
        for j in 0..observed.cols() {
            if j > 0 {
                out.push(',');
            }
            if observed.mask().is_observed(i, j) {
                let _ = write!(out, "{}", observed.values().get(i, j));
            }
        }
        out.push('\n');
    }
    out
}

/// Writes [`observed_csv_string`] output to a file.
pub fn write_observed_csv(observed: &ObservedMatrix, path: &Path) -> Result<(), IoError> {
    write_string(path, &observed_csv_string(observed))
}

/// Version tag written into every run report.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Everything needed to audit and rerun one recovery job: the method and its
/// full parameter echo, convergence metadata, and (when a ground-truth
/// matrix was supplied) the MAE over missing entries. The reshape plan is
/// present exactly when cut-column reshaping was applied.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub schema_version: u32,
    pub method: String,
    /// Ordered parameter echo (`config.<key>=<value>` lines).
    pub config: Vec<(String, String)>,
    pub converged: bool,
    pub iterations: usize,
    /// Last value of the solver's stopping metric (NaN when no iterations
    /// ran, e.g. the persistent fill).
    pub final_residual: f64,
    pub elapsed_ms: f64,
    pub mae: Option<f64>,
    pub reshape: Option<ReshapePlan>,
}

impl RunReport {
    pub fn new(method: &str) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            method: method.to_string(),
            config: Vec::new(),
            converged: false,
            iterations: 0,
            final_residual: f64::NAN,
            elapsed_ms: 0.0,
            mae: None,
            reshape: None,
        }
    }

    pub fn push_config(&mut self, key: &str, value: impl ToString) {
        self.config.push((key.to_string(), value.to_string()));
    }
}

/// Serializes a report as flat key=value text.
pub fn write_report(report: &RunReport, path: &Path) -> Result<(), IoError> {
    let mut out = String::new();
    let _ = writeln!(out, "schema_version={}", report.schema_version);
    let _ = writeln!(out, "method={}", report.method);
    let _ = writeln!(out, "converged={}", report.converged);
    let _ = writeln!(out, "iterations={}", report.iterations);
    let _ = writeln!(out, "final_residual={}", report.final_residual);
    let _ = writeln!(out, "elapsed_ms={}", report.elapsed_ms);
    if let Some(mae) = report.mae {
        let _ = writeln!(out, "mae={mae}");
    }
    if let Some(plan) = &report.reshape {
        let _ = writeln!(out, "reshape.n1={}", plan.n1);
        let _ = writeln!(out, "reshape.n2={}", plan.n2);
        let _ = writeln!(out, "reshape.n_star={}", plan.n_star);
        let _ = writeln!(out, "reshape.seg_len={}", plan.seg_len);
    }
    for (key, value) in &report.config {
        let _ = writeln!(out, "config.{key}={value}");
    }
    write_string(path, &out)
}

/// Splits a key=value file into ordered pairs, skipping blank lines and
/// `#` comments.
fn parse_key_values(path: &Path) -> Result<Vec<(String, String)>, IoError> {
    let content = read_to_string(path)?;
    let mut pairs = Vec::new();
    for (idx, raw_line) in content.lines().enumerate() {
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.split_once('=') {
            Some((key, value)) => pairs.push((key.trim().to_string(), value.trim().to_string())),
            None => {
                return Err(IoError::BadLine {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    content: line.to_string(),
                });
            }
        }
    }
    Ok(pairs)
}

fn parse_value<T: std::str::FromStr>(path: &Path, key: &str, value: &str) -> Result<T, IoError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| IoError::BadValue {
        path: path.to_path_buf(),
        key: key.to_string(),
        message: e.to_string(),
    })
}

/// Reads back a report written by [`write_report`].
pub fn read_report(path: &Path) -> Result<RunReport, IoError> {
    let pairs = parse_key_values(path)?;
    let mut report = RunReport::new("");
    let mut seen_method = false;
    let mut seen_version = false;
    let mut reshape: [Option<usize>; 4] = [None; 4];
    for (key, value) in pairs {
        match key.as_str() {
            "schema_version" => {
                report.schema_version = parse_value(path, &key, &value)?;
                seen_version = true;
            }
            "method" => {
                report.method = value;
                seen_method = true;
            }
            "converged" => report.converged = parse_value(path, &key, &value)?,
            "iterations" => report.iterations = parse_value(path, &key, &value)?,
            "final_residual" => report.final_residual = parse_value(path, &key, &value)?,
            "elapsed_ms" => report.elapsed_ms = parse_value(path, &key, &value)?,
            "mae" => report.mae = Some(parse_value(path, &key, &value)?),
            "reshape.n1" => reshape[0] = Some(parse_value(path, &key, &value)?),
            "reshape.n2" => reshape[1] = Some(parse_value(path, &key, &value)?),
            "reshape.n_star" => reshape[2] = Some(parse_value(path, &key, &value)?),
            "reshape.seg_len" => reshape[3] = Some(parse_value(path, &key, &value)?),
            other => {
                if let Some(config_key) = other.strip_prefix("config.") {
                    report.config.push((config_key.to_string(), value));
                } else {
                    return Err(IoError::UnknownKey {
                        path: path.to_path_buf(),
                        key: key.clone(),
                    });
                }
            }
        }
    }
    if !seen_version {
        return Err(IoError::MissingKey {
            path: path.to_path_buf(),
            key: "schema_version".into(),
        });
    }
    if !seen_method {
        return Err(IoError::MissingKey {
            path: path.to_path_buf(),
            key: "method".into(),
        });
    }
    report.reshape = match reshape {
        [Some(n1), Some(n2), Some(n_star), Some(seg_len)] => Some(ReshapePlan {
            n1,
            n2,
            n_star,
            seg_len,
        }),
        [None, None, None, None] => None,
        _ => {
            return Err(IoError::BadValue {
                path: path.to_path_buf(),
                key: "reshape.*".into(),
                message: "all four reshape fields must appear together".into(),
            });
        }
    };
    Ok(report)
}

/// Reads a scenario from flat key=value text. Unset keys keep the reference
/// defaults. Keys: `rows`, `cols`, `signal_rank`, `noise_var`, `seed`,
/// `event` (`on`/`off`), `event.onset`, `event.amplitude`, `event.damping`,
/// `event.frequency`.
pub fn read_scenario_config(path: &Path) -> Result<ScenarioSpec, IoError> {
    let pairs = parse_key_values(path)?;
    scenario_from_pairs(path, &pairs, "")
}

/// Applies scenario key=value pairs with an optional key prefix (used for
/// `scenario.`-prefixed keys inside grid configs). Unknown keys error.
fn scenario_from_pairs(
    path: &Path,
    pairs: &[(String, String)],
    prefix: &str,
) -> Result<ScenarioSpec, IoError> {
    let mut spec = ScenarioSpec::default();
    let mut event = spec.event.unwrap_or_default();
    let mut event_on = spec.event.is_some();
    for (key, value) in pairs {
        let Some(stripped) = key.strip_prefix(prefix) else {
            continue;
        };
        match stripped {
            "rows" => spec.rows = parse_value(path, key, value)?,
            "cols" => spec.cols = parse_value(path, key, value)?,
            "signal_rank" => spec.signal_rank = parse_value(path, key, value)?,
            "noise_var" => spec.noise_var = parse_value(path, key, value)?,
            "seed" => spec.seed = parse_value(path, key, value)?,
            "event" => match value.as_str() {
                "on" => event_on = true,
                "off" => event_on = false,
                other => {
                    return Err(IoError::BadValue {
                        path: path.to_path_buf(),
                        key: key.clone(),
                        message: format!("expected on or off, got {other:?}"),
                    });
                }
            },
            "event.onset" => event.onset = parse_value(path, key, value)?,
            "event.amplitude" => event.amplitude = parse_value(path, key, value)?,
            "event.damping" => event.damping = parse_value(path, key, value)?,
            "event.frequency" => event.frequency = parse_value(path, key, value)?,
            other => {
                if prefix.is_empty() {
                    return Err(IoError::UnknownKey {
                        path: path.to_path_buf(),
                        key: other.to_string(),
                    });
                }
                // with a prefix, foreign keys belong to the enclosing config
            }
        }
    }
    spec.event = event_on.then_some(event);
    Ok(spec)
}

/// Reads a benchmark grid from flat key=value text. Unset keys keep the
/// desk-scale defaults. Keys: `probabilities` (comma-separated),
/// `methods` (comma-separated `admm`/`als`/`persistent`), `trials`,
/// `base_seed`, `regime` (`random`/`rows`), `reshape`
/// (`auto`/`off`/`n=<k>`), plus `scenario.`-prefixed scenario keys.
pub fn read_grid_config(path: &Path) -> Result<BenchmarkGrid, IoError> {
    let pairs = parse_key_values(path)?;
    let mut grid = BenchmarkGrid::desk_default();
    grid.scenario = scenario_from_pairs(path, &pairs, "scenario.")?;
    for (key, value) in &pairs {
        match key.as_str() {
            "probabilities" => {
                let mut probabilities = Vec::new();
                for token in value.split(',') {
                    probabilities.push(parse_value(path, key, token.trim())?);
                }
                grid.probabilities = probabilities;
            }
            "methods" => {
                let mut methods = Vec::new();
                for token in value.split(',') {
                    let method: MethodId =
                        token.trim().parse().map_err(|e| IoError::BadValue {
                            path: path.to_path_buf(),
                            key: key.clone(),
                            message: e,
                        })?;
                    methods.push(method);
                }
                grid.methods = methods;
            }
            "trials" => grid.trials = parse_value(path, key, value)?,
            "base_seed" => grid.base_seed = parse_value(path, key, value)?,
            "regime" => {
                grid.regime = value.parse::<MaskRegime>().map_err(|e| IoError::BadValue {
                    path: path.to_path_buf(),
                    key: key.clone(),
                    message: e,
                })?;
            }
            "reshape" => {
                grid.reshape = value
                    .parse::<ReshapeMode>()
                    .map_err(|e| IoError::BadValue {
                        path: path.to_path_buf(),
                        key: key.clone(),
                        message: e,
                    })?;
            }
            other if other.starts_with("scenario.") => {}
            other => {
                return Err(IoError::UnknownKey {
                    path: path.to_path_buf(),
                    key: other.to_string(),
                });
            }
        }
    }
    Ok(grid)
}

/// Renders one row per (method, probability) cell with the aggregate
/// statistics and exclusion counts.
pub fn stats_csv_string(stats: &[MaeStats]) -> String {
    let mut out = String::from(
        "method,scenario,observed_probability,trials,failures,not_converged,no_missing,mean_mae,min_mae,max_mae\n",
    );
    for s in stats {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            s.method,
            s.scenario,
            s.observed_probability,
            s.trials,
            s.failures,
            s.not_converged,
            s.no_missing,
            s.mean,
            s.min,
            s.max
        );
    }
    out
}

/// Writes [`stats_csv_string`] output to a file.
pub fn write_stats_csv(stats: &[MaeStats], path: &Path) -> Result<(), IoError> {
    write_string(path, &stats_csv_string(stats))
}

/// Writes one row per completed trial (long format), so the aggregate
/// statistics can be recomputed externally.
pub fn write_trials_csv(stats: &[MaeStats], path: &Path) -> Result<(), IoError> {
    let mut out = String::from("method,scenario,observed_probability,trial,mae\n");
    for s in stats {
        for (trial, mae) in s.per_trial.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                s.method, s.scenario, s.observed_probability, trial, mae
            );
        }
    }
    write_string(path, &out)
}

/// Writes the burst-comparison trace table: one row per (channel, instant)
/// with the truth and one column per method.
pub fn write_trace_csv(comparison: &BurstComparison, path: &Path) -> Result<(), IoError> {
    let mut out = String::from("channel,instant,truth");
    for summary in &comparison.methods {
        let _ = write!(out, ",{}", summary.method);
    }
    out.push('\n');
    for row in &comparison.rows {
        let _ = write!(out, "{},{},{}", row.channel, row.instant, row.truth);
        for value in &row.recovered {
            let _ = write!(out, ",{value}");
        }
        out.push('\n');
    }
    write_string(path, &out)
}
