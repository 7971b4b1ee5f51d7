//! CSV and key=value artifact formats: lossless round trips, policy
//! handling, and error reporting with file positions.

use std::fs;

use gridfill_core::harness::{BenchmarkGrid, MaskRegime, MethodId, ReshapeMode};
use gridfill_core::io::{
    read_dense_csv, read_grid_config, read_mask_csv, read_matrix_csv, read_observed_with_sidecar,
    read_report, read_scenario_config, write_dense_csv, write_mask_csv, write_observed_csv,
    write_report, write_stats_csv, write_trace_csv, write_trials_csv, IoError, MissingPolicy,
    RunReport, REPORT_SCHEMA_VERSION,
};
use gridfill_core::datagen::ScenarioSpec;
use gridfill_core::harness::{compare_methods, run_monte_carlo, BurstScenario};
use gridfill_core::{DenseMatrix, MaskMatrix, ObservedMatrix, ReshapePlan};
use tempfile::tempdir;

#[test]
fn dense_csv_round_trip_is_bitwise() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("m.csv");
    // Deliberately awkward values: shortest-representation printing must
    // restore every bit.
    let m = DenseMatrix::from_rows(&[
        vec![0.1, 1.0 / 3.0, -0.0],
        vec![1e-300, 2.5e17, 0.30000000000000004],
    ])
    .unwrap();
    write_dense_csv(&m, &path).unwrap();
    let back = read_dense_csv(&path).unwrap();
    assert_eq!(m.array(), back.array());
}

#[test]
fn blank_fields_load_as_missing_under_the_lenient_policy() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("m.csv");
    fs::write(&path, "1,,3\nNaN,5,6\n").unwrap();
    let observed = read_matrix_csv(&path, MissingPolicy::EmptyOrNan).unwrap();
    assert_eq!(observed.mask().count_missing(), 2);
    assert!(!observed.mask().is_observed(0, 1));
    assert!(!observed.mask().is_observed(1, 0));
    assert_eq!(observed.values().get(0, 1), 0.0);
    assert_eq!(observed.values().get(0, 2), 3.0);
}

#[test]
fn strict_policy_rejects_blanks_and_nan_with_positions() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("m.csv");
    fs::write(&path, "1,2\n3,\n").unwrap();
    match read_matrix_csv(&path, MissingPolicy::Strict) {
        Err(IoError::BadNumber { line, field, .. }) => {
            assert_eq!((line, field), (2, 2));
        }
        other => panic!("expected a bad-number error, got {other:?}"),
    }
    fs::write(&path, "1,2\nNaN,4\n").unwrap();
    assert!(matches!(
        read_matrix_csv(&path, MissingPolicy::Strict),
        Err(IoError::BadNumber { line: 2, field: 1, .. })
    ));
}

#[test]
fn observed_csv_round_trip_keeps_mask_and_values() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("m.csv");
    let values = DenseMatrix::from_rows(&[vec![1.5, 2.0], vec![3.0, 4.25]]).unwrap();
    let mask = MaskMatrix::from_rows(&[vec![1, 0], vec![0, 1]]).unwrap();
    let observed = ObservedMatrix::new(values, mask).unwrap();
    write_observed_csv(&observed, &path).unwrap();
    let back = read_matrix_csv(&path, MissingPolicy::EmptyOrNan).unwrap();
    assert_eq!(back.values().array(), observed.values().array());
    assert_eq!(back.mask().to_f64(), observed.mask().to_f64());
}

#[test]
fn mask_csv_round_trip_and_validation() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("mask.csv");
    let mask = MaskMatrix::from_rows(&[vec![1, 0, 1], vec![0, 1, 1]]).unwrap();
    write_mask_csv(&mask, &path).unwrap();
    let back = read_mask_csv(&path).unwrap();
    assert_eq!(back.to_f64(), mask.to_f64());

    fs::write(&path, "1,0\n2,1\n").unwrap();
    assert!(matches!(
        read_mask_csv(&path),
        Err(IoError::BadMaskBit { .. })
    ));
}

#[test]
fn sidecar_mask_is_authoritative() {
    let dir = tempdir().unwrap();
    let values_path = dir.path().join("v.csv");
    let mask_path = dir.path().join("m.csv");
    // A genuine zero at an observed position plus a nonzero value the mask
    // declares missing: the loaded matrix must zero the latter.
    fs::write(&values_path, "0,7\n3,4\n").unwrap();
    fs::write(&mask_path, "1,0\n1,1\n").unwrap();
    let observed = read_observed_with_sidecar(&values_path, &mask_path).unwrap();
    assert_eq!(observed.values().get(0, 0), 0.0);
    assert!(observed.mask().is_observed(0, 0));
    assert_eq!(observed.values().get(0, 1), 0.0);
    assert!(!observed.mask().is_observed(0, 1));
}

#[test]
fn sidecar_shape_and_presence_conflicts_are_errors() {
    let dir = tempdir().unwrap();
    let values_path = dir.path().join("v.csv");
    let mask_path = dir.path().join("m.csv");
    fs::write(&values_path, "1,2\n3,4\n").unwrap();
    fs::write(&mask_path, "1,0,1\n1,1,0\n").unwrap();
    assert!(matches!(
        read_observed_with_sidecar(&values_path, &mask_path),
        Err(IoError::MaskShapeMismatch { .. })
    ));
    // The mask claims (1,2) is observed but the value file leaves it blank.
    fs::write(&values_path, "1,\n3,4\n").unwrap();
    fs::write(&mask_path, "1,1\n1,1\n").unwrap();
    assert!(matches!(
        read_observed_with_sidecar(&values_path, &mask_path),
        Err(IoError::ObservedValueMissing { .. })
    ));
}

#[test]
fn ragged_and_empty_inputs_are_errors() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("m.csv");
    fs::write(&path, "1,2\n3\n").unwrap();
    assert!(matches!(
        read_dense_csv(&path),
        Err(IoError::RaggedRow {
            line: 2,
            expected: 2,
            got: 1,
            ..
        })
    ));
    fs::write(&path, "\n\n").unwrap();
    assert!(matches!(read_dense_csv(&path), Err(IoError::Empty { .. })));
    assert!(matches!(
        read_dense_csv(&dir.path().join("absent.csv")),
        Err(IoError::Io { .. })
    ));
}

#[test]
fn report_round_trip_preserves_every_field() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("report.txt");
    let mut report = RunReport::new("admm");
    report.converged = true;
    report.iterations = 42;
    report.final_residual = 3.25e-5;
    report.elapsed_ms = 123.5;
    report.mae = Some(0.0123);
    report.reshape = Some(ReshapePlan {
        n1: 1800,
        n2: 86,
        n_star: 20,
        seg_len: 90,
    });
    report.push_config("rho", 0.00075);
    report.push_config("eps", 0.0377);
    write_report(&report, &path).unwrap();
    let back = read_report(&path).unwrap();
    assert_eq!(back, report);
    assert_eq!(back.schema_version, REPORT_SCHEMA_VERSION);
}

#[test]
fn minimal_report_omits_optional_sections() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("report.txt");
    let report = RunReport::new("persistent");
    write_report(&report, &path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert!(!text.contains("mae="));
    assert!(!text.contains("reshape."));
    let back = read_report(&path).unwrap();
    assert_eq!(back.mae, None);
    assert_eq!(back.reshape, None);
    assert!(back.final_residual.is_nan());
}

#[test]
fn report_reader_rejects_malformed_documents() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("report.txt");
    fs::write(&path, "method=admm\n").unwrap();
    assert!(matches!(
        read_report(&path),
        Err(IoError::MissingKey { ref key, .. }) if key == "schema_version"
    ));
    fs::write(&path, "schema_version=1\n").unwrap();
    assert!(matches!(
        read_report(&path),
        Err(IoError::MissingKey { ref key, .. }) if key == "method"
    ));
    fs::write(&path, "schema_version=1\nmethod=admm\nbogus=1\n").unwrap();
    assert!(matches!(read_report(&path), Err(IoError::UnknownKey { .. })));
    fs::write(&path, "schema_version=1\nmethod=admm\nreshape.n1=6\n").unwrap();
    assert!(matches!(read_report(&path), Err(IoError::BadValue { .. })));
    fs::write(&path, "schema_version=1\nmethod admm\n").unwrap();
    assert!(matches!(read_report(&path), Err(IoError::BadLine { .. })));
}

#[test]
fn scenario_config_applies_keys_over_defaults() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("scenario.cfg");
    fs::write(&path, "# comment\n\nrows=300\ncols=12\nnoise_var=0.01\nseed=5\n").unwrap();
    let spec = read_scenario_config(&path).unwrap();
    assert_eq!(spec.rows, 300);
    assert_eq!(spec.cols, 12);
    assert_eq!(spec.noise_var, 0.01);
    assert_eq!(spec.seed, 5);
    // untouched keys keep the reference defaults
    assert_eq!(spec.signal_rank, ScenarioSpec::default().signal_rank);
    assert_eq!(spec.event, ScenarioSpec::default().event);

    fs::write(&path, "event=off\n").unwrap();
    assert_eq!(read_scenario_config(&path).unwrap().event, None);
    fs::write(&path, "event=on\nevent.onset=33\n").unwrap();
    assert_eq!(read_scenario_config(&path).unwrap().event.unwrap().onset, 33);

    fs::write(&path, "rows=10\nbogus=1\n").unwrap();
    assert!(matches!(
        read_scenario_config(&path),
        Err(IoError::UnknownKey { ref key, .. }) if key == "bogus"
    ));
}

#[test]
fn grid_config_overrides_the_desk_defaults() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("grid.cfg");
    fs::write(
        &path,
        "probabilities=0.5, 0.7,0.9\nmethods=admm,persistent\ntrials=7\nbase_seed=11\n\
         regime=rows\nreshape=n=4\nscenario.rows=120\nscenario.cols=6\n",
    )
    .unwrap();
    let grid = read_grid_config(&path).unwrap();
    assert_eq!(grid.probabilities, vec![0.5, 0.7, 0.9]);
    assert_eq!(grid.methods, vec![MethodId::Admm, MethodId::Persistent]);
    assert_eq!(grid.trials, 7);
    assert_eq!(grid.base_seed, 11);
    assert_eq!(grid.regime, MaskRegime::Rows);
    assert_eq!(grid.reshape, ReshapeMode::Cut(4));
    assert_eq!(grid.scenario.rows, 120);
    assert_eq!(grid.scenario.cols, 6);
    assert!(grid.validate().is_ok());

    fs::write(&path, "").unwrap();
    assert_eq!(read_grid_config(&path).unwrap(), BenchmarkGrid::desk_default());

    fs::write(&path, "methods=warp\n").unwrap();
    assert!(matches!(
        read_grid_config(&path),
        Err(IoError::BadValue { .. })
    ));
    fs::write(&path, "bogus=1\n").unwrap();
    assert!(matches!(
        read_grid_config(&path),
        Err(IoError::UnknownKey { .. })
    ));
}

#[test]
fn benchmark_artifact_writers_emit_one_row_per_record() {
    let dir = tempdir().unwrap();
    let grid = BenchmarkGrid {
        scenario: ScenarioSpec {
            rows: 60,
            cols: 8,
            signal_rank: 1,
            noise_var: 1e-3,
            event: None,
            seed: 0,
        },
        probabilities: vec![0.7, 0.9],
        methods: vec![MethodId::Persistent],
        trials: 4,
        base_seed: 3,
        regime: MaskRegime::Entrywise,
        reshape: ReshapeMode::Off,
    };
    let stats = run_monte_carlo(&grid).unwrap();

    let stats_path = dir.path().join("stats.csv");
    write_stats_csv(&stats, &stats_path).unwrap();
    let text = fs::read_to_string(&stats_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1 + stats.len());
    assert_eq!(
        lines[0],
        "method,scenario,observed_probability,trials,failures,not_converged,no_missing,mean_mae,min_mae,max_mae"
    );

    let trials_path = dir.path().join("trials.csv");
    write_trials_csv(&stats, &trials_path).unwrap();
    let text = fs::read_to_string(&trials_path).unwrap();
    let expected_rows: usize = stats.iter().map(|s| s.per_trial.len()).sum();
    assert_eq!(text.lines().count(), 1 + expected_rows);
}

#[test]
fn trace_csv_has_one_column_per_method() {
    let dir = tempdir().unwrap();
    let spec = ScenarioSpec {
        rows: 60,
        cols: 8,
        signal_rank: 1,
        noise_var: 1e-3,
        event: None,
        seed: 1,
    };
    let burst = BurstScenario {
        channels: vec![1],
        burst_start: 5,
        burst_end: 10,
        trace_start: 1,
        trace_end: 20,
    };
    let cmp = compare_methods(&spec, &burst).unwrap();
    let path = dir.path().join("trace.csv");
    write_trace_csv(&cmp, &path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "channel,instant,truth,admm,als,persistent"
    );
    assert_eq!(lines.count(), cmp.rows.len());
}
