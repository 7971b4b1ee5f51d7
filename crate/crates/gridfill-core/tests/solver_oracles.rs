//! Solver correctness against closed-form oracles plus the structural
//! invariants: dual support, objective monotonicity, determinism, and
//! error taxonomy.

use gridfill_core::datagen::{apply_random_mask, generate_synthetic, ScenarioSpec};
use gridfill_core::solvers::{AdmmIteration, AlsIteration};
use gridfill_core::{
    admm_complete, als_complete, clamp_observed, persistent_fill, AdmmConfig, AlsConfig,
    DenseMatrix, MaskMatrix, ObservedMatrix, SolverError,
};

/// The rank-one test matrix [[1,2],[2,4]] with one entry hidden.
fn rank_one_observed(missing: (usize, usize)) -> ObservedMatrix {
    let values = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
    let mask = MaskMatrix::from_fn(2, 2, |i, j| (i, j) != missing).unwrap();
    ObservedMatrix::new(values, mask).unwrap()
}

fn oracle_admm_config() -> AdmmConfig {
    AdmmConfig {
        rho: 0.05,
        eps: 1e-8,
        k_max: 60_000,
        init_seed: 0,
        init_scale: 1.0,
    }
}

fn oracle_als_config() -> AlsConfig {
    AlsConfig {
        rank_r: 1,
        lambda: 1e-4,
        max_iters: 4000,
        tol: 1e-12,
        init_seed: 0,
    }
}

#[test]
fn als_recovers_every_rank_one_entry() {
    // Closed-form rank-1 completions of [[1,2],[2,4]].
    let cells = [
        ((0, 0), 1.0),
        ((0, 1), 2.0),
        ((1, 0), 2.0),
        ((1, 1), 4.0),
    ];
    for (cell, want) in cells {
        let observed = rank_one_observed(cell);
        let result = als_complete(&observed, &oracle_als_config()).unwrap();
        let got = result.xhat.get(cell.0, cell.1);
        assert!(
            (got - want).abs() < 1e-2,
            "cell {cell:?}: recovered {got}, closed form {want}"
        );
    }
}

#[test]
fn admm_recovers_edge_entries_of_the_rank_one_matrix() {
    for (cell, want) in [((0, 0), 1.0), ((0, 1), 2.0), ((1, 0), 2.0)] {
        let observed = rank_one_observed(cell);
        let result = admm_complete(&observed, &oracle_admm_config()).unwrap();
        assert!(result.converged);
        let got = result.xhat.get(cell.0, cell.1);
        assert!(
            (got - want).abs() < 1e-2,
            "cell {cell:?}: recovered {got}, closed form {want}"
        );
    }
}

#[test]
fn admm_returns_the_minimum_nuclear_norm_corner() {
    // Hiding the (2,2) entry of [[1,2],[2,4]] admits the rank-one completion
    // 4, but among all completions [[1,2],[2,t]] the summed-singular-value
    // norm is minimized at t = 1 (norm 4, versus 5 at t = 4). The
    // factorization solver minimizes exactly that norm, so 1 — not the
    // rank-one value — is its correct limit here.
    let observed = rank_one_observed((1, 1));
    let result = admm_complete(&observed, &oracle_admm_config()).unwrap();
    assert!(result.converged);
    let got = result.xhat.get(1, 1);
    assert!(
        (got - 1.0).abs() < 1e-2,
        "corner completion {got}, minimum-nuclear-norm value 1.0"
    );
}

#[test]
fn dual_support_never_leaves_the_observed_set() {
    let spec = ScenarioSpec {
        rows: 60,
        cols: 8,
        signal_rank: 1,
        noise_var: 1e-3,
        event: None,
        seed: 11,
    };
    let truth = generate_synthetic(&spec).unwrap();
    let observed = apply_random_mask(&truth, 0.8, 4).unwrap();
    let config = AdmmConfig {
        init_seed: 1,
        ..AdmmConfig::for_observed(&observed).unwrap()
    };
    let mut iter = AdmmIteration::new(&observed, &config).unwrap();
    for _ in 0..40 {
        iter.step().unwrap();
    }
    // Tall input, so the internal orientation matches the input mask.
    assert!(!iter.is_transposed());
    let state = iter.state();
    for i in 0..observed.rows() {
        for j in 0..observed.cols() {
            if !observed.mask().is_observed(i, j) {
                assert_eq!(state.w[(i, j)], 0.0, "dual leaked into missing ({i},{j})");
            }
        }
    }
}

#[test]
fn als_objective_is_monotonically_nonincreasing() {
    let spec = ScenarioSpec {
        rows: 90,
        cols: 12,
        signal_rank: 2,
        noise_var: 1e-2,
        event: None,
        seed: 21,
    };
    let truth = generate_synthetic(&spec).unwrap();
    let observed = apply_random_mask(&truth, 0.7, 8).unwrap();
    let config = AlsConfig {
        rank_r: 4,
        tol: 1e-14,
        max_iters: 60,
        ..AlsConfig::default()
    };
    let mut iter = AlsIteration::new(&observed, &config).unwrap();
    let mut prev = iter.objective();
    for sweep in 0..60 {
        iter.sweep().unwrap();
        let cur = iter.objective();
        assert!(
            cur <= prev * (1.0 + 1e-10) + 1e-12,
            "objective rose at sweep {sweep}: {prev} -> {cur}"
        );
        prev = cur;
    }
}

#[test]
fn solvers_are_deterministic_under_a_fixed_seed() {
    let spec = ScenarioSpec {
        rows: 80,
        cols: 10,
        signal_rank: 1,
        noise_var: 1e-3,
        event: None,
        seed: 33,
    };
    let truth = generate_synthetic(&spec).unwrap();
    let observed = apply_random_mask(&truth, 0.8, 5).unwrap();

    let admm_cfg = AdmmConfig {
        init_seed: 7,
        ..AdmmConfig::for_observed(&observed).unwrap()
    };
    let a1 = admm_complete(&observed, &admm_cfg).unwrap();
    let a2 = admm_complete(&observed, &admm_cfg).unwrap();
    assert_eq!(a1.xhat.array(), a2.xhat.array());
    assert_eq!(a1.iterations, a2.iterations);
    assert_eq!(a1.residual_history, a2.residual_history);

    let als_cfg = AlsConfig {
        init_seed: 7,
        ..AlsConfig::default()
    };
    let b1 = als_complete(&observed, &als_cfg).unwrap();
    let b2 = als_complete(&observed, &als_cfg).unwrap();
    assert_eq!(b1.xhat.array(), b2.xhat.array());
    assert_eq!(b1.iterations, b2.iterations);
}

#[test]
fn wide_input_result_is_the_transpose_of_the_tall_run() {
    let spec = ScenarioSpec {
        rows: 40,
        cols: 6,
        signal_rank: 1,
        noise_var: 1e-3,
        event: None,
        seed: 12,
    };
    let truth = generate_synthetic(&spec).unwrap();
    let tall = apply_random_mask(&truth, 0.8, 2).unwrap();
    let wide = tall.transposed();
    let config = AdmmConfig {
        init_seed: 3,
        ..AdmmConfig::for_observed(&tall).unwrap()
    };
    let from_tall = admm_complete(&tall, &config).unwrap();
    let from_wide = admm_complete(&wide, &config).unwrap();
    assert_eq!(
        from_wide.xhat.array(),
        &from_tall.xhat.array().t().to_owned()
    );
    assert_eq!(from_wide.iterations, from_tall.iterations);
}

#[test]
fn data_derived_defaults_match_their_definitions() {
    // Fully observed diag(3,4) padded tall: spectral norm 4, Frobenius 5.
    let values = DenseMatrix::from_rows(&[
        vec![3.0, 0.0],
        vec![0.0, 4.0],
        vec![0.0, 0.0],
    ])
    .unwrap();
    let observed = ObservedMatrix::fully_observed(values);
    let config = AdmmConfig::for_observed(&observed).unwrap();
    assert!((config.rho - 0.264 / 4.0).abs() < 1e-6, "rho {}", config.rho);
    assert!((config.eps - 1e-4 * 5.0).abs() < 1e-12, "eps {}", config.eps);
    assert_eq!(config.k_max, 5000);
}

#[test]
fn oversized_step_size_is_reported_as_divergence() {
    let observed = rank_one_observed((1, 1));
    let config = AdmmConfig {
        rho: 50.0,
        eps: 1e-8,
        k_max: 10_000,
        init_seed: 0,
        init_scale: 1.0,
    };
    match admm_complete(&observed, &config) {
        Err(SolverError::Divergence { rho, .. }) => assert_eq!(rho, 50.0),
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn iteration_cap_yields_unconverged_result_not_error() {
    let observed = rank_one_observed((1, 1));
    let config = AdmmConfig {
        k_max: 3,
        ..oracle_admm_config()
    };
    let result = admm_complete(&observed, &config).unwrap();
    assert!(!result.converged);
    assert_eq!(result.iterations, 3);
}

#[test]
fn degenerate_inputs_are_rejected() {
    let values = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
    let none = MaskMatrix::from_rows(&[vec![0, 0], vec![0, 0]]).unwrap();
    let observed = ObservedMatrix::new(values.clone(), none).unwrap();
    assert!(matches!(
        AdmmConfig::for_observed(&observed),
        Err(SolverError::DegenerateInput(_))
    ));
    assert!(matches!(
        als_complete(&observed, &AlsConfig::default()),
        Err(SolverError::DegenerateInput(_))
    ));

    let zeros = DenseMatrix::zeros(2, 2).unwrap();
    let all = MaskMatrix::ones(2, 2).unwrap();
    let observed = ObservedMatrix::new(zeros, all).unwrap();
    assert!(matches!(
        AdmmConfig::for_observed(&observed),
        Err(SolverError::DegenerateInput(_))
    ));
}

#[test]
fn parameter_validation_errors() {
    let observed = rank_one_observed((0, 0));
    let bad_rho = AdmmConfig {
        rho: 0.0,
        ..oracle_admm_config()
    };
    assert!(matches!(
        admm_complete(&observed, &bad_rho),
        Err(SolverError::Parameter(_))
    ));
    let bad_rank = AlsConfig {
        rank_r: 0,
        ..AlsConfig::default()
    };
    assert!(matches!(
        als_complete(&observed, &bad_rank),
        Err(SolverError::Parameter(_))
    ));
    let bad_lambda = AlsConfig {
        lambda: -1.0,
        ..AlsConfig::default()
    };
    assert!(matches!(
        als_complete(&observed, &bad_lambda),
        Err(SolverError::Parameter(_))
    ));
}

#[test]
fn persistent_fill_carries_last_observation_per_channel() {
    let values = DenseMatrix::from_rows(&[
        vec![1.0, 10.0],
        vec![9.0, 20.0],
        vec![9.0, 30.0],
        vec![4.0, 40.0],
    ])
    .unwrap();
    let mask = MaskMatrix::from_rows(&[
        vec![1, 0],
        vec![0, 1],
        vec![0, 1],
        vec![1, 1],
    ])
    .unwrap();
    let observed = ObservedMatrix::new(values, mask).unwrap();
    let filled = persistent_fill(&observed).unwrap();
    // Channel 1 carries 1.0 forward; channel 2 backfills its leading gap
    // with the first observation.
    let expected = DenseMatrix::from_rows(&[
        vec![1.0, 20.0],
        vec![1.0, 20.0],
        vec![1.0, 30.0],
        vec![4.0, 40.0],
    ])
    .unwrap();
    assert_eq!(filled.array(), expected.array());
}

#[test]
fn persistent_fill_rejects_fully_dark_channel() {
    let values = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
    let mask = MaskMatrix::from_rows(&[vec![1, 0], vec![1, 0]]).unwrap();
    let observed = ObservedMatrix::new(values, mask).unwrap();
    assert!(matches!(
        persistent_fill(&observed),
        Err(SolverError::AllMissingColumn { column: 2 })
    ));
}

#[test]
fn clamp_restores_observed_entries_exactly() {
    let observed = rank_one_observed((1, 1));
    let estimate = DenseMatrix::from_rows(&[vec![1.1, 2.2], vec![1.9, 3.7]]).unwrap();
    let clamped = clamp_observed(&estimate, &observed).unwrap();
    assert_eq!(clamped.get(0, 0), 1.0);
    assert_eq!(clamped.get(0, 1), 2.0);
    assert_eq!(clamped.get(1, 0), 2.0);
    assert_eq!(clamped.get(1, 1), 3.7);
}
