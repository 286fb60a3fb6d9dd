//! Files in, files out: configuration, snapshots, time series, resumption.

use capflow_core::diagnostics::{audit, cap_fit};
use capflow_core::flow::{make_initial_condition, FlowState};
use capflow_core::io::{self, load_config, parse_snapshot, read_snapshot, write_snapshot, write_timeseries};
use capflow_core::{run, step, Error, FlowConfig, GridMode, InitialCondition};
use proptest::prelude::*;

const ZONAL: &str = "\
# perturbed cap
n = 2
mode = axisymmetric
nphi = 32
audit_every = 50
init.name = zonal
init.gamma0 = 0.3
init.amplitude = 0.15
init.k = 1
";

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, ZONAL).unwrap();
    let config = load_config(&path).unwrap();
    assert_eq!(config.nphi, 32);
    assert_eq!(config.audit_every, 50);
    assert_eq!(
        config.initial_condition,
        InitialCondition::Zonal {
            gamma0: 0.3,
            amplitude: 0.15,
            k: 1
        }
    );
    match load_config(&dir.path().join("missing.cfg")) {
        Err(Error::Io { path, .. }) => assert!(path.ends_with("missing.cfg")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn resumed_run_is_bit_identical() {
    let config = io::parse_config(ZONAL).unwrap();
    let field = make_initial_condition(&config.initial_condition, config.build_grid().unwrap()).unwrap();
    let mut straight = FlowState::new(field);
    for _ in 0..40 {
        straight = step(straight, &config).unwrap();
    }
    let text = io::snapshot_to_string(&straight.field, straight.step_count).unwrap();
    let (field, steps) = parse_snapshot(&text).unwrap();
    let mut resumed = FlowState::resume(field, steps);
    resumed.initial_min = straight.initial_min;
    resumed.initial_max = straight.initial_max;
    for _ in 0..60 {
        straight = step(straight, &config).unwrap();
        resumed = step(resumed, &config).unwrap();
    }
    assert_eq!(resumed.step_count, straight.step_count);
    assert_eq!(resumed.field.time.to_bits(), straight.field.time.to_bits());
    for (a, b) in resumed.field.values().iter().zip(straight.field.values()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn converged_snapshot_gives_the_same_cap_fit() {
    let config = io::parse_config(ZONAL).unwrap();
    let report = run(&config).unwrap();
    let (fit, _) = report.cap.unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("final.csv");
    write_snapshot(&report.state.field, report.state.step_count, &path).unwrap();
    let (field, steps) = read_snapshot(&path).unwrap();
    assert_eq!(steps, report.state.step_count);
    assert_eq!(cap_fit(&field).unwrap(), fit);
}

#[test]
fn identical_configs_give_identical_time_series() {
    let mut config = FlowConfig::new(
        2,
        GridMode::Full2d,
        8,
        InitialCondition::RandomSmooth {
            gamma0: 0.1,
            amplitude: 0.2,
            seed: 42,
            cutoff: 4,
        },
    );
    config.ntheta = 8;
    config.t_max = 0.05;
    config.audit_every = 20;
    let a = io::timeseries_to_string(&run(&config).unwrap().audits);
    let b = io::timeseries_to_string(&run(&config).unwrap().audits);
    assert_eq!(a, b);
    assert!(a.starts_with(
        "time,volume,area,minkowski1_residual,minkowski2_residual,max_grad_sq,curvature_spread,gamma_min,gamma_max,area_rate_mismatch"
    ));
}

#[test]
fn stationary_time_series_has_constant_columns() {
    let config = io::parse_config("init.gamma0 = 0.5\nnphi = 16").unwrap();
    let mut state =
        FlowState::new(make_initial_condition(&config.initial_condition, config.build_grid().unwrap()).unwrap());
    let mut audits = vec![audit(&state.field).unwrap()];
    for _ in 0..3 {
        for _ in 0..10 {
            state = step(state, &config).unwrap();
        }
        audits.push(audit(&state.field).unwrap());
    }
    let text = io::timeseries_to_string(&audits);
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    for row in &rows[1..] {
        // every column but time
        assert_eq!(row[1..], rows[0][1..]);
        assert_ne!(row[0], rows[0][0]);
    }
}

#[test]
fn empty_time_series_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    assert!(write_timeseries(&[], &dir.path().join("t.csv")).is_err());
}

proptest! {
    #[test]
    fn snapshot_values_round_trip(values in prop::collection::vec(-5.0f64..5.0, 8), time in 0.0f64..10.0) {
        let grid = std::sync::Arc::new(capflow_core::HemisphereGrid::axisymmetric(3, 8).unwrap());
        let field = capflow_core::RadialField::new(grid, values, time).unwrap();
        let (back, _) = parse_snapshot(&io::snapshot_to_string(&field, 0).unwrap()).unwrap();
        prop_assert_eq!(back.values(), field.values());
        prop_assert_eq!(back.time.to_bits(), field.time.to_bits());
    }

    #[test]
    fn float_formatting_round_trips(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(io::fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
    }
}
