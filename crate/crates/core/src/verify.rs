//! Identity and oracle checks that need no long evolution: Minkowski
//! residual refinement, cap oracles, stationarity of caps, round trips.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::{audit, compute_area, compute_volume, minkowski_residuals};
use crate::error::Result;
use crate::flow::{self, FlowConfig, FlowState, InitialCondition};
use crate::grid::{GridMode, HemisphereGrid, RadialField};
use crate::halfspace::{cap_area, cap_volume, mobius_inverse, mobius_to_ball, PolarPoint};
use crate::io;
use crate::oracles::{cap_area_n2, cap_volume_n2, monte_carlo_volume_n2};

/// Most time steps any check may take.
pub const MAX_STEPS: usize = 10;

pub const MINKOWSKI1_TOL: f64 = 1e-3;
pub const MINKOWSKI2_TOL: f64 = 2e-3;
pub const MINKOWSKI1_ORDER: f64 = 1.9;
pub const MINKOWSKI2_ORDER: f64 = 1.8;
pub const ORACLE_TOL: f64 = 1e-6;
pub const MONTE_CARLO_REL_TOL: f64 = 1e-3;
pub const MONTE_CARLO_CELLS: usize = 215;
pub const RHS_ORDER: f64 = 1.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Quick,
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag}  {:<28} {}", self.name, self.detail)
    }
}

/// Smallest of the successive observed orders `log2(e_k / e_{k+1})`.
pub fn observed_order(errors: &[f64]) -> f64 {
    errors
        .windows(2)
        .map(|w| (w[0] / w[1]).log2())
        .fold(f64::INFINITY, f64::min)
}

pub fn zonal_field(n: usize, nphi: usize, gamma0: f64, amplitude: f64, k: u32) -> Result<RadialField> {
    let grid = Arc::new(HemisphereGrid::axisymmetric(n, nphi)?);
    flow::make_initial_condition(&InitialCondition::Zonal { gamma0, amplitude, k }, grid)
}

fn constant(n: usize, nphi: usize, rho0: f64) -> Result<RadialField> {
    Ok(RadialField::constant(
        Arc::new(HemisphereGrid::axisymmetric(n, nphi)?),
        rho0.ln(),
    ))
}

/// Minkowski residuals of the zonal test surface at `nphi = 64, 128, 256`.
pub fn minkowski_study() -> Result<Vec<(f64, f64)>> {
    [64, 128, 256]
        .iter()
        .map(|&nphi| minkowski_residuals(&zonal_field(2, nphi, 0.0, 0.2, 1)?))
        .collect()
}

fn minkowski_checks() -> Result<Vec<Check>> {
    let study = minkowski_study()?;
    let r1: Vec<f64> = study.iter().map(|r| r.0).collect();
    let r2: Vec<f64> = study.iter().map(|r| r.1).collect();
    let (o1, o2) = (observed_order(&r1), observed_order(&r2));
    Ok(vec![
        Check::new(
            "minkowski-1 refinement",
            r1[1] < MINKOWSKI1_TOL && o1 >= MINKOWSKI1_ORDER,
            format!("r1(128) = {:.3e}, order = {o1:.3}", r1[1]),
        ),
        Check::new(
            "minkowski-2 refinement",
            r2[1] < MINKOWSKI2_TOL && o2 >= MINKOWSKI2_ORDER,
            format!("r2(128) = {:.3e}, order = {o2:.3}", r2[1]),
        ),
    ])
}

/// `flow_rhs` vanishes identically on caps and `steps` steps change nothing.
pub fn stationarity(grid: Arc<HemisphereGrid>, rho0: f64, steps: usize) -> Result<bool> {
    let field = RadialField::constant(grid.clone(), rho0.ln());
    if flow::flow_rhs(&field).iter().any(|&r| r != 0.0) {
        return Ok(false);
    }
    let config = FlowConfig::new(
        grid.n(),
        grid.mode(),
        grid.nphi(),
        InitialCondition::Constant { gamma0: rho0.ln() },
    );
    let mut state = FlowState::new(field.clone());
    for _ in 0..steps {
        state = flow::step(state, &config)?;
    }
    Ok(state
        .field
        .values()
        .iter()
        .zip(field.values())
        .all(|(a, b)| a.to_bits() == b.to_bits()))
}

fn stationarity_checks(level: Level) -> Result<Vec<Check>> {
    let mut ok = true;
    for rho0 in [0.5, 1.0, 2.0] {
        ok &= stationarity(Arc::new(HemisphereGrid::axisymmetric(2, 64)?), rho0, MAX_STEPS)?;
        if level == Level::Full {
            ok &= stationarity(Arc::new(HemisphereGrid::axisymmetric(3, 32)?), rho0, MAX_STEPS)?;
            ok &= stationarity(Arc::new(HemisphereGrid::full2d(8, 8)?), rho0, MAX_STEPS)?;
        }
    }
    Ok(vec![Check::new(
        "cap stationarity",
        ok,
        format!("rho0 in {{0.5, 1, 2}}, {MAX_STEPS} steps bit-identical"),
    )])
}

fn oracle_checks(level: Level) -> Result<Vec<Check>> {
    let mut worst = 0.0f64;
    for rho0 in [0.5, 1.0, 2.0, 3.0] {
        let f = constant(2, 256, rho0)?;
        worst = worst
            .max((compute_volume(&f)? - cap_volume_n2(rho0)).abs())
            .max((compute_area(&f) - cap_area_n2(rho0)).abs());
    }
    let mut checks = vec![Check::new(
        "cap oracles (n = 2)",
        worst < ORACLE_TOL,
        format!("max |error| = {worst:.3e} at nphi = 256"),
    )];

    let f = constant(2, 128, 2.0)?;
    let volume = compute_volume(&f)?;
    let mc = monte_carlo_volume_n2(2.0, MONTE_CARLO_CELLS, 20_240_611);
    let rel = (volume - mc).abs() / mc;
    checks.push(Check::new(
        "monte carlo volume",
        rel < MONTE_CARLO_REL_TOL,
        format!("V = {volume:.6}, sampled = {mc:.6}, rel = {rel:.2e}"),
    ));

    if level == Level::Full {
        let mut worst = 0.0f64;
        for n in [3, 4] {
            for rho0 in [0.5, 2.0] {
                let f = constant(n, 256, rho0)?;
                worst = worst
                    .max(((compute_volume(&f)? - cap_volume(rho0, n)?) / cap_volume(rho0, n)?).abs())
                    .max(((compute_area(&f) - cap_area(rho0, n)?) / cap_area(rho0, n)?).abs());
            }
        }
        checks.push(Check::new(
            "cap integrals (n = 3, 4)",
            worst < ORACLE_TOL,
            format!("max relative error = {worst:.3e}"),
        ));
    }
    Ok(checks)
}

fn round_trip_checks() -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let p = PolarPoint::with_angle(
            rng.random_range(0.05..20.0),
            rng.random_range(0.0..PI / 2.0),
            rng.random_range(0.0..2.0 * PI),
        )?;
        let back = mobius_inverse(&mobius_to_ball(&p))?;
        worst = worst
            .max((back.rho - p.rho).abs() / p.rho)
            .max((back.phi - p.phi).abs());
    }
    let mobius = Check::new("mobius round trip", worst < 1e-10, format!("max error = {worst:.2e}"));

    let field = zonal_field(2, 32, 0.1, 0.15, 1)?;
    let (back, _) = io::parse_snapshot(&io::snapshot_to_string(&field, 3)?)?;
    let snapshot_ok = back
        .values()
        .iter()
        .zip(field.values())
        .all(|(a, b)| a.to_bits() == b.to_bits());

    let audits = vec![audit(&field)?];
    let series_ok = io::parse_timeseries(&io::timeseries_to_string(&audits))? == audits;
    Ok(vec![
        mobius,
        Check::new("snapshot round trip", snapshot_ok, "bit-identical gamma".into()),
        Check::new("time series round trip", series_ok, "bit-identical audit row".into()),
    ])
}

/// Max-norm gap between the two assembled right-hand sides at `nphi`.
pub fn rhs_gap(n: usize, nphi: usize) -> Result<f64> {
    let f = zonal_field(n, nphi, 0.2, 0.15, 1)?;
    let a = flow::flow_rhs(&f);
    let b = flow::flow_rhs_divergence(&f);
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

fn rhs_checks() -> Result<Vec<Check>> {
    let gaps = [32, 64, 128]
        .iter()
        .map(|&m| rhs_gap(2, m))
        .collect::<Result<Vec<_>>>()?;
    let order = observed_order(&gaps);
    let f = zonal_field(2, 64, 0.2, 0.15, 1)?;
    let scalar = flow::flow_rhs(&f);
    let extrinsic = flow::flow_rhs_extrinsic(&f)?;
    let gap = scalar
        .iter()
        .zip(&extrinsic)
        .map(|(a, b)| (a - b).abs() / (1.0 + a.abs()))
        .fold(0.0, f64::max);
    Ok(vec![
        Check::new(
            "rhs two-form agreement",
            order >= RHS_ORDER,
            format!("gap(128) = {:.3e}, order = {order:.3}", gaps[2]),
        ),
        Check::new("rhs extrinsic form", gap < 1e-12, format!("max gap = {gap:.2e}")),
    ])
}

pub fn run_suite(level: Level) -> Result<Vec<Check>> {
    let mut checks = minkowski_checks()?;
    checks.extend(stationarity_checks(level)?);
    checks.extend(oracle_checks(level)?);
    checks.extend(round_trip_checks()?);
    if level == Level::Full {
        checks.extend(rhs_checks()?);
        let grid = Arc::new(HemisphereGrid::new(GridMode::Full2d, 2, 12, 16)?);
        let field = RadialField::constant(grid, 0.3);
        let (r1, r2) = minkowski_residuals(&field)?;
        checks.push(Check::new(
            "full2d cap residuals",
            r1 < 1e-12 && r2 < 1e-12,
            format!("r1 = {r1:.2e}, r2 = {r2:.2e}"),
        ));
    }
    Ok(checks)
}
