//! Time evolution of `gamma = log rho` under
//!
//! ```text
//! d_t gamma = (sigma^{ij} - gamma^i gamma^j / v^2) gamma_{ij} / (rho v e^w)
//!           + n sin(phi) gamma_phi / v - n (rho^2 - 1) |grad gamma|^2 / (2 rho v)
//! ```
//!
//! with `d gamma / d phi = 0` on the equator, advanced by explicit Euler
//! steps whose size is tied to the largest diffusivity on the grid.

use std::f64::consts::FRAC_PI_2;
use std::path::PathBuf;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::diagnostics::{self, CapFit, FlowAudit};
use crate::error::{Error, Result};
use crate::grid::{GridMode, HemisphereGrid, Jet, RadialField};
use crate::halfspace::{cap_from_rho0, SphericalCap};
use crate::quadrature::gauss_legendre8;
use crate::surface::PointwiseGeometry;

/// Largest admissible `|gamma|`; beyond it `e^gamma` loses too much precision.
pub const GAMMA_LIMIT: f64 = 20.0;

/// Absolute slack on the maximum-principle bounds.
pub const C0_SLACK: f64 = 1e-8;

/// Node count above which the right-hand side is evaluated in parallel.
const PARALLEL_THRESHOLD: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum InitialCondition {
    Constant {
        gamma0: f64,
    },
    /// `gamma0 + amplitude cos(2 k phi)`.
    Zonal {
        gamma0: f64,
        amplitude: f64,
        k: u32,
    },
    /// Gaussian bump in chordal distance around `(phi_c, theta_c)`, plus its
    /// mirror image across the equator.
    Bump {
        gamma0: f64,
        amplitude: f64,
        phi_c: f64,
        theta_c: f64,
        width: f64,
    },
    /// Random polynomial in the ambient coordinates `(X, Y, Z)` of the
    /// sphere, even in `Z`, of total degree at most `cutoff`, scaled so the
    /// largest deviation on the grid equals `amplitude`.
    RandomSmooth {
        gamma0: f64,
        amplitude: f64,
        seed: u64,
        cutoff: u32,
    },
}

impl InitialCondition {
    pub fn name(&self) -> &'static str {
        match self {
            InitialCondition::Constant { .. } => "constant",
            InitialCondition::Zonal { .. } => "zonal",
            InitialCondition::Bump { .. } => "bump",
            InitialCondition::RandomSmooth { .. } => "random_smooth",
        }
    }
}

pub fn make_initial_condition(ic: &InitialCondition, grid: Arc<HemisphereGrid>) -> Result<RadialField> {
    let field = match *ic {
        InitialCondition::Constant { gamma0 } => RadialField::from_fn(grid, |_, _| gamma0)?,
        InitialCondition::Zonal { gamma0, amplitude, k } => {
            RadialField::from_fn(grid, |phi, _| gamma0 + amplitude * (2.0 * k as f64 * phi).cos())?
        }
        InitialCondition::Bump {
            gamma0,
            amplitude,
            phi_c,
            theta_c,
            width,
        } => {
            if !(width > 0.0) {
                return Err(Error::InvalidInitialCondition("bump width must be positive".into()));
            }
            if !(0.0..=FRAC_PI_2).contains(&phi_c) {
                return Err(Error::InvalidInitialCondition(
                    "bump phi_c must lie in [0, pi/2]".into(),
                ));
            }
            if grid.mode() == GridMode::Axisymmetric && phi_c != 0.0 {
                return Err(Error::InvalidInitialCondition(
                    "an off-axis bump needs the full2d grid".into(),
                ));
            }
            let centre = ambient(phi_c, theta_c);
            let mirror = [centre[0], centre[1], -centre[2]];
            RadialField::from_fn(grid, |phi, theta| {
                let y = ambient(phi, theta);
                let gauss = |c: [f64; 3]| {
                    let d2: f64 = (0..3).map(|i| (y[i] - c[i]).powi(2)).sum();
                    (-d2 / (width * width)).exp()
                };
                gamma0 + amplitude * (gauss(centre) + gauss(mirror))
            })?
        }
        InitialCondition::RandomSmooth {
            gamma0,
            amplitude,
            seed,
            cutoff,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut terms = Vec::new();
            for c in 0..=cutoff / 2 {
                let rest = cutoff - 2 * c;
                for a in 0..=rest {
                    for b in 0..=rest - a {
                        if a + b + c == 0 || (grid.mode() == GridMode::Axisymmetric && a + b > 0) {
                            continue;
                        }
                        terms.push((a as i32, b as i32, 2 * c as i32, rng.random_range(-1.0..1.0)));
                    }
                }
            }
            if terms.is_empty() {
                return Err(Error::InvalidInitialCondition(format!(
                    "cutoff {cutoff} leaves no admissible modes"
                )));
            }
            let poly = RadialField::from_fn(grid.clone(), |phi, theta| {
                let y = ambient(phi, theta);
                terms
                    .iter()
                    .map(|&(a, b, c, coef)| coef * y[0].powi(a) * y[1].powi(b) * y[2].powi(c))
                    .sum()
            })?;
            let mean = grid.integrate(poly.values()) / grid.hemisphere_area();
            let scale = poly.values().iter().map(|p| (p - mean).abs()).fold(0.0, f64::max);
            if scale == 0.0 {
                return Err(Error::InvalidInitialCondition("random field is constant".into()));
            }
            let values = poly
                .values()
                .iter()
                .map(|p| gamma0 + amplitude * (p - mean) / scale)
                .collect();
            RadialField::new(grid, values, 0.0)?
        }
    };
    if let Some(bad) = field.values().iter().find(|g| g.abs() > GAMMA_LIMIT) {
        return Err(Error::InvalidInitialCondition(format!(
            "|gamma| = {} exceeds {GAMMA_LIMIT}",
            bad.abs()
        )));
    }
    Ok(field)
}

fn ambient(phi: f64, theta: f64) -> [f64; 3] {
    let (s, c) = phi.sin_cos();
    [s * theta.cos(), s * theta.sin(), c]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowConfig {
    pub n: usize,
    pub mode: GridMode,
    pub nphi: usize,
    /// Ignored in axisymmetric mode.
    pub ntheta: usize,
    pub dt_safety: f64,
    pub t_max: f64,
    pub grad_tol: f64,
    pub audit_every: usize,
    pub initial_condition: InitialCondition,
    pub out_dir: Option<PathBuf>,
}

impl FlowConfig {
    pub fn new(n: usize, mode: GridMode, nphi: usize, initial_condition: InitialCondition) -> Self {
        Self {
            n,
            mode,
            nphi,
            ntheta: 64,
            dt_safety: 0.4,
            t_max: 50.0,
            grad_tol: 1e-10,
            audit_every: 200,
            initial_condition,
            out_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt_safety > 0.0 && self.dt_safety < 1.0) {
            return Err(Error::config(
                "dt_safety",
                format!("must lie in (0, 1), got {}", self.dt_safety),
            ));
        }
        if !(self.t_max > 0.0) {
            return Err(Error::config("t_max", format!("must be positive, got {}", self.t_max)));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::config(
                "grad_tol",
                format!("must be positive, got {}", self.grad_tol),
            ));
        }
        if self.audit_every == 0 {
            return Err(Error::config("audit_every", "must be at least 1"));
        }
        if self.n < 2 {
            return Err(Error::config("n", format!("must be >= 2, got {}", self.n)));
        }
        if self.mode == GridMode::Full2d && self.n != 2 {
            return Err(Error::config(
                "mode",
                format!("full2d requires n = 2, got n = {}", self.n),
            ));
        }
        Ok(())
    }

    pub fn build_grid(&self) -> Result<Arc<HemisphereGrid>> {
        Ok(Arc::new(HemisphereGrid::new(
            self.mode,
            self.n,
            self.nphi,
            self.ntheta,
        )?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    None,
    GradientConverged,
    TMaxReached,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::None => "none",
            StopReason::GradientConverged => "gradient_converged",
            StopReason::TMaxReached => "t_max_reached",
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlowState {
    pub field: RadialField,
    pub step_count: u64,
    pub dt_last: f64,
    pub stopped_reason: StopReason,
    /// Range of the data the state started from.
    pub initial_min: f64,
    pub initial_max: f64,
}

impl FlowState {
    pub fn new(field: RadialField) -> Self {
        Self::resume(field, 0)
    }

    pub fn resume(field: RadialField, step_count: u64) -> Self {
        let (initial_min, initial_max) = (field.min(), field.max());
        Self {
            field,
            step_count,
            dt_last: 0.0,
            stopped_reason: StopReason::None,
            initial_min,
            initial_max,
        }
    }
}

/// Everything one explicit step needs from the current field.
#[derive(Debug, Clone)]
pub struct FlowEvaluation {
    pub rhs: Vec<f64>,
    pub max_diffusivity: f64,
    pub max_grad_sq: f64,
}

#[inline]
fn rhs_at(grid: &HemisphereGrid, values: &[f64], k: usize) -> (f64, f64, f64) {
    let jet = grid.jet(values, k);
    let (s, c, cot) = grid.row_trig(k / grid.ntheta());
    let nf = grid.n() as f64;
    let rho = jet.gamma.exp();
    let sinh = 0.5 * (rho - 1.0 / rho);
    // 1 / (rho e^w) = cosh(gamma) + cos(phi)
    let inv_scale = 0.5 * (rho + 1.0 / rho) + c;
    let s2 = s * s;
    let up_theta = jet.g_theta / s2;
    let grad_sq = jet.g_phi * jet.g_phi + jet.g_theta * up_theta;
    let v2 = 1.0 + grad_sq;
    let v = v2.sqrt();
    let contracted = match grid.mode() {
        GridMode::Axisymmetric => jet.h_pp / v2 + (nf - 1.0) * cot * jet.g_phi,
        GridMode::Full2d => {
            (1.0 - jet.g_phi * jet.g_phi / v2) * jet.h_pp - 2.0 * jet.g_phi * up_theta / v2 * jet.h_pt
                + (1.0 / s2 - up_theta * up_theta / v2) * jet.h_tt
        }
    };
    let diffusivity = inv_scale / v;
    let rhs = diffusivity * contracted + nf * s * jet.g_phi / v - nf * sinh * grad_sq / v;
    (rhs, diffusivity, grad_sq)
}

pub fn evaluate(field: &RadialField) -> FlowEvaluation {
    let grid = field.grid();
    let values = field.values();
    let per_node: Vec<(f64, f64, f64)> = if grid.len() >= PARALLEL_THRESHOLD {
        (0..grid.len())
            .into_par_iter()
            .map(|k| rhs_at(grid, values, k))
            .collect()
    } else {
        (0..grid.len()).map(|k| rhs_at(grid, values, k)).collect()
    };
    let mut rhs = Vec::with_capacity(per_node.len());
    let mut max_diffusivity = 0.0f64;
    let mut max_grad_sq = 0.0f64;
    for (r, d, g) in per_node {
        rhs.push(r);
        max_diffusivity = max_diffusivity.max(d);
        max_grad_sq = max_grad_sq.max(g);
    }
    FlowEvaluation {
        rhs,
        max_diffusivity,
        max_grad_sq,
    }
}

/// Right-hand side of the scalar flow at every node.
pub fn flow_rhs(field: &RadialField) -> Vec<f64> {
    evaluate(field).rhs
}

/// The same right-hand side assembled from the extrinsic quantities:
/// `-(v / (rho e^w)) (n <x, e> - H <X_e, nu>)`.
pub fn flow_rhs_extrinsic(field: &RadialField) -> Result<Vec<f64>> {
    let n = field.grid().n();
    field
        .jets()
        .iter()
        .map(|jet| {
            let g = PointwiseGeometry::from_jet(jet, n)?;
            Ok(-(g.v / (g.rho * g.ew)) * (n as f64 * g.height - g.mean_curvature * g.support))
        })
        .collect()
}

/// `1 / (rho e^w) = cosh(gamma) + cos(phi)`.
pub fn inverse_scale(gamma: f64, phi: f64) -> f64 {
    gamma.cosh() + phi.cos()
}

/// Coordinate gradient of `1 / (rho e^w)` along the graph, from its
/// closed-form partial derivatives in `rho` and `phi`.
pub fn inverse_scale_gradient(jet: &Jet) -> [f64; 2] {
    let rho = jet.gamma.exp();
    let d_rho = (rho * rho - 1.0) / (2.0 * rho * rho);
    let d_phi = -jet.phi.sin();
    [d_rho * rho * jet.g_phi + d_phi, d_rho * rho * jet.g_theta]
}

/// `((rho^2 - 1) / (2 rho)) |grad gamma|^2 - sin(phi) gamma_phi`, which equals
/// `sigma(grad gamma, grad (1 / (rho e^w)))`.
pub fn inverse_scale_identity(jet: &Jet) -> f64 {
    let rho = jet.gamma.exp();
    (rho * rho - 1.0) / (2.0 * rho) * jet.grad_sq() - jet.phi.sin() * jet.g_phi
}

/// Divergence form of the right-hand side,
/// `div(grad gamma / (rho v e^w)) - ((n + 1) / v) sigma(grad gamma, grad (1 / (rho e^w)))`,
/// discretized independently: face fluxes over exact cell measures for the
/// divergence, and the chain rule for the gradient of `1 / (rho e^w)`
/// (the nodal field `cos(phi)` is odd across the equator, so reflecting it
/// through the ghost row would be wrong there).
pub fn flow_rhs_divergence(field: &RadialField) -> Vec<f64> {
    let grid = field.grid();
    let values = field.values();
    let n = grid.n();
    let nphi = grid.nphi();
    let nt = grid.ntheta();
    let h = grid.dphi();
    let ht = grid.dtheta();
    let lat_measure = |phi: f64| phi.sin().powi(n as i32 - 1);
    let face_diffusivity = |gamma: f64, phi: f64, grad_sq: f64| inverse_scale(gamma, phi) / (1.0 + grad_sq).sqrt();
    let u = |i: isize, j: isize| grid.value_at(values, i, j);

    // flux through the face below row i (between rows i-1 and i)
    let mut phi_flux = vec![0.0; (nphi + 1) * nt];
    for f in 1..nphi {
        let phi_f = f as f64 * h;
        let s = phi_f.sin();
        for j in 0..nt {
            let (fi, ji) = (f as isize, j as isize);
            let g_phi = (u(fi, ji) - u(fi - 1, ji)) / h;
            let g_theta = match grid.mode() {
                GridMode::Axisymmetric => 0.0,
                GridMode::Full2d => 0.25 * (u(fi, ji + 1) - u(fi, ji - 1) + u(fi - 1, ji + 1) - u(fi - 1, ji - 1)) / ht,
            };
            let gamma = 0.5 * (u(fi, ji) + u(fi - 1, ji));
            let a = face_diffusivity(gamma, phi_f, g_phi * g_phi + g_theta * g_theta / (s * s));
            phi_flux[f * nt + j] = lat_measure(phi_f) * a * g_phi;
        }
    }

    let cell_measure: Vec<f64> = (0..nphi)
        .map(|i| gauss_legendre8(i as f64 * h, (i + 1) as f64 * h, lat_measure))
        .collect();

    let mut out = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let i = k / nt;
        let j = k % nt;
        let (s, _, _) = grid.row_trig(i);
        let mut div = (phi_flux[(i + 1) * nt + j] - phi_flux[i * nt + j]) / cell_measure[i];
        if grid.mode() == GridMode::Full2d {
            let (ii, jj) = (i as isize, j as isize);
            let theta_flux = |jf: isize| {
                // face between columns jf and jf + 1
                let g_theta = (u(ii, jf + 1) - u(ii, jf)) / ht;
                let g_phi = 0.25 * (u(ii + 1, jf) - u(ii - 1, jf) + u(ii + 1, jf + 1) - u(ii - 1, jf + 1)) / h;
                let gamma = 0.5 * (u(ii, jf) + u(ii, jf + 1));
                let a = face_diffusivity(gamma, grid.phi_nodes()[i], g_phi * g_phi + g_theta * g_theta / (s * s));
                a * g_theta / (s * s)
            };
            div += (theta_flux(jj) - theta_flux(jj - 1)) / ht;
        }
        let jet = grid.jet(values, k);
        let dg = inverse_scale_gradient(&jet);
        let cross = jet.g_phi * dg[0] + jet.g_theta * dg[1] / (s * s);
        let v = (1.0 + jet.grad_sq()).sqrt();
        out.push(div - (n as f64 + 1.0) / v * cross);
    }
    out
}

/// `max(1 / (rho v e^w)) * max_i |diag(Laplace-Beltrami stencil)_i|`.
pub fn principal_symbol_bound(field: &RadialField) -> f64 {
    bound_from(field.grid(), evaluate(field).max_diffusivity)
}

fn bound_from(grid: &HemisphereGrid, max_diffusivity: f64) -> f64 {
    let stencil = grid.laplacian_diagonal().iter().copied().fold(0.0, f64::max);
    max_diffusivity * stencil
}

/// `field + dt * rhs(field)` without any step-size or range checks.
pub fn euler_update(field: &RadialField, dt: f64) -> Result<RadialField> {
    let rhs = flow_rhs(field);
    apply(field, &rhs, dt)
}

fn apply(field: &RadialField, rhs: &[f64], dt: f64) -> Result<RadialField> {
    let mut next = field.clone();
    for (k, (g, r)) in next.values_mut().iter_mut().zip(rhs).enumerate() {
        *g += dt * r;
        if !g.is_finite() {
            return Err(Error::NonFinite { node: k, value: *g });
        }
    }
    next.time = field.time + dt;
    Ok(next)
}

fn advance(state: FlowState, eval: &FlowEvaluation, config: &FlowConfig) -> Result<FlowState> {
    let grid = state.field.grid();
    let mut dt = config.dt_safety / bound_from(grid, eval.max_diffusivity);
    let remaining = config.t_max - state.field.time;
    if remaining > 0.0 && remaining < dt {
        dt = remaining;
    }
    let next = apply(&state.field, &eval.rhs, dt)?;
    let (old_min, old_max) = (state.field.min(), state.field.max());
    let (lower, upper) = (
        old_min.max(state.initial_min) - C0_SLACK,
        old_max.min(state.initial_max) + C0_SLACK,
    );
    let (min, max) = (next.min(), next.max());
    if min < lower || max > upper {
        return Err(Error::CflViolation {
            time: next.time,
            min,
            max,
            lower,
            upper,
        });
    }
    Ok(FlowState {
        field: next,
        step_count: state.step_count + 1,
        dt_last: dt,
        ..state
    })
}

/// One explicit Euler step with `dt = dt_safety / principal_symbol_bound`,
/// clipped so the flow time does not pass `t_max`.
pub fn step(state: FlowState, config: &FlowConfig) -> Result<FlowState> {
    if state.stopped_reason != StopReason::None {
        return Err(Error::DegenerateInput(format!(
            "state already stopped ({})",
            state.stopped_reason.as_str()
        )));
    }
    let eval = evaluate(&state.field);
    advance(state, &eval, config)
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub state: FlowState,
    pub audits: Vec<FlowAudit>,
    /// Present when the run converged.
    pub cap: Option<(CapFit, SphericalCap)>,
}

pub fn run(config: &FlowConfig) -> Result<RunReport> {
    config.validate()?;
    let field = make_initial_condition(&config.initial_condition, config.build_grid()?)?;
    run_from(FlowState::new(field), config, |_| Ok(()))
}

/// Evolves `state` until `max |grad gamma|^2 < grad_tol` or `t >= t_max`.
/// `after_step` sees every new state.
pub fn run_from(
    mut state: FlowState,
    config: &FlowConfig,
    mut after_step: impl FnMut(&FlowState) -> Result<()>,
) -> Result<RunReport> {
    config.validate()?;
    let mut audits = vec![diagnostics::audit(&state.field)?];
    let mut last_audit = state.step_count;
    loop {
        let eval = evaluate(&state.field);
        if eval.max_grad_sq < config.grad_tol {
            state.stopped_reason = StopReason::GradientConverged;
            break;
        }
        if state.field.time >= config.t_max {
            state.stopped_reason = StopReason::TMaxReached;
            break;
        }
        state = advance(state, &eval, config)?;
        after_step(&state)?;
        if state.step_count.is_multiple_of(config.audit_every as u64) {
            audits.push(diagnostics::audit(&state.field)?);
            last_audit = state.step_count;
        }
    }
    if last_audit != state.step_count {
        audits.push(diagnostics::audit(&state.field)?);
    }
    diagnostics::fill_area_rates(&mut audits);
    let cap = if state.stopped_reason == StopReason::GradientConverged {
        let fit = diagnostics::cap_fit(&state.field)?;
        Some((fit, cap_from_rho0(fit.rho0_fit)?))
    } else {
        None
    };
    Ok(RunReport { state, audits, cap })
}
