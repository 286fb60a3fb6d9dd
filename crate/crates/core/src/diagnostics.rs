//! Integral functionals of a radial graph and the identities they satisfy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RadialField;
use crate::halfspace::{cap_volume, volume_column};
use crate::surface::{self, pairwise_gap_sq, PointwiseGeometry};

const EPS: f64 = 1e-30;

/// Relative slack allowed on each area increment before it counts as growth.
pub const AREA_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowAudit {
    pub time: f64,
    pub volume: f64,
    pub area: f64,
    pub minkowski1_residual: f64,
    pub minkowski2_residual: f64,
    pub max_grad_sq: f64,
    pub curvature_spread: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    /// `|dA/dt + D| / |D|`, filled in once neighbouring audits exist.
    pub area_rate_mismatch: f64,
    /// `D = (1/(n-1)) int sum_{i<j} (kappa_i - kappa_j)^2 <X_e, nu> dA`.
    pub dissipation: f64,
}

pub fn geometry(field: &RadialField) -> Result<Vec<PointwiseGeometry>> {
    let n = field.grid().n();
    field.jets().iter().map(|j| PointwiseGeometry::from_jet(j, n)).collect()
}

fn area_densities(geom: &[PointwiseGeometry]) -> Vec<f64> {
    geom.iter().map(PointwiseGeometry::area_density).collect()
}

/// Integrates `f(node) dA` over the surface.
fn surface_integral(field: &RadialField, geom: &[PointwiseGeometry], f: impl Fn(&PointwiseGeometry) -> f64) -> f64 {
    let density: Vec<f64> = geom.iter().map(|g| f(g) * g.area_density()).collect();
    field.grid().integrate(&density)
}

/// `int (rho e^w)^n v d sigma`.
pub fn compute_area(field: &RadialField) -> f64 {
    let n = field.grid().n() as i32;
    let density: Vec<f64> = field
        .jets()
        .iter()
        .map(|j| {
            let rho = j.gamma.exp();
            let ew = crate::halfspace::conformal_factor(rho, j.phi);
            (rho * ew).powi(n) * (1.0 + j.grad_sq()).sqrt()
        })
        .collect();
    field.grid().integrate(&density)
}

/// Volume of the region between the graph and the pole `e`.
pub fn compute_volume(field: &RadialField) -> Result<f64> {
    let grid = field.grid();
    let columns = field
        .values()
        .iter()
        .enumerate()
        .map(|(k, g)| volume_column(g.exp(), grid.phi_of(k), grid.n()))
        .collect::<Result<Vec<_>>>()?;
    Ok(grid.integrate(&columns))
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs() + EPS)
}

fn minkowski_from(field: &RadialField, geom: &[PointwiseGeometry]) -> (f64, f64) {
    let nf = field.grid().n() as f64;
    let height = surface_integral(field, geom, |g| g.height);
    let support_h = surface_integral(field, geom, |g| g.support * g.mean_curvature);
    let height_h = surface_integral(field, geom, |g| g.height * g.mean_curvature);
    let support_s2 = surface_integral(field, geom, |g| g.support * g.sigma2);
    (
        relative_gap(nf * height, support_h),
        relative_gap(height_h, 2.0 / (nf - 1.0) * support_s2),
    )
}

/// Relative residuals of `n int <x,e> = int <X_e,nu> H` and
/// `int <x,e> H = (2/(n-1)) int <X_e,nu> sigma_2`.
pub fn minkowski_residuals(field: &RadialField) -> Result<(f64, f64)> {
    let geom = geometry(field)?;
    Ok(minkowski_from(field, &geom))
}

fn dissipation_from(field: &RadialField, geom: &[PointwiseGeometry]) -> f64 {
    let nf = field.grid().n() as f64;
    surface_integral(field, geom, |g| pairwise_gap_sq(&g.kappa) * g.support) / (nf - 1.0)
}

/// Rate at which the flow decreases area.
pub fn dissipation_integral(field: &RadialField) -> Result<f64> {
    let geom = geometry(field)?;
    Ok(dissipation_from(field, &geom))
}

pub fn audit(field: &RadialField) -> Result<FlowAudit> {
    let geom = geometry(field)?;
    let (r1, r2) = minkowski_from(field, &geom);
    let area = field.grid().integrate(&area_densities(&geom));
    Ok(FlowAudit {
        time: field.time,
        volume: compute_volume(field)?,
        area,
        minkowski1_residual: r1,
        minkowski2_residual: r2,
        max_grad_sq: crate::grid::max_abs_gradient_sq(field),
        curvature_spread: surface::curvature_spread(&geom),
        gamma_min: field.min(),
        gamma_max: field.max(),
        area_rate_mismatch: 0.0,
        dissipation: dissipation_from(field, &geom),
    })
}

/// Finite-difference `dA/dt` at audit `k`: three-point centred on interior
/// audits, one-sided at the ends.
pub fn area_rate(audits: &[FlowAudit], k: usize) -> Option<f64> {
    let m = audits.len();
    if m < 2 {
        return None;
    }
    let (a, b, c) = match k {
        0 if m >= 3 => (0, 1, 2),
        0 => return Some((audits[1].area - audits[0].area) / (audits[1].time - audits[0].time)),
        _ if k + 1 == m && m >= 3 => (k - 2, k - 1, k),
        _ if k + 1 == m => return Some((audits[k].area - audits[k - 1].area) / (audits[k].time - audits[k - 1].time)),
        _ => (k - 1, k, k + 1),
    };
    let (t0, t1, t2) = (audits[a].time, audits[b].time, audits[c].time);
    let (f0, f1, f2) = (audits[a].area, audits[b].area, audits[c].area);
    // derivative of the quadratic interpolant at t_k
    let t = audits[k].time;
    let l0 = ((t - t1) + (t - t2)) / ((t0 - t1) * (t0 - t2));
    let l1 = ((t - t0) + (t - t2)) / ((t1 - t0) * (t1 - t2));
    let l2 = ((t - t0) + (t - t1)) / ((t2 - t0) * (t2 - t1));
    Some(f0 * l0 + f1 * l1 + f2 * l2)
}

pub fn fill_area_rates(audits: &mut [FlowAudit]) {
    for k in 0..audits.len() {
        let mismatch = match area_rate(audits, k) {
            Some(rate) => (rate + audits[k].dissipation).abs() / (audits[k].dissipation.abs() + EPS),
            None => 0.0,
        };
        audits[k].area_rate_mismatch = mismatch;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConservationReport {
    pub max_volume_drift: f64,
    pub area_nonincreasing: bool,
    /// Largest relative area increase between consecutive audits.
    pub max_area_increase: f64,
    /// Largest `area_rate_mismatch` among interior audits in the middle half
    /// of the run.
    pub mid_run_rate_mismatch: f64,
    pub mid_run_audits: usize,
    pub max_dissipation: f64,
}

pub fn conservation_audit(history: &[FlowAudit]) -> Result<ConservationReport> {
    if history.len() < 3 {
        return Err(Error::DegenerateInput(format!(
            "conservation audit needs at least 3 records, got {}",
            history.len()
        )));
    }
    let v0 = history[0].volume;
    let max_volume_drift = history.iter().map(|a| (a.volume - v0).abs() / v0).fold(0.0, f64::max);
    let mut max_area_increase = f64::NEG_INFINITY;
    let mut area_nonincreasing = true;
    for w in history.windows(2) {
        let rel = (w[1].area - w[0].area) / w[0].area;
        max_area_increase = max_area_increase.max(rel);
        if rel > AREA_SLACK {
            area_nonincreasing = false;
        }
    }
    let (t0, t1) = (history[0].time, history[history.len() - 1].time);
    let (lo, hi) = (t0 + 0.25 * (t1 - t0), t0 + 0.75 * (t1 - t0));
    let mid: Vec<&FlowAudit> = history[1..history.len() - 1]
        .iter()
        .filter(|a| a.time >= lo && a.time <= hi)
        .collect();
    Ok(ConservationReport {
        max_volume_drift,
        area_nonincreasing,
        max_area_increase,
        mid_run_rate_mismatch: mid.iter().map(|a| a.area_rate_mismatch).fold(0.0, f64::max),
        mid_run_audits: mid.len(),
        max_dissipation: history.iter().map(|a| a.dissipation).fold(0.0, f64::max),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapFit {
    pub rho0_fit: f64,
    /// `max |gamma - log rho0_fit|`.
    pub deviation: f64,
    pub predicted_volume_error: f64,
}

pub fn cap_fit(field: &RadialField) -> Result<CapFit> {
    let geom = geometry(field)?;
    let weights = area_densities(&geom);
    let weighted: Vec<f64> = weights.iter().zip(field.values()).map(|(w, g)| w * g).collect();
    let grid = field.grid();
    let mean = grid.integrate(&weighted) / grid.integrate(&weights);
    let deviation = field.values().iter().map(|g| (g - mean).abs()).fold(0.0, f64::max);
    let rho0_fit = mean.exp();
    let volume = compute_volume(field)?;
    Ok(CapFit {
        rho0_fit,
        deviation,
        predicted_volume_error: (cap_volume(rho0_fit, grid.n())? - volume).abs() / volume,
    })
}
