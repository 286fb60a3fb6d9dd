//! Cell-centred discretization of the closed upper hemisphere.
//!
//! Nodes sit at `phi_i = (i + 1/2) dphi`, so neither the pole nor the
//! equator carries a node. Stencils reach one ghost layer on each side:
//! across the equator the field is reflected evenly (the Neumann condition
//! `d gamma / d phi = 0`), across the pole it is continued through the
//! antipodal meridian (`theta -> theta + pi`), which in axisymmetric mode
//! is again an even reflection.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::halfspace::sphere_area;
use crate::quadrature::gauss_legendre8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GridMode {
    /// Fields depend on `phi` only; any `n >= 2`.
    Axisymmetric,
    /// Fields on `(phi, theta)`, `n = 2` only.
    Full2d,
}

impl GridMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            GridMode::Axisymmetric => "axisymmetric",
            GridMode::Full2d => "full2d",
        }
    }
}

impl std::str::FromStr for GridMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "axisymmetric" => Ok(GridMode::Axisymmetric),
            "full2d" => Ok(GridMode::Full2d),
            other => Err(Error::parse(
                "grid mode",
                format!("expected `axisymmetric` or `full2d`, got `{other}`"),
            )),
        }
    }
}

/// Serializable grid summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridDescription {
    pub mode: GridMode,
    pub n: usize,
    pub nphi: usize,
    pub ntheta: usize,
    pub dphi: f64,
    pub dtheta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HemisphereGrid {
    mode: GridMode,
    n: usize,
    nphi: usize,
    ntheta: usize,
    dphi: f64,
    dtheta: f64,
    phi: Vec<f64>,
    theta: Vec<f64>,
    sin_phi: Vec<f64>,
    cos_phi: Vec<f64>,
    cot_phi: Vec<f64>,
    weights: Vec<f64>,
    laplacian_diag: Vec<f64>,
}

/// Value, coordinate gradient and covariant Hessian of a field at a node.
///
/// In axisymmetric mode `theta` stands for each of the `n - 1` orthonormal
/// directions of the latitude sphere; `g_theta` and `h_pt` are zero and
/// `h_tt = sin(phi) cos(phi) g_phi`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub phi: f64,
    pub gamma: f64,
    pub g_phi: f64,
    pub g_theta: f64,
    pub h_pp: f64,
    pub h_pt: f64,
    pub h_tt: f64,
}

impl Jet {
    /// `|grad gamma|^2` in the round metric.
    pub fn grad_sq(&self) -> f64 {
        let s = self.phi.sin();
        self.g_phi * self.g_phi + self.g_theta * self.g_theta / (s * s)
    }
}

impl HemisphereGrid {
    pub fn axisymmetric(n: usize, nphi: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid(format!("n must be >= 2, got {n}")));
        }
        Self::build(GridMode::Axisymmetric, n, nphi, 1)
    }

    /// Full `(phi, theta)` grid for `n = 2`; `ntheta` must be even so the
    /// antipodal continuation across the pole lands on nodes.
    pub fn full2d(nphi: usize, ntheta: usize) -> Result<Self> {
        if ntheta < 4 || !ntheta.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "ntheta must be even and >= 4, got {ntheta}"
            )));
        }
        Self::build(GridMode::Full2d, 2, nphi, ntheta)
    }

    pub fn new(mode: GridMode, n: usize, nphi: usize, ntheta: usize) -> Result<Self> {
        match mode {
            GridMode::Axisymmetric => Self::axisymmetric(n, nphi),
            GridMode::Full2d if n == 2 => Self::full2d(nphi, ntheta),
            GridMode::Full2d => Err(Error::InvalidGrid(format!("full2d requires n = 2, got n = {n}"))),
        }
    }

    fn build(mode: GridMode, n: usize, nphi: usize, ntheta: usize) -> Result<Self> {
        if nphi < 4 {
            return Err(Error::InvalidGrid(format!("nphi must be >= 4, got {nphi}")));
        }
        let dphi = FRAC_PI_2 / nphi as f64;
        let dtheta = 2.0 * PI / ntheta as f64;
        let phi: Vec<f64> = (0..nphi).map(|i| (i as f64 + 0.5) * dphi).collect();
        let theta: Vec<f64> = match mode {
            GridMode::Axisymmetric => vec![0.0],
            GridMode::Full2d => (0..ntheta).map(|j| j as f64 * dtheta).collect(),
        };
        let sin_phi: Vec<f64> = phi.iter().map(|p| p.sin()).collect();
        let cos_phi: Vec<f64> = phi.iter().map(|p| p.cos()).collect();
        let cot_phi: Vec<f64> = phi.iter().map(|p| 1.0 / p.tan()).collect();

        let (latitude_measure, per_node_theta) = match mode {
            GridMode::Axisymmetric => (sphere_area(n - 1), 1.0),
            GridMode::Full2d => (1.0, dtheta),
        };
        let density = |p: f64| latitude_measure * p.sin().powi(n as i32 - 1);
        let phi_weights = phi_weights(nphi, dphi, density);
        let mut weights = Vec::with_capacity(nphi * ntheta);
        for w in &phi_weights {
            weights.extend(std::iter::repeat_n(w * per_node_theta, ntheta));
        }

        let mut grid = Self {
            mode,
            n,
            nphi,
            ntheta,
            dphi,
            dtheta,
            phi,
            theta,
            sin_phi,
            cos_phi,
            cot_phi,
            weights,
            laplacian_diag: Vec::new(),
        };
        grid.laplacian_diag = (0..nphi).map(|i| grid.diag_at(i)).collect();
        Ok(grid)
    }

    /// Magnitude of the self-coupling coefficient of the discrete
    /// Laplace-Beltrami stencil on latitude row `i`.
    fn diag_at(&self, i: usize) -> f64 {
        let h = self.dphi;
        let last = self.nphi - 1;
        let m = (self.n - 1) as f64;
        let mut coeff = -2.0 / (h * h);
        match self.mode {
            GridMode::Axisymmetric => {
                if i == 0 {
                    coeff += 1.0 / (h * h) - m * self.cot_phi[0] / (2.0 * h);
                }
                if i == last {
                    coeff += 1.0 / (h * h) + m * self.cot_phi[last] / (2.0 * h);
                }
            }
            GridMode::Full2d => {
                if i == last {
                    coeff += 1.0 / (h * h) + self.cot_phi[last] / (2.0 * h);
                }
                let s = self.sin_phi[i];
                coeff -= 2.0 / (self.dtheta * self.dtheta * s * s);
            }
        }
        coeff.abs()
    }

    pub fn mode(&self) -> GridMode {
        self.mode
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn nphi(&self) -> usize {
        self.nphi
    }
    /// 1 in axisymmetric mode.
    pub fn ntheta(&self) -> usize {
        self.ntheta
    }
    pub fn dphi(&self) -> f64 {
        self.dphi
    }
    pub fn dtheta(&self) -> f64 {
        self.dtheta
    }
    pub fn len(&self) -> usize {
        self.nphi * self.ntheta
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn phi_nodes(&self) -> &[f64] {
        &self.phi
    }
    pub fn theta_nodes(&self) -> &[f64] {
        &self.theta
    }
    pub fn quadrature_weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn laplacian_diagonal(&self) -> &[f64] {
        &self.laplacian_diag
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.ntheta + j
    }

    /// `(phi, theta)` of node `k`.
    pub fn coords(&self, k: usize) -> (f64, f64) {
        (self.phi[k / self.ntheta], self.theta[k % self.ntheta])
    }

    pub fn phi_of(&self, k: usize) -> f64 {
        self.phi[k / self.ntheta]
    }

    /// Cached `(sin, cos, cot)` of latitude row `i`.
    #[inline]
    pub fn row_trig(&self, i: usize) -> (f64, f64, f64) {
        (self.sin_phi[i], self.cos_phi[i], self.cot_phi[i])
    }

    pub fn description(&self) -> GridDescription {
        GridDescription {
            mode: self.mode,
            n: self.n,
            nphi: self.nphi,
            ntheta: match self.mode {
                GridMode::Axisymmetric => 0,
                GridMode::Full2d => self.ntheta,
            },
            dphi: self.dphi,
            dtheta: match self.mode {
                GridMode::Axisymmetric => 0.0,
                GridMode::Full2d => self.dtheta,
            },
        }
    }

    /// Area of the hemisphere `S^n_+`.
    pub fn hemisphere_area(&self) -> f64 {
        0.5 * sphere_area(self.n)
    }

    /// Field value at `(i, j)` including the ghost rows `i = -1` and
    /// `i = nphi`; `j` wraps periodically.
    #[inline]
    pub fn value_at(&self, values: &[f64], i: isize, j: isize) -> f64 {
        let nt = self.ntheta as isize;
        let (row, col) = if i < 0 {
            match self.mode {
                GridMode::Axisymmetric => (0, j),
                GridMode::Full2d => (0, j + nt / 2),
            }
        } else if i >= self.nphi as isize {
            (self.nphi as isize - 1, j)
        } else {
            (i, j)
        };
        values[row as usize * self.ntheta + col.rem_euclid(nt) as usize]
    }

    /// Jet at node `k`.
    pub fn jet(&self, values: &[f64], k: usize) -> Jet {
        let i = (k / self.ntheta) as isize;
        let j = (k % self.ntheta) as isize;
        let iu = i as usize;
        let h = self.dphi;
        let u = |di: isize, dj: isize| self.value_at(values, i + di, j + dj);
        let c = values[k];
        let g_phi = (u(1, 0) - u(-1, 0)) / (2.0 * h);
        let h_pp = (u(1, 0) - 2.0 * c + u(-1, 0)) / (h * h);
        let sc = self.sin_phi[iu] * self.cos_phi[iu];
        match self.mode {
            GridMode::Axisymmetric => Jet {
                phi: self.phi[iu],
                gamma: c,
                g_phi,
                g_theta: 0.0,
                h_pp,
                h_pt: 0.0,
                h_tt: sc * g_phi,
            },
            GridMode::Full2d => {
                let ht = self.dtheta;
                let g_theta = (u(0, 1) - u(0, -1)) / (2.0 * ht);
                let mixed = (u(1, 1) - u(1, -1) - u(-1, 1) + u(-1, -1)) / (4.0 * h * ht);
                let d_tt = (u(0, 1) - 2.0 * c + u(0, -1)) / (ht * ht);
                Jet {
                    phi: self.phi[iu],
                    gamma: c,
                    g_phi,
                    g_theta,
                    h_pp,
                    h_pt: mixed - self.cot_phi[iu] * g_theta,
                    h_tt: d_tt + sc * g_phi,
                }
            }
        }
    }

    pub fn jets(&self, values: &[f64]) -> Vec<Jet> {
        (0..self.len()).map(|k| self.jet(values, k)).collect()
    }

    /// Quadrature of a per-node density over `S^n_+`.
    pub fn integrate(&self, density: &[f64]) -> f64 {
        density.iter().zip(&self.weights).map(|(d, w)| d * w).sum()
    }
}

/// Per-row weights for `int_0^{pi/2} g(phi) density(phi) dphi`.
///
/// `g` is replaced on every cell by its quadratic interpolant through three
/// neighbouring nodes (centred, one-sided in the first and last cell) and
/// the product with `density` is integrated exactly by Gauss-Legendre.
/// The weights sum to `int density` and are fourth-order accurate for
/// smooth `g`.
fn phi_weights(nphi: usize, h: f64, density: impl Fn(f64) -> f64) -> Vec<f64> {
    let mut w = vec![0.0; nphi];
    for cell in 0..nphi {
        let first = cell.clamp(1, nphi - 2) - 1;
        let lo = cell as f64 * h;
        let hi = lo + h;
        let x = |m: usize| (m as f64 + 0.5) * h;
        for (slot, weight) in w[first..first + 3].iter_mut().enumerate() {
            let node = first + slot;
            let (a, b) = match slot {
                0 => (first + 1, first + 2),
                1 => (first, first + 2),
                _ => (first, first + 1),
            };
            let (xn, xa, xb) = (x(node), x(a), x(b));
            let basis = |t: f64| (t - xa) * (t - xb) / ((xn - xa) * (xn - xb));
            *weight += gauss_legendre8(lo, hi, |t| basis(t) * density(t));
        }
    }
    w
}

/// Values of `gamma` over a grid at a given flow time.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    grid: Arc<HemisphereGrid>,
    values: Vec<f64>,
    pub time: f64,
}

impl RadialField {
    pub fn new(grid: Arc<HemisphereGrid>, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some((node, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { node, value });
        }
        Ok(Self { grid, values, time })
    }

    pub fn constant(grid: Arc<HemisphereGrid>, gamma0: f64) -> Self {
        let values = vec![gamma0; grid.len()];
        Self {
            grid,
            values,
            time: 0.0,
        }
    }

    pub fn from_fn(grid: Arc<HemisphereGrid>, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = (0..grid.len())
            .map(|k| {
                let (phi, theta) = grid.coords(k);
                f(phi, theta)
            })
            .collect();
        Self::new(grid, values, 0.0)
    }

    pub fn grid(&self) -> &HemisphereGrid {
        &self.grid
    }
    pub fn grid_arc(&self) -> &Arc<HemisphereGrid> {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn jets(&self) -> Vec<Jet> {
        self.grid.jets(&self.values)
    }
}

/// Per-node `(gamma_phi, gamma_theta)` coordinate derivatives.
pub fn gradient(field: &RadialField) -> Vec<[f64; 2]> {
    field.jets().iter().map(|j| [j.g_phi, j.g_theta]).collect()
}

/// Per-node covariant Hessian `(gamma_{phi phi}, gamma_{phi theta}, gamma_{theta theta})`.
pub fn hessian(field: &RadialField) -> Vec<[f64; 3]> {
    field.jets().iter().map(|j| [j.h_pp, j.h_pt, j.h_tt]).collect()
}

/// Trace `sigma^{ij} gamma_{ij}` of the covariant Hessian.
pub fn laplacian(field: &RadialField) -> Vec<f64> {
    let m = (field.grid().n() - 1) as f64;
    field
        .jets()
        .iter()
        .map(|j| {
            let s = j.phi.sin();
            j.h_pp + m * j.h_tt / (s * s)
        })
        .collect()
}

pub fn integrate(field: &RadialField, density: &[f64]) -> f64 {
    field.grid().integrate(density)
}

/// `max |grad gamma|^2` over the nodes.
pub fn max_abs_gradient_sq(field: &RadialField) -> f64 {
    let grid = field.grid();
    (0..grid.len())
        .map(|k| grid.jet(field.values(), k).grad_sq())
        .fold(0.0, f64::max)
}
