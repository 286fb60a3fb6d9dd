//! Pointwise extrinsic geometry of a radial graph `rho = e^gamma`, computed
//! from the jet of `gamma` at a single point. Nothing here touches the grid.
//!
//! Curvatures are taken with respect to the normal pointing out of the
//! enclosed region that contains `e`, with the sign convention that makes
//! caps with `rho0 > 1` positively curved.

use crate::error::{Error, Result};
use crate::grid::Jet;
use crate::halfspace::conformal_factor;

/// `<x, e> = (rho^2 - 1) e^w / 2`.
pub fn height(rho: f64, ew: f64) -> f64 {
    0.5 * (rho * rho - 1.0) * ew
}

/// `<X_e, nu> = rho e^w / v`.
pub fn support(rho: f64, ew: f64, v: f64) -> f64 {
    rho * ew / v
}

/// Mixed-index Weingarten map `h_i^j` in the `(phi, theta)` frame.
///
/// The second row/column stands for each of the `theta_multiplicity`
/// directions of the latitude sphere. Off-diagonal entries are only ever
/// nonzero when that multiplicity is one (the full two-dimensional grid).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weingarten {
    pub m: [[f64; 2]; 2],
    pub theta_multiplicity: usize,
}

impl Weingarten {
    pub fn dim(&self) -> usize {
        1 + self.theta_multiplicity
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.theta_multiplicity as f64 * self.m[1][1]
    }

    /// `h_i^j h_j^i`.
    pub fn norm_sq(&self) -> f64 {
        let m = &self.m;
        m[0][0] * m[0][0] + 2.0 * m[0][1] * m[1][0] + self.theta_multiplicity as f64 * m[1][1] * m[1][1]
    }
}

/// Frequently reused contractions of a jet.
#[derive(Debug, Clone, Copy)]
pub(crate) struct JetTerms {
    pub rho: f64,
    pub ew: f64,
    pub v: f64,
    /// `sigma^{ij} - gamma^i gamma^j / v^2`
    pub metric_factor: [[f64; 2]; 2],
    /// `(sigma^{ij} - gamma^i gamma^j / v^2) gamma_{ij}`
    pub contracted_hessian: f64,
}

impl JetTerms {
    pub fn new(jet: &Jet, n: usize) -> Self {
        let rho = jet.gamma.exp();
        let ew = conformal_factor(rho, jet.phi);
        let s = jet.phi.sin();
        let s2 = s * s;
        let up_phi = jet.g_phi;
        let up_theta = jet.g_theta / s2;
        let grad_sq = jet.g_phi * up_phi + jet.g_theta * up_theta;
        let v2 = 1.0 + grad_sq;
        let a = [
            [1.0 - up_phi * up_phi / v2, -up_phi * up_theta / v2],
            [-up_phi * up_theta / v2, 1.0 / s2 - up_theta * up_theta / v2],
        ];
        let mult = (n - 1) as f64;
        let contracted_hessian = a[0][0] * jet.h_pp + 2.0 * a[0][1] * jet.h_pt + mult * a[1][1] * jet.h_tt;
        Self {
            rho,
            ew,
            v: v2.sqrt(),
            metric_factor: a,
            contracted_hessian,
        }
    }

    /// `1 / (rho v e^w)`, the ellipticity scale of the flow.
    pub fn diffusivity(&self) -> f64 {
        1.0 / (self.rho * self.v * self.ew)
    }
}

/// `h_i^j = (sigma^{kj} - gamma^k gamma^j / v^2) gamma_{ik} / (rho v e^w)
///        + [sin(phi) gamma_phi / v + (rho^2 - 1) / (2 rho v)] delta_i^j`.
pub fn weingarten(jet: &Jet, n: usize) -> Weingarten {
    let t = JetTerms::new(jet, n);
    let hess = [[jet.h_pp, jet.h_pt], [jet.h_pt, jet.h_tt]];
    let a = t.metric_factor;
    let scale = t.diffusivity();
    let shift = jet.phi.sin() * jet.g_phi / t.v + (t.rho * t.rho - 1.0) / (2.0 * t.rho * t.v);
    let mut m = [[0.0; 2]; 2];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            let sum = hess[i][0] * a[0][j] + hess[i][1] * a[1][j];
            *entry = scale * sum + if i == j { shift } else { 0.0 };
        }
    }
    Weingarten {
        m,
        theta_multiplicity: n - 1,
    }
}

/// Mean curvature evaluated directly (not as a trace).
pub fn mean_curvature(jet: &Jet, n: usize) -> f64 {
    let t = JetTerms::new(jet, n);
    let nf = n as f64;
    t.diffusivity() * t.contracted_hessian
        + nf * jet.phi.sin() * jet.g_phi / t.v
        + nf * (t.rho * t.rho - 1.0) / (2.0 * t.rho * t.v)
}

/// `sigma_2` and the principal curvatures sorted in descending order.
pub fn sigma2_and_kappa(w: &Weingarten) -> Result<(f64, Vec<f64>)> {
    if w.m.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::DegenerateInput("non-finite Weingarten entry".into()));
    }
    let m = &w.m;
    let mut kappa = if w.theta_multiplicity == 1 {
        let half_tr = 0.5 * (m[0][0] + m[1][1]);
        let half_diff = 0.5 * (m[0][0] - m[1][1]);
        // self-adjoint for the induced metric, so the discriminant is >= 0
        let root = (half_diff * half_diff + m[0][1] * m[1][0]).max(0.0).sqrt();
        vec![half_tr + root, half_tr - root]
    } else {
        let mut k = vec![m[0][0]];
        k.extend(std::iter::repeat_n(m[1][1], w.theta_multiplicity));
        k
    };
    kappa.sort_by(|a, b| b.total_cmp(a));
    let tr = w.trace();
    let sigma2 = 0.5 * (tr * tr - w.norm_sq());
    Ok((sigma2, kappa))
}

/// `sum_{i<j} (kappa_i - kappa_j)^2`.
pub fn pairwise_gap_sq(kappa: &[f64]) -> f64 {
    let mut total = 0.0;
    for (i, a) in kappa.iter().enumerate() {
        for b in &kappa[i + 1..] {
            total += (a - b) * (a - b);
        }
    }
    total
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseGeometry {
    pub phi: f64,
    pub rho: f64,
    pub v: f64,
    pub ew: f64,
    pub height: f64,
    pub support: f64,
    pub weingarten: Weingarten,
    pub mean_curvature: f64,
    pub sigma2: f64,
    pub kappa: Vec<f64>,
}

impl PointwiseGeometry {
    pub fn from_jet(jet: &Jet, n: usize) -> Result<Self> {
        let t = JetTerms::new(jet, n);
        let w = weingarten(jet, n);
        let (sigma2, kappa) = sigma2_and_kappa(&w)?;
        Ok(Self {
            phi: jet.phi,
            rho: t.rho,
            v: t.v,
            ew: t.ew,
            height: height(t.rho, t.ew),
            support: support(t.rho, t.ew, t.v),
            weingarten: w,
            mean_curvature: mean_curvature(jet, n),
            sigma2,
            kappa,
        })
    }

    /// Area density `(rho e^w)^n v` with respect to the round measure.
    pub fn area_density(&self) -> f64 {
        (self.rho * self.ew).powi(self.kappa.len() as i32) * self.v
    }

    pub fn spread(&self) -> f64 {
        self.kappa.first().unwrap() - self.kappa.last().unwrap()
    }
}

/// `max |kappa_i - kappa_j|` over all nodes and pairs.
pub fn curvature_spread(geom: &[PointwiseGeometry]) -> f64 {
    geom.iter().map(PointwiseGeometry::spread).fold(0.0, f64::max)
}
