//! Closed-form geometry of the correspondence between the closed upper
//! half-space and the closed unit ball.
//!
//! The distinguished direction `e` is the last coordinate axis. Half-space
//! points are written in polar form `(rho, phi, theta)` with `rho = |z|`,
//! `z_{n+1} = rho cos(phi)` and `theta` the unit direction of `z'`. The map
//!
//! ```text
//! f(rho, phi, theta) = (2 rho sin(phi) theta, rho^2 - 1) / (1 + rho^2 + 2 rho cos(phi))
//! ```
//!
//! is conformal with factor `e^w`, `w = log 2 - log(1 + rho^2 + 2 rho cos(phi))`,
//! sends `{phi = pi/2}` to the unit sphere, `{rho = 1}` to the equatorial
//! disc and pulls the conformal Killing field `X_e` back to `-rho d/drho`.
//! Hemispheres `{rho = rho0}` are mapped onto the free-boundary spherical caps.

use std::cell::RefCell;
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::quadrature::integrate_adaptive;

/// Slack allowed on `|x| <= 1` for ball points.
pub const BALL_SLACK: f64 = 1e-12;

/// Inputs closer than this to `e` have no usable preimage.
pub const POLE_EXCLUSION: f64 = 1e-9;

/// Relative tolerance of the inner radial volume integral.
pub const VOLUME_TOLERANCE: f64 = 1e-10;

/// A point of the closed half-space in polar coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarPoint {
    pub rho: f64,
    pub phi: f64,
    /// Unit vector in `R^n`.
    pub theta: Vec<f64>,
}

impl PolarPoint {
    pub fn new(rho: f64, phi: f64, theta: Vec<f64>) -> Result<Self> {
        if !(rho >= 0.0 && rho.is_finite()) {
            return Err(Error::DegenerateInput(format!(
                "rho must be finite and >= 0, got {rho}"
            )));
        }
        if !(0.0..=FRAC_PI_2).contains(&phi) {
            return Err(Error::DegenerateInput(format!("phi must lie in [0, pi/2], got {phi}")));
        }
        let norm = theta.iter().map(|t| t * t).sum::<f64>().sqrt();
        if theta.is_empty() || (norm - 1.0).abs() > 1e-12 {
            return Err(Error::DegenerateInput("theta must be a unit vector".into()));
        }
        Ok(Self { rho, phi, theta })
    }

    /// Planar case `n = 2`, with `theta` given as an angle.
    pub fn with_angle(rho: f64, phi: f64, angle: f64) -> Result<Self> {
        Self::new(rho, phi, vec![angle.cos(), angle.sin()])
    }

    /// Hypersurface dimension `n` (the half-space is `R^{n+1}_+`).
    pub fn dim(&self) -> usize {
        self.theta.len()
    }
}

/// A point of the closed unit ball in `R^{n+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BallPoint {
    pub coords: Vec<f64>,
}

impl BallPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 || coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::DegenerateInput(
                "ball point needs >= 2 finite coordinates".into(),
            ));
        }
        let norm = dot(&coords, &coords).sqrt();
        if norm > 1.0 + BALL_SLACK {
            return Err(Error::DegenerateInput(format!("|x| = {norm} exceeds 1")));
        }
        Ok(Self { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    /// `<x, e>`.
    pub fn height(&self) -> f64 {
        *self.coords.last().unwrap()
    }

    pub fn norm(&self) -> f64 {
        dot(&self.coords, &self.coords).sqrt()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `f(rho, phi, theta)`.
pub fn mobius_to_ball(p: &PolarPoint) -> BallPoint {
    let (s, c) = p.phi.sin_cos();
    let denom = 1.0 + p.rho * p.rho + 2.0 * p.rho * c;
    let mut coords: Vec<f64> = p.theta.iter().map(|t| 2.0 * p.rho * s * t / denom).collect();
    coords.push((p.rho * p.rho - 1.0) / denom);
    BallPoint { coords }
}

/// Closed-form inverse of [`mobius_to_ball`].
///
/// With `d = |x - e|^2` the preimage is `z' = 2 x' / d`,
/// `z_{n+1} = 2 (1 - x_{n+1}) / d - 1`, and `rho^2 = 1 + 4 x_{n+1} / d`.
/// On the axis `theta` is reported as the first basis vector.
pub fn mobius_inverse(x: &BallPoint) -> Result<PolarPoint> {
    let n = x.dim();
    let last = x.height();
    let horiz = &x.coords[..n];
    let d = dot(horiz, horiz) + (last - 1.0) * (last - 1.0);
    if d.sqrt() < POLE_EXCLUSION {
        return Err(Error::DegenerateInput(
            "point is within 1e-9 of e, which has no finite preimage".into(),
        ));
    }
    let zh: Vec<f64> = horiz.iter().map(|c| 2.0 * c / d).collect();
    let zlast = 2.0 * (1.0 - last) / d - 1.0;
    let zh_norm = dot(&zh, &zh).sqrt();
    let rho = (zh_norm * zh_norm + zlast * zlast).sqrt();
    let phi = zh_norm.atan2(zlast).clamp(0.0, FRAC_PI_2);
    let theta = if zh_norm > 0.0 {
        zh.iter().map(|c| c / zh_norm).collect()
    } else {
        let mut t = vec![0.0; n];
        t[0] = 1.0;
        t
    };
    Ok(PolarPoint { rho, phi, theta })
}

/// `w(rho, phi) = log 2 - log(1 + rho^2 + 2 rho cos(phi))`.
pub fn conformal_log_factor(rho: f64, phi: f64) -> f64 {
    std::f64::consts::LN_2 - (1.0 + rho * rho + 2.0 * rho * phi.cos()).ln()
}

/// `e^w`.
pub fn conformal_factor(rho: f64, phi: f64) -> f64 {
    2.0 / (1.0 + rho * rho + 2.0 * rho * phi.cos())
}

/// `X_e(x) = <x, e> x - (|x|^2 + 1) e / 2`.
pub fn killing_field_at(x: &BallPoint) -> Vec<f64> {
    let h = x.height();
    let sq = dot(&x.coords, &x.coords);
    let mut out: Vec<f64> = x.coords.iter().map(|c| h * c).collect();
    *out.last_mut().unwrap() -= 0.5 * (sq + 1.0);
    out
}

/// Which member of the cap family a constant radial graph is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum CapKind {
    /// `|x + sqrt(r^2 + 1) e| = r`, centre below the equator (`rho0 < 1`).
    Plus,
    /// `|x - sqrt(r^2 + 1) e| = r`, centre above the equator (`rho0 > 1`).
    Minus,
    /// The equatorial disc `{<x, e> = 0}` (`rho0 = 1`).
    Flat,
}

/// The free-boundary spherical cap `f({rho = rho0})`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SphericalCap {
    pub rho0: f64,
    /// `2 rho0 / |rho0^2 - 1|`, infinite for the flat disc.
    pub cap_radius: f64,
    pub kind: CapKind,
}

impl SphericalCap {
    /// Signed position of the cap's sphere centre along `e`.
    pub fn center_height(&self) -> f64 {
        match self.kind {
            CapKind::Flat => f64::INFINITY,
            _ => (1.0 + self.rho0 * self.rho0) / (self.rho0 * self.rho0 - 1.0),
        }
    }

    /// Height of the circle where the cap meets the unit sphere.
    pub fn boundary_height(&self) -> f64 {
        let r2 = self.rho0 * self.rho0;
        (r2 - 1.0) / (1.0 + r2)
    }

    /// Mean curvature (sum of principal curvatures) with respect to the
    /// normal pointing out of the region containing `e`.
    pub fn mean_curvature(&self, n: usize) -> f64 {
        n as f64 * (self.rho0 * self.rho0 - 1.0) / (2.0 * self.rho0)
    }
}

pub fn cap_from_rho0(rho0: f64) -> Result<SphericalCap> {
    if !(rho0 > 0.0 && rho0.is_finite()) {
        return Err(Error::DegenerateInput(format!("rho0 must be positive, got {rho0}")));
    }
    let gap = rho0 * rho0 - 1.0;
    let (cap_radius, kind) = if gap == 0.0 {
        (f64::INFINITY, CapKind::Flat)
    } else if gap > 0.0 {
        (2.0 * rho0 / gap, CapKind::Minus)
    } else {
        (2.0 * rho0 / -gap, CapKind::Plus)
    };
    Ok(SphericalCap { rho0, cap_radius, kind })
}

/// Area of the unit `k`-sphere `S^k`.
pub fn sphere_area(k: usize) -> f64 {
    match k {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (k as f64 - 1.0) * sphere_area(k - 2),
    }
}

/// `int_rho^inf e^{(n+1) w(s, phi)} s^n ds`: the conformal volume of the
/// segment of the ray through `phi` that lies beyond the graph.
///
/// Evaluated after the substitution `s = rho / t`, which turns the
/// half-line into `(0, 1]` with a smooth integrand.
pub fn volume_column(rho: f64, phi: f64, n: usize) -> Result<f64> {
    let c = phi.cos();
    let scale = 2f64.powi(n as i32 + 1) * rho.powi(n as i32 + 1);
    let integrand = |t: f64| {
        let q = t * t + rho * rho + 2.0 * rho * c * t;
        scale * t.powi(n as i32) / q.powi(n as i32 + 1)
    };
    integrate_adaptive(0.0, 1.0, 1e-15, VOLUME_TOLERANCE, integrand)
}

/// Volume of the region between the cap `{rho = rho0}` and the unit sphere
/// that contains `e`.
pub fn cap_volume(rho0: f64, n: usize) -> Result<f64> {
    if !(rho0 > 0.0) || n < 2 {
        return Err(Error::DegenerateInput(format!(
            "cap_volume needs rho0 > 0 and n >= 2 (got {rho0}, {n})"
        )));
    }
    let failure = RefCell::new(None);
    let value = integrate_adaptive(0.0, FRAC_PI_2, 1e-15, 1e-11, |phi| match volume_column(rho0, phi, n) {
        Ok(col) => phi.sin().powi(n as i32 - 1) * col,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    });
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(sphere_area(n - 1) * value?)
}

/// Area of the cap `{rho = rho0}` in the ball.
pub fn cap_area(rho0: f64, n: usize) -> Result<f64> {
    let value = integrate_adaptive(0.0, FRAC_PI_2, 1e-15, 1e-12, |phi| {
        phi.sin().powi(n as i32 - 1) * (rho0 * conformal_factor(rho0, phi)).powi(n as i32)
    })?;
    Ok(sphere_area(n - 1) * value)
}
