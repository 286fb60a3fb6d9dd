//! Property tests for the pointwise geometry: the ball correspondence, the
//! Weingarten map against an extrinsic computation in R^3, and algebraic
//! identities between curvature invariants.

use std::f64::consts::FRAC_PI_2;

use capflow_core::flow::{inverse_scale, inverse_scale_gradient, inverse_scale_identity};
use capflow_core::grid::Jet;
use capflow_core::halfspace::{
    cap_from_rho0, cap_volume, conformal_factor, killing_field_at, mobius_inverse, mobius_to_ball, BallPoint,
    PolarPoint,
};
use capflow_core::surface::{mean_curvature, pairwise_gap_sq, sigma2_and_kappa, weingarten, Weingarten};
use nalgebra::{Matrix2, SymmetricEigen};
use proptest::prelude::*;

fn ball(rho: f64, phi: f64, angle: f64) -> [f64; 3] {
    let x = mobius_to_ball(&PolarPoint::with_angle(rho, phi, angle).unwrap()).coords;
    [x[0], x[1], x[2]]
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn scale(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Axisymmetric profile `gamma(phi) = a + b cos(2 phi) + c cos(4 phi)` with
/// its first two derivatives.
#[derive(Debug, Clone, Copy)]
struct Profile {
    a: f64,
    b: f64,
    c: f64,
}

impl Profile {
    fn gamma(&self, phi: f64) -> f64 {
        self.a + self.b * (2.0 * phi).cos() + self.c * (4.0 * phi).cos()
    }

    fn jet(&self, phi: f64) -> Jet {
        let g_phi = -2.0 * self.b * (2.0 * phi).sin() - 4.0 * self.c * (4.0 * phi).sin();
        let h_pp = -4.0 * self.b * (2.0 * phi).cos() - 16.0 * self.c * (4.0 * phi).cos();
        Jet {
            phi,
            gamma: self.gamma(phi),
            g_phi,
            g_theta: 0.0,
            h_pp,
            h_pt: 0.0,
            h_tt: phi.sin() * phi.cos() * g_phi,
        }
    }

    /// Point of the profile curve in the `(x_1, x_3)` half-plane.
    fn curve(&self, phi: f64) -> [f64; 3] {
        ball(self.gamma(phi).exp(), phi, 0.0)
    }
}

/// Principal curvatures of the surface of revolution traced by the profile,
/// from finite differences of its image in R^3, with the unit normal chosen
/// to point away from the side containing `e` (the side of larger `rho`).
fn extrinsic_curvatures(p: Profile, phi: f64) -> (f64, f64) {
    let d = 1e-4;
    let c = |t: f64| p.curve(t);
    let (m2, m1, x, p1, p2) = (c(phi - 2.0 * d), c(phi - d), c(phi), c(phi + d), c(phi + 2.0 * d));
    // fourth-order central differences
    let dx = scale(sub(add(scale(sub(p1, m1), 8.0), m2), p2), 1.0 / (12.0 * d));
    let ddx = scale(
        add(sub(scale(add(p1, m1), 16.0), add(p2, m2)), scale(x, -30.0)),
        1.0 / (12.0 * d * d),
    );
    let speed = dot(dx, dx).sqrt();
    let tangent = scale(dx, 1.0 / speed);
    let mut normal = [tangent[2], 0.0, -tangent[0]];
    let outward = sub(ball(p.gamma(phi).exp() * 1.001, phi, 0.0), x);
    if dot(normal, outward) > 0.0 {
        normal = scale(normal, -1.0);
    }
    // h(T, T) = <D_T nu, T> = -<d^2x/ds^2, nu>
    let meridian = -dot(ddx, normal) / (speed * speed);
    // parallel circle of radius x_1: h = nu_r / x_1
    let parallel = normal[0] / x[0];
    (meridian, parallel)
}

fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

proptest! {
    #[test]
    fn mobius_round_trip(rho in 1e-3f64..1e3, phi in 0.0f64..FRAC_PI_2, angle in -3.1f64..3.1) {
        let p = PolarPoint::with_angle(rho, phi, angle).unwrap();
        let back = mobius_inverse(&mobius_to_ball(&p)).unwrap();
        prop_assert!((back.rho - rho).abs() <= 1e-9 * rho);
        prop_assert!((back.phi - phi).abs() <= 1e-9);
        if phi > 1e-6 {
            prop_assert!((back.theta[0] - angle.cos()).abs() < 1e-8);
            prop_assert!((back.theta[1] - angle.sin()).abs() < 1e-8);
        }
    }

    #[test]
    fn mobius_is_conformal(
        rho in 0.05f64..20.0,
        phi in 0.05f64..1.5,
        angle in -3.0f64..3.0,
        v in prop::array::uniform3(-1.0f64..1.0),
    ) {
        prop_assume!(dot(v, v) > 1e-4);
        let d = 1e-5;
        let at = |t: f64| ball(rho + t * v[0], phi + t * v[1], angle + t * v[2]);
        let image = scale(sub(at(d), at(-d)), 0.5 / d);
        let flat = v[0] * v[0] + rho * rho * (v[1] * v[1] + phi.sin().powi(2) * v[2] * v[2]);
        let ew = conformal_factor(rho, phi);
        let expected = ew * ew * flat;
        prop_assert!((dot(image, image) - expected).abs() <= 1e-7 * expected);
    }

    #[test]
    fn weingarten_matches_extrinsic_curvature(
        a in -0.7f64..0.7,
        b in -0.2f64..0.2,
        c in -0.05f64..0.05,
        phi in 0.1f64..1.45,
    ) {
        let profile = Profile { a, b, c };
        let w = weingarten(&profile.jet(phi), 2);
        let (meridian, parallel) = extrinsic_curvatures(profile, phi);
        prop_assert!((w.m[0][0] - meridian).abs() < 1e-6, "{} vs {}", w.m[0][0], meridian);
        prop_assert!((w.m[1][1] - parallel).abs() < 1e-6, "{} vs {}", w.m[1][1], parallel);
        prop_assert!(w.m[0][1].abs() < 1e-15 && w.m[1][0].abs() < 1e-15);
    }

    #[test]
    fn mean_curvature_is_the_trace(
        n in 2usize..5,
        gamma in -2.0f64..2.0,
        phi in 0.05f64..1.55,
        g in prop::array::uniform5(-1.0f64..1.0),
    ) {
        let g_theta = if n == 2 { g[1] } else { 0.0 };
        let h_pt = if n == 2 { g[3] } else { 0.0 };
        let h_tt = if n == 2 { g[4] } else { phi.sin() * phi.cos() * g[0] };
        let jet = Jet { phi, gamma, g_phi: g[0], g_theta, h_pp: g[2], h_pt, h_tt };
        let w = weingarten(&jet, n);
        let h = mean_curvature(&jet, n);
        prop_assert!((w.trace() - h).abs() <= 1e-12 * (1.0 + h.abs()));
        let (sigma2, kappa) = sigma2_and_kappa(&w).unwrap();
        prop_assert_eq!(kappa.len(), n);
        let sum: f64 = kappa.iter().sum();
        prop_assert!((sum - h).abs() <= 1e-10 * (1.0 + h.abs()));
        let mut pairs = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                pairs += kappa[i] * kappa[j];
            }
        }
        prop_assert!((pairs - sigma2).abs() <= 1e-10 * (1.0 + sigma2.abs() + h * h));
    }

    #[test]
    fn dissipation_identity(kappa in prop::collection::vec(-5.0f64..5.0, 2..5)) {
        let n = kappa.len() as f64;
        let h: f64 = kappa.iter().sum();
        let mut sigma2 = 0.0;
        for i in 0..kappa.len() {
            for j in i + 1..kappa.len() {
                sigma2 += kappa[i] * kappa[j];
            }
        }
        let lhs = h * h - 2.0 * n / (n - 1.0) * sigma2;
        let rhs = pairwise_gap_sq(&kappa) / (n - 1.0);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + h * h + sigma2.abs()));
    }

    #[test]
    fn principal_curvatures_match_symmetric_eigensolver(
        metric in prop::array::uniform3(-1.0f64..1.0),
        form in prop::array::uniform3(-3.0f64..3.0),
    ) {
        // Weingarten map G^{-1} B of a symmetric form B against a metric G
        let g = Matrix2::new(1.5 + metric[0], metric[1] * 0.5, metric[1] * 0.5, 1.5 + metric[2]);
        let b = Matrix2::new(form[0], form[1], form[1], form[2]);
        let ginv = g.try_inverse().unwrap();
        let m = ginv * b;
        let w = Weingarten { m: [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]], theta_multiplicity: 1 };
        let (_, kappa) = sigma2_and_kappa(&w).unwrap();
        let root = SymmetricEigen::new(g).eigenvectors
            * Matrix2::from_diagonal(&SymmetricEigen::new(g).eigenvalues.map(|l| 1.0 / l.sqrt()))
            * SymmetricEigen::new(g).eigenvectors.transpose();
        let mut expected: Vec<f64> = SymmetricEigen::new(root * b * root).eigenvalues.iter().copied().collect();
        expected.sort_by(|a, b| b.total_cmp(a));
        for (k, e) in kappa.iter().zip(&expected) {
            prop_assert!((k - e).abs() < 1e-9 * (1.0 + e.abs()), "{kappa:?} vs {expected:?}");
        }
    }

    #[test]
    fn inverse_scale_identity_holds(
        gamma in -3.0f64..3.0,
        phi in 0.01f64..1.56,
        g_phi in -2.0f64..2.0,
        g_theta in -2.0f64..2.0,
    ) {
        let jet = Jet { phi, gamma, g_phi, g_theta, ..Jet::default() };
        let dg = inverse_scale_gradient(&jet);
        let cross = g_phi * dg[0] + g_theta * dg[1] / phi.sin().powi(2);
        let identity = inverse_scale_identity(&jet);
        prop_assert!((cross - identity).abs() <= 1e-12 * (1.0 + identity.abs()));

        // the closed-form partials agree with differences of 1 / (rho e^w)
        let d = 1e-6;
        let fd_phi = (inverse_scale(gamma + d * g_phi, phi + d) - inverse_scale(gamma - d * g_phi, phi - d)) / (2.0 * d);
        let fd_theta = (inverse_scale(gamma + d * g_theta, phi) - inverse_scale(gamma - d * g_theta, phi)) / (2.0 * d);
        prop_assert!((fd_phi - dg[0]).abs() < 1e-6 * (1.0 + dg[0].abs()));
        prop_assert!((fd_theta - dg[1]).abs() < 1e-6 * (1.0 + dg[1].abs()));
        let rho = gamma.exp();
        let ew = conformal_factor(rho, phi);
        prop_assert!((inverse_scale(gamma, phi) - 1.0 / (rho * ew)).abs() < 1e-12 * inverse_scale(gamma, phi));
    }
}

#[test]
fn cap_normal_orientation() {
    // rho0 > 1 caps curve towards e and have positive mean curvature
    let p = Profile {
        a: 2f64.ln(),
        b: 0.0,
        c: 0.0,
    };
    let (meridian, parallel) = extrinsic_curvatures(p, 0.7);
    assert!((meridian - 0.75).abs() < 1e-7 && (parallel - 0.75).abs() < 1e-7);
    assert!((mean_curvature(&p.jet(0.7), 2) - 1.5).abs() < 1e-14);
}

fn ball_point(v: [f64; 3], radius: f64) -> Option<[f64; 3]> {
    let norm = dot(v, v).sqrt();
    if norm < 1e-3 {
        return None;
    }
    let x = scale(v, radius / norm);
    // keep clear of e, which has no preimage
    (dot(sub(x, [0.0, 0.0, 1.0]), sub(x, [0.0, 0.0, 1.0])).sqrt() > 1e-6).then_some(x)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn ball_round_trip(v in prop::array::uniform3(-1.0f64..1.0), radius in 0.0f64..1.0) {
        let Some(x) = ball_point(v, radius) else { return Ok(()) };
        let p = mobius_inverse(&BallPoint::new(x.to_vec()).unwrap()).unwrap();
        let angle = p.theta[1].atan2(p.theta[0]);
        let y = ball(p.rho, p.phi, angle);
        for i in 0..3 {
            prop_assert!((x[i] - y[i]).abs() < 1e-10, "{x:?} -> {y:?}");
        }
    }
}

proptest! {
    #[test]
    fn mobius_preserves_angles(
        rho in 0.05f64..20.0,
        phi in 0.05f64..1.5,
        angle in -3.0f64..3.0,
        turn in 0.0f64..std::f64::consts::PI,
    ) {
        // orthonormal pair in the flat metric d rho^2 + rho^2 d phi^2 + rho^2 sin^2 d theta^2
        let flat = |t: f64| [t.cos(), (t.sin()) / rho, 0.0];
        let out_of_plane = [0.0, 0.0, 1.0 / (rho * phi.sin())];
        let d = 1e-6;
        let push = |u: [f64; 3]| {
            let at = |t: f64| ball(rho + t * u[0], phi + t * u[1], angle + t * u[2]);
            scale(sub(at(d), at(-d)), 0.5 / d)
        };
        let ew = conformal_factor(rho, phi);
        for (a, b) in [(flat(turn), flat(turn + FRAC_PI_2)), (flat(turn), out_of_plane)] {
            let (pa, pb) = (push(a), push(b));
            let (la, lb) = (dot(pa, pa).sqrt(), dot(pb, pb).sqrt());
            prop_assert!((la / ew - 1.0).abs() < 1e-5 && (lb / ew - 1.0).abs() < 1e-5);
            prop_assert!((dot(pa, pb) / (la * lb)).abs() < 1e-5);
        }
    }

    #[test]
    fn boundary_and_killing_field(rho in 1e-3f64..1e3, angle in -3.1f64..3.1) {
        let x = ball(rho, FRAC_PI_2, angle);
        prop_assert!((dot(x, x).sqrt() - 1.0).abs() < 1e-12);
        let k = killing_field_at(&BallPoint::new(x.to_vec()).unwrap());
        prop_assert!((k[0] * x[0] + k[1] * x[1] + k[2] * x[2]).abs() < 1e-15);
        let on_equator = ball(1.0, FRAC_PI_2, angle);
        prop_assert!(on_equator[2].abs() < 1e-15);
    }
}

#[test]
fn cap_mean_curvature_sign_follows_orientation() {
    for rho0 in [0.5f64, 1.0, 2.0] {
        let cap = cap_from_rho0(rho0).unwrap();
        let h = mean_curvature(
            &Profile {
                a: rho0.ln(),
                b: 0.0,
                c: 0.0,
            }
            .jet(0.6),
            2,
        );
        let expected = if rho0 == 1.0 {
            0.0
        } else {
            2.0 * (rho0 - 1.0).signum() / cap.cap_radius
        };
        assert!((h - expected).abs() < 1e-10, "rho0 = {rho0}: {h} vs {expected}");
        let (meridian, parallel) = extrinsic_curvatures(
            Profile {
                a: rho0.ln(),
                b: 0.0,
                c: 0.0,
            },
            0.6,
        );
        assert!((meridian + parallel - h).abs() < 1e-6);
    }
}

#[test]
fn cap_volume_decreases_in_rho0() {
    let v: Vec<f64> = [0.25, 0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|&r| cap_volume(r, 2).unwrap())
        .collect();
    assert!(v.windows(2).all(|w| w[1] < w[0]), "{v:?}");
}
