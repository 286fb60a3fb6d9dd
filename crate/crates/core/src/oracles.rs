//! Reference values that do not go through the flow's discretization:
//! elementary solid geometry of caps in the 3-ball and a stratified Monte
//! Carlo volume estimate. Used by the verification suites.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::halfspace::{mobius_inverse, BallPoint};

/// Volume of the intersection of two balls of radii `big`, `small` whose
/// centres are `dist` apart (assumes the spheres cross).
fn lens_volume(big: f64, small: f64, dist: f64) -> f64 {
    let (r_big, r, d) = (big, small, dist);
    PI * (r_big + r - d).powi(2)
        * (d * d + 2.0 * d * r - 3.0 * r * r + 2.0 * d * r_big + 6.0 * r * r_big - 3.0 * r_big * r_big)
        / (12.0 * d)
}

/// Closed-form enclosed volume of the cap `{rho = rho0}` in the unit 3-ball.
pub fn cap_volume_n2(rho0: f64) -> f64 {
    let gap = rho0 * rho0 - 1.0;
    if gap == 0.0 {
        return 2.0 * PI / 3.0;
    }
    let r = 2.0 * rho0 / gap.abs();
    let c = (1.0 + r * r).sqrt();
    let lens = lens_volume(1.0, r, c);
    if gap > 0.0 {
        lens
    } else {
        4.0 * PI / 3.0 - lens
    }
}

/// Closed-form area of the cap `{rho = rho0}` in the unit 3-ball: a zone of
/// a sphere of radius `r` whose centre sits at distance `c = sqrt(1 + r^2)`
/// and whose rim lies at height `1/c`; its area `2 pi r (1/c - c + r)` is
/// rewritten to avoid cancellation near the flat disc.
pub fn cap_area_n2(rho0: f64) -> f64 {
    let gap = rho0 * rho0 - 1.0;
    if gap == 0.0 {
        return PI;
    }
    let r = 2.0 * rho0 / gap.abs();
    let c = (1.0 + r * r).sqrt();
    2.0 * PI * r * r / (c * (c + r))
}

/// Jittered-stratified rejection estimate of the volume of
/// `{x in B^3 : rho(x) > rho0}` using `cells_per_axis^3` samples, one per
/// cell of the cube `[-1, 1]^3`. Membership is decided through the inverse
/// Möbius map.
pub fn monte_carlo_volume_n2(rho0: f64, cells_per_axis: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = cells_per_axis;
    let width = 2.0 / m as f64;
    let mut hits = 0u64;
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                let x = -1.0 + (i as f64 + rng.random::<f64>()) * width;
                let y = -1.0 + (j as f64 + rng.random::<f64>()) * width;
                let z = -1.0 + (k as f64 + rng.random::<f64>()) * width;
                if x * x + y * y + z * z >= 1.0 {
                    continue;
                }
                let inside = match BallPoint::new(vec![x, y, z]).and_then(|p| mobius_inverse(&p)) {
                    Ok(p) => p.rho > rho0,
                    // only e itself fails, and it belongs to every such region
                    Err(_) => true,
                };
                if inside {
                    hits += 1;
                }
            }
        }
    }
    8.0 * hits as f64 / (m * m * m) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflection_symmetry() {
        for rho in [0.3, 0.5, 2.0, 3.0] {
            let sum = cap_volume_n2(rho) + cap_volume_n2(1.0 / rho);
            assert!((sum - 4.0 * PI / 3.0).abs() < 1e-13);
            assert!((cap_area_n2(rho) - cap_area_n2(1.0 / rho)).abs() < 1e-13);
        }
    }

    #[test]
    fn rho_three_area() {
        assert!((cap_area_n2(3.0) - 0.45 * PI).abs() < 1e-14);
    }

    #[test]
    fn continuity_at_flat_disc() {
        assert!((cap_volume_n2(1.0 + 1e-6) - 2.0 * PI / 3.0).abs() < 1e-5);
        assert!((cap_area_n2(1.0 + 1e-6) - PI).abs() < 1e-5);
    }
}
