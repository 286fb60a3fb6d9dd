//! Numerical solver for the conformal, volume-preserving mean curvature
//! flow of free-boundary hypersurfaces in the unit ball.
//!
//! A hypersurface that is star-shaped with respect to the Killing field
//! `X_e` is a radial graph `rho = e^gamma` over the closed upper hemisphere
//! once the ball is identified with the half-space by a Möbius map. The
//! flow then becomes a quasilinear parabolic equation for `gamma` with a
//! Neumann condition at the equator, which this crate evolves with
//! CFL-limited explicit Euler steps while auditing the enclosed volume,
//! the area, and the Minkowski identities.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod flow;
pub mod grid;
pub mod halfspace;
pub mod io;
pub mod oracles;
pub mod quadrature;
pub mod surface;
pub mod verify;

pub use diagnostics::{
    cap_fit, compute_area, compute_volume, conservation_audit, minkowski_residuals, CapFit, ConservationReport,
    FlowAudit,
};
pub use error::{Error, Result};
pub use flow::{
    flow_rhs, make_initial_condition, run, step, FlowConfig, FlowState, InitialCondition, RunReport, StopReason,
};
pub use grid::{GridMode, HemisphereGrid, Jet, RadialField};
pub use halfspace::{cap_from_rho0, cap_volume, mobius_inverse, mobius_to_ball, BallPoint, PolarPoint, SphericalCap};
pub use surface::{PointwiseGeometry, Weingarten};
