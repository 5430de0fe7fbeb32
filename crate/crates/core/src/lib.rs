//! Numerical evaluation of the Grushin heat kernel
//! `p_h(g, g')` for `Δ_G = Δ_x + |x|² Δ_u` on `ℝⁿ × ℝ^{n'}`.
//!
//! The crate is organised bottom-up:
//!
//! * [`scalar`] – the phase `ψ_a`, its imaginary-axis derivative `μ_a` and
//!   inverse, the amplitudes `V`, `V₂`, and the shifted phase `f`.
//! * [`special`] – normalised Bessel kernels used by the radial reductions.
//! * [`quad`] – Gauss–Kronrod and tanh–sinh panels, half-line integration.
//! * [`geometry`] – pair invariants and the Carnot–Carathéodory distance.
//! * [`kernel`] – the heat kernel by direct and contour-shifted quadrature,
//!   first derivatives, and regime dispatch.
//! * [`asymptotics`] – leading-order asymptotics and two-sided envelopes.
//! * [`oracle`] – independent reference solvers (PDE, brute-force quadrature,
//!   finite differences, semigroup check).

pub mod asymptotics;
pub mod error;
pub mod geometry;
pub mod kernel;
pub mod oracle;
pub mod quad;
pub mod scalar;
pub mod special;

pub use error::{GrushinError, Result};
pub use geometry::{Branch, PairGeometry, Point};
pub use kernel::{EvalResult, Method, QuadRule, QuadSpec, Regime};

/// Regime boundary between the simple and the difficult case, `π/8`.
pub const DELTA0: f64 = std::f64::consts::PI / 8.0;
