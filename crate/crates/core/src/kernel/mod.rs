//! The heat kernel `p_h(g, g')`.
//!
//! Two exact representations are implemented:
//!
//! * [`kernel_direct`] integrates the Fourier-type formula
//!   `(4πh)^{−n/2−n'} ∫ V(λ) exp(−φ̃/4h) dλ` after reducing it to one radial
//!   variable with a Fourier–Bessel kernel;
//! * [`kernel_transformed`] evaluates the contour-shifted Laplace
//!   representation, where `e^{−d²/4}` is factored out analytically.
//!
//! [`kernel`] rescales to `h = 1` and dispatches between them and the
//! leading-order asymptotics.

mod direct;
mod transformed;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{reduce_pair, Branch, PairGeometry, Point};
pub use crate::quad::QuadRule;

pub use direct::{grad_kernel, kernel_direct, kernel_direct_raw_unit, kernel_direct_unit};
pub use transformed::{kernel_transformed, TransformedContext};

/// Quadrature policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadSpec {
    pub rule: QuadRule,
    /// Radius, in decay lengths of the integrand envelope, covered before
    /// the tail test may stop a half-line integral.
    pub trunc_radius: f64,
    /// Bisections allowed per panel.
    pub max_refine: usize,
    pub rel_tol: f64,
    /// Raises the cancellation budget of the direct quadrature from 30 to 60.
    pub extended_precision: bool,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self { rule: QuadRule::AdaptivePanel, trunc_radius: 40.0, max_refine: 64, rel_tol: 1e-10, extended_precision: false }
    }
}

impl QuadSpec {
    pub fn with_tol(rel_tol: f64) -> Self {
        Self { rel_tol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.trunc_radius > 0.0) || self.max_refine == 0 {
            return Err(invalid("quad spec needs rel_tol > 0, trunc_radius > 0, max_refine >= 1"));
        }
        Ok(())
    }

    /// Largest admissible `(d² − |x − x'|²)/4h` for direct quadrature.
    pub fn cancellation_budget(&self) -> f64 {
        if self.extended_precision {
            60.0
        } else {
            30.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Direct,
    Transformed,
    Asymptotic,
    Oracle,
}

/// Requested evaluation path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    #[default]
    Auto,
    Direct,
    Transformed,
    Asym,
}

impl std::str::FromStr for MethodChoice {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "auto" => Ok(Self::Auto),
            "direct" => Ok(Self::Direct),
            "transformed" => Ok(Self::Transformed),
            "asym" | "asymptotic" => Ok(Self::Asym),
            _ => Err(format!("unknown method '{s}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `ε ≥ π/8`.
    Simple,
    /// `0 < ε < π/8`.
    Difficult,
    /// `x = −x'`, `2r ≥ π|x|²`.
    Vertical,
}

impl Regime {
    pub fn of(pair: &PairGeometry) -> Self {
        if pair.branch == Branch::Vertical {
            Regime::Vertical
        } else if pair.eps < crate::DELTA0 {
            Regime::Difficult
        } else {
            Regime::Simple
        }
    }
}

/// A kernel value with its error estimate and provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalResult {
    pub value: f64,
    /// `value · e^{d²/4h}`; finite even when `value` underflows.
    pub scaled: f64,
    pub log_value: f64,
    pub abs_err: f64,
    pub method: Method,
    pub regime: Regime,
}

impl EvalResult {
    pub(crate) fn from_scaled(scaled: f64, scaled_err: f64, d2_over_4h: f64, method: Method, regime: Regime) -> Self {
        let f = (-d2_over_4h).exp();
        Self {
            value: scaled * f,
            scaled,
            log_value: scaled.ln() - d2_over_4h,
            abs_err: scaled_err * f,
            method,
            regime,
        }
    }

    pub(crate) fn from_value(value: f64, abs_err: f64, d2_over_4h: f64, method: Method, regime: Regime) -> Self {
        let e = d2_over_4h.exp();
        Self { value, scaled: value * e, log_value: value.ln(), abs_err, method, regime }
    }

    /// Relative error estimate.
    pub fn rel_err(&self) -> f64 {
        if self.value != 0.0 {
            self.abs_err / self.value.abs()
        } else {
            f64::INFINITY
        }
    }

    /// Multiplies by `c > 0` (used for the dilation law).
    pub(crate) fn scale_by(mut self, log_c: f64) -> Self {
        let c = log_c.exp();
        self.value *= c;
        self.scaled *= c;
        self.abs_err *= c;
        self.log_value += log_c;
        self
    }
}

/// `−(n/2 + n')·ln h`, the log of the dilation factor `h^{−n/2−n'}`.
pub(crate) fn dilation_log(n: usize, np: usize, h: f64) -> f64 {
    -(n as f64 / 2.0 + np as f64) * h.ln()
}

pub(crate) fn check_h(h: f64) -> Result<()> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(invalid(format!("h = {h} must be a positive finite number")));
    }
    Ok(())
}

/// `p_h(g, g')` with automatic method choice.
pub fn kernel(g: &Point, gp: &Point, h: f64, spec: &QuadSpec) -> Result<EvalResult> {
    kernel_with(g, gp, h, spec, MethodChoice::Auto)
}

/// `p_h(g, g')` by the requested method. The computation is done at unit
/// time on the dilated pair and scaled back.
pub fn kernel_with(g: &Point, gp: &Point, h: f64, spec: &QuadSpec, choice: MethodChoice) -> Result<EvalResult> {
    check_h(h)?;
    spec.validate()?;
    let g1 = g.dilate(h);
    let gp1 = gp.dilate(h);
    let pair = reduce_pair(&g1, &gp1)?;
    let unit = kernel_unit(&pair, spec, choice)?;
    Ok(unit.scale_by(dilation_log(pair.n, pair.np, h)))
}

/// Unit-time kernel from reduced invariants.
pub fn kernel_unit(pair: &PairGeometry, spec: &QuadSpec, choice: MethodChoice) -> Result<EvalResult> {
    match choice {
        MethodChoice::Direct => kernel_direct_unit(pair, spec),
        MethodChoice::Transformed => transformed::kernel_transformed_unit(pair, spec),
        MethodChoice::Asym => crate::asymptotics::leading_term(pair, spec),
        MethodChoice::Auto => {
            if pair.cancellation_exponent(1.0) <= spec.cancellation_budget() {
                return kernel_direct_unit(pair, spec);
            }
            if pair.eps <= crate::DELTA0 && pair.satisfies_an() {
                return transformed::kernel_transformed_unit(pair, spec);
            }
            crate::asymptotics::leading_term(pair, spec)
        }
    }
}
