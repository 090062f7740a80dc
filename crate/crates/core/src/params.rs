//! Model parameters, derived constants and elasticity-regime classification.
//!
//! The CEV diffusion `dX = μX dt + σ X^{γ/2} dW` is governed by the derived
//! constants
//!
//! ```text
//! β = 2 − γ,        α = (3 − γ) σ² / (2μ),
//! η = β² σ² / 2,    ν = −βμ/η = 2μ / ((γ−2) σ²),
//! a = 1/(2 − γ),    δ = 2(1 − γ)/(2 − γ),
//! ```
//!
//! with `ν < 0 ⟺ γ < 2`. The Laguerre parameter `a` decides the endpoint
//! classification of the Fokker–Planck operator: `0 ≤ γ < 1` has a limit
//! circle at the origin, `1 ≤ γ < 2` is limit point at both ends, and `γ > 2`
//! has a limit circle at infinity. `γ = 2` (Black–Scholes) is singular for
//! the power-law machinery and carries the log-coordinate exponent
//! `q = 2(σ² − μ)/σ²` instead.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from parameter validation and γ=2 singular accesses.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamsError {
    #[error("invalid parameter: {0}")]
    Invalid(String),
    /// A quantity that is undefined at the Black–Scholes elasticity γ = 2.
    #[error("{0} is undefined at gamma = 2")]
    SingularGamma(&'static str),
    /// `a = 1/(2−γ)` is a negative integer; the Kummer machinery for finite
    /// θ-extensions needs `a ∉ −ℕ`.
    #[error("a = {0} is a negative integer; finite-theta extension formulas do not apply")]
    NegativeIntegerA(f64),
}

/// Raw CEV model inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Drift μ > 0 (1/time).
    pub mu: f64,
    /// Volatility σ > 0.
    pub sigma: f64,
    /// Elasticity γ ≥ 0 (dimensionless); γ = 2 is the singular
    /// Black–Scholes case with limited support.
    pub gamma: f64,
    /// Risk-free rate r ≥ 0 (1/time).
    #[serde(default)]
    pub r: f64,
    /// Initial price x0 > 0.
    #[serde(default = "default_x0")]
    pub x0: f64,
}

fn default_x0() -> f64 {
    1.0
}

impl ModelParams {
    pub fn new(mu: f64, sigma: f64, gamma: f64, r: f64, x0: f64) -> Result<Self, ParamsError> {
        let p = ModelParams { mu, sigma, gamma, r, x0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ParamsError> {
        fn check(name: &str, v: f64, strictly_positive: bool) -> Result<(), ParamsError> {
            if !v.is_finite() {
                return Err(ParamsError::Invalid(format!("{name} must be finite, got {v}")));
            }
            if strictly_positive && v <= 0.0 {
                return Err(ParamsError::Invalid(format!("{name} must be > 0, got {v}")));
            }
            if !strictly_positive && v < 0.0 {
                return Err(ParamsError::Invalid(format!("{name} must be >= 0, got {v}")));
            }
            Ok(())
        }
        check("mu", self.mu, true)?;
        check("sigma", self.sigma, true)?;
        check("gamma", self.gamma, false)?;
        check("r", self.r, false)?;
        check("x0", self.x0, true)?;
        Ok(())
    }

    /// True exactly at the singular Black–Scholes elasticity.
    pub fn is_black_scholes(&self) -> bool {
        self.gamma == 2.0
    }
}

/// Constants derived from [`ModelParams`].
///
/// `nu`, `a` and `delta` are undefined at γ = 2 and are exposed through
/// fallible accessors; `q` is only meaningful there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    /// β = 2 − γ.
    pub beta: f64,
    /// α = (3 − γ)σ²/(2μ). Defined for completeness; no downstream formula
    /// consumes it.
    pub alpha: f64,
    /// η = β²σ²/2.
    pub eta: f64,
    nu: Option<f64>,
    a: Option<f64>,
    delta: Option<f64>,
    q: Option<f64>,
}

impl DerivedParams {
    /// ν = −βμ/η = 2μ/((γ−2)σ²); negative iff γ < 2.
    pub fn nu(&self) -> Result<f64, ParamsError> {
        self.nu.ok_or(ParamsError::SingularGamma("nu"))
    }

    /// Laguerre parameter a = 1/(2−γ).
    pub fn a(&self) -> Result<f64, ParamsError> {
        self.a.ok_or(ParamsError::SingularGamma("a"))
    }

    /// Bessel dimension δ = 2(1−γ)/(2−γ).
    pub fn delta(&self) -> Result<f64, ParamsError> {
        self.delta.ok_or(ParamsError::SingularGamma("delta"))
    }

    /// Log-coordinate weight exponent q = 2(σ²−μ)/σ²; γ = 2 only.
    pub fn q(&self) -> Result<f64, ParamsError> {
        self.q.ok_or(ParamsError::Invalid("q is only defined at gamma = 2".into()))
    }

    /// |ν|, the scale of the coordinate change y = |ν| x^{2−γ}.
    pub fn nu_abs(&self) -> Result<f64, ParamsError> {
        Ok(self.nu()?.abs())
    }

    /// Rejects negative-integer `a` (where the finite-θ Kummer solution
    /// formula breaks down), passing the value through otherwise.
    pub fn a_noninteger(&self) -> Result<f64, ParamsError> {
        let a = self.a()?;
        if a < 0.0 && a == a.round() {
            return Err(ParamsError::NegativeIntegerA(a));
        }
        Ok(a)
    }
}

/// Computes all derived constants from validated model inputs.
pub fn derive_params(m: &ModelParams) -> Result<DerivedParams, ParamsError> {
    m.validate()?;
    let g = m.gamma;
    let beta = 2.0 - g;
    let alpha = (3.0 - g) * m.sigma * m.sigma / (2.0 * m.mu);
    let eta = 0.5 * beta * beta * m.sigma * m.sigma;
    if m.is_black_scholes() {
        let q = 2.0 * (m.sigma * m.sigma - m.mu) / (m.sigma * m.sigma);
        return Ok(DerivedParams {
            beta,
            alpha,
            eta,
            nu: None,
            a: None,
            delta: None,
            q: Some(q),
        });
    }
    let nu = -beta * m.mu / eta;
    let a = 1.0 / beta;
    let delta = 2.0 * (1.0 - g) / beta;
    Ok(DerivedParams {
        beta,
        alpha,
        eta,
        nu: Some(nu),
        a: Some(a),
        delta: Some(delta),
        q: None,
    })
}

/// Elasticity band of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Band {
    /// 0 ≤ γ < 1.
    SubOne,
    /// 1 ≤ γ < 2.
    OneToTwo,
    /// γ = 2.
    BlackScholes,
    /// γ > 2.
    SuperTwo,
}

/// Endpoint classification of the Sturm–Liouville problem.
///
/// `Singular` marks γ = 2, where the classification depends on the relative
/// size of μ and σ² and is reported rather than decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EndpointClass {
    LimitCircle,
    LimitPoint,
    Singular,
}

/// Full regime record for one elasticity value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub band: Band,
    pub endpoint_zero: EndpointClass,
    pub endpoint_infinity: EndpointClass,
    /// Human-readable interval for a = 1/(2−γ), e.g. `"(1/2, 1)"`.
    pub a_interval: String,
    /// Pontryagin index κ = ⌊(n+1)/2⌋ when a ∈ (−n−1, −n); `None` for a ≥ 0,
    /// γ = 2 and negative-integer a.
    pub pontryagin_index: Option<u32>,
}

/// Classifies the endpoints of the CEV Fokker–Planck operator by elasticity.
///
/// - `0 ≤ γ < 1` (a ∈ [1/2, 1)): 0 is limit circle, ∞ limit point;
/// - `1 ≤ γ < 2` (a ≥ 1): both limit point;
/// - `γ > 2` (a < 0): 0 limit point, ∞ limit circle;
/// - `γ = 2`: both reported as `Singular`.
pub fn classify_regime(gamma: f64) -> Result<Regime, ParamsError> {
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(ParamsError::Invalid(format!("gamma must be >= 0, got {gamma}")));
    }
    if gamma == 2.0 {
        return Ok(Regime {
            band: Band::BlackScholes,
            endpoint_zero: EndpointClass::Singular,
            endpoint_infinity: EndpointClass::Singular,
            a_interval: "undefined (log coordinates)".into(),
            pontryagin_index: None,
        });
    }
    let a = 1.0 / (2.0 - gamma);
    let (band, zero, inf, interval) = if gamma < 1.0 {
        (
            Band::SubOne,
            EndpointClass::LimitCircle,
            EndpointClass::LimitPoint,
            "[1/2, 1)".to_string(),
        )
    } else if gamma < 2.0 {
        (
            Band::OneToTwo,
            EndpointClass::LimitPoint,
            EndpointClass::LimitPoint,
            "[1, inf)".to_string(),
        )
    } else {
        (
            Band::SuperTwo,
            EndpointClass::LimitPoint,
            EndpointClass::LimitCircle,
            "(-inf, 0)".to_string(),
        )
    };
    Ok(Regime {
        band,
        endpoint_zero: zero,
        endpoint_infinity: inf,
        a_interval: interval,
        pontryagin_index: pontryagin_index(a),
    })
}

/// κ = ⌊(n+1)/2⌋ for a ∈ (−n−1, −n); `None` for a ≥ 0 or integer a.
fn pontryagin_index(a: f64) -> Option<u32> {
    if a >= 0.0 || a == a.round() {
        return None;
    }
    let n = (-a).floor() as u32; // a in (-n-1, -n)
    Some((n + 1).div_euclid(2))
}
