//! Sturm–Liouville machinery for the CEV Fokker–Planck operator.
//!
//! A second-order operator `L(p) = l0 p + l1 p' + l2 p''` with `l2 > 0` has
//! the normal form
//!
//! ```text
//! L(p) = (1/w) [ (Q2 p')' + Q0 p ],
//! w  = (1/l2) exp( ∫_{x_ref}^x l1/l2 ),   Q2 = w l2,   Q0 = w l0,
//! ```
//!
//! and is symmetric on L²((0,∞), w) for functions vanishing near the
//! endpoints. For the CEV coefficients the weight is the closed form
//! `w_γ(x) = x^γ exp(ν x^{2−γ})` (γ ≠ 2) and `w_2(x) = x^q`.
//!
//! The generator `G_γ f = μx f' + ½σ²x^γ f''` is the conjugate of the
//! Fokker–Planck operator by multiplication with the zero-flux profile
//! `1/w_γ`: `G_γ f = w_γ · L_γ(f / w_γ)`, and is symmetric against the
//! speed density `1/w_γ`, not against `w_γ` itself.

use crate::params::{DerivedParams, ModelParams};
use thiserror::Error;

mod quadrature;

pub use quadrature::{
    gauss_laguerre_rule, weighted_inner, AdaptiveLogGrid, GaussLaguerre, InnerProduct,
    QuadratureRule,
};

/// Errors of the Sturm–Liouville layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SlError {
    /// ∫ l1/l2 diverged on a compact subinterval of (0, ∞).
    #[error("coefficient ratio l1/l2 is not integrable near x = {0}")]
    NonIntegrableCoefficient(f64),
    /// Adaptive refinement stalled above tolerance.
    #[error("quadrature failed to converge: {0}")]
    NonConvergent(&'static str),
    #[error("invalid quadrature input: {0}")]
    Invalid(String),
}

/// Value and first two derivatives of a scalar function at one point.
///
/// Operator applications take these bundles rather than differentiating
/// numerically; finite differences belong to test oracles only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueDerivs {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl ValueDerivs {
    pub fn new(value: f64, d1: f64, d2: f64) -> Self {
        ValueDerivs { value, d1, d2 }
    }
}

type Coeff = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// Operator coefficients (l0, l1, l2) on (0, ∞) with l2 > 0.
pub struct CoefficientTriple {
    pub l0: Coeff,
    pub l1: Coeff,
    pub l2: Coeff,
}

impl CoefficientTriple {
    pub fn new(
        l0: impl Fn(f64) -> f64 + Send + Sync + 'static,
        l1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        l2: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        CoefficientTriple { l0: Box::new(l0), l1: Box::new(l1), l2: Box::new(l2) }
    }
}

/// The expanded CEV Fokker–Planck coefficients
/// `l0 = ½σ²γ(γ−1)x^{γ−2} − μ`, `l1 = σ²γx^{γ−1} − μx`, `l2 = ½σ²x^γ`.
pub fn cev_triple(m: &ModelParams) -> CoefficientTriple {
    let (mu, s2, g) = (m.mu, m.sigma * m.sigma, m.gamma);
    CoefficientTriple::new(
        move |x: f64| 0.5 * s2 * g * (g - 1.0) * x.powf(g - 2.0) - mu,
        move |x: f64| s2 * g * x.powf(g - 1.0) - mu * x,
        move |x: f64| 0.5 * s2 * x.powf(g),
    )
}

/// Normal form of a coefficient triple, anchored at `x_ref`.
pub struct NormalForm {
    triple: CoefficientTriple,
    x_ref: f64,
}

/// Brings a triple to normal form. The weight is evaluated on demand by
/// integrating `l1/l2` from `x_ref`; integrability on compacts is probed at
/// construction.
pub fn normal_form(triple: CoefficientTriple, x_ref: f64) -> Result<NormalForm, SlError> {
    if !(x_ref > 0.0) {
        return Err(SlError::Invalid(format!("x_ref must be > 0, got {x_ref}")));
    }
    let nf = NormalForm { triple, x_ref };
    // probe the inner integral on a compact around the anchor
    nf.log_weight(2.0 * x_ref)?;
    nf.log_weight(0.5 * x_ref)?;
    Ok(nf)
}

impl NormalForm {
    /// ln of the weight: ∫_{x_ref}^x l1/l2 − ln l2(x).
    fn log_weight(&self, x: f64) -> Result<f64, SlError> {
        let ratio = |t: f64| (self.triple.l1)(t) / (self.triple.l2)(t);
        // integrate in log coordinates u = ln t
        let (lo, hi) = (self.x_ref.min(x), self.x_ref.max(x));
        let f = |u: f64| {
            let t = u.exp();
            ratio(t) * t
        };
        let integral = quadrature::adaptive_simpson_checked(&f, lo.ln(), hi.ln(), 1e-12, 48)
            .ok_or(SlError::NonIntegrableCoefficient(x))?;
        let signed = if x >= self.x_ref { integral } else { -integral };
        if !signed.is_finite() {
            return Err(SlError::NonIntegrableCoefficient(x));
        }
        Ok(signed - (self.triple.l2)(x).ln())
    }

    /// Weight w(x) = (1/l2) exp(∫ l1/l2).
    pub fn w(&self, x: f64) -> Result<f64, SlError> {
        Ok(self.log_weight(x)?.exp())
    }

    /// Q2 = w · l2.
    pub fn q2(&self, x: f64) -> Result<f64, SlError> {
        Ok(self.w(x)? * (self.triple.l2)(x))
    }

    /// Q0 = w · l0.
    pub fn q0(&self, x: f64) -> Result<f64, SlError> {
        Ok(self.w(x)? * (self.triple.l0)(x))
    }

    pub fn x_ref(&self) -> f64 {
        self.x_ref
    }
}

/// Closed-form CEV weight `w_γ(x) = x^γ exp(ν x^{2−γ})`, or `x^q` at γ = 2.
pub fn cev_weight(d: &DerivedParams, gamma: f64, x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if gamma == 2.0 {
        let q = d.q().expect("q defined at gamma = 2");
        x.powf(q)
    } else {
        let nu = d.nu().expect("nu defined away from gamma = 2");
        (gamma * x.ln() + nu * x.powf(2.0 - gamma)).exp()
    }
}

/// Modified Wronskian `W_x(f, g) = Q2(x) [f g' − f' g](x)`; the inputs are
/// (value, derivative) pairs at x.
pub fn modified_wronskian(q2_at_x: f64, f: (f64, f64), g: (f64, f64)) -> f64 {
    q2_at_x * (f.0 * g.1 - f.1 * g.0)
}

/// Pointwise CEV Fokker–Planck operator
/// `L_γ[p] = [½σ²γ(γ−1)x^{γ−2} − μ] p + [σ²γx^{γ−1} − μx] p' + ½σ²x^γ p''`.
pub fn apply_fp(m: &ModelParams, x: f64, p: ValueDerivs) -> f64 {
    let s2 = m.sigma * m.sigma;
    let g = m.gamma;
    (0.5 * s2 * g * (g - 1.0) * x.powf(g - 2.0) - m.mu) * p.value
        + (s2 * g * x.powf(g - 1.0) - m.mu * x) * p.d1
        + 0.5 * s2 * x.powf(g) * p.d2
}

/// Pointwise generator `G_γ[f] = μx f' + ½σ²x^γ f''`.
pub fn apply_generator(m: &ModelParams, x: f64, f: ValueDerivs) -> f64 {
    m.mu * x * f.d1 + 0.5 * m.sigma * m.sigma * x.powf(m.gamma) * f.d2
}
