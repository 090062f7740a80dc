//! Arbitrage-spectral layer: the positive harmonic function of the CEV
//! generator, the Doob-conditioned dynamics, the risk premium, and the
//! per-regime arbitrage classification.
//!
//! For 0 < γ < 2 the origin is attainable and conditioning the diffusion to
//! survive is the Doob transform by
//!
//! ```text
//! h_↑(x) = ∫₀^x e^{ν y^{2−γ}} dy,     ν < 0,
//! ```
//!
//! which is harmonic (`G_γ h_↑ = 0`), vanishes at 0, increases strictly and
//! saturates at a finite level. The change of variables `t = |ν| y^{2−γ}`
//! turns the integral into a lower incomplete gamma,
//! `h_↑(x) = a |ν|^{−a} γ(a, |ν| x^{2−γ})` with `a = 1/(2−γ) > 0`, which is
//! how it is evaluated. The conditioned generator gains the positive drift
//! `σ² x^γ h_↑'/h_↑ ~ σ² x^{γ−1}` near the origin.
//!
//! For γ > 2 the origin is unattainable, no non-constant positive harmonic
//! function is attached to it, and the arbitrage-relevant phenomenon is the
//! strict-local-martingale defect of the discounted price instead.

use crate::params::{derive_params, Band, ModelParams, ParamsError};
use crate::sl_core::ValueDerivs;
use crate::specfun::{log_gamma, reg_lower_gamma, SpecFunError};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ArbitrageError {
    /// The harmonic/Doob construction needs 0 < γ < 2.
    #[error("doob machinery requires 0 < gamma < 2, got {0}")]
    WrongRegime(f64),
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
}

/// Evaluator for `h_↑` with its derived constants precomputed; build once
/// per parameter set and reuse across calls (Monte Carlo steppers hit this
/// on every step).
#[derive(Debug, Clone, Copy)]
pub struct HarmonicUp {
    gamma: f64,
    sigma2: f64,
    mu: f64,
    a: f64,
    nu: f64,
    nu_abs: f64,
    /// a |ν|^{−a} Γ(a), so h(x) = prefactor · P(a, |ν| x^{2−γ}).
    prefactor: f64,
}

impl HarmonicUp {
    pub fn new(m: &ModelParams) -> Result<Self, ArbitrageError> {
        if !(m.gamma > 0.0 && m.gamma < 2.0) {
            return Err(ArbitrageError::WrongRegime(m.gamma));
        }
        let d = derive_params(m)?;
        let a = d.a()?;
        let nu = d.nu()?;
        let nu_abs = nu.abs();
        let gamma_a = log_gamma(a)?.value();
        Ok(HarmonicUp {
            gamma: m.gamma,
            sigma2: m.sigma * m.sigma,
            mu: m.mu,
            a,
            nu,
            nu_abs,
            prefactor: a * nu_abs.powf(-a) * gamma_a,
        })
    }

    /// h_↑(x) = ∫₀^x e^{ν y^{2−γ}} dy, evaluated through the regularized
    /// lower incomplete gamma.
    pub fn h(&self, x: f64) -> Result<f64, ArbitrageError> {
        if x == 0.0 {
            return Ok(0.0);
        }
        let t = self.nu_abs * x.powf(2.0 - self.gamma);
        Ok(self.prefactor * reg_lower_gamma(self.a, t)?)
    }

    /// h_↑'(x) = e^{ν x^{2−γ}}, exactly.
    pub fn h_prime(&self, x: f64) -> f64 {
        (self.nu * x.powf(2.0 - self.gamma)).exp()
    }

    /// h_↑''(x) = ν(2−γ) x^{1−γ} h_↑'(x).
    pub fn h_second(&self, x: f64) -> f64 {
        self.nu * (2.0 - self.gamma) * x.powf(1.0 - self.gamma) * self.h_prime(x)
    }

    /// h_↑(∞) = a |ν|^{−a} Γ(a); `h(x)/h_infinity()` is the survival
    /// probability of the diffusion started at x.
    pub fn h_infinity(&self) -> f64 {
        self.prefactor
    }

    /// The Doob drift add-on σ² x^γ h'/h > 0.
    pub fn drift_addon(&self, x: f64) -> Result<f64, ArbitrageError> {
        Ok(self.sigma2 * x.powf(self.gamma) * self.h_prime(x) / self.h(x)?)
    }

    /// Conditioned generator `G↑ f = ½σ²x^γ f'' + (μx + addon) f'`.
    pub fn conditioned_generator_apply(&self, x: f64, f: ValueDerivs) -> Result<f64, ArbitrageError> {
        let addon = self.drift_addon(x)?;
        Ok(0.5 * self.sigma2 * x.powf(self.gamma) * f.d2 + (self.mu * x + addon) * f.d1)
    }

    /// Same object through the defining identity `h⁻¹ G_γ(h f)`; used as the
    /// dual evaluation path in consistency checks.
    pub fn conditioned_generator_dual(&self, x: f64, f: ValueDerivs) -> Result<f64, ArbitrageError> {
        let h = self.h(x)?;
        let hp = self.h_prime(x);
        let hpp = self.h_second(x);
        let hf = ValueDerivs::new(
            h * f.value,
            hp * f.value + h * f.d1,
            hpp * f.value + 2.0 * hp * f.d1 + h * f.d2,
        );
        let m = ModelParams {
            mu: self.mu,
            sigma: self.sigma2.sqrt(),
            gamma: self.gamma,
            r: 0.0,
            x0: 1.0,
        };
        Ok(crate::sl_core::apply_generator(&m, x, hf) / h)
    }
}

/// h_↑ and its derivative at x; convenience wrapper over [`HarmonicUp`].
pub fn harmonic_h(m: &ModelParams, x: f64) -> Result<(f64, f64), ArbitrageError> {
    let h = HarmonicUp::new(m)?;
    Ok((h.h(x)?, h.h_prime(x)))
}

/// The positive drift added by survival conditioning, σ²x^γ h'/h.
pub fn doob_drift(m: &ModelParams, x: f64) -> Result<f64, ArbitrageError> {
    HarmonicUp::new(m)?.drift_addon(x)
}

/// Risk premium λ(x) = ((μ−r)/σ) x^{1−γ/2}.
pub fn risk_premium(m: &ModelParams, x: f64) -> f64 {
    (m.mu - m.r) / m.sigma * x.powf(1.0 - 0.5 * m.gamma)
}

/// Candidate eigenfunction φ of the pricing construction: the solution of
/// `d/dx ln φ = (r−μ)x / (σ²x^γ) = −λ(x)/σ(x)`,
///
/// ```text
/// φ(x) = exp( (r−μ)/σ² · x^{2−γ}/(2−γ) ),   γ ≠ 2,
/// φ(x) = x^{(r−μ)/σ²},                      γ = 2.
/// ```
pub fn candidate_phi(m: &ModelParams, x: f64) -> f64 {
    let s2 = m.sigma * m.sigma;
    if m.is_black_scholes() {
        x.powf((m.r - m.mu) / s2)
    } else {
        ((m.r - m.mu) / s2 * x.powf(2.0 - m.gamma) / (2.0 - m.gamma)).exp()
    }
}

/// Mechanism by which arbitrage-related behavior appears in the regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Mechanism {
    /// 0 < γ < 2: attainable boundary, conditioning-based construction.
    BoundaryConditioningArbitrage,
    /// γ > 2: discounted price is a strict local martingale (bubble).
    StrictLocalMartingaleBubble,
    /// γ = 2: classical complete-market baseline.
    BlackScholesBaseline,
}

/// How the conditioning mode shows up in the forward spectral problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ForwardModeVisibility {
    /// 0 < γ < 1: positive integrable forward eigenfunctions exist (θ ≠ ∞).
    IntegrableForwardMode,
    /// 1 ≤ γ < 2: only a generalized boundary state of the backward problem.
    GeneralizedBoundaryStateOnly,
    /// γ > 2: no positive boundary state at the origin at all.
    NoPositiveBoundaryState,
}

/// Per-regime arbitrage classification.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    pub band: Band,
    /// The origin is attainable iff γ < 2.
    pub attainable_zero: bool,
    pub mechanism: Mechanism,
    /// `None` at the Black–Scholes point, where the trichotomy does not
    /// apply.
    pub forward_mode_visibility: Option<ForwardModeVisibility>,
    /// Bessel dimension δ = 2(1−γ)/(2−γ); `None` at γ = 2.
    pub delta: Option<f64>,
}

/// The four-way classification of the arbitrage mechanism with the Bessel
/// dimension attached.
pub fn arbitrage_report(m: &ModelParams) -> Result<RegimeReport, ArbitrageError> {
    let regime = crate::params::classify_regime(m.gamma)?;
    let d = derive_params(m)?;
    let g = m.gamma;
    let (mechanism, visibility) = match regime.band {
        Band::SubOne => (
            Mechanism::BoundaryConditioningArbitrage,
            Some(ForwardModeVisibility::IntegrableForwardMode),
        ),
        Band::OneToTwo => (
            Mechanism::BoundaryConditioningArbitrage,
            Some(ForwardModeVisibility::GeneralizedBoundaryStateOnly),
        ),
        Band::BlackScholes => (Mechanism::BlackScholesBaseline, None),
        Band::SuperTwo => (
            Mechanism::StrictLocalMartingaleBubble,
            Some(ForwardModeVisibility::NoPositiveBoundaryState),
        ),
    };
    Ok(RegimeReport {
        band: regime.band,
        attainable_zero: g < 2.0,
        mechanism,
        forward_mode_visibility: visibility,
        delta: d.delta().ok(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sl_core::apply_generator;

    fn model(mu: f64, sigma: f64, gamma: f64, r: f64) -> ModelParams {
        ModelParams::new(mu, sigma, gamma, r, 1.0).unwrap()
    }

    #[test]
    fn harmonic_closed_form_at_gamma_one() {
        // gamma=1, nu=-1 (mu=0.5, sigma=1): h(x) = 1 - e^{-x}
        let m = model(0.5, 1.0, 1.0, 0.0);
        let h = HarmonicUp::new(&m).unwrap();
        assert_eq!(h.h(0.0).unwrap(), 0.0);
        for &x in &[0.1f64, 1.0, 3.0, 20.0] {
            let expect = 1.0 - (-x).exp();
            let got = h.h(x).unwrap();
            assert!(((got - expect) / expect).abs() < 1e-13, "h({x}) = {got} vs {expect}");
        }
        assert!((h.h_infinity() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn harmonic_derivative_consistent_with_value() {
        // finite-difference oracle for h' against the incomplete-gamma h
        let m = model(1.0, 1.0, 1.5, 0.0);
        let h = HarmonicUp::new(&m).unwrap();
        // restrict to the region where h has not saturated; beyond it the
        // centered difference is pure cancellation noise
        for &x in &[0.05, 0.4, 1.0, 2.5] {
            let eps = 1e-6 * (1.0 + x);
            let fd = (h.h(x + eps).unwrap() - h.h(x - eps).unwrap()) / (2.0 * eps);
            let an = h.h_prime(x);
            assert!(((fd - an) / an).abs() < 1e-7, "x={x}: fd {fd} vs {an}");
        }
    }

    #[test]
    fn harmonic_annihilated_by_generator() {
        for &g in &[0.5, 1.0, 1.5] {
            let m = model(1.0, 1.0, g, 0.0);
            let h = HarmonicUp::new(&m).unwrap();
            for k in 0..30 {
                let x = 1e-3 * (50.0f64 / 1e-3).powf(k as f64 / 29.0);
                let bundle = ValueDerivs::new(h.h(x).unwrap(), h.h_prime(x), h.h_second(x));
                let r = apply_generator(&m, x, bundle);
                let scale = 1.0 + x.abs() * h.h_prime(x).abs();
                assert!(r.abs() <= 1e-8 * scale, "gamma={g} x={x}: residual {r}");
            }
        }
    }

    #[test]
    fn harmonic_monotone_increasing() {
        let m = model(1.0, 1.0, 1.5, 0.0);
        let h = HarmonicUp::new(&m).unwrap();
        let mut prev = 0.0;
        for k in 1..100 {
            let x = 0.01 * k as f64;
            let v = h.h(x).unwrap();
            assert!(v > prev, "h not increasing at {x}");
            prev = v;
        }
    }

    #[test]
    fn doob_drift_closed_form_and_positivity() {
        // gamma=1, nu=-1: addon = sigma² x e^{-x}/(1-e^{-x}) -> sigma² at 0
        let m = model(0.5, 1.0, 1.0, 0.0);
        for &x in &[0.3f64, 1.0, 5.0] {
            let got = doob_drift(&m, x).unwrap();
            let expect = x * (-x).exp() / (1.0 - (-x).exp());
            assert!(((got - expect) / expect).abs() < 1e-12, "x={x}");
            assert!(got > 0.0);
        }
        let near_zero = doob_drift(&m, 1e-8f64).unwrap();
        assert!((near_zero - 1.0).abs() < 1e-7, "limit at origin {near_zero}");
    }

    #[test]
    fn doob_drift_small_x_power_law() {
        // addon ~ sigma² x^{gamma-1} as x -> 0
        let m = model(1.0, 1.0, 1.5, 0.0);
        let mut prev_gap = f64::INFINITY;
        let mut last_ratio = 0.0;
        for k in 10..31 {
            let x = 2f64.powi(-k);
            let ratio = doob_drift(&m, x).unwrap() / (m.sigma * m.sigma * x.powf(m.gamma - 1.0));
            let gap = (ratio - 1.0).abs();
            assert!(gap < prev_gap * 1.01, "ratio not converging at k={k}: {gap}");
            prev_gap = gap;
            last_ratio = ratio;
        }
        assert!((last_ratio - 1.0).abs() < 1e-3, "ratio {last_ratio}");
    }

    #[test]
    fn conditioned_generator_dual_path() {
        let m = model(1.0, 1.0, 1.5, 0.0);
        let h = HarmonicUp::new(&m).unwrap();
        // constants are harmonic for G↑
        let r = h.conditioned_generator_apply(1.3, ValueDerivs::new(1.0, 0.0, 0.0)).unwrap();
        assert!(r.abs() < 1e-14);
        // f(x) = x and f = h agree with h⁻¹ G(h f) pointwise
        for &x in &[0.2, 1.0, 3.0, 9.0] {
            let f = ValueDerivs::new(x, 1.0, 0.0);
            let direct = h.conditioned_generator_apply(x, f).unwrap();
            let dual = h.conditioned_generator_dual(x, f).unwrap();
            let scale = direct.abs().max(1.0);
            assert!((direct - dual).abs() < 1e-8 * scale, "x={x}: {direct} vs {dual}");
            let fh = ValueDerivs::new(h.h(x).unwrap(), h.h_prime(x), h.h_second(x));
            let direct = h.conditioned_generator_apply(x, fh).unwrap();
            let dual = h.conditioned_generator_dual(x, fh).unwrap();
            let scale = direct.abs().max(1.0);
            assert!((direct - dual).abs() < 1e-8 * scale, "f=h at x={x}");
        }
    }

    #[test]
    fn wrong_regime_rejected() {
        assert!(matches!(
            HarmonicUp::new(&model(1.0, 1.0, 2.5, 0.0)),
            Err(ArbitrageError::WrongRegime(_))
        ));
        assert!(matches!(
            HarmonicUp::new(&model(1.0, 1.0, 2.0, 0.0)),
            Err(ArbitrageError::WrongRegime(_))
        ));
    }

    #[test]
    fn risk_premium_and_phi() {
        // r = mu: lambda = 0 and phi = 1
        let m = model(0.7, 1.1, 1.3, 0.7);
        assert_eq!(risk_premium(&m, 2.0), 0.0);
        assert_eq!(candidate_phi(&m, 2.0), 1.0);
        // gamma=1, mu=0.5, sigma=1, r=0: lambda = 0.5 sqrt(x), phi = e^{-x/2}
        let m = model(0.5, 1.0, 1.0, 0.0);
        assert!((risk_premium(&m, 4.0) - 1.0).abs() < 1e-15);
        assert!((candidate_phi(&m, 3.0) - (-1.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn phi_log_derivative_identity() {
        // d/dx ln phi = -lambda(x)/sigma(x) by centered differences
        for &(g, r) in &[(0.5, 0.1), (1.5, 0.0), (2.0, 0.3), (3.0, 0.0)] {
            let m = model(0.8, 1.2, g, r);
            for &x in &[0.4, 1.0, 2.7, 8.0] {
                let eps = 1e-6 * x;
                let fd = ((candidate_phi(&m, x + eps)).ln() - (candidate_phi(&m, x - eps)).ln())
                    / (2.0 * eps);
                let sigma_x = m.sigma * x.powf(0.5 * g);
                let expect = -risk_premium(&m, x) / sigma_x;
                assert!(
                    (fd - expect).abs() < 1e-9 * (1.0 + expect.abs()),
                    "gamma={g} x={x}: {fd} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn regime_reports() {
        let r = arbitrage_report(&model(1.0, 1.0, 0.5, 0.0)).unwrap();
        assert!(r.attainable_zero);
        assert_eq!(r.mechanism, Mechanism::BoundaryConditioningArbitrage);
        assert_eq!(r.forward_mode_visibility, Some(ForwardModeVisibility::IntegrableForwardMode));
        assert!((r.delta.unwrap() - 2.0 / 3.0).abs() < 1e-15);

        let r = arbitrage_report(&model(1.0, 1.0, 1.5, 0.0)).unwrap();
        assert!(r.attainable_zero);
        assert_eq!(
            r.forward_mode_visibility,
            Some(ForwardModeVisibility::GeneralizedBoundaryStateOnly)
        );
        assert_eq!(r.delta.unwrap(), -2.0);

        let r = arbitrage_report(&model(1.0, 1.0, 3.0, 0.0)).unwrap();
        assert!(!r.attainable_zero);
        assert_eq!(r.mechanism, Mechanism::StrictLocalMartingaleBubble);
        assert_eq!(r.forward_mode_visibility, Some(ForwardModeVisibility::NoPositiveBoundaryState));
        assert_eq!(r.delta.unwrap(), 4.0);

        let r = arbitrage_report(&model(1.0, 1.0, 2.0, 0.0)).unwrap();
        assert_eq!(r.mechanism, Mechanism::BlackScholesBaseline);
        assert_eq!(r.forward_mode_visibility, None);
        assert_eq!(r.delta, None);
    }
}
