//! Special-function kernel: log-gamma, generalized Laguerre polynomials,
//! the confluent hypergeometric pair Φ (Kummer) / Ψ (Tricomi), and the Weyl
//! function `m_a`.
//!
//! Everything is double precision. Gamma-ratio arithmetic is done in log
//! space with explicit sign tracking because arguments like `Λ − a` and `−a`
//! routinely land where Γ alternates sign.
//!
//! # References
//! - DLMF 5 (gamma), 13 (confluent hypergeometric), 18 (orthogonal polynomials)
//! - Abramowitz & Stegun 6.1, 13.1, 22

use thiserror::Error;

mod gamma;
mod kummer;
mod laguerre;

pub use gamma::{digamma, log_gamma, norm_quantile, reg_lower_gamma, LogGamma};
pub use kummer::{
    kummer_phi, kummer_phi_deriv, kummer_phi_nth_deriv, tricomi_psi, tricomi_psi_deriv,
    tricomi_psi_nth_deriv,
};
pub use laguerre::{laguerre, laguerre_coeffs, laguerre_deriv, laguerre_nth_deriv};

/// Errors of the special-function kernel.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecFunError {
    /// Γ evaluated at 0, −1, −2, …
    #[error("gamma pole at non-positive integer argument {0}")]
    PoleAtNonPositiveInteger(f64),
    /// A parameter of Φ/Ψ/m_a sits on a gamma pole; the payload names it.
    #[error("parameter pole: {what} = {value}")]
    ParameterPole { what: &'static str, value: f64 },
    /// Ψ(Λ, 1+a, 0) requested where the function diverges (a ≥ 0).
    #[error("tricomi psi is singular at y = 0 for a >= 0")]
    ArgumentZero,
    /// A series or quadrature inside the kernel failed to converge.
    #[error("no convergence in {0}")]
    NoConvergence(&'static str),
}

/// Parameter bundle for the Kummer equation `y p'' + (b − y) p' = Λ p`
/// with `b = 1 + a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KummerParams {
    /// Spectral parameter Λ.
    pub lambda: f64,
    /// Second parameter b = 1 + a; must not be a non-positive integer for Φ.
    pub b: f64,
    /// Argument y ≥ 0.
    pub y: f64,
}

impl KummerParams {
    pub fn new(lambda: f64, b: f64, y: f64) -> Self {
        KummerParams { lambda, b, y }
    }
}

/// Weyl function of the generalized Laguerre operator,
///
/// ```text
/// m_a(Λ) = − Γ(Λ) Γ(−a) / (Γ(Λ−a) Γ(1+a)),
/// ```
///
/// whose level sets `m_a(Λ) = θ` are the eigenvalues of the θ-extension.
/// Evaluated in log space with sign tracking.
pub fn weyl_m(a: f64, lambda: f64) -> Result<f64, SpecFunError> {
    let num1 = log_gamma(lambda).map_err(|_| SpecFunError::ParameterPole {
        what: "Lambda",
        value: lambda,
    })?;
    let num2 = log_gamma(-a).map_err(|_| SpecFunError::ParameterPole { what: "-a", value: -a })?;
    let den1 = log_gamma(lambda - a).map_err(|_| SpecFunError::ParameterPole {
        what: "Lambda - a",
        value: lambda - a,
    })?;
    let den2 =
        log_gamma(1.0 + a).map_err(|_| SpecFunError::ParameterPole { what: "1 + a", value: 1.0 + a })?;
    let sign = -(num1.sign * num2.sign * den1.sign * den2.sign) as f64;
    Ok(sign * (num1.ln_abs + num2.ln_abs - den1.ln_abs - den2.ln_abs).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weyl_m_half_at_two() {
        // m_{1/2}(2) = -Γ(2)Γ(-1/2)/(Γ(3/2)Γ(3/2)) = 8/sqrt(pi)
        let m = weyl_m(0.5, 2.0).unwrap();
        let expect = 8.0 / std::f64::consts::PI.sqrt();
        assert!(((m - expect) / expect).abs() < 1e-13, "m = {m}, expect {expect}");
    }

    #[test]
    fn weyl_m_at_lambda_one() {
        // m_a(1) = -Γ(-a)/(Γ(1-a)Γ(1+a)); at a = -1/2 this is -1/Γ(3/2)
        let m = weyl_m(-0.5, 1.0).unwrap();
        let expect = -1.0 / (0.5 * std::f64::consts::PI.sqrt());
        assert!(((m - expect) / expect).abs() < 1e-13);
    }

    #[test]
    fn weyl_m_pole_and_zero_structure() {
        // Exact gamma poles are reported with the offending argument.
        assert!(matches!(
            weyl_m(0.5, 0.0),
            Err(SpecFunError::ParameterPole { what: "Lambda", .. })
        ));
        assert!(matches!(
            weyl_m(0.5, 0.5),
            Err(SpecFunError::ParameterPole { what: "Lambda - a", .. })
        ));
        // Λ = -n are poles of m_a (the θ=∞ spectrum), Λ = a - k are its
        // zeros (denominator gamma pole, 1/Γ(Λ-a) -> 0).
        let a = 0.5;
        assert!(weyl_m(a, -1.0 + 1e-8).unwrap().abs() > 1e6);
        assert!(weyl_m(a, a - 1.0 + 1e-8).unwrap().abs() < 1e-6);
    }

}
