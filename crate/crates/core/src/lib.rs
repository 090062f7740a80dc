//! Spectral toolkit for the constant-elasticity-of-variance (CEV) diffusion
//!
//! ```text
//! dX_t = μ X_t dt + σ X_t^{γ/2} dW_t,   X_0 = x0 > 0,
//! ```
//!
//! built around the Sturm–Liouville structure of the associated Fokker–Planck
//! operator. The crate computes, for every elasticity regime:
//!
//! - derived model constants and the endpoint classification
//!   (limit point / limit circle) at 0 and ∞ ([`params`]),
//! - the special-function kernel: log-gamma, generalized Laguerre
//!   polynomials, Kummer Φ and Tricomi Ψ with derivatives, and the Weyl
//!   function `m_a` ([`specfun`]),
//! - weights, normal forms, modified Wronskians and weighted inner products
//!   ([`sl_core`]),
//! - spectra and eigenfunctions of the generalized Laguerre operator for all
//!   self-adjoint extensions, including boundary operators and the indefinite
//!   inner product for `a < -1` ([`laguerre_spec`]),
//! - the pullback of the Laguerre analysis to the CEV operator: coordinate
//!   and density transforms, spectra, eigenfunctions, boundary residuals and
//!   integrability classification ([`cev_spec`]),
//! - positive harmonic functions, the Doob-conditioned generator and the
//!   per-regime arbitrage classification ([`arbitrage`]),
//! - a reproducible Monte Carlo engine with absorbing boundaries that
//!   cross-checks the martingale defect, absorption probabilities and the
//!   h-transform law identity ([`mc_sim`]).
//!
//! Monte Carlo path generation and spectrum scans are data-parallel via
//! `rayon` when the default `parallel` feature is enabled; every parallel
//! entry point has a sequential twin that produces bit-identical output
//! (counter-based random numbers, fixed-shape pairwise reductions).

// `!(x > 0)`-style comparisons in validators are deliberate: they reject
// NaN along with the out-of-range sign. The Lanczos and quantile constants
// keep their full published digits.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod arbitrage;
pub mod cev_spec;
pub mod laguerre_spec;
pub mod mc_sim;
pub mod params;
pub mod sl_core;
pub mod specfun;

mod parallel;

pub use params::{
    classify_regime, derive_params, Band, DerivedParams, EndpointClass, ModelParams, ParamsError,
    Regime,
};
