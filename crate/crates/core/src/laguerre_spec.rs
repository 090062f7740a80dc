//! Spectral theory of the generalized Laguerre operator
//! `𝐋_a[p] = y p'' + (a + 1 − y) p'` on (0, ∞) with weight `y^a e^{−y}`.
//!
//! Self-adjoint realizations are labelled by `θ ∈ ℝ ∪ {∞}` through the
//! boundary condition `B₁f − θ B₀f = 0` at the origin. For θ = ∞ the
//! spectrum is `{−n}` with Laguerre-polynomial eigenfunctions for every
//! admissible `a`; for finite θ (possible only when `a < 1`) the eigenvalues
//! are the roots of `m_a(Λ) = θ` with the Weyl function
//! `m_a(Λ) = −Γ(Λ)Γ(−a)/(Γ(Λ−a)Γ(1+a))`, whose poles sit on `Λ = −k`.
//!
//! For `a ∈ (−n−1, −n)` the polynomial completion carries the indefinite
//! inner product
//!
//! ```text
//! (f,g)_a = ∫₀^∞ y^a e^{−y} f g dy  −  Σ_{j<n} f⁽ʲ⁾(0) g⁽ʲ⁾(0) / (j! Γ(a+j+1)),
//! ```
//!
//! with the integral understood through subtracted-Taylor regularization
//! near the origin. The correction length n is tied to the interval
//! containing a; whether this normalization makes the Laguerre system
//! orthogonal is measured, not assumed — see `gram_offdiagonal_ratio`.

use crate::params::ParamsError;
use crate::sl_core::{AdaptiveLogGrid, SlError, ValueDerivs};
use crate::specfun::{
    digamma, kummer_phi_nth_deriv, laguerre_coeffs, laguerre_nth_deriv, log_gamma,
    tricomi_psi_nth_deriv, weyl_m, KummerParams, SpecFunError,
};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LaguerreError {
    /// Finite θ requested where the realization is unique (a ≥ 1).
    #[error("finite theta extension not applicable at a = {a} (unique self-adjoint realization)")]
    ExtensionNotApplicable { a: f64 },
    /// Negative-integer a: the Kummer solution formula and m_a break down.
    #[error("a = {0} is a negative integer")]
    IntegerA(f64),
    /// Non-positive integer Λ: Φ and Ψ degenerate to the same polynomial.
    #[error("Lambda = {0} is a non-positive integer; the Kummer combination degenerates there")]
    InvalidLambda(f64),
    #[error("indefinite inner product is defined for polynomial inputs only")]
    NonPolynomialInput,
    /// a outside the definition table of a boundary operator.
    #[error("{what} is not defined for a = {a}")]
    CaseUncovered { what: &'static str, a: f64 },
    #[error("limit extrapolation did not converge: {0}")]
    NoConvergence(&'static str),
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
    #[error(transparent)]
    Quadrature(#[from] SlError),
    #[error(transparent)]
    Params(#[from] ParamsError),
}

/// Self-adjoint extension parameter θ ∈ ℝ ∪ {∞}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extension {
    Theta(f64),
    Infinity,
}

/// How an eigenvalue was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum SpectralSource {
    ExplicitPolynomialBranch,
    WeylRoot,
}

/// One eigenvalue of 𝐋_a.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPoint {
    /// Eigenvalue Λ.
    pub value: f64,
    /// Polynomial index when `value = −n` exactly.
    pub index: Option<usize>,
    pub source: SpectralSource,
}

/// Eigenvalue request: the first `Count` polynomial levels / root gaps, or
/// every eigenvalue inside a Λ-range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectrumWindow {
    Count(usize),
    Range { lo: f64, hi: f64 },
}

/// Spectrum output; `poles_in_window` lists poles of m_a inside a requested
/// range (metadata, not a failure).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    pub points: Vec<SpectralPoint>,
    pub poles_in_window: Vec<f64>,
}

/// Symbolic eigenfunction recipe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EigenfunctionSpec {
    LaguerrePoly { n: usize, a: f64 },
    KummerCombination { lambda: f64, c1: f64, c2: f64, a: f64 },
}

/// Spectrum of 𝐋_a for the chosen extension.
///
/// θ = ∞ yields `{−n}`; finite θ yields the simple roots of `m_a(Λ) − θ`,
/// each polished to `|m_a(Λ) − θ| ≤ 1e−10 (1 + |θ|)`, with the root count
/// cross-checked against sign changes on a refinement grid.
pub fn laguerre_spectrum(
    a: f64,
    ext: Extension,
    window: SpectrumWindow,
) -> Result<SpectrumResult, LaguerreError> {
    match ext {
        Extension::Infinity => {
            let points = match window {
                SpectrumWindow::Count(c) => (0..c).collect::<Vec<_>>(),
                SpectrumWindow::Range { lo, hi } => {
                    let n_max = (-lo).floor().max(0.0) as usize;
                    (0..=n_max).filter(|&n| -(n as f64) >= lo && -(n as f64) <= hi).collect()
                }
            }
            .into_iter()
            .map(|n| SpectralPoint {
                // 0.0 rather than -0.0 for n = 0
                value: if n == 0 { 0.0 } else { -(n as f64) },
                index: Some(n),
                source: SpectralSource::ExplicitPolynomialBranch,
            })
            .collect();
            Ok(SpectrumResult { points, poles_in_window: Vec::new() })
        }
        Extension::Theta(theta) => {
            if a >= 1.0 {
                return Err(LaguerreError::ExtensionNotApplicable { a });
            }
            if a < 0.0 && a == a.round() {
                return Err(LaguerreError::IntegerA(a));
            }
            let (lo, hi) = match window {
                SpectrumWindow::Count(c) => {
                    // the top gap may hold a root arbitrarily far right:
                    // extend until m_a - theta changes sign or a cap.
                    let mut hi = 2.0f64;
                    while let Ok(m) = weyl_m(a, hi) {
                        if (m - theta) * top_gap_left_sign(a, theta) < 0.0 || hi > 1e6 {
                            break;
                        }
                        hi *= 2.0;
                    }
                    (-(c as f64) + 1e-9, hi)
                }
                SpectrumWindow::Range { lo, hi } => (lo, hi),
            };
            let mut poles: Vec<f64> = Vec::new();
            let mut k = 0.0f64;
            while -k >= lo {
                if -k <= hi {
                    poles.push(-k);
                }
                k += 1.0;
            }
            poles.reverse();
            // pole-free segments covering [lo, hi]; scanned independently
            // (in parallel when enabled) and merged in deterministic order
            let mut cuts = vec![lo];
            cuts.extend(poles.iter().copied().filter(|&p| p > lo && p < hi));
            cuts.push(hi);
            let segments: Vec<(f64, f64)> = cuts.windows(2).map(|s| (s[0], s[1])).collect();
            let scanned = crate::parallel::map_indexed(segments.len(), |i| {
                roots_in_segment(a, theta, segments[i].0, segments[i].1)
            });
            let mut points = Vec::new();
            for seg in scanned {
                points.extend(seg?);
            }
            points.sort_by(|p, q| p.value.partial_cmp(&q.value).unwrap());
            Ok(SpectrumResult { points, poles_in_window: poles })
        }
    }
}

/// Sign of m_a − θ at the left edge of the top gap (Λ → 0⁺), used to decide
/// whether the top root bracket has been extended far enough.
fn top_gap_left_sign(a: f64, theta: f64) -> f64 {
    let probe = weyl_m(a, 1e-6).map(|m| m - theta).unwrap_or(-1.0);
    probe.signum()
}

/// Scans (lo, hi) on an endpoint-clustered grid, brackets sign changes of
/// m_a − θ, bisects and Newton-polishes each root.
fn roots_in_segment(
    a: f64,
    theta: f64,
    lo: f64,
    hi: f64,
) -> Result<Vec<SpectralPoint>, LaguerreError> {
    if !(hi > lo) {
        return Ok(Vec::new());
    }
    const GRID: usize = 600;
    let eps = (hi - lo) * 1e-9;
    let (glo, ghi) = (lo + eps, hi - eps);
    // tanh-stretched grid clusters points at both endpoints, where m_a blows
    // up near its poles.
    let node = |i: usize| -> f64 {
        let s = -8.0 + 16.0 * i as f64 / (GRID - 1) as f64;
        glo + (ghi - glo) * 0.5 * (1.0 + s.tanh())
    };
    let f = |l: f64| weyl_m(a, l).map(|m| m - theta);
    let mut out = Vec::new();
    let mut prev_x = node(0);
    let mut prev_f = match f(prev_x) {
        Ok(v) => v,
        Err(_) => return Ok(out),
    };
    for i in 1..GRID {
        let x = node(i);
        let fx = match f(x) {
            Ok(v) => v,
            Err(_) => continue,
        };
        if prev_f == 0.0 {
            out.push(polished_root(a, theta, prev_x, x)?);
        } else if prev_f * fx < 0.0 {
            out.push(polished_root_bracketed(a, theta, prev_x, x, prev_f)?);
        }
        prev_x = x;
        prev_f = fx;
    }
    Ok(out)
}

fn polished_root_bracketed(
    a: f64,
    theta: f64,
    mut lo: f64,
    mut hi: f64,
    flo: f64,
) -> Result<SpectralPoint, LaguerreError> {
    let f = |l: f64| weyl_m(a, l).map(|m| m - theta);
    let mut flo = flo;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if flo * fm < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
        if hi - lo < 1e-13 * (1.0 + hi.abs()) {
            break;
        }
    }
    polished_root(a, theta, lo, hi)
}

fn polished_root(a: f64, theta: f64, lo: f64, hi: f64) -> Result<SpectralPoint, LaguerreError> {
    let mut root = 0.5 * (lo + hi);
    // one Newton step: m' = m (ψ(Λ) − ψ(Λ−a))
    if let (Ok(m), Ok(d1), Ok(d2)) = (weyl_m(a, root), digamma(root), digamma(root - a)) {
        let deriv = m * (d1 - d2);
        if deriv != 0.0 {
            let step = (m - theta) / deriv;
            if step.is_finite() && root - step > lo - (hi - lo) && root - step < hi + (hi - lo) {
                root -= step;
            }
        }
    }
    let residual = (weyl_m(a, root)? - theta).abs();
    if residual > 1e-10 * (1.0 + theta.abs()) {
        return Err(LaguerreError::NoConvergence("weyl root polish"));
    }
    Ok(SpectralPoint { value: root, index: None, source: SpectralSource::WeylRoot })
}

/// Function germ near the origin: value and derivatives on a decreasing
/// grid, as needed by the boundary operators.
pub trait SmoothTail {
    /// k-th derivative at y (k = 0 is the value).
    fn derivative(&self, y: f64, order: usize) -> Result<f64, SpecFunError>;
}

/// Laguerre polynomial germ L_n^a.
pub struct LaguerreTail {
    pub n: usize,
    pub a: f64,
}

impl SmoothTail for LaguerreTail {
    fn derivative(&self, y: f64, order: usize) -> Result<f64, SpecFunError> {
        Ok(laguerre_nth_deriv(self.n, self.a, y, order))
    }
}

/// Tricomi germ Ψ(Λ, 1+a, ·).
pub struct PsiTail {
    pub lambda: f64,
    pub a: f64,
}

impl SmoothTail for PsiTail {
    fn derivative(&self, y: f64, order: usize) -> Result<f64, SpecFunError> {
        tricomi_psi_nth_deriv(KummerParams::new(self.lambda, 1.0 + self.a, y), order)
    }
}

/// Kummer germ Φ(Λ, 1+a, ·).
pub struct PhiTail {
    pub lambda: f64,
    pub a: f64,
}

impl SmoothTail for PhiTail {
    fn derivative(&self, y: f64, order: usize) -> Result<f64, SpecFunError> {
        kummer_phi_nth_deriv(KummerParams::new(self.lambda, 1.0 + self.a, y), order)
    }
}

/// Closure adapter: `f(y, order)`.
pub struct FnTail<F: Fn(f64, usize) -> f64>(pub F);

impl<F: Fn(f64, usize) -> f64> SmoothTail for FnTail<F> {
    fn derivative(&self, y: f64, order: usize) -> Result<f64, SpecFunError> {
        Ok(self.0(y, order))
    }
}

/// A limit estimated by extrapolation along y_k = y₀ 2^{−k}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitEstimate {
    pub value: f64,
    pub error_estimate: f64,
}

const LIMIT_GRID_START: f64 = 0.25;
const LIMIT_GRID_LEN: usize = 21;
const LIMIT_TOL: f64 = 1e-8;

/// Shanks transformation of a sequence; kills one geometric error mode per
/// application, whatever its (unknown) exponent.
fn shanks(s: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(s.len().saturating_sub(2));
    for w in s.windows(3) {
        let denom = w[2] + w[0] - 2.0 * w[1];
        if denom.abs() < 1e-300 + 1e-14 * (w[2].abs() + w[0].abs()) {
            out.push(w[2]);
        } else {
            out.push((w[2] * w[0] - w[1] * w[1]) / denom);
        }
    }
    out
}

fn extrapolate_limit(seq: &[f64]) -> Result<LimitEstimate, LaguerreError> {
    let r1 = shanks(seq);
    let r2 = shanks(&r1);
    for round in [&r2, &r1, &seq.to_vec()] {
        if round.len() < 3 {
            continue;
        }
        for i in (2..round.len()).rev() {
            let d1 = (round[i] - round[i - 1]).abs();
            let d2 = (round[i - 1] - round[i - 2]).abs();
            let scale = 1.0 + round[i].abs();
            if d1 <= LIMIT_TOL * scale && d2 <= 30.0 * LIMIT_TOL * scale {
                return Ok(LimitEstimate { value: round[i], error_estimate: d1.max(1e-16 * scale) });
            }
        }
    }
    Err(LaguerreError::NoConvergence("boundary limit extrapolation"))
}

fn limit_of(
    f: &dyn SmoothTail,
    expr: &dyn Fn(&dyn SmoothTail, f64) -> Result<f64, SpecFunError>,
) -> Result<LimitEstimate, LaguerreError> {
    let mut seq = Vec::with_capacity(LIMIT_GRID_LEN);
    let mut y = LIMIT_GRID_START;
    for _ in 0..LIMIT_GRID_LEN {
        seq.push(expr(f, y)?);
        y *= 0.5;
    }
    extrapolate_limit(&seq)
}

/// Boundary operator B₀:
/// `lim y^{a+1} f'(y)` for a ∈ (−1, 1), and
/// `lim (−1)^n Γ(a+1)/Γ(a+n+1) y^{a+n+1} f^{(n+1)}(y)` for a ∈ (−n−1, −n).
pub fn boundary_b0(a: f64, f: &dyn SmoothTail) -> Result<LimitEstimate, LaguerreError> {
    if a > -1.0 && a < 1.0 {
        return limit_of(f, &|f, y| Ok(y.powf(a + 1.0) * f.derivative(y, 1)?));
    }
    if a < -1.0 && a != a.round() {
        let n = (-a).floor() as usize; // a in (-n-1, -n), n >= 1
        let c = {
            let num = log_gamma(a + 1.0)?;
            let den = log_gamma(a + n as f64 + 1.0)?;
            let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
            sign * (num.sign * den.sign) as f64 * (num.ln_abs - den.ln_abs).exp()
        };
        let p = a + n as f64 + 1.0;
        return limit_of(f, &|f, y| Ok(c * y.powf(p) * f.derivative(y, n + 1)?));
    }
    Err(LaguerreError::CaseUncovered { what: "B0", a })
}

/// Boundary operator B₁:
/// `lim f(y) + (y/a) f'(y)` for a ∈ (0, 1) and `lim f(y)` for a < 0
/// (non-integer).
pub fn boundary_b1(a: f64, f: &dyn SmoothTail) -> Result<LimitEstimate, LaguerreError> {
    if a > 0.0 && a < 1.0 {
        return limit_of(f, &|f, y| Ok(f.derivative(y, 0)? + y / a * f.derivative(y, 1)?));
    }
    if a < 0.0 && a != a.round() {
        return limit_of(f, &|f, y| f.derivative(y, 0));
    }
    Err(LaguerreError::CaseUncovered { what: "B1", a })
}

/// Residual of the self-adjointness boundary condition:
/// `B₁f − θ B₀f` for finite θ, `B₀f` for θ = ∞. Eigenfunctions of the
/// chosen realization return ≈ 0.
pub fn self_adjoint_residual(
    a: f64,
    ext: Extension,
    f: &dyn SmoothTail,
) -> Result<LimitEstimate, LaguerreError> {
    match ext {
        Extension::Infinity => boundary_b0(a, f),
        Extension::Theta(theta) => {
            let b1 = boundary_b1(a, f)?;
            let b0 = boundary_b0(a, f)?;
            Ok(LimitEstimate {
                value: b1.value - theta * b0.value,
                error_estimate: b1.error_estimate + theta.abs() * b0.error_estimate,
            })
        }
    }
}

/// Indefinite inner product for a ∈ (−n−1, −n), polynomial inputs only.
///
/// The integral over [0, 1] is summed exactly as a coefficient series (the
/// subtracted-Taylor regularization makes the subtracted part a convergent
/// series and continues the Taylor part analytically); [1, ∞) is quadrature.
pub fn indefinite_inner(
    a: f64,
    f: &EigenfunctionSpec,
    g: &EigenfunctionSpec,
) -> Result<f64, LaguerreError> {
    if a >= 0.0 || a == a.round() {
        return Err(LaguerreError::IntegerA(a));
    }
    let (fc, gc) = match (f, g) {
        (
            EigenfunctionSpec::LaguerrePoly { n: nf, a: af },
            EigenfunctionSpec::LaguerrePoly { n: ng, a: ag },
        ) => (laguerre_coeffs(*nf, *af), laguerre_coeffs(*ng, *ag)),
        _ => return Err(LaguerreError::NonPolynomialInput),
    };
    let n_corr = (-a).floor() as usize;
    // h = f g, phi_j = coefficients of h(y) e^{-y}
    let mut h = vec![0.0; fc.len() + gc.len() - 1];
    for (i, &ci) in fc.iter().enumerate() {
        for (j, &cj) in gc.iter().enumerate() {
            h[i + j] += ci * cj;
        }
    }
    let j_max = h.len() + 80;
    let mut series = 0.0;
    for j in 0..j_max {
        let mut phi_j = 0.0;
        let mut sign_fact = 1.0; // (-1)^l / l!
        for l in 0..=j {
            if j - l < h.len() {
                phi_j += h[j - l] * sign_fact;
            }
            sign_fact *= -1.0 / (l as f64 + 1.0);
        }
        series += phi_j / (a + j as f64 + 1.0);
    }
    let grid = AdaptiveLogGrid::new(1e-12, 48);
    let poly = |y: f64, c: &[f64]| c.iter().rev().fold(0.0, |acc, &ck| acc * y + ck);
    let tail = grid
        .integrate(&|y| y.powf(a) * (-y).exp() * poly(y, &h), 1.0, 60.0 + 10.0 * h.len() as f64)?
        .value;
    let reg_integral = series + tail;
    // boundary correction Σ_{j<n} j! f_j g_j / Γ(a+j+1)
    let mut corr = 0.0;
    let mut jfact = 1.0;
    for j in 0..n_corr {
        if j > 0 {
            jfact *= j as f64;
        }
        let fj = fc.get(j).copied().unwrap_or(0.0);
        let gj = gc.get(j).copied().unwrap_or(0.0);
        let lg = log_gamma(a + j as f64 + 1.0)?;
        corr += jfact * fj * gj * lg.sign as f64 * (-lg.ln_abs).exp();
    }
    Ok(reg_integral - corr)
}

/// Largest off-diagonal Gram entry of {L_0^a, …, L_k^a} under the indefinite
/// inner product, relative to the geometric mean of the adjacent diagonal
/// magnitudes. Diagnostic for the normalization question documented on
/// [`indefinite_inner`].
pub fn gram_offdiagonal_ratio(a: f64, k: usize) -> Result<f64, LaguerreError> {
    let spec = |n: usize| EigenfunctionSpec::LaguerrePoly { n, a };
    let mut gram = vec![vec![0.0; k + 1]; k + 1];
    #[allow(clippy::needless_range_loop)]
    for i in 0..=k {
        for j in i..=k {
            let v = indefinite_inner(a, &spec(i), &spec(j))?;
            gram[i][j] = v;
            gram[j][i] = v;
        }
    }
    let mut worst = 0.0f64;
    for (i, row) in gram.iter().enumerate() {
        for (j, &entry) in row.iter().enumerate() {
            if i != j {
                let scale = (gram[i][i].abs() * gram[j][j].abs()).sqrt().max(1e-300);
                worst = worst.max(entry.abs() / scale);
            }
        }
    }
    Ok(worst)
}

/// Eigensolution of the Kummer equation `𝐋_a p = Λ p`:
/// `p(y) = C₁ Φ(Λ, 1+a, y) + C₂ Ψ(Λ, 1+a, y)`, with analytic derivatives
/// through the parameter-shift identities.
pub struct KummerSolution {
    pub spec: EigenfunctionSpec,
}

/// Builds the general Kummer eigensolution; requires a ∉ −ℕ and Λ ∉ −ℕ₀.
///
/// At non-positive integer Λ the pair degenerates (both Φ and Ψ collapse to
/// the same Laguerre polynomial), so that branch must be requested through
/// the polynomial machinery instead.
pub fn kummer_eigensolution(
    a: f64,
    lambda: f64,
    c1: f64,
    c2: f64,
) -> Result<KummerSolution, LaguerreError> {
    if a < 0.0 && a == a.round() {
        return Err(LaguerreError::IntegerA(a));
    }
    if lambda <= 0.0 && lambda == lambda.round() {
        return Err(LaguerreError::InvalidLambda(lambda));
    }
    Ok(KummerSolution { spec: EigenfunctionSpec::KummerCombination { lambda, c1, c2, a } })
}

impl KummerSolution {
    pub fn eval(&self, y: f64) -> Result<ValueDerivs, SpecFunError> {
        let EigenfunctionSpec::KummerCombination { lambda, c1, c2, a } = self.spec else {
            unreachable!("kummer solution holds a kummer spec");
        };
        let mut d = [0.0; 3];
        for (k, dk) in d.iter_mut().enumerate() {
            let mut v = 0.0;
            if c1 != 0.0 {
                v += c1 * kummer_phi_nth_deriv(KummerParams::new(lambda, 1.0 + a, y), k)?;
            }
            if c2 != 0.0 {
                v += c2 * tricomi_psi_nth_deriv(KummerParams::new(lambda, 1.0 + a, y), k)?;
            }
            *dk = v;
        }
        Ok(ValueDerivs::new(d[0], d[1], d[2]))
    }

    /// Residual `𝐋_a p − Λ p` at y, from the bundle's own derivatives.
    pub fn operator_residual(&self, y: f64) -> Result<f64, SpecFunError> {
        let EigenfunctionSpec::KummerCombination { lambda, a, .. } = self.spec else {
            unreachable!()
        };
        let p = self.eval(y)?;
        Ok(y * p.d2 + (a + 1.0 - y) * p.d1 - lambda * p.value)
    }
}

/// 𝐋_a applied to a value bundle.
pub fn apply_laguerre_operator(a: f64, y: f64, p: ValueDerivs) -> f64 {
    y * p.d2 + (a + 1.0 - y) * p.d1
}
