//! Shared test oracles, independent of the library's implementation paths:
//! double-double arithmetic, brute-force special-function references, a
//! Crank–Nicolson solver for absorption probabilities, and finite-difference
//! stencils.

#![allow(dead_code)]

use cev_spectral::params::ModelParams;

// ---------------------------------------------------------------------------
// double-double arithmetic (~32 significant digits), enough to make the
// brute-force oracles meaningful at points with heavy cancellation
// ---------------------------------------------------------------------------

/// Unevaluated sum hi + lo with |lo| <= ulp(hi)/2.
#[derive(Debug, Clone, Copy)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl Dd {
    pub fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn add(self, other: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, other.hi);
        let e = e + self.lo + other.lo;
        let (hi, lo) = quick_two_sum(s, e);
        Dd { hi, lo }
    }

    pub fn add_f64(self, other: f64) -> Dd {
        self.add(Dd::from(other))
    }

    pub fn mul(self, other: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, other.hi);
        let e = e + self.hi * other.lo + self.lo * other.hi;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    pub fn mul_f64(self, other: f64) -> Dd {
        self.mul(Dd::from(other))
    }

    pub fn div_f64(self, other: f64) -> Dd {
        let q1 = self.hi / other;
        let (p, e) = two_prod(q1, other);
        let r = (self.hi - p - e + self.lo) / other;
        let (hi, lo) = quick_two_sum(q1, r);
        Dd { hi, lo }
    }

    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

// ---------------------------------------------------------------------------
// brute-force special-function references
// ---------------------------------------------------------------------------

/// L_n^a(y) by the explicit binomial sum
/// Σ_k (−1)^k binom(n+a, n−k) y^k / k!, accumulated in double-double so the
/// oscillatory-region cancellation does not eat the reference.
pub fn laguerre_oracle(n: usize, a: f64, y: f64) -> f64 {
    let mut total = Dd::from(0.0);
    for k in 0..=n {
        // binom(n+a, n-k) = prod_{j=1}^{n-k} (a+k+j)/j
        let mut coeff = Dd::from(1.0);
        for j in 1..=(n - k) {
            coeff = coeff.mul_f64(a + (k + j) as f64).div_f64(j as f64);
        }
        for j in 1..=k {
            coeff = coeff.div_f64(j as f64);
        }
        let mut term = coeff;
        for _ in 0..k {
            term = term.mul_f64(y);
        }
        if k % 2 == 1 {
            term = term.neg();
        }
        total = total.add(term);
    }
    total.to_f64()
}

/// ln(n!) accumulated in double-double.
pub fn ln_factorial_oracle(n: u64) -> f64 {
    let mut acc = Dd::from(0.0);
    for k in 2..=n {
        acc = acc.add_f64((k as f64).ln());
    }
    acc.to_f64()
}

/// ln Γ(n + 1/2) = ln( (2n)! √π / (4^n n!) ), accumulated in double-double.
pub fn ln_gamma_half_integer_oracle(n: u64) -> f64 {
    let mut acc = Dd::from(0.5 * std::f64::consts::PI.ln());
    for k in 2..=(2 * n) {
        acc = acc.add_f64((k as f64).ln());
    }
    for k in 2..=n {
        acc = acc.add_f64(-((k as f64).ln()));
    }
    acc.add_f64(-(n as f64) * 4f64.ln()).to_f64()
}

/// Five-point centered first derivative, h = 1e−5 (1 + |x|).
pub fn deriv5(f: &impl Fn(f64) -> f64, x: f64) -> f64 {
    let h = 1e-5 * (1.0 + x.abs());
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

/// Five-point centered second derivative.
pub fn deriv5_second(f: &impl Fn(f64) -> f64, x: f64) -> f64 {
    let h = 1e-4 * (1.0 + x.abs());
    (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h))
        / (12.0 * h * h)
}

/// Composite Simpson, independent of the library quadrature.
pub fn simpson_oracle(f: &impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = if n.is_multiple_of(2) { n + 1 } else { n };
    let h = (b - a) / (n - 1) as f64;
    let mut s = f(a) + f(b);
    for i in 1..n - 1 {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

// ---------------------------------------------------------------------------
// Crank–Nicolson oracle for P(zeta <= t): backward equation
// u_t = mu x u_x + 1/2 sigma² x^gamma u_xx on a log-stretched grid,
// absorbing (u = 1) at the inner edge, far-field zero at the outer edge
// ---------------------------------------------------------------------------

pub fn cn_absorption_probability(m: &ModelParams, t: f64, n_space: usize, n_time: usize) -> f64 {
    assert!(m.gamma < 2.0, "oracle defined for the attainable-boundary regime");
    let x_min: f64 = 1e-7 * m.x0;
    let x_max: f64 = m.x0 * (m.mu * t).exp() * 10.0;
    let xi_min = x_min.ln();
    let xi_max = x_max.ln();
    let n = n_space;
    let h = (xi_max - xi_min) / (n - 1) as f64;
    let s2 = m.sigma * m.sigma;
    // interior operator coefficients in xi = ln x:
    // u_t = (mu - d(xi)) u_xi + d(xi) u_xixi, d = 1/2 sigma² e^{(gamma-2) xi}
    let diff = |xi: f64| 0.5 * s2 * ((m.gamma - 2.0) * xi).exp();
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for i in 1..n - 1 {
        let xi = xi_min + i as f64 * h;
        let d = diff(xi);
        let adv = m.mu - d;
        lower[i] = d / (h * h) - adv / (2.0 * h);
        diag[i] = -2.0 * d / (h * h);
        upper[i] = d / (h * h) + adv / (2.0 * h);
    }
    let mut u = vec![0.0; n];
    u[0] = 1.0; // absorbing boundary held at one
    let dt = t / n_time as f64;
    let mut work_a = vec![0.0; n];
    let mut work_b = vec![0.0; n];
    let mut work_c = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    // four Rannacher half-steps of implicit Euler damp the corner
    // discontinuity before Crank-Nicolson takes over
    let mut step = |u: &mut Vec<f64>, theta: f64, dt_step: f64| {
        for i in 1..n - 1 {
            work_a[i] = -theta * dt_step * lower[i];
            work_b[i] = 1.0 - theta * dt_step * diag[i];
            work_c[i] = -theta * dt_step * upper[i];
            let explicit = (1.0 - theta) * dt_step;
            rhs[i] = u[i]
                + explicit * (lower[i] * u[i - 1] + diag[i] * u[i] + upper[i] * u[i + 1]);
        }
        work_b[0] = 1.0;
        work_c[0] = 0.0;
        rhs[0] = 1.0;
        work_a[n - 1] = 0.0;
        work_b[n - 1] = 1.0;
        rhs[n - 1] = 0.0;
        // Thomas solve
        for i in 1..n {
            let w = work_a[i] / work_b[i - 1];
            work_b[i] -= w * work_c[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        u[n - 1] = rhs[n - 1] / work_b[n - 1];
        for i in (0..n - 1).rev() {
            u[i] = (rhs[i] - work_c[i] * u[i + 1]) / work_b[i];
        }
    };
    let rannacher = 4;
    for _ in 0..2 * rannacher {
        step(&mut u, 1.0, 0.5 * dt);
    }
    for _ in rannacher..n_time {
        step(&mut u, 0.5, dt);
    }
    // interpolate at xi0 = ln x0
    let xi0 = m.x0.ln();
    let pos = (xi0 - xi_min) / h;
    let i = (pos.floor() as usize).min(n - 2);
    let frac = pos - i as f64;
    u[i] * (1.0 - frac) + u[i + 1] * frac
}

/// Richardson-verified wrapper: doubles the resolution and requires
/// agreement, returning the finer value.
pub fn cn_absorption_verified(m: &ModelParams, t: f64) -> f64 {
    let coarse = cn_absorption_probability(m, t, 1200, 1200);
    let fine = cn_absorption_probability(m, t, 2400, 2400);
    assert!(
        (coarse - fine).abs() < 2e-4,
        "CN oracle not grid-converged: {coarse} vs {fine}"
    );
    fine
}

/// Exact absorption probability for gamma = 1 (square-root diffusion with
/// zero reversion level): P(zeta <= t) = exp(−2μx / (σ²(1 − e^{−μt}))).
pub fn exact_absorption_gamma_one(m: &ModelParams, t: f64) -> f64 {
    assert_eq!(m.gamma, 1.0);
    (-2.0 * m.mu * m.x0 / (m.sigma * m.sigma * (1.0 - (-m.mu * t).exp()))).exp()
}
