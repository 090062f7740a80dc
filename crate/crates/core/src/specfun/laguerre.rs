//! Generalized Laguerre polynomials L_n^a by the three-term recurrence,
//! with derivatives through the shift identity d/dy L_n^a = −L_{n−1}^{a+1}.

/// L_n^a(y) by the stable forward recurrence
/// `(k+1) L_{k+1} = (2k+1+a−y) L_k − (k+a) L_{k−1}`.
///
/// Total on its domain: any real `a`, any real `y`, n ≥ 0.
pub fn laguerre(n: usize, a: f64, y: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => 1.0 + a - y,
        _ => {
            let mut lm1 = 1.0;
            let mut l = 1.0 + a - y;
            for k in 1..n {
                let kf = k as f64;
                let next = ((2.0 * kf + 1.0 + a - y) * l - (kf + a) * lm1) / (kf + 1.0);
                lm1 = l;
                l = next;
            }
            l
        }
    }
}

/// d/dy L_n^a(y) = −L_{n−1}^{a+1}(y).
pub fn laguerre_deriv(n: usize, a: f64, y: f64) -> f64 {
    if n == 0 {
        0.0
    } else {
        -laguerre(n - 1, a + 1.0, y)
    }
}

/// k-th derivative, (−1)^k L_{n−k}^{a+k}(y); zero once k > n.
pub fn laguerre_nth_deriv(n: usize, a: f64, y: f64, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * laguerre(n - k, a + k as f64, y)
}

/// Monomial coefficients of L_n^a: coefficient of y^k is
/// `(−1)^k / k! * binom(n+a, n−k)`. Intended for small n (boundary Taylor
/// data of the indefinite inner product), where the products are exact
/// enough in f64.
pub fn laguerre_coeffs(n: usize, a: f64) -> Vec<f64> {
    // binom(n+a, n-k) = Γ(n+a+1) / (Γ(a+k+1) (n-k)!)
    // built by downward recurrence from binom(n+a, n) to avoid gamma calls:
    // c_k = (-1)^k/k! * b_k with b_n-term... do it directly with products.
    let mut coeffs = vec![0.0; n + 1];
    for (k, c) in coeffs.iter_mut().enumerate() {
        // binom(n+a, n-k) = prod_{j=1}^{n-k} (a+k+j) / j
        let mut b = 1.0;
        for j in 1..=(n - k) {
            b *= (a + (k + j) as f64) / j as f64;
        }
        let mut kfact = 1.0;
        for j in 1..=k {
            kfact *= j as f64;
        }
        *c = if k % 2 == 0 { b / kfact } else { -b / kfact };
    }
    coeffs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_zero_is_one() {
        for &a in &[-1.25, -0.5, 0.0, 0.5, 2.0] {
            for &y in &[0.0, 0.3, 7.0, 40.0] {
                assert_eq!(laguerre(0, a, y), 1.0);
            }
        }
    }

    #[test]
    fn degree_one_and_two_explicit() {
        // L_1^a(y) = 1 + a - y, so L_1^0(1) = 0
        assert_eq!(laguerre(1, 0.0, 1.0), 0.0);
        // L_2^a(y) = y²/2 - (a+2) y + (a+1)(a+2)/2, so L_2^0(1) = -1/2
        assert!((laguerre(2, 0.0, 1.0) + 0.5).abs() < 1e-15);
        for &a in &[-0.5, 0.5, 1.0] {
            for &y in &[0.2, 1.0, 3.5] {
                let explicit = 0.5 * y * y - (a + 2.0) * y + 0.5 * (a + 1.0) * (a + 2.0);
                assert!((laguerre(2, a, y) - explicit).abs() < 1e-13 * explicit.abs().max(1.0));
            }
        }
    }

    #[test]
    fn derivative_shift_identity_vs_finite_difference() {
        let h = 1e-6;
        for &(n, a, y) in &[(3, 0.5, 1.2), (5, -0.5, 4.0), (8, 2.0, 11.0)] {
            let fd = (laguerre(n, a, y + h) - laguerre(n, a, y - h)) / (2.0 * h);
            let an = laguerre_deriv(n, a, y);
            assert!(
                (fd - an).abs() < 1e-7 * an.abs().max(1.0),
                "n={n} a={a} y={y}: fd={fd} analytic={an}"
            );
        }
    }

    #[test]
    fn coeffs_reproduce_recurrence() {
        for &(n, a) in &[(0, 0.5), (1, -1.25), (3, 0.5), (6, -0.5), (6, 2.0)] {
            let coeffs = laguerre_coeffs(n, a);
            for &y in &[0.0, 0.7, 2.9] {
                let horner: f64 = coeffs.iter().rev().fold(0.0, |acc, &c| acc * y + c);
                let rec = laguerre(n, a, y);
                assert!(
                    (horner - rec).abs() < 1e-12 * rec.abs().max(1.0),
                    "n={n} a={a} y={y}: {horner} vs {rec}"
                );
            }
        }
    }

    #[test]
    fn value_at_zero_is_binomial() {
        // L_n^a(0) = binom(n+a, n)
        let n = 4;
        let a = 0.5;
        let expect = (a + 1.0) * (a + 2.0) * (a + 3.0) * (a + 4.0) / 24.0;
        assert!((laguerre(n, a, 0.0) - expect).abs() < 1e-14);
    }
}
