//! Log-factorials and orthogonal-polynomial recurrences used by the state
//! expansions and displacement matrix elements.

/// `ln(k!)` for `k = 0..=n`.
pub fn log_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Associated Laguerre polynomials `L_k^{(order)}(x)` for `k = 0..=max_degree`,
/// by the upward three-term recurrence in the degree.
pub fn laguerre_sequence(max_degree: usize, order: f64, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(max_degree + 1);
    out.push(1.0);
    if max_degree == 0 {
        return out;
    }
    out.push(1.0 + order - x);
    for k in 1..max_degree {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + order - x) * out[k] - (kf + order) * out[k - 1]) / (kf + 1.0);
        out.push(next);
    }
    out
}

/// Physicists' Hermite polynomials `H_n(x)` for real `x`, `n = 0..=max_degree`.
pub fn hermite_sequence(max_degree: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(max_degree + 1);
    out.push(1.0);
    if max_degree == 0 {
        return out;
    }
    out.push(2.0 * x);
    for n in 1..max_degree {
        let next = 2.0 * x * out[n] - 2.0 * n as f64 * out[n - 1];
        out.push(next);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laguerre_low_orders() {
        let x = 0.7;
        let l = laguerre_sequence(3, 2.0, x);
        assert!((l[1] - (3.0 - x)).abs() < 1e-14);
        // L_2^{(2)}(x) = (x^2 - 8x + 12) / 2
        assert!((l[2] - (x * x - 8.0 * x + 12.0) / 2.0).abs() < 1e-14);
        // L_3^{(2)}(x) = (-x^3 + 15x^2 - 60x + 60) / 6
        let want = (-x * x * x + 15.0 * x * x - 60.0 * x + 60.0) / 6.0;
        assert!((l[3] - want).abs() < 1e-13);
    }

    #[test]
    fn hermite_low_orders() {
        let x = -1.3;
        let h = hermite_sequence(4, x);
        assert!((h[2] - (4.0 * x * x - 2.0)).abs() < 1e-13);
        assert!((h[3] - (8.0 * x.powi(3) - 12.0 * x)).abs() < 1e-12);
        assert!((h[4] - (16.0 * x.powi(4) - 48.0 * x * x + 12.0)).abs() < 1e-12);
    }

    #[test]
    fn log_factorial_values() {
        let lf = log_factorials(10);
        assert_eq!(lf[0], 0.0);
        assert!((lf[10] - 3628800f64.ln()).abs() < 1e-12);
    }
}
