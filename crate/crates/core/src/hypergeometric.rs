//! Terminating, regularized Gauss hypergeometric series.
//!
//! ```text
//! F~(-n, b; c; x) = sum_{k=0}^{n} (-n)_k (b)_k x^k / (k! Gamma(c + k)),   1/Gamma(0, -1, ...) = 0
//! ```
//!
//! The series is a polynomial in `x` with alternating coefficients whose
//! partial sums can exceed the result by many orders of magnitude, so the
//! summation runs in double-double arithmetic and the leading factorials are
//! kept in log space.

use statrs::function::factorial::ln_factorial;
use twofloat::TwoFloat;

/// A regularized series split as `sign * exp(log_scale) * x^first * sum`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ReducedSeries {
    /// Index of the first term not killed by `1/Gamma(c + k)`.
    pub first: usize,
    pub sign: f64,
    pub log_scale: f64,
    /// `sum_{k >= first} (t_k / t_first) x^(k - first)`.
    pub sum: TwoFloat,
}

impl ReducedSeries {
    fn zero() -> Self {
        Self {
            first: 0,
            sign: 0.0,
            log_scale: 0.0,
            sum: TwoFloat::from(0.0),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0.0
    }
}

/// `F~(-n, b; c; x)` in reduced form.
pub(crate) fn reduced_series(n: usize, b: f64, c: i64, x: f64) -> ReducedSeries {
    let first = if c >= 1 { 0 } else { (1 - c) as usize };
    if first > n {
        return ReducedSeries::zero();
    }

    // t_first = prod_{i < first} (-n + i)(b + i)/(i + 1) / (c + first - 1)!
    let mut sign = 1.0;
    let mut log_scale = -ln_factorial((c + first as i64 - 1) as u64);
    for i in 0..first {
        let a_i = i as f64 - n as f64;
        let b_i = b + i as f64;
        if b_i == 0.0 {
            return ReducedSeries::zero();
        }
        sign *= (a_i * b_i).signum();
        log_scale += a_i.abs().ln() + b_i.abs().ln() - ((i + 1) as f64).ln();
    }

    let x_dd = TwoFloat::from(x);
    let mut term = TwoFloat::from(1.0);
    let mut sum = term;
    for k in first..n {
        let kf = k as f64;
        let num = TwoFloat::new_mul(kf - n as f64, b + kf);
        let den = TwoFloat::new_mul(kf + 1.0, c as f64 + kf);
        term = term * num / den * x_dd;
        sum += term;
    }
    ReducedSeries {
        first,
        sign,
        log_scale,
        sum,
    }
}

/// Regularized `F~(-v, b; c; x)` for integer `c`, including `c <= 0`.
pub fn reg_hyp_2f1(v: usize, b: f64, c: i64, x: f64) -> f64 {
    let s = reduced_series(v, b, c, x);
    if s.is_zero() {
        return 0.0;
    }
    let sum: f64 = s.sum.into();
    s.sign * s.log_scale.exp() * x.powi(s.first as i32) * sum
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gamma_int(c: i64) -> f64 {
        (1..c).map(|k| k as f64).product()
    }

    #[test]
    fn empty_series() {
        assert_eq!(reg_hyp_2f1(0, 3.5, 1, 0.4), 1.0);
        assert!((reg_hyp_2f1(0, 3.5, 4, 0.4) - 1.0 / 6.0).abs() < 1e-16);
        assert_eq!(reg_hyp_2f1(0, 3.5, 0, 0.4), 0.0);
    }

    #[test]
    fn limit_at_nonpositive_c() {
        for &x in &[0.1, 0.5, 0.9] {
            assert!((reg_hyp_2f1(1, 1.0, 0, x) + x).abs() < 1e-16);
        }
    }

    #[test]
    fn three_term_sum() {
        let value = gamma_int(1) * reg_hyp_2f1(2, 3.0, 1, 0.5);
        assert!((value + 0.5).abs() < 1e-15);
    }

    #[test]
    fn matches_plain_series_for_positive_c() {
        for n in 0..8usize {
            for c in 1..5i64 {
                let (b, x) = (2.5, 0.37);
                let mut plain = 0.0;
                let mut term = 1.0;
                for k in 0..=n {
                    plain += term;
                    let kf = k as f64;
                    term *= (kf - n as f64) * (b + kf) / ((kf + 1.0) * (c as f64 + kf)) * x;
                }
                let got = reg_hyp_2f1(n, b, c, x) * gamma_int(c);
                assert!((got - plain).abs() < 1e-13 * plain.abs().max(1.0), "n={n} c={c}");
            }
        }
    }

    #[test]
    fn zero_when_series_is_fully_regularized_away() {
        // c = -3 kills k = 0..=3, but a = -2 terminates at k = 2
        assert_eq!(reg_hyp_2f1(2, 1.0, -3, 0.3), 0.0);
    }
}
