//! Overlaps of SL(2) coherent states with the block basis.
//!
//! `rotation_overlap(2j, f, v, r) = <f| exp(-r Y+ + r Y-) |v>`, evaluated from
//! the closed form
//!
//! ```text
//! (cos^2 r)^(j - v) (-tan r)^(f - v) F~(-v, 2j + 1 - v; f - v + 1; sin^2 r)
//!     * sqrt((2j - v)! f! / ((2j - f)! v!))
//! ```
//!
//! with the regularized hypergeometric function covering `f < v`. When
//! `f + v > 2j` the Euler transformation
//! `F~(a, b; c; x) = (1 - x)^(c - a - b) F~(c - a, c - b; c; x)` is applied
//! first so every power of `sin r` and `cos r` stays nonnegative.

use statrs::function::factorial::ln_factorial;

use crate::hypergeometric::reduced_series;

fn signed_pow(base: f64, exp: i64) -> (f64, f64) {
    // returns (sign, ln|base^exp|), exp >= 0
    if exp == 0 {
        return (1.0, 0.0);
    }
    if base == 0.0 {
        return (0.0, 0.0);
    }
    let sign = if base < 0.0 && exp % 2 == 1 { -1.0 } else { 1.0 };
    (sign, exp as f64 * base.abs().ln())
}

/// Real overlap `<f| exp(-r Y+ + r Y-) |v>` on a spin-`j` block (`two_j = 2j`).
pub fn rotation_overlap(two_j: usize, f: usize, v: usize, r: f64) -> f64 {
    assert!(f <= two_j && v <= two_j, "level index outside the block");
    let (s, c) = r.sin_cos();
    let x = s * s;
    let tj = two_j as i64;
    let (fi, vi) = (f as i64, v as i64);
    let hyp_c = fi - vi + 1;

    let (series, cos_pow) = if fi + vi <= tj {
        (
            reduced_series(v, (tj + 1 - vi) as f64, hyp_c, x),
            tj - vi - fi,
        )
    } else {
        (
            reduced_series(two_j - f, (fi + 1) as f64, hyp_c, x),
            fi + vi - tj,
        )
    };
    if series.is_zero() {
        return 0.0;
    }
    let sin_pow = fi - vi + 2 * series.first as i64;

    let (sign_s, log_s) = signed_pow(s, sin_pow);
    let (sign_c, log_c) = signed_pow(c, cos_pow);
    if sign_s == 0.0 || sign_c == 0.0 {
        return 0.0;
    }
    let parity = if (fi - vi).rem_euclid(2) == 1 { -1.0 } else { 1.0 };
    let log_norm = 0.5
        * (ln_factorial((two_j - v) as u64) + ln_factorial(f as u64)
            - ln_factorial((two_j - f) as u64)
            - ln_factorial(v as u64));
    let sum: f64 = series.sum.into();
    parity * series.sign * sign_s * sign_c * (log_norm + series.log_scale + log_s + log_c).exp() * sum
}

/// Column `v` of the rotation: `<f| exp(-r Y+ + r Y-) |v>` for `f = 0..=2j`.
pub fn rotation_column(two_j: usize, v: usize, r: f64) -> Vec<f64> {
    (0..=two_j).map(|f| rotation_overlap(two_j, f, v, r)).collect()
}
