use crate::error::{Error, Result};
use std::f64::consts::{FRAC_2_PI, SQRT_2};

const SERIES_LIMIT: f64 = 8.0;
const ASYMPTOTIC_LIMIT: f64 = 25.0;

/// Bessel function of the first kind, order zero.
///
/// Power series up to |x| = 8, Miller backward recurrence up to 25, and the
/// Hankel amplitude-phase expansion beyond. The argument is folded to |x|
/// first so the result is exactly even.
pub fn bessel_j0(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(format!("bessel_j0 of non-finite {x}")));
    }
    let x = x.abs();
    Ok(if x <= SERIES_LIMIT {
        series(x)
    } else if x < ASYMPTOTIC_LIMIT {
        miller(x)
    } else {
        hankel(x)
    })
}

fn series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..60 {
        let mf = m as f64;
        term *= q / (mf * mf);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-3) {
            break;
        }
    }
    sum
}

// Backward recurrence J_{n-1} = (2n/x) J_n - J_{n+1}, normalized with
// J_0 + 2 Σ J_{2k} = 1.
fn miller(x: f64) -> f64 {
    let start = 2 * ((x as usize + 40) / 2 + 8);
    let mut next = 0.0;
    let mut cur = 1e-30;
    let mut norm = 0.0;
    for n in (1..=start).rev() {
        let prev = 2.0 * n as f64 / x * cur - next;
        next = cur;
        cur = prev;
        // `cur` now holds J_{n-1}
        if (n - 1) % 2 == 0 && n > 1 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
        }
    }
    cur / (norm + cur)
}

fn hankel(x: f64) -> f64 {
    // a_k = Π (2j-1)^2 / (k! (8x)^k); P = 1 - a_2 + a_4 - ..., and q = a_1 - a_3 + ...
    // is the negated Q of the usual P cos χ - Q sin χ form.
    let mut p = 1.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        a *= (2.0 * kf - 1.0).powi(2) / (8.0 * kf * x);
        if a >= last || a < 1e-18 {
            break;
        }
        last = a;
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * a;
        } else {
            q += sign * a;
        }
    }
    let (s, c) = x.sin_cos();
    let cos_chi = (c + s) / SQRT_2;
    let sin_chi = (s - c) / SQRT_2;
    (FRAC_2_PI / x).sqrt() * (p * cos_chi + q * sin_chi)
}
