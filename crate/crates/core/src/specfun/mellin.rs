//! Reference evaluation of `G^{2,1}_{2,2}(z | -k, 0; 0, -1)` straight from its
//! Mellin-Barnes integral
//!
//! ```text
//! G = (1 / 2πi) ∫_{c - i∞}^{c + i∞} Γ(-1 - s) Γ(1 + k + s) z^s ds,   -1 - k < c < -1.
//! ```
//!
//! The integrand is real on the real axis, so the contour integral reduces to
//! `(1/π) ∫_0^∞ Re f(c + it) dt`, evaluated with the trapezoid rule. The
//! abscissa `c` is put at the saddle of `|f|` on the real segment, where the
//! integrand is non-oscillatory to leading order. This is slow and exists to
//! check the closed form.

use super::gamma::ln_gamma;
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

const TARGET_REL: f64 = 1e-10;
const MAX_REFINEMENTS: usize = 10;
// contributions below e^{-45} of the peak are dropped
const TAIL_LOG_DROP: f64 = 45.0;

/// ln Γ(s) for Re(s) > 0: upward recurrence to |s| ≥ 15, then Stirling with
/// eight Bernoulli terms. Only `exp` of the result is used, so the branch of
/// the imaginary part is irrelevant.
pub fn ln_gamma_complex(s: Complex64) -> Complex64 {
    const BERNOULLI: [f64; 8] = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
        7.0 / 6.0,
        -3617.0 / 510.0,
    ];
    let mut z = s;
    let mut shift = Complex64::new(0.0, 0.0);
    while z.norm() < 15.0 {
        shift += z.ln();
        z += 1.0;
    }
    let inv = z.inv();
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut pow = inv;
    for (n, b) in BERNOULLI.iter().enumerate() {
        let two_n = 2.0 * (n as f64 + 1.0);
        series += pow * (b / (two_n * (two_n - 1.0)));
        pow *= inv2;
    }
    (z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln() + series - shift
}

fn ln_integrand(s: Complex64, k: f64, ln_z: f64) -> Complex64 {
    ln_gamma_complex(-1.0 - s) + ln_gamma_complex(1.0 + k + s) + s * ln_z
}

// The real-axis restriction φ(c) = ln Γ(-1-c) + ln Γ(1+k+c) + c ln z is
// convex on (-1-k, -1); golden-section search for its minimum.
fn saddle(k: f64, ln_z: f64) -> f64 {
    let phi = |c: f64| ln_gamma(-1.0 - c) + ln_gamma(1.0 + k + c) + c * ln_z;
    let margin = 1e-6 * k.min(1.0);
    let (mut lo, mut hi) = (-1.0 - k + margin, -1.0 - margin);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (phi(x1), phi(x2));
    for _ in 0..200 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = phi(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = phi(x2);
        }
        if hi - lo < 1e-12 * (1.0 + k) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Contour-integral evaluation of `G^{2,1}_{2,2}(z | -k, 0; 0, -1)`.
///
/// `contour_points` sets the initial trapezoid resolution on the truncated
/// half line; the step is halved until successive estimates agree to 1e-10
/// relative, so the result meets 1e-8 relative or a convergence error comes
/// back with the last estimate.
pub fn meijer_g_2122_oracle(z: f64, k: f64, contour_points: usize) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() || !(k > 0.0) || !k.is_finite() {
        return Err(Error::domain(format!("contour oracle needs z > 0 and k > 0, got z={z}, k={k}")));
    }
    if contour_points < 1000 {
        return Err(Error::domain(format!("contour oracle needs at least 1000 points, got {contour_points}")));
    }
    let ln_z = z.ln();
    let c = saddle(k, ln_z);
    let peak = ln_integrand(Complex64::new(c, 0.0), k, ln_z).re;

    // |f(c+it)| is decreasing in |t|; walk out until it is negligible
    let mut t_max = 1.0;
    while ln_integrand(Complex64::new(c, t_max), k, ln_z).re - peak > -TAIL_LOG_DROP {
        t_max *= 1.25;
        if t_max > 1e5 {
            return Err(Error::Numeric("contour integrand does not decay".into()));
        }
    }

    let f = |t: f64| (ln_integrand(Complex64::new(c, t), k, ln_z) - peak).exp().re;
    let mut n = contour_points;
    let mut h = t_max / n as f64;
    let mut sum = 0.5 * f(0.0) + (1..=n).map(|j| f(j as f64 * h)).sum::<f64>();
    let mut estimate = h * sum;
    let mut err = f64::INFINITY;
    for _ in 0..MAX_REFINEMENTS {
        // halve the step; reuse the existing nodes
        let odd: f64 = (0..n).map(|j| f((2 * j + 1) as f64 * 0.5 * h)).sum();
        sum += odd;
        n *= 2;
        h *= 0.5;
        let refined = h * sum;
        err = (refined - estimate).abs();
        estimate = refined;
        if err <= TARGET_REL * estimate.abs() {
            return Ok(estimate / PI * peak.exp());
        }
    }
    Err(Error::Convergence {
        what: "Mellin-Barnes contour integral",
        estimate: estimate / PI * peak.exp(),
        error_bound: err / PI * peak.exp(),
    })
}
