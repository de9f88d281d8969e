//! Special functions and quadrature used by the secrecy analytics.
//!
//! Everything here is pure and reentrant. The Meijer G contour integrator in
//! [`mellin`] is a reference evaluator; production code goes through the closed
//! form in [`meijer_g_2122`].

mod bessel;
mod gamma;
pub mod mellin;
mod quad;

pub use bessel::bessel_j0;
pub use gamma::{gamma, ln_gamma, reg_lower_inc_gamma, reg_upper_inc_gamma};
pub use mellin::meijer_g_2122_oracle;
pub use quad::{integrate_finite, integrate_semi_infinite, QuadratureScheme, QuadratureSpec};

use crate::error::{Error, Result};

/// `G^{2,1}_{2,2}(z | -k, 0; 0, -1)`.
///
/// The Mellin-Barnes integrand of this G-function collapses to
/// `Γ(-1-s) Γ(1+k+s) z^s`, whose inverse Mellin transform is
/// `Γ(k) z^{-1} (1+z)^{-k}`. The reduction is checked against
/// [`meijer_g_2122_oracle`] in the test suites.
pub fn meijer_g_2122(z: f64, k: f64) -> Result<f64> {
    ln_meijer_g_2122(z, k).map(f64::exp)
}

/// Natural log of [`meijer_g_2122`]; stays finite where the value itself underflows.
pub fn ln_meijer_g_2122(z: f64, k: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::domain(format!("meijer G argument must be positive, got {z}")));
    }
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::domain(format!("meijer G shape must be positive, got {k}")));
    }
    Ok(ln_gamma(k) - z.ln() - k * z.ln_1p())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn meijer_reduction_examples() {
        assert_relative_eq!(meijer_g_2122(1.0, 1.0).unwrap(), 0.5, max_relative = 1e-14);
        assert_relative_eq!(meijer_g_2122(1.0, 2.0).unwrap(), 0.25, max_relative = 1e-14);
        let expected = std::f64::consts::PI.sqrt() / (10.0 * 11f64.sqrt());
        assert_relative_eq!(meijer_g_2122(10.0, 0.5).unwrap(), expected, max_relative = 1e-13);
    }

    #[test]
    fn meijer_decays_to_zero() {
        let mut prev = f64::INFINITY;
        for e in 0..40 {
            let g = meijer_g_2122(10f64.powi(e), 1.5).unwrap();
            assert!(g < prev);
            prev = g;
        }
        assert!(prev < 1e-60);
    }

    #[test]
    fn meijer_rejects_bad_arguments() {
        assert!(matches!(meijer_g_2122(0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(meijer_g_2122(1.0, -1.0), Err(Error::Domain(_))));
        assert!(matches!(meijer_g_2122(f64::NAN, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn normalized_meijer_is_a_probability() {
        for &k in &[0.25, 1.0, 7.5, 64.0] {
            let mut prev = 0.0;
            for i in -12..=12 {
                let z = 10f64.powf(i as f64 / 2.0);
                // log form: (1+z)^{-k} underflows for large k·ln z
                let ln_p = ln_meijer_g_2122(z, k).unwrap() + z.ln() - ln_gamma(k);
                assert!(ln_p <= 1e-15 && ln_p <= prev + 1e-15, "k={k} z={z} ln_p={ln_p}");
                assert!(ln_p.is_finite());
                prev = ln_p;
            }
        }
    }
}
