//! Moment-matched gain laws, secrecy capacity, the ASC and SOP bounds and
//! quadrature references for both.

use crate::channel::{LinkBudget, Receiver};
use crate::error::{Error, Result};
use crate::specfun::{
    integrate_finite, integrate_semi_infinite, ln_gamma, ln_meijer_g_2122, reg_lower_inc_gamma, QuadratureScheme,
    QuadratureSpec,
};
use crate::surface::trace_moments;
use nalgebra::DMatrix;
use std::f64::consts::LN_2;

/// Gamma law for Bob's channel power gain.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GammaFit {
    pub k_b: f64,
    pub theta_b: f64,
}

impl GammaFit {
    pub fn new(k_b: f64, theta_b: f64) -> Result<Self> {
        if !(k_b > 0.0 && k_b.is_finite()) || !(theta_b > 0.0 && theta_b.is_finite()) {
            return Err(Error::domain(format!("gamma fit needs positive parameters, got k={k_b} θ={theta_b}")));
        }
        Ok(GammaFit { k_b, theta_b })
    }

    /// Moment matching from `tr(J̃²)` and `tr(J̃⁴)`.
    pub fn from_traces(tr2: f64, tr4: f64) -> Result<Self> {
        if !(tr2 > 0.0) || !(tr4 > 0.0) {
            return Err(Error::domain("gamma fit of a zero correlation matrix"));
        }
        GammaFit::new(tr2 * tr2 / tr4, tr4 / tr2)
    }

    pub fn mean(&self) -> f64 {
        self.k_b * self.theta_b
    }
}

/// Exponential law for Eve's channel power gain, parameterized by its rate.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ExpFit {
    pub theta_e: f64,
}

impl ExpFit {
    pub fn new(theta_e: f64) -> Result<Self> {
        if !(theta_e > 0.0 && theta_e.is_finite()) {
            return Err(Error::domain(format!("exponential rate must be positive, got {theta_e}")));
        }
        Ok(ExpFit { theta_e })
    }

    pub fn from_trace(tr2: f64) -> Result<Self> {
        if !(tr2 > 0.0) {
            return Err(Error::domain("exponential fit of a zero correlation matrix"));
        }
        ExpFit::new(1.0 / tr2)
    }

    pub fn mean(&self) -> f64 {
        1.0 / self.theta_e
    }
}

/// Target secrecy rate in bits/s/Hz.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SecrecyTarget {
    pub r_s: f64,
}

impl SecrecyTarget {
    pub fn new(r_s: f64) -> Result<Self> {
        if !(r_s >= 0.0) || !r_s.is_finite() {
            return Err(Error::config(format!("target secrecy rate must be non-negative, got {r_s}")));
        }
        Ok(SecrecyTarget { r_s })
    }
}

fn check_symmetric(j: &DMatrix<f64>) -> Result<()> {
    if !j.is_square() {
        return Err(Error::Dimension { expected: j.nrows(), got: j.ncols() });
    }
    if j.nrows() == 0 {
        return Err(Error::domain("fit of an empty correlation matrix"));
    }
    if (0..j.nrows()).any(|r| (0..r).any(|c| j[(r, c)] != j[(c, r)])) {
        return Err(Error::domain("reduced correlation matrix is not symmetric"));
    }
    Ok(())
}

pub fn fit_bob_gamma(j_reduced: &DMatrix<f64>) -> Result<GammaFit> {
    check_symmetric(j_reduced)?;
    let (tr2, tr4) = trace_moments(j_reduced);
    GammaFit::from_traces(tr2, tr4)
}

pub fn fit_eve_exponential(j_reduced: &DMatrix<f64>) -> Result<ExpFit> {
    check_symmetric(j_reduced)?;
    let (tr2, _) = trace_moments(j_reduced);
    ExpFit::from_trace(tr2)
}

fn check_gain(g: f64) -> Result<()> {
    if !(g >= 0.0) {
        return Err(Error::domain(format!("gain must be non-negative, got {g}")));
    }
    Ok(())
}

pub fn gamma_cdf(g: f64, fit: &GammaFit) -> Result<f64> {
    check_gain(g)?;
    if g.is_infinite() {
        return Ok(1.0);
    }
    reg_lower_inc_gamma(fit.k_b, g / fit.theta_b)
}

pub fn gamma_pdf(g: f64, fit: &GammaFit) -> Result<f64> {
    check_gain(g)?;
    let k = fit.k_b;
    if g == 0.0 {
        return Ok(match k.partial_cmp(&1.0) {
            Some(std::cmp::Ordering::Less) => f64::INFINITY,
            Some(std::cmp::Ordering::Equal) => 1.0 / fit.theta_b,
            _ => 0.0,
        });
    }
    if g.is_infinite() {
        return Ok(0.0);
    }
    Ok(((k - 1.0) * g.ln() - g / fit.theta_b - k * fit.theta_b.ln() - ln_gamma(k)).exp())
}

pub fn exp_cdf(g: f64, fit: &ExpFit) -> Result<f64> {
    check_gain(g)?;
    Ok(-(-fit.theta_e * g).exp_m1())
}

pub fn exp_pdf(g: f64, fit: &ExpFit) -> Result<f64> {
    check_gain(g)?;
    Ok(fit.theta_e * (-fit.theta_e * g).exp())
}

/// `[log2(1+γ_b) - log2(1+γ_e)]⁺`.
pub fn secrecy_capacity(gamma_b: f64, gamma_e: f64) -> f64 {
    ((gamma_b.ln_1p() - gamma_e.ln_1p()) / LN_2).max(0.0)
}

/// Scale of Bob's SNR law, `γ̄_b L_f L_b θ_b`.
fn bob_snr_scale(fit_b: &GammaFit, budget: &LinkBudget) -> f64 {
    budget.snr_per_gain(Receiver::Bob) * fit_b.theta_b
}

/// Mean of Eve's SNR law, `γ̄_e L_f L_e / θ_e`.
fn eve_snr_mean(fit_e: &ExpFit, budget: &LinkBudget) -> f64 {
    budget.snr_per_gain(Receiver::Eve) / fit_e.theta_e
}

/// `log2((1 + E[γ_b]) / (1 + E[γ_e]))`, returned without clamping; a negative
/// value means Eve's mean SNR exceeds Bob's.
pub fn asc_upper_bound(fit_b: &GammaFit, fit_e: &ExpFit, budget: &LinkBudget) -> f64 {
    let mean_b = bob_snr_scale(fit_b, budget) * fit_b.k_b;
    let mean_e = eve_snr_mean(fit_e, budget);
    (mean_b.ln_1p() - mean_e.ln_1p()) / LN_2
}

/// Argument of the SOP bound,
/// `z = γ̄_b L_b θ_b θ_e / (γ̄_e L_e 2^{R_s})`. The `L_f` factor is common to
/// both links and cancels.
pub fn sop_ratio(fit_b: &GammaFit, fit_e: &ExpFit, budget: &LinkBudget, target: &SecrecyTarget) -> f64 {
    let num = budget.mean_snr(Receiver::Bob) * budget.l(Receiver::Bob) * fit_b.theta_b * fit_e.theta_e;
    let den = budget.mean_snr(Receiver::Eve) * budget.l(Receiver::Eve) * target.r_s.exp2();
    if den == 0.0 {
        return if num == 0.0 { f64::NAN } else { f64::INFINITY };
    }
    num / den
}

/// Closed-form lower bound on the SOP, `(z/Γ(k_b)) G^{2,1}_{2,2}(z | -k_b,0; 0,-1)`,
/// which equals `(1+z)^{-k_b}`.
pub fn sop_lower_bound(fit_b: &GammaFit, fit_e: &ExpFit, budget: &LinkBudget, target: &SecrecyTarget) -> Result<f64> {
    sop_lower_bound_at(sop_ratio(fit_b, fit_e, budget, target), fit_b.k_b)
}

/// [`sop_lower_bound`] as a function of `z` and `k_b` directly.
pub fn sop_lower_bound_at(z: f64, k_b: f64) -> Result<f64> {
    if z.is_nan() {
        return Err(Error::Numeric("SOP ratio is undefined (both links silent)".into()));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    if z.is_infinite() {
        return Ok(0.0);
    }
    Ok((z.ln() - ln_gamma(k_b) + ln_meijer_g_2122(z, k_b)?).exp())
}

/// `Pr(γ_b ≤ 2^{R_s} γ_e)` by direct quadrature against the fitted laws.
pub fn sop_lower_oracle(
    fit_b: &GammaFit,
    fit_e: &ExpFit,
    budget: &LinkBudget,
    target: &SecrecyTarget,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let a = bob_snr_scale(fit_b, budget);
    let b = eve_snr_mean(fit_e, budget);
    let c = target.r_s.exp2();
    if b == 0.0 {
        // silent Eve: outage only when γ_b ≤ 0, a null event
        return Ok(if a == 0.0 { 1.0 } else { 0.0 });
    }
    if a == 0.0 {
        return Ok(1.0);
    }
    sop_oracle_at(a / (c * b), fit_b.k_b, quad)
}

/// `∫_0^∞ P(k, y/z) e^{-y} dy` with `y = γ_e / E[γ_e]`.
pub fn sop_oracle_at(z: f64, k: f64, quad: &QuadratureSpec) -> Result<f64> {
    // the integrand peaks near y ≈ k z/(1+z) once z is large
    let spec = match quad.scheme {
        QuadratureScheme::AdaptiveExp { .. } => quad.with_scale((k * z / (1.0 + z)).max(1.0)),
        QuadratureScheme::GaussLaguerre { .. } => *quad,
    };
    // normalize by the integrand near its peak so the absolute tolerance
    // stays meaningful when the result is close to underflow
    let y0 = (k * z / (1.0 + z)).max(1e-3);
    let peak = reg_lower_inc_gamma(k, y0 / z)? * (-y0).exp();
    let norm = if peak > 0.0 && peak.is_finite() { peak } else { 1.0 };
    let failed = std::cell::Cell::new(None);
    let value = integrate_semi_infinite(
        |y| match reg_lower_inc_gamma(k, y / z) {
            Ok(p) => p * (-y).exp() / norm,
            Err(e) => {
                failed.set(Some(e));
                0.0
            }
        },
        &spec,
    )?;
    match failed.into_inner() {
        Some(e) => Err(e),
        None => Ok(value * norm),
    }
}

/// `E[log2((1+γ_b)/(1+γ_e))⁺]` under the fitted laws, by iterated quadrature:
/// an outer integral over Bob's Gamma density of the inner expectation over
/// Eve's exponential law.
pub fn asc_oracle(fit_b: &GammaFit, fit_e: &ExpFit, budget: &LinkBudget, quad: &QuadratureSpec) -> Result<f64> {
    quad.validate()?;
    let a = bob_snr_scale(fit_b, budget);
    let b = eve_snr_mean(fit_e, budget);
    let k = fit_b.k_b;
    if a == 0.0 {
        return Ok(0.0);
    }
    let failed = std::cell::Cell::new(None);
    // inner: ∫_0^{x/b} (ln(1+x) - ln(1+b s)) e^{-s} ds, truncated where e^{-s}
    // is below double precision
    let inner = |x: f64| -> f64 {
        let lx = x.ln_1p();
        if b == 0.0 {
            return lx;
        }
        let upper = (x / b).min(60.0);
        match integrate_finite(|s| (lx - (b * s).ln_1p()) * (-s).exp(), 0.0, upper, quad) {
            Ok(v) => v,
            Err(e) => {
                failed.set(Some(e));
                0.0
            }
        }
    };
    // outer over t = x / a, so the Gamma density is the standard one with shape k
    let ln_norm = ln_gamma(k);
    let outer = |t: f64| -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        let density = ((k - 1.0) * t.ln() - t - ln_norm).exp();
        if density == 0.0 {
            return 0.0;
        }
        density * inner(a * t)
    };
    let spec = quad.with_scale(k.max(1.0));
    let nats = integrate_semi_infinite(outer, &spec)?;
    if let Some(e) = failed.into_inner() {
        return Err(e);
    }
    Ok(nats / LN_2)
}
