//! Correlated Rayleigh fading, path loss, the cascaded equivalent channel and
//! the SNR it produces at Bob and Eve.

use crate::control::FrisConfiguration;
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Receiver {
    Bob,
    Eve,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

/// `ρ d^{-α}`.
pub fn path_loss(rho: f64, alpha: f64, d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::domain(format!("path-loss distance must be positive, got {d}")));
    }
    Ok(rho * d.powf(-alpha))
}

/// Large-scale link parameters, all in linear units (watts, meters).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub rho: f64,
    pub alpha: f64,
    pub d_f: f64,
    pub d_b: f64,
    pub d_e: f64,
    pub power_w: f64,
    pub noise_b_w: f64,
    pub noise_e_w: f64,
}

impl LinkBudget {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("d_f", self.d_f),
            ("d_b", self.d_b),
            ("d_e", self.d_e),
            ("alpha", self.alpha),
            ("transmit power", self.power_w),
            ("rho", self.rho),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(format!("{name} must be positive, got {v}")));
            }
        }
        // an infinite noise power is allowed: it encodes a silent receiver
        if !(self.noise_b_w > 0.0) || !(self.noise_e_w > 0.0) {
            return Err(Error::config("noise powers must be positive"));
        }
        Ok(())
    }

    /// Builds a budget from dBm powers.
    #[allow(clippy::too_many_arguments)]
    pub fn from_dbm(
        rho: f64,
        alpha: f64,
        d_f: f64,
        d_b: f64,
        d_e: f64,
        power_dbm: f64,
        noise_b_dbm: f64,
        noise_e_dbm: f64,
    ) -> Result<Self> {
        let b = LinkBudget {
            rho,
            alpha,
            d_f,
            d_b,
            d_e,
            power_w: dbm_to_watts(power_dbm),
            noise_b_w: dbm_to_watts(noise_b_dbm),
            noise_e_w: dbm_to_watts(noise_e_dbm),
        };
        b.validate()?;
        Ok(b)
    }

    pub fn l_f(&self) -> f64 {
        self.rho * self.d_f.powf(-self.alpha)
    }

    pub fn l(&self, receiver: Receiver) -> f64 {
        let d = match receiver {
            Receiver::Bob => self.d_b,
            Receiver::Eve => self.d_e,
        };
        self.rho * d.powf(-self.alpha)
    }

    /// Average transmit SNR `P / σ²_u`.
    pub fn mean_snr(&self, receiver: Receiver) -> f64 {
        match receiver {
            Receiver::Bob => self.power_w / self.noise_b_w,
            Receiver::Eve => self.power_w / self.noise_e_w,
        }
    }

    /// Same budget with Bob's noise adjusted so that `P / σ²_b` equals `snr_db`.
    /// Eve's average SNR is unchanged.
    pub fn with_bob_snr_db(&self, snr_db: f64) -> Self {
        LinkBudget {
            noise_b_w: self.power_w / db_to_linear(snr_db),
            ..*self
        }
    }

    /// `γ̄_u L_f L_u`, the factor that maps channel power gain to SNR.
    pub fn snr_per_gain(&self, receiver: Receiver) -> f64 {
        self.mean_snr(receiver) * self.l_f() * self.l(receiver)
    }
}

/// One draw of the three small-scale fading vectors and their correlated images.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h_f: Vec<Complex64>,
    pub h_b: Vec<Complex64>,
    pub h_e: Vec<Complex64>,
    /// `J^{1/2} h_f`
    pub v: Vec<Complex64>,
    /// `J^{1/2} h_b`
    pub u_b: Vec<Complex64>,
    /// `J^{1/2} h_e`
    pub u_e: Vec<Complex64>,
}

impl ChannelRealization {
    pub fn from_fading(
        h_f: Vec<Complex64>,
        h_b: Vec<Complex64>,
        h_e: Vec<Complex64>,
        j_sqrt: &DMatrix<f64>,
    ) -> Result<Self> {
        let m = j_sqrt.nrows();
        for h in [&h_f, &h_b, &h_e] {
            if h.len() != m || j_sqrt.ncols() != m {
                return Err(Error::Dimension { expected: m, got: h.len() });
            }
        }
        let v = correlate(j_sqrt, &h_f);
        let u_b = correlate(j_sqrt, &h_b);
        let u_e = correlate(j_sqrt, &h_e);
        Ok(ChannelRealization { h_f, h_b, h_e, v, u_b, u_e })
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn u(&self, receiver: Receiver) -> &[Complex64] {
        match receiver {
            Receiver::Bob => &self.u_b,
            Receiver::Eve => &self.u_e,
        }
    }
}

fn correlate(j_sqrt: &DMatrix<f64>, h: &[Complex64]) -> Vec<Complex64> {
    let m = h.len();
    (0..m)
        .map(|r| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (c, x) in h.iter().enumerate() {
                acc += x * j_sqrt[(r, c)];
            }
            acc
        })
        .collect()
}

/// Counter-based stream for one trial: the same `(seed, trial)` always yields
/// the same draws, whichever worker runs it.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn draw_cn<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Vec<Complex64> {
    (0..m)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
        })
        .collect()
}

/// Draws `h_f`, `h_b`, `h_e ~ CN(0, I_M)` (in that order) and correlates them.
pub fn draw_channels<R: Rng + ?Sized>(rng: &mut R, m: usize, j_sqrt: &DMatrix<f64>) -> Result<ChannelRealization> {
    if j_sqrt.nrows() != m || j_sqrt.ncols() != m {
        return Err(Error::Dimension { expected: m, got: j_sqrt.nrows() });
    }
    let h_f = draw_cn(rng, m);
    let h_b = draw_cn(rng, m);
    let h_e = draw_cn(rng, m);
    ChannelRealization::from_fading(h_f, h_b, h_e, j_sqrt)
}

/// Realizations for trials `first..first+count`, each drawn from
/// [`trial_rng`]. The correlation is applied with one matrix product for the
/// whole block; for a fixed block partition the output is bit-reproducible.
pub fn draw_channel_batch(seed: u64, first: u64, count: usize, j_sqrt: &DMatrix<f64>) -> Result<Vec<ChannelRealization>> {
    let m = j_sqrt.nrows();
    if j_sqrt.ncols() != m {
        return Err(Error::Dimension { expected: m, got: j_sqrt.ncols() });
    }
    let mut fading = Vec::with_capacity(count);
    let mut raw = DMatrix::<f64>::zeros(m, 6 * count);
    for t in 0..count {
        let mut rng = trial_rng(seed, first + t as u64);
        let hs = [draw_cn(&mut rng, m), draw_cn(&mut rng, m), draw_cn(&mut rng, m)];
        for (k, h) in hs.iter().enumerate() {
            for (r, x) in h.iter().enumerate() {
                raw[(r, 6 * t + 2 * k)] = x.re;
                raw[(r, 6 * t + 2 * k + 1)] = x.im;
            }
        }
        fading.push(hs);
    }
    let images = j_sqrt * raw;
    let image = |t: usize, k: usize| -> Vec<Complex64> {
        let re = images.column(6 * t + 2 * k);
        let im = images.column(6 * t + 2 * k + 1);
        re.iter().zip(im.iter()).map(|(&a, &b)| Complex64::new(a, b)).collect()
    };
    Ok(fading
        .into_iter()
        .enumerate()
        .map(|(t, [h_f, h_b, h_e])| ChannelRealization {
            v: image(t, 0),
            u_b: image(t, 1),
            u_e: image(t, 2),
            h_f,
            h_b,
            h_e,
        })
        .collect())
}

/// `Σ_{m ∈ indices} conj(u[m]) e^{jφ_m} v[m]`.
pub fn cascade(u: &[Complex64], v: &[Complex64], indices: &[usize], phases: &[f64]) -> Complex64 {
    indices
        .iter()
        .zip(phases)
        .map(|(&m, &phi)| u[m].conj() * Complex64::from_polar(1.0, phi) * v[m])
        .sum()
}

/// Scalar cascaded channel `h_uᴴ J^{1/2} D_φ J^{1/2} h_f` with `D_φ` the
/// diagonal ON/OFF phase mask of `config`.
pub fn equivalent_channel(
    realization: &ChannelRealization,
    config: &FrisConfiguration,
    receiver: Receiver,
) -> Result<Complex64> {
    let m = realization.len();
    if let Some(&bad) = config.selection().indices().iter().find(|&&i| i >= m) {
        return Err(Error::Index { index: bad, len: m });
    }
    Ok(cascade(
        realization.u(receiver),
        &realization.v,
        config.selection().indices(),
        config.phases(),
    ))
}

pub fn channel_gain(h: Complex64) -> f64 {
    h.norm_sqr()
}

/// `γ_u = γ̄_u L_f L_u G_u`.
pub fn received_snr(gain: f64, budget: &LinkBudget, receiver: Receiver) -> f64 {
    budget.snr_per_gain(receiver) * gain
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{ConfigMode, FrisConfiguration};
    use crate::surface::{build_correlation, SelectionSet, SurfaceGeometry};
    use approx::assert_relative_eq;

    fn budget() -> LinkBudget {
        LinkBudget::from_dbm(1.0, 2.5, 20.0, 30.0, 30.0, 30.0, -90.0, -80.0).unwrap()
    }

    #[test]
    fn path_loss_values() {
        assert_eq!(path_loss(1.0, 2.5, 1.0).unwrap(), 1.0);
        assert_relative_eq!(path_loss(1.0, 2.0, 100.0).unwrap(), 1e-4, max_relative = 1e-15);
        let log_route = (-2.5 * 20f64.ln()).exp();
        assert_relative_eq!(path_loss(1.0, 2.5, 20.0).unwrap(), log_route, max_relative = 1e-14);
        assert!((log_route - 5.590_17e-4).abs() < 1e-9);
        assert!(path_loss(1.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn dbm_budget() {
        let b = budget();
        assert_relative_eq!(b.mean_snr(Receiver::Bob), 1e12, max_relative = 1e-12);
        assert_relative_eq!(b.mean_snr(Receiver::Eve), 1e11, max_relative = 1e-12);
        assert_relative_eq!(b.l_f(), 20f64.powf(-2.5));
        assert_relative_eq!(b.l(Receiver::Bob), 30f64.powf(-2.5));
        let swept = b.with_bob_snr_db(90.0);
        assert_relative_eq!(swept.mean_snr(Receiver::Bob), 1e9, max_relative = 1e-12);
        assert_eq!(swept.mean_snr(Receiver::Eve), b.mean_snr(Receiver::Eve));
    }

    #[test]
    fn snr_examples() {
        let b = budget();
        assert_eq!(received_snr(0.0, &b, Receiver::Bob), 0.0);
        let unity = LinkBudget {
            rho: 1.0,
            alpha: 1e-300,
            d_f: 1.0,
            d_b: 1.0,
            d_e: 1.0,
            power_w: 2.0,
            noise_b_w: 2.0,
            noise_e_w: 2.0,
        };
        assert_relative_eq!(received_snr(1.0, &unity, Receiver::Bob), 1.0);
        // linear in gain and in P
        let g = 3.7;
        let s1 = received_snr(g, &b, Receiver::Eve);
        assert_relative_eq!(received_snr(2.0 * g, &b, Receiver::Eve), 2.0 * s1, max_relative = 1e-15);
        let doubled = LinkBudget { power_w: 2.0 * b.power_w, ..b };
        assert_relative_eq!(received_snr(g, &doubled, Receiver::Eve), 2.0 * s1, max_relative = 1e-15);
    }

    #[test]
    fn gain_values() {
        assert_eq!(channel_gain(Complex64::new(0.0, 0.0)), 0.0);
        assert_eq!(channel_gain(Complex64::new(3.0, 4.0)), 25.0);
        assert_eq!(channel_gain(Complex64::new(3.0, -4.0)), 25.0);
    }

    #[test]
    fn single_element_passes_through() {
        let j = DMatrix::identity(1, 1);
        let r = draw_channels(&mut trial_rng(1, 0), 1, &j).unwrap();
        assert_eq!(r.u_b, r.h_b);
        assert_eq!(r.v, r.h_f);
        let cfg = FrisConfiguration::new(SelectionSet::all(1), vec![0.0], ConfigMode::FixedUniform).unwrap();
        let h = equivalent_channel(&r, &cfg, Receiver::Bob).unwrap();
        assert_relative_eq!((h - r.h_b[0].conj() * r.h_f[0]).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn empty_selection_gives_zero() {
        let j = DMatrix::identity(3, 3);
        let r = draw_channels(&mut trial_rng(2, 0), 3, &j).unwrap();
        let cfg = FrisConfiguration::new(SelectionSet::none(), vec![], ConfigMode::Adaptive).unwrap();
        assert_eq!(equivalent_channel(&r, &cfg, Receiver::Eve).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn draws_are_deterministic_per_trial() {
        let g = SurfaceGeometry::new(3, 3, 1.0, 1.0, 0.125).unwrap();
        let c = build_correlation(&g).unwrap();
        let a = draw_channels(&mut trial_rng(7, 42), 9, c.j_sqrt()).unwrap();
        let b = draw_channels(&mut trial_rng(7, 42), 9, c.j_sqrt()).unwrap();
        assert_eq!(a, b);
        let other = draw_channels(&mut trial_rng(7, 43), 9, c.j_sqrt()).unwrap();
        assert_ne!(a.h_f, other.h_f);
    }

    #[test]
    fn batch_matches_single_draws() {
        let g = SurfaceGeometry::new(4, 3, 1.5, 1.0, 0.125).unwrap();
        let c = build_correlation(&g).unwrap();
        let batch = draw_channel_batch(11, 100, 5, c.j_sqrt()).unwrap();
        for (t, r) in batch.iter().enumerate() {
            let single = draw_channels(&mut trial_rng(11, 100 + t as u64), 12, c.j_sqrt()).unwrap();
            assert_eq!(r.h_f, single.h_f);
            assert_eq!(r.h_e, single.h_e);
            for (x, y) in r.u_b.iter().zip(&single.u_b) {
                assert!((x - y).norm() < 1e-12);
            }
        }
        let again = draw_channel_batch(11, 100, 5, c.j_sqrt()).unwrap();
        assert_eq!(batch, again);
    }

    #[test]
    fn dimension_mismatch() {
        let j = DMatrix::identity(3, 3);
        assert!(matches!(draw_channels(&mut trial_rng(0, 0), 4, &j), Err(Error::Dimension { .. })));
    }

    #[test]
    fn unit_power_per_entry() {
        let j = DMatrix::identity(4, 4);
        let n = 100_000;
        let batch = draw_channel_batch(3, 0, n / 4, &j).unwrap();
        let mean: f64 = batch.iter().flat_map(|r| r.h_b.iter()).map(|x| x.norm_sqr()).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn empirical_covariance_matches_correlation() {
        let g = SurfaceGeometry::new(4, 2, 1.0, 0.5, 0.125).unwrap();
        let c = build_correlation(&g).unwrap();
        let n = 100_000;
        let batch = draw_channel_batch(5, 0, n, c.j_sqrt()).unwrap();
        let m = g.len();
        for i in 0..m {
            for l in 0..m {
                let cov: Complex64 = batch.iter().map(|r| r.u_b[i] * r.u_b[l].conj()).sum::<Complex64>() / n as f64;
                assert!((cov.re - c.j()[(i, l)]).abs() < 0.02, "({i},{l}) {cov} vs {}", c.j()[(i, l)]);
                assert!(cov.im.abs() < 0.02);
            }
        }
    }

    #[test]
    fn full_zero_phase_selection_is_the_bilinear_form_in_j() {
        let g = SurfaceGeometry::new(3, 3, 1.2, 0.9, 0.125).unwrap();
        let c = build_correlation(&g).unwrap();
        let cfg = FrisConfiguration::new(SelectionSet::all(9), vec![0.0; 9], ConfigMode::FixedUniform).unwrap();
        for t in 0..20 {
            let r = draw_channels(&mut trial_rng(9, t), 9, c.j_sqrt()).unwrap();
            let h = equivalent_channel(&r, &cfg, Receiver::Eve).unwrap();
            let mut direct = Complex64::new(0.0, 0.0);
            for i in 0..9 {
                for l in 0..9 {
                    direct += r.h_e[i].conj() * c.j()[(i, l)] * r.h_f[l];
                }
            }
            assert!((h - direct).norm() <= 1e-10 * (1.0 + direct.norm()));
        }
    }
}
