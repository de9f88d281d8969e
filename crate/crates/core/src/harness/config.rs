//! Experiment configuration, read from TOML. Every key has a default, so an
//! empty file reproduces the reference scenario.

use crate::channel::LinkBudget;
use crate::control::Policy;
use crate::error::{Error, Result};
use crate::secrecy::SecrecyTarget;
use crate::surface::SurfaceGeometry;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Monte Carlo trials per sweep point.
    pub trials: usize,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    pub policy: Policy,
    /// Target secrecy rate R_s in bits/s/Hz.
    pub rate: f64,
    /// Realizations averaged to fit the gain laws under an adaptive policy.
    pub fit_trials: usize,
    pub out: Option<PathBuf>,
    pub surface: SurfaceConfig,
    pub link: LinkConfig,
    pub sweep: SweepConfig,
    pub validation: ValidationConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurfaceConfig {
    pub carrier_hz: f64,
    pub mx: usize,
    pub mz: usize,
    /// Aperture `[W_x, W_z]` in wavelengths.
    pub aperture_wl: [f64; 2],
    /// Active elements, one FRIS curve per entry.
    pub m_on: Vec<usize>,
    /// Conventional baseline sizes, one curve per entry; each a perfect square.
    pub m_conv: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkConfig {
    pub rho: f64,
    pub alpha: f64,
    pub d_f: f64,
    pub d_b: f64,
    pub d_e: f64,
    pub power_dbm: f64,
    pub noise_b_dbm: f64,
    pub noise_e_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Bob's average SNR `P / σ²_b` in dB.
    pub snr_db: Vec<f64>,
    /// Surface sizes `[M_x, M_z]` for the size sweep, at the configured aperture.
    pub sizes: Vec<[usize; 2]>,
    pub size_m_on: usize,
    pub size_m_conv: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationConfig {
    pub mx: usize,
    pub mz: usize,
    pub m_on: Vec<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 2025,
            trials: 100_000,
            workers: 0,
            policy: Policy::Greedy,
            rate: 1.0,
            fit_trials: 2_000,
            out: None,
            surface: SurfaceConfig::default(),
            link: LinkConfig::default(),
            sweep: SweepConfig::default(),
            validation: ValidationConfig::default(),
        }
    }
}

impl Default for SurfaceConfig {
    fn default() -> Self {
        SurfaceConfig {
            carrier_hz: 2.4e9,
            mx: 20,
            mz: 20,
            aperture_wl: [3.0, 3.0],
            m_on: vec![100],
            m_conv: vec![100],
        }
    }
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            rho: 1.0,
            alpha: 2.5,
            d_f: 20.0,
            d_b: 30.0,
            d_e: 30.0,
            power_dbm: 30.0,
            noise_b_dbm: -90.0,
            noise_e_dbm: -80.0,
        }
    }
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            snr_db: (0..=12).map(|i| 60.0 + 5.0 * i as f64).collect(),
            sizes: (5..=10).map(|s| [2 * s, 2 * s]).collect(),
            size_m_on: 64,
            size_m_conv: 64,
        }
    }
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig { mx: 10, mz: 10, m_on: vec![10, 50, 100] }
    }
}

fn strictly_increasing<T: PartialOrd>(xs: &[T]) -> bool {
    xs.windows(2).all(|w| w[0] < w[1])
}

fn check_square(m: usize, what: &str) -> Result<()> {
    let side = (m as f64).sqrt().round() as usize;
    if m == 0 || side * side != m {
        return Err(Error::config(format!("{what} must be a positive perfect square, got {m}")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::config("trial count must be at least 1"));
        }
        if !(self.surface.carrier_hz > 0.0) {
            return Err(Error::config("carrier frequency must be positive"));
        }
        SecrecyTarget::new(self.rate)?;
        self.link_budget()?;
        let geometry = self.fris_geometry()?;
        if self.surface.m_on.is_empty() {
            return Err(Error::config("surface.m_on must list at least one value"));
        }
        for &m_on in &self.surface.m_on {
            if m_on < 1 || m_on > geometry.len() {
                return Err(Error::config(format!("M_ON = {m_on} outside [1, {}]", geometry.len())));
            }
        }
        for &m in &self.surface.m_conv {
            check_square(m, "conventional size")?;
        }
        if self.sweep.snr_db.is_empty() || !strictly_increasing(&self.sweep.snr_db) {
            return Err(Error::config("sweep.snr_db must be nonempty and strictly increasing"));
        }
        if self.sweep.snr_db.iter().any(|x| !x.is_finite()) {
            return Err(Error::config("sweep.snr_db must be finite"));
        }
        let sizes: Vec<usize> = self.sweep.sizes.iter().map(|[x, z]| x * z).collect();
        if sizes.is_empty() || !strictly_increasing(&sizes) || sizes[0] == 0 {
            return Err(Error::config("sweep.sizes must be nonempty with strictly increasing M"));
        }
        if self.sweep.size_m_on < 1 || self.sweep.size_m_on > sizes[0] {
            return Err(Error::config(format!(
                "sweep.size_m_on = {} must be in [1, {}] (the smallest swept surface)",
                self.sweep.size_m_on, sizes[0]
            )));
        }
        check_square(self.sweep.size_m_conv, "sweep.size_m_conv")?;
        let vm = self.validation.mx * self.validation.mz;
        if vm == 0 || self.validation.m_on.is_empty() || self.validation.m_on.iter().any(|&k| k < 1 || k > vm) {
            return Err(Error::config(format!("validation.m_on entries must be in [1, {vm}]")));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.surface.carrier_hz
    }

    pub fn geometry(&self, mx: usize, mz: usize) -> Result<SurfaceGeometry> {
        let [wx, wz] = self.surface.aperture_wl;
        SurfaceGeometry::new(mx, mz, wx, wz, self.wavelength()).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn fris_geometry(&self) -> Result<SurfaceGeometry> {
        self.geometry(self.surface.mx, self.surface.mz)
    }

    pub fn link_budget(&self) -> Result<LinkBudget> {
        let l = &self.link;
        LinkBudget::from_dbm(l.rho, l.alpha, l.d_f, l.d_b, l.d_e, l.power_dbm, l.noise_b_dbm, l.noise_e_dbm)
    }

    pub fn target(&self) -> SecrecyTarget {
        SecrecyTarget { r_s: self.rate }
    }

    /// Default TOML, with every key spelled out.
    pub fn default_toml() -> String {
        toml::to_string_pretty(&ExperimentConfig::default()).expect("default config serializes")
    }
}
