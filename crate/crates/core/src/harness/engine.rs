//! Monte Carlo trial engine.
//!
//! Trials are processed in fixed-size blocks. Each trial draws from its own
//! counter-based stream and blocks are collected in order, so the output does
//! not depend on how many workers run them.

use crate::channel::{channel_gain, draw_channel_batch, equivalent_channel, received_snr, trial_rng, LinkBudget, Receiver};
use crate::control::{
    conventional_ris_config, fixed_statistical_config, select_greedy_cophase, FrisConfiguration, PhaseMode, Policy,
};
use crate::error::{Error, Result};
use crate::secrecy::{secrecy_capacity, ExpFit, GammaFit};
use crate::surface::{build_correlation, reduce_correlation, trace_moments, CorrelationMatrix, SurfaceGeometry};
use rayon::prelude::*;

/// Trials per block; part of the reproducibility contract.
pub const BLOCK: usize = 256;

/// Stream reserved for drawing a frozen configuration.
const CONFIG_STREAM: u64 = u64::MAX;

/// One surface with its correlation and configuration policy.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub policy: Policy,
    pub geometry: SurfaceGeometry,
    pub correlation: CorrelationMatrix,
    pub m_on: usize,
    fixed: Option<FrisConfiguration>,
}

impl Scenario {
    /// A fluid surface under `policy`. Fixed policies draw their frozen
    /// configuration once, from a stream reserved for that purpose.
    pub fn fris(geometry: SurfaceGeometry, policy: Policy, m_on: usize, seed: u64) -> Result<Self> {
        let correlation = build_correlation(&geometry)?;
        let m = geometry.len();
        let fixed = match policy {
            Policy::Greedy => {
                if m_on < 1 || m_on > m {
                    return Err(Error::config(format!("M_ON must be in [1, {m}], got {m_on}")));
                }
                None
            }
            Policy::FixedUniform | Policy::FixedRandom => {
                let mode = if policy == Policy::FixedUniform { PhaseMode::Uniform } else { PhaseMode::Random };
                Some(fixed_statistical_config(m, m_on, mode, &mut trial_rng(seed, CONFIG_STREAM))?)
            }
            Policy::Conventional => {
                return Err(Error::config("use Scenario::conventional for the conventional baseline"));
            }
        };
        Ok(Scenario { policy, geometry, correlation, m_on, fixed })
    }

    /// Conventional λ/2 array with all `m_conv` elements ON.
    pub fn conventional(m_conv: usize, wavelength: f64) -> Result<Self> {
        let (geometry, _) = conventional_ris_config(m_conv, wavelength)?;
        let correlation = build_correlation(&geometry)?;
        Ok(Scenario { policy: Policy::Conventional, geometry, correlation, m_on: m_conv, fixed: None })
    }

    pub fn m(&self) -> usize {
        self.geometry.len()
    }

    pub fn fixed_config(&self) -> Option<&FrisConfiguration> {
        self.fixed.as_ref()
    }

    /// Whether the active set changes from one realization to the next.
    pub fn is_adaptive(&self) -> bool {
        self.policy == Policy::Greedy
    }

    fn configure(&self, r: &crate::channel::ChannelRealization) -> Result<FrisConfiguration> {
        match (&self.fixed, self.policy) {
            (Some(cfg), _) => Ok(cfg.clone()),
            (None, Policy::Conventional) => select_greedy_cophase(r, self.m()),
            (None, _) => select_greedy_cophase(r, self.m_on),
        }
    }

    /// `(tr(J̃²), tr(J̃⁴))` of the active submatrix. Fixed and conventional
    /// surfaces have one submatrix; adaptive ones are averaged over the first
    /// `fit_trials` realizations of `seed`.
    pub fn fit_traces(&self, seed: u64, fit_trials: usize) -> Result<(f64, f64)> {
        match (&self.fixed, self.policy) {
            (Some(cfg), _) => Ok(trace_moments(&reduce_correlation(&self.correlation, cfg.selection())?)),
            (None, Policy::Conventional) => Ok(trace_moments(self.correlation.j())),
            (None, _) => {
                if fit_trials < 1 {
                    return Err(Error::config("an adaptive policy needs at least one fit trial"));
                }
                let per_block = map_blocks(seed, fit_trials, self.correlation.j_sqrt(), |r| {
                    let cfg = self.configure(r)?;
                    Ok(trace_moments(&reduce_correlation(&self.correlation, cfg.selection())?))
                })?;
                let n = per_block.len() as f64;
                let (s2, s4) = per_block.iter().fold((0.0, 0.0), |(a, b), (t2, t4)| (a + t2, b + t4));
                Ok((s2 / n, s4 / n))
            }
        }
    }

    /// Moment-matched laws for Bob and Eve.
    pub fn fit(&self, seed: u64, fit_trials: usize) -> Result<(GammaFit, ExpFit)> {
        let (tr2, tr4) = self.fit_traces(seed, fit_trials)?;
        Ok((GammaFit::from_traces(tr2, tr4)?, ExpFit::from_trace(tr2)?))
    }
}

/// Channel power gains of one trial. They do not depend on the link budget,
/// so one set of gains serves a whole SNR sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainSample {
    pub g_b: f64,
    pub g_e: f64,
}

/// Per-trial outcome at one link budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRecord {
    pub g_b: f64,
    pub g_e: f64,
    pub gamma_b: f64,
    pub gamma_e: f64,
    pub c_s: f64,
}

fn map_blocks<T: Send, F>(seed: u64, trials: usize, j_sqrt: &nalgebra::DMatrix<f64>, f: F) -> Result<Vec<T>>
where
    F: Fn(&crate::channel::ChannelRealization) -> Result<T> + Sync,
{
    let blocks = trials.div_ceil(BLOCK);
    let out: Vec<Vec<T>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let first = b * BLOCK;
            let count = BLOCK.min(trials - first);
            draw_channel_batch(seed, first as u64, count, j_sqrt)?.iter().map(&f).collect()
        })
        .collect::<Result<_>>()?;
    Ok(out.into_iter().flatten().collect())
}

/// Bob's and Eve's gains for trials `0..trials`, both under the configuration
/// chosen for Bob.
pub fn simulate_gains(scenario: &Scenario, seed: u64, trials: usize) -> Result<Vec<GainSample>> {
    if trials < 1 {
        return Err(Error::config("trial count must be at least 1"));
    }
    map_blocks(seed, trials, scenario.correlation.j_sqrt(), |r| {
        let cfg = scenario.configure(r)?;
        Ok(GainSample {
            g_b: channel_gain(equivalent_channel(r, &cfg, Receiver::Bob)?),
            g_e: channel_gain(equivalent_channel(r, &cfg, Receiver::Eve)?),
        })
    })
}

pub fn to_records(gains: &[GainSample], budget: &LinkBudget) -> Vec<TrialRecord> {
    gains
        .iter()
        .map(|g| {
            let gamma_b = received_snr(g.g_b, budget, Receiver::Bob);
            let gamma_e = received_snr(g.g_e, budget, Receiver::Eve);
            TrialRecord { g_b: g.g_b, g_e: g.g_e, gamma_b, gamma_e, c_s: secrecy_capacity(gamma_b, gamma_e) }
        })
        .collect()
}

/// Draw, configure and evaluate `trials` realizations at `budget`.
pub fn run_trials(scenario: &Scenario, budget: &LinkBudget, seed: u64, trials: usize) -> Result<Vec<TrialRecord>> {
    Ok(to_records(&simulate_gains(scenario, seed, trials)?, budget))
}

/// Runs `f` on a pool of `workers` threads, or the global pool when zero.
pub fn with_workers<T: Send, F: FnOnce() -> T + Send>(workers: usize, f: F) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}
