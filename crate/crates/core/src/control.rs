//! Surface configuration policies: which elements are ON and with which phases.

use crate::channel::{cascade, ChannelRealization};
use crate::error::{Error, Result};
use crate::surface::{SelectionSet, SurfaceGeometry};
use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

/// Largest number of subsets [`select_exhaustive`] will enumerate.
pub const EXHAUSTIVE_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConfigMode {
    /// Re-selected from Bob's CSI for every realization.
    Adaptive,
    /// Frozen, first `M_ON` elements, all phases zero.
    FixedUniform,
    /// Frozen, random subset with i.i.d. uniform phases.
    FixedRandom,
}

/// Active elements plus their phases. Phases are stored wrapped to [0, 2π).
#[derive(Debug, Clone, PartialEq)]
pub struct FrisConfiguration {
    selection: SelectionSet,
    phases: Vec<f64>,
    mode: ConfigMode,
}

impl FrisConfiguration {
    pub fn new(selection: SelectionSet, phases: Vec<f64>, mode: ConfigMode) -> Result<Self> {
        if phases.len() != selection.len() {
            return Err(Error::Dimension { expected: selection.len(), got: phases.len() });
        }
        if let Some(bad) = phases.iter().find(|p| !p.is_finite()) {
            return Err(Error::domain(format!("phase must be finite, got {bad}")));
        }
        let phases = phases.into_iter().map(wrap_phase).collect();
        Ok(FrisConfiguration { selection, phases, mode })
    }

    pub fn selection(&self) -> &SelectionSet {
        &self.selection
    }
    pub fn phases(&self) -> &[f64] {
        &self.phases
    }
    pub fn mode(&self) -> ConfigMode {
        self.mode
    }
    pub fn m_on(&self) -> usize {
        self.selection.len()
    }
}

fn wrap_phase(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Phase that makes `conj(u) e^{jφ} v` real and non-negative.
pub fn cophase(u: Complex64, v: Complex64) -> f64 {
    wrap_phase(-(u.conj() * v).arg())
}

fn check_m_on(m_on: usize, m: usize) -> Result<()> {
    if m_on < 1 || m_on > m {
        return Err(Error::config(format!("M_ON must be in [1, {m}], got {m_on}")));
    }
    Ok(())
}

fn cophased(realization: &ChannelRealization, mut indices: Vec<usize>, mode: ConfigMode) -> Result<FrisConfiguration> {
    indices.sort_unstable();
    let phases = indices.iter().map(|&m| cophase(realization.u_b[m], realization.v[m])).collect();
    FrisConfiguration::new(SelectionSet::new(indices, realization.len())?, phases, mode)
}

/// Top-`M_ON` elements by `|u_b[m]|·|v[m]|`, each co-phased to Bob. With
/// co-phasing the objective `Σ |u_b||v|` is separable, so this is the best
/// subset of that size. Ties go to the lower index.
pub fn select_greedy_cophase(realization: &ChannelRealization, m_on: usize) -> Result<FrisConfiguration> {
    let m = realization.len();
    check_m_on(m_on, m)?;
    let score: Vec<f64> = (0..m).map(|i| realization.u_b[i].norm() * realization.v[i].norm()).collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| score[b].total_cmp(&score[a]).then(a.cmp(&b)));
    order.truncate(m_on);
    cophased(realization, order, ConfigMode::Adaptive)
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = match acc.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u64::MAX,
        };
    }
    acc
}

/// Brute-force search over all `C(M, M_ON)` subsets, each co-phased, keeping
/// the largest `|H_eq,b|`; the lexicographically smallest subset wins ties.
pub fn select_exhaustive(realization: &ChannelRealization, m_on: usize) -> Result<FrisConfiguration> {
    let m = realization.len();
    check_m_on(m_on, m)?;
    let count = binomial(m as u64, m_on as u64);
    if count > EXHAUSTIVE_BUDGET {
        return Err(Error::config(format!(
            "exhaustive search over C({m}, {m_on}) = {count} subsets exceeds budget {EXHAUSTIVE_BUDGET}"
        )));
    }
    let mut combo: Vec<usize> = (0..m_on).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        let phases: Vec<f64> = combo.iter().map(|&i| cophase(realization.u_b[i], realization.v[i])).collect();
        let h = cascade(&realization.u_b, &realization.v, &combo, &phases).norm();
        if best.as_ref().is_none_or(|(b, _)| h > *b) {
            best = Some((h, combo.clone()));
        }
        // next combination in lexicographic order
        let mut i = m_on;
        while i > 0 && combo[i - 1] == m - m_on + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        combo[i - 1] += 1;
        for j in i..m_on {
            combo[j] = combo[j - 1] + 1;
        }
    }
    let (_, indices) = best.expect("at least one subset");
    cophased(realization, indices, ConfigMode::Adaptive)
}

/// Square λ/2-spaced array with every element ON. Phases are placeholders;
/// the conventional baseline is co-phased to Bob per realization.
pub fn conventional_ris_config(m_conv: usize, wavelength: f64) -> Result<(SurfaceGeometry, FrisConfiguration)> {
    let side = (m_conv as f64).sqrt().round() as usize;
    if m_conv == 0 || side * side != m_conv {
        return Err(Error::config(format!("conventional RIS size must be a perfect square, got {m_conv}")));
    }
    let geometry = SurfaceGeometry::square_with_spacing(side, 0.5, wavelength)?;
    let config = FrisConfiguration::new(SelectionSet::all(m_conv), vec![0.0; m_conv], ConfigMode::Adaptive)?;
    Ok((geometry, config))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseMode {
    Uniform,
    Random,
}

/// Frozen configuration for statistical validation runs.
pub fn fixed_statistical_config<R: Rng + ?Sized>(
    m: usize,
    m_on: usize,
    mode: PhaseMode,
    rng: &mut R,
) -> Result<FrisConfiguration> {
    check_m_on(m_on, m)?;
    match mode {
        PhaseMode::Uniform => FrisConfiguration::new(
            SelectionSet::new((0..m_on).collect(), m)?,
            vec![0.0; m_on],
            ConfigMode::FixedUniform,
        ),
        PhaseMode::Random => {
            let mut indices = rand::seq::index::sample(rng, m, m_on).into_vec();
            indices.sort_unstable();
            let phases = (0..m_on).map(|_| rng.random_range(0.0..TAU)).collect();
            FrisConfiguration::new(SelectionSet::new(indices, m)?, phases, ConfigMode::FixedRandom)
        }
    }
}

/// Configuration policy exposed on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    Greedy,
    FixedUniform,
    FixedRandom,
    Conventional,
}

impl Policy {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::Greedy => "greedy",
            Policy::FixedUniform => "fixed-uniform",
            Policy::FixedRandom => "fixed-random",
            Policy::Conventional => "conventional",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(Policy::Greedy),
            "fixed-uniform" => Ok(Policy::FixedUniform),
            "fixed-random" => Ok(Policy::FixedRandom),
            "conventional" => Ok(Policy::Conventional),
            other => Err(Error::config(format!(
                "unknown policy {other:?} (expected greedy | fixed-uniform | fixed-random | conventional)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_channels, equivalent_channel, trial_rng, Receiver};
    use crate::surface::{build_correlation, reduce_correlation, trace_moments};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::Rng;

    fn realization(mx: usize, mz: usize, seed: u64) -> ChannelRealization {
        let g = SurfaceGeometry::new(mx, mz, 1.5, 1.5, 0.125).unwrap();
        let c = build_correlation(&g).unwrap();
        draw_channels(&mut trial_rng(seed, 0), g.len(), c.j_sqrt()).unwrap()
    }

    fn bob_magnitude(r: &ChannelRealization, cfg: &FrisConfiguration) -> f64 {
        equivalent_channel(r, cfg, Receiver::Bob).unwrap().norm()
    }

    #[test]
    fn greedy_full_selection_is_coherent_sum() {
        let r = realization(3, 3, 1);
        let cfg = select_greedy_cophase(&r, 9).unwrap();
        assert_eq!(cfg.selection().indices(), &(0..9).collect::<Vec<_>>()[..]);
        let h = equivalent_channel(&r, &cfg, Receiver::Bob).unwrap();
        let coherent: f64 = (0..9).map(|m| r.u_b[m].norm() * r.v[m].norm()).sum();
        assert!(h.im.abs() < 1e-12 && h.re >= 0.0);
        assert_relative_eq!(h.re, coherent, max_relative = 1e-12);
    }

    #[test]
    fn greedy_single_is_argmax() {
        let r = realization(3, 3, 2);
        let cfg = select_greedy_cophase(&r, 1).unwrap();
        let best = (0..9)
            .max_by(|&a, &b| (r.u_b[a].norm() * r.v[a].norm()).total_cmp(&(r.u_b[b].norm() * r.v[b].norm())))
            .unwrap();
        assert_eq!(cfg.selection().indices(), &[best]);
    }

    #[test]
    fn greedy_matches_exhaustive_small() {
        for seed in 0..10 {
            let r = realization(4, 2, seed);
            let g = select_greedy_cophase(&r, 3).unwrap();
            let e = select_exhaustive(&r, 3).unwrap();
            assert_relative_eq!(bob_magnitude(&r, &g), bob_magnitude(&r, &e), max_relative = 1e-12);
        }
        let r = realization(2, 1, 3);
        assert_eq!(select_exhaustive(&r, 2).unwrap().selection().indices(), &[0, 1]);
        let r = realization(2, 2, 4);
        assert_eq!(select_exhaustive(&r, 1).unwrap(), select_greedy_cophase(&r, 1).unwrap());
        let r = realization(5, 2, 5);
        let (g, e) = (select_greedy_cophase(&r, 4).unwrap(), select_exhaustive(&r, 4).unwrap());
        assert_relative_eq!(bob_magnitude(&r, &g), bob_magnitude(&r, &e), max_relative = 1e-12);
    }

    #[test]
    fn exhaustive_budget_and_range() {
        let r = realization(6, 5, 0);
        assert!(select_exhaustive(&r, 15).is_err());
        assert!(select_greedy_cophase(&r, 0).is_err());
        assert!(select_greedy_cophase(&r, 31).is_err());
        assert_eq!(binomial(30, 15), 155_117_520);
        assert_eq!(binomial(10, 4), 210);
    }

    #[test]
    fn conventional_geometry() {
        let lambda = 299_792_458.0 / 2.4e9;
        let (g, cfg) = conventional_ris_config(100, lambda).unwrap();
        assert_eq!((g.mx(), g.mz()), (10, 10));
        let (dx, dz) = g.spacing();
        assert_relative_eq!(dx, lambda / 2.0, max_relative = 1e-15);
        assert_relative_eq!(dz, lambda / 2.0, max_relative = 1e-15);
        assert_eq!(cfg.m_on(), 100);
        let (g1, _) = conventional_ris_config(1, lambda).unwrap();
        assert_eq!(build_correlation(&g1).unwrap().j().as_slice(), &[1.0]);
        let (g400, _) = conventional_ris_config(400, lambda).unwrap();
        assert_eq!(g400.aperture_wavelengths(), (10.0, 10.0));
        assert!(conventional_ris_config(50, lambda).is_err());
    }

    #[test]
    fn fixed_uniform_config() {
        let mut rng = trial_rng(0, 0);
        let cfg = fixed_statistical_config(4, 4, PhaseMode::Uniform, &mut rng).unwrap();
        assert_eq!(cfg.selection().indices(), &[0, 1, 2, 3]);
        assert!(cfg.phases().iter().all(|&p| p == 0.0));
        assert_eq!(cfg.mode(), ConfigMode::FixedUniform);
    }

    fn reflection_matrix(j_sqrt: &DMatrix<f64>, cfg: &FrisConfiguration) -> DMatrix<Complex64> {
        let m = j_sqrt.nrows();
        let mut d = DMatrix::<Complex64>::zeros(m, m);
        for (&i, &phi) in cfg.selection().indices().iter().zip(cfg.phases()) {
            d[(i, i)] = Complex64::from_polar(1.0, phi);
        }
        let js = j_sqrt.map(|x| Complex64::new(x, 0.0));
        &js * d * &js
    }

    #[test]
    fn uniform_phases_reproduce_reduced_trace() {
        let g = SurfaceGeometry::new(4, 4, 1.0, 1.0, 0.125).unwrap();
        let c = build_correlation(&g).unwrap();
        let cfg = fixed_statistical_config(16, 6, PhaseMode::Uniform, &mut trial_rng(0, 0)).unwrap();
        let a = reflection_matrix(c.j_sqrt(), &cfg);
        let tr_aah = (&a * a.adjoint()).trace().re;
        let (tr2, _) = trace_moments(&reduce_correlation(&c, cfg.selection()).unwrap());
        assert_relative_eq!(tr_aah, tr2, max_relative = 1e-9);
    }

    #[test]
    fn random_single_phase_is_immaterial() {
        let r = realization(3, 3, 8);
        let mut rng = trial_rng(1, 1);
        let rand_cfg = fixed_statistical_config(9, 1, PhaseMode::Random, &mut rng).unwrap();
        let idx = rand_cfg.selection().indices().to_vec();
        let zero = FrisConfiguration::new(SelectionSet::new(idx, 9).unwrap(), vec![0.0], ConfigMode::FixedUniform).unwrap();
        for rx in [Receiver::Bob, Receiver::Eve] {
            let a = equivalent_channel(&r, &rand_cfg, rx).unwrap().norm();
            let b = equivalent_channel(&r, &zero, rx).unwrap().norm();
            assert_relative_eq!(a, b, max_relative = 1e-13);
        }
    }

    #[test]
    fn policy_names_round_trip() {
        for p in [Policy::Greedy, Policy::FixedUniform, Policy::FixedRandom, Policy::Conventional] {
            assert_eq!(p.name().parse::<Policy>().unwrap(), p);
        }
        assert!("best".parse::<Policy>().is_err());
    }

    #[test]
    fn phases_are_wrapped() {
        let cfg = FrisConfiguration::new(SelectionSet::all(2), vec![-0.5, 7.0], ConfigMode::Adaptive).unwrap();
        assert!(cfg.phases().iter().all(|&p| (0.0..TAU).contains(&p)));
        assert!(FrisConfiguration::new(SelectionSet::all(2), vec![0.0], ConfigMode::Adaptive).is_err());
        assert!(FrisConfiguration::new(SelectionSet::all(1), vec![f64::NAN], ConfigMode::Adaptive).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn greedy_is_optimal_up_to_twelve(mx in 1usize..5, mz in 1usize..4, seed in any::<u64>(), frac in 0.0f64..1.0) {
            let r = realization(mx, mz, seed);
            let m = r.len();
            let m_on = 1 + ((m - 1) as f64 * frac) as usize;
            let g = select_greedy_cophase(&r, m_on).unwrap();
            let e = select_exhaustive(&r, m_on).unwrap();
            let (hg, he) = (bob_magnitude(&r, &g), bob_magnitude(&r, &e));
            prop_assert!((hg - he).abs() <= 1e-12 * he.max(1e-300));
        }

        #[test]
        fn cophasing_beats_any_phase_vector(seed in any::<u64>(), phase_seed in any::<u64>()) {
            let r = realization(3, 3, seed);
            let cfg = select_greedy_cophase(&r, 5).unwrap();
            let mut prng = trial_rng(phase_seed, 0);
            let phases: Vec<f64> = (0..5).map(|_| prng.random_range(0.0..TAU)).collect();
            let other = FrisConfiguration::new(cfg.selection().clone(), phases, ConfigMode::FixedRandom).unwrap();
            prop_assert!(bob_magnitude(&r, &cfg) >= bob_magnitude(&r, &other) * (1.0 - 1e-12));
        }
    }
}
