use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// How [`integrate_semi_infinite`] treats the half line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuadratureScheme {
    /// Adaptive Gauss-Kronrod (7/15) on u ∈ [0, 1) with x = -scale·ln(1 - u).
    /// `scale` should be of the order of the integrand's decay length.
    AdaptiveExp { scale: f64 },
    /// Fixed-node Gauss-Laguerre; the estimate is checked against the
    /// half-size rule.
    GaussLaguerre { nodes: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub scheme: QuadratureScheme,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl QuadratureSpec {
    pub fn adaptive(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Self {
        QuadratureSpec {
            scheme: QuadratureScheme::AdaptiveExp { scale: 1.0 },
            abs_tol,
            rel_tol,
            max_subdivisions,
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scheme = QuadratureScheme::AdaptiveExp { scale };
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(Error::domain("quadrature tolerances must be positive"));
        }
        if self.max_subdivisions < 1 {
            return Err(Error::domain("quadrature needs at least one subdivision"));
        }
        match self.scheme {
            QuadratureScheme::AdaptiveExp { scale } if !(scale > 0.0) || !scale.is_finite() => {
                Err(Error::domain(format!("quadrature scale must be positive, got {scale}")))
            }
            QuadratureScheme::GaussLaguerre { nodes } if !(16..=128).contains(&nodes) => Err(
                Error::domain(format!("Gauss-Laguerre node count must be in [16, 128], got {nodes}")),
            ),
            _ => Ok(()),
        }
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec::adaptive(1e-300, 1e-12, 4000)
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kron * half, ((kron - gauss) * half).abs())
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive Gauss-Kronrod on a finite interval.
pub fn integrate_finite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64> {
    spec.validate()?;
    if a == b {
        return Ok(0.0);
    }
    let (value, err) = kronrod(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, err });
    let mut total = value;
    let mut total_err = err;
    for _ in 0..spec.max_subdivisions {
        if !total.is_finite() {
            return Err(Error::Numeric(format!("non-finite quadrature estimate on [{a}, {b}]")));
        }
        if total_err <= spec.abs_tol.max(spec.rel_tol * total.abs()) {
            return Ok(total);
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval cannot be split further in double precision
            heap.push(Segment { err: 0.0, ..worst });
            total_err = heap.iter().map(|s| s.err).sum();
            continue;
        }
        let (lv, le) = kronrod(&f, worst.a, mid);
        let (rv, re) = kronrod(&f, mid, worst.b);
        heap.push(Segment { a: worst.a, b: mid, value: lv, err: le });
        heap.push(Segment { a: mid, b: worst.b, value: rv, err: re });
        // re-sum from the heap to keep rounding drift out of the running totals
        total = heap.iter().map(|s| s.value).sum();
        total_err = heap.iter().map(|s| s.err).sum();
    }
    if total_err <= spec.abs_tol.max(spec.rel_tol * total.abs()) {
        return Ok(total);
    }
    Err(Error::Convergence {
        what: "adaptive quadrature",
        estimate: total,
        error_bound: total_err,
    })
}

/// ∫_0^∞ f(x) dx for integrands decaying at least exponentially.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(f: F, spec: &QuadratureSpec) -> Result<f64> {
    spec.validate()?;
    match spec.scheme {
        QuadratureScheme::AdaptiveExp { scale } => {
            let g = |u: f64| {
                let one_minus = 1.0 - u;
                if one_minus <= 0.0 {
                    return 0.0;
                }
                let x = -scale * (-u).ln_1p();
                let v = f(x);
                if v == 0.0 {
                    0.0
                } else {
                    v * scale / one_minus
                }
            };
            integrate_finite(g, 0.0, 1.0, spec)
        }
        QuadratureScheme::GaussLaguerre { nodes } => {
            let full = gauss_laguerre(&f, nodes)?;
            let half = gauss_laguerre(&f, (nodes / 2).max(8))?;
            let err = (full - half).abs();
            if err <= spec.abs_tol.max(spec.rel_tol * full.abs()) {
                Ok(full)
            } else {
                Err(Error::Convergence {
                    what: "Gauss-Laguerre quadrature",
                    estimate: full,
                    error_bound: err,
                })
            }
        }
    }
}

fn gauss_laguerre<F: Fn(f64) -> f64>(f: &F, n: usize) -> Result<f64> {
    let (nodes, weights) = laguerre_rule(n)?;
    Ok(nodes.iter().zip(&weights).map(|(&x, &w)| w * f(x)).sum())
}

/// Nodes and weights (already multiplied by e^{x}) of the n-point Gauss-Laguerre rule.
fn laguerre_rule(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let nf = n as f64;
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut z = 0.0;
    for i in 0..n {
        z = match i {
            0 => 3.0 / (1.0 + 2.4 * nf),
            1 => z + 15.0 / (1.0 + 2.5 * nf),
            _ => {
                let ai = (i - 1) as f64;
                z + (1.0 + 2.55 * ai) / (1.9 * ai) * (z - nodes[i - 2])
            }
        };
        let mut converged = false;
        let mut pp = 0.0;
        let mut p2 = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j as f64 + 1.0 - z) * p2 - j as f64 * p3) / (j as f64 + 1.0);
            }
            pp = nf * (p1 - p2) / z;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 3e-14 * z.abs() {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Numeric(format!("Gauss-Laguerre root {i} of {n} did not converge")));
        }
        nodes.push(z);
        // w_i e^{x_i}, kept in log form until the end to dodge underflow
        let w = -1.0 / (pp * nf * p2);
        weights.push((w.ln() + z).exp());
    }
    Ok((nodes, weights))
}
