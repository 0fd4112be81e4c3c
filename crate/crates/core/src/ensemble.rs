//! Ensemble excess-distortion probability `P_e,n(M)`.
//!
//! Three routes: conditional Monte Carlo over the source power (the codebook
//! is integrated out exactly), deterministic quadrature when the power has a
//! closed-form law, and brute-force random-codebook simulation for small `M`.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::rd_function;
use crate::error::{domain, Error, Result};
use crate::rng::{chunk_sizes, pairwise_sum, stream_rng};
use crate::shellprob::{ln_psi, ln_upsilon, CodebookKind, DistortionSetup};
use crate::sources::{GammaLaw, SourceModel};
use crate::specfun::{ln1m_exp, log_add_exp, Probability};

/// Largest codebook `pe_direct` will build.
pub const MAX_DIRECT_CODEWORDS: usize = 1 << 20;
pub const DEFAULT_SAMPLES: usize = 100_000;
pub const DEFAULT_STREAMS: usize = 64;

/// Tails of the power law beyond `e^{TAIL_LN}` are dropped by the quadrature.
const TAIL_LN: f64 = -740.0;

/// Panel-level relative tolerance. The integrand `(1 − P)^M f_Z` amplifies
/// last-digit noise in `ln P` by up to `M·P`, so tighter targets only chase
/// rounding.
const QUAD_REL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimateMethod {
    Conditional,
    Quadrature,
    Direct,
}

impl EstimateMethod {
    pub fn name(self) -> &'static str {
        match self {
            EstimateMethod::Conditional => "conditional",
            EstimateMethod::Quadrature => "quadrature",
            EstimateMethod::Direct => "direct",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleEstimate {
    pub value: Probability,
    /// `ln value`, kept separately because values far below `f64::MIN_POSITIVE`
    /// still matter for exponents.
    pub ln_value: f64,
    /// Zero for quadrature.
    pub std_error: f64,
    pub method: EstimateMethod,
    pub n: usize,
    pub log_m: f64,
    pub kind: CodebookKind,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimPlan {
    pub n: usize,
    /// `ln M` in nats.
    pub log_m: f64,
    pub kind: CodebookKind,
    pub samples: usize,
    pub seed: u64,
    pub worker_streams: usize,
}

impl SimPlan {
    pub fn new(n: usize, log_m: f64, kind: CodebookKind) -> Self {
        SimPlan {
            n,
            log_m,
            kind,
            samples: DEFAULT_SAMPLES,
            seed: 0,
            worker_streams: DEFAULT_STREAMS,
        }
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_streams(mut self, worker_streams: usize) -> Self {
        self.worker_streams = worker_streams;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let min_n = match self.kind {
            CodebookKind::Spherical => 2,
            CodebookKind::IidGaussian => 1,
        };
        if self.n < min_n {
            return Err(Error::Config(format!(
                "n must be >= {min_n} for the {} codebook, got {}",
                self.kind.name(),
                self.n
            )));
        }
        if !(self.log_m.is_finite() && self.log_m >= 0.0) {
            return Err(Error::Config(format!("log_m must be finite and >= 0, got {}", self.log_m)));
        }
        if self.samples < 100 {
            return Err(Error::Config(format!("samples must be >= 100, got {}", self.samples)));
        }
        if self.worker_streams == 0 {
            return Err(Error::Config("worker_streams must be >= 1".into()));
        }
        Ok(())
    }
}

/// `ln P(n, z)` for the chosen ensemble.
fn ln_cover(setup: &DistortionSetup, kind: CodebookKind, n: usize, z: f64) -> f64 {
    match kind {
        CodebookKind::Spherical => {
            if z > 0.0 {
                ln_psi(setup, n, z)
            } else {
                f64::NEG_INFINITY
            }
        }
        CodebookKind::IidGaussian => ln_upsilon(setup, n, z.max(0.0)),
    }
}

/// `ln (1 − P)^M` with `P = e^{ln_p}` and `M = e^{log_m}`, never forming `M`.
pub fn ln_miss_all(ln_p: f64, log_m: f64) -> f64 {
    if ln_p == f64::NEG_INFINITY {
        return 0.0;
    }
    if ln_p >= 0.0 {
        return f64::NEG_INFINITY;
    }
    // w = −ln(1 − P) = P (1 + P/2 + P²/3 + …)
    let ln_w = if ln_p < -30.0 {
        ln_p + 0.5 * ln_p.exp()
    } else {
        (-ln1m_exp(ln_p)).ln()
    };
    -(log_m + ln_w).exp()
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    if max == f64::INFINITY {
        return max;
    }
    max + pairwise_sum(&values.iter().map(|v| (v - max).exp()).collect::<Vec<_>>()).ln()
}

/// Conditional Monte Carlo: `E_Z[(1 − P(n, Z))^M]` over sampled powers.
pub fn pe_conditional(
    model: &SourceModel,
    setup: &DistortionSetup,
    plan: &SimPlan,
) -> Result<EnsembleEstimate> {
    plan.validate()?;
    let chunks = chunk_sizes(plan.samples, plan.worker_streams);
    let per_stream: Vec<(f64, f64, f64)> = chunks
        .par_iter()
        .enumerate()
        .map(|(stream, &count)| {
            let mut rng = stream_rng(plan.seed, stream as u64);
            let mut ln_v = Vec::with_capacity(count);
            for _ in 0..count {
                let z = model.sample_power_with(plan.n, &mut rng);
                ln_v.push(ln_miss_all(ln_cover(setup, plan.kind, plan.n, z), plan.log_m));
            }
            let v: Vec<f64> = ln_v.iter().map(|l| l.exp()).collect();
            let sq: Vec<f64> = v.iter().map(|x| x * x).collect();
            (log_sum_exp(&ln_v), pairwise_sum(&v), pairwise_sum(&sq))
        })
        .collect();
    let total = plan.samples as f64;
    let ln_sum = log_sum_exp(&per_stream.iter().map(|p| p.0).collect::<Vec<_>>());
    let sum = pairwise_sum(&per_stream.iter().map(|p| p.1).collect::<Vec<_>>());
    let sum_sq = pairwise_sum(&per_stream.iter().map(|p| p.2).collect::<Vec<_>>());
    let mean = sum / total;
    let var = ((sum_sq - total * mean * mean) / (total - 1.0)).max(0.0);
    let ln_value = (ln_sum - total.ln()).min(0.0);
    Ok(EnsembleEstimate {
        value: Probability::saturating(mean),
        ln_value,
        std_error: (var / total).sqrt(),
        method: EstimateMethod::Conditional,
        n: plan.n,
        log_m: plan.log_m,
        kind: plan.kind,
        seed: plan.seed,
    })
}

/// Deterministic quadrature of `∫ (1 − P(n, z))^M f_Z(z) dz`; for the
/// spherical ensemble the region outside `[r1², r2²]` contributes its whole
/// probability mass.
pub fn pe_quadrature(
    model: &SourceModel,
    setup: &DistortionSetup,
    plan: &SimPlan,
) -> Result<EnsembleEstimate> {
    plan.validate()?;
    let law = model.power_density(plan.n).ok_or_else(|| {
        Error::Capability(format!(
            "no closed-form power density for {} sources; use the conditional estimator",
            model.kind_name()
        ))
    })?;
    let ln_value = ln_quadrature(&law, setup, plan.kind, plan.n, plan.log_m).min(0.0);
    Ok(EnsembleEstimate {
        value: Probability::saturating(ln_value.exp()),
        ln_value,
        std_error: 0.0,
        method: EstimateMethod::Quadrature,
        n: plan.n,
        log_m: plan.log_m,
        kind: plan.kind,
        seed: plan.seed,
    })
}

/// `ln(Pr{Z < r1²} + Pr{Z > r2²})`: the spherical floor.
pub fn ln_spherical_floor(law: &GammaLaw, setup: &DistortionSetup) -> f64 {
    let below = if setup.r1() > 0.0 { law.ln_cdf(setup.r1_sq()) } else { f64::NEG_INFINITY };
    log_add_exp(below, law.ln_sf(setup.r2_sq()))
}

fn ln_quadrature(
    law: &GammaLaw,
    setup: &DistortionSetup,
    kind: CodebookKind,
    n: usize,
    log_m: f64,
) -> f64 {
    let z_lo = law.lower_quantile_ln(TAIL_LN);
    let z_hi = law.upper_quantile_ln(TAIL_LN);
    let (a, b, floor) = match kind {
        CodebookKind::Spherical => (
            z_lo.max(setup.shell_lo()),
            z_hi.min(setup.r2_sq()),
            ln_spherical_floor(law, setup),
        ),
        CodebookKind::IidGaussian => (z_lo, z_hi, f64::NEG_INFINITY),
    };
    if !(b > a) {
        return floor;
    }
    let g = |z: f64| ln_miss_all(ln_cover(setup, kind, n, z), log_m) + law.ln_pdf(z);
    log_add_exp(floor, ln_integrate(&g, a, b))
}

/// `ln ∫_a^b e^{g(z)} dz` by adaptive Gauss–Kronrod (7/15) on the integrand
/// rescaled by its peak.
fn ln_integrate(g: &(dyn Fn(f64) -> f64 + Sync), a: f64, b: f64) -> f64 {
    const GRID: usize = 512;
    let h = (b - a) / GRID as f64;
    let nodes: Vec<f64> = (0..=GRID).map(|i| a + h * i as f64).collect();
    let vals: Vec<f64> = nodes.iter().map(|&z| g(z)).collect();
    let (peak_idx, mut peak) = vals
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best });
    if peak == f64::NEG_INFINITY {
        return peak;
    }
    // Sharpen the scale near the peak so the rescaled integrand stays O(1).
    let lo = nodes[peak_idx.saturating_sub(1)];
    let hi = nodes[(peak_idx + 1).min(GRID)];
    for k in 1..64 {
        peak = peak.max(g(lo + (hi - lo) * k as f64 / 64.0));
    }
    let f = |z: f64| (g(z) - peak).exp();
    let live: Vec<usize> = (0..GRID)
        .filter(|&i| {
            vals[i] - peak > -745.0 || vals[i + 1] - peak > -745.0 || {
                // Keep panels whose endpoints are negligible but whose interior may not be.
                let mid = 0.5 * (nodes[i] + nodes[i + 1]);
                g(mid) - peak > -745.0
            }
        })
        .collect();
    // A coarse pass fixes the absolute error budget, so refinement never
    // chases rounding noise in panels that do not matter.
    let coarse: Vec<(f64, f64)> =
        live.par_iter().map(|&i| gk15(&f, nodes[i], nodes[i + 1])).collect();
    let rough = pairwise_sum(&coarse.iter().map(|p| p.0).collect::<Vec<_>>());
    if !(rough > 0.0) {
        return f64::NEG_INFINITY;
    }
    let budget = 1e-10 * rough / live.len() as f64;
    let panels: Vec<f64> = live
        .par_iter()
        .zip(&coarse)
        .map(|(&i, &(whole, err))| {
            if err <= budget.max(QUAD_REL * whole.abs()) {
                whole
            } else {
                adaptive_gk(&f, nodes[i], nodes[i + 1], budget, 30).0
            }
        })
        .collect();
    let total = pairwise_sum(&panels);
    if total > 0.0 {
        peak + total.ln()
    } else {
        f64::NEG_INFINITY
    }
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const K15_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const G7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = K15_WEIGHTS[7] * fc;
    let mut gauss = G7_WEIGHTS[3] * fc;
    for i in 0..7 {
        let s = f(c - r * GK_NODES[i]) + f(c + r * GK_NODES[i]);
        kronrod += K15_WEIGHTS[i] * s;
        if i % 2 == 1 {
            gauss += G7_WEIGHTS[i / 2] * s;
        }
    }
    (kronrod * r, ((kronrod - gauss) * r).abs())
}

/// Returns (integral, error estimate); stops at relative error `QUAD_REL` or
/// absolute error `abs_tol`.
fn adaptive_gk(f: &dyn Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64, depth: u32) -> (f64, f64) {
    let (whole, err) = gk15(f, a, b);
    if err <= (QUAD_REL * whole.abs()).max(abs_tol) || depth == 0 {
        return (whole, err);
    }
    let m = 0.5 * (a + b);
    let (l, el) = adaptive_gk(f, a, m, 0.5 * abs_tol, depth - 1);
    let (r, er) = adaptive_gk(f, m, b, 0.5 * abs_tol, depth - 1);
    (l + r, el + er)
}

/// Brute-force random-codebook simulation with minimum-distance encoding.
#[allow(clippy::too_many_arguments)]
pub fn pe_direct(
    model: &SourceModel,
    setup: &DistortionSetup,
    n: usize,
    m_count: usize,
    trials: usize,
    seed: u64,
    kind: CodebookKind,
) -> Result<EnsembleEstimate> {
    if m_count > MAX_DIRECT_CODEWORDS {
        return Err(Error::Resource(format!(
            "m_count = {m_count} exceeds the brute-force limit of {MAX_DIRECT_CODEWORDS}"
        )));
    }
    if m_count == 0 {
        return domain("m_count must be >= 1");
    }
    if n == 0 || trials == 0 {
        return domain("pe_direct requires n >= 1 and trials >= 1");
    }
    let threshold = n as f64 * setup.distortion();
    let radius = (n as f64 * setup.p_y()).sqrt();
    let sd = setup.p_y().sqrt();
    let chunks = chunk_sizes(trials, DEFAULT_STREAMS);
    let excess: usize = chunks
        .par_iter()
        .enumerate()
        .map(|(stream, &count)| {
            let mut rng = stream_rng(seed, stream as u64);
            let mut y = vec![0.0; n];
            let mut hits = 0;
            for _ in 0..count {
                let x = model.sample_block_with(n, &mut rng);
                let mut covered = false;
                // Codewords are i.i.d., so stopping at the first one within
                // distortion does not change the excess event.
                for _ in 0..m_count {
                    for v in y.iter_mut() {
                        *v = StandardNormal.sample(&mut rng);
                    }
                    let scale = match kind {
                        CodebookKind::Spherical => {
                            radius / y.iter().map(|v| v * v).sum::<f64>().sqrt()
                        }
                        CodebookKind::IidGaussian => sd,
                    };
                    let dist: f64 = x.iter().zip(&y).map(|(a, b)| (a - scale * b).powi(2)).sum();
                    if dist <= threshold {
                        covered = true;
                        break;
                    }
                }
                if !covered {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let p = excess as f64 / trials as f64;
    Ok(EnsembleEstimate {
        value: Probability::saturating(p),
        ln_value: p.ln(),
        std_error: (p * (1.0 - p) / trials as f64).sqrt(),
        method: EstimateMethod::Direct,
        n,
        log_m: (m_count as f64).ln(),
        kind,
        seed,
    })
}

/// One point of a moderate-deviations sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MdPoint {
    pub n: usize,
    /// Rate back-off `ξ_n = n^{−t}`.
    pub xi: f64,
    pub estimate: EnsembleEstimate,
    /// `−ln P_e / (n ξ_n²)`.
    pub measured: f64,
}

/// Sets `ln M = n (R(σ², D) + n^{−t})` for each `n` and reports the normalized
/// exponent, which should approach `1/(2V)`. Quadrature is used when the power
/// law is known, conditional Monte Carlo otherwise.
pub fn md_probe(
    model: &SourceModel,
    setup: &DistortionSetup,
    t_exponent: f64,
    n_grid: &[usize],
    seed: u64,
    kind: CodebookKind,
) -> Result<Vec<MdPoint>> {
    if !(t_exponent > 0.0 && t_exponent < 0.5) {
        return domain(format!(
            "t must lie in (0, 0.5) so that the back-off vanishes slower than sqrt(ln n / n), got {t_exponent}"
        ));
    }
    let m = model.moments()?;
    if m.degenerate || m.dispersion <= 0.0 {
        return Err(Error::DegenerateSource(
            "moderate deviations need a positive dispersion".into(),
        ));
    }
    let rd = rd_function(setup.sigma2(), setup.distortion())?;
    n_grid
        .iter()
        .map(|&n| {
            let xi = (n as f64).powf(-t_exponent);
            let plan = SimPlan::new(n, n as f64 * (rd + xi), kind).with_seed(seed);
            let estimate = match pe_quadrature(model, setup, &plan) {
                Err(Error::Capability(_)) => pe_conditional(model, setup, &plan)?,
                other => other?,
            };
            let measured = -estimate.ln_value / (n as f64 * xi * xi);
            Ok(MdPoint { n, xi, estimate, measured })
        })
        .collect()
}
