//! Memoryless source models: moments, the cumulant generating function of
//! X², its convex conjugate, and seeded samplers for blocks and block power.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::rng::{stream_rng, StreamRng};
use crate::specfun::{lgamma, ln_gamma_p, ln_gamma_q, q_func};

const PMF_TOL: f64 = 1e-12;

/// User-supplied source. Only the sampler and the CGF of X² are mandatory;
/// moments that are not provided make [`SourceModel::moments`] fail.
pub trait CustomSource: Send + Sync + fmt::Debug {
    fn sample(&self, rng: &mut StreamRng) -> f64;

    /// `ln E[exp(theta X²)]`, `f64::INFINITY` outside the finiteness domain.
    fn cgf_x2(&self, theta: f64) -> f64;

    fn second_moment(&self) -> Option<f64> {
        None
    }

    fn fourth_moment(&self) -> Option<f64> {
        None
    }

    /// E[X⁶]; unknown is reported as infinite.
    fn sixth_moment(&self) -> Extended {
        Extended::Infinite
    }

    fn third_abs_central_moment_x2(&self) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone)]
enum Kind {
    Discrete(Discrete),
    Gaussian { variance: f64 },
    /// `scale` is the Rayleigh parameter s² in the density (x/s²) e^{-x²/(2s²)},
    /// so E[X²] = 2·scale.
    Rayleigh { scale: f64 },
    Custom(Arc<dyn CustomSource>),
}

#[derive(Debug, Clone)]
struct Discrete {
    support: Vec<f64>,
    pmf: Vec<f64>,
    cdf: Vec<f64>,
    max_x2: f64,
}

/// An immutable memoryless source; cheap to clone and share across threads.
#[derive(Debug, Clone)]
pub struct SourceModel {
    kind: Kind,
}

/// Moments of a source and the derived mismatched dispersion.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MomentSummary {
    /// E[X²].
    pub sigma2: f64,
    /// E[X⁴].
    pub zeta: f64,
    /// E[X⁶]; only its finiteness is relied upon.
    pub sixth: Extended,
    /// E|X² − σ²|³, when known.
    pub t_abs3: Option<f64>,
    /// Var[X²] = ζ − σ⁴.
    pub var_x2: f64,
    /// (ζ − σ⁴) / (4σ⁴).
    pub dispersion: f64,
    /// Set when Var[X²] vanishes (|X| constant).
    pub degenerate: bool,
}

/// One evaluation of the conjugate `sup_{θ ≥ 0} {θt − Λ(θ)}`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LegendrePoint {
    pub t: f64,
    pub theta_star: Extended,
    pub value: Extended,
}

/// Gamma law with the given shape and scale; the law of the block power Z
/// for Gaussian and Rayleigh sources.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaLaw {
    pub shape: f64,
    pub scale: f64,
}

impl SourceModel {
    pub fn discrete(support: Vec<f64>, pmf: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::Config("field `support` must be non-empty".into()));
        }
        if support.len() != pmf.len() {
            return Err(Error::Config(format!(
                "field `pmf` has {} entries but `support` has {}",
                pmf.len(),
                support.len()
            )));
        }
        if let Some(x) = support.iter().find(|x| !x.is_finite()) {
            return Err(Error::Config(format!("field `support` contains non-finite value {x}")));
        }
        if let Some(p) = pmf.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::Config(format!("field `pmf` contains invalid probability {p}")));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > PMF_TOL {
            return Err(Error::Config(format!("field `pmf` sums to {total}, expected 1")));
        }
        let second: f64 = support.iter().zip(&pmf).map(|(x, p)| p * x * x).sum();
        if second <= 0.0 {
            return Err(Error::Config("source must have E[X^2] > 0".into()));
        }
        let mut acc = 0.0;
        let cdf = pmf
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        let max_x2 = support
            .iter()
            .zip(&pmf)
            .filter(|(_, p)| **p > 0.0)
            .map(|(x, _)| x * x)
            .fold(0.0, f64::max);
        Ok(SourceModel { kind: Kind::Discrete(Discrete { support, pmf, cdf, max_x2 }) })
    }

    pub fn gaussian(variance: f64) -> Result<Self> {
        if !(variance.is_finite() && variance > 0.0) {
            return Err(Error::Config(format!("field `variance` must be > 0, got {variance}")));
        }
        Ok(SourceModel { kind: Kind::Gaussian { variance } })
    }

    pub fn rayleigh(scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::Config(format!("field `scale` must be > 0, got {scale}")));
        }
        Ok(SourceModel { kind: Kind::Rayleigh { scale } })
    }

    /// Rayleigh source normalized so that E[X²] = `sigma2`.
    pub fn rayleigh_with_power(sigma2: f64) -> Result<Self> {
        Self::rayleigh(sigma2 / 2.0)
    }

    pub fn custom(source: Arc<dyn CustomSource>) -> Self {
        SourceModel { kind: Kind::Custom(source) }
    }

    /// The ternary source {a, 2a, 3a}, a² = 0.3σ², pmf (1/2, 1/3, 1/6).
    pub fn ternary_example(sigma2: f64) -> Result<Self> {
        let a = (0.3 * sigma2).sqrt();
        Self::discrete(vec![a, 2.0 * a, 3.0 * a], vec![0.5, 1.0 / 3.0, 1.0 / 6.0])
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            Kind::Discrete(_) => "discrete",
            Kind::Gaussian { .. } => "gaussian",
            Kind::Rayleigh { .. } => "rayleigh",
            Kind::Custom(_) => "custom",
        }
    }

    /// Largest value X² can take, if the source is bounded.
    pub fn max_x2(&self) -> Option<f64> {
        match &self.kind {
            Kind::Discrete(d) => Some(d.max_x2),
            _ => None,
        }
    }

    /// E[X²], when available without a capability error.
    pub fn sigma2(&self) -> Result<f64> {
        match &self.kind {
            Kind::Discrete(d) => Ok(d.support.iter().zip(&d.pmf).map(|(x, p)| p * x * x).sum()),
            Kind::Gaussian { variance } => Ok(*variance),
            Kind::Rayleigh { scale } => Ok(2.0 * scale),
            Kind::Custom(c) => c
                .second_moment()
                .ok_or_else(|| Error::Capability("custom source does not provide E[X^2]".into())),
        }
    }

    pub fn moments(&self) -> Result<MomentSummary> {
        let (sigma2, zeta, sixth, t_abs3) = match &self.kind {
            Kind::Discrete(d) => {
                let pairs = || d.support.iter().zip(&d.pmf);
                let s2: f64 = pairs().map(|(x, p)| p * x * x).sum();
                let z4: f64 = pairs().map(|(x, p)| p * x.powi(4)).sum();
                let s6: f64 = pairs().map(|(x, p)| p * x.powi(6)).sum();
                let t: f64 = pairs().map(|(x, p)| p * (x * x - s2).abs().powi(3)).sum();
                (s2, z4, Extended::Finite(s6), Some(t))
            }
            Kind::Gaussian { variance: v } => {
                let v3 = v * v * v;
                (*v, 3.0 * v * v, Extended::Finite(15.0 * v3), Some(v3 * chi2_1_abs_third()))
            }
            Kind::Rayleigh { scale } => {
                let s2 = 2.0 * scale;
                let s6 = s2 * s2 * s2;
                // X² is exponential with mean σ²; E|W − 1|³ = 12/e − 2 for W ~ Exp(1).
                let t = s6 * (12.0 / std::f64::consts::E - 2.0);
                (s2, 2.0 * s2 * s2, Extended::Finite(6.0 * s6), Some(t))
            }
            Kind::Custom(c) => {
                let s2 = c.second_moment().ok_or_else(|| {
                    Error::Capability("custom source does not provide E[X^2]".into())
                })?;
                let z4 = c.fourth_moment().ok_or_else(|| {
                    Error::Capability("custom source does not provide E[X^4]".into())
                })?;
                (s2, z4, c.sixth_moment(), c.third_abs_central_moment_x2())
            }
        };
        let s4 = sigma2 * sigma2;
        let var_x2 = (zeta - s4).max(0.0);
        let dispersion = ((zeta - s4) / (4.0 * s4)).max(0.0);
        Ok(MomentSummary {
            sigma2,
            zeta,
            sixth,
            t_abs3,
            var_x2,
            dispersion,
            degenerate: var_x2 <= 1e-14 * s4,
        })
    }

    /// Cumulant generating function `Λ(θ) = ln E[exp(θ X²)]`; `+∞` outside
    /// its finiteness domain.
    pub fn cgf_x2(&self, theta: f64) -> f64 {
        if theta == 0.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Discrete(d) => {
                let exps: Vec<f64> = d
                    .support
                    .iter()
                    .zip(&d.pmf)
                    .filter(|(_, p)| **p > 0.0)
                    .map(|(x, p)| p.ln() + theta * x * x)
                    .collect();
                let hi = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                hi + exps.iter().map(|e| (e - hi).exp()).sum::<f64>().ln()
            }
            Kind::Gaussian { variance } => {
                let arg = 2.0 * theta * variance;
                if arg >= 1.0 {
                    f64::INFINITY
                } else {
                    -0.5 * (-arg).ln_1p()
                }
            }
            Kind::Rayleigh { scale } => {
                let arg = 2.0 * theta * scale;
                if arg >= 1.0 {
                    f64::INFINITY
                } else {
                    -(-arg).ln_1p()
                }
            }
            Kind::Custom(c) => c.cgf_x2(theta),
        }
    }

    /// Right end of the domain where `Λ` is finite (`+∞` if unbounded).
    pub fn theta_max(&self) -> f64 {
        match &self.kind {
            Kind::Discrete(_) => f64::INFINITY,
            Kind::Gaussian { variance } => 0.5 / variance,
            Kind::Rayleigh { scale } => 0.5 / scale,
            Kind::Custom(_) => self.probe_theta_max(),
        }
    }

    fn probe_theta_max(&self) -> f64 {
        let start = self.sigma2().map(|s| 1e-3 / s).unwrap_or(1e-3);
        let mut finite = 0.0;
        let mut theta = start;
        for _ in 0..200 {
            if self.cgf_x2(theta).is_finite() {
                finite = theta;
                theta *= 2.0;
            } else {
                let (mut lo, mut hi) = (finite, theta);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if self.cgf_x2(mid).is_finite() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return hi;
            }
        }
        f64::INFINITY
    }

    /// Fenchel–Legendre transform `Λ*(t) = sup_{θ ≥ 0} {θt − Λ(θ)}`.
    pub fn legendre_x2(&self, t: f64) -> Result<LegendrePoint> {
        if !t.is_finite() {
            return Err(Error::Domain(format!("legendre_x2 requires finite t, got {t}")));
        }
        let sigma2 = self.sigma2()?;
        if t <= sigma2 {
            return Ok(LegendrePoint {
                t,
                theta_star: Extended::Finite(0.0),
                value: Extended::Finite(0.0),
            });
        }
        if let Kind::Discrete(d) = &self.kind {
            let rel = 1e-15 * d.max_x2;
            if t > d.max_x2 + rel {
                return Ok(LegendrePoint {
                    t,
                    theta_star: Extended::Infinite,
                    value: Extended::Infinite,
                });
            }
            if t >= d.max_x2 - rel {
                // Supremum approached as θ → ∞: −ln Pr{X² = max}.
                let mass: f64 = d
                    .support
                    .iter()
                    .zip(&d.pmf)
                    .filter(|(x, _)| (*x * *x - d.max_x2).abs() <= rel)
                    .map(|(_, p)| p)
                    .sum();
                return Ok(LegendrePoint {
                    t,
                    theta_star: Extended::Infinite,
                    value: Extended::Finite(-mass.ln()),
                });
            }
        }
        let objective = |theta: f64| theta * t - self.cgf_x2(theta);
        let theta_max = self.theta_max();
        let upper = if theta_max.is_finite() {
            // Largest representable point strictly inside the domain.
            let mut hi = theta_max * (1.0 - 1e-15);
            while !self.cgf_x2(hi).is_finite() && hi > 0.0 {
                hi *= 1.0 - 1e-12;
            }
            hi
        } else {
            let mut step = 1.0 / sigma2;
            while objective(2.0 * step) >= objective(step) {
                step *= 2.0;
                if step > 1e300 {
                    break;
                }
            }
            2.0 * step
        };
        let (theta, value) = golden_max(objective, 0.0, upper);
        let theta_star = if theta_max.is_finite() && theta >= upper * (1.0 - 1e-12) {
            Extended::Finite(theta_max)
        } else {
            Extended::Finite(theta)
        };
        Ok(LegendrePoint { t, theta_star, value: Extended::Finite(value.max(0.0)) })
    }

    /// One block of `n` i.i.d. draws, deterministic in `seed`.
    pub fn sample_block(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = stream_rng(seed, 0);
        self.sample_block_with(n, &mut rng)
    }

    pub fn sample_block_with(&self, n: usize, rng: &mut StreamRng) -> Vec<f64> {
        (0..n).map(|_| self.sample_one(rng)).collect()
    }

    fn sample_one(&self, rng: &mut StreamRng) -> f64 {
        match &self.kind {
            Kind::Discrete(d) => d.support[d.draw_index(rng)],
            Kind::Gaussian { variance } => {
                let g: f64 = StandardNormal.sample(rng);
                g * variance.sqrt()
            }
            Kind::Rayleigh { scale } => {
                let u: f64 = rng.gen();
                (-2.0 * scale * (1.0 - u).ln()).sqrt()
            }
            Kind::Custom(c) => c.sample(rng),
        }
    }

    /// Block power `Z = ‖Xⁿ‖² / n` of one sampled block.
    pub fn sample_power(&self, n: usize, seed: u64) -> f64 {
        let mut rng = stream_rng(seed, 0);
        self.sample_power_with(n, &mut rng)
    }

    /// For Gaussian and Rayleigh sources Z is drawn from its exact Gamma law
    /// instead of summing `n` squares; the distribution is identical.
    pub fn sample_power_with(&self, n: usize, rng: &mut StreamRng) -> f64 {
        assert!(n >= 1, "block length must be positive");
        match &self.kind {
            Kind::Discrete(d) => {
                let mut counts = vec![0usize; d.support.len()];
                for _ in 0..n {
                    counts[d.draw_index(rng)] += 1;
                }
                counts
                    .iter()
                    .zip(&d.support)
                    .filter(|(c, _)| **c > 0)
                    .map(|(c, x)| (*c as f64 / n as f64) * (x * x))
                    .sum()
            }
            Kind::Gaussian { .. } | Kind::Rayleigh { .. } => {
                let law = self.power_density(n).expect("analytic law exists");
                Gamma::new(law.shape, law.scale).expect("valid gamma parameters").sample(rng)
            }
            Kind::Custom(c) => {
                let mut acc = 0.0;
                for _ in 0..n {
                    let x = c.sample(rng);
                    acc += x * x;
                }
                acc / n as f64
            }
        }
    }

    /// Exact law of Z when it has a closed form.
    pub fn power_density(&self, n: usize) -> Option<GammaLaw> {
        let n = n as f64;
        match &self.kind {
            Kind::Gaussian { variance } => {
                Some(GammaLaw { shape: n / 2.0, scale: 2.0 * variance / n })
            }
            Kind::Rayleigh { scale } => Some(GammaLaw { shape: n, scale: 2.0 * scale / n }),
            _ => None,
        }
    }
}

impl Discrete {
    fn draw_index(&self, rng: &mut StreamRng) -> usize {
        let u: f64 = rng.gen();
        let idx = self.cdf.partition_point(|c| *c <= u);
        if idx < self.cdf.len() {
            idx
        } else {
            // Rounding can leave the last cdf entry a hair below 1.
            self.pmf.iter().rposition(|p| *p > 0.0).unwrap_or(0)
        }
    }
}

/// E|W − 1|³ for W ~ χ²₁.
fn chi2_1_abs_third() -> f64 {
    // E(W−1)³ = 8, and E|W−1|³ = 8 + 2·E[(1−W)³; W < 1] with
    // E[(1−W)³; W<1] = 2(I0 − 3I2 + 3I4 − I6), I_k = ∫₀¹ gᵏ φ(g) dg.
    let phi1 = (-0.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let i0 = 0.5 - q_func(1.0).value();
    let i2 = -phi1 + i0;
    let i4 = -phi1 + 3.0 * i2;
    let i6 = -phi1 + 5.0 * i4;
    8.0 + 4.0 * (i0 - 3.0 * i2 + 3.0 * i4 - i6)
}

/// Golden-section maximization of a concave function on `[a, b]`.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..400 {
        if (b - a).abs() <= 1e-12 * c.abs().max(1e-300) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    let candidates = [(a, f(a)), (c, fc), (d, fd), (b, f(b))];
    candidates
        .into_iter()
        .filter(|(_, v)| !v.is_nan())
        .fold((a, f64::NEG_INFINITY), |best, cand| if cand.1 > best.1 { cand } else { best })
}

impl GammaLaw {
    pub fn mean(&self) -> f64 {
        self.shape * self.scale
    }

    pub fn ln_pdf(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return f64::NEG_INFINITY;
        }
        (self.shape - 1.0) * z.ln() - z / self.scale - self.shape * self.scale.ln()
            - lgamma(self.shape)
    }

    pub fn pdf(&self, z: f64) -> f64 {
        self.ln_pdf(z).exp()
    }

    pub fn ln_cdf(&self, z: f64) -> f64 {
        if z <= 0.0 {
            f64::NEG_INFINITY
        } else {
            ln_gamma_p(self.shape, z / self.scale)
        }
    }

    pub fn ln_sf(&self, z: f64) -> f64 {
        if z <= 0.0 {
            0.0
        } else {
            ln_gamma_q(self.shape, z / self.scale)
        }
    }

    pub fn cdf(&self, z: f64) -> f64 {
        self.ln_cdf(z).exp()
    }

    pub fn sf(&self, z: f64) -> f64 {
        self.ln_sf(z).exp()
    }

    /// The `z` with `ln Pr{Z > z} = ln_tail` (`ln_tail < 0`).
    pub fn upper_quantile_ln(&self, ln_tail: f64) -> f64 {
        let mut lo = 0.0;
        let mut hi = self.mean().max(f64::MIN_POSITIVE);
        while self.ln_sf(hi) > ln_tail {
            lo = hi;
            hi *= 2.0;
        }
        bisect_decreasing(|z| self.ln_sf(z) - ln_tail, lo, hi)
    }

    /// The `z` with `ln Pr{Z ≤ z} = ln_tail` (`ln_tail < 0`).
    pub fn lower_quantile_ln(&self, ln_tail: f64) -> f64 {
        let hi = self.mean();
        if self.ln_cdf(hi) < ln_tail {
            return hi;
        }
        bisect_decreasing(|z| ln_tail - self.ln_cdf(z), 0.0, hi)
    }
}

/// Root of a decreasing function bracketed by `[lo, hi]`.
fn bisect_decreasing(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// On-disk source description; unknown keys are rejected.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SourceConfig {
    Discrete { support: Vec<f64>, pmf: Vec<f64> },
    Gaussian { variance: f64 },
    Rayleigh { scale: f64 },
}

impl SourceConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid source JSON: {e}")))
    }

    pub fn build(self) -> Result<SourceModel> {
        match self {
            SourceConfig::Discrete { support, pmf } => SourceModel::discrete(support, pmf),
            SourceConfig::Gaussian { variance } => SourceModel::gaussian(variance),
            SourceConfig::Rayleigh { scale } => SourceModel::rayleigh(scale),
        }
    }
}

/// Parses and validates a JSON source description.
pub fn source_from_json(text: &str) -> Result<SourceModel> {
    SourceConfig::from_json_str(text)?.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_dispersion_is_half() {
        for v in [0.1, 1.0, 7.5] {
            let m = SourceModel::gaussian(v).unwrap().moments().unwrap();
            assert!((m.dispersion - 0.5).abs() < 1e-15);
            assert!((m.sigma2 - v).abs() < 1e-15);
        }
    }

    #[test]
    fn ternary_moments() {
        for s2 in [1.0, 2.5] {
            let m = SourceModel::ternary_example(s2).unwrap().moments().unwrap();
            assert!((m.sigma2 - s2).abs() < 1e-12 * s2);
            assert!((m.zeta - 1.74 * s2 * s2).abs() < 1e-12 * s2 * s2);
            assert!((m.dispersion - 0.185).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_pmf_names_field() {
        let err = SourceModel::discrete(vec![1.0, 2.0], vec![0.5, 0.4]).unwrap_err();
        assert!(err.to_string().contains("`pmf`"), "{err}");
        assert!(SourceModel::discrete(vec![1.0], vec![-0.0 - 1.0]).is_err());
        assert!(SourceModel::discrete(vec![0.0], vec![1.0]).is_err());
        assert!(SourceModel::gaussian(0.0).is_err());
        assert!(SourceModel::rayleigh(-1.0).is_err());
    }

    #[test]
    fn degenerate_flag() {
        let m = SourceModel::discrete(vec![-2.0, 2.0], vec![0.5, 0.5]).unwrap().moments().unwrap();
        assert!(m.degenerate);
        assert_eq!(m.dispersion, 0.0);
    }

    #[test]
    fn cgf_examples() {
        let r = SourceModel::rayleigh_with_power(1.0).unwrap();
        for theta in [-1.0, 0.1, 0.5, 0.9] {
            assert!((r.cgf_x2(theta) + (1.0 - theta).ln()).abs() < 1e-14);
        }
        assert_eq!(r.cgf_x2(1.0), f64::INFINITY);
        let g = SourceModel::gaussian(1.0).unwrap();
        assert_eq!(g.cgf_x2(0.5), f64::INFINITY);
        assert_eq!(g.cgf_x2(0.0), 0.0);
        let t = SourceModel::ternary_example(1.0).unwrap();
        let want = (0.5 * 0.3f64.exp() + 1.2f64.exp() / 3.0 + 2.7f64.exp() / 6.0).ln();
        assert!((t.cgf_x2(1.0) - want).abs() < 1e-14);
    }

    #[test]
    fn legendre_examples() {
        let r = SourceModel::rayleigh_with_power(1.0).unwrap();
        let p = r.legendre_x2(2.0).unwrap();
        assert!((p.value.to_f64() - (1.0 - 2f64.ln())).abs() < 1e-10);
        let g = SourceModel::gaussian(1.0).unwrap();
        let p = g.legendre_x2(2.0).unwrap();
        assert!((p.value.to_f64() - 0.5 * (1.0 - 2f64.ln())).abs() < 1e-10);
        assert_eq!(g.legendre_x2(1.0).unwrap().value, Extended::Finite(0.0));
        assert_eq!(g.legendre_x2(0.3).unwrap().theta_star, Extended::Finite(0.0));
    }

    #[test]
    fn legendre_discrete_support_edge() {
        let t = SourceModel::ternary_example(1.0).unwrap();
        assert!(t.legendre_x2(2.8).unwrap().value.is_infinite());
        let at_max = t.legendre_x2(2.7).unwrap();
        assert!((at_max.value.to_f64() - 6f64.ln()).abs() < 1e-12);
        assert!(at_max.theta_star.is_infinite());
        let near = t.legendre_x2(2.699).unwrap().value.to_f64();
        assert!(near < 6f64.ln() && near > 1.0);
    }

    #[test]
    fn degenerate_sampling() {
        let m = SourceModel::discrete(vec![1.5, 2.0, 3.0], vec![1.0, 0.0, 0.0]).unwrap();
        assert!(m.sample_block(1000, 3).iter().all(|x| *x == 1.5));
        for n in [1, 7, 1000] {
            assert_eq!(m.sample_power(n, 11), 2.25);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let m = SourceModel::ternary_example(1.0).unwrap();
        assert_eq!(m.sample_block(64, 99), m.sample_block(64, 99));
        assert_ne!(m.sample_block(64, 99), m.sample_block(64, 100));
        let g = SourceModel::gaussian(1.0).unwrap();
        assert_eq!(g.sample_power(10, 5).to_bits(), g.sample_power(10, 5).to_bits());
    }

    #[test]
    fn power_density_laws() {
        let g = SourceModel::gaussian(1.0).unwrap().power_density(2).unwrap();
        for z in [0.1, 1.0, 3.0] {
            assert!((g.pdf(z) - (-z as f64).exp()).abs() < 1e-14);
        }
        assert!(SourceModel::ternary_example(1.0).unwrap().power_density(4).is_none());
        for n in [1, 5, 40] {
            let r = SourceModel::rayleigh_with_power(2.0).unwrap().power_density(n).unwrap();
            assert_eq!(r.shape, n as f64);
            assert!((r.mean() - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn gamma_quantiles_invert() {
        let law = GammaLaw { shape: 50.0, scale: 0.02 };
        let z = law.upper_quantile_ln(-700.0);
        assert!((law.ln_sf(z) + 700.0).abs() < 1e-6);
        let z = law.lower_quantile_ln(-30.0);
        assert!((law.ln_cdf(z) + 30.0).abs() < 1e-6);
    }

    #[test]
    fn config_parsing() {
        let m = source_from_json(r#"{"kind":"gaussian","variance":2.0}"#).unwrap();
        assert_eq!(m.sigma2().unwrap(), 2.0);
        let err = source_from_json(r#"{"kind":"gaussian","varience":2.0}"#).unwrap_err();
        assert!(err.to_string().contains("varience"), "{err}");
        let err = source_from_json("{\"kind\": \"discrete\",\n \"support\": [1, 2],\n \"pmf\": [0.5 0.5]}")
            .unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = source_from_json(r#"{"kind":"discrete","support":[1,2,3],"pmf":[0.3,0.3,0.3]}"#)
            .unwrap_err();
        assert!(err.to_string().contains("pmf"), "{err}");
    }
}
