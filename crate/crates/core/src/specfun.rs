//! Special-function kernel: log-gamma, regularized incomplete beta and gamma,
//! the Gaussian tail function and its inverse, and the non-central chi-square
//! CDF. Tail quantities that can underflow have `ln_*` companions.

use std::f64::consts::{LN_2, PI};

use crate::error::{domain, Result};

const EPS: f64 = 1e-16;
const FPMIN: f64 = 1e-300;
const MAX_ITER: usize = 100_000;

/// A probability, guaranteed to lie in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, serde::Serialize)]
pub struct Probability(f64);

impl Probability {
    pub const ZERO: Probability = Probability(0.0);
    pub const ONE: Probability = Probability(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            domain(format!("probability {value} outside [0, 1]"))
        }
    }

    /// Clamps into `[0, 1]`; NaN maps to 0.
    pub fn saturating(value: f64) -> Self {
        if value.is_nan() {
            Probability(0.0)
        } else {
            Probability(value.clamp(0.0, 1.0))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Natural log of a probability. `-inf` encodes an exact zero.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, serde::Serialize)]
pub struct LogProbability(f64);

impl LogProbability {
    pub const ZERO_PROB: LogProbability = LogProbability(f64::NEG_INFINITY);
    pub const CERTAIN: LogProbability = LogProbability(0.0);

    /// Wraps a log value, saturating positive values (rounding noise) to 0.
    pub fn from_ln(ln: f64) -> Self {
        if ln.is_nan() {
            LogProbability(f64::NEG_INFINITY)
        } else {
            LogProbability(ln.min(0.0))
        }
    }

    pub fn ln(self) -> f64 {
        self.0
    }

    pub fn prob(self) -> Probability {
        Probability::saturating(self.0.exp())
    }

    /// `ln(1 - p)`.
    pub fn complement_ln(self) -> f64 {
        ln1m_exp(self.0)
    }
}

/// `ln(1 - e^y)` for `y <= 0`, accurate across the whole range.
pub fn ln1m_exp(y: f64) -> f64 {
    if y >= 0.0 {
        f64::NEG_INFINITY
    } else if y > -LN_2 {
        (-y.exp_m1()).ln()
    } else {
        (-y.exp()).ln_1p()
    }
}

/// `ln(e^a + e^b)`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

// Bernoulli-number coefficients B_{2k} / (2k (2k-1)) of the Stirling series.
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

/// Unchecked `ln Γ(x)` for finite `x > 0`.
/// ζ(2), …, ζ(25).
const ZETA: [f64; 24] = [
    1.644_934_066_848_226_4,
    1.202_056_903_159_594_3,
    1.082_323_233_711_138_2,
    1.036_927_755_143_370_0,
    1.017_343_061_984_449_1,
    1.008_349_277_381_922_8,
    1.004_077_356_197_944_3,
    1.002_008_392_826_082_2,
    1.000_994_575_127_818_1,
    1.000_494_188_604_119_5,
    1.000_246_086_553_308_0,
    1.000_122_713_347_578_5,
    1.000_061_248_135_058_7,
    1.000_030_588_236_307_0,
    1.000_015_282_259_408_7,
    1.000_007_637_197_637_9,
    1.000_003_817_293_265_0,
    1.000_001_908_212_716_6,
    1.000_000_953_962_033_9,
    1.000_000_476_932_986_8,
    1.000_000_238_450_502_7,
    1.000_000_119_219_926_0,
    1.000_000_059_608_189_1,
    1.000_000_029_803_503_5,
];
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `ln Γ(1 + e)` for `|e| ≤ 0.2` from its Taylor series; keeps full relative
/// accuracy around the roots at 1 and 2.
fn lgamma1p_small(e: f64) -> f64 {
    let mut acc = 0.0;
    let mut pow = -e;
    for (i, z) in ZETA.iter().enumerate() {
        pow *= -e;
        acc += z * pow / (i + 2) as f64;
    }
    acc - EULER_GAMMA * e
}

pub(crate) fn lgamma(x: f64) -> f64 {
    if (x - 1.0).abs() <= 0.2 {
        return lgamma1p_small(x - 1.0);
    }
    if (x - 2.0).abs() <= 0.2 {
        return (x - 1.0).ln() + lgamma1p_small(x - 2.0);
    }
    // Shift into the asymptotic range, then apply the Stirling series.
    let mut shift = 0.0;
    let mut y = x;
    let mut prod = 1.0;
    while y < 15.0 {
        prod *= y;
        y += 1.0;
        if prod > 1e280 {
            shift += prod.ln();
            prod = 1.0;
        }
    }
    shift += prod.ln();
    let inv = 1.0 / y;
    let inv2 = inv * inv;
    let mut series = 0.0;
    let mut pow = inv;
    for c in STIRLING {
        series += c * pow;
        pow *= inv2;
    }
    (y - 0.5) * y.ln() - y + 0.5 * (2.0 * PI).ln() + series - shift
}

/// `ln Γ(x)` for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x.is_finite() && x > 0.0) {
        return domain(format!("log_gamma requires finite x > 0, got {x}"));
    }
    Ok(lgamma(x))
}

pub(crate) fn ln_beta(a: f64, b: f64) -> f64 {
    lgamma(a) + lgamma(b) - lgamma(a + b)
}

fn check_beta_args(a: f64, b: f64, x: f64) -> Result<()> {
    if !(a.is_finite() && a > 0.0 && b.is_finite() && b > 0.0) {
        return domain(format!("incomplete beta requires a, b > 0, got a={a}, b={b}"));
    }
    if !(0.0..=1.0).contains(&x) {
        return domain(format!("incomplete beta requires x in [0, 1], got {x}"));
    }
    Ok(())
}

/// Continued fraction for the incomplete beta (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Unchecked `ln I_x(a, b)`.
pub(crate) fn ln_ibeta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if x >= 1.0 {
        return 0.0;
    }
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_ibeta_cf(a, b, x)
    } else {
        ln1m_exp(ln_ibeta_cf(b, a, 1.0 - x))
    }
}

fn ln_ibeta_cf(a: f64, b: f64, x: f64) -> f64 {
    let front = a * x.ln() + b * (-x).ln_1p() - ln_beta(a, b) - a.ln();
    front + beta_cf(a, b, x).ln()
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> Result<Probability> {
    check_beta_args(a, b, x)?;
    Ok(Probability::saturating(ln_ibeta(a, b, x).exp()))
}

/// `ln I_x(a, b)`, usable deep in the lower tail.
pub fn ln_reg_inc_beta(a: f64, b: f64, x: f64) -> Result<LogProbability> {
    check_beta_args(a, b, x)?;
    Ok(LogProbability::from_ln(ln_ibeta(a, b, x)))
}

/// Series for `ln P(a, x)`; converges for any x but is used when `x < a + 1`.
fn ln_gamma_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut del = 1.0;
    let mut sum = 1.0;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum.ln() + a * x.ln() - x - lgamma(a + 1.0)
}

/// Continued fraction for `ln Q(a, x)`, used when `x >= a + 1`.
fn ln_gamma_cf(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=MAX_ITER {
        let i = i as f64;
        let an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h.ln() + a * x.ln() - x - lgamma(a)
}

/// Unchecked `ln P(a, x)`.
pub(crate) fn ln_gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        f64::NEG_INFINITY
    } else if x == f64::INFINITY {
        0.0
    } else if x < a + 1.0 {
        ln_gamma_series(a, x)
    } else {
        ln1m_exp(ln_gamma_cf(a, x))
    }
}

/// Unchecked `ln Q(a, x)`.
pub(crate) fn ln_gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x == f64::INFINITY {
        f64::NEG_INFINITY
    } else if x < a + 1.0 {
        ln1m_exp(ln_gamma_series(a, x))
    } else {
        ln_gamma_cf(a, x)
    }
}

fn check_gamma_args(a: f64, x: f64) -> Result<()> {
    if !(a.is_finite() && a > 0.0) {
        return domain(format!("incomplete gamma requires a > 0, got {a}"));
    }
    if x.is_nan() || x < 0.0 {
        return domain(format!("incomplete gamma requires x >= 0, got {x}"));
    }
    Ok(())
}

/// Regularized lower incomplete gamma `P(a, x) = γ(a, x) / Γ(a)`.
pub fn reg_inc_gamma_lower(a: f64, x: f64) -> Result<Probability> {
    check_gamma_args(a, x)?;
    Ok(Probability::saturating(ln_gamma_p(a, x).exp()))
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`.
pub fn reg_inc_gamma_upper(a: f64, x: f64) -> Result<Probability> {
    check_gamma_args(a, x)?;
    Ok(Probability::saturating(ln_gamma_q(a, x).exp()))
}

pub fn ln_reg_inc_gamma_lower(a: f64, x: f64) -> Result<LogProbability> {
    check_gamma_args(a, x)?;
    Ok(LogProbability::from_ln(ln_gamma_p(a, x)))
}

pub fn ln_reg_inc_gamma_upper(a: f64, x: f64) -> Result<LogProbability> {
    check_gamma_args(a, x)?;
    Ok(LogProbability::from_ln(ln_gamma_q(a, x)))
}

/// Standard Gaussian tail `Q(x) = Pr{N(0,1) > x}`.
pub fn q_func(x: f64) -> Probability {
    if x.is_nan() {
        return Probability::saturating(f64::NAN);
    }
    let tail = ln_gamma_q(0.5, 0.5 * x * x).exp() * 0.5;
    if x >= 0.0 {
        Probability::saturating(tail)
    } else {
        Probability::saturating(1.0 - tail)
    }
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

// Rational approximation of the normal quantile (Acklam), refined by Newton.
const QA: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.383577518672690e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const QB: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const QC: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const QD: [f64; 4] = [
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e+00,
    3.754408661907416e+00,
];

fn normal_quantile_guess(p: f64) -> f64 {
    const P_LOW: f64 = 0.02425;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((QC[0] * q + QC[1]) * q + QC[2]) * q + QC[3]) * q + QC[4]) * q + QC[5])
            / ((((QD[0] * q + QD[1]) * q + QD[2]) * q + QD[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((QA[0] * r + QA[1]) * r + QA[2]) * r + QA[3]) * r + QA[4]) * r + QA[5]) * q
            / (((((QB[0] * r + QB[1]) * r + QB[2]) * r + QB[3]) * r + QB[4]) * r + 1.0)
    } else {
        -normal_quantile_guess(1.0 - p)
    }
}

/// Inverse of [`q_func`]: the `x` with `Q(x) = p`, for `0 < p < 1`.
pub fn q_inv(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("q_inv requires p in (0, 1), got {p}"));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    // Work on the upper tail for accuracy and mirror.
    let (target, sign) = if p < 0.5 { (p, 1.0) } else { (1.0 - p, -1.0) };
    let mut x = -normal_quantile_guess(target);
    for _ in 0..4 {
        let pdf = std_normal_pdf(x);
        if pdf == 0.0 {
            break;
        }
        let step = (q_func(x).value() - target) / pdf;
        x += step;
        if step.abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    Ok(sign * x)
}

/// Unchecked `ln F(x; dof, lambda)` for the non-central chi-square law.
///
/// Poisson(lambda/2) mixture of central chi-square CDFs, summed outward from
/// the modal Poisson index. Below the mode the incomplete gamma is advanced by
/// the additive recurrence `P(a-1, y) = P(a, y) + y^{a-1} e^{-y} / Γ(a)`;
/// above it each term is evaluated directly.
pub(crate) fn ln_ncx2_cdf(dof: f64, lambda: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let half_x = 0.5 * x;
    let half_k = 0.5 * dof;
    if lambda == 0.0 {
        return ln_gamma_p(half_k, half_x);
    }
    let mu = 0.5 * lambda;
    let ln_mu = mu.ln();
    let mode = mu.floor();
    let ln_w_mode = -mu + mode * ln_mu - lgamma(mode + 1.0);
    let ln_half_x = half_x.ln();
    // Stop once the residual is below this many nats under the running max.
    const CUTOFF: f64 = 40.0;

    let ln_p_mode = ln_gamma_p(half_k + mode, half_x);
    let mut terms_max = ln_w_mode + ln_p_mode;
    let mut acc = terms_max;

    // Downward from the mode.
    let mut ln_w = ln_w_mode;
    let mut ln_p = ln_p_mode;
    let mut j = mode;
    while j >= 1.0 {
        let a = half_k + j;
        // P(a-1) = P(a) + exp((a-1) ln y - y - lnΓ(a))
        ln_p = log_add_exp(ln_p, (a - 1.0) * ln_half_x - half_x - lgamma(a));
        ln_w += (j / mu).ln();
        j -= 1.0;
        let term = ln_w + ln_p;
        acc = log_add_exp(acc, term);
        terms_max = terms_max.max(term);
        // P <= 1, so the weights bound every remaining term; they shrink
        // geometrically below the mode.
        if ln_w < terms_max - CUTOFF {
            break;
        }
    }

    // Upward from the mode: weights and P both decrease.
    let mut ln_w = ln_w_mode;
    let mut j = mode;
    loop {
        j += 1.0;
        ln_w += (mu / j).ln();
        let term = ln_w + ln_gamma_p(half_k + j, half_x);
        acc = log_add_exp(acc, term);
        if term < acc - CUTOFF || !term.is_finite() {
            break;
        }
    }
    acc.min(0.0)
}

fn check_ncx2(dof: u32, lambda: f64, x: f64) -> Result<()> {
    if dof == 0 {
        return domain("non-central chi-square requires dof >= 1");
    }
    if lambda.is_nan() || lambda < 0.0 || !lambda.is_finite() {
        return domain(format!("non-centrality must be finite and >= 0, got {lambda}"));
    }
    if x.is_nan() || x < 0.0 {
        return domain(format!("non-central chi-square argument must be >= 0, got {x}"));
    }
    Ok(())
}

/// CDF of the non-central chi-square law with `dof` degrees of freedom and
/// non-centrality `lambda`.
pub fn noncentral_chi2_cdf(dof: u32, lambda: f64, x: f64) -> Result<Probability> {
    check_ncx2(dof, lambda, x)?;
    Ok(Probability::saturating(ln_ncx2_cdf(dof as f64, lambda, x).exp()))
}

/// `ln` of [`noncentral_chi2_cdf`], accurate when the CDF underflows.
pub fn ln_noncentral_chi2_cdf(dof: u32, lambda: f64, x: f64) -> Result<LogProbability> {
    check_ncx2(dof, lambda, x)?;
    Ok(LogProbability::from_ln(ln_ncx2_cdf(dof as f64, lambda, x)))
}
