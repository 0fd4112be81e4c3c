//! Single-codeword non-excess probabilities `Pr{d(xⁿ, Yⁿ) ≤ D}` as a function
//! of the source power `z = ‖xⁿ‖²/n`, for spherical and i.i.d. Gaussian
//! codebooks, with the closed-form bounds on the spherical case.

use std::f64::consts::PI;

use crate::asymptotics::{kappa, r_iid, s_star};
use crate::error::{domain, Error, Result};
use crate::specfun::{lgamma, ln_ibeta, ln_ncx2_cdf, Probability};

/// Source power, distortion level and the derived codeword geometry.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DistortionSetup {
    sigma2: f64,
    d: f64,
    p_y: f64,
    r1: f64,
    r2: f64,
}

impl DistortionSetup {
    /// Requires `0 < d < sigma2`.
    pub fn new(sigma2: f64, d: f64) -> Result<Self> {
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return domain(format!("source power must be finite and > 0, got {sigma2}"));
        }
        if !(d.is_finite() && d > 0.0 && d < sigma2) {
            return domain(format!("distortion must satisfy 0 < D < sigma2 = {sigma2}, got {d}"));
        }
        let p_y = sigma2 - d;
        Ok(DistortionSetup {
            sigma2,
            d,
            p_y,
            r1: p_y.sqrt() - d.sqrt(),
            r2: p_y.sqrt() + d.sqrt(),
        })
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn distortion(&self) -> f64 {
        self.d
    }

    /// Codeword power `P_Y = σ² − D`.
    pub fn p_y(&self) -> f64 {
        self.p_y
    }

    /// `√P_Y − √D`; negative when `D > P_Y`.
    pub fn r1(&self) -> f64 {
        self.r1
    }

    pub fn r2(&self) -> f64 {
        self.r2
    }

    pub fn r1_sq(&self) -> f64 {
        self.r1 * self.r1
    }

    pub fn r2_sq(&self) -> f64 {
        self.r2 * self.r2
    }

    /// Lower edge of the spherical non-zero region, `max(0, r1)²`.
    pub fn shell_lo(&self) -> f64 {
        let r = self.r1.max(0.0);
        r * r
    }

    /// `|σ² − 2D|`, where `h` attains its minimum.
    pub fn turning_point(&self) -> f64 {
        (self.sigma2 - 2.0 * self.d).abs()
    }

    /// `1 − u0` with `u0 = (z + P_Y − D) / (2√(z P_Y))`, factored to stay
    /// accurate near `r2²`.
    pub(crate) fn one_minus_u0(&self, z: f64) -> f64 {
        let s = z.sqrt();
        (self.r2 - s) * (s - self.r1) / (2.0 * s * self.p_y.sqrt())
    }

    /// `1 − u0² = 1 − h(z)`.
    pub(crate) fn one_minus_h(&self, z: f64) -> f64 {
        let a = self.one_minus_u0(z);
        a * (2.0 - a)
    }

    /// Same geometry with every power scaled by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.sigma2 * c, self.d * c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum CodebookKind {
    Spherical,
    IidGaussian,
}

impl CodebookKind {
    pub fn name(self) -> &'static str {
        match self {
            CodebookKind::Spherical => "spherical",
            CodebookKind::IidGaussian => "iid",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum ShellMethod {
    Exact,
    LowerBound,
    UpperBound,
    BahadurRao,
}

/// A single-codeword coverage probability at source power `z`.
///
/// `ln_value` is the raw natural log; for bounds and approximations it may
/// exceed 0, while `value` is saturated into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ShellProbability {
    pub z: f64,
    pub value: Probability,
    pub ln_value: f64,
    pub kind: CodebookKind,
    pub method: ShellMethod,
}

impl ShellProbability {
    fn from_ln(z: f64, ln_value: f64, kind: CodebookKind, method: ShellMethod) -> Self {
        ShellProbability {
            z,
            value: Probability::saturating(ln_value.exp()),
            ln_value,
            kind,
            method,
        }
    }
}

/// Unchecked `ln Ψ(n, z)`.
pub(crate) fn ln_psi(setup: &DistortionSetup, n: usize, z: f64) -> f64 {
    let s = z.sqrt();
    if s < setup.r1 || s > setup.r2 {
        return f64::NEG_INFINITY;
    }
    let one_minus = setup.one_minus_u0(z);
    if one_minus <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if one_minus >= 2.0 {
        return 0.0;
    }
    // (1 + U)/2 ~ Beta(m, m) for the first coordinate of a uniform point on
    // the sphere, so Pr{U ≥ u0} = I_{(1 − u0)/2}(m, m).
    let m = 0.5 * (n as f64 - 1.0);
    ln_ibeta(m, m, 0.5 * one_minus)
}

/// Exact spherical-codebook coverage probability `Ψ(n, z)`.
pub fn psi_spherical(setup: &DistortionSetup, n: usize, z: f64) -> Result<ShellProbability> {
    if n < 2 {
        return domain(format!("psi_spherical requires n >= 2, got {n}"));
    }
    if !(z > 0.0 && z.is_finite()) {
        return domain(format!("psi_spherical requires z > 0, got {z}"));
    }
    Ok(ShellProbability::from_ln(
        z,
        ln_psi(setup, n, z),
        CodebookKind::Spherical,
        ShellMethod::Exact,
    ))
}

/// Closed-form lower bound `g̲(n, z)` on `Ψ(n, z)`, valid on `[r1², r2²]`.
pub fn g_lower(setup: &DistortionSetup, n: usize, z: f64) -> Result<ShellProbability> {
    if n < 4 {
        return domain(format!("g_lower requires n >= 4, got {n}"));
    }
    if !(z >= setup.r1_sq() && z <= setup.r2_sq() && z > 0.0) {
        return domain(format!(
            "g_lower requires z in [{}, {}], got {z}",
            setup.r1_sq(),
            setup.r2_sq()
        ));
    }
    let nf = n as f64;
    let base = setup.one_minus_h(z).max(0.0);
    let ln = lgamma((nf + 2.0) / 2.0) - 0.5 * PI.ln() - nf.ln() - lgamma((nf + 1.0) / 2.0)
        + 0.5 * (nf - 1.0) * base.ln();
    Ok(ShellProbability::from_ln(z, ln, CodebookKind::Spherical, ShellMethod::LowerBound))
}

/// Closed-form upper bound `ḡ(n, z)` on `Ψ(n, z)`, valid for
/// `|σ² − 2D| ≤ z ≤ r2²` with `z + P_Y − D ≥ 0`.
pub fn g_upper(setup: &DistortionSetup, n: usize, z: f64) -> Result<ShellProbability> {
    if n < 4 {
        return domain(format!("g_upper requires n >= 4, got {n}"));
    }
    if !(z >= setup.turning_point() && z + setup.p_y - setup.d >= 0.0 && z > 0.0) {
        return domain(format!(
            "g_upper requires z >= |sigma2 - 2D| = {} and z + P_Y - D >= 0, got {z}",
            setup.turning_point()
        ));
    }
    if z > setup.r2_sq() {
        return domain(format!(
            "g_upper is undefined above r2^2 = {} (got {z}); Psi is 0 there",
            setup.r2_sq()
        ));
    }
    let nf = n as f64;
    let base = setup.one_minus_h(z).max(0.0);
    let ln = lgamma(nf / 2.0) - 0.5 * PI.ln() - lgamma((nf - 1.0) / 2.0)
        + 0.5 * (nf - 3.0) * base.ln();
    Ok(ShellProbability::from_ln(z, ln, CodebookKind::Spherical, ShellMethod::UpperBound))
}

/// Unchecked `ln Υ(n, z)`.
pub(crate) fn ln_upsilon(setup: &DistortionSetup, n: usize, z: f64) -> f64 {
    let nf = n as f64;
    ln_ncx2_cdf(nf, nf * z / setup.p_y, nf * setup.d / setup.p_y)
}

/// Exact i.i.d.-codebook coverage probability `Υ(n, z)`:
/// `Σ (Yᵢ − √z)² / P_Y` is non-central chi-square with `n` degrees of freedom
/// and non-centrality `n z / P_Y`.
pub fn upsilon_iid(setup: &DistortionSetup, n: usize, z: f64) -> Result<ShellProbability> {
    if n < 1 {
        return domain("upsilon_iid requires n >= 1");
    }
    if !(z >= 0.0 && z.is_finite()) {
        return domain(format!("upsilon_iid requires z >= 0, got {z}"));
    }
    Ok(ShellProbability::from_ln(
        z,
        ln_upsilon(setup, n, z),
        CodebookKind::IidGaussian,
        ShellMethod::Exact,
    ))
}

/// Strong large-deviations approximation of `Υ(n, z)`:
/// `exp{−n R_iid(s*, z)} / (s* √(2πn κ(s*, z)))`.
pub fn upsilon_bahadur_rao(
    setup: &DistortionSetup,
    n: usize,
    z: f64,
) -> Result<ShellProbability> {
    if n < 1 {
        return domain("upsilon_bahadur_rao requires n >= 1");
    }
    let s = s_star(setup, z)?;
    if s <= 0.0 {
        return Err(Error::Precondition(format!(
            "s*(z) = 0 at z = {z} (z <= max(0, 2D - sigma2)); the approximation is undefined"
        )));
    }
    let nf = n as f64;
    let k = kappa(setup, s, z)?;
    let ln = -nf * r_iid(setup, s, z)? - (s * (k * 2.0 * PI * nf).sqrt()).ln();
    Ok(ShellProbability::from_ln(z, ln, CodebookKind::IidGaussian, ShellMethod::BahadurRao))
}
