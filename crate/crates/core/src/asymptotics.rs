//! Closed-form and root-solved asymptotic quantities: the rate-distortion
//! function, dispersion and second-order rate, the moderate-deviations
//! constant, excess-distortion exponents for both codebook ensembles, and the
//! companion root of `h`.

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::extended::Extended;
use crate::shellprob::{CodebookKind, DistortionSetup};
use crate::sources::SourceModel;
use crate::specfun::q_inv;

/// `½ ln max{1, σ²/D}` in nats per symbol.
pub fn rd_function(sigma2: f64, d: f64) -> Result<f64> {
    if !(sigma2 > 0.0 && d > 0.0 && sigma2.is_finite() && d.is_finite()) {
        return domain(format!("rd_function requires sigma2, D > 0, got ({sigma2}, {d})"));
    }
    Ok(0.5 * (sigma2 / d).max(1.0).ln())
}

/// Mismatched dispersion `(ζ − σ⁴) / (4σ⁴)`.
pub fn dispersion(sigma2: f64, zeta: f64) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return domain(format!("dispersion requires sigma2 > 0, got {sigma2}"));
    }
    let s4 = sigma2 * sigma2;
    if zeta < s4 * (1.0 - 1e-12) {
        return domain(format!("zeta = {zeta} violates zeta >= sigma2^2 = {s4}"));
    }
    Ok(((zeta - s4) / (4.0 * s4)).max(0.0))
}

/// Moderate-deviations constant `1 / (2V)`.
pub fn md_constant(sigma2: f64, zeta: f64) -> Result<f64> {
    let v = dispersion(sigma2, zeta)?;
    if v <= 0.0 {
        return Err(Error::DegenerateSource(
            "Var[X^2] = 0: the moderate-deviations constant needs positive dispersion".into(),
        ));
    }
    Ok(1.0 / (2.0 * v))
}

/// Normal approximation to `ln M*` at blocklength `n` and excess probability ε.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SecondOrderPoint {
    pub n: usize,
    pub epsilon: f64,
    pub log_m: f64,
    pub first_order: f64,
    pub second_order: f64,
    /// Multiplier of `ln n`; the third-order constant is left to the caller.
    pub third_order_coeff: f64,
}

impl SecondOrderPoint {
    pub fn rate(&self) -> f64 {
        self.log_m / self.n as f64
    }
}

/// `(n/2) ln(σ²/D) + √(nV) Q⁻¹(ε) + coeff · ln n`.
pub fn second_order_log_m(
    n: usize,
    epsilon: f64,
    sigma2: f64,
    zeta: f64,
    d: f64,
    third_order_coeff: f64,
) -> Result<SecondOrderPoint> {
    if n < 1 {
        return domain("second_order_log_m requires n >= 1");
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return domain(format!("epsilon must lie in (0, 1), got {epsilon}"));
    }
    let nf = n as f64;
    let first_order = nf * rd_function(sigma2, d)?;
    let v = dispersion(sigma2, zeta)?;
    let second_order = (nf * v).sqrt() * q_inv(epsilon)?;
    Ok(SecondOrderPoint {
        n,
        epsilon,
        log_m: first_order + second_order + third_order_coeff * nf.ln(),
        first_order,
        second_order,
        third_order_coeff,
    })
}

/// Spherical rate function `−½ ln(1 − h(z))`, finite on the open interval
/// `(r1², r2²)` and `+∞` at its endpoints.
pub fn r_sp(setup: &DistortionSetup, z: f64) -> Result<f64> {
    let lo = setup.r1_sq();
    let hi = setup.r2_sq();
    if !(z >= lo && z <= hi && z > 0.0) {
        return domain(format!("r_sp requires z in ({lo}, {hi}), got {z}"));
    }
    let base = setup.one_minus_h(z);
    if base <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-0.5 * base.ln())
}

/// Maximizing tilt `s*(z)` of the i.i.d. rate function.
pub fn s_star(setup: &DistortionSetup, z: f64) -> Result<f64> {
    if !(z >= 0.0 && z.is_finite()) {
        return domain(format!("s_star requires z >= 0, got {z}"));
    }
    let (s2, d, p) = (setup.sigma2(), setup.distortion(), setup.p_y());
    Ok(((s2 - 3.0 * d + (p * p + 4.0 * z * d).sqrt()) / (4.0 * d)).max(0.0))
}

/// `R_iid(s, z) = ½ ln(1+2s) + sz/((1+2s)P_Y) − sD/P_Y`.
pub fn r_iid(setup: &DistortionSetup, s: f64, z: f64) -> Result<f64> {
    if !(s >= 0.0 && z >= 0.0) {
        return domain(format!("r_iid requires s, z >= 0, got ({s}, {z})"));
    }
    let p = setup.p_y();
    let u = 1.0 + 2.0 * s;
    Ok(0.5 * (2.0 * s).ln_1p() + s * z / (u * p) - s * setup.distortion() / p)
}

/// `R_iid(s*(z), z)`, the i.i.d. rate function.
pub fn r_iid_star(setup: &DistortionSetup, z: f64) -> Result<f64> {
    r_iid(setup, s_star(setup, z)?, z)
}

/// Variance of the tilted per-letter statistic `(Y − √z)² / P_Y` at tilt `s`,
/// i.e. the second derivative of its log-MGF:
/// `2 (P_Y(1+2s) + 2z) / (P_Y (1+2s)³)`.
pub fn kappa(setup: &DistortionSetup, s: f64, z: f64) -> Result<f64> {
    if !(s >= 0.0 && z >= 0.0) {
        return domain(format!("kappa requires s, z >= 0, got ({s}, {z})"));
    }
    let p = setup.p_y();
    let u = 1.0 + 2.0 * s;
    Ok(2.0 * (p * u + 2.0 * z) / (p * u * u * u))
}

/// `h(z) = (z + P_Y − D)² / (4 z P_Y)`.
pub fn h_func(setup: &DistortionSetup, z: f64) -> Result<f64> {
    if !(z > 0.0 && z.is_finite()) {
        return domain(format!("h_func requires z > 0, got {z}"));
    }
    let c = z + setup.p_y() - setup.distortion();
    Ok(c * c / (4.0 * z * setup.p_y()))
}

/// The root `β ∈ (r1², |σ² − 2D|)` of `h(β) = h(α)` on the decreasing branch.
pub fn companion_beta(setup: &DistortionSetup, alpha: f64) -> Result<f64> {
    let (s2, r2sq) = (setup.sigma2(), setup.r2_sq());
    if !(alpha >= s2 && alpha < r2sq) {
        return domain(format!("companion_beta requires alpha in [{s2}, {r2sq}), got {alpha}"));
    }
    let turn = setup.turning_point();
    let lo_edge = setup.r1_sq();
    if turn <= lo_edge {
        return domain("sigma2 = 2D: h has no decreasing branch, so no companion root exists");
    }
    let level = h_func(setup, alpha)?;
    let (mut lo, mut hi) = (lo_edge, turn);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        // h decreases on (r1², turn): above the level means the root is to the right.
        let hm = if mid > 0.0 { h_func(setup, mid)? } else { f64::INFINITY };
        if hm > level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Solves `R_sp(α) = R` (spherical) or `R_iid(s*(α), α) = R` (i.i.d.) for
/// `α ≥ σ²`.
pub fn solve_alpha(setup: &DistortionSetup, rate: f64, kind: CodebookKind) -> Result<f64> {
    let s2 = setup.sigma2();
    let r_min = rd_function(s2, setup.distortion())?;
    // Rates within rounding of R(σ², D) are the boundary point α = σ².
    let slack = 1e-14 * r_min.max(1.0);
    if !rate.is_finite() || rate < r_min - slack {
        return domain(format!(
            "rate {rate} lies below the rate-distortion function {r_min}; the exponent is 0 there"
        ));
    }
    if rate <= r_min + slack {
        return Ok(s2);
    }
    match kind {
        CodebookKind::Spherical => {
            // Bisect in w = −ln(r2² − z): R_sp grows logarithmically in the gap.
            let r2sq = setup.r2_sq();
            let to_z = |w: f64| r2sq - (-w).exp();
            let mut lo = -(r2sq - s2).ln();
            let mut hi = lo;
            loop {
                hi += 8.0;
                let z = to_z(hi);
                if z >= r2sq || r_sp(setup, z)? >= rate {
                    break;
                }
            }
            for _ in 0..300 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let z = to_z(mid);
                if z < r2sq && r_sp(setup, z)? < rate {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let z = to_z(0.5 * (lo + hi));
            Ok(z.clamp(s2, r2sq))
        }
        CodebookKind::IidGaussian => {
            let mut lo = s2;
            let mut hi = 2.0 * s2;
            while r_iid_star(setup, hi)? < rate {
                lo = hi;
                hi *= 2.0;
                if !hi.is_finite() {
                    return Err(Error::Domain(format!("rate {rate} is not attainable")));
                }
            }
            for _ in 0..300 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if r_iid_star(setup, mid)? < rate {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(0.5 * (lo + hi))
        }
    }
}

/// A point on an excess-distortion exponent curve.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ExponentPoint {
    pub rate: f64,
    /// Solved power parameter; `None` below the rate-distortion function.
    pub alpha: Option<f64>,
    pub exponent: Extended,
    pub kind: CodebookKind,
}

fn check_consistent(model: &SourceModel, setup: &DistortionSetup) -> Result<()> {
    let s2 = model.sigma2()?;
    if (s2 - setup.sigma2()).abs() > 1e-9 * s2.max(1.0) {
        return Err(Error::Config(format!(
            "source has E[X^2] = {s2} but the distortion setup uses sigma2 = {}",
            setup.sigma2()
        )));
    }
    Ok(())
}

/// Ensemble excess-distortion exponent `Λ*_{X²}(α(R))`, 0 below the
/// rate-distortion function.
pub fn exponent(
    model: &SourceModel,
    setup: &DistortionSetup,
    rate: f64,
    kind: CodebookKind,
) -> Result<ExponentPoint> {
    check_consistent(model, setup)?;
    if !(rate >= 0.0 && rate.is_finite()) {
        return domain(format!("rate must be finite and >= 0, got {rate}"));
    }
    let r_min = rd_function(setup.sigma2(), setup.distortion())?;
    if rate < r_min {
        return Ok(ExponentPoint { rate, alpha: None, exponent: Extended::Finite(0.0), kind });
    }
    let alpha = solve_alpha(setup, rate, kind)?;
    if alpha <= setup.sigma2() {
        // Boundary point; the source's own σ² may differ from the setup's in the last ulp.
        return Ok(ExponentPoint { rate, alpha: Some(alpha), exponent: Extended::Finite(0.0), kind });
    }
    let point = model.legendre_x2(alpha)?;
    Ok(ExponentPoint { rate, alpha: Some(alpha), exponent: point.value, kind })
}

/// [`exponent`] over a grid of rates, evaluated in parallel; order preserved.
pub fn exponent_curve(
    model: &SourceModel,
    setup: &DistortionSetup,
    rates: &[f64],
    kind: CodebookKind,
) -> Result<Vec<ExponentPoint>> {
    rates.par_iter().map(|&r| exponent(model, setup, r, kind)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> DistortionSetup {
        DistortionSetup::new(1.0, 0.25).unwrap()
    }

    #[test]
    fn rd_examples() {
        assert!((rd_function(1.0, 0.25).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(rd_function(1.0, 2.0).unwrap(), 0.0);
        assert!((rd_function(4.0, 1.0).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(rd_function(0.0, 1.0).is_err());
        assert!(rd_function(1.0, -1.0).is_err());
    }

    #[test]
    fn dispersion_examples() {
        assert_eq!(dispersion(1.0, 3.0).unwrap(), 0.5);
        assert_eq!(md_constant(1.0, 3.0).unwrap(), 1.0);
        assert!((dispersion(2.0, 1.74 * 4.0).unwrap() - 0.185).abs() < 1e-15);
        assert_eq!(dispersion(2.0, 4.0).unwrap(), 0.0);
        assert!(matches!(md_constant(2.0, 4.0), Err(Error::DegenerateSource(_))));
        assert!(dispersion(1.0, 0.5).is_err());
    }

    #[test]
    fn second_order_examples() {
        for n in [1, 10, 1000] {
            let p = second_order_log_m(n, 0.5, 1.0, 3.0, 0.25, 0.0).unwrap();
            assert_eq!(p.second_order, 0.0);
        }
        let p = second_order_log_m(400, 0.1, 1.0, 3.0, 0.25, 0.0).unwrap();
        // (n/2) ln(σ²/D) = 200 ln 4; √(nV) = √200.
        let want = 200.0 * 4f64.ln() + 200f64.sqrt() * 1.281_551_565_544_600_5;
        assert!((p.log_m - want).abs() < 1e-9);
        assert!((p.log_m - 295.383).abs() < 1e-3);
        let q = second_order_log_m(400, 0.1, 2.0, 12.0, 0.5, 0.0).unwrap();
        assert!((p.log_m - q.log_m).abs() < 1e-12);
        let c = second_order_log_m(400, 0.1, 1.0, 3.0, 0.25, 1.5).unwrap();
        assert!((c.log_m - p.log_m - 1.5 * 400f64.ln()).abs() < 1e-12);
        assert!(second_order_log_m(400, 1.0, 1.0, 3.0, 0.25, 0.0).is_err());
        assert!(second_order_log_m(400, 0.0, 1.0, 3.0, 0.25, 0.0).is_err());
    }

    #[test]
    fn r_sp_examples() {
        let s = setup();
        assert!((r_sp(&s, 1.0).unwrap() - 2f64.ln()).abs() < 1e-15);
        let near = r_sp(&s, s.r2_sq() * (1.0 - 1e-18)).unwrap();
        assert!(near > 20.0);
        assert!(r_sp(&s, s.r2_sq() * (1.0 - 1e-14)).unwrap() > 10.0);
        assert!(r_sp(&s, 2.0).is_err());
        assert!(r_sp(&s, 0.1).is_err());
    }

    #[test]
    fn s_star_examples() {
        let s = setup();
        assert!((s_star(&s, 1.0).unwrap() - 1.5).abs() < 1e-15);
        assert!((r_iid_star(&s, 1.0).unwrap() - 2f64.ln()).abs() < 1e-15);
        let t = DistortionSetup::new(1.0, 0.75).unwrap();
        assert_eq!(s_star(&t, 0.5).unwrap(), 0.0);
        assert!(r_iid_star(&t, 0.5).unwrap().abs() < 1e-15);
        assert_eq!(s_star(&s, 0.0).unwrap(), s_star(&s, 0.0).unwrap().max(0.0));
    }

    #[test]
    fn solve_alpha_boundary_and_error() {
        let s = setup();
        let r0 = 2f64.ln();
        assert_eq!(solve_alpha(&s, r0, CodebookKind::Spherical).unwrap(), 1.0);
        assert_eq!(solve_alpha(&s, r0, CodebookKind::IidGaussian).unwrap(), 1.0);
        assert!(solve_alpha(&s, 0.5, CodebookKind::Spherical).is_err());
    }

    #[test]
    fn h_endpoints() {
        let s = setup();
        assert!((h_func(&s, s.r1_sq()).unwrap() - 1.0).abs() < 1e-12);
        assert!((h_func(&s, s.r2_sq()).unwrap() - 1.0).abs() < 1e-12);
        assert!(h_func(&s, 0.0).is_err());
        assert!(companion_beta(&s, 0.5).is_err());
        assert!(companion_beta(&s, s.r2_sq()).is_err());
    }

    #[test]
    fn exponent_checks_source_power() {
        let m = SourceModel::gaussian(2.0).unwrap();
        let err = exponent(&m, &setup(), 1.0, CodebookKind::Spherical).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }
}
