//! End-to-end invariant suites run by `gaussbook validate`.
//!
//! Each suite reports the worst margin over its grid: the smallest amount by
//! which the checked inequality held (negative means it was violated).

use anyhow::Result;
use rayon::prelude::*;

use gaussbook::asymptotics::{
    companion_beta, exponent_curve, h_func, r_iid_star, r_sp, rd_function,
};
use gaussbook::ensemble::{pe_conditional, pe_direct, pe_quadrature, SimPlan};
use gaussbook::shellprob::{g_lower, g_upper, psi_spherical, upsilon_bahadur_rao, upsilon_iid};
use gaussbook::sources::source_from_json;
use gaussbook::{CodebookKind, DistortionSetup, SourceModel};

use crate::ValidateArgs;

pub const GAUSSIAN_FIXTURE: &str = include_str!("../fixtures/gaussian.json");
pub const TERNARY_FIXTURE: &str = include_str!("../fixtures/ternary.json");
pub const RAYLEIGH_FIXTURE: &str = include_str!("../fixtures/rayleigh.json");

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub name: &'static str,
    pub grid: String,
    pub worst_slack: f64,
    pub passed: bool,
}

fn fixtures() -> Result<Vec<(&'static str, SourceModel)>> {
    Ok(vec![
        ("gaussian", source_from_json(GAUSSIAN_FIXTURE)?),
        ("ternary", source_from_json(TERNARY_FIXTURE)?),
        ("rayleigh", source_from_json(RAYLEIGH_FIXTURE)?),
    ])
}

fn linspace(a: f64, b: f64, points: usize) -> impl Iterator<Item = f64> {
    (0..points).map(move |k| a + (b - a) * k as f64 / points as f64)
}

pub fn run_all(args: &ValidateArgs, seed: u64) -> Result<Vec<Outcome>> {
    let sources = fixtures()?;
    Ok(vec![
        sandwich(args.quick, args.corrupt_gupper)?,
        legendre_closed_form(args.quick, &sources)?,
        legendre_shape(args.quick, &sources)?,
        rate_ordering(args.quick)?,
        exponent_ordering(args.quick, &sources)?,
        companion_root()?,
        bahadur_rao()?,
        quadrature_vs_conditional(args.quick, &sources, seed)?,
        direct_vs_conditional(args.quick, seed)?,
    ])
}

/// `g̲ ≤ Ψ ≤ ḡ`, margins in log space.
///
/// The grid reaches down to n = 4 and past D = σ²/2: that is where ḡ is
/// tightest (Ψ = 1/2 at the turning point), so a mis-scaled bound shows up.
pub fn sandwich(quick: bool, corrupt_gupper: bool) -> Result<Outcome> {
    let ns: &[usize] = if quick { &[4, 8, 64] } else { &[4, 8, 16, 64, 256] };
    let points = if quick { 40 } else { 200 };
    let penalty = if corrupt_gupper { 0.5f64.ln() } else { 0.0 };
    let mut worst = f64::INFINITY;
    let mut ok = true;
    for d in [0.25, 0.4, 0.75] {
        let s = DistortionSetup::new(1.0, d)?;
        let lo = s.r1_sq().max(s.turning_point());
        for &n in ns {
            for z in linspace(lo, s.r2_sq(), points) {
                let psi = psi_spherical(&s, n, z)?.ln_value;
                let lower = psi - g_lower(&s, n, z)?.ln_value;
                let upper = g_upper(&s, n, z)?.ln_value + penalty - psi;
                let margin = lower.min(upper);
                ok &= margin >= -1e-12 * psi.abs().max(1.0);
                worst = worst.min(margin);
            }
        }
    }
    Ok(Outcome {
        name: "shell_sandwich",
        grid: format!("sigma2=1 D={{0.25,0.4,0.75}} n={ns:?} z:{points} pts"),
        worst_slack: worst,
        passed: ok,
    })
}

pub fn legendre_closed_form(quick: bool, sources: &[(&str, SourceModel)]) -> Result<Outcome> {
    let points = if quick { 50 } else { 400 };
    let mut worst = f64::INFINITY;
    for (name, m) in sources {
        let s2 = m.sigma2()?;
        let weight = match *name {
            "gaussian" => 0.5,
            "rayleigh" => 1.0,
            _ => continue,
        };
        for t in linspace(s2, 5.0 * s2, points + 1) {
            let r = t / s2;
            let want = weight * (r - 1.0 - r.ln());
            let got = m.legendre_x2(t)?.value.to_f64();
            worst = worst.min(1e-8 - (got - want).abs());
        }
    }
    Ok(Outcome {
        name: "legendre_closed_form",
        grid: format!("gaussian,rayleigh t in [s2,5s2] {points} pts tol 1e-8"),
        worst_slack: worst,
        passed: worst >= 0.0,
    })
}

/// Non-decreasing, convex, and strictly increasing above σ².
pub fn legendre_shape(quick: bool, sources: &[(&str, SourceModel)]) -> Result<Outcome> {
    let points = if quick { 60 } else { 300 };
    let mut worst = f64::INFINITY;
    let mut ok = true;
    for (_, m) in sources {
        let s2 = m.sigma2()?;
        let hi = m.max_x2().unwrap_or(5.0 * s2);
        let ts: Vec<f64> = linspace(0.0, hi, points).collect();
        let v: Vec<f64> = ts
            .iter()
            .map(|&t| m.legendre_x2(t).map(|p| p.value.to_f64()))
            .collect::<gaussbook::Result<_>>()?;
        for k in 1..v.len() {
            let step = v[k] - v[k - 1];
            if ts[k - 1] > s2 {
                ok &= step > 1e-12;
            }
            ok &= step >= -1e-12;
            worst = worst.min(step);
            if k + 1 < v.len() {
                let curv = v[k + 1] - 2.0 * v[k] + v[k - 1];
                ok &= curv >= -1e-9;
                worst = worst.min(curv);
            }
        }
    }
    Ok(Outcome {
        name: "legendre_shape",
        grid: format!("all fixtures t in [0,max] {points} pts"),
        worst_slack: worst,
        passed: ok,
    })
}

pub fn rate_ordering(quick: bool) -> Result<Outcome> {
    let points = if quick { 100 } else { 1000 };
    let mut worst = f64::INFINITY;
    for d in [0.1, 0.25, 0.6] {
        let s = DistortionSetup::new(1.0, d)?;
        for z in linspace(1.0, s.r2_sq(), points).skip(1) {
            worst = worst.min(r_sp(&s, z)? - r_iid_star(&s, z)?);
        }
    }
    Ok(Outcome {
        name: "rate_ordering",
        grid: format!("sigma2=1 D={{0.1,0.25,0.6}} z in (s2,r2^2) {points} pts"),
        worst_slack: worst,
        passed: worst > 0.0,
    })
}

/// `E_iid(R) > E_sp(R)` beyond the rate-distortion function.
pub fn exponent_ordering(quick: bool, sources: &[(&str, SourceModel)]) -> Result<Outcome> {
    let steps = if quick { 20 } else { 80 };
    let mut worst = f64::INFINITY;
    for (_, m) in sources {
        let s2 = m.sigma2()?;
        let setup = DistortionSetup::new(s2, 0.25 * s2)?;
        let rd = rd_function(s2, setup.distortion())?;
        let rates: Vec<f64> = (1..=steps).map(|k| rd + 1.5 * k as f64 / steps as f64).collect();
        let sp = exponent_curve(m, &setup, &rates, CodebookKind::Spherical)?;
        let iid = exponent_curve(m, &setup, &rates, CodebookKind::IidGaussian)?;
        for (a, b) in sp.iter().zip(&iid) {
            let gap = b.exponent.to_f64() - a.exponent.to_f64();
            worst = worst.min(gap);
        }
    }
    Ok(Outcome {
        name: "exponent_ordering",
        grid: format!("all fixtures D=s2/4 R in (R(D),R(D)+1.5] {steps} pts"),
        worst_slack: worst,
        passed: worst > 0.0,
    })
}

pub fn companion_root() -> Result<Outcome> {
    let mut worst = f64::INFINITY;
    for d in [0.1, 0.25, 0.45] {
        let s = DistortionSetup::new(1.0, d)?;
        for alpha in linspace(1.0, s.r2_sq(), 50) {
            let beta = companion_beta(&s, alpha)?;
            let level = 1e-12 - (h_func(&s, beta)? - h_func(&s, alpha)?).abs();
            let sum = 2.0 - alpha - beta;
            worst = worst.min(level.min(sum));
        }
    }
    Ok(Outcome {
        name: "companion_root",
        grid: "sigma2=1 D={0.1,0.25,0.45} alpha in [s2,r2^2) 50 pts".into(),
        worst_slack: worst,
        passed: worst >= 0.0,
    })
}

/// `|ln(Υ / approx)|` shrinks as n doubles.
pub fn bahadur_rao() -> Result<Outcome> {
    let s = DistortionSetup::new(1.0, 0.25)?;
    let mut worst = f64::INFINITY;
    for z in [1.0, 1.2, 1.5] {
        let gaps = [500, 1000, 2000]
            .iter()
            .map(|&n| {
                Ok((upsilon_iid(&s, n, z)?.ln_value - upsilon_bahadur_rao(&s, n, z)?.ln_value).abs())
            })
            .collect::<gaussbook::Result<Vec<f64>>>()?;
        worst = worst.min(gaps[0] - gaps[1]).min(gaps[1] - gaps[2]);
    }
    Ok(Outcome {
        name: "bahadur_rao_convergence",
        grid: "sigma2=1 D=0.25 z={1,1.2,1.5} n={500,1000,2000}".into(),
        worst_slack: worst,
        passed: worst > 0.0,
    })
}

/// Quadrature inside four conditional-MC standard errors.
pub fn quadrature_vs_conditional(
    quick: bool,
    sources: &[(&str, SourceModel)],
    seed: u64,
) -> Result<Outcome> {
    let samples = if quick { 20_000 } else { 100_000 };
    let n = 100;
    let mut cells = Vec::new();
    for (_, m) in sources.iter().filter(|(_, m)| m.power_density(1).is_some()) {
        let s2 = m.sigma2()?;
        let setup = DistortionSetup::new(s2, 0.25 * s2)?;
        let rd = rd_function(s2, setup.distortion())?;
        for kind in [CodebookKind::Spherical, CodebookKind::IidGaussian] {
            for back_off in [-0.05, 0.0, 0.05] {
                cells.push((m, setup, kind, n as f64 * (rd + back_off)));
            }
        }
    }
    let margins = cells
        .par_iter()
        .enumerate()
        .map(|(i, (m, setup, kind, log_m))| {
            let plan = SimPlan::new(n, log_m.max(0.0), *kind)
                .with_samples(samples)
                .with_seed(seed.wrapping_add(i as u64));
            let q = pe_quadrature(m, setup, &plan)?;
            let c = pe_conditional(m, setup, &plan)?;
            Ok(4.0 * c.std_error - (q.value.value() - c.value.value()).abs())
        })
        .collect::<gaussbook::Result<Vec<f64>>>()?;
    let worst = margins.into_iter().fold(f64::INFINITY, f64::min);
    Ok(Outcome {
        name: "quadrature_vs_conditional",
        grid: format!("gaussian,rayleigh n={n} both kinds ln M = n(R(D)+{{-0.05,0,0.05}}) {samples} samples"),
        worst_slack: worst,
        passed: worst >= 0.0,
    })
}

/// Brute-force codebooks against conditional MC, within four combined errors.
pub fn direct_vs_conditional(quick: bool, seed: u64) -> Result<Outcome> {
    let (m_count, trials) = if quick { (64, 10_000) } else { (256, 40_000) };
    let m = source_from_json(GAUSSIAN_FIXTURE)?;
    let setup = DistortionSetup::new(1.0, 0.5)?;
    let mut worst = f64::INFINITY;
    for kind in [CodebookKind::Spherical, CodebookKind::IidGaussian] {
        let d = pe_direct(&m, &setup, 16, m_count, trials, seed, kind)?;
        let plan = SimPlan::new(16, (m_count as f64).ln(), kind).with_seed(seed.wrapping_add(1));
        let c = pe_conditional(&m, &setup, &plan)?;
        let se = d.std_error.hypot(c.std_error);
        worst = worst.min(4.0 * se - (d.value.value() - c.value.value()).abs());
    }
    Ok(Outcome {
        name: "direct_vs_conditional",
        grid: format!("gaussian D=0.5 n=16 M={m_count} {trials} trials both kinds"),
        worst_slack: worst,
        passed: worst >= 0.0,
    })
}
