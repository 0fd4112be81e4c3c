use gaussbook::asymptotics::{r_iid_star, r_sp};
use gaussbook::rng::stream_rng;
use gaussbook::shellprob::*;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

fn setup() -> DistortionSetup {
    DistortionSetup::new(1.0, 0.25).unwrap()
}

/// Direct simulation of one codeword against x = (√(nz), 0, …, 0) (spherical)
/// or x = (√z, …, √z) (i.i.d.). Returns (hits, trials).
fn simulate_single_codeword(
    s: &DistortionSetup,
    n: usize,
    z: f64,
    kind: CodebookKind,
    samples: usize,
    seed: u64,
) -> (usize, usize) {
    let streams = 64;
    let per = samples / streams;
    let hits: usize = (0..streams)
        .into_par_iter()
        .map(|stream| {
            let mut rng = stream_rng(seed, stream as u64);
            let mut y = vec![0.0; n];
            let mut hits = 0;
            for _ in 0..per {
                for v in y.iter_mut() {
                    *v = StandardNormal.sample(&mut rng);
                }
                match kind {
                    CodebookKind::Spherical => {
                        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                        let scale = (n as f64 * s.p_y()).sqrt() / norm;
                        y.iter_mut().for_each(|v| *v *= scale);
                    }
                    CodebookKind::IidGaussian => {
                        let sd = s.p_y().sqrt();
                        y.iter_mut().for_each(|v| *v *= sd);
                    }
                }
                let dist: f64 = match kind {
                    CodebookKind::Spherical => {
                        let x0 = (n as f64 * z).sqrt();
                        (y[0] - x0).powi(2) + y[1..].iter().map(|v| v * v).sum::<f64>()
                    }
                    CodebookKind::IidGaussian => {
                        let xi = z.sqrt();
                        y.iter().map(|v| (v - xi).powi(2)).sum()
                    }
                };
                if dist <= n as f64 * s.distortion() {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    (hits, per * streams)
}

/// Binomial score test: |p̂ − p₀| within `k` standard errors taken under p₀.
/// (The plug-in error collapses to zero when no hits are seen.)
fn agrees(p0: f64, hits: usize, trials: usize, k: f64) -> bool {
    let p_hat = hits as f64 / trials as f64;
    let se = (p0 * (1.0 - p0) / trials as f64).sqrt();
    (p_hat - p0).abs() <= k * se
}

#[test]
fn psi_and_upsilon_match_direct_simulation() {
    let s = setup();
    let n = 32;
    for (i, z) in [0.8, 1.0, 1.3].into_iter().enumerate() {
        let psi = psi_spherical(&s, n, z).unwrap().value.value();
        let (hits, trials) =
            simulate_single_codeword(&s, n, z, CodebookKind::Spherical, 1 << 20, 100 + i as u64);
        assert!(agrees(psi, hits, trials, 3.0), "Psi z={z}: exact {psi}, mc {hits}/{trials}");

        let ups = upsilon_iid(&s, n, z).unwrap().value.value();
        let (hits, trials) =
            simulate_single_codeword(&s, n, z, CodebookKind::IidGaussian, 1 << 20, 200 + i as u64);
        assert!(agrees(ups, hits, trials, 3.0), "Upsilon z={z}: exact {ups}, mc {hits}/{trials}");
    }
}

/// At n = 32, D = σ²/4 every probability above is below 1e-9, so the
/// simulation there only bounds them. These points see hundreds of hits.
#[test]
fn direct_simulation_resolves_moderate_probabilities() {
    for (d, n) in [(0.25, 8), (0.5, 16)] {
        let s = DistortionSetup::new(1.0, d).unwrap();
        for (i, z) in [0.8, 1.0, 1.3].into_iter().enumerate() {
            for (kind, exact) in [
                (CodebookKind::Spherical, psi_spherical(&s, n, z).unwrap().value.value()),
                (CodebookKind::IidGaussian, upsilon_iid(&s, n, z).unwrap().value.value()),
            ] {
                let (hits, trials) = simulate_single_codeword(&s, n, z, kind, 1 << 20, 300 + n as u64 + i as u64);
                assert!(hits >= 30, "{kind:?} n={n} z={z}: only {hits} hits");
                assert!(agrees(exact, hits, trials, 3.0), "{kind:?} n={n} z={z}: exact {exact}, mc {hits}/{trials}");
            }
        }
    }
}

#[test]
fn spherical_zero_region() {
    let s = setup();
    for n in [2, 10, 500] {
        for z in [0.01, 0.1, s.r1_sq() * 0.999, s.r2_sq() * 1.0001, 2.0, 10.0] {
            assert_eq!(psi_spherical(&s, n, z).unwrap().value.value(), 0.0, "n={n} z={z}");
        }
        assert!(psi_spherical(&s, n, 1.0).unwrap().value.value() > 0.0);
    }
}

#[test]
fn sandwich_bounds_hold() {
    for (s2, d) in [(1.0, 0.25), (1.0, 0.4), (2.0, 1.2)] {
        let s = DistortionSetup::new(s2, d).unwrap();
        let lo = s.r1_sq().max(s.turning_point());
        let hi = s.r2_sq();
        for n in [8, 16, 64, 256] {
            for k in 0..200 {
                let z = lo + (hi - lo) * k as f64 / 200.0;
                let psi = psi_spherical(&s, n, z).unwrap().ln_value;
                let gl = g_lower(&s, n, z).unwrap().ln_value;
                let gu = g_upper(&s, n, z).unwrap().ln_value;
                assert!(gl <= psi + 1e-12 * psi.abs().max(1.0), "lower n={n} z={z}: {gl} > {psi}");
                assert!(psi <= gu + 1e-12 * gu.abs().max(1.0), "upper n={n} z={z}: {psi} > {gu}");
            }
        }
    }
    let s = setup();
    for z in [1.0, 1.2, 1.5] {
        let psi = psi_spherical(&s, 64, z).unwrap().ln_value;
        assert!(g_lower(&s, 64, z).unwrap().ln_value <= psi);
        assert!(psi <= g_upper(&s, 64, z).unwrap().ln_value);
    }
}

#[test]
fn coverage_is_non_increasing_in_power() {
    let s = setup();
    for n in [4, 32, 300] {
        let mut prev_psi = f64::INFINITY;
        let mut prev_ups = f64::INFINITY;
        let mut z = s.turning_point();
        while z < 3.0 {
            let psi = psi_spherical(&s, n, z).unwrap().ln_value;
            let ups = upsilon_iid(&s, n, z).unwrap().ln_value;
            assert!(psi <= prev_psi + 1e-12, "Psi not monotone at n={n} z={z}");
            assert!(ups <= prev_ups + 1e-12, "Upsilon not monotone at n={n} z={z}");
            prev_psi = psi;
            prev_ups = ups;
            z += 0.01;
        }
    }
}

#[test]
fn upsilon_has_no_hard_zero() {
    let s = setup();
    for n in [1, 10, 200, 2000] {
        for z in [1e-6, 0.5, 1.0, 1.9, 2.5, 5.0] {
            let v = upsilon_iid(&s, n, z).unwrap();
            assert!(v.ln_value.is_finite() && v.ln_value < 0.0, "n={n} z={z}: {}", v.ln_value);
        }
    }
}

#[test]
fn finite_n_exponents_approach_rate_functions() {
    let s = setup();
    let z = 1.2;
    let n = 2000;
    let sp = -psi_spherical(&s, n, z).unwrap().ln_value / n as f64;
    let want = r_sp(&s, z).unwrap();
    assert!((sp / want - 1.0).abs() < 0.02, "spherical: {sp} vs {want}");
    let iid = -upsilon_iid(&s, n, z).unwrap().ln_value / n as f64;
    let want = r_iid_star(&s, z).unwrap();
    assert!((iid / want - 1.0).abs() < 0.02, "iid: {iid} vs {want}");
}

#[test]
fn upsilon_exact_matches_high_precision_reference() {
    // ln Υ(n, z) for σ² = 1, D = 0.25 from a 40-digit Poisson-mixture sum.
    let s = setup();
    for (n, z, want) in [
        (500, 1.0, -350.221_773_448_640_6),
        (1000, 1.0, -697.141_546_404_795_7),
        (2000, 1.0, -1390.635_104_495_731_6),
        (500, 1.2, -400.582_422_256_441_5),
        (1000, 1.2, -797.820_556_162_676_1),
        (2000, 1.2, -1591.950_738_592_818_2),
    ] {
        let got = upsilon_iid(&s, n, z).unwrap().ln_value;
        assert!((got - want).abs() < 1e-9 * want.abs(), "n={n} z={z}: {got} vs {want}");
    }
}

#[test]
fn bahadur_rao_is_asymptotically_exact() {
    let s = setup();
    let ratio = |n: usize, z: f64| {
        upsilon_iid(&s, n, z).unwrap().ln_value - upsilon_bahadur_rao(&s, n, z).unwrap().ln_value
    };
    let r500 = ratio(500, 1.0);
    assert!((0.5f64.ln()..=2f64.ln()).contains(&r500), "ln ratio {r500}");
    assert!(ratio(1000, 1.0).abs() < r500.abs());
    let seq: Vec<f64> = [500, 1000, 2000].iter().map(|&n| ratio(n, 1.2).abs()).collect();
    assert!(seq[0] > seq[1] && seq[1] > seq[2], "{seq:?}");
}
