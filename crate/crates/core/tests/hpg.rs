mod common;

use common::bd;
use metatrap::chain::numeric_labels;
use metatrap::hitting::{mean_hitting_time, survival_function};
use metatrap::hpg::{
    assemble_certificate, assess, certify, check_e, check_rc, check_t, compute_b_alpha, escape_functional,
    escape_profile, exponentiality_report, measure_convdtv, verify_convdtv, HpgCertificate, HpgParameters,
};
use metatrap::measures::{d_bar_k, doubly_conditioned_evolution, quasi_stationary, restricted_invariant, TrapPartition};
use metatrap::models::{build_birth_death_truncated, build_tiar_projection, build_tiar_projection_continuous};
use metatrap::{tv_distance, Error, FiniteChain, ProbabilityVector, TimeKind};
use proptest::prelude::*;

fn tiar(n: usize) -> (FiniteChain, TrapPartition) {
    (build_tiar_projection(n).unwrap(), TrapPartition::from_target(n, &[0]).unwrap())
}

fn tiar_r(n: usize) -> f64 {
    4.0 * n as f64 * (n as f64).ln()
}

/// Certified instance with the basin attached to the partition.
fn certified(chain: &FiniteChain, part: &TrapPartition, big_r: f64) -> (HpgCertificate, TrapPartition) {
    let cert = certify(chain, part, &HpgParameters::new(big_r, 0.5).unwrap()).unwrap();
    let with_b = part.clone().with_basin(&cert.b_alpha, 0.5).unwrap();
    (cert, with_b)
}

/// Two states exchanging at rate 1, each leaking to a third at rate ε.
fn leaky_pair(eps: f64) -> (FiniteChain, TrapPartition) {
    let c = FiniteChain::continuous(
        numeric_labels(3),
        &[(0, 1, 1.0), (1, 0, 1.0), (0, 2, eps), (1, 2, eps), (2, 0, 1.0), (2, 1, 1.0)],
    )
    .unwrap();
    (c, TrapPartition::from_trap(3, &[0, 1]).unwrap())
}

fn grid(from: f64, to: f64, points: usize) -> Vec<f64> {
    let ratio = (to / from).powf(1.0 / (points - 1) as f64);
    (0..points).map(|k| from * ratio.powi(k as i32)).collect()
}

#[test]
fn escape_functional_basics() {
    let (c, part) = tiar(8);
    let pi = c.stationary_measure().unwrap();
    assert_eq!(escape_functional(&c, &pi, &part, 0.0).unwrap(), 0.0);

    let (b, bpart) = bd(40);
    let pi = b.stationary_measure().unwrap();
    let prof = escape_profile(&b, &pi, &bpart, 500.0).unwrap();
    for x in bpart.a() {
        assert!((prof.forward[*x] - prof.backward[*x]).abs() < 1e-12);
    }
    assert!((prof.f - prof.single_sided).abs() < 1e-12);
    assert!(prof.f > 0.0 && prof.f < 1.0);
}

#[test]
fn escape_matches_killed_survival() {
    let (c, part) = tiar(7);
    let pi = c.stationary_measure().unwrap();
    let pa = restricted_invariant(&pi, &part).unwrap();
    let t = 60.0;
    let s = survival_function(&c, &pa, &[0], &[t]).unwrap().survival[0];
    let prof = escape_profile(&c, &pi, &part, t).unwrap();
    assert!((prof.single_sided - (1.0 - s)).abs() < 1e-13);
    // Two identical sums of nonnegative terms, so f equals the one-sided value.
    assert!((prof.f - prof.single_sided).abs() < 1e-10);
}

#[test]
fn certain_escape_gives_whole_trap_as_basin() {
    let flip = FiniteChain::discrete(numeric_labels(2), &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
    let part = TrapPartition::from_trap(2, &[0]).unwrap();
    let (f, pass) = check_e(&flip, &part, 1.0, 1.0).unwrap();
    assert_eq!((f, pass), (1.0, true));
    assert_eq!(compute_b_alpha(&flip, &part, 1.0, 0.5).unwrap(), vec![0]);
    let (_, pass) = check_e(&flip, &part, 1.0, 0.5).unwrap();
    assert!(!pass);
}

#[test]
fn birth_death_at_n_pow_2_3() {
    let mut fs = Vec::new();
    for n in [50usize, 100, 200] {
        let (c, part) = bd(n);
        let big_r = (n as f64).powf(2.3);
        let cert = assess(&c, &part, &HpgParameters::new(big_r, 0.5).unwrap()).unwrap();
        let root = (n as f64).sqrt().floor() as usize;
        assert!((0..=root).all(|x| cert.b_alpha.contains(&x)), "n = {n}");
        if n == 100 {
            // Coupling bound through the reflected chain's descent time.
            let half = build_birth_death_truncated(n, n / 2).unwrap();
            assert!(cert.d <= mean_hitting_time(&half, n / 2, &[0]).unwrap() / big_r);
        }
        let pi = c.stationary_measure().unwrap();
        let pa = restricted_invariant(&pi, &part).unwrap();
        assert!(pa.mass_of(&cert.b_alpha) >= 1.0 - cert.f.powf(0.5));
        // R exceeds the mean exit time here, so f stays close to 1 and nothing is certified.
        assert!(!cert.applicable && cert.epsilon1.is_none());
        let t_star = quasi_stationary(&c, &part).unwrap().mean_exit_time;
        assert!(big_r > t_star);
        fs.push(cert.f);
    }
    assert!(fs.windows(2).all(|w| w[1] < w[0]), "{fs:?}");
}

#[test]
fn tiar_escape_and_memory_loss() {
    let n = 10usize;
    let (c, part) = tiar(n);
    let big_r = n as f64 * (n as f64).ln();
    let (f, _) = check_e(&c, &part, big_r, 1.0).unwrap();
    // Union bound on 2R steps through the return-versus-hit estimates, conditioned on A.
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    let harmonic: f64 = (2..=n).map(|j| 1.0 / j as f64).sum();
    let bound = (2.0 * big_r).floor() * (n - 1) as f64 / fact * harmonic / (1.0 - 1.0 / fact);
    assert!(f > 0.0 && f <= bound, "{f} vs {bound}");

    let b = compute_b_alpha(&c, &part, tiar_r(n), 0.5).unwrap();
    assert!(check_t(&c, &b, tiar_r(n)).unwrap() < 0.05);
    assert_eq!(check_t(&c, &b[..1], tiar_r(n)).unwrap(), 0.0);
}

#[test]
fn recurrence_checks() {
    let (c, part) = bd(20);
    let all_a: Vec<usize> = part.a().to_vec();
    assert_eq!(check_rc(&c, &all_a, part.g(), 3.0).unwrap(), 0.0);

    let b = [0usize, 1, 2];
    let big_r = 15.0;
    let r1 = check_rc(&c, &b, part.g(), big_r).unwrap();
    assert!(r1 > 1e-6 && r1 < 1.0, "{r1}");
    for k in [2, 3] {
        let rk = check_rc(&c, &b, part.g(), k as f64 * big_r).unwrap();
        assert!(rk <= r1.powi(k) * (1.0 + 1e-12), "k = {k}");
    }
}

#[test]
fn mixing_shortcut_bounds_recurrence() {
    for (c, part, big_r) in [
        (tiar(9).0, tiar(9).1, tiar_r(9)),
        (tiar(10).0, tiar(10).1, 10.0 * 10f64.ln()),
        (leaky_pair(1e-5).0, leaky_pair(1e-5).1, 20.0),
    ] {
        let cert = certify(&c, &part, &HpgParameters::new(big_r, 0.5).unwrap()).unwrap();
        let t = if c.time_kind() == TimeKind::Discrete { big_r.floor() } else { big_r };
        let d_a = d_bar_k(&c, part.a(), t).unwrap();
        assert!(cert.r <= d_a + cert.f + cert.f.powf(0.5) + 1e-15);
    }
}

#[test]
fn certificate_example_arithmetic() {
    let cert = assemble_certificate(1.0, 0.5, 1e-4, 1e-3, 1e-3, vec![0]);
    // c = 0.001 + 2·0.01; c̄ = ½ − √(¼ − c) = (1 − √0.916)/2.
    let c_bar = (1.0 - 0.916f64.sqrt()) / 2.0;
    assert!((cert.c - 0.021).abs() < 1e-15);
    assert!((cert.c_bar.unwrap() - c_bar).abs() < 1e-15);
    assert!((cert.c_bar.unwrap() - 0.021_460_56).abs() < 5e-9);
    assert!((cert.epsilon1.unwrap() - 0.130_642_2).abs() < 5e-8);
    assert!((cert.epsilon2.unwrap() - 0.140_642_2).abs() < 5e-8);
    assert!(cert.applicable);
}

#[test]
fn certify_reports_measurements_when_not_applicable() {
    let (c, part) = bd(50);
    let params = HpgParameters::new(50f64.powf(2.3), 0.5).unwrap();
    let measured = assess(&c, &part, &params).unwrap();
    match certify(&c, &part, &params) {
        Err(Error::NotApplicable(cert)) => {
            assert_eq!((cert.f, cert.d, cert.r), (measured.f, measured.d, measured.r));
            assert!(cert.r + 2.0 * cert.f.sqrt() >= 0.25);
        }
        other => panic!("{other:?}"),
    }
    let edge = assemble_certificate(1.0, 0.5, 0.015625, 0.0, 0.0, vec![]);
    assert_eq!(edge.c, 0.25);
    assert!(!edge.applicable && edge.c_bar == Some(0.5));
}

#[test]
fn convergence_bounds_hold_on_certified_instances() {
    for n in [8usize, 10] {
        let (c, part) = tiar(n);
        let big_r = tiar_r(n);
        let (cert, with_b) = certified(&c, &part, big_r);
        let t_star = quasi_stationary(&c, &part).unwrap().mean_exit_time;
        let rep = verify_convdtv(&c, &with_b, &cert, &grid(2.0 * big_r, 20.0 * t_star, 40)).unwrap();
        assert!(rep.hat_vs_restricted.value <= cert.epsilon1.unwrap());
        assert!(rep.empirical_vs_restricted.value <= cert.epsilon1.unwrap());
        // Starts outside B_α have a null conditioning event at t = 2R only.
        let outside = part.a().len() - cert.b_alpha.len();
        assert!(rep.skipped <= outside, "{} > {outside}", rep.skipped);
    }
}

#[test]
fn convergence_report_matches_direct_evolution() {
    let n = 8;
    let (c, part) = tiar(n);
    let big_r = tiar_r(n).floor();
    let (cert, with_b) = certified(&c, &part, big_r);
    let pa = restricted_invariant(&c.stationary_measure().unwrap(), &part).unwrap();
    let times = [2.0 * big_r + 1.0, 150.0, 400.0, 1000.0];
    let rep = measure_convdtv(&c, &with_b, &cert, &times).unwrap();
    let mut brute = 0.0f64;
    for &x in part.a() {
        for &t in &times {
            let hat = doubly_conditioned_evolution(&c, x, &with_b, t, big_r).unwrap();
            brute = brute.max(tv_distance(&hat.measure, &pa).unwrap());
        }
    }
    assert!((rep.hat_vs_restricted.value - brute).abs() < 1e-10, "{} vs {brute}", rep.hat_vs_restricted.value);
}

#[test]
fn degenerate_basin_bound() {
    let (c, part) = leaky_pair(1e-5);
    let (cert, with_b) = certified(&c, &part, 20.0);
    assert_eq!(cert.b_alpha, vec![0, 1]);
    let rep = verify_convdtv(&c, &with_b, &cert, &grid(40.0, 1e6, 30)).unwrap();
    let (value, limit) = rep.degenerate.unwrap();
    assert!(value <= limit && (limit - cert.f / (1.0 - cert.f)).abs() < 1e-18);
}

#[test]
fn exponentiality_on_certified_instances() {
    for n in [9usize, 10] {
        let (c, part) = tiar(n);
        let big_r = tiar_r(n);
        let (cert, with_b) = certified(&c, &part, big_r);
        let t_star = quasi_stationary(&c, &part).unwrap().mean_exit_time;
        let rep = exponentiality_report(&c, &with_b, &cert, &grid(1.0, 20.0 * t_star, 60), 10.0).unwrap();
        assert_eq!(rep.per_start_deviations.len(), cert.b_alpha.len());
        let eps = rep.epsilon;
        assert!((rep.mean_ratio_restricted - 1.0).abs() <= eps);
        for (x, ratio) in &rep.mean_ratio_basin {
            assert!((ratio - 1.0).abs() <= eps, "x = {x}: {ratio}");
        }
        assert!(rep.within_reference.unwrap());
        // Recurrence time negligible against T*.
        let conv = measure_convdtv(&c, &with_b, &cert, &[2.0 * big_r]).unwrap();
        assert!(big_r / t_star <= 10.0 * (cert.f + conv.delta));
    }
}

#[test]
fn qsd_start_is_exactly_exponential() {
    let n = 9;
    let c = build_tiar_projection_continuous(n).unwrap();
    let part = TrapPartition::from_target(n, &[0]).unwrap();
    let (cert, with_b) = certified(&c, &part, tiar_r(n));
    let t_star = quasi_stationary(&c, &part).unwrap().mean_exit_time;
    let rep = exponentiality_report(&c, &with_b, &cert, &grid(1.0, 20.0 * t_star, 60), 10.0).unwrap();
    assert!(rep.qsd_deviation <= 1e-8, "{}", rep.qsd_deviation);
    assert!((rep.t_star - t_star).abs() <= 1e-12 * t_star);
}

#[test]
fn survival_ratio_after_basin_start() {
    // 1 ≤ P(τ^x > t − t')/P(τ^x > t) ≤ 1 + 2c̄ for x ∈ B_α, t ≥ 2R, t' ≤ R.
    let n = 10;
    let (c, part) = tiar(n);
    let big_r = tiar_r(n).floor();
    let (cert, _) = certified(&c, &part, big_r);
    let c_bar = cert.c_bar.unwrap();
    let t_star = quasi_stationary(&c, &part).unwrap().mean_exit_time;
    for &x in &cert.b_alpha {
        for t in [2.0 * big_r, 5.0 * big_r, 0.5 * t_star, 3.0 * t_star] {
            let t = t.floor();
            let mut ts: Vec<f64> = [0.0, 0.25, 0.5, 1.0].iter().map(|u| t - (u * big_r).floor()).collect();
            ts.reverse();
            let s = survival_function(&c, &ProbabilityVector::point_mass(n, x), &[0], &ts).unwrap().survival;
            let last = *s.last().unwrap();
            for v in &s {
                let ratio = v / last;
                assert!(ratio >= 1.0 && ratio <= 1.0 + 2.0 * c_bar, "x = {x}, t = {t}: {ratio}");
            }
        }
    }
}

#[test]
fn tiar_family_is_certified() {
    for n in 8..=12 {
        let (c, part) = tiar(n);
        let cert = certify(&c, &part, &HpgParameters::new(tiar_r(n), 0.5).unwrap()).unwrap();
        assert!(cert.applicable && cert.epsilon2.unwrap() < 1.0, "n = {n}");
        assert_eq!(cert.epsilon2.unwrap(), cert.epsilon1.unwrap() + cert.f.powf(0.5));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn certificate_recomputes_exactly(f in 0.0f64..0.02, d in 0.0f64..0.5, r in 0.0f64..0.3, alpha in 0.05f64..0.95) {
        let cert = assemble_certificate(3.0, alpha, f, d, r, vec![]);
        let back: serde_json::Value = serde_json::from_str(&serde_json::to_string(&cert).unwrap()).unwrap();
        let (f2, d2, r2, a2) = (
            back["f"].as_f64().unwrap(),
            back["d"].as_f64().unwrap(),
            back["r"].as_f64().unwrap(),
            back["alpha"].as_f64().unwrap(),
        );
        let again = assemble_certificate(3.0, a2, f2, d2, r2, vec![]);
        prop_assert_eq!(again.epsilon1, cert.epsilon1);
        prop_assert_eq!(again.epsilon2, cert.epsilon2);
        let c = r + 2.0 * f.powf(alpha);
        prop_assert_eq!(cert.applicable, c < 0.25);
        prop_assert_eq!(cert.c_bar.is_some(), c <= 0.25);
        if let (Some(e1), Some(e2)) = (cert.epsilon1, cert.epsilon2) {
            prop_assert_eq!(e2, e1 + f.powf(1.0 - alpha));
            prop_assert_eq!(back["epsilon1"].as_f64().unwrap(), e1);
        } else {
            prop_assert!(back["epsilon1"].is_null());
        }
    }
}
