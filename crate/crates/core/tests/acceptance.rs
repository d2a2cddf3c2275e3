//! Acceptance criteria, one PASS/FAIL line each. Run with `cargo test --test acceptance`.

use std::time::Instant;

use metatrap::grid::geometric_grid;
use metatrap::hitting::survival_function;
use metatrap::hpg::{
    assess, escape_profile, exponential_deviation, verify_convdtv, HpgCertificate, HpgParameters,
};
use metatrap::io::write_samples_csv;
use metatrap::measures::{d_bar_k, empirical_measure, quasi_stationary, restricted_invariant, TrapPartition};
use metatrap::models::{
    birth_death_asymptotics_check, build_birth_death, build_tiar_full, build_tiar_projection, project_and_verify_lumping,
    tiar_stationary, xik0_bound_check, BirthDeathSpec,
};
use metatrap::montecarlo::{occupation_frequencies, sample_hitting_times, SamplerConfig};
use metatrap::{FiniteChain, ProbabilityVector, Result};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn bd_part(n: usize) -> Result<(FiniteChain, TrapPartition)> {
    let spec = BirthDeathSpec::new(n)?;
    let chain = build_birth_death(n)?;
    let part = TrapPartition::from_trap(n + 1, &spec.trap())?;
    Ok((chain, part))
}

fn tiar_part(n: usize) -> Result<(FiniteChain, TrapPartition)> {
    let chain = build_tiar_projection(n)?;
    let part = TrapPartition::from_target(n, &[0])?;
    Ok((chain, part))
}

fn with_basin(part: TrapPartition, cert: &HpgCertificate) -> Result<TrapPartition> {
    part.with_basin(&cert.b_alpha, cert.alpha)
}

fn c1_exact_exponential() -> Result<Outcome> {
    let (chain, part) = bd_part(50)?;
    let qsd = quasi_stationary(&chain, &part)?;
    let t_star = qsd.mean_exit_time;
    let units: Vec<f64> = std::iter::once(0.0).chain(geometric_grid(1e-4, 20.0, 64)?).collect();
    let times: Vec<f64> = units.iter().map(|u| u * t_star).collect();
    let curve = survival_function(&chain, &qsd.measure, part.g(), &times)?;
    let sup = units.iter().zip(&curve.survival).map(|(u, s)| (s - (-u).exp()).abs()).fold(0.0, f64::max);
    outcome(sup <= 1e-8, format!("sup |P(tau > tT*) - e^-t| = {sup:.3e} (limit 1e-8), T* = {t_star:.6}"))
}

fn c2_tiar_stationary() -> Result<Outcome> {
    let mut worst = 0.0f64;
    for n in 2..=30 {
        let pi = build_tiar_projection(n)?.stationary_measure()?;
        let formula = tiar_stationary(n);
        worst = pi.as_slice().iter().zip(&formula).map(|(a, b)| (a - b).abs()).fold(worst, f64::max);
    }
    outcome(worst <= 1e-12, format!("max |pi - formula| over n = 2..30 is {worst:.3e} (limit 1e-12)"))
}

fn c3_lumping() -> Result<Outcome> {
    let mut rows = 0;
    let mut disc = 0.0f64;
    for n in 3..=7 {
        let rep = project_and_verify_lumping(&build_tiar_full(n)?, n)?;
        rows += rep.rows_checked;
        disc = disc.max(rep.max_discrepancy);
    }
    outcome(true, format!("{rows} permutation rows project exactly (float pushforward discrepancy {disc:.1e})"))
}

fn c4_xik0() -> Result<Outcome> {
    let mut rows = 0;
    let mut k1_gap = 0.0f64;
    for n in 2..=12 {
        let r = xik0_bound_check(n)?;
        rows += r.len();
        k1_gap = k1_gap.max((r[0].probability - 1.0 / n as f64).abs());
    }
    outcome(k1_gap <= 1e-12, format!("{rows} (n, k) pairs within the bound; max |p(k=1) - 1/n| = {k1_gap:.1e}"))
}

fn reversal_gap(chain: &FiniteChain, part: &TrapPartition, times: &[f64]) -> Result<f64> {
    let pi = chain.stationary_measure()?;
    let pi_a = restricted_invariant(&pi, part)?;
    let mut gap = 0.0f64;
    for &t in times {
        let p = escape_profile(chain, &pi, part, t)?;
        let back: f64 = part.a().iter().map(|&x| pi_a[x] * p.backward[x]).sum();
        gap = gap.max((p.single_sided - back).abs());
    }
    Ok(gap)
}

fn cycle_with_trap() -> Result<(FiniteChain, TrapPartition)> {
    let labels = ["a", "b", "c", "out"].iter().map(|s| s.to_string()).collect();
    let rates = [(0, 1, 3.0), (1, 2, 3.0), (2, 0, 3.0), (1, 0, 0.5), (2, 1, 0.5), (0, 2, 0.5), (2, 3, 0.2), (3, 0, 1.0), (3, 1, 0.4)];
    let chain = FiniteChain::continuous(labels, &rates)?;
    let part = TrapPartition::from_trap(4, &[0, 1, 2])?;
    Ok((chain, part))
}

fn c5_time_reversal() -> Result<Outcome> {
    let times = [0.1, 1.0, 10.0, 100.0, 1000.0];
    let (bd, bd_p) = bd_part(50)?;
    let g1 = reversal_gap(&bd, &bd_p, &times)?;
    let (cyc, cyc_p) = cycle_with_trap()?;
    let pi = cyc.stationary_measure()?;
    let rev = cyc.adjoint(&pi)?;
    let nonreversible = (cyc.jump(0, 1) - rev.jump(0, 1)).abs() > 1e-3;
    let g2 = reversal_gap(&cyc, &cyc_p, &times)?;
    outcome(
        g1 <= 1e-10 && g2 <= 1e-10 && nonreversible,
        format!("birth-death gap {g1:.1e}, 3-cycle gap {g2:.1e} (limit 1e-10; cycle non-reversible: {nonreversible})"),
    )
}

fn tiar_instances() -> Vec<(String, usize, f64)> {
    (8..=12).map(|n: usize| (format!("tiar n={n}"), n, 4.0 * n as f64 * (n as f64).ln())).collect()
}

fn c6_basin_mass() -> Result<Outcome> {
    let mut certified = 0;
    let mut worst = f64::INFINITY;
    let mut names = Vec::new();
    let mut instances: Vec<(String, FiniteChain, TrapPartition, f64)> = Vec::new();
    for (name, n, r) in tiar_instances() {
        let (c, p) = tiar_part(n)?;
        instances.push((name, c, p, r));
    }
    for n in [50usize, 100] {
        let (c, p) = bd_part(n)?;
        instances.push((format!("bd n={n}"), c, p, (n as f64).powf(2.3)));
    }
    for (name, chain, part, r) in instances {
        let cert = assess(&chain, &part, &HpgParameters::new(r, 0.5)?)?;
        if !cert.applicable {
            continue;
        }
        certified += 1;
        let pi_a = restricted_invariant(&chain.stationary_measure()?, &part)?;
        let slack = pi_a.mass_of(&cert.b_alpha) - (1.0 - cert.f.powf(1.0 - cert.alpha));
        worst = worst.min(slack);
        names.push(name);
    }
    outcome(
        certified > 0 && worst >= 0.0,
        format!("{certified} certified instances [{}]; min pi_A(B) - (1 - f^(1-a)) = {worst:.3e}", names.join(", ")),
    )
}

fn c7_convdtv() -> Result<Outcome> {
    let n = 200;
    let (chain, part) = bd_part(n)?;
    let r = (n as f64).powf(2.3);
    let cert = assess(&chain, &part, &HpgParameters::new(r, 0.5)?)?;
    if !cert.applicable {
        return outcome(
            false,
            format!(
                "certificate not applicable at R = n^2.3 = {r:.4e}: f = {:.4}, d = {:.3e}, r = {:.3e}, c = {:.4} >= 1/4",
                cert.f, cert.d, cert.r, cert.c
            ),
        );
    }
    let part = with_basin(part, &cert)?;
    let t_star = quasi_stationary(&chain, &part)?.mean_exit_time;
    let grid = geometric_grid(2.0 * r, 20.0 * t_star, 64)?;
    match verify_convdtv(&chain, &part, &cert, &grid) {
        Ok(rep) => outcome(
            true,
            format!(
                "hat/pi {:.3e} <= e1 {:.3e}; tilde/pi {:.3e} <= e2 {:.3e}; hat/mu* {:.3e}",
                rep.hat_vs_restricted.value, rep.epsilon1, rep.conditioned_vs_restricted.value, rep.epsilon2, rep.hat_vs_qsd.value
            ),
        ),
        Err(e) => outcome(false, e.to_string()),
    }
}

fn c8_trend() -> Result<Outcome> {
    let mut eps = Vec::new();
    for n in [50usize, 100, 200] {
        let (chain, part) = bd_part(n)?;
        let t_star = quasi_stationary(&chain, &part)?.mean_exit_time;
        let grid: Vec<f64> = std::iter::once(0.0).chain(geometric_grid(1e-4 * t_star, 20.0 * t_star, 64)?).collect();
        let pi_a = restricted_invariant(&chain.stationary_measure()?, &part)?;
        eps.push(exponential_deviation(&chain, &part, &pi_a, &grid)?.0);
    }
    let decreasing = eps.windows(2).all(|w| w[1] < w[0]);
    outcome(decreasing, format!("eps_n for n = 50, 100, 200: {:.5}, {:.5}, {:.5}", eps[0], eps[1], eps[2]))
}

fn c9_asymptotics() -> Result<Outcome> {
    let rows = birth_death_asymptotics_check(&[100, 400, 1600], 0.5)?;
    let spread = |v: &[f64]| v.iter().copied().fold(f64::MIN, f64::max) / v.iter().copied().fold(f64::MAX, f64::min);
    let climb: Vec<f64> = rows.iter().map(|r| r.climb_ratio).collect();
    let descent: Vec<f64> = rows.iter().map(|r| r.descent_ratio).collect();
    let escape = rows.last().unwrap().escape_ratio;
    let p1 = spread(&climb) < 2.0;
    let p2 = spread(&descent) < 2.0 && descent.windows(2).all(|w| w[1] <= w[0]);
    let p3 = (0.8..=1.25).contains(&escape);
    outcome(
        p1 && p2 && p3,
        format!(
            "climb ratios {:.4?} [{}]; descent ratios {:.4?} [{}]; escape ratio at n = 1600 {escape:.4} in [0.8, 1.25] [{}]",
            climb,
            if p1 { "ok" } else { "fail" },
            descent,
            if p2 { "ok" } else { "fail" },
            if p3 { "ok" } else { "fail" }
        ),
    )
}

fn c10_monte_carlo() -> Result<Outcome> {
    let n = 20;
    let (chain, part) = bd_part(n)?;
    let big_n = 100_000;
    let t_star = quasi_stationary(&chain, &part)?.mean_exit_time;
    let start = ProbabilityVector::point_mass(n + 1, 0);
    let cfg = SamplerConfig::new(20261016, big_n, 50.0 * t_star)?;
    let emp1 = sample_hitting_times(&chain, &start, part.g(), &cfg.clone().with_threads(1))?;
    let emp8 = sample_hitting_times(&chain, &start, part.g(), &cfg.clone().with_threads(8))?;
    let (mut csv1, mut csv8) = (Vec::new(), Vec::new());
    write_samples_csv(&mut csv1, &emp1)?;
    write_samples_csv(&mut csv8, &emp8)?;
    let grid: Vec<f64> = std::iter::once(0.0).chain(geometric_grid(1e-3 * t_star, 10.0 * t_star, 32)?).collect();
    let exact = survival_function(&chain, &start, part.g(), &grid)?;
    let sup = grid.iter().zip(&exact.survival).map(|(&t, s)| (emp1.survival_at(t) - s).abs()).fold(0.0, f64::max);
    let envelope = 3.0 / (big_n as f64).sqrt();

    let occ1 = occupation_frequencies(&chain, 0, part.g(), &cfg.clone().with_threads(1))?;
    let occ8 = occupation_frequencies(&chain, 0, part.g(), &cfg.clone().with_threads(8))?;
    let em = empirical_measure(&chain, 0, &part)?;
    let z = part
        .a()
        .iter()
        .map(|&y| (occ1.frequencies[y] - em[y]).abs() / occ1.std_errors[y])
        .fold(0.0, f64::max);
    let same = csv1 == csv8 && occ1.frequencies == occ8.frequencies;
    outcome(
        sup <= envelope && z <= 4.0 && same,
        format!(
            "survival sup gap {sup:.2e} (limit {envelope:.2e}); occupation max |z| = {z:.2}; 1 vs 8 threads bit-identical: {same}"
        ),
    )
}

fn c11_mixgen() -> Result<Outcome> {
    let mut worst = f64::INFINITY;
    let mut count = 0;
    for (_, n, r) in tiar_instances() {
        let (chain, part) = tiar_part(n)?;
        let cert = assess(&chain, &part, &HpgParameters::new(r, 0.5)?)?;
        let d_a = d_bar_k(&chain, part.a(), r.floor())?;
        let rhs = d_a + cert.f + cert.f.powf(1.0 - cert.alpha);
        worst = worst.min(rhs - cert.r);
        count += 1;
    }
    outcome(worst >= 0.0, format!("{count} TIAR instances; min (d_A + f + f^(1-a)) - r = {worst:.3e}"))
}

fn c12_tiar_escape() -> Result<Outcome> {
    let n = 10;
    let nf = n as f64;
    let r = 4.0 * nf * nf.ln();
    let (chain, part) = tiar_part(n)?;
    let cert = assess(&chain, &part, &HpgParameters::new(r, 0.5)?)?;
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    let bound = 1.5 * r * nf * nf.ln() / fact;
    outcome(
        cert.applicable && cert.f <= bound,
        format!("applicable: {}; f = {:.4e} <= {bound:.4e}; c = {:.4}, |B| = {}", cert.applicable, cert.f, cert.c, cert.b_alpha.len()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Result<Outcome>); 12] = [
        ("exact exponential law from the quasi-stationary start", c1_exact_exponential),
        ("TIAR invariant measure", c2_tiar_stationary),
        ("TIAR lumping", c3_lumping),
        ("return-versus-hit bound", c4_xik0),
        ("time-reversal identity", c5_time_reversal),
        ("basin mass", c6_basin_mass),
        ("convergence bounds at n = 200", c7_convdtv),
        ("exponential deviation decreasing", c8_trend),
        ("birth-death asymptotics", c9_asymptotics),
        ("Monte Carlo cross-validation", c10_monte_carlo),
        ("recurrence from mixing", c11_mixgen),
        ("TIAR escape", c12_tiar_escape),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = run().unwrap_or_else(|e| Outcome { pass: false, detail: format!("error: {e}") });
        let secs = start.elapsed().as_secs_f64();
        if !res.pass {
            failed += 1;
        }
        println!("{} {:>2} {name}: {} [{secs:.2}s]", if res.pass { "PASS" } else { "FAIL" }, i + 1, res.detail);
    }
    println!("{} of 12 criteria passed", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
