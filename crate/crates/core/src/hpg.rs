use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::chain::{FiniteChain, TimeKind};
use crate::error::{Error, Result};
use crate::flow::Flow;
use crate::grid::GridSpec;
use crate::hitting::effective_time;
use crate::linalg::Green;
use crate::measures::{d_bar_k, quasi_stationary, restricted_invariant, FlagChain, TrapPartition, EXTINCTION_FLOOR};
use crate::prob::{tv_slices, ProbabilityVector};

const REVERSAL_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct HpgParameters {
    /// Reference time scale R.
    pub big_r: f64,
    pub alpha: f64,
    pub grid: GridSpec,
}

impl HpgParameters {
    pub fn new(big_r: f64, alpha: f64) -> Result<Self> {
        if !(big_r > 0.0) || !big_r.is_finite() {
            return Err(Error::InvalidArgument(format!("R must be positive, got {big_r}")));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha must lie in (0,1), got {alpha}")));
        }
        Ok(HpgParameters { big_r, alpha, grid: GridSpec::default() })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HpgCertificate {
    #[serde(rename = "R")]
    pub big_r: f64,
    pub alpha: f64,
    /// f_A(2R).
    pub f: f64,
    /// d̄_{B_α}(R).
    pub d: f64,
    /// sup_x P(τ^x_{B_α ∪ G} > R).
    pub r: f64,
    /// r + 2 f^α.
    pub c: f64,
    pub c_bar: Option<f64>,
    pub epsilon1: Option<f64>,
    pub epsilon2: Option<f64>,
    pub applicable: bool,
    #[serde(rename = "B_alpha")]
    pub b_alpha: Vec<usize>,
}

/// Pure arithmetic from the measured (f, d, r). c̄ and the ε's exist only for c ≤ 1/4.
pub fn assemble_certificate(big_r: f64, alpha: f64, f: f64, d: f64, r: f64, b_alpha: Vec<usize>) -> HpgCertificate {
    let fa = f.powf(alpha);
    let c = r + 2.0 * fa;
    let c_bar = (c <= 0.25).then(|| 0.5 - (0.25 - c).sqrt());
    let epsilon1 = c_bar.map(|cb| 4.0 * (cb + 2.0 * f + fa + d));
    let epsilon2 = epsilon1.map(|e| e + f.powf(1.0 - alpha));
    HpgCertificate { big_r, alpha, f, d, r, c, c_bar, epsilon1, epsilon2, applicable: c < 0.25, b_alpha }
}

/// Per-state escape probabilities within t, forward and time-reversed.
#[derive(Clone, Debug, Serialize)]
pub struct EscapeProfile {
    pub time: f64,
    /// P(τ^x_G ≤ t), zero on G.
    pub forward: Vec<f64>,
    /// P(τ^{←x}_G ≤ t), zero on G.
    pub backward: Vec<f64>,
    /// f_A(t).
    pub f: f64,
    /// P(τ^{π_A}_G ≤ t).
    pub single_sided: f64,
}

impl EscapeProfile {
    pub fn symmetrized(&self, x: usize) -> f64 {
        0.5 * (self.forward[x] + self.backward[x])
    }
}

fn killed_survival(chain: &FiniteChain, part: &TrapPartition, t: f64) -> Result<Vec<f64>> {
    let sub = chain.restrict(part.a())?;
    let flow = Flow::new(sub.kernel(), t, 1);
    let s = flow.col(&vec![1.0; sub.dim()], t)?;
    Ok(sub.globalize(&s))
}

pub fn escape_profile(chain: &FiniteChain, pi: &ProbabilityVector, part: &TrapPartition, t: f64) -> Result<EscapeProfile> {
    let te = effective_time(chain.time_kind(), t);
    let pi_a = restricted_invariant(pi, part)?;
    let fwd = killed_survival(chain, part, te)?;
    let reverse = chain.adjoint(pi)?;
    let bwd = killed_survival(&reverse, part, te)?;
    let n = chain.state_count();
    let esc = |s: &[f64]| -> Vec<f64> { (0..n).map(|x| if part.in_a(x) { (1.0 - s[x]).max(0.0) } else { 0.0 }).collect() };
    let forward = esc(&fwd);
    let backward = esc(&bwd);
    let f = 0.5 * part.a().iter().map(|&x| pi_a[x] * (forward[x] + backward[x])).sum::<f64>();
    let single_sided = part.a().iter().map(|&x| pi_a[x] * forward[x]).sum::<f64>();
    let reversed_sided = part.a().iter().map(|&x| pi_a[x] * backward[x]).sum::<f64>();
    if (single_sided - reversed_sided).abs() > REVERSAL_TOL {
        return Err(Error::InternalBoundViolation(format!(
            "time-reversal identity fails at t = {te}: {single_sided:e} vs {reversed_sided:e}"
        )));
    }
    Ok(EscapeProfile { time: te, forward, backward, f, single_sided })
}

/// f_A(t) = ½ Σ_x π_A(x)[P(τ^x_G ≤ t) + P(τ^{←x}_G ≤ t)].
pub fn escape_functional(chain: &FiniteChain, pi: &ProbabilityVector, part: &TrapPartition, t: f64) -> Result<f64> {
    Ok(escape_profile(chain, pi, part, t)?.f)
}

fn basin_from_profile(part: &TrapPartition, pi_a: &ProbabilityVector, profile: &EscapeProfile, alpha: f64) -> Result<Vec<usize>> {
    let f = profile.f;
    let threshold = f.powf(alpha);
    let b: Vec<usize> = part.a().iter().copied().filter(|&x| profile.symmetrized(x) <= threshold).collect();
    let mass = pi_a.mass_of(&b);
    let floor = 1.0 - f.powf(1.0 - alpha);
    if mass < floor {
        return Err(Error::InternalBoundViolation(format!(
            "basin mass {mass} below 1 - f^(1-alpha) = {floor}"
        )));
    }
    Ok(b)
}

/// B_α = {x ∈ A : ½[P(τ^x_G ≤ 2R) + P(τ^{←x}_G ≤ 2R)] ≤ f^α}.
pub fn compute_b_alpha(chain: &FiniteChain, part: &TrapPartition, big_r: f64, alpha: f64) -> Result<Vec<usize>> {
    let pi = chain.stationary_measure()?;
    let profile = escape_profile(chain, &pi, part, 2.0 * big_r)?;
    basin_from_profile(part, &restricted_invariant(&pi, part)?, &profile, alpha)
}

/// (f, f ≤ threshold) with f = f_A(2R).
pub fn check_e(chain: &FiniteChain, part: &TrapPartition, big_r: f64, threshold: f64) -> Result<(f64, bool)> {
    let pi = chain.stationary_measure()?;
    let f = escape_functional(chain, &pi, part, 2.0 * big_r)?;
    Ok((f, f <= threshold))
}

/// d = d̄_{B_α}(R).
pub fn check_t(chain: &FiniteChain, b_alpha: &[usize], big_r: f64) -> Result<f64> {
    d_bar_k(chain, b_alpha, effective_time(chain.time_kind(), big_r))
}

/// r = sup_x P(τ^x_{B_α ∪ G} > R).
pub fn check_rc(chain: &FiniteChain, b_alpha: &[usize], g: &[usize], big_r: f64) -> Result<f64> {
    let n = chain.state_count();
    let mut absorbing = vec![false; n];
    b_alpha.iter().chain(g).for_each(|&s| absorbing[s] = true);
    let free: Vec<usize> = (0..n).filter(|&s| !absorbing[s]).collect();
    if free.is_empty() {
        return Ok(0.0);
    }
    let part = TrapPartition::from_trap(n, &free)?;
    let s = killed_survival(chain, &part, effective_time(chain.time_kind(), big_r))?;
    Ok(free.iter().map(|&x| s[x]).fold(0.0, f64::max))
}

/// Measures f, B_α, d, r and assembles the certificate whether or not it applies.
pub fn assess(chain: &FiniteChain, part: &TrapPartition, params: &HpgParameters) -> Result<HpgCertificate> {
    let pi = chain.stationary_measure()?;
    let pi_a = restricted_invariant(&pi, part)?;
    let profile = escape_profile(chain, &pi, part, 2.0 * params.big_r)?;
    let b = basin_from_profile(part, &pi_a, &profile, params.alpha)?;
    let d = if b.is_empty() { 0.0 } else { check_t(chain, &b, params.big_r)? };
    let r = check_rc(chain, &b, part.g(), params.big_r)?;
    Ok(assemble_certificate(params.big_r, params.alpha, profile.f, d, r, b))
}

/// Like `assess`, but a certificate with r + 2f^α ≥ 1/4 is returned as `NotApplicable`.
pub fn certify(chain: &FiniteChain, part: &TrapPartition, params: &HpgParameters) -> Result<HpgCertificate> {
    let cert = assess(chain, part, params)?;
    if cert.applicable {
        Ok(cert)
    } else {
        Err(Error::NotApplicable(Box::new(cert)))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Extremum {
    pub value: f64,
    pub state: Option<usize>,
    pub time: Option<f64>,
}

impl Extremum {
    fn zero() -> Self {
        Extremum { value: 0.0, state: None, time: None }
    }

    fn offer(&mut self, value: f64, state: Option<usize>, time: Option<f64>) {
        if value > self.value || self.state.is_none() && self.time.is_none() {
            *self = Extremum { value: value.max(self.value), state, time };
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvDtvReport {
    pub epsilon1: f64,
    pub epsilon2: f64,
    pub t_star: f64,
    /// sup_{x ∈ A, t ≥ 2R} tv(μ̂^x_{A,t}, π_A).
    pub hat_vs_restricted: Extremum,
    /// sup_{t > 2R} tv(μ̃^{π_A}_{A,t}, π_A).
    pub conditioned_vs_restricted: Extremum,
    /// sup_{x ∈ A, t ≥ 2R} tv(μ̂^x_{A,t}, μ*_A).
    pub hat_vs_qsd: Extremum,
    /// max_{x ∈ B_α} tv(μ^{(em)x}_A, π_A).
    pub empirical_vs_restricted: Extremum,
    pub restricted_vs_qsd: f64,
    /// 2 max_y tv(μ̂^y_{A,2R}, μ*_A).
    pub delta: f64,
    /// tv(μ̃^{π_A}_{A,2R}, π_A) and its bound f/(1−f), only when B_α = A.
    pub degenerate: Option<(f64, f64)>,
    pub grid_points: usize,
    /// (x, t) pairs whose conditioning event had zero probability.
    pub skipped: usize,
}

fn conditioning_times(kind: TimeKind, two_r: f64, t_grid: &[f64]) -> Vec<f64> {
    let two_r = effective_time(kind, two_r);
    let mut ts: Vec<f64> = std::iter::once(two_r)
        .chain(t_grid.iter().map(|&t| effective_time(kind, t)).filter(|&t| t >= two_r))
        .collect();
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ts.dedup();
    ts
}

fn local(v: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| v[i]).collect()
}

fn normalized(v: &[f64]) -> Option<Vec<f64>> {
    let s: f64 = v.iter().sum();
    (s >= EXTINCTION_FLOOR).then(|| v.iter().map(|x| x / s).collect())
}

/// Measures every distance controlled by the convergence theorem without asserting bounds.
pub fn measure_convdtv(chain: &FiniteChain, part: &TrapPartition, cert: &HpgCertificate, t_grid: &[f64]) -> Result<ConvDtvReport> {
    let (Some(epsilon1), Some(epsilon2)) = (cert.epsilon1, cert.epsilon2) else {
        return Err(Error::NotApplicable(Box::new(cert.clone())));
    };
    if part.b_alpha().is_empty() {
        return Err(Error::EmptySet);
    }
    let kind = chain.time_kind();
    let a = part.a();
    let m = a.len();
    let pi = chain.stationary_measure()?;
    let pi_a = local(restricted_invariant(&pi, part)?.as_slice(), a);
    let qsd = quasi_stationary(chain, part)?;
    let mu_star = local(qsd.measure.as_slice(), a);
    let two_r = effective_time(kind, 2.0 * cert.big_r);
    let times = conditioning_times(kind, two_r, t_grid);
    let t_last = *times.last().unwrap();

    let sub = chain.restrict(a)?;
    let sub_flow = Flow::new(sub.kernel(), t_last.max(two_r), m + 1);
    let tail = sub_flow.rows(&DMatrix::identity(m, m), two_r)?;

    let flag = FlagChain::new(chain, part);
    let aug_flow = Flow::new(&flag.kernel, (t_last - two_r).max(1.0), m);
    let mut x_rows = DMatrix::zeros(m, flag.dim());
    for (i, &x) in a.iter().enumerate() {
        x_rows[(i, flag.start_index(x))] = 1.0;
    }

    let mut hat_pi = Extremum::zero();
    let mut hat_qsd = Extremum::zero();
    let mut delta = 0.0f64;
    let mut skipped = 0;
    let mut elapsed = 0.0;
    for &t in &times {
        let s = t - two_r;
        if s > elapsed {
            x_rows = aug_flow.rows(&x_rows, s - elapsed)?;
            elapsed = s;
        }
        let off = flag.flagged_offset();
        let flagged = x_rows.columns(off, m).into_owned();
        let w = flagged * &tail;
        for (i, &x) in a.iter().enumerate() {
            let row: Vec<f64> = w.row(i).iter().copied().collect();
            let Some(hat) = normalized(&row) else {
                skipped += 1;
                continue;
            };
            hat_pi.offer(tv_slices(&hat, &pi_a), Some(x), Some(t));
            let dq = tv_slices(&hat, &mu_star);
            hat_qsd.offer(dq, Some(x), Some(t));
            if t == two_r {
                delta = delta.max(2.0 * dq);
            }
        }
    }

    let mut cond = Extremum::zero();
    let mut v = pi_a.clone();
    let mut now = 0.0;
    for &t in &times {
        if t > now {
            v = sub_flow.row(&v, t - now)?;
            now = t;
        }
        if t > two_r {
            if let Some(mu) = normalized(&v) {
                cond.offer(tv_slices(&mu, &pi_a), None, Some(t));
            }
        }
    }

    let green = Green::new(&sub)?;
    let mut emp = Extremum::zero();
    for &x in part.b_alpha() {
        let row = green.row(sub.local_index(x).unwrap())?;
        let em = normalized(&row).ok_or(Error::ZeroMass)?;
        emp.offer(tv_slices(&em, &pi_a), Some(x), None);
    }

    let degenerate = if part.b_alpha().len() == m {
        let v = sub_flow.row(&pi_a, two_r)?;
        let mu = normalized(&v).ok_or(Error::ExtinctMass(v.iter().sum()))?;
        Some((tv_slices(&mu, &pi_a), cert.f / (1.0 - cert.f)))
    } else {
        None
    };

    Ok(ConvDtvReport {
        epsilon1,
        epsilon2,
        t_star: qsd.mean_exit_time,
        hat_vs_restricted: hat_pi,
        conditioned_vs_restricted: cond,
        hat_vs_qsd: hat_qsd,
        empirical_vs_restricted: emp,
        restricted_vs_qsd: tv_slices(&pi_a, &mu_star),
        delta,
        degenerate,
        grid_points: times.len(),
        skipped,
    })
}

/// Measures and asserts the total-variation bounds; a violation names the offending (x, t).
pub fn verify_convdtv(chain: &FiniteChain, part: &TrapPartition, cert: &HpgCertificate, t_grid: &[f64]) -> Result<ConvDtvReport> {
    if !cert.applicable {
        return Err(Error::NotApplicable(Box::new(cert.clone())));
    }
    let rep = measure_convdtv(chain, part, cert, t_grid)?;
    let checks = [
        ("sup tv(hat mu, pi_A) <= epsilon1", &rep.hat_vs_restricted, rep.epsilon1),
        ("sup tv(tilde mu^pi_A, pi_A) <= epsilon2", &rep.conditioned_vs_restricted, rep.epsilon2),
        ("sup tv(hat mu, mu*) <= epsilon1 + epsilon2", &rep.hat_vs_qsd, rep.epsilon1 + rep.epsilon2),
        ("tv(empirical, pi_A) <= epsilon1 on the basin", &rep.empirical_vs_restricted, rep.epsilon1),
    ];
    for (bound, ext, limit) in checks {
        if ext.value > limit {
            return Err(Error::BoundViolation {
                bound: bound.into(),
                state: ext.state,
                time: ext.time,
                measured: ext.value,
                limit,
            });
        }
    }
    if let Some((value, limit)) = rep.degenerate {
        if value > limit {
            return Err(Error::BoundViolation {
                bound: "tv(tilde mu^pi_A at 2R, pi_A) <= f/(1-f)".into(),
                state: None,
                time: Some(2.0 * cert.big_r),
                measured: value,
                limit,
            });
        }
    }
    Ok(rep)
}

#[derive(Clone, Debug, Serialize)]
pub struct CurveRow {
    pub t: f64,
    pub survival: f64,
    pub exp: f64,
    pub weighted_deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExponentialityReport {
    #[serde(rename = "T_star")]
    pub t_star: f64,
    /// sup_t e^{t/T*} |P(τ^{π_A} > t) − e^{−t/T*}|.
    pub sup_weighted_deviation: f64,
    /// Same from μ*_A; zero up to roundoff.
    pub qsd_deviation: f64,
    pub per_start_deviations: BTreeMap<usize, f64>,
    /// P(τ^x_G > 2R, τ^x_{G∪B_α} ≤ R) for x ∈ A \ B_α.
    pub prefactor_x: BTreeMap<usize, f64>,
    /// sup_t e^{t/T*} |P(τ^x > t) − prefactor_x e^{−t/T*}| for x ∈ A \ B_α.
    pub outside_deviations: BTreeMap<usize, f64>,
    /// Largest of all measured deviations.
    pub epsilon: f64,
    pub constant: f64,
    /// C (r + ε₂), when the certificate supplies ε₂.
    pub reference_bound: Option<f64>,
    pub within_reference: Option<bool>,
    /// T* / E[τ^{π_A}].
    pub mean_ratio_restricted: f64,
    /// T* / E[τ^x] for x ∈ B_α.
    pub mean_ratio_basin: BTreeMap<usize, f64>,
    #[serde(skip)]
    pub curves: Vec<(String, Vec<CurveRow>)>,
}

/// Survival from every state of A at each time: columns H^A_t 1 (rows follow `times`).
fn survival_table(chain: &FiniteChain, part: &TrapPartition, times: &[f64]) -> Result<Vec<Vec<f64>>> {
    let sub = chain.restrict(part.a())?;
    let t_max = times.iter().copied().fold(0.0, f64::max);
    let flow = Flow::new(sub.kernel(), t_max, 1);
    let mut u = vec![1.0; sub.dim()];
    let mut now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        if t > now {
            u = flow.col(&u, t - now)?;
            now = t;
        }
        out.push(u.clone());
    }
    Ok(out)
}

fn weighted(curve: impl Iterator<Item = (f64, f64)>, t_star: f64, prefactor: f64) -> (f64, Vec<CurveRow>) {
    let mut sup = 0.0f64;
    let mut rows = Vec::new();
    for (t, s) in curve {
        let e = (-t / t_star).exp();
        let w = (t / t_star).exp() * (s - prefactor * e).abs();
        sup = sup.max(w);
        rows.push(CurveRow { t, survival: s, exp: prefactor * e, weighted_deviation: w });
    }
    (sup, rows)
}

/// sup over the grid of e^{t/T*}|P(τ^start_G > t) − e^{−t/T*}|, with T* from the quasi-stationary law.
pub fn exponential_deviation(chain: &FiniteChain, part: &TrapPartition, start: &ProbabilityVector, t_grid: &[f64]) -> Result<(f64, f64)> {
    let qsd = quasi_stationary(chain, part)?;
    let times: Vec<f64> = t_grid.iter().map(|&t| effective_time(chain.time_kind(), t)).collect();
    let table = survival_table(chain, part, &times)?;
    let v = local(start.as_slice(), part.a());
    let curve = times.iter().zip(&table).map(|(&t, u)| (t, v.iter().zip(u).map(|(a, b)| a * b).sum::<f64>()));
    Ok((weighted(curve, qsd.mean_exit_time, 1.0).0, qsd.mean_exit_time))
}

pub fn exponentiality_report(
    chain: &FiniteChain,
    part: &TrapPartition,
    cert: &HpgCertificate,
    t_grid: &[f64],
    constant: f64,
) -> Result<ExponentialityReport> {
    let kind = chain.time_kind();
    let a = part.a();
    let pi = chain.stationary_measure()?;
    let pi_a = local(restricted_invariant(&pi, part)?.as_slice(), a);
    let qsd = quasi_stationary(chain, part)?;
    let t_star = qsd.mean_exit_time;
    let mu_star = local(qsd.measure.as_slice(), a);
    let mut times: Vec<f64> = std::iter::once(0.0).chain(t_grid.iter().map(|&t| effective_time(kind, t))).collect();
    times.sort_by(|x, y| x.partial_cmp(y).unwrap());
    times.dedup();
    let table = survival_table(chain, part, &times)?;
    let averaged = |w: &[f64]| -> Vec<(f64, f64)> {
        times.iter().zip(&table).map(|(&t, u)| (t, w.iter().zip(u).map(|(p, s)| p * s).sum())).collect()
    };
    let (sup_pi, rows_pi) = weighted(averaged(&pi_a).into_iter(), t_star, 1.0);
    let (sup_qsd, rows_qsd) = weighted(averaged(&mu_star).into_iter(), t_star, 1.0);
    let mut curves = vec![("pi_A".to_string(), rows_pi), ("mu_star".to_string(), rows_qsd)];

    let mut per_start = BTreeMap::new();
    for &x in part.b_alpha() {
        let i = a.binary_search(&x).unwrap();
        let (sup, rows) = weighted(times.iter().zip(&table).map(|(&t, u)| (t, u[i])), t_star, 1.0);
        per_start.insert(x, sup);
        curves.push((format!("state_{x}"), rows));
    }

    // Prefactor P(τ_G > 2R, τ_{G∪B} ≤ R): flagged mass after R, then survival for R more.
    let big_r = effective_time(kind, cert.big_r);
    let mut prefactor_x = BTreeMap::new();
    let mut outside = BTreeMap::new();
    let outside_states: Vec<usize> = a.iter().copied().filter(|&x| !part.in_b(x)).collect();
    if !outside_states.is_empty() && !part.b_alpha().is_empty() {
        let flag = FlagChain::new(chain, part);
        let flow = Flow::new(&flag.kernel, big_r, outside_states.len());
        let mut init = DMatrix::zeros(outside_states.len(), flag.dim());
        for (i, &x) in outside_states.iter().enumerate() {
            init[(i, flag.start_index(x))] = 1.0;
        }
        let after = flow.rows(&init, big_r)?;
        let surv_r = &survival_table(chain, part, &[big_r])?[0];
        let off = flag.flagged_offset();
        for (i, &x) in outside_states.iter().enumerate() {
            let p: f64 = (0..a.len()).map(|k| after[(i, off + k)] * surv_r[k]).sum();
            prefactor_x.insert(x, p);
            let j = a.binary_search(&x).unwrap();
            let (sup, _) = weighted(times.iter().zip(&table).map(|(&t, u)| (t, u[j])), t_star, p);
            outside.insert(x, sup);
        }
    }

    let green = Green::new(&chain.restrict(a)?)?;
    let means = green.mean_exit_times()?;
    let mean_pi: f64 = pi_a.iter().zip(&means).map(|(p, m)| p * m).sum();
    let mean_ratio_basin = part
        .b_alpha()
        .iter()
        .map(|&x| (x, t_star / means[a.binary_search(&x).unwrap()]))
        .collect();

    let epsilon = per_start.values().chain(outside.values()).copied().fold(sup_pi, f64::max);
    let reference_bound = cert.epsilon2.map(|e2| constant * (cert.r + e2));
    Ok(ExponentialityReport {
        t_star,
        sup_weighted_deviation: sup_pi,
        qsd_deviation: sup_qsd,
        per_start_deviations: per_start,
        prefactor_x,
        outside_deviations: outside,
        epsilon,
        constant,
        reference_bound,
        within_reference: reference_bound.map(|b| epsilon <= b),
        mean_ratio_restricted: t_star / mean_pi,
        mean_ratio_basin,
        curves,
    })
}
