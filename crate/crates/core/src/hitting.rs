use serde::Serialize;

use crate::chain::{index_set, FiniteChain, TimeKind};
use crate::error::{Error, Result};
use crate::flow::Flow;
use crate::linalg::{DenseSolver, Green};
use crate::measures::TrapPartition;
use crate::prob::ProbabilityVector;

#[derive(Clone, Debug, Serialize)]
pub struct SurvivalCurve {
    pub times: Vec<f64>,
    pub survival: Vec<f64>,
    pub start_descriptor: String,
}

impl SurvivalCurve {
    /// Rows (t, survival, e^{-t/T*}, |survival − e^{-t/T*}|).
    pub fn against_exponential(&self, t_star: f64) -> Vec<[f64; 4]> {
        self.times
            .iter()
            .zip(&self.survival)
            .map(|(&t, &s)| {
                let e = (-t / t_star).exp();
                [t, s, e, (s - e).abs()]
            })
            .collect()
    }
}

/// Edge resistances R(k, k+1) = 1/(π(k) rate(k, k+1)) along 0, 1, 2, ...
#[derive(Clone, Debug, Serialize)]
pub struct ResistanceProfile {
    pub edge_resistances: Vec<f64>,
    /// cumulative[i] = R(0, i + 1).
    pub cumulative: Vec<f64>,
}

impl ResistanceProfile {
    /// R(0, x), zero at x = 0.
    pub fn from_origin(&self, x: usize) -> f64 {
        if x == 0 {
            0.0
        } else {
            self.cumulative[x - 1]
        }
    }

    /// V(x) = R(0, x) / R(0, y).
    pub fn ratio(&self, x: usize, y: usize) -> f64 {
        self.from_origin(x) / self.from_origin(y)
    }
}

/// P(τ^start_G > t) at each grid time. Discrete chains use ⌊t⌋ steps.
pub fn survival_function(
    chain: &FiniteChain,
    start: &ProbabilityVector,
    g: &[usize],
    t_grid: &[f64],
) -> Result<SurvivalCurve> {
    let part = TrapPartition::from_target(chain.state_count(), g)?;
    if start.len() != chain.state_count() {
        return Err(Error::DimensionMismatch { expected: chain.state_count(), got: start.len() });
    }
    if start.mass_of(part.g()) > 1e-14 {
        return Err(Error::InvalidArgument("start charges the target set".into()));
    }
    if t_grid.windows(2).any(|w| w[1] < w[0]) || t_grid.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::InvalidArgument("time grid must be nonnegative and nondecreasing".into()));
    }
    let sub = chain.restrict(part.a())?;
    let times: Vec<f64> = t_grid.iter().map(|&t| effective_time(chain.time_kind(), t)).collect();
    let t_max = times.last().copied().unwrap_or(0.0);
    let flow = Flow::new(sub.kernel(), t_max, 1);
    let mut cur = sub.localize(start.as_slice());
    let mut now = 0.0;
    let mut survival = Vec::with_capacity(times.len());
    for &t in &times {
        if t > now {
            cur = flow.row(&cur, t - now)?;
            now = t;
        }
        survival.push(cur.iter().sum::<f64>().min(1.0));
    }
    Ok(SurvivalCurve { times: t_grid.to_vec(), survival, start_descriptor: describe(start) })
}

fn describe(start: &ProbabilityVector) -> String {
    let s = start.support();
    if s.len() == 1 {
        format!("point mass at {}", s[0])
    } else {
        format!("measure on {} states", s.len())
    }
}

/// Discrete chains observed at real time t have made ⌊t⌋ steps.
pub(crate) fn effective_time(kind: TimeKind, t: f64) -> f64 {
    match kind {
        TimeKind::Continuous => t,
        TimeKind::Discrete => (t + 1e-9 * t.max(1.0)).floor(),
    }
}

/// E[τ^x_G] for every state (zero on G).
pub fn mean_hitting_times(chain: &FiniteChain, g: &[usize]) -> Result<Vec<f64>> {
    let part = TrapPartition::from_target(chain.state_count(), g)?;
    let sub = chain.restrict(part.a())?;
    let m = Green::new(&sub)?.mean_exit_times()?;
    if m.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::SingularSystem("target unreachable".into()));
    }
    Ok(sub.globalize(&m))
}

pub fn mean_hitting_time(chain: &FiniteChain, x: usize, g: &[usize]) -> Result<f64> {
    let g = index_set(chain.state_count(), g)?;
    if x >= chain.state_count() || g.binary_search(&x).is_ok() {
        return Err(Error::InvalidArgument(format!("start {x} must lie outside the target")));
    }
    Ok(mean_hitting_times(chain, &g)?[x])
}

/// h(y) = P[τ^y_I < τ^y_J] for every state (1 on I, 0 on J).
pub fn hitting_probabilities_before(chain: &FiniteChain, target: &[usize], taboo: &[usize]) -> Result<Vec<f64>> {
    let n = chain.state_count();
    let i_set = index_set(n, target)?;
    let j_set = if taboo.is_empty() { Vec::new() } else { index_set(n, taboo)? };
    if i_set.iter().any(|s| j_set.binary_search(s).is_ok()) {
        return Err(Error::InvalidArgument("target and taboo sets overlap".into()));
    }
    let mut role = vec![0u8; n];
    i_set.iter().for_each(|&s| role[s] = 1);
    j_set.iter().for_each(|&s| role[s] = 2);
    let free: Vec<usize> = (0..n).filter(|&s| role[s] == 0).collect();
    let mut h = vec![0.0; n];
    i_set.iter().for_each(|&s| h[s] = 1.0);
    if free.is_empty() {
        return Ok(h);
    }
    // Harmonic on the free states for the uniformized kernel (same hitting law).
    let sub = chain.restrict(&free)?;
    let p = chain.kernel().matrix();
    let rhs: Vec<f64> = free
        .iter()
        .map(|&s| {
            let (c, v) = p.row(s);
            c.iter().zip(v).filter(|(&y, _)| role[y] == 1).map(|(_, &w)| w).sum()
        })
        .collect();
    let mut m = -sub.kernel().matrix().to_dense();
    for a in 0..free.len() {
        m[(a, a)] += 1.0;
    }
    let sol = DenseSolver::new(m, "harmonic system")?.solve(&rhs)?;
    for (a, &s) in free.iter().enumerate() {
        h[s] = sol[a].clamp(0.0, 1.0);
    }
    Ok(h)
}

pub fn hitting_probability_before(chain: &FiniteChain, x: usize, target: &[usize], taboo: &[usize]) -> Result<f64> {
    if target.contains(&x) || taboo.contains(&x) {
        return Err(Error::InvalidArgument(format!("start {x} lies in the target or taboo set")));
    }
    Ok(hitting_probabilities_before(chain, target, taboo)?[x])
}

/// P[τ^k_J < τ^{k,+}_k]: leave k and reach J before coming back to k.
pub fn return_vs_hit_probability(chain: &FiniteChain, k: usize, j: &[usize]) -> Result<f64> {
    let j = index_set(chain.state_count(), j)?;
    if j.binary_search(&k).is_ok() {
        return Err(Error::InvalidArgument(format!("state {k} lies in J")));
    }
    let h = hitting_probabilities_before(chain, &j, &[k])?;
    let (cols, vals) = chain.generator().row(k);
    let mut total = 0.0;
    let mut hit = 0.0;
    for (&y, &w) in cols.iter().zip(vals) {
        if y == k {
            // A self-loop of a discrete kernel is an immediate return.
            if chain.time_kind() == TimeKind::Discrete {
                total += w;
            }
            continue;
        }
        total += w;
        hit += w * h[y];
    }
    Ok(hit / total)
}

/// E[ξ^x_G(y)] for all y (zero on G): time in y before hitting G, counted in steps for
/// discrete chains and in Lebesgue time for continuous ones.
pub fn expected_local_time(chain: &FiniteChain, x: usize, g: &[usize]) -> Result<Vec<f64>> {
    let part = TrapPartition::from_target(chain.state_count(), g)?;
    let sub = chain.restrict(part.a())?;
    let a = sub.local_index(x).ok_or_else(|| Error::InvalidArgument(format!("start {x} lies in the target")))?;
    let row = Green::new(&sub)?.row(a)?;
    Ok(sub.globalize(&row))
}

pub fn resistance_profile(chain: &FiniteChain, pi: &ProbabilityVector, path_length: usize) -> Result<ResistanceProfile> {
    let n = chain.state_count();
    if let Some((i, j, _)) = chain.generator().iter().find(|&(i, j, v)| i.abs_diff(j) > 1 && v != 0.0) {
        return Err(Error::NotBirthDeath(i, j));
    }
    if path_length == 0 || path_length >= n {
        return Err(Error::InvalidArgument(format!("path length {path_length} outside 1..{}", n - 1)));
    }
    let edge_resistances: Vec<f64> = (0..path_length).map(|k| 1.0 / (pi[k] * chain.jump(k, k + 1))).collect();
    let mut cumulative = Vec::with_capacity(path_length);
    let mut acc = 0.0;
    for r in &edge_resistances {
        acc += r;
        cumulative.push(acc);
    }
    Ok(ResistanceProfile { edge_resistances, cumulative })
}
