use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{index_set, FiniteChain, TimeKind};
use crate::error::{Error, Result};
use crate::flow::Flow;
use crate::kernel::{integer_steps, Kernel};
use crate::linalg::Green;
use crate::prob::{tv_slices, ProbabilityVector};
use crate::sparse::Csr;

/// Surviving mass below this is treated as extinct.
pub const EXTINCTION_FLOOR: f64 = 1e-300;

/// Trap A, target G = complement of A, and the basin B_α ⊆ A once computed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrapPartition {
    n: usize,
    a: Vec<usize>,
    g: Vec<usize>,
    b_alpha: Vec<usize>,
    alpha: Option<f64>,
    #[serde(skip)]
    in_a: Vec<bool>,
}

impl TrapPartition {
    pub fn from_trap(n: usize, a: &[usize]) -> Result<Self> {
        let a = index_set(n, a)?;
        let mut in_a = vec![false; n];
        a.iter().for_each(|&s| in_a[s] = true);
        let g = (0..n).filter(|&s| !in_a[s]).collect();
        Ok(TrapPartition { n, a, g, b_alpha: Vec::new(), alpha: None, in_a })
    }

    pub fn from_target(n: usize, g: &[usize]) -> Result<Self> {
        let g = index_set(n, g)?;
        let a: Vec<usize> = (0..n).filter(|s| g.binary_search(s).is_err()).collect();
        if a.is_empty() {
            return Err(Error::EmptySet);
        }
        Self::from_trap(n, &a)
    }

    /// Attach a basin; it must lie inside A.
    pub fn with_basin(mut self, b: &[usize], alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha = {alpha} outside (0,1)")));
        }
        let mut b = b.to_vec();
        b.sort_unstable();
        b.dedup();
        if let Some(&bad) = b.iter().find(|&&s| s >= self.n || !self.in_a[s]) {
            return Err(Error::InvalidArgument(format!("basin state {bad} not in the trap")));
        }
        self.b_alpha = b;
        self.alpha = Some(alpha);
        Ok(self)
    }

    pub fn state_count(&self) -> usize {
        self.n
    }

    pub fn a(&self) -> &[usize] {
        &self.a
    }

    pub fn g(&self) -> &[usize] {
        &self.g
    }

    pub fn b_alpha(&self) -> &[usize] {
        &self.b_alpha
    }

    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    pub fn in_a(&self, x: usize) -> bool {
        x < self.n && self.in_a[x]
    }

    pub fn in_b(&self, x: usize) -> bool {
        self.b_alpha.binary_search(&x).is_ok()
    }

    fn check_chain(&self, chain: &FiniteChain) -> Result<()> {
        if chain.state_count() != self.n {
            return Err(Error::DimensionMismatch { expected: chain.state_count(), got: self.n });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionedMeasureResult {
    pub measure: ProbabilityVector,
    /// Probability of the conditioning event.
    pub survival_probability: f64,
    pub time: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct QuasiStationaryResult {
    pub measure: ProbabilityVector,
    /// T* = E[τ] from the quasi-stationary start.
    pub mean_exit_time: f64,
    /// θ with survival e^{-θ t}; equals 1/T* in continuous time, −ln λ in discrete time.
    pub decay_rate: f64,
    /// Perron root of the killed block: −θ (continuous) or λ (discrete).
    pub eigenvalue: f64,
    pub residual: f64,
}

pub fn restricted_invariant(pi: &ProbabilityVector, part: &TrapPartition) -> Result<ProbabilityVector> {
    if pi.len() != part.n {
        return Err(Error::DimensionMismatch { expected: part.n, got: pi.len() });
    }
    let mass = pi.mass_of(&part.a);
    if !(mass > 0.0) {
        return Err(Error::ZeroMass);
    }
    let w = (0..part.n).map(|x| if part.in_a[x] { pi[x] / mass } else { 0.0 }).collect();
    ProbabilityVector::normalized(w)
}

fn check_supported(start: &ProbabilityVector, part: &TrapPartition) -> Result<()> {
    if start.len() != part.n {
        return Err(Error::DimensionMismatch { expected: part.n, got: start.len() });
    }
    let off = start.mass_of(&part.g);
    if off > 1e-14 {
        return Err(Error::InvalidArgument(format!("start puts mass {off:e} on the target set")));
    }
    Ok(())
}

fn conditioned(sub_vec: Vec<f64>, kept: &[usize], n: usize, time: f64) -> Result<ConditionedMeasureResult> {
    let s: f64 = sub_vec.iter().sum();
    if !(s >= EXTINCTION_FLOOR) {
        return Err(Error::ExtinctMass(s));
    }
    let mut w = vec![0.0; n];
    for (a, &x) in kept.iter().enumerate() {
        w[x] = sub_vec[a] / s;
    }
    Ok(ConditionedMeasureResult { measure: ProbabilityVector::normalized(w)?, survival_probability: s, time })
}

/// Law at time t of the chain killed on leaving A, renormalized, with the survival probability.
pub fn conditioned_evolution(
    chain: &FiniteChain,
    start: &ProbabilityVector,
    part: &TrapPartition,
    t: f64,
) -> Result<ConditionedMeasureResult> {
    part.check_chain(chain)?;
    check_supported(start, part)?;
    let sub = chain.restrict(&part.a)?;
    let v = sub.kernel().evolve_row(&sub.localize(start.as_slice()), t)?;
    conditioned(v, sub.kept_states(), part.n, t)
}

/// Chain on (A \ B) × {0} ∪ A × {1}, where the flag records a visit to B; killed on G.
pub(crate) struct FlagChain {
    pub kernel: Kernel,
    a: Vec<usize>,
    unflagged_of: Vec<usize>,
    flagged_of: Vec<usize>,
}

impl FlagChain {
    pub fn new(chain: &FiniteChain, part: &TrapPartition) -> Self {
        let n = part.n;
        let mut unflagged_of = vec![usize::MAX; n];
        let mut u = 0;
        for &x in &part.a {
            if !part.in_b(x) {
                unflagged_of[x] = u;
                u += 1;
            }
        }
        let mut flagged_of = vec![usize::MAX; n];
        for (k, &x) in part.a.iter().enumerate() {
            flagged_of[x] = u + k;
        }
        let p = chain.kernel().matrix();
        let mut trips = Vec::new();
        for &x in &part.a {
            let (cols, vals) = p.row(x);
            for (&y, &w) in cols.iter().zip(vals) {
                if !part.in_a[y] {
                    continue;
                }
                if unflagged_of[x] != usize::MAX {
                    let to = if part.in_b(y) { flagged_of[y] } else { unflagged_of[y] };
                    trips.push((unflagged_of[x], to, w));
                }
                trips.push((flagged_of[x], flagged_of[y], w));
            }
        }
        let dim = u + part.a.len();
        let kernel = Kernel::new(Csr::from_triplets(dim, trips), chain.time_kind(), chain.kernel().rate());
        FlagChain { kernel, a: part.a.clone(), unflagged_of, flagged_of }
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    /// Augmented index of the start x (flag already set when x ∈ B).
    pub fn start_index(&self, x: usize) -> usize {
        if self.unflagged_of[x] != usize::MAX {
            self.unflagged_of[x]
        } else {
            self.flagged_of[x]
        }
    }

    /// Flagged block of an augmented vector, in local A order.
    pub fn flagged_part(&self, v: &[f64]) -> Vec<f64> {
        self.a.iter().map(|&x| v[self.flagged_of[x]]).collect()
    }

    pub fn flagged_offset(&self) -> usize {
        self.flagged_of[self.a[0]]
    }
}

/// μ̂^x_{A,t}: law at t given τ_G > t and τ_{G∪B} ≤ t − 2R.
pub fn doubly_conditioned_evolution(
    chain: &FiniteChain,
    x: usize,
    part: &TrapPartition,
    t: f64,
    r: f64,
) -> Result<ConditionedMeasureResult> {
    part.check_chain(chain)?;
    if part.b_alpha.is_empty() {
        return Err(Error::EmptySet);
    }
    if !part.in_a(x) {
        return Err(Error::InvalidArgument(format!("start {x} not in the trap")));
    }
    if !(r > 0.0) || t < 2.0 * r {
        return Err(Error::InvalidArgument(format!("need t >= 2R > 0, got t = {t}, R = {r}")));
    }
    if part.in_b(x) {
        return conditioned_evolution(chain, &ProbabilityVector::point_mass(part.n, x), part, t);
    }
    let head = t - 2.0 * r;
    if chain.time_kind() == TimeKind::Discrete {
        integer_steps(head)?;
        integer_steps(2.0 * r)?;
    }
    let flag = FlagChain::new(chain, part);
    let mut v = vec![0.0; flag.dim()];
    v[flag.start_index(x)] = 1.0;
    let v = flag.kernel.evolve_row(&v, head)?;
    let sub = chain.restrict(&part.a)?;
    let w = sub.kernel().evolve_row(&flag.flagged_part(&v), 2.0 * r)?;
    let s: f64 = w.iter().sum();
    if !(s >= EXTINCTION_FLOOR) {
        return Err(Error::ZeroConditioning { state: x, time: t });
    }
    conditioned(w, sub.kept_states(), part.n, t)
}

#[derive(Clone, Copy, Debug)]
pub struct QsdOptions {
    /// Largest trap handled by inverse iteration on the dense Green operator.
    pub dense_limit: usize,
    /// Iteration budget for plain power iteration on larger traps.
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for QsdOptions {
    fn default() -> Self {
        QsdOptions { dense_limit: 2000, max_iterations: 1_000_000, tolerance: 1e-10 }
    }
}

pub fn quasi_stationary(chain: &FiniteChain, part: &TrapPartition) -> Result<QuasiStationaryResult> {
    quasi_stationary_with(chain, part, QsdOptions::default())
}

pub fn quasi_stationary_with(
    chain: &FiniteChain,
    part: &TrapPartition,
    opts: QsdOptions,
) -> Result<QuasiStationaryResult> {
    part.check_chain(chain)?;
    let sub = chain.restrict(&part.a)?;
    let classes = sub.class_count();
    if classes > 1 {
        return Err(Error::DisconnectedTrap(classes));
    }
    let m = sub.dim();
    let discrete = chain.time_kind() == TimeKind::Discrete;
    let lam_u = chain.kernel().rate();
    let (mu, t_star) = if m <= opts.dense_limit {
        // Inverse iteration: the Perron vector of N = (−Q_A)^{-1} is μ*, with root T*.
        let green = Green::new(&sub)?;
        let mut mu = vec![1.0 / m as f64; m];
        for _ in 0..2000 {
            let mut next = green.apply_left(&mu)?;
            let s: f64 = next.iter().sum();
            next.iter_mut().for_each(|v| *v /= s);
            let change = next.iter().zip(&mu).map(|(a, b)| (a - b).abs()).sum::<f64>();
            mu = next;
            if change <= 1e-15 {
                break;
            }
        }
        let times = green.mean_exit_times()?;
        let t_star: f64 = mu.iter().zip(&times).map(|(a, b)| a * b).sum();
        (mu, t_star)
    } else {
        let k = sub.kernel();
        let mut mu = vec![1.0 / m as f64; m];
        let mut converged = None;
        let mut res = f64::INFINITY;
        for it in 0..opts.max_iterations {
            let next = k.step_row(&mu);
            let lam: f64 = next.iter().sum();
            if it % 8 == 0 {
                res = next.iter().zip(&mu).map(|(a, b)| (a - lam * b).abs()).fold(0.0, f64::max);
                if res <= 1e-3 * opts.tolerance / lam_u.max(1.0) {
                    converged = Some(lam);
                }
            }
            mu = next.into_iter().map(|v| v / lam).collect();
            if converged.is_some() {
                break;
            }
        }
        let lam = converged.ok_or(Error::NonConvergence { iterations: opts.max_iterations, residual: res })?;
        let t_star = if discrete { 1.0 / (1.0 - lam) } else { 1.0 / (lam_u * (1.0 - lam)) };
        (mu, t_star)
    };
    let (eigenvalue, decay_rate) = if discrete {
        let lam = 1.0 - 1.0 / t_star;
        (lam, -lam.ln())
    } else {
        (-1.0 / t_star, 1.0 / t_star)
    };
    // Residual of μ Q_A = −θ μ (or μ P_A = λ μ).
    let mut prod = vec![0.0; m];
    sub.sub_generator().mul_row_into(&mu, &mut prod);
    let residual = prod.iter().zip(&mu).map(|(a, b)| (a - eigenvalue * b).abs()).fold(0.0, f64::max);
    let scale = if discrete { 1.0 } else { lam_u.max(1.0) };
    if !(residual <= opts.tolerance * scale) {
        return Err(Error::NonConvergence { iterations: opts.max_iterations, residual });
    }
    // Exit from μ* must be exactly geometric/exponential.
    let flow = Flow::new(sub.kernel(), 8.0 * t_star, 5);
    for &s in &[0.5, 1.0, 2.0, 4.0, 8.0] {
        let (t, expect) = if discrete {
            let k = (s * t_star).floor();
            (k, eigenvalue.powf(k))
        } else {
            (s * t_star, (-s).exp())
        };
        let surv: f64 = flow.row(&mu, t)?.iter().sum();
        if (surv - expect).abs() > 1e-8 {
            return Err(Error::InternalBoundViolation(format!(
                "quasi-stationary exit law not exponential at t = {t}: {surv} vs {expect}"
            )));
        }
    }
    Ok(QuasiStationaryResult {
        measure: ProbabilityVector::normalized(sub.globalize(&mu))?,
        mean_exit_time: t_star,
        decay_rate,
        eigenvalue,
        residual,
    })
}

/// Expected fraction of the pre-exit time spent in each state, from x.
pub fn empirical_measure(chain: &FiniteChain, x: usize, part: &TrapPartition) -> Result<ProbabilityVector> {
    part.check_chain(chain)?;
    let sub = chain.restrict(&part.a)?;
    let a = sub.local_index(x).ok_or_else(|| Error::InvalidArgument(format!("start {x} not in the trap")))?;
    let row = Green::new(&sub)?.row(a)?;
    ProbabilityVector::normalized(sub.globalize(&row))
}

/// Rows μ^x_t for the given starts (full state space).
pub(crate) fn evolved_rows(chain: &FiniteChain, starts: &[usize], t: f64) -> Result<DMatrix<f64>> {
    let n = chain.state_count();
    let flow = Flow::new(chain.kernel(), t, starts.len());
    let init = DMatrix::from_fn(starts.len(), n, |i, j| if starts[i] == j { 1.0 } else { 0.0 });
    flow.rows(&init, t)
}

fn max_pairwise(rows: &DMatrix<f64>) -> f64 {
    let k = rows.nrows();
    let r: Vec<Vec<f64>> = (0..k).map(|i| rows.row(i).iter().copied().collect()).collect();
    (0..k)
        .into_par_iter()
        .map(|i| ((i + 1)..k).map(|j| tv_slices(&r[i], &r[j])).fold(0.0, f64::max))
        .reduce(|| 0.0, f64::max)
}

/// (d(t), d̄(t)) over all starting states.
pub fn d_profile(chain: &FiniteChain, t: f64) -> Result<(f64, f64)> {
    let n = chain.state_count();
    let pi = chain.stationary_measure()?;
    let starts: Vec<usize> = (0..n).collect();
    let rows = evolved_rows(chain, &starts, t)?;
    let d = (0..n)
        .into_par_iter()
        .map(|i| {
            let r: Vec<f64> = rows.row(i).iter().copied().collect();
            tv_slices(&r, pi.as_slice())
        })
        .reduce(|| 0.0, f64::max);
    Ok((d, max_pairwise(&rows)))
}

/// d̄_K(t) = max over x, x' ∈ K of tv(μ^x_t, μ^{x'}_t). Not submultiplicative in general.
pub fn d_bar_k(chain: &FiniteChain, k: &[usize], t: f64) -> Result<f64> {
    let k = index_set(chain.state_count(), k)?;
    if k.len() == 1 {
        return Ok(0.0);
    }
    let rows = evolved_rows(chain, &k, t)?;
    Ok(max_pairwise(&rows))
}
