use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{FiniteChain, TimeKind};
use crate::error::{Error, Result};
use crate::measures::TrapPartition;
use crate::prob::ProbabilityVector;

#[derive(Clone, Debug)]
pub struct SamplerConfig {
    pub seed: u64,
    pub n_trajectories: usize,
    /// Trajectories still inside A at this time are censored.
    pub max_time: f64,
    /// Worker threads; `None` uses rayon's default.
    pub threads: Option<usize>,
}

impl SamplerConfig {
    pub fn new(seed: u64, n_trajectories: usize, max_time: f64) -> Result<Self> {
        if n_trajectories == 0 {
            return Err(Error::InvalidArgument("need at least one trajectory".into()));
        }
        if !(max_time > 0.0) {
            return Err(Error::InvalidArgument(format!("max_time must be positive, got {max_time}")));
        }
        Ok(SamplerConfig { seed, n_trajectories, max_time, threads: None })
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads.max(1));
        self
    }

    fn run<T: Send>(&self, job: impl Fn(usize, &mut ChaCha8Rng) -> T + Sync) -> Result<Vec<T>> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(t) = self.threads {
            builder = builder.num_threads(t);
        }
        let pool = builder.build().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let seed = self.seed;
        Ok(pool.install(|| {
            (0..self.n_trajectories)
                .into_par_iter()
                .map(|i| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(i as u64);
                    job(i, &mut rng)
                })
                .collect()
        }))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HittingRecord {
    pub trajectory_index: usize,
    /// Hitting time, or the cutoff for censored trajectories.
    pub hitting_time: f64,
    pub censored: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct EmpiricalSurvival {
    /// Per-trajectory outcomes in index order.
    pub records: Vec<HittingRecord>,
    /// Uncensored hitting times, ascending.
    pub times: Vec<f64>,
    pub censored: usize,
    pub max_time: f64,
}

impl EmpiricalSurvival {
    pub fn total(&self) -> usize {
        self.records.len()
    }

    /// Fraction of all trajectories not yet absorbed at t (censored ones count as alive up to the cutoff).
    pub fn survival_at(&self, t: f64) -> f64 {
        let hit = self.times.partition_point(|&s| s <= t);
        1.0 - hit as f64 / self.total() as f64
    }

    /// Sample mean and standard error of the uncensored times.
    pub fn mean(&self) -> (f64, f64) {
        let n = self.times.len() as f64;
        let m = self.times.iter().sum::<f64>() / n;
        let var = self.times.iter().map(|t| (t - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (var / n).sqrt())
    }
}

/// Sampling tables restricted to A: holding rate and jump law per state.
struct Stepper {
    kind: TimeKind,
    in_a: Vec<bool>,
    holding: Vec<f64>,
    targets: Vec<Vec<usize>>,
    jumps: Vec<Option<WeightedIndex<f64>>>,
}

impl Stepper {
    fn new(chain: &FiniteChain, part: &TrapPartition) -> Result<Self> {
        let n = chain.state_count();
        let kind = chain.time_kind();
        let mut holding = vec![0.0; n];
        let mut targets = vec![Vec::new(); n];
        let mut jumps = Vec::with_capacity(n);
        for x in 0..n {
            if !part.in_a(x) {
                jumps.push(None);
                continue;
            }
            let (cols, vals) = chain.generator().row(x);
            let mut w = Vec::new();
            for (&y, &v) in cols.iter().zip(vals) {
                if (y != x || kind == TimeKind::Discrete) && v > 0.0 {
                    targets[x].push(y);
                    w.push(v);
                }
            }
            holding[x] = w.iter().sum();
            jumps.push(if w.is_empty() { None } else { Some(WeightedIndex::new(&w).map_err(|e| Error::InvalidArgument(e.to_string()))?) });
        }
        Ok(Stepper { kind, in_a: (0..n).map(|x| part.in_a(x)).collect(), holding, targets, jumps })
    }

    /// Runs one trajectory from x, calling `visit(state, time_spent)` before each move.
    /// Returns Some(hitting time) or None when cut off at `max_time`.
    fn run(&self, mut x: usize, max_time: f64, rng: &mut ChaCha8Rng, mut visit: impl FnMut(usize, f64)) -> Option<f64> {
        let mut t = 0.0;
        while self.in_a[x] {
            let Some(jump) = &self.jumps[x] else {
                visit(x, max_time - t);
                return None;
            };
            let dt = match self.kind {
                TimeKind::Continuous => {
                    let e: f64 = Exp1.sample(rng);
                    e / self.holding[x]
                }
                TimeKind::Discrete => 1.0,
            };
            if t + dt > max_time {
                visit(x, max_time - t);
                return None;
            }
            visit(x, dt);
            t += dt;
            x = self.targets[x][jump.sample(rng)];
        }
        Some(t)
    }
}

fn start_sampler(start: &ProbabilityVector, part: &TrapPartition) -> Result<(Vec<usize>, WeightedIndex<f64>)> {
    if start.len() != part.state_count() {
        return Err(Error::DimensionMismatch { expected: part.state_count(), got: start.len() });
    }
    if start.mass_of(part.g()) > 0.0 {
        return Err(Error::InvalidArgument("start charges the target set".into()));
    }
    let support = start.support();
    let w: Vec<f64> = support.iter().map(|&x| start[x]).collect();
    let dist = WeightedIndex::new(&w).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok((support, dist))
}

pub fn sample_hitting_times(chain: &FiniteChain, start: &ProbabilityVector, g: &[usize], cfg: &SamplerConfig) -> Result<EmpiricalSurvival> {
    let part = TrapPartition::from_target(chain.state_count(), g)?;
    let stepper = Stepper::new(chain, &part)?;
    let (support, first) = start_sampler(start, &part)?;
    let records = cfg.run(|i, rng| {
        let x = support[first.sample(rng)];
        match stepper.run(x, cfg.max_time, rng, |_, _| ()) {
            Some(t) => HittingRecord { trajectory_index: i, hitting_time: t, censored: false },
            None => HittingRecord { trajectory_index: i, hitting_time: cfg.max_time, censored: true },
        }
    })?;
    let censored = records.iter().filter(|r| r.censored).count();
    if censored == records.len() {
        return Err(Error::AllCensored(censored));
    }
    let mut times: Vec<f64> = records.iter().filter(|r| !r.censored).map(|r| r.hitting_time).collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(EmpiricalSurvival { records, times, censored, max_time: cfg.max_time })
}

#[derive(Clone, Debug, Serialize)]
pub struct OccupationEstimate {
    /// Fractions over the full state space (zero on G).
    pub frequencies: Vec<f64>,
    /// Delta-method standard errors of the ratio estimator.
    pub std_errors: Vec<f64>,
    pub used: usize,
    pub censored: usize,
}

/// Ratio estimator Σ_i ξ_i(y) / Σ_i τ_i over uncensored trajectories from x.
pub fn occupation_frequencies(chain: &FiniteChain, x: usize, g: &[usize], cfg: &SamplerConfig) -> Result<OccupationEstimate> {
    let n = chain.state_count();
    let part = TrapPartition::from_target(n, g)?;
    if x >= n || !part.in_a(x) {
        return Err(Error::InvalidArgument(format!("start {x} must lie outside the target")));
    }
    let stepper = Stepper::new(chain, &part)?;
    let local: Vec<Option<usize>> = {
        let mut v = vec![None; n];
        part.a().iter().enumerate().for_each(|(k, &s)| v[s] = Some(k));
        v
    };
    let m = part.a().len();
    let runs = cfg.run(|_, rng| {
        let mut occ = vec![0.0; m];
        let hit = stepper.run(x, cfg.max_time, rng, |s, dt| occ[local[s].unwrap()] += dt);
        hit.map(|t| (t, occ))
    })?;
    let kept: Vec<&(f64, Vec<f64>)> = runs.iter().flatten().collect();
    let censored = runs.len() - kept.len();
    if kept.is_empty() {
        return Err(Error::AllCensored(censored));
    }
    let k = kept.len() as f64;
    let tau_sum: f64 = kept.iter().map(|r| r.0).sum();
    let tau_bar = tau_sum / k;
    let mut frequencies = vec![0.0; n];
    let mut std_errors = vec![0.0; n];
    for (j, &y) in part.a().iter().enumerate() {
        let ratio = kept.iter().map(|r| r.1[j]).sum::<f64>() / tau_sum;
        let resid: f64 = kept.iter().map(|r| (r.1[j] - ratio * r.0).powi(2)).sum();
        frequencies[y] = ratio;
        std_errors[y] = if kept.len() > 1 { (resid / (k * (k - 1.0))).sqrt() / tau_bar } else { f64::INFINITY };
    }
    Ok(OccupationEstimate { frequencies, std_errors, used: kept.len(), censored })
}

/// sup_t |F̂(t) − (1 − e^{−t/mean})| over t up to the largest uncensored time; F̂ counts all N trajectories.
pub fn ks_statistic(emp: &EmpiricalSurvival, mean: f64) -> Result<f64> {
    if emp.records.is_empty() && emp.times.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(mean > 0.0) {
        return Err(Error::InvalidArgument(format!("mean must be positive, got {mean}")));
    }
    let total = emp.total().max(emp.times.len()) as f64;
    let cdf = |t: f64| 1.0 - (-t / mean).exp();
    let mut d = 0.0f64;
    for (i, &t) in emp.times.iter().enumerate() {
        let f = cdf(t);
        d = d.max((f - i as f64 / total).abs()).max(((i + 1) as f64 / total - f).abs());
    }
    Ok(d)
}
