use std::collections::VecDeque;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::prob::ProbabilityVector;
use crate::sparse::Csr;

const ROW_TOL: f64 = 1e-12;
/// Largest state count for the direct stationary solve.
pub const DENSE_STATIONARY_LIMIT: usize = 5000;
const STATIONARY_RESIDUAL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeKind {
    Continuous,
    Discrete,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NonFinite { row: usize, col: usize },
    NegativeRate { row: usize, col: usize, value: f64 },
    EntryOutOfRange { row: usize, col: usize, value: f64 },
    RowSum { row: usize, sum: f64, expected: f64 },
    RateTooSmall { rate: f64, max_exit: f64 },
    Unreachable { from: usize, to: usize },
    LabelCount { labels: usize, states: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFinite { row, col } => write!(f, "entry ({row}, {col}) is not finite"),
            Violation::NegativeRate { row, col, value } => {
                write!(f, "off-diagonal rate ({row}, {col}) = {value} is negative")
            }
            Violation::EntryOutOfRange { row, col, value } => {
                write!(f, "entry ({row}, {col}) = {value} out of [0,1]")
            }
            Violation::RowSum { row, sum, expected } => {
                write!(f, "row {row} sum ≠ {expected} (got {sum})")
            }
            Violation::RateTooSmall { rate, max_exit } => {
                write!(f, "uniformization rate {rate} below max exit rate {max_exit}")
            }
            Violation::Unreachable { from, to } => {
                write!(f, "not irreducible: state {to} unreachable from state {from}")
            }
            Violation::LabelCount { labels, states } => {
                write!(f, "{labels} labels for {states} states")
            }
        }
    }
}

/// A finite Markov chain in continuous time (generator Q) or discrete time (kernel P).
#[derive(Clone, Debug)]
pub struct FiniteChain {
    labels: Vec<String>,
    time: TimeKind,
    generator: Csr,
    rate: f64,
    kernel: Kernel,
}

pub fn numeric_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

fn max_exit(q: &Csr) -> f64 {
    (0..q.dim()).map(|i| -q.get(i, i)).fold(0.0, f64::max)
}

fn uniformize(q: &Csr, rate: f64) -> Csr {
    let n = q.dim();
    let diag = (0..n).map(|i| (i, i, 1.0));
    let scaled = q.iter().map(|(i, j, v)| (i, j, v / rate));
    let p = Csr::from_triplets(n, diag.chain(scaled).collect::<Vec<_>>());
    p.map(|_, _, v| v.max(0.0))
}

impl FiniteChain {
    /// Continuous-time chain from off-diagonal rates; the diagonal is derived and Λ is the
    /// largest exit rate. Entries with `from == to` are rejected.
    pub fn continuous(labels: Vec<String>, rates: &[(usize, usize, f64)]) -> Result<Self> {
        let n = labels.len();
        if let Some(&(i, _, _)) = rates.iter().find(|t| t.0 == t.1) {
            return Err(Error::InvalidArgument(format!("diagonal rate given for state {i}; it is derived")));
        }
        if let Some(&(i, j, _)) = rates.iter().find(|t| t.0 >= n || t.1 >= n) {
            return Err(Error::InvalidArgument(format!("entry ({i}, {j}) outside {n} states")));
        }
        let mut exit = vec![0.0; n];
        for &(i, _, v) in rates {
            exit[i] += v;
        }
        let trips: Vec<_> = rates.iter().copied().chain((0..n).map(|i| (i, i, -exit[i]))).collect();
        Self::from_generator(labels, TimeKind::Continuous, Csr::from_triplets(n, trips), None)
    }

    /// Discrete-time chain from kernel entries (self-loops included explicitly).
    pub fn discrete(labels: Vec<String>, entries: &[(usize, usize, f64)]) -> Result<Self> {
        let n = labels.len();
        if let Some(&(i, j, _)) = entries.iter().find(|t| t.0 >= n || t.1 >= n) {
            return Err(Error::InvalidArgument(format!("entry ({i}, {j}) outside {n} states")));
        }
        Self::from_generator(labels, TimeKind::Discrete, Csr::from_triplets(n, entries.to_vec()), None)
    }

    /// Checked constructor. `rate` overrides Λ for continuous chains.
    pub fn from_generator(labels: Vec<String>, time: TimeKind, generator: Csr, rate: Option<f64>) -> Result<Self> {
        let chain = Self::unchecked(labels, time, generator, rate);
        let v = chain.validate();
        if v.is_empty() {
            Ok(chain)
        } else {
            Err(Error::InvalidChain(v))
        }
    }

    /// Build without validation; `validate` reports what is wrong.
    pub fn unchecked(labels: Vec<String>, time: TimeKind, generator: Csr, rate: Option<f64>) -> Self {
        let rate = match time {
            TimeKind::Discrete => 1.0,
            TimeKind::Continuous => rate.unwrap_or_else(|| {
                let m = max_exit(&generator);
                if m > 0.0 {
                    m
                } else {
                    1.0
                }
            }),
        };
        let kmat = match time {
            TimeKind::Discrete => generator.clone(),
            TimeKind::Continuous => uniformize(&generator, rate),
        };
        FiniteChain { labels, time, kernel: Kernel::new(kmat, time, rate), generator, rate }
    }

    /// Same generator, different uniformization rate.
    pub fn with_rate(&self, rate: f64) -> Result<Self> {
        Self::from_generator(self.labels.clone(), self.time, self.generator.clone(), Some(rate))
    }

    pub fn validate(&self) -> Vec<Violation> {
        let n = self.generator.dim();
        let mut out = Vec::new();
        if self.labels.len() != n {
            out.push(Violation::LabelCount { labels: self.labels.len(), states: n });
        }
        for i in 0..n {
            let (cols, vals) = self.generator.row(i);
            let mut sum = 0.0;
            let mut scale: f64 = 1.0;
            for (&j, &v) in cols.iter().zip(vals) {
                if !v.is_finite() {
                    out.push(Violation::NonFinite { row: i, col: j });
                    continue;
                }
                match self.time {
                    TimeKind::Continuous if i != j && v < 0.0 => {
                        out.push(Violation::NegativeRate { row: i, col: j, value: v })
                    }
                    TimeKind::Discrete if !(0.0..=1.0).contains(&v) => {
                        out.push(Violation::EntryOutOfRange { row: i, col: j, value: v })
                    }
                    _ => {}
                }
                sum += v;
                scale += v.abs();
            }
            let expected = match self.time {
                TimeKind::Continuous => 0.0,
                TimeKind::Discrete => 1.0,
            };
            if (sum - expected).abs() > ROW_TOL * scale {
                out.push(Violation::RowSum { row: i, sum, expected });
            }
        }
        if self.time == TimeKind::Continuous {
            let m = max_exit(&self.generator);
            if self.rate < m {
                out.push(Violation::RateTooSmall { rate: self.rate, max_exit: m });
            }
        }
        if n > 0 {
            if let Some(to) = first_unreached(&self.generator, 0, false) {
                out.push(Violation::Unreachable { from: 0, to });
            } else if let Some(from) = first_unreached(&self.generator, 0, true) {
                out.push(Violation::Unreachable { from, to: 0 });
            }
        }
        out
    }

    pub fn state_count(&self) -> usize {
        self.generator.dim()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn time_kind(&self) -> TimeKind {
        self.time
    }

    /// Q for continuous chains, P for discrete ones (diagonal included).
    pub fn generator(&self) -> &Csr {
        &self.generator
    }

    pub fn uniformization_rate(&self) -> f64 {
        self.rate
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    /// Rate (continuous) or probability (discrete) of the move x -> y, x != y.
    pub fn jump(&self, x: usize, y: usize) -> f64 {
        self.generator.get(x, y)
    }

    pub fn stationary_measure(&self) -> Result<ProbabilityVector> {
        let n = self.state_count();
        let pi = if n <= DENSE_STATIONARY_LIMIT {
            self.stationary_dense()?
        } else {
            self.stationary_power()?
        };
        let pv = ProbabilityVector::normalized(pi)?;
        let res = self.stationary_residual(pv.as_slice());
        if res > STATIONARY_RESIDUAL {
            return Err(Error::SingularSystem(format!("stationary residual {res:e}")));
        }
        Ok(pv)
    }

    /// max_y |(π P)(y) − π(y)| on the uniformized kernel (= |πQ|/Λ).
    pub fn stationary_residual(&self, pi: &[f64]) -> f64 {
        let step = self.kernel.step_row(pi);
        step.iter().zip(pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Grassmann–Taksar–Heyman elimination: subtraction-free, so small masses keep
    /// full relative accuracy.
    fn stationary_dense(&self) -> Result<Vec<f64>> {
        let n = self.state_count();
        let mut a = vec![0.0f64; n * n];
        for (i, j, v) in self.kernel.matrix().iter() {
            if i != j {
                a[i * n + j] = v;
            }
        }
        for k in (1..n).rev() {
            let s: f64 = a[k * n..k * n + k].iter().sum();
            if !(s > 0.0) {
                return Err(Error::SingularSystem(format!("state {k} cannot reach lower-indexed states")));
            }
            let (head, tail) = a.split_at_mut(k * n);
            let row_k = &tail[..k];
            for i in 0..k {
                let row_i = &mut head[i * n..(i + 1) * n];
                let m = row_i[k] / s;
                row_i[k] = m;
                if m != 0.0 {
                    row_i[..k].iter_mut().zip(row_k).for_each(|(x, y)| *x += m * y);
                }
            }
        }
        let mut pi = vec![0.0; n];
        pi[0] = 1.0;
        for j in 1..n {
            pi[j] = (0..j).map(|i| pi[i] * a[i * n + j]).sum();
        }
        if pi.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem("stationary elimination".into()));
        }
        Ok(pi)
    }

    fn stationary_power(&self) -> Result<Vec<f64>> {
        let n = self.state_count();
        let mut v = vec![1.0 / n as f64; n];
        let budget = 1_000_000;
        let mut res = f64::INFINITY;
        for it in 0..budget {
            let step = self.kernel.step_row(&v);
            let lazy: Vec<f64> = v.iter().zip(&step).map(|(a, b)| 0.5 * (a + b)).collect();
            if it % 16 == 0 {
                res = step.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                if res <= 1e-3 * STATIONARY_RESIDUAL {
                    return Ok(v);
                }
            }
            v = lazy;
        }
        Err(Error::NonConvergence { iterations: budget, residual: res })
    }

    /// Time reversal with respect to the stationary measure `pi`.
    pub fn adjoint(&self, pi: &ProbabilityVector) -> Result<FiniteChain> {
        let n = self.state_count();
        if pi.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: pi.len() });
        }
        if let Some(x) = (0..n).find(|&x| !(pi[x] > 0.0)) {
            return Err(Error::ZeroMassState(x));
        }
        let trips: Vec<_> = self
            .generator
            .iter()
            .map(|(i, j, v)| if i == j { (i, i, v) } else { (j, i, pi[i] * v / pi[j]) })
            .collect();
        let rate = match self.time {
            TimeKind::Continuous => Some(self.rate),
            TimeKind::Discrete => None,
        };
        Self::from_generator(self.labels.clone(), self.time, Csr::from_triplets(n, trips), rate)
    }

    /// ν H_t.
    pub fn evolve(&self, nu: &ProbabilityVector, t: f64) -> Result<ProbabilityVector> {
        let out = self.kernel.evolve_row(nu.as_slice(), t)?;
        ProbabilityVector::normalized(out)
    }

    pub fn restrict(&self, set: &[usize]) -> Result<SubChain<'_>> {
        let kept = index_set(self.state_count(), set)?;
        if kept.len() == self.state_count() {
            return Err(Error::EmptyComplement);
        }
        Ok(SubChain {
            generator: self.generator.principal(&kept),
            kernel: self.kernel.principal(&kept),
            parent: self,
            kept,
        })
    }
}

/// Breadth-first search over positive off-diagonal entries; returns the first state not reached.
fn first_unreached(m: &Csr, root: usize, backward: bool) -> Option<usize> {
    let owned;
    let g = if backward {
        owned = m.transpose();
        &owned
    } else {
        m
    };
    let n = g.dim();
    let mut seen = vec![false; n];
    seen[root] = true;
    let mut queue = VecDeque::from([root]);
    while let Some(x) = queue.pop_front() {
        let (c, v) = g.row(x);
        for (&y, &w) in c.iter().zip(v) {
            if y != x && w > 0.0 && !seen[y] {
                seen[y] = true;
                queue.push_back(y);
            }
        }
    }
    seen.iter().position(|s| !s)
}

/// Sorted, deduplicated, range-checked copy of an index set.
pub fn index_set(n: usize, set: &[usize]) -> Result<Vec<usize>> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut v = set.to_vec();
    v.sort_unstable();
    v.dedup();
    if let Some(&bad) = v.iter().find(|&&s| s >= n) {
        return Err(Error::InvalidArgument(format!("state {bad} outside {n} states")));
    }
    Ok(v)
}

/// The dynamics killed on leaving `kept_states`.
#[derive(Clone, Debug)]
pub struct SubChain<'a> {
    parent: &'a FiniteChain,
    kept: Vec<usize>,
    generator: Csr,
    kernel: Kernel,
}

impl<'a> SubChain<'a> {
    pub fn parent(&self) -> &'a FiniteChain {
        self.parent
    }

    pub fn kept_states(&self) -> &[usize] {
        &self.kept
    }

    /// Principal block of Q (or P) on the kept states.
    pub fn sub_generator(&self) -> &Csr {
        &self.generator
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn dim(&self) -> usize {
        self.kept.len()
    }

    /// Rate (or probability) of leaving the kept set in one move, per kept state.
    pub fn killing(&self) -> Vec<f64> {
        let base = match self.parent.time {
            TimeKind::Continuous => 0.0,
            TimeKind::Discrete => 1.0,
        };
        (0..self.dim()).map(|a| base - self.generator.row_sum(a)).collect()
    }

    /// Local coordinates of a parent vector.
    pub fn localize(&self, v: &[f64]) -> Vec<f64> {
        self.kept.iter().map(|&s| v[s]).collect()
    }

    /// Parent coordinates of a local vector (zero off the kept set).
    pub fn globalize(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.parent.state_count()];
        for (a, &s) in self.kept.iter().enumerate() {
            out[s] = v[a];
        }
        out
    }

    /// Position of a parent state among the kept states.
    pub fn local_index(&self, state: usize) -> Option<usize> {
        self.kept.binary_search(&state).ok()
    }

    /// Dense copy of −Q_A (continuous) or I − P_A (discrete).
    pub fn dense_green_operator(&self) -> DMatrix<f64> {
        let mut m = -self.generator.to_dense();
        if self.parent.time == TimeKind::Discrete {
            for i in 0..self.dim() {
                m[(i, i)] += 1.0;
            }
        }
        m
    }

    /// Number of communicating classes of the kept block.
    pub fn class_count(&self) -> usize {
        strongly_connected_count(&self.generator)
    }
}

fn strongly_connected_count(m: &Csr) -> usize {
    // Kosaraju over positive off-diagonal entries.
    let n = m.dim();
    let t = m.transpose();
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut stack = vec![(s, 0usize)];
        while let Some(&mut (x, ref mut k)) = stack.last_mut() {
            let (c, v) = m.row(x);
            if *k < c.len() {
                let (y, w) = (c[*k], v[*k]);
                *k += 1;
                if y != x && w > 0.0 && !seen[y] {
                    seen[y] = true;
                    stack.push((y, 0));
                }
            } else {
                order.push(x);
                stack.pop();
            }
        }
    }
    let mut comp = vec![false; n];
    let mut count = 0;
    for &s in order.iter().rev() {
        if comp[s] {
            continue;
        }
        count += 1;
        comp[s] = true;
        let mut stack = vec![s];
        while let Some(x) = stack.pop() {
            let (c, v) = t.row(x);
            for (&y, &w) in c.iter().zip(v) {
                if y != x && w > 0.0 && !comp[y] {
                    comp[y] = true;
                    stack.push(y);
                }
            }
        }
    }
    count
}
