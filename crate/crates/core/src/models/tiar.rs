use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{numeric_labels, FiniteChain};
use crate::error::{Error, Result};
use crate::hitting::return_vs_hit_probability;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TiarKind {
    Projection,
    Full,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TiarSpec {
    pub n: usize,
    pub kind: TiarKind,
}

impl TiarSpec {
    pub fn build(&self) -> Result<FiniteChain> {
        match self.kind {
            TiarKind::Projection => build_tiar_projection(self.n),
            TiarKind::Full => build_tiar_full(self.n),
        }
    }
}

/// Row s of the projected kernel, exact.
pub fn tiar_projection_row(n: usize, s: usize) -> Vec<Ratio<i64>> {
    let unit = Ratio::new(1, n as i64);
    let mut row = vec![Ratio::from_integer(0); n];
    if s == 0 {
        row.iter_mut().for_each(|r| *r = unit);
        return row;
    }
    row[s - 1] = unit;
    row[s] = Ratio::new(s as i64, n as i64);
    for r in row.iter_mut().skip(s + 1) {
        *r = unit;
    }
    row
}

fn to_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn projection_entries(n: usize) -> Result<Vec<(usize, usize, f64)>> {
    let mut out = Vec::new();
    for s in 0..n {
        let row = tiar_projection_row(n, s);
        let total: Ratio<i64> = row.iter().copied().sum();
        if total != Ratio::from_integer(1) {
            return Err(Error::InternalBoundViolation(format!("projection row {s} sums to {total}")));
        }
        out.extend(row.into_iter().enumerate().filter(|(_, r)| *r.numer() != 0).map(|(j, r)| (s, j, to_f64(r))));
    }
    Ok(out)
}

/// Descent-position chain of the top-to-random shuffle on {0..n−1}, discrete time.
pub fn build_tiar_projection(n: usize) -> Result<FiniteChain> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need n >= 2, got {n}")));
    }
    FiniteChain::discrete(numeric_labels(n), &projection_entries(n)?)
}

/// Unit-rate continuous-time version: Q = P − I.
pub fn build_tiar_projection_continuous(n: usize) -> Result<FiniteChain> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need n >= 2, got {n}")));
    }
    let rates: Vec<_> = projection_entries(n)?.into_iter().filter(|t| t.0 != t.1).collect();
    FiniteChain::continuous(numeric_labels(n), &rates)?.with_rate(1.0)
}

/// π(0) = 1/n!, π(k) = (n−k)/(n−k+1)!.
pub fn tiar_stationary(n: usize) -> Vec<f64> {
    let fact = |m: usize| (1..=m).fold(1.0f64, |a, b| a * b as f64);
    (0..n)
        .map(|k| if k == 0 { 1.0 / fact(n) } else { (n - k) as f64 / fact(n - k + 1) })
        .collect()
}

/// Last descent position max{i : x_i > x_{i+1}} (1-based), 0 for the sorted deck.
pub fn descent_top(x: &[u8]) -> usize {
    (1..x.len()).rev().find(|&i| x[i - 1] > x[i]).unwrap_or(0)
}

/// All permutations of 1..=n in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<u8>> {
    let mut cur: Vec<u8> = (1..=n as u8).collect();
    let mut out = vec![cur.clone()];
    loop {
        let Some(i) = (1..cur.len()).rev().find(|&i| cur[i - 1] < cur[i]) else { break };
        let j = (i..cur.len()).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
    out
}

fn rank(x: &[u8]) -> usize {
    // Lehmer code in the factorial number system.
    let n = x.len();
    let mut r = 0;
    for i in 0..n {
        let smaller = x[i + 1..].iter().filter(|&&y| y < x[i]).count();
        r = r * (n - i) + smaller;
    }
    r
}

/// Top card moved to position k (1-based); k = 1 leaves the deck unchanged.
fn insert_top(x: &[u8], k: usize) -> Vec<u8> {
    let mut y = x[1..k].to_vec();
    y.push(x[0]);
    y.extend_from_slice(&x[k..]);
    y
}

/// The shuffle on all n! orderings, discrete time.
pub fn build_tiar_full(n: usize) -> Result<FiniteChain> {
    if n > 8 {
        return Err(Error::TooLarge(n));
    }
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need n >= 2, got {n}")));
    }
    let perms = permutations(n);
    let p = 1.0 / n as f64;
    let entries: Vec<_> = perms
        .iter()
        .enumerate()
        .flat_map(|(i, x)| (1..=n).map(move |k| (i, rank(&insert_top(x, k)), p)))
        .collect();
    let labels = perms.iter().map(|x| x.iter().map(|d| d.to_string()).collect::<String>()).collect();
    FiniteChain::discrete(labels, &entries)
}

#[derive(Clone, Debug, Serialize)]
pub struct LumpingReport {
    pub n: usize,
    pub rows_checked: usize,
    pub lumps: bool,
    pub max_discrepancy: f64,
}

fn parse_perm(label: &str) -> Option<Vec<u8>> {
    label.chars().map(|c| c.to_digit(10).map(|d| d as u8)).collect()
}

/// Checks that every row of the permutation chain, pushed forward by the descent map,
/// equals the projected row of its image: exactly on integer move counts and numerically
/// on the stored kernel.
pub fn project_and_verify_lumping(full: &FiniteChain, n: usize) -> Result<LumpingReport> {
    let perms: Vec<Vec<u8>> = full
        .labels()
        .iter()
        .map(|l| parse_perm(l).filter(|p| p.len() == n))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::InvalidArgument("chain states are not permutations of the given size".into()))?;
    let sigma: Vec<usize> = perms.iter().map(|p| descent_top(p)).collect();
    let rows: Vec<Vec<f64>> = (0..n).map(|s| tiar_projection_row(n, s).into_iter().map(to_f64).collect()).collect();
    let per_row: Vec<(usize, f64, bool)> = (0..perms.len())
        .into_par_iter()
        .map(|i| {
            let x = &perms[i];
            let s = sigma[i];
            let expected = tiar_projection_row(n, s);
            let mut counts = vec![0i64; n];
            for k in 1..=n {
                counts[descent_top(&insert_top(x, k))] += 1;
            }
            let exact = counts.iter().zip(&expected).all(|(&c, e)| Ratio::new(c, n as i64) == *e);
            let mut pushed = vec![0.0; n];
            let (cols, vals) = full.generator().row(i);
            for (&y, &w) in cols.iter().zip(vals) {
                pushed[sigma[y]] += w;
            }
            let disc = pushed.iter().zip(&rows[s]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            (i, disc, exact)
        })
        .collect();
    let max_discrepancy = per_row.iter().map(|r| r.1).fold(0.0, f64::max);
    if let Some(&(i, disc, _)) = per_row.iter().find(|r| !r.2 || r.1 > 1e-12) {
        return Err(Error::LumpingViolation { perm: perms[i].clone(), discrepancy: disc });
    }
    Ok(LumpingReport { n, rows_checked: perms.len(), lumps: true, max_discrepancy })
}

#[derive(Clone, Debug, Serialize)]
pub struct XikRow {
    pub k: usize,
    /// P[τ^k_0 < τ^k_k].
    pub probability: f64,
    /// (n−1)(n−k−1)!/n!.
    pub bound: f64,
    pub e_k: f64,
    /// n + (n−k) E_{k−1} (k ≥ 2).
    pub recursion_lower: Option<f64>,
    /// n Σ_{j=1}^k (n−j−1)!/(n−k−1)!.
    pub closed_form_lower: f64,
}

/// Exact return-versus-hit probabilities of the projected chain against their factorial bounds.
pub fn xik0_bound_check(n: usize) -> Result<Vec<XikRow>> {
    if !(2..=12).contains(&n) {
        return Err(Error::InvalidArgument(format!("n = {n} outside 2..=12")));
    }
    let chain = build_tiar_projection(n)?;
    let fact = |m: usize| (1..=m).fold(1.0f64, |a, b| a * b as f64);
    let mut rows: Vec<XikRow> = Vec::new();
    for k in 1..n {
        let probability = return_vs_hit_probability(&chain, k, &[0])?;
        let bound = (n - 1) as f64 * fact(n - k - 1) / fact(n);
        let e_k = 1.0 / probability;
        let recursion_lower = rows.last().map(|prev| n as f64 + (n - k) as f64 * prev.e_k);
        let closed_form_lower = n as f64 * (1..=k).map(|j| fact(n - j - 1)).sum::<f64>() / fact(n - k - 1);
        let slack = 1e-12;
        let violated = |what: &str, measured: f64, limit: f64| Error::BoundViolation {
            bound: format!("{what} (n = {n}, k = {k})"),
            state: Some(k),
            time: None,
            measured,
            limit,
        };
        if probability > bound * (1.0 + slack) {
            return Err(violated("return-vs-hit probability", probability, bound));
        }
        if let Some(lo) = recursion_lower {
            if e_k < lo * (1.0 - slack) {
                return Err(violated("E_k recursion", lo, e_k));
            }
        }
        if e_k < closed_form_lower * (1.0 - slack) {
            return Err(violated("E_k closed form", closed_form_lower, e_k));
        }
        rows.push(XikRow { k, probability, bound, e_k, recursion_lower, closed_form_lower });
    }
    Ok(rows)
}
