use serde::Serialize;

use crate::chain::{numeric_labels, FiniteChain};
use crate::error::{Error, Result};
use crate::hitting::{hitting_probability_before, mean_hitting_time};

/// Log-barrier birth–death family on {0..n}: π(x) ∝ 1/((x∨1)^{3/2}((n−x)∨1)^{3/2}).
#[derive(Clone, Debug, Serialize)]
pub struct BirthDeathSpec {
    pub n: usize,
    /// Z(n) = Σ_x 1/((x∨1)^{3/2}((n−x)∨1)^{3/2}); decays like n^{-3/2}.
    pub z: f64,
    pub pi: Vec<f64>,
}

fn weight(n: usize, x: usize) -> f64 {
    let a = x.max(1) as f64;
    let b = (n - x).max(1) as f64;
    1.0 / (a.powf(1.5) * b.powf(1.5))
}

impl BirthDeathSpec {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 || n % 2 == 1 {
            return Err(Error::InvalidArgument(format!("birth-death size must be even and >= 4, got {n}")));
        }
        let w: Vec<f64> = (0..=n).map(|x| weight(n, x)).collect();
        let z: f64 = w.iter().sum();
        Ok(BirthDeathSpec { n, z, pi: w.iter().map(|v| v / z).collect() })
    }

    /// Metropolis birth rate min{1, π(x+1)/π(x)}.
    pub fn birth(&self, x: usize) -> f64 {
        if x >= self.n {
            return 0.0;
        }
        (weight(self.n, x + 1) / weight(self.n, x)).min(1.0)
    }

    /// Metropolis death rate min{1, π(x−1)/π(x)}.
    pub fn death(&self, x: usize) -> f64 {
        if x == 0 {
            return 0.0;
        }
        (weight(self.n, x - 1) / weight(self.n, x)).min(1.0)
    }

    /// Trap {0..n/2−1} with target {n/2..n}.
    pub fn trap(&self) -> Vec<usize> {
        (0..self.n / 2).collect()
    }

    pub fn target(&self) -> Vec<usize> {
        (self.n / 2..=self.n).collect()
    }
}

pub fn build_birth_death(n: usize) -> Result<FiniteChain> {
    build_birth_death_truncated(n, n)
}

/// The same rates restricted to {0..top}; the birth out of `top` is removed.
pub fn build_birth_death_truncated(n: usize, top: usize) -> Result<FiniteChain> {
    let spec = BirthDeathSpec::new(n)?;
    if top == 0 || top > n {
        return Err(Error::InvalidArgument(format!("truncation point {top} outside 1..={n}")));
    }
    let mut rates = Vec::with_capacity(2 * top);
    for x in 0..=top {
        if x < top {
            rates.push((x, x + 1, spec.birth(x)));
        }
        if x > 0 {
            rates.push((x, x - 1, spec.death(x)));
        }
    }
    FiniteChain::continuous(numeric_labels(top + 1), &rates)
}

#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticsRow {
    pub n: usize,
    /// E[τ^0_{n^α}] and its ratio to n^{5α/2}.
    pub climb_time: f64,
    pub climb_ratio: f64,
    /// E[τ^{n/2}_0] for the chain reflected at n/2, and its ratio to n².
    pub descent_time: f64,
    pub descent_ratio: f64,
    /// The same expectation on the full chain on {0..n} (can fall into the other well).
    pub descent_time_full: f64,
    /// P(τ^x_0 > τ^x_{n/2}) at x = n/10, and its ratio to (2x/n)^{5/2}.
    pub escape_probability: f64,
    pub escape_ratio: f64,
}

pub fn birth_death_asymptotics_check(n_list: &[usize], alpha: f64) -> Result<Vec<AsymptoticsRow>> {
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("sizes must be increasing".into()));
    }
    if n_list.iter().any(|&n| n > 2000) {
        return Err(Error::InvalidArgument("sizes above 2000 are not supported".into()));
    }
    n_list
        .iter()
        .map(|&n| {
            let chain = build_birth_death(n)?;
            let nf = n as f64;
            let m = nf.powf(alpha).round() as usize;
            let climb_time = mean_hitting_time(&chain, 0, &(m..=n).collect::<Vec<_>>())?;
            let half = build_birth_death_truncated(n, n / 2)?;
            let descent_time = mean_hitting_time(&half, n / 2, &[0])?;
            let descent_time_full = mean_hitting_time(&chain, n / 2, &[0])?;
            let x = n / 10;
            let escape_probability = hitting_probability_before(&chain, x, &[n / 2], &[0])?;
            Ok(AsymptoticsRow {
                n,
                climb_time,
                climb_ratio: climb_time / nf.powf(2.5 * alpha),
                descent_time,
                descent_ratio: descent_time / (nf * nf),
                descent_time_full,
                escape_probability,
                escape_ratio: escape_probability / (2.0 * x as f64 / nf).powf(2.5),
            })
        })
        .collect()
}
