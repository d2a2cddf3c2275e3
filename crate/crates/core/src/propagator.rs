use nalgebra::{DMatrix, DVector};

use crate::chain::TimeKind;
use crate::error::{Error, Result};
use crate::kernel::{integer_steps, Kernel};

/// Dense binary-power ladder H_h, H_2h, H_4h, ... for repeated long-time evolution.
///
/// Continuous chains: the base step is h = 1/Λ (one expected uniformization jump), built
/// from the Poisson series to relative precision 1e-18; times between ladder points are
/// covered by a short sparse uniformization. Discrete chains: h = 1 and the base is P.
/// Every operation is a sum of nonnegative products, so small survival probabilities keep
/// their relative accuracy.
#[derive(Clone, Debug)]
pub struct Propagator {
    kernel: Kernel,
    step: f64,
    ladder: Vec<DMatrix<f64>>,
}

fn base_step(kernel: &Kernel) -> DMatrix<f64> {
    let p = kernel.matrix();
    match kernel.time() {
        TimeKind::Discrete => p.to_dense(),
        TimeKind::Continuous => {
            // e^{-1} sum_k P^k / k!; the tail past k = 20 is below 1e-19.
            let n = p.dim();
            let mut term = DMatrix::<f64>::identity(n, n);
            let mut acc = term.clone();
            for k in 1..=20 {
                term = p.left_mul_dense(&term) / k as f64;
                acc += &term;
            }
            acc * (-1.0f64).exp()
        }
    }
}

impl Propagator {
    /// Ladder long enough to reach `t_max` without extension.
    pub fn new(kernel: &Kernel, t_max: f64) -> Self {
        let step = match kernel.time() {
            TimeKind::Continuous => 1.0 / kernel.rate(),
            TimeKind::Discrete => 1.0,
        };
        let mut ladder = vec![base_step(kernel)];
        let steps = (t_max / step).max(1.0);
        while ((1u64 << (ladder.len() - 1)) as f64) * 2.0 <= steps && ladder.len() < 63 {
            let last = ladder.last().unwrap();
            ladder.push(last * last);
        }
        Propagator { kernel: kernel.clone(), step, ladder }
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    fn split(&self, t: f64) -> Result<(u64, f64)> {
        match self.kernel.time() {
            TimeKind::Discrete => Ok((integer_steps(t)?, 0.0)),
            TimeKind::Continuous => {
                if !(t >= 0.0) || !t.is_finite() {
                    return Err(Error::InvalidArgument(format!("time must be finite and nonnegative, got {t}")));
                }
                let k = (t / self.step).floor();
                let rem = (t - k * self.step).max(0.0);
                Ok((k as u64, rem))
            }
        }
    }

    /// Calls `f` with H_{2^j h} for every set bit j of `k`, lowest first.
    fn for_each_level<F: FnMut(&DMatrix<f64>)>(&self, k: u64, mut f: F) {
        let bits = 64 - k.leading_zeros() as usize;
        let mut extra: Vec<DMatrix<f64>> = Vec::new();
        while self.ladder.len() + extra.len() < bits {
            let last = extra.last().unwrap_or_else(|| self.ladder.last().unwrap());
            let sq = last * last;
            extra.push(sq);
        }
        for j in 0..bits {
            if (k >> j) & 1 == 1 {
                let m = if j < self.ladder.len() { &self.ladder[j] } else { &extra[j - self.ladder.len()] };
                f(m);
            }
        }
    }

    /// Row vector v H_t (unnormalized).
    pub fn apply_row(&self, v: &[f64], t: f64) -> Result<Vec<f64>> {
        let (k, rem) = self.split(t)?;
        let mut cur = if rem > 0.0 { self.kernel.evolve_row(v, rem)? } else { v.to_vec() };
        self.for_each_level(k, |m| {
            let row = DVector::from_column_slice(&cur);
            cur = m.tr_mul(&row).iter().copied().collect();
        });
        Ok(cur)
    }

    /// Column vector H_t u.
    pub fn apply_col(&self, u: &[f64], t: f64) -> Result<Vec<f64>> {
        let (k, rem) = self.split(t)?;
        let mut cur = if rem > 0.0 { self.kernel.evolve_col(u, rem)? } else { u.to_vec() };
        self.for_each_level(k, |m| {
            cur = (m * DVector::from_column_slice(&cur)).iter().copied().collect();
        });
        Ok(cur)
    }

    /// Each row of `rows` evolved: rows H_t.
    pub fn apply_rows(&self, rows: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
        let (k, rem) = self.split(t)?;
        let mut cur = if rem > 0.0 { self.remainder_rows(rows, rem)? } else { rows.clone() };
        self.for_each_level(k, |m| cur = &cur * m);
        Ok(cur)
    }

    fn remainder_rows(&self, rows: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
        let mut out = rows.clone();
        for i in 0..rows.nrows() {
            let r: Vec<f64> = rows.row(i).iter().copied().collect();
            let e = self.kernel.evolve_row(&r, t)?;
            for (j, v) in e.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        Ok(out)
    }

    /// The full matrix H_t.
    pub fn matrix(&self, t: f64) -> Result<DMatrix<f64>> {
        self.apply_rows(&DMatrix::identity(self.dim(), self.dim()), t)
    }

    /// Survival probabilities P(no killing by t) from every state: H_t 1.
    pub fn survival(&self, t: f64) -> Result<Vec<f64>> {
        self.apply_col(&vec![1.0; self.dim()], t)
    }
}
