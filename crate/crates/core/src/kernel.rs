use crate::chain::TimeKind;
use crate::error::{Error, Result};
use crate::poisson::poisson_weights;
use crate::sparse::Csr;

pub(crate) const POISSON_TOL: f64 = 1e-12;

/// One-step (sub)stochastic kernel. For continuous chains this is the uniformized
/// kernel I + Q/Λ and time t corresponds to a Poisson(Λt) number of steps.
#[derive(Clone, Debug)]
pub struct Kernel {
    matrix: Csr,
    time: TimeKind,
    rate: f64,
}

/// Number of kernel steps for a discrete time argument.
pub(crate) fn integer_steps(t: f64) -> Result<u64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("time must be finite and nonnegative, got {t}")));
    }
    let r = t.round();
    if (t - r).abs() > 1e-9 * t.max(1.0) {
        return Err(Error::NonIntegerTime(t));
    }
    Ok(r as u64)
}

impl Kernel {
    pub(crate) fn new(matrix: Csr, time: TimeKind, rate: f64) -> Self {
        Kernel { matrix, time, rate }
    }

    pub fn matrix(&self) -> &Csr {
        &self.matrix
    }

    pub fn time(&self) -> TimeKind {
        self.time
    }

    /// Λ for continuous chains, 1 for discrete ones.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn principal(&self, keep: &[usize]) -> Kernel {
        Kernel { matrix: self.matrix.principal(keep), time: self.time, rate: self.rate }
    }

    pub fn step_row(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        self.matrix.mul_row_into(v, &mut out);
        out
    }

    pub fn step_col(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        self.matrix.mul_col_into(u, &mut out);
        out
    }

    /// v H_t without renormalization (mass lost to killing stays lost).
    pub fn evolve_row(&self, v: &[f64], t: f64) -> Result<Vec<f64>> {
        self.evolve(v, t, true)
    }

    /// H_t u, e.g. survival probabilities when u = 1.
    pub fn evolve_col(&self, u: &[f64], t: f64) -> Result<Vec<f64>> {
        self.evolve(u, t, false)
    }

    fn evolve(&self, v: &[f64], t: f64, row: bool) -> Result<Vec<f64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: v.len() });
        }
        let apply = |x: &[f64], out: &mut [f64]| {
            if row {
                self.matrix.mul_row_into(x, out)
            } else {
                self.matrix.mul_col_into(x, out)
            }
        };
        let mut cur = v.to_vec();
        let mut next = vec![0.0; v.len()];
        match self.time {
            TimeKind::Discrete => {
                for _ in 0..integer_steps(t)? {
                    apply(&cur, &mut next);
                    std::mem::swap(&mut cur, &mut next);
                }
                Ok(cur)
            }
            TimeKind::Continuous => {
                if !(t >= 0.0) || !t.is_finite() {
                    return Err(Error::InvalidArgument(format!("time must be finite and nonnegative, got {t}")));
                }
                let pw = poisson_weights(self.rate * t, POISSON_TOL);
                let mut acc = vec![0.0; v.len()];
                for k in 0..=pw.right() {
                    if k >= pw.left {
                        let w = pw.weights[k - pw.left];
                        acc.iter_mut().zip(&cur).for_each(|(a, c)| *a += w * c);
                    }
                    if k < pw.right() {
                        apply(&cur, &mut next);
                        std::mem::swap(&mut cur, &mut next);
                    }
                }
                Ok(acc)
            }
        }
    }
}
