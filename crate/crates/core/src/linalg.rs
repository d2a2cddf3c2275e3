use nalgebra::{DMatrix, DVector, Dyn, LU};

use crate::chain::SubChain;
use crate::error::{Error, Result};

/// Partial-pivot LU factorization with checked solves.
pub(crate) struct DenseSolver {
    lu: LU<f64, Dyn, Dyn>,
    what: &'static str,
}

impl DenseSolver {
    pub fn new(m: DMatrix<f64>, what: &'static str) -> Result<Self> {
        let lu = m.lu();
        if !lu.is_invertible() {
            return Err(Error::SingularSystem(what.into()));
        }
        Ok(DenseSolver { lu, what })
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let x = self
            .lu
            .solve(&DVector::from_column_slice(rhs))
            .ok_or_else(|| Error::SingularSystem(self.what.into()))?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem(self.what.into()));
        }
        Ok(x.iter().copied().collect())
    }
}

/// Green operator N = (−Q_A)^{-1} (or (I − P_A)^{-1}) of a killed chain, factored once
/// in both orientations.
pub(crate) struct Green {
    forward: DenseSolver,
    adjoint: DenseSolver,
    dim: usize,
}

impl Green {
    pub fn new(sub: &SubChain<'_>) -> Result<Self> {
        let m = sub.dense_green_operator();
        let t = m.transpose();
        Ok(Green {
            forward: DenseSolver::new(m, "killed generator")?,
            adjoint: DenseSolver::new(t, "killed generator (transposed)")?,
            dim: sub.dim(),
        })
    }

    /// N u.
    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.forward.solve(u)
    }

    /// v N.
    pub fn apply_left(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.adjoint.solve(v)
    }

    /// Expected exit times N 1.
    pub fn mean_exit_times(&self) -> Result<Vec<f64>> {
        self.apply(&vec![1.0; self.dim])
    }

    /// Row `a` of N: expected local times from local state `a`.
    pub fn row(&self, a: usize) -> Result<Vec<f64>> {
        let mut e = vec![0.0; self.dim];
        e[a] = 1.0;
        self.apply_left(&e)
    }
}
