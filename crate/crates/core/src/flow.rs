use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::chain::TimeKind;
use crate::error::Result;
use crate::kernel::Kernel;
use crate::propagator::Propagator;

/// Above this dimension the dense ladder is never built.
pub(crate) const DENSE_FLOW_LIMIT: usize = 1500;

/// Time evolution under a kernel, dense ladder or sparse uniformization depending on cost.
pub(crate) enum Flow {
    Dense(Propagator),
    Sparse(Kernel),
}

impl Flow {
    /// `vectors`: roughly how many vectors will be pushed to times up to `t_max`.
    pub fn new(kernel: &Kernel, t_max: f64, vectors: usize) -> Self {
        let n = kernel.dim() as f64;
        let jumps = match kernel.time() {
            TimeKind::Continuous => kernel.rate() * t_max,
            TimeKind::Discrete => t_max,
        }
        .max(1.0);
        let sparse = (jumps + 10.0 * jumps.sqrt()) * kernel.matrix().nnz().max(1) as f64 * vectors.max(1) as f64;
        let dense = n * n * n * (jumps.log2() + 2.0) + n * n * vectors as f64 * jumps.log2();
        if kernel.dim() <= DENSE_FLOW_LIMIT && dense < sparse {
            Flow::Dense(Propagator::new(kernel, t_max))
        } else {
            Flow::Sparse(kernel.clone())
        }
    }

    pub fn row(&self, v: &[f64], t: f64) -> Result<Vec<f64>> {
        match self {
            Flow::Dense(p) => p.apply_row(v, t),
            Flow::Sparse(k) => k.evolve_row(v, t),
        }
    }

    pub fn col(&self, u: &[f64], t: f64) -> Result<Vec<f64>> {
        match self {
            Flow::Dense(p) => p.apply_col(u, t),
            Flow::Sparse(k) => k.evolve_col(u, t),
        }
    }

    pub fn rows(&self, m: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
        match self {
            Flow::Dense(p) => p.apply_rows(m, t),
            Flow::Sparse(k) => {
                let rows: Vec<Vec<f64>> = (0..m.nrows())
                    .into_par_iter()
                    .map(|i| {
                        let r: Vec<f64> = m.row(i).iter().copied().collect();
                        k.evolve_row(&r, t)
                    })
                    .collect::<Result<_>>()?;
                Ok(DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| rows[i][j]))
            }
        }
    }
}
