use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const CLAMP: f64 = -1e-14;
const SUM_TOL: f64 = 1e-10;

/// A probability measure over the states of a chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbabilityVector {
    weights: Vec<f64>,
}

impl ProbabilityVector {
    /// Entries in [-1e-14, 0) are clamped to zero; the sum must be within 1e-10 of one.
    pub fn new(mut weights: Vec<f64>) -> Result<Self> {
        for (i, w) in weights.iter_mut().enumerate() {
            if !w.is_finite() || *w < CLAMP {
                return Err(Error::InvalidArgument(format!("weight {i} = {w} is not a probability")));
            }
            if *w < 0.0 {
                *w = 0.0;
            }
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidArgument(format!("weights sum to {s}, not 1")));
        }
        Ok(ProbabilityVector { weights })
    }

    /// Clamp roundoff negatives and rescale to unit mass.
    pub fn normalized(mut weights: Vec<f64>) -> Result<Self> {
        for w in weights.iter_mut() {
            if !w.is_finite() || *w < CLAMP * w.abs().max(1.0) {
                return Err(Error::InvalidArgument(format!("weight {w} is not a probability")));
            }
            if *w < 0.0 {
                *w = 0.0;
            }
        }
        let s: f64 = weights.iter().sum();
        if !(s > 0.0) {
            return Err(Error::ZeroMass);
        }
        weights.iter_mut().for_each(|w| *w /= s);
        Ok(ProbabilityVector { weights })
    }

    pub fn point_mass(n: usize, x: usize) -> Self {
        let mut weights = vec![0.0; n];
        weights[x] = 1.0;
        ProbabilityVector { weights }
    }

    pub fn uniform_on(n: usize, set: &[usize]) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::EmptySet);
        }
        let mut weights = vec![0.0; n];
        for &s in set {
            weights[s] = 1.0 / set.len() as f64;
        }
        Ok(ProbabilityVector { weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.weights
    }

    pub fn mass_of(&self, set: &[usize]) -> f64 {
        set.iter().map(|&i| self.weights[i]).sum()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.weights[i] > 0.0).collect()
    }
}

impl std::ops::Index<usize> for ProbabilityVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.weights[i]
    }
}

pub fn tv_distance(p: &ProbabilityVector, q: &ProbabilityVector) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch { expected: p.len(), got: q.len() });
    }
    Ok(tv_slices(p.as_slice(), q.as_slice()))
}

pub(crate) fn tv_slices(p: &[f64], q: &[f64]) -> f64 {
    let s: f64 = p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum();
    (0.5 * s).min(1.0)
}
