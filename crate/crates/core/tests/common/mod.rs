#![allow(dead_code)]

use metatrap::models::{build_birth_death, BirthDeathSpec};
use metatrap::measures::TrapPartition;
use metatrap::FiniteChain;
use nalgebra::{DMatrix, SymmetricEigen};

pub fn bd(n: usize) -> (FiniteChain, TrapPartition) {
    let chain = build_birth_death(n).unwrap();
    let part = TrapPartition::from_trap(n + 1, &BirthDeathSpec::new(n).unwrap().trap()).unwrap();
    (chain, part)
}

/// Dense Q restricted to `keep` (continuous chains).
pub fn dense_block(chain: &FiniteChain, keep: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(keep.len(), keep.len(), |i, j| chain.generator().get(keep[i], keep[j]))
}

/// e^{tQ_K} for a block of a reversible generator, by symmetrizing with π^{1/2}
/// and diagonalizing. Independent of the uniformization code.
pub fn reversible_block_expm(chain: &FiniteChain, pi: &[f64], keep: &[usize], t: f64) -> DMatrix<f64> {
    let q = dense_block(chain, keep);
    let s: Vec<f64> = keep.iter().map(|&x| pi[x].sqrt()).collect();
    let m = keep.len();
    let sym = DMatrix::from_fn(m, m, |i, j| s[i] * q[(i, j)] / s[j]);
    let sym = (&sym + sym.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| (l * t).exp()));
    let e = &eig.eigenvectors * d * eig.eigenvectors.transpose();
    DMatrix::from_fn(m, m, |i, j| e[(i, j)] * s[j] / s[i])
}

/// Trapezoid rule on a uniform grid.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    h * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1]))
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
