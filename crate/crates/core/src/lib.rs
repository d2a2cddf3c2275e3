pub mod chain;
pub mod error;
mod flow;
pub mod grid;
pub mod hitting;
pub mod hpg;
pub mod kernel;
mod linalg;
pub mod measures;
pub mod io;
pub mod models;
pub mod montecarlo;
pub mod poisson;
pub mod prob;
pub mod propagator;
pub mod sparse;

pub use chain::{FiniteChain, SubChain, TimeKind, Violation};
pub use error::{Error, Result};
pub use prob::{tv_distance, ProbabilityVector};
