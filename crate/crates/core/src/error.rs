use thiserror::Error;

use crate::chain::Violation;
use crate::hpg::HpgCertificate;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid chain: {}", join_violations(.0))]
    InvalidChain(Vec<Violation>),
    #[error("singular linear system: {0}")]
    SingularSystem(String),
    #[error("state {0} carries zero stationary mass")]
    ZeroMassState(usize),
    #[error("discrete chain evolved for non-integer time {0}")]
    NonIntegerTime(f64),
    #[error("restriction set covers the whole state space")]
    EmptyComplement,
    #[error("measure assigns zero mass to the trap")]
    ZeroMass,
    #[error("surviving mass {0:e} below the underflow floor")]
    ExtinctMass(f64),
    #[error("conditioning event has zero probability (start {state}, t = {time})")]
    ZeroConditioning { state: usize, time: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("trap splits into {0} communicating classes")]
    DisconnectedTrap(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("empty index set")]
    EmptySet,
    #[error("not a birth-death chain: entry ({0}, {1}) off the tridiagonal")]
    NotBirthDeath(usize, usize),
    #[error("internal bound violated: {0}")]
    InternalBoundViolation(String),
    #[error("hypotheses not satisfied: r + 2 f^alpha = {:.6} >= 1/4 (f = {:e}, d = {:e}, r = {:e})", .0.c, .0.f, .0.d, .0.r)]
    NotApplicable(Box<HpgCertificate>),
    #[error("bound {bound} violated at state {state:?}, t = {time:?}: measured {measured:e} > {limit:e}")]
    BoundViolation {
        bound: String,
        state: Option<usize>,
        time: Option<f64>,
        measured: f64,
        limit: f64,
    },
    #[error("n = {0} too large for the permutation chain (max 8)")]
    TooLarge(usize),
    #[error("lumping fails at permutation {perm:?}: discrepancy {discrepancy}")]
    LumpingViolation { perm: Vec<u8>, discrepancy: f64 },
    #[error("all {0} trajectories censored")]
    AllCensored(usize),
    #[error("empty sample")]
    EmptySample,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
