mod birth_death;
mod tiar;

pub use birth_death::{
    birth_death_asymptotics_check, build_birth_death, build_birth_death_truncated, AsymptoticsRow, BirthDeathSpec,
};
pub use tiar::{
    build_tiar_full, build_tiar_projection, build_tiar_projection_continuous, descent_top, permutations,
    project_and_verify_lumping, tiar_projection_row, tiar_stationary, xik0_bound_check, LumpingReport, TiarKind,
    TiarSpec, XikRow,
};
