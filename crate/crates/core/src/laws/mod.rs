//! Samplers for the scalar record laws and the matrix step laws built from them.
//!
//! Every sampler is a pure function of an explicit seeded generator; per-trial generators
//! come from [`rng::trial_rng`].

pub mod full_support;
pub mod rng;
mod scalar;
mod step;

pub use full_support::{enumerate_sl, sample_full_support_index, sample_full_support_rational};
pub use rng::{trial_rng, uniform_open0, TrialRng};
pub use scalar::{
    power_floor_pmf, sample_scalar, scalar_value_at, scalar_value_with_floor_limit,
    simple_record_pmf, simple_record_t_min, LogDomainValue, ScalarKind, ScalarLawSpec,
    MATERIALIZE_BITS, SCALAR_PRECISION,
};
pub use step::{
    core_height_log_bounds, realize_step_matrix, sample_step, shear_height_log_upper,
    shear_t_height_log_upper, step_from_seeds, Core, DiagCore, DyadicAddress, Kappa, Level,
    MatrixLawSpec, PreparedLaw, StepDescriptor, StepSeeds, STEP_BIT_BUDGET,
};
