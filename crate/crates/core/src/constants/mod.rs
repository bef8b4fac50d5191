//! Constants defined implicitly by the escape estimates: `α`, `a_p`, `K`, `ε_p`, the moment
//! constants `M`, `M'`, and the recursive sequences built from them.

mod epsilon;
mod moments;
mod sequences;

pub use epsilon::{
    a_p_value, alpha_enclosure, epsilon_p, k_condition_holds, k_is_minimal, smallest_k,
    zeta_enclosure, EpsilonPipeline, MAX_DECISION_PRECISION,
};
pub use moments::{
    diagonal_condition_bracket, moment_constants, ConditionMoment, Estimate, Method,
    MomentConstants, MomentMode,
};
pub use sequences::{
    escape_threshold_sequences, record_level_sequences, Check, Decrement, EpsilonMode, RealParam,
    SequenceKind, SequenceParams, SequenceRow, SequenceTable, DEFAULT_MAX_BITS,
};
