//! Synchronous LOCAL-model execution of the fixing procedure.
//!
//! Rounds are counted on the square of the dependency graph during
//! coloring, and as a fixed number per color class during fixing.

mod coloring;
mod local;

pub use coloring::{
    is_two_hop_proper, linial_fixed_point, linial_parameters, square_graph, two_hop_coloring, Coloring,
};
pub use local::{isolation_check, run_local, LocalRun, RoundLog, ROUNDS_PER_COLOR};
