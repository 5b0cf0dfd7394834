//! Generators, representable tuples and supporting hyperplanes.
//!
//! A generator puts weights `a_ij, a_ji` with `a_ij + a_ji <= 1` on every
//! pair of a rank-`r` skeleton; the tuple it generates collects the row
//! products. The complement of the representable tuples inside `[0, 1]^r` is
//! convex, which is what makes invariant-preserving variable fixing possible.

mod hyperplane;
mod oracle;
mod probe;
mod trade;
mod tuple;

pub use hyperplane::{
    decompose_in_hyperplane, local_representability_radius, movement_vectors,
    supporting_hyperplane, Decomposition, Hyperplane, MovementVector, ORTHOGONALITY_TOL,
};
pub use oracle::{
    boundary_height_r3, default_tol, is_maximal, is_representable, maximize_coordinate,
    maximize_coordinate_with_witness, OracleResult, TOL_CLOSED_FORM, TOL_SEARCH,
};
pub use probe::{convexity_probe, convexity_probe_with, ProbeConfig, ProbeReport, ProbeSample, Sampling};
pub use trade::{shrink_to, strong_dominator, trade_epsilon, trade_range, traded_generator};
pub use tuple::{generate, Generator, Tuple};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid tuple: {0}")]
    InvalidTuple(String),
    #[error("invalid generator: {0}")]
    InvalidGenerator(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("perturbation {delta} outside the admissible range [0, {max})")]
    DeltaOutOfRange { delta: f64, max: f64 },
    #[error("degenerate generator: {0}")]
    DegenerateGenerator(String),
    #[error("degenerate movement vectors: {0}")]
    Degenerate(String),
    #[error("internal error: {0}")]
    Internal(String),
}
