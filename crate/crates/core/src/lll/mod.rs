//! Exact LLL instances, the Property P* state and invariant-preserving
//! variable fixing.
//!
//! Distributions and conditional probabilities are exact rationals. Edge
//! values `phi` and requirement tuples are floating point, since they come
//! from the geometry oracle.

mod fixing;
mod format;
mod instance;
mod pstar;

pub use fixing::{
    fix_variable, forward_order, requirement_tuple, reversed_order, run_sequential, Attempt, FixOptions,
    FixStep, IdentityTerm, SequentialRun, TheoremViolation, DOMINATION_REL_SLACK,
};
pub use format::{
    assignment_from_json, assignment_to_json, format_rational, instance_from_json, instance_to_json,
    parse_rational, Assignment,
};
pub use instance::{
    build_dependency_graph, check_criterion, conditional_probability_of, to_f64, CriterionCheck,
    DependencyGraph, Event, LllInstance, Meta, PartialAssignment, RawEvent, Variable,
};
pub use pstar::{check_pstar, PStarCondition, PStarReport, PStarState, PSTAR_SLACK};

use thiserror::Error;

use crate::geometry::GeometryError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LllError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("declared metadata does not match the instance: {0}")]
    MetaMismatch(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("criterion fails: p * 2^d = {value} is not below 1")]
    CriterionFailed { value: String },
    #[error("assignment is not total: {0}")]
    PartialAssignment(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invariant corrupted: {0}")]
    InvariantCorruption(String),
    #[error("property P* violated after fixing variable {variable}: {detail}")]
    PStarViolated { variable: u64, detail: String },
    #[error("{0}")]
    TheoremViolation(Box<TheoremViolation>),
    #[error("concurrent writes detected: {0}")]
    IsolationViolation(String),
    #[error("generation failed: {0}")]
    Generation(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
