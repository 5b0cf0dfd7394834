//! Representable-tuple geometry and a LOCAL-model simulator for the
//! deterministic Lovász Local Lemma fixing procedure under `p * 2^d < 1`.

pub mod gen;
pub mod geometry;
pub mod lll;
pub mod sim;
