use std::fmt;

use num_rational::BigRational;
use serde::Serialize;

use super::instance::{to_f64, LllInstance, PartialAssignment};
use super::LllError;

/// Absolute slack on both P* conditions.
pub const PSTAR_SLACK: f64 = 1e-7;

/// Edge values `phi_e^v` and the partial assignment built so far.
///
/// Also caches `P(E_v | fixed)` per event, so a full P* check costs one pass
/// over edges and nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PStarState {
    /// `phi[e][side]`, side 0 belonging to the smaller event index of edge `e`.
    pub phi: Vec<[f64; 2]>,
    pub fixed: PartialAssignment,
    conditional: Vec<BigRational>,
}

impl PStarState {
    /// Every `phi` at 1, nothing fixed.
    pub fn new(inst: &LllInstance) -> Self {
        Self {
            phi: vec![[1.0, 1.0]; inst.graph.edges.len()],
            fixed: vec![None; inst.variables.len()],
            conditional: inst.event_probability.clone(),
        }
    }

    /// `phi_e^v`.
    pub fn phi_at(&self, inst: &LllInstance, e: usize, v: usize) -> f64 {
        self.phi[e][inst.graph.side(e, v)]
    }

    pub fn set_phi(&mut self, inst: &LllInstance, e: usize, v: usize, value: f64) {
        self.phi[e][inst.graph.side(e, v)] = value;
    }

    /// Cached `P(E_v | fixed)`.
    pub fn conditional(&self, v: usize) -> &BigRational {
        &self.conditional[v]
    }

    /// Records `X = s` and refreshes the cached conditionals of `X`'s
    /// endpoints.
    pub fn fix(&mut self, inst: &LllInstance, x: usize, s: usize) -> Result<(), LllError> {
        if self.fixed[x].is_some() {
            return Err(LllError::InvalidInput(format!(
                "variable {} is already fixed",
                inst.variables[x].id
            )));
        }
        self.fixed[x] = Some(s);
        for &v in &inst.graph.hyperedges[x] {
            self.conditional[v] = inst.conditional_probability(v, &self.fixed);
        }
        Ok(())
    }

    /// Like [`fix`](Self::fix) with the new conditionals already known.
    pub(crate) fn fix_with(&mut self, inst: &LllInstance, x: usize, s: usize, conditionals: &[BigRational]) {
        self.fixed[x] = Some(s);
        for (&v, q) in inst.graph.hyperedges[x].iter().zip(conditionals) {
            self.conditional[v] = q.clone();
        }
    }

    pub fn is_complete(&self) -> bool {
        self.fixed.iter().all(Option::is_some)
    }

    pub fn assignment(&self) -> Option<Vec<usize>> {
        self.fixed.iter().copied().collect()
    }

    /// `p * prod_{e at v} phi_e^v`.
    pub fn bound(&self, inst: &LllInstance, v: usize) -> f64 {
        let p = to_f64(&inst.p);
        inst.graph.incident[v]
            .iter()
            .fold(p, |acc, &e| acc * self.phi_at(inst, e, v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PStarCondition {
    /// `phi_e^u + phi_e^v <= 2`.
    EdgeBudget,
    /// `P(E_v | fixed) <= p * prod phi_e^v`.
    ProbabilityBound,
}

impl fmt::Display for PStarCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EdgeBudget => f.write_str("Condition 1 (edge budget)"),
            Self::ProbabilityBound => f.write_str("Condition 2 (probability bound)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PStarReport {
    pub pass: bool,
    /// `min_e (2 - phi_e^u - phi_e^v)`; `+inf` without edges.
    pub edge_slack: f64,
    pub worst_edge: Option<(u64, u64)>,
    /// `min_v (p * prod phi_e^v - P(E_v | fixed))`; `+inf` without events.
    pub probability_slack: f64,
    pub worst_event: Option<u64>,
    pub failed: Vec<PStarCondition>,
}

impl PStarReport {
    pub fn min_slack(&self) -> f64 {
        self.edge_slack.min(self.probability_slack)
    }
}

/// Evaluates both P* conditions on every edge and node.
pub fn check_pstar(inst: &LllInstance, state: &PStarState) -> PStarReport {
    let mut edge_slack = f64::INFINITY;
    let mut worst_edge = None;
    for (e, &(u, v)) in inst.graph.edges.iter().enumerate() {
        let s = 2.0 - (state.phi[e][0] + state.phi[e][1]);
        if s < edge_slack || s.is_nan() {
            edge_slack = s;
            worst_edge = Some((inst.events[u].id, inst.events[v].id));
        }
    }
    let mut probability_slack = f64::INFINITY;
    let mut worst_event = None;
    for v in 0..inst.events.len() {
        let s = state.bound(inst, v) - to_f64(state.conditional(v));
        if s < probability_slack || s.is_nan() {
            probability_slack = s;
            worst_event = Some(inst.events[v].id);
        }
    }
    let mut failed = Vec::new();
    if !(edge_slack >= -PSTAR_SLACK) {
        failed.push(PStarCondition::EdgeBudget);
    }
    if !(probability_slack >= -PSTAR_SLACK) {
        failed.push(PStarCondition::ProbabilityBound);
    }
    PStarReport {
        pass: failed.is_empty(),
        edge_slack,
        worst_edge,
        probability_slack,
        worst_event,
        failed,
    }
}
