use std::fmt;

use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use super::instance::{to_f64, LllInstance};
use super::pstar::{check_pstar, PStarState};
use super::LllError;
use crate::geometry::{default_tol, is_representable, Generator, Tuple};

/// Relative shortfall tolerated when no candidate generator dominates a
/// requirement tuple exactly.
pub const DOMINATION_REL_SLACK: f64 = 1e-12;

/// Amount added to positive coordinates before re-querying the oracle for a
/// witness with headroom.
const INFLATE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixOptions {
    /// Oracle tolerance; `None` picks [`default_tol`] for each rank.
    pub tol: Option<f64>,
    /// Run the full P* check after every step.
    pub check_each_step: bool,
}

impl Default for FixOptions {
    fn default() -> Self {
        Self { tol: None, check_each_step: true }
    }
}

/// One domain value tried during a fix step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Attempt {
    pub symbol: String,
    pub tuple: Vec<f64>,
    pub margin: f64,
    pub representable: bool,
}

/// `sum_x Pr[X = x] P(E_v | fixed, X = x)` against `P(E_v | fixed)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityTerm {
    pub event: u64,
    pub averaged: BigRational,
    pub before: BigRational,
}

impl IdentityTerm {
    pub fn holds(&self) -> bool {
        self.averaged == self.before
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixStep {
    pub variable: u64,
    pub symbol: String,
    pub symbol_index: usize,
    /// Event ids of the hyperedge, in witness index order.
    pub endpoints: Vec<u64>,
    pub tuple: Tuple,
    pub witness: Generator,
    /// Whether the witness needed the relative slack fallback.
    pub relaxed: bool,
    pub attempts: Vec<Attempt>,
    pub identity: Vec<IdentityTerm>,
}

impl FixStep {
    pub fn identity_holds(&self) -> bool {
        self.identity.iter().all(IdentityTerm::holds)
    }
}

/// No domain value of a variable has a representable requirement tuple.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremViolation {
    pub variable: u64,
    pub endpoints: Vec<u64>,
    pub fixed_so_far: usize,
    pub attempts: Vec<Attempt>,
}

impl fmt::Display for TheoremViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "no value of variable {} keeps P* (endpoints {:?}, {} variables fixed before);",
            self.variable, self.endpoints, self.fixed_so_far
        )?;
        for a in &self.attempts {
            write!(f, " {} -> {:?} (margin {:.3e});", a.symbol, a.tuple, a.margin)?;
        }
        Ok(())
    }
}

fn check_unfixed(inst: &LllInstance, state: &PStarState, x: usize) -> Result<(), LllError> {
    if x >= inst.variables.len() {
        return Err(LllError::InvalidInput(format!("variable index {x} out of range")));
    }
    if state.fixed[x].is_some() {
        return Err(LllError::InvalidInput(format!(
            "variable {} is already fixed",
            inst.variables[x].id
        )));
    }
    Ok(())
}

/// Requirement tuple of setting variable `x` (index) to symbol `s` (index).
///
/// Coordinate `v` is `P(E_v | fixed, X = s) / (p * prod_{non-skeleton e at
/// v} phi_e^v) / 2^(r - 1)`. Coordinates may exceed 1.
pub fn requirement_tuple(inst: &LllInstance, state: &PStarState, x: usize, s: usize) -> Result<Tuple, LllError> {
    check_unfixed(inst, state, x)?;
    if s >= inst.variables[x].len() {
        return Err(LllError::InvalidInput(format!("symbol index {s} out of range")));
    }
    let conditionals = conditionals_given(inst, state, x, s);
    scaled_tuple(inst, state, x, &conditionals)
}

fn conditionals_given(inst: &LllInstance, state: &PStarState, x: usize, s: usize) -> Vec<BigRational> {
    let mut fixed = state.fixed.clone();
    fixed[x] = Some(s);
    inst.graph.hyperedges[x]
        .iter()
        .map(|&v| inst.conditional_probability(v, &fixed))
        .collect()
}

fn scaled_tuple(
    inst: &LllInstance,
    state: &PStarState,
    x: usize,
    conditionals: &[BigRational],
) -> Result<Tuple, LllError> {
    let ends = &inst.graph.hyperedges[x];
    let r = ends.len();
    let scale = 2f64.powi(r as i32 - 1);
    let mut coords = Vec::with_capacity(r);
    for (&v, q) in ends.iter().zip(conditionals) {
        if q.is_zero() {
            coords.push(0.0);
            continue;
        }
        let mut outside = 1.0;
        for &e in &inst.graph.incident[v] {
            let (a, b) = inst.graph.edges[e];
            let other = if a == v { b } else { a };
            if ends.binary_search(&other).is_err() {
                outside *= state.phi_at(inst, e, v);
            }
        }
        if inst.p.is_zero() || outside == 0.0 {
            return Err(LllError::InvariantCorruption(format!(
                "event {} has conditional probability {q} but bound p * prod phi = 0",
                inst.events[v].id
            )));
        }
        coords.push(to_f64(&(q / &inst.p)) / outside / scale);
    }
    Ok(Tuple::new(coords)?)
}

/// The generator currently written on `x`'s skeleton: `a_ij = phi_e^{v_i} / 2`.
fn skeleton_generator(inst: &LllInstance, state: &PStarState, x: usize) -> Option<Generator> {
    let ends = &inst.graph.hyperedges[x];
    let r = ends.len();
    Generator::from_fn(r, |i, j| {
        let e = inst.graph.edge_index(ends[i], ends[j]).expect("skeleton edge exists");
        state.phi_at(inst, e, ends[i]) / 2.0
    })
    .ok()
}

fn dominates_exactly(g: &Generator, t: &Tuple) -> bool {
    g.generate().coords().iter().zip(t.coords()).all(|(a, b)| a >= b)
}

fn dominates_relaxed(g: &Generator, t: &Tuple) -> bool {
    g.generate()
        .coords()
        .iter()
        .zip(t.coords())
        .all(|(a, b)| *a >= b * (1.0 - DOMINATION_REL_SLACK))
}

/// Candidate witnesses for `t`, best first; `None` when the oracle rejects
/// `t` and the current skeleton does not cover it either.
fn find_witness(
    t: &Tuple,
    tol: f64,
    skeleton: Option<Generator>,
) -> Result<(f64, bool, Option<(Generator, bool)>), LllError> {
    let res = is_representable(t, tol)?;
    let mut candidates = Vec::new();
    if let Some(w) = res.witness {
        candidates.push(w);
        let inflated: Vec<f64> = t
            .coords()
            .iter()
            .map(|&c| if c > 0.0 { c + INFLATE } else { c })
            .collect();
        if let Some(w) = is_representable(&Tuple::new(inflated)?, tol)?.witness {
            candidates.push(w);
        }
    }
    candidates.extend(skeleton);
    let chosen = candidates
        .iter()
        .find(|g| dominates_exactly(g, t))
        .map(|g| (g.clone(), false))
        .or_else(|| {
            candidates
                .iter()
                .find(|g| dominates_relaxed(g, t))
                .map(|g| (g.clone(), true))
        });
    let member = res.member || chosen.is_some();
    Ok((res.margin, member, chosen))
}

/// Fixes variable `x` (index) to the first domain value, in declared order,
/// whose requirement tuple has a dominating witness, and rewrites `phi` on
/// the skeleton from that witness.
pub fn fix_variable(inst: &LllInstance, state: &mut PStarState, x: usize, tol: Option<f64>) -> Result<FixStep, LllError> {
    check_unfixed(inst, state, x)?;
    let var = &inst.variables[x];
    let ends = inst.graph.hyperedges[x].clone();
    let tol = tol.unwrap_or_else(|| default_tol(ends.len()));

    let per_symbol: Vec<Vec<BigRational>> = (0..var.len())
        .map(|s| conditionals_given(inst, state, x, s))
        .collect();
    let identity: Vec<IdentityTerm> = ends
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let averaged = per_symbol
                .iter()
                .enumerate()
                .map(|(s, qs)| var.probability(s) * &qs[k])
                .fold(BigRational::zero(), |acc, t| acc + t);
            IdentityTerm { event: inst.events[v].id, averaged, before: state.conditional(v).clone() }
        })
        .collect();

    let skeleton = skeleton_generator(inst, state, x);
    let mut attempts = Vec::new();
    for (s, conditionals) in per_symbol.iter().enumerate() {
        let t = scaled_tuple(inst, state, x, conditionals)?;
        let (margin, member, chosen) = find_witness(&t, tol, skeleton.clone())?;
        attempts.push(Attempt {
            symbol: var.domain[s].clone(),
            tuple: t.coords().to_vec(),
            margin,
            representable: member,
        });
        let Some((witness, relaxed)) = chosen else { continue };

        for (i, &u) in ends.iter().enumerate() {
            for (j, &v) in ends.iter().enumerate() {
                if i != j {
                    let e = inst.graph.edge_index(u, v).expect("skeleton edge exists");
                    state.set_phi(inst, e, u, 2.0 * witness.a(i, j));
                }
            }
        }
        state.fix_with(inst, x, s, conditionals);
        return Ok(FixStep {
            variable: var.id,
            symbol: var.domain[s].clone(),
            symbol_index: s,
            endpoints: ends.iter().map(|&v| inst.events[v].id).collect(),
            tuple: t,
            witness,
            relaxed,
            attempts,
            identity,
        });
    }
    Err(LllError::TheoremViolation(Box::new(TheoremViolation {
        variable: var.id,
        endpoints: ends.iter().map(|&v| inst.events[v].id).collect(),
        fixed_so_far: state.fixed.iter().filter(|f| f.is_some()).count(),
        attempts,
    })))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequentialRun {
    /// Symbol index per variable.
    pub assignment: Vec<usize>,
    pub steps: Vec<FixStep>,
    /// Smallest P* slack seen after any step (`+inf` when unchecked).
    pub min_pstar_slack: f64,
    pub state: PStarState,
}

/// Variable indices in id order.
pub fn forward_order(inst: &LllInstance) -> Vec<usize> {
    (0..inst.variables.len()).collect()
}

pub fn reversed_order(inst: &LllInstance) -> Vec<usize> {
    (0..inst.variables.len()).rev().collect()
}

/// Fixes every variable in `order` (a permutation of variable indices).
pub fn run_sequential(inst: &LllInstance, order: &[usize], opts: &FixOptions) -> Result<SequentialRun, LllError> {
    let n = inst.variables.len();
    let mut seen = vec![false; n];
    if order.len() != n || order.iter().any(|&x| x >= n || std::mem::replace(&mut seen[x], true)) {
        return Err(LllError::InvalidInput(format!(
            "order must be a permutation of the {n} variable indices"
        )));
    }
    let mut state = PStarState::new(inst);
    let mut steps = Vec::with_capacity(n);
    let mut min_pstar_slack = f64::INFINITY;
    for &x in order {
        let step = fix_variable(inst, &mut state, x, opts.tol)?;
        if opts.check_each_step {
            let report = check_pstar(inst, &state);
            min_pstar_slack = min_pstar_slack.min(report.min_slack());
            if !report.pass {
                return Err(LllError::PStarViolated {
                    variable: step.variable,
                    detail: format!("{:?} failed (edge slack {:.3e}, probability slack {:.3e})",
                        report.failed, report.edge_slack, report.probability_slack),
                });
            }
        }
        steps.push(step);
    }
    let assignment = state.assignment().expect("every variable was fixed");
    Ok(SequentialRun { assignment, steps, min_pstar_slack, state })
}
