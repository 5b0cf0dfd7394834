use std::collections::BTreeSet;

use serde::Serialize;

use super::coloring::{two_hop_coloring, Coloring};
use crate::lll::{check_pstar, fix_variable, FixOptions, FixStep, LllError, LllInstance, PStarState};

/// Simulated rounds per color class: collect views, fix, write back.
pub const ROUNDS_PER_COLOR: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundLog {
    pub coloring_rounds: usize,
    pub linial_steps: usize,
    pub reduction_rounds: usize,
    pub fixing_rounds: usize,
    /// Palette size of the coloring.
    pub colors_used: usize,
    /// Colors actually assigned to some node.
    pub distinct_colors: usize,
    /// Messages sent in each round, coloring rounds first.
    pub messages: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalRun {
    /// Symbol index per variable.
    pub assignment: Vec<usize>,
    pub log: RoundLog,
    pub coloring: Coloring,
    /// Fix steps in execution order.
    pub steps: Vec<FixStep>,
    pub min_pstar_slack: f64,
}

/// Edges and variables a node reads or writes while fixing `vars`.
#[derive(Debug, Clone, Default, PartialEq)]
struct Footprint {
    read_edges: BTreeSet<usize>,
    read_vars: BTreeSet<usize>,
    write_edges: BTreeSet<usize>,
    write_vars: BTreeSet<usize>,
}

impl Footprint {
    fn of(inst: &LllInstance, vars: &[usize]) -> Self {
        let g = &inst.graph;
        let mut fp = Footprint::default();
        for &x in vars {
            fp.write_vars.insert(x);
            fp.write_edges.extend(g.skeleton(x));
            for &w in &g.hyperedges[x] {
                fp.read_edges.extend(g.incident[w].iter().copied());
                fp.read_vars.extend(inst.events[w].vbl.iter().copied());
            }
        }
        fp
    }

    /// Whether `self`'s writes touch anything `other` reads or writes.
    fn interferes(&self, other: &Footprint) -> bool {
        let hits = |a: &BTreeSet<usize>, b: &BTreeSet<usize>| !a.is_disjoint(b);
        hits(&self.write_edges, &other.read_edges)
            || hits(&self.write_edges, &other.write_edges)
            || hits(&self.write_vars, &other.read_vars)
            || hits(&self.write_vars, &other.write_vars)
    }
}

fn incident_variables(inst: &LllInstance, v: usize) -> Vec<usize> {
    let mut xs = inst.events[v].vbl.clone();
    xs.sort_unstable();
    xs
}

fn class_conflict(inst: &LllInstance, class: &[usize], vars_of: impl Fn(usize) -> Vec<usize>) -> Option<(usize, usize)> {
    let fps: Vec<Footprint> = class.iter().map(|&v| Footprint::of(inst, &vars_of(v))).collect();
    for a in 0..fps.len() {
        for b in 0..fps.len() {
            if a != b && fps[a].interferes(&fps[b]) {
                return Some((class[a], class[b]));
            }
        }
    }
    None
}

/// True iff, in every class, no node writes a `phi` value or variable that
/// another node of the same class reads or writes. Every incident variable
/// counts as unfixed.
pub fn isolation_check(inst: &LllInstance, classes: &[Vec<usize>]) -> bool {
    classes
        .iter()
        .all(|class| class_conflict(inst, class, |v| incident_variables(inst, v)).is_none())
}

/// Algorithm A in the LOCAL model: 2-hop coloring, then every color class
/// fixes its nodes' unfixed incident variables in parallel.
///
/// Nodes of one class run in identifier order; the isolation check ensures
/// this equals a parallel execution.
pub fn run_local(inst: &LllInstance, ids: &[u64], opts: &FixOptions) -> Result<LocalRun, LllError> {
    let n = inst.events.len();
    if ids.len() != n {
        return Err(LllError::InvalidInput(format!("{} identifiers for {n} events", ids.len())));
    }
    if ids.iter().collect::<BTreeSet<_>>().len() != n {
        return Err(LllError::InvalidInput("identifiers are not distinct".into()));
    }
    let adj = &inst.graph.neighbors;
    let coloring = two_hop_coloring(adj, ids);
    let square_messages: usize = super::coloring::square_graph(adj).iter().map(Vec::len).sum();
    let mut messages = vec![square_messages; coloring.rounds];

    let mut state = PStarState::new(inst);
    let mut steps = Vec::new();
    let mut min_pstar_slack = f64::INFINITY;
    for class in coloring.classes(ids) {
        let unfixed_of = |v: usize, state: &PStarState| -> Vec<usize> {
            incident_variables(inst, v)
                .into_iter()
                .filter(|&x| state.fixed[x].is_none())
                .collect()
        };
        if let Some((a, b)) = class_conflict(inst, &class, |v| unfixed_of(v, &state)) {
            return Err(LllError::IsolationViolation(format!(
                "events {} and {} share color {} but their fixing footprints overlap",
                inst.events[a].id, inst.events[b].id, coloring.colors[a]
            )));
        }
        let view: usize = class.iter().map(|&v| inst.graph.degree(v)).sum();
        messages.extend([view, 0, view]);
        let work: Vec<(usize, Vec<usize>)> = class.iter().map(|&v| (v, unfixed_of(v, &state))).collect();
        for (_, vars) in work {
            for x in vars {
                let step = fix_variable(inst, &mut state, x, opts.tol)?;
                if opts.check_each_step {
                    let report = check_pstar(inst, &state);
                    min_pstar_slack = min_pstar_slack.min(report.min_slack());
                    if !report.pass {
                        return Err(LllError::PStarViolated {
                            variable: step.variable,
                            detail: format!("{:?} failed", report.failed),
                        });
                    }
                }
                steps.push(step);
            }
        }
    }
    let assignment = state
        .assignment()
        .ok_or_else(|| LllError::InvariantCorruption("a variable was left unfixed".into()))?;
    let log = RoundLog {
        coloring_rounds: coloring.rounds,
        linial_steps: coloring.linial_steps,
        reduction_rounds: coloring.reduction_rounds,
        fixing_rounds: ROUNDS_PER_COLOR * coloring.palette,
        colors_used: coloring.palette,
        distinct_colors: coloring.distinct_colors(),
        messages,
    };
    Ok(LocalRun { assignment, log, coloring, steps, min_pstar_slack })
}
