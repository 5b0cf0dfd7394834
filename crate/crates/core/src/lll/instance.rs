use std::collections::{BTreeMap, BTreeSet};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::LllError;

/// A finite random variable with an exact distribution.
///
/// Probabilities are kept as integer weights over a common denominator, so
/// conditional probabilities reduce to integer sums.
#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub id: u64,
    pub domain: Vec<String>,
    weights: Vec<u64>,
    total: u64,
    /// Zero-probability symbols removed at construction.
    stripped: Vec<String>,
}

impl Variable {
    /// Builds a variable, dropping zero-probability symbols. The
    /// probabilities must be non-negative and sum to exactly 1.
    pub fn new(id: u64, domain: Vec<String>, probabilities: Vec<BigRational>) -> Result<Self, LllError> {
        if domain.len() != probabilities.len() {
            return Err(LllError::InvalidInstance(format!(
                "variable {id}: {} symbols but {} probabilities",
                domain.len(),
                probabilities.len()
            )));
        }
        let distinct: BTreeSet<&String> = domain.iter().collect();
        if distinct.len() != domain.len() {
            return Err(LllError::InvalidInstance(format!("variable {id}: duplicate domain symbol")));
        }
        if let Some(neg) = probabilities.iter().find(|q| q.is_negative()) {
            return Err(LllError::InvalidInstance(format!(
                "variable {id}: negative probability {neg}"
            )));
        }
        let sum: BigRational = probabilities.iter().sum();
        if !sum.is_one() {
            return Err(LllError::InvalidInstance(format!(
                "variable {id}: probabilities sum to {sum}, not 1"
            )));
        }
        let lcm = probabilities
            .iter()
            .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
        let total = lcm.to_u64().ok_or_else(|| {
            LllError::InvalidInstance(format!("variable {id}: common denominator {lcm} is too large"))
        })?;
        let mut kept_domain = Vec::new();
        let mut weights = Vec::new();
        let mut stripped = Vec::new();
        for (sym, q) in domain.into_iter().zip(&probabilities) {
            if q.is_zero() {
                stripped.push(sym);
                continue;
            }
            let w = (q.numer() * (&lcm / q.denom()))
                .to_u64()
                .expect("weight is bounded by the common denominator");
            kept_domain.push(sym);
            weights.push(w);
        }
        Ok(Self { id, domain: kept_domain, weights, total, stripped })
    }

    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }

    pub fn probability(&self, symbol: usize) -> BigRational {
        BigRational::new(BigInt::from(self.weights[symbol]), BigInt::from(self.total))
    }

    pub fn probabilities(&self) -> Vec<BigRational> {
        (0..self.len()).map(|s| self.probability(s)).collect()
    }

    pub fn symbol_index(&self, symbol: &str) -> Option<usize> {
        self.domain.iter().position(|s| s == symbol)
    }

    /// Whether `symbol` was declared with probability zero.
    pub fn was_stripped(&self, symbol: &str) -> bool {
        self.stripped.iter().any(|s| s == symbol)
    }

    pub(crate) fn weight(&self, symbol: usize) -> u64 {
        self.weights[symbol]
    }

    pub(crate) fn total(&self) -> u64 {
        self.total
    }
}

/// An event over an ordered list of variables, given by the explicit set of
/// assignments (symbol indices aligned with `vbl`) on which it occurs.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub id: u64,
    /// Variable indices (positions in [`LllInstance::variables`]).
    pub vbl: Vec<usize>,
    pub occurring: Vec<Vec<usize>>,
}

impl Event {
    pub fn occurs_on(&self, assignment: &[usize]) -> bool {
        let local: Vec<usize> = self.vbl.iter().map(|&x| assignment[x]).collect();
        self.occurring.binary_search(&local).is_ok()
    }
}

/// Variable values fixed so far, by variable index.
pub type PartialAssignment = Vec<Option<usize>>;

/// Dependency graph on events plus one hyperedge per variable.
#[derive(Debug, Clone, PartialEq)]
pub struct DependencyGraph {
    /// Event index pairs `(u, v)` with `u < v`, sorted.
    pub edges: Vec<(usize, usize)>,
    edge_lookup: BTreeMap<(usize, usize), usize>,
    /// Edge indices incident to each event.
    pub incident: Vec<Vec<usize>>,
    /// Neighbor event indices, sorted.
    pub neighbors: Vec<Vec<usize>>,
    /// Event indices depending on each variable, sorted.
    pub hyperedges: Vec<Vec<usize>>,
    /// Maximum degree.
    pub d: usize,
}

impl DependencyGraph {
    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        let key = if u < v { (u, v) } else { (v, u) };
        self.edge_lookup.get(&key).copied()
    }

    /// Which side of edge `e` belongs to node `v` (0 for the smaller index).
    pub fn side(&self, e: usize, v: usize) -> usize {
        usize::from(self.edges[e].0 != v)
    }

    /// Dependency edges among the endpoints of a variable's hyperedge.
    pub fn skeleton(&self, var: usize) -> Vec<usize> {
        let ends = &self.hyperedges[var];
        let mut out = Vec::new();
        for (a, &u) in ends.iter().enumerate() {
            for &v in &ends[a + 1..] {
                out.push(self.edge_index(u, v).expect("hyperedge endpoints are adjacent"));
            }
        }
        out
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors[v].len()
    }
}

/// Declared metadata carried by instance files.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Meta {
    pub seed: Option<u64>,
    pub family: Option<String>,
    pub p: Option<BigRational>,
    pub d: Option<usize>,
    /// LOCAL-model identifiers, one per event in id order.
    pub ids: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionCheck {
    pub p: BigRational,
    pub d: usize,
    /// `p * 2^d`.
    pub value: BigRational,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LllInstance {
    pub variables: Vec<Variable>,
    pub events: Vec<Event>,
    pub graph: DependencyGraph,
    /// Occurrence probability of each event.
    pub event_probability: Vec<BigRational>,
    pub p: BigRational,
    pub meta: Meta,
}

impl LllInstance {
    /// Validates and indexes an instance. Events and variables are sorted by
    /// id; occurrence lists are sorted and deduplicated.
    pub fn new(mut variables: Vec<Variable>, mut events: Vec<RawEvent>, meta: Meta) -> Result<Self, LllError> {
        variables.sort_by_key(|v| v.id);
        if variables.windows(2).any(|w| w[0].id == w[1].id) {
            return Err(LllError::InvalidInstance("duplicate variable id".into()));
        }
        if let Some(v) = variables.iter().find(|v| v.is_empty()) {
            return Err(LllError::InvalidInstance(format!("variable {} has an empty domain", v.id)));
        }
        events.sort_by_key(|e| e.id);
        if events.windows(2).any(|w| w[0].id == w[1].id) {
            return Err(LllError::InvalidInstance("duplicate event id".into()));
        }
        let var_pos: BTreeMap<u64, usize> =
            variables.iter().enumerate().map(|(i, v)| (v.id, i)).collect();

        let mut indexed = Vec::with_capacity(events.len());
        for raw in events {
            let mut vbl = Vec::with_capacity(raw.vbl.len());
            for id in &raw.vbl {
                let idx = *var_pos.get(id).ok_or_else(|| {
                    LllError::InvalidInstance(format!("event {} uses unknown variable {id}", raw.id))
                })?;
                if vbl.contains(&idx) {
                    return Err(LllError::InvalidInstance(format!(
                        "event {} lists variable {id} twice",
                        raw.id
                    )));
                }
                vbl.push(idx);
            }
            let mut occurring = Vec::with_capacity(raw.occurring.len());
            'rows: for row in &raw.occurring {
                if row.len() != vbl.len() {
                    return Err(LllError::InvalidInstance(format!(
                        "event {}: occurring assignment {row:?} has {} entries for {} variables",
                        raw.id,
                        row.len(),
                        vbl.len()
                    )));
                }
                let mut local = Vec::with_capacity(row.len());
                for (sym, &x) in row.iter().zip(&vbl) {
                    match variables[x].symbol_index(sym) {
                        Some(s) => local.push(s),
                        None if variables[x].was_stripped(sym) => {
                            continue 'rows
                        }
                        None => {
                            return Err(LllError::InvalidInstance(format!(
                                "event {}: symbol {sym:?} is not in the domain of variable {}",
                                raw.id, variables[x].id
                            )))
                        }
                    }
                }
                occurring.push(local);
            }
            occurring.sort();
            occurring.dedup();
            indexed.push(Event { id: raw.id, vbl, occurring });
        }

        let graph = build_dependency_graph(variables.len(), &indexed);
        if let Some(x) = graph.hyperedges.iter().position(|h| h.is_empty()) {
            return Err(LllError::InvalidInstance(format!(
                "variable {} is not used by any event",
                variables[x].id
            )));
        }
        let event_probability: Vec<BigRational> = indexed
            .iter()
            .map(|e| conditional_probability_of(&variables, e, &vec![None; variables.len()]))
            .collect();
        if let Some(e) = indexed
            .iter()
            .zip(&event_probability)
            .find_map(|(e, q)| (e.vbl.is_empty() && !q.is_zero()).then_some(e))
        {
            return Err(LllError::InvalidInstance(format!(
                "event {} depends on no variable and always occurs",
                e.id
            )));
        }
        let p = event_probability.iter().cloned().max().unwrap_or_else(BigRational::zero);

        if let Some(ids) = &meta.ids {
            if ids.len() != indexed.len() {
                return Err(LllError::InvalidInstance(format!(
                    "meta.ids has {} entries for {} events",
                    ids.len(),
                    indexed.len()
                )));
            }
            let distinct: BTreeSet<&u64> = ids.iter().collect();
            if distinct.len() != ids.len() {
                return Err(LllError::InvalidInstance("meta.ids are not distinct".into()));
            }
        }
        if let Some(dp) = &meta.p {
            if *dp != p {
                return Err(LllError::MetaMismatch(format!("declared p = {dp}, recomputed {p}")));
            }
        }
        if let Some(dd) = meta.d {
            if dd != graph.d {
                return Err(LllError::MetaMismatch(format!("declared d = {dd}, recomputed {}", graph.d)));
            }
        }

        Ok(Self { variables, events: indexed, graph, event_probability, p, meta })
    }

    /// Exact check of `p * 2^d < 1`.
    pub fn check_criterion(&self) -> CriterionCheck {
        check_criterion(&self.p, self.graph.d)
    }

    pub fn conditional_probability(&self, event: usize, fixed: &[Option<usize>]) -> BigRational {
        conditional_probability_of(&self.variables, &self.events[event], fixed)
    }

    /// Default LOCAL identifiers: `meta.ids` when present, else `0..n`.
    pub fn ids(&self) -> Vec<u64> {
        self.meta
            .ids
            .clone()
            .unwrap_or_else(|| (0..self.events.len() as u64).collect())
    }

    pub fn variable_count(&self) -> usize {
        self.variables.len()
    }

    /// Ids of events that occur under a total assignment.
    pub fn verify_assignment(&self, assignment: &[Option<usize>]) -> Result<Vec<u64>, LllError> {
        if assignment.len() != self.variables.len() {
            return Err(LllError::PartialAssignment(format!(
                "{} values for {} variables",
                assignment.len(),
                self.variables.len()
            )));
        }
        let mut total = Vec::with_capacity(assignment.len());
        for (x, v) in assignment.iter().enumerate() {
            match v {
                Some(s) if *s < self.variables[x].len() => total.push(*s),
                Some(s) => {
                    return Err(LllError::PartialAssignment(format!(
                        "variable {}: symbol index {s} out of range",
                        self.variables[x].id
                    )))
                }
                None => {
                    return Err(LllError::PartialAssignment(format!(
                        "variable {} is unassigned",
                        self.variables[x].id
                    )))
                }
            }
        }
        Ok(self
            .events
            .iter()
            .filter(|e| e.occurs_on(&total))
            .map(|e| e.id)
            .collect())
    }
}

/// An event as read from a file: variable ids and symbol strings.
#[derive(Debug, Clone, PartialEq)]
pub struct RawEvent {
    pub id: u64,
    pub vbl: Vec<u64>,
    /// Rows mentioning zero-probability symbols are dropped.
    pub occurring: Vec<Vec<String>>,
}

impl RawEvent {
    pub fn new(id: u64, vbl: Vec<u64>, occurring: Vec<Vec<String>>) -> Self {
        Self { id, vbl, occurring }
    }
}

pub fn check_criterion(p: &BigRational, d: usize) -> CriterionCheck {
    let value = p * BigRational::from_integer(BigInt::one() << d);
    let pass = value < BigRational::one();
    CriterionCheck { p: p.clone(), d, value, pass }
}

/// Edges join events sharing a variable; the hyperedge of a variable lists
/// the events that depend on it.
pub fn build_dependency_graph(n_vars: usize, events: &[Event]) -> DependencyGraph {
    let n = events.len();
    let mut hyperedges = vec![Vec::new(); n_vars];
    for (v, e) in events.iter().enumerate() {
        for &x in &e.vbl {
            hyperedges[x].push(v);
        }
    }
    let mut pairs = BTreeSet::new();
    for h in &hyperedges {
        for (a, &u) in h.iter().enumerate() {
            for &v in &h[a + 1..] {
                pairs.insert((u.min(v), u.max(v)));
            }
        }
    }
    let edges: Vec<(usize, usize)> = pairs.into_iter().collect();
    let mut edge_lookup = BTreeMap::new();
    let mut incident = vec![Vec::new(); n];
    let mut neighbors = vec![Vec::new(); n];
    for (i, &(u, v)) in edges.iter().enumerate() {
        edge_lookup.insert((u, v), i);
        incident[u].push(i);
        incident[v].push(i);
        neighbors[u].push(v);
        neighbors[v].push(u);
    }
    for list in &mut neighbors {
        list.sort_unstable();
    }
    let d = neighbors.iter().map(Vec::len).max().unwrap_or(0);
    DependencyGraph { edges, edge_lookup, incident, neighbors, hyperedges, d }
}

/// `P(E | fixed)`: total probability of the occurring assignments that are
/// consistent with `fixed`, weighted by the unfixed variables only.
pub fn conditional_probability_of(
    variables: &[Variable],
    event: &Event,
    fixed: &[Option<usize>],
) -> BigRational {
    let free: Vec<usize> = (0..event.vbl.len())
        .filter(|&k| fixed[event.vbl[k]].is_none())
        .collect();
    let denom: BigUint = free
        .iter()
        .map(|&k| BigUint::from(variables[event.vbl[k]].total()))
        .product();
    let mut small: u128 = 0;
    let mut big = BigUint::zero();
    'rows: for row in &event.occurring {
        for (k, &x) in event.vbl.iter().enumerate() {
            if let Some(s) = fixed[x] {
                if row[k] != s {
                    continue 'rows;
                }
            }
        }
        let mut term: Option<u128> = Some(1);
        for &k in &free {
            let w = variables[event.vbl[k]].weight(row[k]) as u128;
            term = term.and_then(|t| t.checked_mul(w));
        }
        match term.and_then(|t| small.checked_add(t)) {
            Some(s) => small = s,
            None => {
                let t: BigUint = free
                    .iter()
                    .map(|&k| BigUint::from(variables[event.vbl[k]].weight(row[k])))
                    .product();
                big += t;
            }
        }
    }
    big += BigUint::from(small);
    BigRational::new(BigInt::from(big), BigInt::from(denom))
}

/// Lossy conversion used where floating point is intended.
pub fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}
