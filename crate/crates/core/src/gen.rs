//! Seeded random instance families satisfying `p * 2^d < 1`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::lll::{LllError, LllInstance, Meta, RawEvent, Variable};

/// Largest allowed `p * 2^d` for generated instances.
pub const CRITERION_TARGET: f64 = 0.95;
const MAX_RETRIES: u64 = 16;
const MAX_OCCURRING: usize = 64;
const WEIGHT_MAX: u64 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Variables of random rank shared by random events.
    SharedVariableRandom,
    /// Binary uniform variables; each event forbids one literal pattern.
    KSatLike,
    /// Stars whose center shares a variable with groups of its leaves.
    StarHyperedge,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::SharedVariableRandom, Family::KSatLike, Family::StarHyperedge];

    pub fn name(self) -> &'static str {
        match self {
            Family::SharedVariableRandom => "shared-variable-random",
            Family::KSatLike => "k-sat-like",
            Family::StarHyperedge => "star-hyperedge",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown family {s:?}; expected one of shared-variable-random, k-sat-like, star-hyperedge"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenSpec {
    pub family: Family,
    /// Number of events.
    pub n: usize,
    pub max_rank: usize,
    pub max_domain: usize,
    /// Cap on the dependency degree.
    pub target_d: usize,
    pub seed: u64,
    /// Store random distinct LOCAL identifiers in the metadata.
    pub random_ids: bool,
}

impl GenSpec {
    pub fn new(family: Family, n: usize, seed: u64) -> Self {
        Self { family, n, max_rank: 3, max_domain: 4, target_d: 4, seed, random_ids: false }
    }

    fn validate(&self) -> Result<(), LllError> {
        let bad = |m: &str| Err(LllError::Generation(m.to_string()));
        if self.n == 0 {
            return bad("n must be at least 1");
        }
        if self.max_rank == 0 {
            return bad("max rank must be at least 1");
        }
        if self.max_domain < 2 {
            return bad("max domain size must be at least 2");
        }
        if self.target_d > 30 {
            return bad("target d above 30 leaves no room for events of positive probability");
        }
        Ok(())
    }
}

/// Generates an instance for `spec`, retrying with derived seeds when the
/// criterion fails.
pub fn generate_instance(spec: &GenSpec) -> Result<LllInstance, LllError> {
    spec.validate()?;
    for attempt in 0..MAX_RETRIES {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(attempt);
        let inst = build(spec, &mut rng)?;
        let crit = inst.check_criterion();
        if crit.pass && crit.value.to_f64().is_some_and(|v| v <= CRITERION_TARGET) {
            return Ok(inst);
        }
    }
    Err(LllError::Generation(format!(
        "no instance satisfying the criterion after {MAX_RETRIES} attempts; lower target d or max rank"
    )))
}

struct Draft {
    /// Event indices per variable.
    hyperedges: Vec<Vec<usize>>,
    adj: Vec<BTreeSet<usize>>,
    cap: usize,
}

impl Draft {
    fn new(n: usize, cap: usize) -> Self {
        Self { hyperedges: Vec::new(), adj: vec![BTreeSet::new(); n], cap }
    }

    /// Adds a variable on `ends` unless some degree would exceed the cap.
    fn try_add(&mut self, ends: &[usize]) -> bool {
        for &u in ends {
            let extra = ends.iter().filter(|&&v| v != u && !self.adj[u].contains(&v)).count();
            if self.adj[u].len() + extra > self.cap {
                return false;
            }
        }
        for &u in ends {
            for &v in ends {
                if u != v {
                    self.adj[u].insert(v);
                }
            }
        }
        let mut ends = ends.to_vec();
        ends.sort_unstable();
        self.hyperedges.push(ends);
        true
    }

    fn cover_isolated(&mut self, n: usize) {
        let mut used = vec![false; n];
        for h in &self.hyperedges {
            for &v in h {
                used[v] = true;
            }
        }
        for v in (0..n).filter(|&v| !used[v]) {
            self.hyperedges.push(vec![v]);
        }
    }
}

fn build(spec: &GenSpec, rng: &mut ChaCha8Rng) -> Result<LllInstance, LllError> {
    let n = spec.n;
    let mut draft = Draft::new(n, spec.target_d);
    match spec.family {
        Family::SharedVariableRandom => shared_random(spec, rng, &mut draft),
        Family::KSatLike => k_sat_skeleton(spec, rng, &mut draft),
        Family::StarHyperedge => stars(spec, rng, &mut draft),
    }
    draft.cover_isolated(n);

    let binary = spec.family == Family::KSatLike;
    let variables: Vec<Variable> = draft
        .hyperedges
        .iter()
        .enumerate()
        .map(|(id, _)| {
            if binary {
                uniform_binary(id as u64)
            } else {
                random_variable(id as u64, spec.max_domain, rng)
            }
        })
        .collect();
    let mut vbl: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (x, h) in draft.hyperedges.iter().enumerate() {
        for &v in h {
            vbl[v].push(x);
        }
    }

    let p_max = BigRational::new(
        BigInt::from(95),
        BigInt::from(100) * (BigInt::from(1) << spec.target_d),
    );
    let events = vbl
        .iter()
        .enumerate()
        .map(|(v, xs)| {
            let occurring = if binary {
                forbidden_pattern(xs, &variables, &p_max, rng)
            } else {
                greedy_occurring(xs, &variables, &p_max, rng)
            };
            RawEvent::new(v as u64, xs.iter().map(|&x| x as u64).collect(), occurring)
        })
        .collect();

    let mut meta = Meta {
        seed: Some(spec.seed),
        family: Some(spec.family.name().to_string()),
        ..Meta::default()
    };
    if spec.random_ids {
        let mut ids = BTreeSet::new();
        while ids.len() < n {
            ids.insert(rng.gen_range(0..1u64 << 32));
        }
        let mut ids: Vec<u64> = ids.into_iter().collect();
        ids.shuffle(rng);
        meta.ids = Some(ids);
    }
    let mut inst = LllInstance::new(variables, events, meta)?;
    inst.meta.p = Some(inst.p.clone());
    inst.meta.d = Some(inst.graph.d);
    Ok(inst)
}

fn shared_random(spec: &GenSpec, rng: &mut ChaCha8Rng, draft: &mut Draft) {
    let n = spec.n;
    if spec.max_rank >= 2 && n >= 2 {
        for _ in 0..n * spec.max_rank {
            if rng.gen_bool(0.2) && !draft.hyperedges.is_empty() {
                let h = draft.hyperedges[rng.gen_range(0..draft.hyperedges.len())].clone();
                draft.try_add(&h);
                continue;
            }
            let r = rng.gen_range(2..=spec.max_rank.min(n));
            let ends = rand::seq::index::sample(rng, n, r).into_vec();
            draft.try_add(&ends);
        }
    }
    for v in 0..n {
        if rng.gen_bool(0.3) {
            draft.try_add(&[v]);
        }
    }
}

/// Hyperedges of rank up to `max_rank`; events are then padded with private
/// variables so every clause has width `target_d + 1`.
fn k_sat_skeleton(spec: &GenSpec, rng: &mut ChaCha8Rng, draft: &mut Draft) {
    let n = spec.n;
    let width = spec.target_d + 1;
    let mut count = vec![0usize; n];
    if spec.max_rank >= 2 && n >= 2 {
        for _ in 0..n * spec.max_rank {
            let r = rng.gen_range(2..=spec.max_rank.min(n));
            let ends = rand::seq::index::sample(rng, n, r).into_vec();
            if ends.iter().any(|&v| count[v] >= width) {
                continue;
            }
            if draft.try_add(&ends) {
                for &v in &ends {
                    count[v] += 1;
                }
            }
        }
    }
    for v in 0..n {
        for _ in count[v]..width {
            draft.try_add(&[v]);
        }
    }
}

fn stars(spec: &GenSpec, rng: &mut ChaCha8Rng, draft: &mut Draft) {
    let n = spec.n;
    let leaves_per_star = spec.target_d.max(1);
    let mut start = 0;
    while start < n {
        let size = (leaves_per_star + 1).min(n - start);
        let center = start;
        let leaves: Vec<usize> = (start + 1..start + size).collect();
        let group = spec.max_rank.saturating_sub(1).max(1);
        if spec.max_rank >= 2 {
            let mut order = leaves.clone();
            order.shuffle(rng);
            for chunk in order.chunks(group) {
                let mut ends = vec![center];
                ends.extend_from_slice(chunk);
                draft.try_add(&ends);
            }
            if leaves.len() >= 2 && rng.gen_bool(0.5) {
                let k = rng.gen_range(1..=group.min(leaves.len()));
                let mut ends = vec![center];
                ends.extend(rand::seq::index::sample(rng, leaves.len(), k).into_iter().map(|i| leaves[i]));
                draft.try_add(&ends);
            }
        }
        draft.try_add(&[center]);
        start += size;
    }
}

fn uniform_binary(id: u64) -> Variable {
    let half = BigRational::new(1.into(), 2.into());
    Variable::new(id, vec!["0".into(), "1".into()], vec![half.clone(), half])
        .expect("uniform binary distribution is valid")
}

fn random_variable(id: u64, max_domain: usize, rng: &mut ChaCha8Rng) -> Variable {
    let k = rng.gen_range(2..=max_domain);
    let weights: Vec<u64> = (0..k).map(|_| rng.gen_range(1..=WEIGHT_MAX)).collect();
    let total: u64 = weights.iter().sum();
    let probs = weights
        .iter()
        .map(|&w| BigRational::new(BigInt::from(w), BigInt::from(total)))
        .collect();
    Variable::new(id, (0..k).map(|s| format!("s{s}")).collect(), probs)
        .expect("normalized positive weights form a distribution")
}

fn probability_of(row: &[usize], xs: &[usize], variables: &[Variable]) -> BigRational {
    row.iter()
        .zip(xs)
        .map(|(&s, &x)| variables[x].probability(s))
        .product()
}

/// Random assignments added while the event probability stays within `p_max`.
fn greedy_occurring(
    xs: &[usize],
    variables: &[Variable],
    p_max: &BigRational,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<String>> {
    let mut chosen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut total = BigRational::zero();
    for _ in 0..4 * MAX_OCCURRING {
        if chosen.len() >= MAX_OCCURRING {
            break;
        }
        let row: Vec<usize> = xs.iter().map(|&x| rng.gen_range(0..variables[x].len())).collect();
        if chosen.contains(&row) {
            continue;
        }
        let q = probability_of(&row, xs, variables);
        if &total + &q <= *p_max {
            total += q;
            chosen.insert(row);
        }
    }
    to_symbols(chosen, xs, variables)
}

/// One forbidden literal pattern, kept only if its probability fits.
fn forbidden_pattern(
    xs: &[usize],
    variables: &[Variable],
    p_max: &BigRational,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<String>> {
    let row: Vec<usize> = xs.iter().map(|&x| rng.gen_range(0..variables[x].len())).collect();
    let mut chosen = BTreeSet::new();
    if probability_of(&row, xs, variables) <= *p_max {
        chosen.insert(row);
    }
    to_symbols(chosen, xs, variables)
}

fn to_symbols(rows: BTreeSet<Vec<usize>>, xs: &[usize], variables: &[Variable]) -> Vec<Vec<String>> {
    rows.into_iter()
        .map(|row| {
            row.iter()
                .zip(xs)
                .map(|(&s, &x)| variables[x].domain[s].clone())
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lll::{instance_from_json, instance_to_json};

    #[test]
    fn every_family_satisfies_the_criterion() {
        for family in Family::ALL {
            for seed in 0..5 {
                let mut spec = GenSpec::new(family, 60, seed);
                spec.max_rank = 4;
                spec.target_d = 6;
                let inst = generate_instance(&spec).unwrap();
                let crit = inst.check_criterion();
                assert!(crit.pass, "{family} seed {seed}: {}", crit.value);
                assert!(inst.graph.d <= 6);
                assert!(inst.graph.hyperedges.iter().all(|h| !h.is_empty() && h.len() <= 4));
                assert!(inst.variables.iter().all(|v| v.len() <= 4));
            }
        }
    }

    #[test]
    fn same_seed_same_file() {
        let spec = GenSpec::new(Family::SharedVariableRandom, 40, 7);
        let a = instance_to_json(&generate_instance(&spec).unwrap());
        let b = instance_to_json(&generate_instance(&spec).unwrap());
        assert_eq!(a, b);
        assert_eq!(instance_to_json(&instance_from_json(&a).unwrap()), a);
    }

    #[test]
    fn k_sat_clauses_have_fixed_width() {
        let mut spec = GenSpec::new(Family::KSatLike, 30, 1);
        spec.max_rank = 2;
        spec.target_d = 3;
        let inst = generate_instance(&spec).unwrap();
        assert!(inst.events.iter().all(|e| e.vbl.len() == 4));
        assert_eq!(inst.p, BigRational::new(1.into(), 16.into()));
        assert!(inst.graph.d <= 3);
    }

    #[test]
    fn single_event_rank_one() {
        let mut spec = GenSpec::new(Family::SharedVariableRandom, 1, 0);
        spec.max_rank = 1;
        let inst = generate_instance(&spec).unwrap();
        assert_eq!(inst.events.len(), 1);
        assert!(inst.check_criterion().pass);
    }

    #[test]
    fn random_ids_are_distinct() {
        let mut spec = GenSpec::new(Family::StarHyperedge, 25, 3);
        spec.random_ids = true;
        let inst = generate_instance(&spec).unwrap();
        let ids = inst.meta.ids.clone().unwrap();
        assert_eq!(ids.iter().collect::<BTreeSet<_>>().len(), 25);
    }

    #[test]
    fn family_names_parse() {
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
        }
        assert!("bogus".parse::<Family>().is_err());
    }
}
