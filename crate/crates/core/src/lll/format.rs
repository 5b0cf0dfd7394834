//! Canonical JSON instance and assignment files.
//!
//! Keys are emitted in sorted order (struct fields are declared
//! alphabetically), rationals are reduced, variables and events are sorted by
//! id. Loading then writing a canonical file reproduces it byte for byte.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::instance::{LllInstance, Meta, RawEvent, Variable};
use super::LllError;

/// Variable id to symbol.
pub type Assignment = BTreeMap<u64, String>;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    events: Vec<EventFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<MetaFile>,
    variables: Vec<VariableFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventFile {
    id: u64,
    occurring: Vec<Vec<String>>,
    vbl: Vec<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VariableFile {
    domain: Vec<String>,
    id: u64,
    probabilities: Vec<String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetaFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ids: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

/// Parses `"n/d"` or `"n"`.
pub fn parse_rational(s: &str) -> Result<BigRational, LllError> {
    let bad = || LllError::Parse(format!("{s:?} is not a rational of the form \"num/den\""));
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let n: BigInt = n.parse().map_err(|_| bad())?;
    let d: BigInt = d.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(LllError::Parse(format!("{s:?} has a zero denominator")));
    }
    Ok(BigRational::new(n, d))
}

/// Reduced `"n/d"` with a positive denominator, always including `/d`.
pub fn format_rational(q: &BigRational) -> String {
    let q = q.reduced();
    let (n, d) = if q.denom().is_negative() {
        (-q.numer().clone(), -q.denom().clone())
    } else {
        (q.numer().clone(), q.denom().clone())
    };
    if d.is_one() {
        format!("{n}/1")
    } else {
        format!("{n}/{d}")
    }
}

pub fn instance_from_json(text: &str) -> Result<LllInstance, LllError> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| LllError::Parse(e.to_string()))?;
    let mut variables = Vec::with_capacity(file.variables.len());
    for v in file.variables {
        let probabilities = v
            .probabilities
            .iter()
            .map(|s| parse_rational(s))
            .collect::<Result<Vec<_>, _>>()?;
        variables.push(Variable::new(v.id, v.domain, probabilities)?);
    }
    let events = file
        .events
        .into_iter()
        .map(|e| RawEvent::new(e.id, e.vbl, e.occurring))
        .collect();
    let meta = match file.meta {
        None => Meta::default(),
        Some(m) => Meta {
            seed: m.seed,
            family: m.family,
            p: m.p.as_deref().map(parse_rational).transpose()?,
            d: m.d,
            ids: m.ids,
        },
    };
    LllInstance::new(variables, events, meta)
}

/// Canonical serialization, ending with a newline.
pub fn instance_to_json(inst: &LllInstance) -> String {
    let variables = inst
        .variables
        .iter()
        .map(|v| VariableFile {
            domain: v.domain.clone(),
            id: v.id,
            probabilities: v.probabilities().iter().map(format_rational).collect(),
        })
        .collect();
    let events = inst
        .events
        .iter()
        .map(|e| EventFile {
            id: e.id,
            occurring: e
                .occurring
                .iter()
                .map(|row| {
                    row.iter()
                        .zip(&e.vbl)
                        .map(|(&s, &x)| inst.variables[x].domain[s].clone())
                        .collect()
                })
                .collect(),
            vbl: e.vbl.iter().map(|&x| inst.variables[x].id).collect(),
        })
        .collect();
    let m = &inst.meta;
    let meta = (m != &Meta::default()).then(|| MetaFile {
        d: m.d,
        family: m.family.clone(),
        ids: m.ids.clone(),
        p: m.p.as_ref().map(format_rational),
        seed: m.seed,
    });
    let file = InstanceFile { events, meta, variables };
    let mut out = serde_json::to_string_pretty(&file).expect("instance serializes");
    out.push('\n');
    out
}

pub fn assignment_to_json(inst: &LllInstance, assignment: &[usize]) -> String {
    let map: Assignment = inst
        .variables
        .iter()
        .zip(assignment)
        .map(|(v, &s)| (v.id, v.domain[s].clone()))
        .collect();
    let mut out = serde_json::to_string_pretty(&map).expect("assignment serializes");
    out.push('\n');
    out
}

/// Symbol index per variable; variables missing from the file stay `None`.
pub fn assignment_from_json(inst: &LllInstance, text: &str) -> Result<Vec<Option<usize>>, LllError> {
    let map: Assignment = serde_json::from_str(text).map_err(|e| LllError::Parse(e.to_string()))?;
    let mut out = vec![None; inst.variables.len()];
    for (id, sym) in &map {
        let x = inst
            .variables
            .iter()
            .position(|v| v.id == *id)
            .ok_or_else(|| LllError::InvalidInput(format!("assignment names unknown variable {id}")))?;
        let s = inst.variables[x].symbol_index(sym).ok_or_else(|| {
            LllError::InvalidInput(format!("symbol {sym:?} is not in the domain of variable {id}"))
        })?;
        out[x] = Some(s);
    }
    Ok(out)
}
