use std::collections::BTreeMap;

use serde::Serialize;
use sha2::{Digest, Sha256};

use sharplll::geometry::ProbeReport;
use sharplll::lll::{format_rational, FixStep, LllInstance};
use sharplll::sim::RoundLog;

/// 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn digest(canonical: &str) -> String {
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

#[derive(Debug, Serialize)]
pub struct CriterionReport {
    pub p: String,
    pub d: usize,
    pub value: String,
    pub pass: bool,
}

impl CriterionReport {
    pub fn of(inst: &LllInstance) -> Self {
        let c = inst.check_criterion();
        Self { p: format_rational(&c.p), d: c.d, value: format_rational(&c.value), pass: c.pass }
    }
}

#[derive(Debug, Serialize)]
pub struct OracleStats {
    pub fix_steps: usize,
    pub values_tried: usize,
    pub relaxed_witnesses: usize,
    pub identity_checks: usize,
    pub identity_failures: usize,
    /// Smallest P* slack after any step, 17 significant digits.
    pub min_pstar_slack: String,
}

impl OracleStats {
    pub fn of(steps: &[FixStep], min_slack: f64) -> Self {
        Self {
            fix_steps: steps.len(),
            values_tried: steps.iter().map(|s| s.attempts.len()).sum(),
            relaxed_witnesses: steps.iter().filter(|s| s.relaxed).count(),
            identity_checks: steps.iter().map(|s| s.identity.len()).sum(),
            identity_failures: steps.iter().flat_map(|s| &s.identity).filter(|t| !t.holds()).count(),
            min_pstar_slack: fmt_float(min_slack),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: Vec<String>,
    pub instance_digest: String,
    pub outcome: String,
    pub mode: String,
    pub criterion: CriterionReport,
    pub occurring_events: Vec<u64>,
    pub assignment: BTreeMap<u64, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub round_log: Option<RoundLog>,
    pub oracle: OracleStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub instance_digest: String,
    pub outcome: String,
    pub occurring_events: Vec<u64>,
}

/// Columns: `sample, lambda, x_1..x_r, y_1..y_r, margin, violation`.
pub fn probe_csv(rep: &ProbeReport) -> String {
    let r = rep.r;
    let mut header = vec!["sample".to_string(), "lambda".to_string()];
    header.extend((1..=r).map(|i| format!("x_{i}")));
    header.extend((1..=r).map(|i| format!("y_{i}")));
    header.extend(["margin".to_string(), "violation".to_string()]);
    let mut out = header.join(",");
    out.push('\n');
    for (n, s) in rep.records.iter().enumerate() {
        let mut row = vec![n.to_string(), fmt_float(s.lambda)];
        row.extend(s.x.iter().chain(&s.y).map(|&v| fmt_float(v)));
        row.push(fmt_float(s.margin));
        row.push(u8::from(s.violation).to_string());
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Columns: `a, b, oracle_height, f3_height, abs_error`.
pub fn boundary_csv(rows: &[[f64; 5]]) -> String {
    let mut out = String::from("a,b,oracle_height,f3_height,abs_error\n");
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| fmt_float(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
