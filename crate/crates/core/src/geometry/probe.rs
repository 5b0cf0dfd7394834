//! Sampling check that non-representable tuples form a convex set.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::oracle::{boundary_height_r3, default_tol, is_representable};
use super::{GeometryError, Generator, Tuple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    /// Rejection sampling from the uniform distribution on `[0, 1]^r`.
    Uniform,
    /// Alternates uniform draws with points just above the boundary
    /// (a maximal tuple plus a small non-negative offset).
    Mixed,
}

#[derive(Debug, Clone)]
pub struct ProbeConfig {
    pub r: usize,
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub sampling: Sampling,
    /// Keep every sampled triple `(x, y, lambda)` in the report.
    pub record: bool,
}

impl ProbeConfig {
    pub fn new(r: usize, samples: usize, seed: u64) -> Self {
        Self {
            r,
            samples,
            seed,
            tol: default_tol(r),
            sampling: Sampling::Mixed,
            record: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeSample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub lambda: f64,
    pub margin: f64,
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub r: usize,
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub sampling: Sampling,
    /// Convex combinations representable by more than `tol`.
    pub violations: usize,
    /// Largest oracle margin over all combinations (negative: all outside).
    pub worst_margin: f64,
    /// Candidate draws spent by rejection sampling.
    pub draws: usize,
    /// For `r = 3`: combinations where the oracle and the closed form
    /// disagree by more than `tol` on the boundary height.
    pub closed_form_disagreements: Option<usize>,
    pub records: Vec<ProbeSample>,
}

/// Samples `n_samples` pairs of non-representable tuples and a mixing weight,
/// and counts convex combinations that the oracle finds representable.
pub fn convexity_probe(r: usize, n_samples: usize, seed: u64) -> Result<ProbeReport, GeometryError> {
    convexity_probe_with(&ProbeConfig::new(r, n_samples, seed))
}

pub fn convexity_probe_with(cfg: &ProbeConfig) -> Result<ProbeReport, GeometryError> {
    if cfg.r < 2 {
        return Err(GeometryError::Domain(format!("probe needs r >= 2, got {}", cfg.r)));
    }
    if cfg.samples == 0 {
        return Err(GeometryError::Domain("probe needs at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = ProbeReport {
        r: cfg.r,
        samples: cfg.samples,
        seed: cfg.seed,
        tol: cfg.tol,
        sampling: cfg.sampling,
        violations: 0,
        worst_margin: f64::NEG_INFINITY,
        draws: 0,
        closed_form_disagreements: (cfg.r == 3).then_some(0),
        records: Vec::new(),
    };
    for n in 0..cfg.samples {
        let near = cfg.sampling == Sampling::Mixed && n % 2 == 1;
        let x = draw_non_representable(&mut rng, cfg.r, cfg.tol, near, &mut report.draws)?;
        let y = draw_non_representable(&mut rng, cfg.r, cfg.tol, near, &mut report.draws)?;
        let lambda: f64 = rng.gen_range(0.0..1.0);
        let sample = check_combination(&x, &y, lambda, cfg.tol)?;
        report.worst_margin = report.worst_margin.max(sample.margin);
        if sample.violation {
            report.violations += 1;
        }
        if let Some(count) = report.closed_form_disagreements.as_mut() {
            let z = combine(&x, &y, lambda);
            if disagrees_with_closed_form(&z, sample.margin, cfg.tol)? {
                *count += 1;
            }
        }
        if cfg.record {
            report.records.push(sample);
        }
    }
    Ok(report)
}

fn combine(x: &[f64], y: &[f64], lambda: f64) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect()
}

/// Oracle verdict on `lambda x + (1 - lambda) y`.
pub(crate) fn check_combination(x: &[f64], y: &[f64], lambda: f64, tol: f64) -> Result<ProbeSample, GeometryError> {
    let z = Tuple::new(combine(x, y, lambda))?;
    let res = is_representable(&z, tol)?;
    Ok(ProbeSample {
        x: x.to_vec(),
        y: y.to_vec(),
        lambda,
        margin: res.margin,
        violation: res.margin > tol,
    })
}

fn disagrees_with_closed_form(z: &[f64], margin: f64, tol: f64) -> Result<bool, GeometryError> {
    let (a, b, c) = (z[0], z[1], z[2]);
    if a + b > 1.0 + tol {
        return Ok(margin >= -tol);
    }
    if (a + b - 1.0).abs() <= tol {
        return Ok(false);
    }
    let height = boundary_height_r3(a, b)?;
    if (c - height).abs() <= tol {
        return Ok(false);
    }
    let closed_form_member = c < height;
    Ok(closed_form_member != (margin >= -tol))
}

fn draw_non_representable(
    rng: &mut ChaCha8Rng,
    r: usize,
    tol: f64,
    near_boundary: bool,
    draws: &mut usize,
) -> Result<Vec<f64>, GeometryError> {
    const MAX_DRAWS: usize = 1_000_000;
    for _ in 0..MAX_DRAWS {
        *draws += 1;
        let candidate: Vec<f64> = if near_boundary {
            let w: Vec<f64> = (0..r).map(|_| rng.gen_range(0.01..1.0)).collect();
            let m = Generator::from_weights(&w)?.generate();
            let scale: f64 = rng.gen_range(0.0..0.05);
            m.coords().iter().map(|c| c + scale * rng.gen_range(0.0..1.0)).collect()
        } else {
            (0..r).map(|_| rng.gen_range(0.0..1.0)).collect()
        };
        if candidate.iter().any(|&c| c > 1.0) {
            continue;
        }
        let t = Tuple::new(candidate)?;
        if is_representable(&t, tol)?.margin < -tol {
            return Ok(t.into_vec());
        }
    }
    Err(GeometryError::Internal(format!(
        "rejection sampling found no non-representable tuple in {MAX_DRAWS} draws"
    )))
}
