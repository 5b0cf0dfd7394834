//! Membership oracle for representable tuples.
//!
//! With tight pairs (`a_ji = 1 - a_ij`) the log of each generated coordinate,
//! `L_i(x) = sum_{j>i} ln x_ij + sum_{j<i} ln(1 - x_ji)`, is concave in the
//! free weights. Asking whether `t` is representable is therefore asking
//! whether the concave max-min problem
//!
//! ```text
//!     tau* = max_x min_i ( L_i(x) - ln t_i )
//! ```
//!
//! has a non-negative value. Its Lagrange dual over the simplex has a closed
//! form best response `a_ij = l_i / (l_i + l_j)`, giving the convex function
//!
//! ```text
//!     D(l) = sum_i l_i * g_i(l),   g_i(l) = sum_{j != i} ln(l_i / (l_i + l_j)) - ln t_i
//! ```
//!
//! with `min_i g_i(l) <= tau* <= D(l)` for every `l` in the simplex. The
//! solver runs damped Newton on `D` and reports both bounds, so a positive
//! lower bound certifies membership (the best response is a witness) and a
//! negative upper bound certifies non-membership.
//!
//! Coordinates equal to zero impose nothing: their rows give away every
//! weight (`a_zi = 0, a_iz = 1`), which is optimal for everyone else.

use nalgebra::{DMatrix, DVector};

use super::{GeometryError, Generator, Tuple};

/// Oracle tolerance used for ranks where the closed-form cross-check exists.
pub const TOL_CLOSED_FORM: f64 = 1e-9;
/// Oracle tolerance documented for ranks 4 and above.
pub const TOL_SEARCH: f64 = 1e-6;

/// Default decision tolerance for rank `r`.
pub fn default_tol(r: usize) -> f64 {
    if r <= 3 {
        TOL_CLOSED_FORM
    } else {
        TOL_SEARCH
    }
}

const MAX_NEWTON_ITERS: usize = 200;
/// Log-space slack under which a tuple counts as exactly representable.
const LOG_EXACT_SLACK: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub member: bool,
    /// Present iff `member`.
    pub witness: Option<Generator>,
    /// `min_i (generated_i - t_i)` over the positive coordinates of the query,
    /// for the best generator found. Negative for non-members.
    pub margin: f64,
    pub iterations: usize,
    /// Certified bracket `[lower, upper]` on the optimal log-margin `tau*`.
    pub log_margin_bounds: (f64, f64),
    /// Dual multipliers (zero on zero coordinates).
    pub multipliers: Vec<f64>,
}

/// Raw solver output, before applying a decision tolerance.
#[derive(Debug, Clone)]
pub(crate) struct Analysis {
    pub witness: Option<Generator>,
    pub margin: f64,
    pub log_lower: f64,
    pub log_upper: f64,
    pub multipliers: Vec<f64>,
    pub iterations: usize,
}

impl Analysis {
    /// Representable in exact arithmetic, up to the solver's precision.
    pub fn exactly_representable(&self) -> bool {
        self.log_upper >= 0.0 && self.log_lower >= -LOG_EXACT_SLACK
    }
}

/// Decides membership of `t` in the set of representable tuples.
///
/// `member` is true iff the best generator found dominates `t` up to `tol`
/// in max-norm. Coordinates above 1 are rejected immediately.
pub fn is_representable(t: &Tuple, tol: f64) -> Result<OracleResult, GeometryError> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(GeometryError::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let a = analyze(t.coords(), None);
    let member = a.margin >= -tol && a.witness.is_some();
    Ok(OracleResult {
        member,
        witness: if member { a.witness } else { None },
        margin: a.margin,
        iterations: a.iterations,
        log_margin_bounds: (a.log_lower, a.log_upper),
        multipliers: a.multipliers,
    })
}

pub(crate) fn analyze(t: &[f64], warm: Option<&[f64]>) -> Analysis {
    let r = t.len();
    let max_coord = t.iter().copied().fold(0.0, f64::max);
    if max_coord > 1.0 {
        return Analysis {
            witness: None,
            margin: 1.0 - max_coord,
            log_lower: f64::NEG_INFINITY,
            log_upper: -max_coord.ln(),
            multipliers: vec![0.0; r],
            iterations: 0,
        };
    }
    let active: Vec<usize> = (0..r).filter(|&i| t[i] > 0.0).collect();
    match active.len() {
        0 => {
            let g = Generator::uniform(r, 0.5).expect("1/2 is a valid uniform weight");
            let margin = g.generate().coords().iter().copied().fold(f64::INFINITY, f64::min);
            Analysis {
                witness: Some(g),
                margin: margin.min(1.0),
                log_lower: f64::INFINITY,
                log_upper: f64::INFINITY,
                multipliers: vec![0.0; r],
                iterations: 0,
            }
        }
        1 => {
            let i = active[0];
            let mut w = vec![0.0; r];
            w[i] = 1.0;
            let g = assemble(t, &w);
            let tau = -t[i].ln();
            Analysis {
                margin: 1.0 - t[i],
                witness: Some(g),
                log_lower: tau,
                log_upper: tau,
                multipliers: w,
                iterations: 0,
            }
        }
        _ => {
            let s: Vec<f64> = active.iter().map(|&i| t[i].ln()).collect();
            let start: Vec<f64> = match warm {
                Some(w) if active.iter().all(|&i| w.get(i).is_some_and(|v| *v > 0.0)) => {
                    active.iter().map(|&i| w[i]).collect()
                }
                _ => active.iter().map(|&i| t[i]).collect(),
            };
            let sol = solve_dual(&s, start);
            let mut full = vec![0.0; r];
            for (k, &i) in active.iter().enumerate() {
                full[i] = sol.lambda[k];
            }
            let g = assemble(t, &full);
            let gen = g.generate();
            let margin = active
                .iter()
                .map(|&i| gen.get(i) - t[i])
                .fold(f64::INFINITY, f64::min);
            Analysis {
                witness: Some(g),
                margin,
                log_lower: sol.lower,
                log_upper: sol.upper,
                multipliers: full,
                iterations: sol.iterations,
            }
        }
    }
}

/// Full generator from multipliers: best response between positive
/// multipliers, zero rows give everything away, zero-zero pairs split evenly.
fn assemble(t: &[f64], w: &[f64]) -> Generator {
    let r = t.len();
    let mut m = vec![0.0; r * r];
    for i in 0..r {
        for j in (i + 1)..r {
            let (wi, wj) = (w[i], w[j]);
            let (aij, aji) = if wi > 0.0 && wj > 0.0 {
                if wi >= wj {
                    let hi = wi / (wi + wj);
                    (hi, 1.0 - hi)
                } else {
                    let hi = wj / (wi + wj);
                    (1.0 - hi, hi)
                }
            } else if wi > 0.0 {
                (1.0, 0.0)
            } else if wj > 0.0 {
                (0.0, 1.0)
            } else {
                (0.5, 0.5)
            };
            m[i * r + j] = aij;
            m[j * r + i] = aji;
        }
    }
    Generator::from_matrix(r, m).expect("assembled generator pairs sum to one")
}

struct DualSolution {
    lambda: Vec<f64>,
    lower: f64,
    upper: f64,
    iterations: usize,
}

/// `g_i(l)`, the gradient of the dual function, for targets `s = ln t`.
fn dual_gradient(lambda: &[f64], s: &[f64]) -> Vec<f64> {
    let m = lambda.len();
    (0..m)
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..m {
                if j != i {
                    acc -= (lambda[j] / lambda[i]).ln_1p();
                }
            }
            acc - s[i]
        })
        .collect()
}

fn normalize(lambda: &mut [f64]) {
    let total: f64 = lambda.iter().sum();
    for l in lambda.iter_mut() {
        *l /= total;
    }
}

fn dual_value(lambda: &[f64], g: &[f64]) -> f64 {
    lambda.iter().zip(g).map(|(l, gi)| l * gi).sum()
}

fn spread(g: &[f64]) -> (f64, f64) {
    let lo = g.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Damped Newton on the dual over the simplex, in log-multiplier
/// coordinates (`l <- l * exp(step * dmu)`), which keeps every multiplier
/// positive and the linear system well scaled.
fn solve_dual(s: &[f64], start: Vec<f64>) -> DualSolution {
    let m = s.len();
    let mut lambda = start;
    normalize(&mut lambda);
    let mut g = dual_gradient(&lambda, s);
    let mut value = dual_value(&lambda, &g);
    let mut iterations = 0;

    while iterations < MAX_NEWTON_ITERS {
        let (lo, hi) = spread(&g);
        if hi - lo <= 1e-14 * hi.abs().max(1.0) {
            break;
        }
        iterations += 1;

        // d g_i / d mu_k: diagonal sum_j a_ji, off-diagonal -a_ki.
        let mut kkt = DMatrix::<f64>::zeros(m + 1, m + 1);
        for i in 0..m {
            let mut diag = 0.0;
            for k in 0..m {
                if k != i {
                    let a_ki = lambda[k] / (lambda[k] + lambda[i]);
                    kkt[(i, k)] = -a_ki;
                    diag += a_ki;
                }
            }
            kkt[(i, i)] = diag;
            kkt[(i, m)] = 1.0;
            kkt[(m, i)] = lambda[i];
        }
        let mut rhs = DVector::<f64>::zeros(m + 1);
        for i in 0..m {
            rhs[i] = -g[i];
        }
        let Some(sol) = kkt.lu().solve(&rhs) else {
            break;
        };
        let dmu: Vec<f64> = (0..m).map(|i| sol[i]).collect();
        // Directional derivative of D along dl = l * dmu.
        let slope: f64 = (0..m).map(|i| g[i] * lambda[i] * dmu[i]).sum();
        if !(slope < 0.0) {
            break;
        }

        let mut step = 1.0;
        let mut accepted = false;
        while step > 1e-12 {
            let mut trial: Vec<f64> = (0..m).map(|i| lambda[i] * (step * dmu[i]).exp()).collect();
            normalize(&mut trial);
            if trial.iter().all(|l| *l > 0.0 && l.is_finite()) {
                let tg = dual_gradient(&trial, s);
                let tv = dual_value(&trial, &tg);
                if tv <= value + 1e-4 * step * slope {
                    lambda = trial;
                    g = tg;
                    value = tv;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    let (lower, _) = spread(&g);
    DualSolution {
        lambda,
        lower,
        upper: value.max(lower),
        iterations,
    }
}

/// Largest `c` such that `(a, b, c)` is representable, from the closed form
/// `f3(a, b) = 4 + (ab - 2a - 2b - sqrt(ab(4 - a)(4 - b))) / 2` evaluated in
/// the unscaled convention (`f3(4a, 4b) / 4`).
///
/// Pairs with `a + b >= 1` admit no positive third coordinate and return 0;
/// there the formula's second branch would give spurious positive values.
pub fn boundary_height_r3(a: f64, b: f64) -> Result<f64, GeometryError> {
    for (name, v) in [("a", a), ("b", b)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(GeometryError::Domain(format!("{name} = {v} is outside [0, 1]")));
        }
    }
    if a + b >= 1.0 {
        return Ok(0.0);
    }
    let (x, y) = (4.0 * a, 4.0 * b);
    let radicand = (x * y * (4.0 - x) * (4.0 - y)).max(0.0);
    let f = 4.0 + 0.5 * (x * y - 2.0 * x - 2.0 * y - radicand.sqrt());
    Ok((f / 4.0).max(0.0))
}

/// Supremum of coordinate `k` over representable tuples that agree with
/// `prefix` on the other `r - 1` coordinates; 0 when no representable
/// extension exists. Bisection to within `tol`.
pub fn maximize_coordinate(prefix: &[f64], k: usize, tol: f64) -> Result<f64, GeometryError> {
    Ok(maximize_coordinate_with_witness(prefix, k, tol)?.0)
}

/// Like [`maximize_coordinate`], also returning a generator whose tuple
/// dominates the returned point (`None` when no extension exists).
pub fn maximize_coordinate_with_witness(
    prefix: &[f64],
    k: usize,
    tol: f64,
) -> Result<(f64, Option<Generator>), GeometryError> {
    if !(tol > 0.0) {
        return Err(GeometryError::Domain(format!("tolerance must be positive, got {tol}")));
    }
    for (i, &c) in prefix.iter().enumerate() {
        if !(0.0..=1.0).contains(&c) {
            return Err(GeometryError::Domain(format!(
                "prefix coordinate {i} = {c} is outside [0, 1]"
            )));
        }
    }
    let base = Tuple::with_inserted(prefix, k, 0.0)?;
    let lo_analysis = analyze(base.coords(), None);
    if !lo_analysis.exactly_representable() {
        return Ok((0.0, None));
    }
    let mut coords = base.into_vec();
    coords[k] = 1.0;
    let top = analyze(&coords, None);
    if top.exactly_representable() {
        return Ok((1.0, top.witness));
    }

    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut best = lo_analysis;
    let mut warm: Option<Vec<f64>> = None;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        coords[k] = mid;
        let a = analyze(&coords, warm.as_deref());
        if a.exactly_representable() {
            lo = mid;
            warm = Some(a.multipliers.clone());
            best = a;
        } else {
            hi = mid;
        }
    }
    Ok((lo, best.witness))
}

/// True iff no coordinate of `t` can be raised while staying representable.
pub fn is_maximal(t: &Tuple, tol: f64) -> Result<bool, GeometryError> {
    let res = is_representable(t, tol)?;
    if !res.member {
        return Err(GeometryError::Precondition(format!(
            "tuple {:?} is not representable (margin {:.3e})",
            t.coords(),
            res.margin
        )));
    }
    let search_tol = tol.min(1e-12);
    for k in 0..t.rank() {
        let best = maximize_coordinate(&t.without(k), k, search_tol)?;
        if best > t.get(k) + tol {
            return Ok(false);
        }
    }
    Ok(true)
}
