//! Movement vectors and the hyperplane they span at a maximal tuple.
//!
//! Shifting weight from `a_ji` to `a_ij` moves the generated tuple, to first
//! order, along `w_ij`. At a maximal tuple the affine span of all movement
//! vectors through the tuple is a hyperplane with a non-negative normal, and
//! every point of it close enough to the tuple is representable.

use nalgebra::DMatrix;

use super::{GeometryError, Generator, Tuple};

/// Orthogonality tolerance for `|h . w_ij|` at maximal tuples.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

const GENERATES_SLACK: f64 = 1e-9;

/// `w_ij`: `+a_i / a_ij` at `i`, `-a_j / a_ji` at `j`, zero elsewhere.
/// Indices are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct MovementVector {
    pub i: usize,
    pub j: usize,
    pub vec: Vec<f64>,
}

/// `{x : h . x = b}` with `h >= 0` scaled so its largest entry is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperplane {
    pub h: Vec<f64>,
    pub b: f64,
}

impl Hyperplane {
    /// `h . x - b`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        dot(&self.h, x) - self.b
    }

    /// Projection of `x` onto the hyperplane.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let s = self.eval(x) / dot(&self.h, &self.h);
        x.iter().zip(&self.h).map(|(xi, hi)| xi - s * hi).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_non_zero_generator_of(t: &Tuple, g: &Generator) -> Result<(), GeometryError> {
    if t.rank() != g.rank() {
        return Err(GeometryError::Precondition(format!(
            "rank mismatch: tuple rank {}, generator rank {}",
            t.rank(),
            g.rank()
        )));
    }
    if !g.is_non_zero() {
        return Err(GeometryError::DegenerateGenerator(
            "movement vectors need every weight to be positive".into(),
        ));
    }
    let dist = g.generate().max_dist(t);
    if dist > GENERATES_SLACK {
        return Err(GeometryError::Precondition(format!(
            "generator does not generate {:?} (off by {dist:.3e})",
            t.coords()
        )));
    }
    Ok(())
}

/// All `r(r - 1)` movement vectors of `t` under its non-zero generator `g`,
/// ordered by `(i, j)`.
///
/// `a_i / a_ij` is evaluated as the product of the other weights of row `i`,
/// which is the same quantity without the division.
pub fn movement_vectors(t: &Tuple, g: &Generator) -> Result<Vec<MovementVector>, GeometryError> {
    check_non_zero_generator_of(t, g)?;
    Ok(movement_vectors_unchecked(g))
}

fn movement_vectors_unchecked(g: &Generator) -> Vec<MovementVector> {
    let r = g.rank();
    let mut out = Vec::with_capacity(r * (r - 1));
    for i in 0..r {
        for j in 0..r {
            if i == j {
                continue;
            }
            let mut vec = vec![0.0; r];
            vec[i] = g.row_product(i, Some(j));
            vec[j] = -g.row_product(j, Some(i));
            out.push(MovementVector { i, j, vec });
        }
    }
    out
}

/// The hyperplane spanned by the movement vectors through a maximal `t`.
///
/// Computed as the null vector of the stacked movement vectors. Fails with
/// [`GeometryError::Degenerate`] when the stack does not have rank `r - 1`
/// to within `tol`, which means `t` was not maximal or `g` is inconsistent.
pub fn supporting_hyperplane(t: &Tuple, g: &Generator, tol: f64) -> Result<Hyperplane, GeometryError> {
    check_non_zero_generator_of(t, g)?;
    let r = t.rank();
    if r == 1 {
        return Ok(Hyperplane { h: vec![1.0], b: t.get(0) });
    }
    for i in 0..r {
        for j in i + 1..r {
            let slack = 1.0 - g.a(i, j) - g.a(j, i);
            if slack > tol {
                return Err(GeometryError::Degenerate(format!(
                    "pair ({}, {}) has unused weight {slack:.3e}; the tuple is not maximal",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    let ws = movement_vectors_unchecked(g);
    let stacked = DMatrix::from_fn(ws.len(), r, |row, col| ws[row].vec[col]);
    let svd = stacked.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| GeometryError::Internal("SVD did not return right singular vectors".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let sigma_max = svd.singular_values[order[order.len() - 1]];
    let sigma_second = svd.singular_values[order[1]];
    if sigma_second <= 1e-12 * sigma_max.max(1.0) {
        return Err(GeometryError::Degenerate(format!(
            "movement vectors span fewer than {} dimensions",
            r - 1
        )));
    }

    let mut h: Vec<f64> = (0..r).map(|c| v_t[(order[0], c)]).collect();
    if h.iter().sum::<f64>() < 0.0 {
        h.iter_mut().for_each(|x| *x = -*x);
    }
    let scale = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(scale > 0.0) {
        return Err(GeometryError::Degenerate("null vector has no positive entry".into()));
    }
    h.iter_mut().for_each(|x| *x /= scale);
    if let Some(neg) = h.iter().copied().find(|&x| x < -tol) {
        return Err(GeometryError::Degenerate(format!(
            "normal has a negative entry {neg:.3e}; the tuple is not maximal"
        )));
    }
    h.iter_mut().for_each(|x| *x = x.max(0.0));

    let residual = ws.iter().map(|w| dot(&h, &w.vec).abs()).fold(0.0, f64::max);
    if residual > tol {
        return Err(GeometryError::Degenerate(format!(
            "movement vectors span all of R^{r} (max |h.w| = {residual:.3e}); the tuple is not maximal"
        )));
    }
    let b = dot(&h, t.coords());
    Ok(Hyperplane { h, b })
}

/// Coefficients `alpha_ij` with `t + sum alpha_ij w_ij = target`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub r: usize,
    /// Row-major `r x r`; the diagonal is zero.
    pub alpha: Vec<f64>,
    pub iterations: usize,
    /// Max-norm reconstruction error.
    pub residual: f64,
}

impl Decomposition {
    pub fn alpha(&self, i: usize, j: usize) -> f64 {
        self.alpha[i * self.r + j]
    }

    /// `t + sum alpha_ij w_ij`.
    pub fn reconstruct(&self, t: &Tuple, ws: &[MovementVector]) -> Vec<f64> {
        let mut x = t.coords().to_vec();
        for w in ws {
            let a = self.alpha(w.i, w.j);
            if a != 0.0 {
                for (xk, wk) in x.iter_mut().zip(&w.vec) {
                    *xk += a * wk;
                }
            }
        }
        x
    }

    /// For every coordinate `k`, the products `alpha_ij (w_ij)_k` share a sign.
    pub fn sign_coherent(&self, ws: &[MovementVector]) -> bool {
        (0..self.r).all(|k| {
            let (mut pos, mut neg) = (false, false);
            for w in ws {
                let p = self.alpha(w.i, w.j) * w.vec[k];
                pos |= p > 0.0;
                neg |= p < 0.0;
            }
            !(pos && neg)
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.alpha.iter().map(|a| a.abs()).fold(0.0, f64::max)
    }
}

/// Writes `target - t` (with `target` on the hyperplane of a maximal `t`)
/// as a sign-coherent combination of movement vectors.
///
/// Starting from `t`, each round picks a coordinate `k` still below target
/// and a coordinate `l` still above it, and moves along `w_kl` until one of
/// the two reaches its target. Every round settles at least one coordinate.
pub fn decompose_in_hyperplane(
    t: &Tuple,
    g: &Generator,
    target: &Tuple,
    tol: f64,
) -> Result<Decomposition, GeometryError> {
    let r = t.rank();
    if target.rank() != r {
        return Err(GeometryError::Precondition("target rank differs from tuple rank".into()));
    }
    let plane = supporting_hyperplane(t, g, ORTHOGONALITY_TOL)?;
    let off = plane.eval(target.coords());
    if off.abs() > tol {
        return Err(GeometryError::Precondition(format!(
            "target is {off:.3e} away from the hyperplane (tolerance {tol:.1e})"
        )));
    }
    let ws = movement_vectors_unchecked(g);
    let w = |i: usize, j: usize| &ws[i * (r - 1) + if j > i { j - 1 } else { j }].vec;

    let goal = target.coords();
    let mut b = t.coords().to_vec();
    let mut alpha = vec![0.0; r * r];
    let mut settled: Vec<bool> = (0..r)
        .map(|k| (b[k] - goal[k]).abs() <= 1e-15 * goal[k].abs().max(1.0))
        .collect();
    let mut iterations = 0;
    loop {
        let below = (0..r).find(|&k| !settled[k] && b[k] < goal[k]);
        let above = (0..r).find(|&k| !settled[k] && b[k] > goal[k]);
        let (Some(k), Some(l)) = (below, above) else {
            break;
        };
        iterations += 1;
        assert!(
            iterations <= r,
            "sign-coherent repair did not terminate within {r} rounds"
        );
        let up = w(k, l)[k];
        let down = w(l, k)[l];
        let need_k = (goal[k] - b[k]) / up;
        let need_l = (b[l] - goal[l]) / down;
        let step = need_k.min(need_l);
        alpha[k * r + l] += step;
        b[k] += step * up;
        b[l] -= step * down;
        if need_k <= need_l {
            b[k] = goal[k];
            settled[k] = true;
        }
        if need_l <= need_k {
            b[l] = goal[l];
            settled[l] = true;
        }
    }

    let mut dec = Decomposition { r, alpha, iterations, residual: 0.0 };
    let x = dec.reconstruct(t, &ws);
    dec.residual = x.iter().zip(goal).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if dec.residual > tol {
        return Err(GeometryError::Internal(format!(
            "decomposition residual {:.3e} exceeds {tol:.1e}",
            dec.residual
        )));
    }
    Ok(dec)
}

/// Radius `eps` such that every point of the hyperplane within `eps` of the
/// maximal tuple `t` is representable.
///
/// `eps = min(eps', eps'')` with `c = max_i 1 / t_i`,
/// `eps'' = min_k t_k / (2^r (2c)^r)` bounding the higher-order terms of the
/// perturbed products, and `eps' = min_{i != j} min(a_ij, 1 - a_ij) / (2c)`
/// keeping the perturbed weights inside `[0, 1]`.
pub fn local_representability_radius(t: &Tuple, g: &Generator) -> Result<f64, GeometryError> {
    check_non_zero_generator_of(t, g)?;
    let r = t.rank() as i32;
    let min_t = t.coords().iter().copied().fold(f64::INFINITY, f64::min);
    let c = 1.0 / min_t;
    let eps_terms = min_t / (2f64.powi(r) * (2.0 * c).powi(r));
    let eps_valid = g.interior_margin() / (2.0 * c);
    let eps = eps_terms.min(eps_valid);
    if !(eps > 0.0) {
        return Err(GeometryError::DegenerateGenerator(format!("radius {eps} is not positive")));
    }
    Ok(eps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quarter() -> (Tuple, Generator) {
        (Tuple::splat(3, 0.25).unwrap(), Generator::uniform(3, 0.5).unwrap())
    }

    #[test]
    fn movement_vectors_at_quarter() {
        let (t, g) = quarter();
        let ws = movement_vectors(&t, &g).unwrap();
        assert_eq!(ws.len(), 6);
        let find = |i, j| ws.iter().find(|w| w.i == i && w.j == j).unwrap().vec.clone();
        assert_eq!(find(0, 1), vec![0.5, -0.5, 0.0]);
        assert_eq!(find(0, 2), vec![0.5, 0.0, -0.5]);
        assert_eq!(find(1, 2), vec![0.0, 0.5, -0.5]);
        assert_eq!(find(1, 0), vec![-0.5, 0.5, 0.0]);
        for w in &ws {
            for k in 0..3 {
                if k != w.i && k != w.j {
                    assert_eq!(w.vec[k], 0.0);
                }
            }
            assert!(w.vec[w.i] > 0.0 && w.vec[w.j] < 0.0);
        }
    }

    #[test]
    fn movement_vectors_rank_two() {
        let t = Tuple::new(vec![0.3, 0.7]).unwrap();
        let g = Generator::from_matrix(2, vec![0.0, 0.3, 0.7, 0.0]).unwrap();
        let ws = movement_vectors(&t, &g).unwrap();
        assert_eq!(ws[0].vec, vec![1.0, -1.0]);
    }

    #[test]
    fn zero_weight_is_degenerate() {
        let g = Generator::from_fn(3, |i, j| if (i, j) == (0, 1) { 0.0 } else { 0.5 }).unwrap();
        let t = g.generate();
        assert!(matches!(movement_vectors(&t, &g), Err(GeometryError::DegenerateGenerator(_))));
    }

    #[test]
    fn hyperplane_at_quarter() {
        let (t, g) = quarter();
        let hp = supporting_hyperplane(&t, &g, ORTHOGONALITY_TOL).unwrap();
        for x in &hp.h {
            assert!((x - 1.0).abs() < 1e-14);
        }
        assert!((hp.b - 0.75).abs() < 1e-14);
    }

    #[test]
    fn hyperplane_rank_two() {
        let t = Tuple::new(vec![0.3, 0.7]).unwrap();
        let g = Generator::from_matrix(2, vec![0.0, 0.3, 0.7, 0.0]).unwrap();
        let hp = supporting_hyperplane(&t, &g, ORTHOGONALITY_TOL).unwrap();
        assert!((hp.h[0] - 1.0).abs() < 1e-14 && (hp.h[1] - 1.0).abs() < 1e-14);
        assert!((hp.b - 1.0).abs() < 1e-14);
        assert!(hp.eval(t.coords()).abs() < 1e-14);
    }

    #[test]
    fn non_maximal_tuple_has_no_hyperplane() {
        let a = 0.2f64.sqrt();
        let g = Generator::uniform(3, a).unwrap();
        let t = g.generate();
        assert!(matches!(
            supporting_hyperplane(&t, &g, ORTHOGONALITY_TOL),
            Err(GeometryError::Degenerate(_))
        ));
    }

    #[test]
    fn decompose_identity_and_single_vector() {
        let (t, g) = quarter();
        let d = decompose_in_hyperplane(&t, &g, &t, 1e-9).unwrap();
        assert!(d.alpha.iter().all(|a| *a == 0.0));
        assert_eq!(d.iterations, 0);

        let target = Tuple::new(vec![0.26, 0.24, 0.25]).unwrap();
        let d = decompose_in_hyperplane(&t, &g, &target, 1e-9).unwrap();
        assert!((d.alpha(0, 1) - 0.02).abs() < 1e-14);
        for i in 0..3 {
            for j in 0..3 {
                if (i, j) != (0, 1) {
                    assert_eq!(d.alpha(i, j), 0.0);
                }
            }
        }
    }

    #[test]
    fn decompose_rejects_off_plane_target() {
        let (t, g) = quarter();
        let target = Tuple::splat(3, 0.26).unwrap();
        assert!(matches!(
            decompose_in_hyperplane(&t, &g, &target, 1e-9),
            Err(GeometryError::Precondition(_))
        ));
    }

    #[test]
    fn radius_at_quarter() {
        let (t, g) = quarter();
        let eps = local_representability_radius(&t, &g).unwrap();
        assert!((eps - 0.25 / 4096.0).abs() < 1e-18);
    }
}
