use super::oracle::maximize_coordinate_with_witness;
use super::{GeometryError, Generator, Tuple};

/// Relative slack allowed between a tuple and the tuple its claimed
/// generator produces.
const GENERATES_SLACK: f64 = 1e-9;

fn check_generates(t: &Tuple, g: &Generator) -> Result<(), GeometryError> {
    if t.rank() != g.rank() {
        return Err(GeometryError::Precondition(format!(
            "rank mismatch: tuple has rank {}, generator rank {}",
            t.rank(),
            g.rank()
        )));
    }
    let gen = g.generate();
    let dist = gen.max_dist(t);
    if dist > GENERATES_SLACK {
        return Err(GeometryError::Precondition(format!(
            "generator produces {:?}, which differs from {:?} by {dist:.3e}",
            gen.coords(),
            t.coords()
        )));
    }
    Ok(())
}

/// Admissible perturbation bound `min_{i != j} min(a_ij, 1 - a_ij)`.
pub fn trade_range(g: &Generator) -> f64 {
    g.interior_margin()
}

/// Shifts `delta` of weight away from row `k` on every pair at `k`:
/// `b_kj = a_kj - delta`, `b_jk = a_jk + delta`.
pub fn traded_generator(g: &Generator, k: usize, delta: f64) -> Result<Generator, GeometryError> {
    let r = g.rank();
    if k >= r {
        return Err(GeometryError::Domain(format!("index {k} out of range for rank {r}")));
    }
    if !g.is_non_zero() {
        return Err(GeometryError::DegenerateGenerator(
            "trading requires every weight to be positive".into(),
        ));
    }
    let max = trade_range(g);
    if !(0.0..max).contains(&delta) {
        return Err(GeometryError::DeltaOutOfRange { delta, max });
    }
    Generator::from_fn(r, |i, j| {
        if i == k {
            g.a(i, j) - delta
        } else if j == k {
            g.a(i, j) + delta
        } else {
            g.a(i, j)
        }
    })
}

/// Lowers coordinate `k` of `t` and raises every other coordinate, by
/// perturbing its non-zero generator `g` by `delta`. The result is generated
/// by the perturbed generator, hence representable.
pub fn trade_epsilon(t: &Tuple, g: &Generator, k: usize, delta: f64) -> Result<Tuple, GeometryError> {
    check_generates(t, g)?;
    Ok(traded_generator(g, k, delta)?.generate())
}

/// Downward closure: a generator of `target`, obtained from a generator
/// `g` whose tuple dominates it by rescaling one weight per row.
pub fn shrink_to(g: &Generator, target: &Tuple) -> Result<Generator, GeometryError> {
    let r = g.rank();
    let gen = g.generate();
    if target.rank() != r || !gen.dominates(target, 0.0) {
        return Err(GeometryError::Precondition(format!(
            "{:?} is not dominated by the generated tuple {:?}",
            target.coords(),
            gen.coords()
        )));
    }
    if r == 1 {
        return Ok(g.clone());
    }
    let mut m = g.matrix().to_vec();
    for i in 0..r {
        let j = if i == 0 { 1 } else { 0 };
        let gi = gen.get(i);
        if gi > 0.0 {
            m[i * r + j] = (g.a(i, j) * (target.get(i) / gi)).min(g.a(i, j));
        }
    }
    Generator::from_matrix(r, m)
}

/// Strict dominator of a non-maximal tuple `t` with coordinates in `(0, 1)`.
///
/// Finds a weak dominator by raising the most improvable coordinate `k`,
/// then trades a little of its `k`-th coordinate for an increase of every
/// other coordinate. Returns `None` when `t` is maximal (within `tol`).
pub fn strong_dominator(t: &Tuple, tol: f64) -> Result<Option<(Tuple, Generator)>, GeometryError> {
    if t.coords().iter().any(|&c| !(c > 0.0 && c < 1.0)) {
        return Err(GeometryError::Precondition(format!(
            "coordinates of {:?} must lie in (0, 1)",
            t.coords()
        )));
    }
    let r = t.rank();
    let mut best: Option<(usize, f64, Generator)> = None;
    for k in 0..r {
        let (m, witness) = maximize_coordinate_with_witness(&t.without(k), k, tol.min(1e-12))?;
        let gain = m - t.get(k);
        if let Some(w) = witness {
            if gain > tol && best.as_ref().map_or(true, |(_, g, _)| gain > *g) {
                best = Some((k, gain, w));
            }
        }
    }
    let Some((k, _, witness)) = best else {
        return Ok(None);
    };
    if !witness.is_non_zero() {
        return Err(GeometryError::Internal(
            "dominating witness has a zero weight although every coordinate is positive".into(),
        ));
    }
    let mut delta = 0.5 * trade_range(&witness);
    while delta > 0.0 {
        let g = traded_generator(&witness, k, delta)?;
        let b = g.generate();
        if b.coords().iter().zip(t.coords()).all(|(x, y)| x > y) {
            return Ok(Some((b, g)));
        }
        delta *= 0.5;
    }
    Err(GeometryError::Internal(format!(
        "no perturbation of the weak dominator strictly dominates {:?}",
        t.coords()
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::is_representable;

    #[test]
    fn trade_on_uniform_half() {
        let t = Tuple::splat(3, 0.25).unwrap();
        let g = Generator::uniform(3, 0.5).unwrap();
        let out = trade_epsilon(&t, &g, 0, 0.1).unwrap();
        let want = [0.16, 0.3, 0.3];
        for (a, b) in out.coords().iter().zip(want) {
            assert!((a - b).abs() < 1e-15, "{out:?}");
        }
    }

    #[test]
    fn zero_delta_is_identity() {
        let t = Tuple::splat(3, 0.25).unwrap();
        let g = Generator::uniform(3, 0.5).unwrap();
        assert_eq!(trade_epsilon(&t, &g, 2, 0.0).unwrap(), t);
    }

    #[test]
    fn delta_range_reported() {
        let t = Tuple::splat(3, 0.25).unwrap();
        let g = Generator::uniform(3, 0.5).unwrap();
        match trade_epsilon(&t, &g, 0, 0.5) {
            Err(GeometryError::DeltaOutOfRange { max, .. }) => assert_eq!(max, 0.5),
            other => panic!("{other:?}"),
        }
        assert!(trade_epsilon(&t, &g, 0, -0.01).is_err());
    }

    #[test]
    fn zero_generator_rejected() {
        let g = Generator::from_fn(3, |i, j| if (i, j) == (0, 1) { 0.0 } else { 0.5 }).unwrap();
        let t = g.generate();
        assert!(matches!(
            trade_epsilon(&t, &g, 0, 0.01),
            Err(GeometryError::DegenerateGenerator(_))
        ));
    }

    #[test]
    fn mismatched_generator_rejected() {
        let t = Tuple::splat(3, 0.2).unwrap();
        let g = Generator::uniform(3, 0.5).unwrap();
        assert!(matches!(trade_epsilon(&t, &g, 0, 0.01), Err(GeometryError::Precondition(_))));
    }

    #[test]
    fn shrink_generates_target() {
        let g = Generator::uniform(3, 0.5).unwrap();
        let target = Tuple::new(vec![0.1, 0.0, 0.25]).unwrap();
        let s = shrink_to(&g, &target).unwrap();
        assert!(s.generate().max_dist(&target) < 1e-15);
        assert!(shrink_to(&g, &Tuple::splat(3, 0.3).unwrap()).is_err());
    }

    #[test]
    fn strong_dominator_of_interior_point() {
        let t = Tuple::splat(3, 0.2).unwrap();
        let (b, g) = strong_dominator(&t, 1e-9).unwrap().unwrap();
        assert!(b.coords().iter().all(|&x| x > 0.2));
        assert!(g.generate() == b);
        assert!(is_representable(&b, 1e-9).unwrap().member);
    }

    #[test]
    fn maximal_point_has_no_strong_dominator() {
        let t = Tuple::splat(3, 0.25).unwrap();
        assert!(strong_dominator(&t, 1e-9).unwrap().is_none());
    }
}
