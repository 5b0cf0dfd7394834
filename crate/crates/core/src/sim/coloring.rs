//! Distance-2 coloring: Linial polynomial reduction on the square graph,
//! then one color class per round down to `Delta(G^2) + 1` colors.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Coloring {
    pub colors: Vec<usize>,
    /// `Delta(G^2) + 1`, or 0 for an empty graph.
    pub palette: usize,
    /// Palette the one-per-round reduction starts from.
    pub reduction_start: usize,
    pub linial_steps: usize,
    pub reduction_rounds: usize,
    /// Rounds on the square graph.
    pub rounds: usize,
}

impl Coloring {
    pub fn distinct_colors(&self) -> usize {
        let mut seen = self.colors.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }

    /// Node indices per color, each class sorted by the given identifiers.
    pub fn classes(&self, ids: &[u64]) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.palette];
        for (v, &c) in self.colors.iter().enumerate() {
            out[c].push(v);
        }
        for class in &mut out {
            class.sort_by_key(|&v| ids[v]);
        }
        out
    }
}

/// Neighbors at distance 1 or 2, sorted.
pub fn square_graph(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    adj.iter()
        .enumerate()
        .map(|(v, ns)| {
            let mut out: Vec<usize> = ns.iter().flat_map(|&u| adj[u].iter().copied().chain([u])).filter(|&u| u != v).collect();
            out.sort_unstable();
            out.dedup();
            out
        })
        .collect()
}

fn is_prime(q: u64) -> bool {
    q >= 2 && (2..).take_while(|i| i * i <= q).all(|i| q % i != 0)
}

fn next_prime_above(x: u64) -> u64 {
    (x + 1..).find(|&q| is_prime(q)).expect("primes are unbounded")
}

/// Smallest `x` with `x^e >= m`.
fn ceil_root(m: u128, e: u32) -> u64 {
    let mut x = (m as f64).powf(1.0 / e as f64).floor() as u64;
    x = x.saturating_sub(2);
    while (x as u128).checked_pow(e).is_some_and(|p| p < m) {
        x += 1;
    }
    x
}

/// Parameters `(k, q)` of one Linial step from palette `m`: prime `q > k *
/// delta` with `q^(k+1) >= m`, minimizing the new palette `q^2`.
pub fn linial_parameters(m: u128, delta: usize) -> (u32, u64) {
    let mut best: Option<(u32, u64)> = None;
    for k in 1..=64u32 {
        let floor = (k as u64 * delta as u64).max(ceil_root(m, k + 1).saturating_sub(1));
        let mut q = next_prime_above(floor);
        while (q as u128).checked_pow(k + 1).is_some_and(|p| p < m) {
            q = next_prime_above(q);
        }
        if best.map_or(true, |(_, bq)| q < bq) {
            best = Some((k, q));
        }
    }
    best.expect("k = 1 always yields a candidate")
}

/// Palette reached by Linial steps from the full 64-bit identifier space;
/// the reduction phase always starts here so its length does not depend on
/// `n`.
pub fn linial_fixed_point(delta: usize) -> usize {
    let mut m: u128 = 1 << 64;
    loop {
        let (_, q) = linial_parameters(m, delta);
        let next = q as u128 * q as u128;
        if next >= m {
            return m.min(u128::from(u64::MAX)) as usize;
        }
        m = next;
    }
}

fn poly_eval(mut color: u128, q: u64, k: u32, x: u64) -> u64 {
    let q = q as u128;
    let mut coeffs = Vec::with_capacity(k as usize + 1);
    for _ in 0..=k {
        coeffs.push(color % q);
        color /= q;
    }
    coeffs.iter().rev().fold(0u128, |acc, &c| (acc * x as u128 + c) % q) as u64
}

/// One Linial step: color `c` becomes `(alpha, f_c(alpha))` for the
/// smallest `alpha` where `f_c` differs from every neighbor's polynomial.
fn linial_step(colors: &[u128], sq: &[Vec<usize>], k: u32, q: u64) -> Vec<u128> {
    colors
        .iter()
        .enumerate()
        .map(|(v, &c)| {
            let alpha = (0..q)
                .find(|&a| {
                    let mine = poly_eval(c, q, k, a);
                    sq[v].iter().all(|&u| poly_eval(colors[u], q, k, a) != mine)
                })
                .expect("q > k * delta leaves a separating point");
            alpha as u128 * q as u128 + poly_eval(c, q, k, alpha) as u128
        })
        .collect()
}

/// Proper coloring of `G^2` from distinct identifiers.
pub fn two_hop_coloring(adj: &[Vec<usize>], ids: &[u64]) -> Coloring {
    let n = adj.len();
    assert_eq!(ids.len(), n, "one identifier per node");
    let sq = square_graph(adj);
    let delta = sq.iter().map(Vec::len).max().unwrap_or(0);
    if n == 0 || delta == 0 {
        return Coloring {
            colors: vec![0; n],
            palette: usize::from(n > 0),
            reduction_start: usize::from(n > 0),
            linial_steps: 0,
            reduction_rounds: 0,
            rounds: 0,
        };
    }
    let palette = delta + 1;
    let start = linial_fixed_point(delta);

    let mut colors: Vec<u128> = ids.iter().map(|&i| i as u128).collect();
    let mut m: u128 = colors.iter().max().map_or(1, |&c| c + 1);
    let mut linial_steps = 0;
    while m > start as u128 {
        let (k, q) = linial_parameters(m, delta);
        let next = q as u128 * q as u128;
        assert!(next < m, "Linial step must shrink the palette");
        colors = linial_step(&colors, &sq, k, q);
        m = next;
        linial_steps += 1;
    }

    let mut colors: Vec<usize> = colors.into_iter().map(|c| c as usize).collect();
    let mut reduction_rounds = 0;
    for c in (palette..start).rev() {
        reduction_rounds += 1;
        let class: Vec<usize> = (0..n).filter(|&v| colors[v] == c).collect();
        let snapshot = colors.clone();
        for v in class {
            let mut used = vec![false; palette];
            for &u in &sq[v] {
                if snapshot[u] < palette {
                    used[snapshot[u]] = true;
                }
            }
            colors[v] = used.iter().position(|&b| !b).expect("delta + 1 colors leave one free");
        }
    }
    Coloring {
        colors,
        palette,
        reduction_start: start,
        linial_steps,
        reduction_rounds,
        rounds: linial_steps + reduction_rounds,
    }
}

/// No two nodes within distance 2 share a color.
pub fn is_two_hop_proper(adj: &[Vec<usize>], colors: &[usize]) -> bool {
    square_graph(adj)
        .iter()
        .enumerate()
        .all(|(v, ns)| ns.iter().all(|&u| colors[u] != colors[v]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> Vec<Vec<usize>> {
        (0..n)
            .map(|v| {
                let mut ns = Vec::new();
                if v > 0 {
                    ns.push(v - 1);
                }
                if v + 1 < n {
                    ns.push(v + 1);
                }
                ns
            })
            .collect()
    }

    fn complete(n: usize) -> Vec<Vec<usize>> {
        (0..n).map(|v| (0..n).filter(|&u| u != v).collect()).collect()
    }

    fn seq(n: usize) -> Vec<u64> {
        (0..n as u64).collect()
    }

    #[test]
    fn single_node() {
        let c = two_hop_coloring(&[vec![]], &[7]);
        assert_eq!(c.colors, vec![0]);
        assert_eq!(c.palette, 1);
        assert_eq!(c.rounds, 0);
    }

    #[test]
    fn complete_graph_needs_four() {
        let adj = complete(4);
        let c = two_hop_coloring(&adj, &seq(4));
        assert!(is_two_hop_proper(&adj, &c.colors));
        assert_eq!(c.distinct_colors(), 4);
        assert_eq!(c.palette, 4);
    }

    #[test]
    fn path_of_five() {
        let adj = path(5);
        let c = two_hop_coloring(&adj, &[40, 3, 1000, 17, 2]);
        assert!(is_two_hop_proper(&adj, &c.colors));
        assert!(c.distinct_colors() <= 5);
        assert_eq!(c.palette, 5);
    }

    #[test]
    fn huge_ids_handled() {
        let adj = path(30);
        let ids: Vec<u64> = (0..30).map(|i| u64::MAX - 7919 * i).collect();
        let c = two_hop_coloring(&adj, &ids);
        assert!(is_two_hop_proper(&adj, &c.colors));
        assert!(c.linial_steps >= 2);
    }

    #[test]
    fn linial_parameters_satisfy_constraints() {
        for delta in [1usize, 4, 8, 16, 36] {
            for m in [10u128, 1000, 1 << 20, 1 << 64] {
                let (k, q) = linial_parameters(m, delta);
                assert!(is_prime(q));
                assert!(q > k as u64 * delta as u64);
                assert!((q as u128).pow(k + 1) >= m);
            }
        }
    }

    #[test]
    fn fixed_point_is_reached_from_below() {
        for delta in [2usize, 8, 16] {
            let k = linial_fixed_point(delta) as u128;
            for m in (k + 1)..(k + 2000) {
                let (_, q) = linial_parameters(m, delta);
                assert!((q as u128) * (q as u128) < m || m <= k, "delta {delta}, m {m}");
            }
        }
    }

    #[test]
    fn polynomial_digits() {
        assert_eq!(poly_eval(0, 5, 2, 3), 0);
        assert_eq!(poly_eval(1, 5, 2, 3), 1);
        assert_eq!(poly_eval(5, 5, 2, 3), 3);
        assert_eq!(poly_eval(25, 5, 2, 3), 4);
    }
}
