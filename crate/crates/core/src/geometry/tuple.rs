use serde::{Deserialize, Serialize};

use super::GeometryError;

/// A point of `[0, 1]^r` (or slightly beyond, for requirement tuples).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Tuple {
    coords: Vec<f64>,
}

impl Tuple {
    pub fn new(coords: Vec<f64>) -> Result<Self, GeometryError> {
        if coords.is_empty() {
            return Err(GeometryError::InvalidTuple("rank must be at least 1".into()));
        }
        for (i, &c) in coords.iter().enumerate() {
            if !c.is_finite() || c < 0.0 {
                return Err(GeometryError::InvalidTuple(format!(
                    "coordinate {i} is {c}; coordinates must be finite and non-negative"
                )));
            }
        }
        Ok(Self { coords })
    }

    pub fn splat(r: usize, value: f64) -> Result<Self, GeometryError> {
        Self::new(vec![value; r])
    }

    pub fn rank(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn get(&self, i: usize) -> f64 {
        self.coords[i]
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coords
    }

    /// Component-wise `self >= other - slack`.
    pub fn dominates(&self, other: &Tuple, slack: f64) -> bool {
        self.rank() == other.rank()
            && self.coords.iter().zip(&other.coords).all(|(a, b)| *a >= *b - slack)
    }

    /// Max-norm distance.
    pub fn max_dist(&self, other: &Tuple) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// The same tuple with coordinate `k` removed.
    pub fn without(&self, k: usize) -> Vec<f64> {
        self.coords
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != k)
            .map(|(_, c)| *c)
            .collect()
    }

    /// Inserts `value` at position `k` of `prefix`.
    pub fn with_inserted(prefix: &[f64], k: usize, value: f64) -> Result<Self, GeometryError> {
        if k > prefix.len() {
            return Err(GeometryError::InvalidTuple(format!(
                "index {k} out of range for a rank-{} tuple",
                prefix.len() + 1
            )));
        }
        let mut coords = prefix.to_vec();
        coords.insert(k, value);
        Self::new(coords)
    }
}

/// Edge weights `a_ij` on the skeleton of a rank-`r` hyperedge.
///
/// Stored as a dense `r x r` row-major matrix; the diagonal is unused and
/// kept at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    r: usize,
    weights: Vec<f64>,
}

impl Generator {
    /// Builds a generator from a dense row-major `r x r` matrix, ignoring the
    /// diagonal.
    pub fn from_matrix(r: usize, weights: Vec<f64>) -> Result<Self, GeometryError> {
        if r == 0 {
            return Err(GeometryError::InvalidGenerator("rank must be at least 1".into()));
        }
        if weights.len() != r * r {
            return Err(GeometryError::InvalidGenerator(format!(
                "expected {} weights for rank {r}, got {}",
                r * r,
                weights.len()
            )));
        }
        let mut g = Self { r, weights };
        for i in 0..r {
            g.weights[i * r + i] = 0.0;
        }
        g.validate()?;
        Ok(g)
    }

    /// Builds a generator from a closure over ordered pairs `i != j`.
    pub fn from_fn(r: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self, GeometryError> {
        let mut weights = vec![0.0; r * r];
        for i in 0..r {
            for j in 0..r {
                if i != j {
                    weights[i * r + j] = f(i, j);
                }
            }
        }
        Self::from_matrix(r, weights)
    }

    /// The generator with every weight equal to `value` (valid for `value <= 1/2`).
    pub fn uniform(r: usize, value: f64) -> Result<Self, GeometryError> {
        Self::from_fn(r, |_, _| value)
    }

    /// Tight generator `a_ij = w_i / (w_i + w_j)` for positive weights `w`.
    ///
    /// The larger weight of each pair is computed by division and the smaller
    /// one as its complement, so every pair sums to exactly 1 in floating
    /// point.
    pub fn from_weights(w: &[f64]) -> Result<Self, GeometryError> {
        let r = w.len();
        let mut weights = vec![0.0; r * r];
        for i in 0..r {
            for j in (i + 1)..r {
                let (big, small) = if w[i] >= w[j] { (i, j) } else { (j, i) };
                let hi = w[big] / (w[big] + w[small]);
                weights[big * r + small] = hi;
                weights[small * r + big] = 1.0 - hi;
            }
        }
        Self::from_matrix(r, weights)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let r = self.r;
        for i in 0..r {
            for j in 0..r {
                if i == j {
                    continue;
                }
                let a = self.weights[i * r + j];
                if !a.is_finite() || !(0.0..=1.0).contains(&a) {
                    return Err(GeometryError::InvalidGenerator(format!(
                        "weight a_{}{} = {a} is outside [0, 1]",
                        i + 1,
                        j + 1
                    )));
                }
                if i < j {
                    let back = self.weights[j * r + i];
                    if a + back > 1.0 {
                        return Err(GeometryError::InvalidGenerator(format!(
                            "pair ({}, {}): a_{}{} + a_{}{} = {} exceeds 1",
                            i + 1,
                            j + 1,
                            i + 1,
                            j + 1,
                            j + 1,
                            i + 1,
                            a + back
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn rank(&self) -> usize {
        self.r
    }

    /// Weight `a_ij` (0-based indices).
    pub fn a(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.r + j]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.weights
    }

    /// True iff every off-diagonal weight is strictly positive.
    pub fn is_non_zero(&self) -> bool {
        (0..self.r).all(|i| (0..self.r).all(|j| i == j || self.a(i, j) > 0.0))
    }

    /// `prod_{l != i, l != skip} a_il`, with `skip = None` giving the full
    /// row product.
    pub fn row_product(&self, i: usize, skip: Option<usize>) -> f64 {
        (0..self.r)
            .filter(|&l| l != i && Some(l) != skip)
            .map(|l| self.a(i, l))
            .product()
    }

    /// The tuple of row products `a_i = prod_{j != i} a_ij`.
    pub fn generate(&self) -> Tuple {
        Tuple {
            coords: (0..self.r).map(|i| self.row_product(i, None)).collect(),
        }
    }

    /// Smallest distance of any weight to the ends of `[0, 1]`.
    pub fn interior_margin(&self) -> f64 {
        let mut m = f64::INFINITY;
        for i in 0..self.r {
            for j in 0..self.r {
                if i != j {
                    let a = self.a(i, j);
                    m = m.min(a.min(1.0 - a));
                }
            }
        }
        m
    }
}

/// Generates the tuple of a generator; the free-function form of
/// [`Generator::generate`].
pub fn generate(g: &Generator) -> Result<Tuple, GeometryError> {
    g.validate()?;
    Ok(g.generate())
}
