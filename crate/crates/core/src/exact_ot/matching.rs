use crate::error::{Error, Result};
use crate::measures::sq_dist;

/// A perfect matching `i -> perm[i]` between two equal-size point sets.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Matching {
    perm: Vec<usize>,
}

impl Matching {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let k = perm.len();
        let mut seen = vec![false; k];
        for &j in &perm {
            if j >= k || seen[j] {
                return Err(Error::Invalid(format!("{perm:?} is not a permutation")));
            }
            seen[j] = true;
        }
        Ok(Matching { perm })
    }

    pub fn identity(k: usize) -> Self {
        Matching { perm: (0..k).collect() }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// Target index matched to source `i`.
    pub fn target(&self, i: usize) -> usize {
        self.perm[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.perm
    }

    /// `Σ_i ‖x_i − y_perm(i)‖²`, unweighted.
    pub fn cost(&self, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> f64 {
        self.perm.iter().enumerate().map(|(i, &j)| sq_dist(&xs[i], &ys[j])).sum()
    }
}

/// Matched pairs `(x_i, y_i)` after relabeling targets so the matching is
/// the identity. This is the form every certificate works on.
#[derive(Debug, Clone, PartialEq)]
pub struct Pairing {
    xs: Vec<Vec<f64>>,
    ys: Vec<Vec<f64>>,
}

impl Pairing {
    pub fn new(points_x: &[Vec<f64>], points_y: &[Vec<f64>], matching: &Matching) -> Result<Self> {
        if points_x.len() != points_y.len() || points_x.len() != matching.len() {
            return Err(Error::Invalid(format!(
                "length mismatch: {} sources, {} targets, matching of size {}",
                points_x.len(),
                points_y.len(),
                matching.len()
            )));
        }
        if points_x.is_empty() {
            return Err(Error::Invalid("empty pairing".into()));
        }
        let dim = points_x[0].len();
        for p in points_x.iter().chain(points_y) {
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: p.len() });
            }
        }
        let ys = (0..matching.len()).map(|i| points_y[matching.target(i)].clone()).collect();
        Ok(Pairing { xs: points_x.to_vec(), ys })
    }

    /// Pairs `(xs[i], ys[i])` directly.
    pub fn identity(xs: Vec<Vec<f64>>, ys: Vec<Vec<f64>>) -> Result<Self> {
        let m = Matching::identity(xs.len());
        Pairing::new(&xs, &ys, &m)
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.xs[0].len()
    }

    pub fn xs(&self) -> &[Vec<f64>] {
        &self.xs
    }

    pub fn ys(&self) -> &[Vec<f64>] {
        &self.ys
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.xs[i]
    }

    pub fn y(&self, i: usize) -> &[f64] {
        &self.ys[i]
    }

    /// Every point multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Pairing {
        let scale = |v: &Vec<Vec<f64>>| v.iter().map(|p| p.iter().map(|c| c * s).collect()).collect();
        Pairing { xs: scale(&self.xs), ys: scale(&self.ys) }
    }

    /// Largest pairwise distance over all sources and targets.
    pub fn diameter(&self) -> f64 {
        let all: Vec<&Vec<f64>> = self.xs.iter().chain(&self.ys).collect();
        let mut best = 0.0f64;
        for (a, p) in all.iter().enumerate() {
            for q in &all[a + 1..] {
                best = best.max(sq_dist(p, q));
            }
        }
        best.sqrt()
    }
}
