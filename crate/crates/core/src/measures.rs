//! Finitely supported probability measures on R^d.
//!
//! A [`DiscreteMeasure`] is a list of distinct atoms with strictly positive
//! weights summing to one. Measures are immutable once validated; every
//! transform returns a fresh measure.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weight sums within this distance of one are accepted and renormalized.
pub const RENORMALIZE_TOL: f64 = 1e-9;

/// Post-validation bound on `|Σ w − 1|`.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// A weighted atom list `Σ w_i δ(p_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

/// A shift vector applied to every atom of a measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Translation(pub Vec<f64>);

impl Translation {
    pub fn new(vector: Vec<f64>) -> Self {
        Translation(vector)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn negated(&self) -> Translation {
        Translation(self.0.iter().map(|v| -v).collect())
    }
}

/// On-disk JSON layout. `dim` and `weights` are optional.
#[derive(Debug, Serialize, Deserialize)]
struct MeasureFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
    points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
}

impl DiscreteMeasure {
    /// Validates and builds a measure.
    ///
    /// Weights whose sum is off by more than [`WEIGHT_SUM_TOL`] but within
    /// [`RENORMALIZE_TOL`] are rescaled; anything further off is rejected.
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Invalid("measure has no atoms".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::Invalid(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::Invalid("points must have positive dimension".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: p.len() }
                    .context(format!("point {i}")));
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::Invalid(format!("point {i} has a non-finite coordinate")));
            }
        }
        for (i, &w) in weights.iter().enumerate() {
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::Invalid(format!("weight {i} is not positive: {w}")));
            }
        }
        check_distinct(&points)?;

        let sum: f64 = weights.iter().sum();
        let weights = if (sum - 1.0).abs() <= WEIGHT_SUM_TOL {
            weights
        } else if (sum - 1.0).abs() <= RENORMALIZE_TOL {
            weights.iter().map(|w| w / sum).collect()
        } else {
            return Err(Error::Invalid(format!("weights sum to {sum}, not 1")));
        };

        Ok(DiscreteMeasure { dim, points, weights })
    }

    /// Equal weights `1/k` on `k` distinct points.
    pub fn uniform(points: Vec<Vec<f64>>) -> Result<Self> {
        let k = points.len();
        if k == 0 {
            return Err(Error::Invalid("measure has no atoms".into()));
        }
        let w = 1.0 / k as f64;
        DiscreteMeasure::new(points, vec![w; k])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    /// True when every weight equals `1/k` up to rounding.
    pub fn is_uniform(&self) -> bool {
        let w = 1.0 / self.len() as f64;
        self.weights.iter().all(|&v| (v - w).abs() <= 1e-12)
    }

    /// Shifts every atom by `t`. Weights are unchanged.
    pub fn translate(&self, t: &Translation) -> Result<Self> {
        if t.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: t.dim() });
        }
        let points: Vec<Vec<f64>> = self
            .points
            .iter()
            .map(|p| p.iter().zip(&t.0).map(|(a, b)| a + b).collect())
            .collect();
        check_distinct(&points)?;
        Ok(DiscreteMeasure { dim: self.dim, points, weights: self.weights.clone() })
    }

    /// Reads the JSON measure format from a byte stream.
    pub fn load<R: Read>(source: R) -> Result<Self> {
        let file: MeasureFile = serde_json::from_reader(source)?;
        let k = file.points.len();
        let measure = match file.weights {
            Some(w) => DiscreteMeasure::new(file.points, w)?,
            None => DiscreteMeasure::uniform(file.points)?,
        };
        if let Some(dim) = file.dim {
            if dim != measure.dim {
                return Err(Error::DimensionMismatch { expected: dim, found: measure.dim }
                    .context(format!("declared dim vs {k} points")));
            }
        }
        Ok(measure)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Self::load(s.as_bytes())
    }

    /// JSON text with `dim`, `points` and explicit `weights`.
    pub fn to_json(&self) -> String {
        let file = MeasureFile {
            dim: Some(self.dim),
            points: self.points.clone(),
            weights: Some(self.weights.clone()),
        };
        serde_json::to_string(&file).expect("measure serializes")
    }

    /// Same atoms and weights, compared exactly and independent of order.
    pub fn same_as(&self, other: &DiscreteMeasure) -> bool {
        if self.dim != other.dim || self.len() != other.len() {
            return false;
        }
        self.points.iter().zip(&self.weights).all(|(p, w)| {
            other
                .points
                .iter()
                .zip(&other.weights)
                .any(|(q, v)| p == q && (w - v).abs() <= WEIGHT_SUM_TOL)
        })
    }
}

/// Same as [`DiscreteMeasure::load`].
pub fn load_measure<R: Read>(source: R) -> Result<DiscreteMeasure> {
    DiscreteMeasure::load(source)
}

/// Same as [`DiscreteMeasure::uniform`].
pub fn uniform_measure(points: Vec<Vec<f64>>) -> Result<DiscreteMeasure> {
    DiscreteMeasure::uniform(points)
}

/// Same as [`DiscreteMeasure::translate`].
pub fn translate(m: &DiscreteMeasure, t: &Translation) -> Result<DiscreteMeasure> {
    m.translate(t)
}

fn check_distinct(points: &[Vec<f64>]) -> Result<()> {
    // coordinates are finite here, so partial_cmp is total
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].partial_cmp(&points[b]).unwrap());
    for w in order.windows(2) {
        if points[w[0]] == points[w[1]] {
            return Err(Error::DuplicatePoint(w[0].max(w[1])));
        }
    }
    Ok(())
}

/// Squared Euclidean distance.
#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preset measures from the two-point numerical study in R².
pub mod presets {
    use super::DiscreteMeasure;

    /// `½[δ(−1,−1) + δ(1,1)]`.
    pub fn cross_source() -> DiscreteMeasure {
        DiscreteMeasure::uniform(vec![vec![-1.0, -1.0], vec![1.0, 1.0]]).unwrap()
    }

    /// `½[δ(−1,1) + δ(1,−1)]`, the common target of the family.
    pub fn cross_target() -> DiscreteMeasure {
        DiscreteMeasure::uniform(vec![vec![-1.0, 1.0], vec![1.0, -1.0]]).unwrap()
    }

    /// `μ_k = ½[δ(−1, −1 + k/10) + δ(1, 1 − k/10)]`.
    pub fn mu_k(k: u32) -> DiscreteMeasure {
        let s = k as f64 / 10.0;
        DiscreteMeasure::uniform(vec![vec![-1.0, -1.0 + s], vec![1.0, 1.0 - s]]).unwrap()
    }

    /// One atom at the origin split evenly onto (1, 1) and (1, −1).
    pub fn split() -> (DiscreteMeasure, DiscreteMeasure) {
        let mu = DiscreteMeasure::uniform(vec![vec![0.0, 0.0]]).unwrap();
        let nu = DiscreteMeasure::uniform(vec![vec![1.0, 1.0], vec![1.0, -1.0]]).unwrap();
        (mu, nu)
    }

    /// `μ_1` and its translate by (0.5, 0.25).
    pub fn translation() -> (DiscreteMeasure, DiscreteMeasure) {
        let mu = mu_k(1);
        let nu = mu.translate(&super::Translation::new(vec![0.5, 0.25])).unwrap();
        (mu, nu)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_two_atom_measure() {
        let m = load_measure(r#"{"points": [[-1,-1],[1,1]], "weights": [0.5,0.5]}"#.as_bytes())
            .unwrap();
        assert_eq!(m.dim(), 2);
        assert_eq!(m.len(), 2);
        assert_eq!(m.weights(), &[0.5, 0.5]);
        assert_eq!(m, presets::cross_source());
    }

    #[test]
    fn loads_singleton() {
        let m = load_measure(r#"{"points": [[0]], "weights": [1.0]}"#.as_bytes()).unwrap();
        assert_eq!(m.points(), &[vec![0.0]]);
        assert_eq!(m.weights(), &[1.0]);
    }

    #[test]
    fn rejects_duplicate_point() {
        let err = load_measure(r#"{"points": [[0],[0]], "weights": [0.5,0.5]}"#.as_bytes())
            .unwrap_err();
        assert!(matches!(err, Error::DuplicatePoint(_)), "{err}");
    }

    #[test]
    fn rejects_bad_inputs() {
        for bad in [
            r#"{"points": [[0],[1]], "weights": [1.0, 0.0]}"#,
            r#"{"points": [[0],[1]], "weights": [0.7, 0.7]}"#,
            r#"{"points": [[0],[1, 2]]}"#,
            r#"{"dim": 3, "points": [[0, 1]]}"#,
            r#"{"points": [[0],[1]"#,
            r#"{"points": []}"#,
        ] {
            assert!(load_measure(bad.as_bytes()).is_err(), "{bad}");
        }
    }

    #[test]
    fn weights_default_to_uniform_and_renormalize() {
        let m = load_measure(r#"{"points": [[0],[1],[2]]}"#.as_bytes()).unwrap();
        assert!(m.is_uniform());
        let m = load_measure(r#"{"points": [[0],[1]], "weights": [0.5, 0.5000000001]}"#.as_bytes())
            .unwrap();
        let s: f64 = m.weights().iter().sum();
        assert!((s - 1.0).abs() <= WEIGHT_SUM_TOL);
    }

    #[test]
    fn uniform_weights() {
        let m = uniform_measure(vec![vec![-1.0, -1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(m.weights(), &[0.5, 0.5]);
        let m = uniform_measure(vec![vec![0.0, 0.0]]).unwrap();
        assert_eq!(m.weights(), &[1.0]);
        let nu = uniform_measure(vec![vec![-1.0, 1.0], vec![1.0, -1.0]]).unwrap();
        assert_eq!(nu, presets::cross_target());
        assert!(uniform_measure(vec![vec![1.0], vec![1.0]]).is_err());
    }

    #[test]
    fn translate_examples() {
        let d = uniform_measure(vec![vec![0.0, 0.0]]).unwrap();
        let moved = d.translate(&Translation::new(vec![1.0, 0.0])).unwrap();
        assert_eq!(moved.points(), &[vec![1.0, 0.0]]);

        let mu = presets::cross_source();
        assert_eq!(mu.translate(&Translation::new(vec![0.0, 0.0])).unwrap(), mu);
        let moved = mu.translate(&Translation::new(vec![2.0, 0.0])).unwrap();
        assert_eq!(moved.points(), &[vec![1.0, -1.0], vec![3.0, 1.0]]);
        assert_eq!(moved.weights(), mu.weights());

        assert!(mu.translate(&Translation::new(vec![1.0])).is_err());
    }

    #[test]
    fn presets_match_family() {
        let m1 = presets::mu_k(1);
        assert_eq!(m1.points(), &[vec![-1.0, -0.9], vec![1.0, 0.9]]);
        let m4 = presets::mu_k(4);
        assert_eq!(m4.points()[0][1], -0.6);
    }
}
