//! Exact W2 between discrete measures.

mod assignment;
mod brute_force;
mod matching;
mod simplex;
mod uniqueness;

pub use assignment::{solve_assignment, Assignment};
pub use brute_force::{brute_force_w2, BruteForce, MAX_TOTAL_ATOMS, MAX_UNIFORM_ATOMS};
pub use matching::{Matching, Pairing};
pub use simplex::{solve_transport, SimplexResult};
pub use uniqueness::is_unique_optimal;

use crate::error::{Error, Result};
use crate::measures::{sq_dist, DiscreteMeasure};

/// Plan entries at or below this mass are dropped.
pub(crate) const ZERO_MASS: f64 = 1e-14;

/// Sparse coupling between two measures.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    /// `(i, j, mass)` with mass > 0, sorted by `(i, j)`.
    pub entries: Vec<(usize, usize, f64)>,
    /// `Σ mass · ‖x_i − y_j‖²`.
    pub cost: f64,
}

impl TransportPlan {
    pub fn from_entries(mut entries: Vec<(usize, usize, f64)>, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Self {
        entries.retain(|e| e.2 > ZERO_MASS);
        entries.sort_by_key(|e| (e.0, e.1));
        let cost = entries.iter().map(|&(i, j, w)| w * sq_dist(mu.point(i), nu.point(j))).sum();
        TransportPlan { entries, cost }
    }

    pub fn row_sums(&self, m: usize) -> Vec<f64> {
        let mut s = vec![0.0; m];
        for &(i, _, w) in &self.entries {
            s[i] += w;
        }
        s
    }

    pub fn col_sums(&self, n: usize) -> Vec<f64> {
        let mut s = vec![0.0; n];
        for &(_, j, w) in &self.entries {
            s[j] += w;
        }
        s
    }

    /// Dense row-major `m × n` copy.
    pub fn dense(&self, m: usize, n: usize) -> Vec<f64> {
        let mut d = vec![0.0; m * n];
        for &(i, j, w) in &self.entries {
            d[i * n + j] += w;
        }
        d
    }

    /// The matching this plan realizes, if every source row sends its full
    /// weight to a single distinct target of equal weight.
    pub fn perfect_matching(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Option<Matching> {
        let k = mu.len();
        if nu.len() != k || self.entries.len() != k {
            return None;
        }
        let mut perm = vec![usize::MAX; k];
        for &(i, j, w) in &self.entries {
            if perm[i] != usize::MAX
                || (w - mu.weights()[i]).abs() > 1e-9
                || (w - nu.weights()[j]).abs() > 1e-9
            {
                return None;
            }
            perm[i] = j;
        }
        Matching::new(perm).ok()
    }

    /// Marginal errors `(max row error, max column error)`.
    pub fn marginal_error(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> (f64, f64) {
        let err = |s: Vec<f64>, w: &[f64]| s.iter().zip(w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        (err(self.row_sums(mu.len()), mu.weights()), err(self.col_sums(nu.len()), nu.weights()))
    }
}

/// Optimal plan plus its structure.
#[derive(Debug, Clone)]
pub struct OTSolution {
    pub plan: TransportPlan,
    pub w2_squared: f64,
    pub is_perfect_matching: bool,
    pub matching: Option<Matching>,
    pub unique: Option<bool>,
}

impl OTSolution {
    pub fn w2(&self) -> f64 {
        self.w2_squared.max(0.0).sqrt()
    }
}

/// Row-major squared-distance matrix.
pub fn cost_matrix(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Vec<f64> {
    sq_dist_matrix(mu.points(), nu.points())
}

pub(crate) fn sq_dist_matrix(xs: &[Vec<f64>], ys: &[Vec<f64>]) -> Vec<f64> {
    let mut c = Vec::with_capacity(xs.len() * ys.len());
    for x in xs {
        for y in ys {
            c.push(sq_dist(x, y));
        }
    }
    c
}

/// Optimal plan without the uniqueness analysis.
pub(crate) fn solve_plan(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<TransportPlan> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), found: nu.dim() });
    }
    let cost = cost_matrix(mu, nu);
    let entries = if mu.is_uniform() && nu.is_uniform() && mu.len() == nu.len() {
        let k = mu.len();
        let a = solve_assignment(&cost, k);
        let w = 1.0 / k as f64;
        a.row_to_col.iter().enumerate().map(|(i, &j)| (i, j, w)).collect()
    } else {
        let n = nu.len();
        let r = solve_transport(mu.weights(), nu.weights(), &cost);
        r.flow.iter().enumerate().filter(|(_, &f)| f > ZERO_MASS).map(|(c, &f)| (c / n, c % n, f)).collect()
    };
    Ok(TransportPlan::from_entries(entries, mu, nu))
}

/// Exact W2² with an optimal vertex plan, its matching structure and a
/// uniqueness verdict.
pub fn solve_w2(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<OTSolution> {
    let plan = solve_plan(mu, nu)?;
    let matching = plan.perfect_matching(mu, nu);
    let mut sol = OTSolution {
        w2_squared: plan.cost,
        is_perfect_matching: matching.is_some(),
        matching,
        unique: None,
        plan,
    };
    sol.unique = Some(is_unique_optimal(mu, nu, &sol)?);
    Ok(sol)
}

/// Cheapest total cost `Σ ‖x_i − y_π(i)‖²` over perfect matchings `π ≠ best`.
///
/// Each edge of `best` is forbidden in turn and the assignment re-solved.
pub fn second_best_matching_cost(points_x: &[Vec<f64>], points_y: &[Vec<f64>], best: &Matching) -> Result<f64> {
    let k = points_x.len();
    if points_y.len() != k || best.len() != k {
        return Err(Error::Invalid("point lists and matching must have equal length".into()));
    }
    if k < 2 {
        return Err(Error::Precondition("a single pair has no second matching".into()));
    }
    let mut cost = sq_dist_matrix(points_x, points_y);
    let cmax = cost.iter().cloned().fold(0.0, f64::max);
    let forbidden = 2.0 * (k as f64) * (cmax + 1.0);
    let mut second = f64::INFINITY;
    for i in 0..k {
        let cell = i * k + best.target(i);
        let saved = cost[cell];
        cost[cell] = forbidden;
        second = second.min(solve_assignment(&cost, k).cost);
        cost[cell] = saved;
    }
    Ok(second)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{presets, Translation};

    fn mu1() -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        (vec![vec![-1.0, -0.9], vec![1.0, 0.9]], vec![vec![-1.0, 1.0], vec![1.0, -1.0]])
    }

    #[test]
    fn cross_instance() {
        let sol = solve_w2(&presets::cross_source(), &presets::cross_target()).unwrap();
        assert_eq!(sol.w2_squared, 4.0);
        assert!(sol.is_perfect_matching);
        assert_eq!(sol.unique, Some(false));
    }

    #[test]
    fn identical_measures() {
        let m = presets::mu_k(2);
        let sol = solve_w2(&m, &m).unwrap();
        assert_eq!(sol.w2_squared, 0.0);
        assert_eq!(sol.matching, Some(Matching::identity(2)));
        assert_eq!(sol.unique, Some(true));
    }

    #[test]
    fn two_diracs() {
        let a = DiscreteMeasure::uniform(vec![vec![1.0, 2.0]]).unwrap();
        let b = DiscreteMeasure::uniform(vec![vec![4.0, -2.0]]).unwrap();
        let sol = solve_w2(&a, &b).unwrap();
        assert_eq!(sol.w2_squared, 25.0);
        assert_eq!(sol.unique, Some(true));
    }

    #[test]
    fn mu1_is_unique() {
        let sol = solve_w2(&presets::mu_k(1), &presets::cross_target()).unwrap();
        assert_eq!(sol.unique, Some(true));
        assert_eq!(sol.matching, Some(Matching::identity(2)));
    }

    #[test]
    fn dimension_mismatch() {
        let a = DiscreteMeasure::uniform(vec![vec![0.0]]).unwrap();
        let b = DiscreteMeasure::uniform(vec![vec![0.0, 0.0]]).unwrap();
        assert!(matches!(solve_w2(&a, &b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn split_is_not_a_matching() {
        let (mu, nu) = presets::split();
        let sol = solve_w2(&mu, &nu).unwrap();
        assert_eq!(sol.w2_squared, 2.0);
        assert!(!sol.is_perfect_matching);
        assert_eq!(sol.plan.entries.len(), 2);
        assert_eq!(sol.unique, Some(true));
    }

    #[test]
    fn second_best_mu1() {
        let (x, y) = mu1();
        let best = Matching::identity(2);
        assert!((best.cost(&x, &y) - 7.22).abs() < 1e-12);
        let second = second_best_matching_cost(&x, &y, &best).unwrap();
        assert!((second - 8.02).abs() < 1e-12);
    }

    #[test]
    fn second_best_cross_has_no_gap() {
        let x = presets::cross_source().points().to_vec();
        let y = presets::cross_target().points().to_vec();
        let best = Matching::identity(2);
        assert_eq!(best.cost(&x, &y), 8.0);
        assert_eq!(second_best_matching_cost(&x, &y, &best).unwrap(), 8.0);
    }

    #[test]
    fn second_best_k2_is_the_swap() {
        let x = vec![vec![0.0], vec![3.0]];
        let y = vec![vec![1.0], vec![5.0]];
        let best = Matching::identity(2);
        let swap = Matching::new(vec![1, 0]).unwrap();
        assert_eq!(second_best_matching_cost(&x, &y, &best).unwrap(), swap.cost(&x, &y));
    }

    #[test]
    fn second_best_needs_two_pairs() {
        let r = second_best_matching_cost(&[vec![0.0]], &[vec![1.0]], &Matching::identity(1));
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn translation_keeps_matching() {
        let mu = presets::mu_k(3);
        let nu = presets::cross_target();
        let t = Translation::new(vec![0.75, -2.5]);
        let a = solve_w2(&mu, &nu).unwrap();
        let b = solve_w2(&mu.translate(&t).unwrap(), &nu.translate(&t).unwrap()).unwrap();
        assert_eq!(a.matching, b.matching);
        assert!((a.w2_squared - b.w2_squared).abs() < 1e-9);
    }
}
