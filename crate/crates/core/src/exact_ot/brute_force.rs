//! Exhaustive oracle for small instances.

use super::{cost_matrix, Matching, OTSolution, TransportPlan};
use crate::error::{Error, Result};
use crate::measures::DiscreteMeasure;

pub const MAX_UNIFORM_ATOMS: usize = 8;
pub const MAX_TOTAL_ATOMS: usize = 8;

/// Tie tolerance when collecting all optimal matchings.
const TIE_TOL: f64 = 1e-9;

/// Result of exhaustive enumeration.
#[derive(Debug, Clone)]
pub struct BruteForce {
    pub solution: OTSolution,
    /// Every optimal perfect matching (uniform case only; empty otherwise).
    pub optimal_matchings: Vec<Matching>,
    /// Number of distinct optimal vertex plans found.
    pub optimal_vertices: usize,
}

/// Exhaustive W2² between small measures.
///
/// Uniform equal-size measures with `k ≤ 8` enumerate all `k!` matchings;
/// anything else with `m + n ≤ 8` enumerates basic feasible plans of the
/// transportation polytope.
pub fn brute_force_w2(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<BruteForce> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), found: nu.dim() });
    }
    if mu.is_uniform() && nu.is_uniform() && mu.len() == nu.len() {
        if mu.len() > MAX_UNIFORM_ATOMS {
            return Err(Error::TooLarge { what: "atoms per measure", size: mu.len(), limit: MAX_UNIFORM_ATOMS });
        }
        return Ok(enumerate_matchings(mu, nu));
    }
    let total = mu.len() + nu.len();
    if total > MAX_TOTAL_ATOMS {
        return Err(Error::TooLarge { what: "total atoms", size: total, limit: MAX_TOTAL_ATOMS });
    }
    Ok(enumerate_vertices(mu, nu))
}

fn enumerate_matchings(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> BruteForce {
    let k = mu.len();
    let cost = cost_matrix(mu, nu);
    let mut perms = Vec::new();
    let mut current = Vec::with_capacity(k);
    let mut used = vec![false; k];
    permutations(k, &mut current, &mut used, &mut perms);

    let costs: Vec<f64> = perms.iter().map(|p| p.iter().enumerate().map(|(i, &j)| cost[i * k + j]).sum()).collect();
    let best = costs.iter().cloned().fold(f64::INFINITY, f64::min);
    let optimal: Vec<Matching> = perms
        .iter()
        .zip(&costs)
        .filter(|(_, &c)| c - best <= TIE_TOL * best.max(1.0))
        .map(|(p, _)| Matching::new(p.clone()).expect("enumerated permutation"))
        .collect();
    let w = 1.0 / k as f64;
    let first = &optimal[0];
    let entries = (0..k).map(|i| (i, first.target(i), w)).collect();
    let plan = TransportPlan::from_entries(entries, mu, nu);
    let solution = OTSolution {
        w2_squared: plan.cost,
        is_perfect_matching: true,
        matching: Some(first.clone()),
        unique: Some(optimal.len() == 1),
        plan,
    };
    BruteForce { solution, optimal_vertices: optimal.len(), optimal_matchings: optimal }
}

fn permutations(k: usize, current: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
    if current.len() == k {
        out.push(current.clone());
        return;
    }
    for j in 0..k {
        if !used[j] {
            used[j] = true;
            current.push(j);
            permutations(k, current, used, out);
            current.pop();
            used[j] = false;
        }
    }
}

/// Every vertex of the transportation polytope arises from repeatedly
/// saturating some cell with both its row and column still open: a vertex's
/// support is a forest, and a leaf cell of that forest carries exactly the
/// remaining mass of its leaf node.
fn enumerate_vertices(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> BruteForce {
    let (m, n) = (mu.len(), nu.len());
    let cost = cost_matrix(mu, nu);
    let mut plans: Vec<Vec<f64>> = Vec::new();
    let mut flow = vec![0.0; m * n];
    let mut s = mu.weights().to_vec();
    let mut d = nu.weights().to_vec();
    split_mass(m, n, &mut s, &mut d, &mut flow, &mut plans);

    let cost_of = |p: &Vec<f64>| p.iter().zip(&cost).map(|(f, c)| f * c).sum::<f64>();
    let best = plans.iter().map(cost_of).fold(f64::INFINITY, f64::min);
    let tol = TIE_TOL * best.max(1.0);
    let mut optimal: Vec<Vec<f64>> = Vec::new();
    for p in plans.iter().filter(|p| cost_of(p) - best <= tol) {
        if !optimal.iter().any(|q| q.iter().zip(p).all(|(a, b)| (a - b).abs() <= 1e-12)) {
            optimal.push(p.clone());
        }
    }
    let plan_flow = &optimal[0];
    let entries = (0..m * n)
        .filter(|&c| plan_flow[c] > super::ZERO_MASS)
        .map(|c| (c / n, c % n, plan_flow[c]))
        .collect();
    let plan = TransportPlan::from_entries(entries, mu, nu);
    let matching = plan.perfect_matching(mu, nu);
    let solution = OTSolution {
        w2_squared: plan.cost,
        is_perfect_matching: matching.is_some(),
        matching,
        unique: Some(optimal.len() == 1),
        plan,
    };
    BruteForce { solution, optimal_matchings: Vec::new(), optimal_vertices: optimal.len() }
}

fn split_mass(m: usize, n: usize, s: &mut [f64], d: &mut [f64], flow: &mut [f64], out: &mut Vec<Vec<f64>>) {
    let open = |x: f64| x > 1e-13;
    let mut any = false;
    for i in 0..m {
        if !open(s[i]) {
            continue;
        }
        for j in 0..n {
            if !open(d[j]) {
                continue;
            }
            any = true;
            let q = s[i].min(d[j]);
            let (si, dj) = (s[i], d[j]);
            flow[i * n + j] += q;
            s[i] -= q;
            d[j] -= q;
            split_mass(m, n, s, d, flow, out);
            flow[i * n + j] -= q;
            s[i] = si;
            d[j] = dj;
        }
    }
    if !any {
        out.push(flow.to_vec());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::presets;

    #[test]
    fn cross_has_two_optimal_matchings() {
        let bf = brute_force_w2(&presets::cross_source(), &presets::cross_target()).unwrap();
        assert_eq!(bf.solution.w2_squared, 4.0);
        assert_eq!(bf.optimal_matchings.len(), 2);
        assert_eq!(bf.solution.unique, Some(false));
    }

    #[test]
    fn singletons() {
        let a = DiscreteMeasure::uniform(vec![vec![0.0, 0.0]]).unwrap();
        let b = DiscreteMeasure::uniform(vec![vec![3.0, 4.0]]).unwrap();
        let bf = brute_force_w2(&a, &b).unwrap();
        assert_eq!(bf.solution.w2_squared, 25.0);
        assert_eq!(bf.solution.unique, Some(true));
    }

    #[test]
    fn split_vertex_enumeration() {
        let (mu, nu) = presets::split();
        let bf = brute_force_w2(&mu, &nu).unwrap();
        assert_eq!(bf.solution.w2_squared, 2.0);
        assert!(!bf.solution.is_perfect_matching);
        assert_eq!(bf.optimal_vertices, 1);
    }

    #[test]
    fn nonuniform_two_by_two() {
        // 0.7 at 0 and 0.3 at 10; targets 0.4 at 1 and 0.6 at 11; monotone plan is optimal
        let mu = DiscreteMeasure::new(vec![vec![0.0], vec![10.0]], vec![0.7, 0.3]).unwrap();
        let nu = DiscreteMeasure::new(vec![vec![1.0], vec![11.0]], vec![0.4, 0.6]).unwrap();
        let bf = brute_force_w2(&mu, &nu).unwrap();
        let expect = 0.4 * 1.0 + 0.3 * 121.0 + 0.3 * 1.0;
        assert!((bf.solution.w2_squared - expect).abs() < 1e-12);
    }

    #[test]
    fn too_large() {
        let pts: Vec<Vec<f64>> = (0..9).map(|i| vec![i as f64]).collect();
        let m = DiscreteMeasure::uniform(pts).unwrap();
        assert!(matches!(brute_force_w2(&m, &m), Err(Error::TooLarge { .. })));
    }
}
