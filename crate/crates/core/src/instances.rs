//! Random instance families, and the per-instance checks that selfcheck and
//! the test suites run on them.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::certify::{max_quadratic_lambda, solve_potentials, ResidualFunction};
use crate::error::Result;
use crate::exact_ot::{second_best_matching_cost, solve_assignment, solve_w2, Matching, Pairing};
use crate::measures::{sq_dist, DiscreteMeasure};
use crate::robustness::estimate_r;

/// `k` distinct points in `R^d`: standard normal coordinates, or integers in
/// `[−3, 3]` when `lattice` is set (which produces ties).
pub fn random_points<R: Rng>(rng: &mut R, k: usize, d: usize, lattice: bool) -> Vec<Vec<f64>> {
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(k);
    while pts.len() < k {
        let p: Vec<f64> = (0..d)
            .map(|_| if lattice { rng.random_range(-3i32..=3) as f64 } else { rng.sample(StandardNormal) })
            .collect();
        if !pts.contains(&p) {
            pts.push(p);
        }
    }
    pts
}

/// Pair of uniform `k`-atom measures.
pub fn random_uniform_pair<R: Rng>(rng: &mut R, k: usize, d: usize, lattice: bool) -> (DiscreteMeasure, DiscreteMeasure) {
    let mu = DiscreteMeasure::uniform(random_points(rng, k, d, lattice)).expect("distinct points");
    let nu = DiscreteMeasure::uniform(random_points(rng, k, d, lattice)).expect("distinct points");
    (mu, nu)
}

/// Difference between the second-best and best matching sums, with the
/// optimal matching.
pub fn matching_gap(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<(f64, Matching)> {
    let k = mu.len();
    let mut cost = Vec::with_capacity(k * k);
    for x in mu.points() {
        for y in nu.points() {
            cost.push(sq_dist(x, y));
        }
    }
    let best = solve_assignment(&cost, k);
    let m = Matching::new(best.row_to_col)?;
    let second = second_best_matching_cost(mu.points(), nu.points(), &m)?;
    Ok((second - best.cost, m))
}

/// Largest distance between any two atoms of either measure.
pub fn joint_diameter(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
    let all: Vec<&Vec<f64>> = mu.points().iter().chain(nu.points()).collect();
    let mut d2: f64 = 0.0;
    for a in &all {
        for b in &all {
            d2 = d2.max(sq_dist(a, b));
        }
    }
    d2.sqrt()
}

/// Whether the optimum is either tied (`gap ≤ tie_tol`) or separated by
/// more than `8·k·diam·eps`. Perturbing each point by `eps` moves any
/// matching sum by at most about that much, so accepted instances are
/// either non-unique or robust beyond `eps`.
pub fn well_separated(mu: &DiscreteMeasure, nu: &DiscreteMeasure, eps: f64, tie_tol: f64) -> Result<bool> {
    let (gap, _) = matching_gap(mu, nu)?;
    let margin = 8.0 * mu.len() as f64 * joint_diameter(mu, nu) * eps;
    Ok(gap <= tie_tol || gap > margin)
}

/// The four characterizations of a unique optimal matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Verdicts {
    pub unique: bool,
    /// `λ* > 1e-8`.
    pub lambda_positive: bool,
    /// Potentials exist for the quadratic residual at `λ*/2`.
    pub potentials_valid: bool,
    /// `r_hat > 1e-3`.
    pub radius_positive: bool,
}

impl Verdicts {
    pub fn agree(&self) -> bool {
        let v = [self.unique, self.lambda_positive, self.potentials_valid, self.radius_positive];
        v.iter().all(|&b| b == v[0])
    }
}

/// Verdicts for a uniform pair with at least two atoms.
pub fn verdicts(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<Verdicts> {
    let sol = solve_w2(mu, nu)?;
    let m = sol.matching.clone().expect("uniform equal-size pairs have a matching optimum");
    let p = Pairing::new(mu.points(), nu.points(), &m)?;
    let lambda = max_quadratic_lambda(&p)?;
    let potentials_valid = lambda > 0.0 && solve_potentials(&p, &ResidualFunction::quadratic_y(lambda / 2.0)?)?.valid;
    Ok(Verdicts {
        unique: sol.unique == Some(true),
        lambda_positive: lambda > 1e-8,
        potentials_valid,
        radius_positive: estimate_r(&p)? > 1e-3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::child_rng;

    #[test]
    fn points_are_distinct() {
        let mut rng = child_rng(1, 0);
        for _ in 0..20 {
            let p = random_points(&mut rng, 7, 1, true);
            assert_eq!(p.len(), 7);
            assert!(p.iter().all(|v| v[0].fract() == 0.0 && v[0].abs() <= 3.0));
        }
    }

    #[test]
    fn cross_gap_is_zero() {
        let (mu, nu) = (crate::measures::presets::cross_source(), crate::measures::presets::cross_target());
        let (gap, _) = matching_gap(&mu, &nu).unwrap();
        assert_eq!(gap, 0.0);
        assert!(well_separated(&mu, &nu, 1e-3, 1e-9).unwrap());
        let v = verdicts(&mu, &nu).unwrap();
        assert!(v.agree() && !v.unique);
    }

    #[test]
    fn unique_instance_verdicts() {
        let v = verdicts(&crate::measures::presets::mu_k(2), &crate::measures::presets::cross_target()).unwrap();
        assert!(v.agree() && v.unique);
    }
}
