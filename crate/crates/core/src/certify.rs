//! Cyclical monotonicity and strong implementability certificates.
//!
//! Both questions reduce to negative-cycle detection on the complete digraph
//! over the matched pairs. Strong implementability is stated in the
//! inner-product form
//!
//! ```text
//! ⟨x_i, y_i − y_j⟩ ≥ φ_i − φ_j + f(i, j)
//! ```
//!
//! so potentials exist iff the arc weights `⟨x_i, y_i − y_j⟩ − f(i, j)` admit
//! no negative cycle, and shortest-path distances `v` give `φ = −v`.

use crate::error::{Error, Result};
use crate::exact_ot::Pairing;
use crate::measures::{dot, sq_dist};

/// Cycle weights below this count as negative.
pub const NEGATIVE_CYCLE_TOL: f64 = 1e-12;
/// Slack allowed when checking a certificate inequality directly.
pub const CERTIFICATE_TOL: f64 = 1e-9;
/// Upper end of the `λ*` search.
pub const LAMBDA_CAP: f64 = 1e6;
const LAMBDA_REL_TOL: f64 = 1e-10;
/// Below this, `λ` is within the resolution of the cycle test and reported as 0.
pub const LAMBDA_FLOOR: f64 = 1e-12;

/// A symmetric margin `f(i, j)` on index pairs, zero on the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub enum ResidualFunction {
    Zero,
    /// `(λ/2)·‖y_i − y_j‖²`.
    QuadraticY(f64),
    /// The margin certifying an `α`-strongly convex, `β`-smooth potential.
    ConvexSmooth { alpha: f64, beta: f64 },
    Table(Vec<Vec<f64>>),
}

impl ResidualFunction {
    pub fn quadratic_y(lambda: f64) -> Result<Self> {
        let r = ResidualFunction::QuadraticY(lambda);
        r.validate(None)?;
        Ok(r)
    }

    pub fn convex_smooth(alpha: f64, beta: f64) -> Result<Self> {
        let r = ResidualFunction::ConvexSmooth { alpha, beta };
        r.validate(None)?;
        Ok(r)
    }

    pub fn table(entries: Vec<Vec<f64>>) -> Result<Self> {
        let r = ResidualFunction::Table(entries);
        r.validate(None)?;
        Ok(r)
    }

    /// Checks parameters, and table shape when `k` is known.
    pub fn validate(&self, k: Option<usize>) -> Result<()> {
        match self {
            ResidualFunction::Zero => Ok(()),
            ResidualFunction::QuadraticY(l) => {
                if l.is_finite() && *l > 0.0 {
                    Ok(())
                } else {
                    Err(Error::Invalid(format!("quadratic residual needs λ > 0, got {l}")))
                }
            }
            ResidualFunction::ConvexSmooth { alpha, beta } => {
                if !(alpha.is_finite() && beta.is_finite()) || *alpha <= 0.0 {
                    Err(Error::Invalid(format!("need α > 0, got {alpha}")))
                } else if alpha >= beta {
                    Err(Error::Invalid(format!("need α < β, got α = {alpha}, β = {beta}")))
                } else {
                    Ok(())
                }
            }
            ResidualFunction::Table(t) => {
                let n = t.len();
                if let Some(k) = k {
                    if n != k {
                        return Err(Error::Invalid(format!("residual table is {n}×{n}, pairing has {k} pairs")));
                    }
                }
                for (i, row) in t.iter().enumerate() {
                    if row.len() != n {
                        return Err(Error::Invalid("residual table must be square".into()));
                    }
                    for (j, &v) in row.iter().enumerate() {
                        let ok = if i == j { v == 0.0 } else { v.is_finite() && v > 0.0 && v == t[j][i] };
                        if !ok {
                            return Err(Error::Invalid(format!("bad residual table entry ({i}, {j}) = {v}")));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, p: &Pairing, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        match self {
            ResidualFunction::Zero => 0.0,
            ResidualFunction::QuadraticY(l) => 0.5 * l * sq_dist(p.y(i), p.y(j)),
            ResidualFunction::ConvexSmooth { alpha, beta } => {
                let dx: Vec<f64> = p.x(i).iter().zip(p.x(j)).map(|(a, b)| a - b).collect();
                let dy: Vec<f64> = p.y(i).iter().zip(p.y(j)).map(|(a, b)| a - b).collect();
                (dot(&dx, &dx) + alpha * beta * dot(&dy, &dy) - 2.0 * alpha * dot(&dy, &dx)) / (2.0 * (beta - alpha))
            }
            ResidualFunction::Table(t) => t[i][j],
        }
    }
}

/// Verdict of the cyclical monotonicity check.
#[derive(Debug, Clone, PartialEq)]
pub struct Monotonicity {
    pub monotone: bool,
    /// Source indices `i_1 → i_2 → … → i_n → i_1`; reassigning each `x` to the
    /// next pair's `y` lowers the total cost.
    pub violating_cycle: Option<Vec<usize>>,
}

/// Potentials `φ_i` certifying strong implementability for `residual`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialCertificate {
    pub phi: Vec<f64>,
    pub residual: ResidualFunction,
    pub valid: bool,
    /// Negative cycle found when `valid` is false.
    pub negative_cycle: Option<Vec<usize>>,
}

impl PotentialCertificate {
    /// Smallest slack `⟨x_i, y_i − y_j⟩ − φ_i + φ_j − f(i, j)` over ordered pairs `i ≠ j`.
    pub fn min_slack(&self, p: &Pairing) -> f64 {
        let k = p.len();
        let mut worst = f64::INFINITY;
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    let s = inner_gain(p, i, j) - self.phi[i] + self.phi[j] - self.residual.eval(p, i, j);
                    worst = worst.min(s);
                }
            }
        }
        worst
    }
}

/// `⟨x_i, y_i − y_j⟩`.
pub fn inner_gain(p: &Pairing, i: usize, j: usize) -> f64 {
    p.x(i).iter().zip(p.y(i).iter().zip(p.y(j))).map(|(x, (a, b))| x * (a - b)).sum()
}

/// Shortest distances from node 0, or a cycle of weight below
/// `-NEGATIVE_CYCLE_TOL` in arc order.
fn bellman_ford(k: usize, w: &[f64]) -> std::result::Result<Vec<f64>, Vec<usize>> {
    let tau = NEGATIVE_CYCLE_TOL / k as f64;
    let mut dist = vec![f64::INFINITY; k];
    let mut pred = vec![usize::MAX; k];
    dist[0] = 0.0;
    let mut last_updated = None;
    for _ in 0..k {
        last_updated = None;
        for i in 0..k {
            if dist[i].is_infinite() {
                continue;
            }
            for j in 0..k {
                if i != j && dist[i] + w[i * k + j] < dist[j] - tau {
                    dist[j] = dist[i] + w[i * k + j];
                    pred[j] = i;
                    last_updated = Some(j);
                }
            }
        }
        if last_updated.is_none() {
            return Ok(dist);
        }
    }
    let Some(mut node) = last_updated else { return Ok(dist) };
    for _ in 0..k {
        node = pred[node];
    }
    let mut cycle = vec![node];
    let mut cur = pred[node];
    while cur != node {
        cycle.push(cur);
        cur = pred[cur];
    }
    cycle.reverse();
    let weight: f64 = (0..cycle.len()).map(|t| w[cycle[t] * k + cycle[(t + 1) % cycle.len()]]).sum();
    if weight < -NEGATIVE_CYCLE_TOL {
        Err(cycle)
    } else {
        Ok(dist)
    }
}

/// Whether no cyclic reassignment of targets lowers `Σ ‖x_i − y_i‖²`.
pub fn check_cyclical_monotonicity(p: &Pairing) -> Monotonicity {
    let k = p.len();
    let mut w = vec![0.0; k * k];
    for i in 0..k {
        let own = sq_dist(p.x(i), p.y(i));
        for j in 0..k {
            w[i * k + j] = sq_dist(p.x(i), p.y(j)) - own;
        }
    }
    match bellman_ford(k, &w) {
        Ok(_) => Monotonicity { monotone: true, violating_cycle: None },
        Err(cycle) => Monotonicity { monotone: false, violating_cycle: Some(cycle) },
    }
}

/// Potentials for `residual`, or `valid = false` with a negative cycle.
pub fn solve_potentials(p: &Pairing, residual: &ResidualFunction) -> Result<PotentialCertificate> {
    residual.validate(Some(p.len()))?;
    let k = p.len();
    let mut w = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            if i != j {
                w[i * k + j] = inner_gain(p, i, j) - residual.eval(p, i, j);
            }
        }
    }
    Ok(match bellman_ford(k, &w) {
        Ok(v) => PotentialCertificate {
            phi: v.iter().map(|d| 0.0 - d).collect(),
            residual: residual.clone(),
            valid: true,
            negative_cycle: None,
        },
        Err(cycle) => PotentialCertificate {
            phi: vec![f64::NAN; k],
            residual: residual.clone(),
            valid: false,
            negative_cycle: Some(cycle),
        },
    })
}

fn quadratic_feasible(p: &Pairing, lambda: f64) -> bool {
    let residual = if lambda > 0.0 { ResidualFunction::QuadraticY(lambda) } else { ResidualFunction::Zero };
    solve_potentials(p, &residual).map(|c| c.valid).unwrap_or(false)
}

/// Largest `λ` with a valid `QuadraticY(λ)` certificate, found by bisection.
///
/// Returns 0 when the matching is not the unique optimum and
/// [`LAMBDA_CAP`] when every tested `λ` is feasible.
pub fn max_quadratic_lambda(p: &Pairing) -> Result<f64> {
    if p.len() < 2 {
        return Err(Error::Precondition("λ* needs at least two pairs".into()));
    }
    if !quadratic_feasible(p, 0.0) {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while quadratic_feasible(p, hi) {
        lo = hi;
        if hi >= LAMBDA_CAP {
            return Ok(LAMBDA_CAP);
        }
        hi = (hi * 2.0).min(LAMBDA_CAP);
    }
    while hi - lo > LAMBDA_REL_TOL * hi && hi > LAMBDA_FLOOR {
        let mid = 0.5 * (lo + hi);
        if quadratic_feasible(p, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if lo <= LAMBDA_FLOOR { 0.0 } else { lo })
}

/// Certificate for an `α`-strongly convex, `β`-smooth interpolating potential.
pub fn check_convex_smooth(p: &Pairing, alpha: f64, beta: f64) -> Result<PotentialCertificate> {
    let residual = ResidualFunction::convex_smooth(alpha, beta)?;
    solve_potentials(p, &residual)
}

/// `(strong convexity, smoothness)` implied by a quadratic residual
/// `½(λxx‖Δx‖² + λyy‖Δy‖² − 2λxy⟨Δy, Δx⟩)` with `λxy² + λxy = λxx·λyy`.
pub fn implied_convexity_constants(lambda_xx: f64, lambda_xy: f64, lambda_yy: f64) -> Result<(f64, f64)> {
    if !(lambda_xx > 0.0 && lambda_xy > 0.0 && lambda_yy > 0.0) {
        return Err(Error::Invalid("all three coefficients must be positive".into()));
    }
    let defect = lambda_xy * lambda_xy + lambda_xy - lambda_xx * lambda_yy;
    if defect.abs() > 1e-9 {
        return Err(Error::Invalid(format!(
            "λxy² + λxy = {} but λxx·λyy = {}",
            lambda_xy * lambda_xy + lambda_xy,
            lambda_xx * lambda_yy
        )));
    }
    Ok((lambda_xy / lambda_xx, lambda_yy / lambda_xy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_ot::Matching;

    fn cross() -> Pairing {
        Pairing::identity(vec![vec![-1.0, -1.0], vec![1.0, 1.0]], vec![vec![-1.0, 1.0], vec![1.0, -1.0]]).unwrap()
    }

    fn mu_k(k: f64) -> Pairing {
        Pairing::identity(
            vec![vec![-1.0, -1.0 + k / 10.0], vec![1.0, 1.0 - k / 10.0]],
            vec![vec![-1.0, 1.0], vec![1.0, -1.0]],
        )
        .unwrap()
    }

    #[test]
    fn cross_is_monotone_with_zero_margin() {
        assert!(check_cyclical_monotonicity(&cross()).monotone);
    }

    #[test]
    fn identity_pairs_are_monotone() {
        let pts = vec![vec![0.0, 1.0], vec![2.0, -1.0], vec![0.5, 0.5]];
        let p = Pairing::identity(pts.clone(), pts).unwrap();
        assert!(check_cyclical_monotonicity(&p).monotone);
    }

    #[test]
    fn swapped_line_has_violating_two_cycle() {
        let p = Pairing::identity(vec![vec![0.0], vec![1.0]], vec![vec![1.0], vec![0.0]]).unwrap();
        let m = check_cyclical_monotonicity(&p);
        assert!(!m.monotone);
        let mut c = m.violating_cycle.unwrap();
        c.sort();
        assert_eq!(c, vec![0, 1]);
    }

    #[test]
    fn violating_cycle_lowers_cost() {
        let xs = vec![vec![0.0], vec![1.0], vec![2.0]];
        let ys = vec![vec![2.0], vec![0.0], vec![1.0]];
        let p = Pairing::identity(xs, ys).unwrap();
        let cycle = check_cyclical_monotonicity(&p).violating_cycle.unwrap();
        let n = cycle.len();
        let before: f64 = cycle.iter().map(|&i| sq_dist(p.x(i), p.y(i))).sum();
        let after: f64 = (0..n).map(|t| sq_dist(p.x(cycle[t]), p.y(cycle[(t + 1) % n]))).sum();
        assert!(after < before);
    }

    #[test]
    fn cross_admits_no_positive_residual() {
        for lambda in [1e-6, 0.05, 1.0] {
            let c = solve_potentials(&cross(), &ResidualFunction::quadratic_y(lambda).unwrap()).unwrap();
            assert!(!c.valid);
        }
        assert!(solve_potentials(&cross(), &ResidualFunction::Zero).unwrap().valid);
    }

    #[test]
    fn mu1_quadratic_certificate() {
        let p = mu_k(1.0);
        let c = solve_potentials(&p, &ResidualFunction::quadratic_y(0.05).unwrap()).unwrap();
        assert!(c.valid);
        assert_eq!(c.phi[0], 0.0);
        assert!(c.phi.iter().all(|v| v.is_finite()));
        assert!(c.min_slack(&p) >= -CERTIFICATE_TOL);
        let c = solve_potentials(&p, &ResidualFunction::quadratic_y(0.0501).unwrap()).unwrap();
        assert!(!c.valid);
    }

    #[test]
    fn lambda_star_two_cycle_closed_form() {
        // only one cycle: λ* = ⟨x1 − x2, y1 − y2⟩ / ‖y1 − y2‖² = 0.4k / 8
        for k in 1..=4 {
            let l = max_quadratic_lambda(&mu_k(k as f64)).unwrap();
            assert!((l - 0.05 * k as f64).abs() < 1e-9, "k={k}: {l}");
        }
        assert_eq!(max_quadratic_lambda(&cross()).unwrap(), 0.0);
    }

    #[test]
    fn lambda_star_identity_map_is_one() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 2.0]];
        let p = Pairing::identity(pts.clone(), pts).unwrap();
        assert!((max_quadratic_lambda(&p).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn lambda_star_hits_cap() {
        // x = 1e7·y makes every cycle margin huge relative to ‖Δy‖²
        let ys = vec![vec![0.0], vec![1.0]];
        let xs = vec![vec![0.0], vec![1e7]];
        let p = Pairing::identity(xs, ys).unwrap();
        assert_eq!(max_quadratic_lambda(&p).unwrap(), LAMBDA_CAP);
    }

    #[test]
    fn lambda_star_of_suboptimal_matching_is_zero() {
        let p = Pairing::identity(vec![vec![0.0], vec![1.0]], vec![vec![1.0], vec![0.0]]).unwrap();
        assert_eq!(max_quadratic_lambda(&p).unwrap(), 0.0);
    }

    #[test]
    fn scaling_map_is_convex_smooth() {
        let ys = vec![vec![0.0, 0.0], vec![1.0, 0.5], vec![-0.3, 2.0], vec![1.5, -1.0]];
        let c = 1.7;
        let xs: Vec<Vec<f64>> = ys.iter().map(|y| y.iter().map(|v| c * v).collect()).collect();
        let p = Pairing::identity(xs, ys).unwrap();
        for (a, b) in [(1.0, 2.0), (0.1, 10.0), (1.69, 1.71)] {
            let cert = check_convex_smooth(&p, a, b).unwrap();
            assert!(cert.valid, "α={a} β={b}");
            assert!(cert.min_slack(&p) >= -CERTIFICATE_TOL);
        }
        assert!(!check_convex_smooth(&p, 1.8, 2.0).unwrap().valid);
    }

    #[test]
    fn cross_is_not_convex_smooth() {
        assert!(!check_convex_smooth(&cross(), 0.5, 2.0).unwrap().valid);
    }

    #[test]
    fn convex_smooth_parameter_errors() {
        assert!(check_convex_smooth(&cross(), 1.0, 1.0).is_err());
        assert!(check_convex_smooth(&cross(), 2.0, 1.0).is_err());
        assert!(check_convex_smooth(&cross(), 0.0, 1.0).is_err());
    }

    #[test]
    fn convex_smooth_residual_is_positive() {
        let p = mu_k(2.0);
        let f = ResidualFunction::convex_smooth(0.3, 4.0).unwrap();
        assert!(f.eval(&p, 0, 1) > 0.0);
        assert_eq!(f.eval(&p, 0, 1), f.eval(&p, 1, 0));
        assert_eq!(f.eval(&p, 1, 1), 0.0);
    }

    #[test]
    fn implied_constants() {
        assert_eq!(implied_convexity_constants(1.0, 1.0, 2.0).unwrap(), (1.0, 2.0));
        assert_eq!(implied_convexity_constants(2.0, 2.0, 3.0).unwrap(), (1.0, 1.5));
        assert!(implied_convexity_constants(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn convex_smooth_matches_its_quadratic_form() {
        let (a, b) = (0.5, 3.0);
        let (lxx, lxy, lyy) = (1.0 / (b - a), a / (b - a), a * b / (b - a));
        let (sc, sm) = implied_convexity_constants(lxx, lxy, lyy).unwrap();
        assert!((sc - a).abs() < 1e-12 && (sm - b).abs() < 1e-12);
    }

    #[test]
    fn table_residual_validation() {
        assert!(ResidualFunction::table(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).is_ok());
        assert!(ResidualFunction::table(vec![vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        assert!(ResidualFunction::table(vec![vec![1.0, 1.0], vec![1.0, 0.0]]).is_err());
        assert!(ResidualFunction::table(vec![vec![0.0, 0.0], vec![0.0, 0.0]]).is_err());
        let t = ResidualFunction::table(vec![vec![0.0, 0.1], vec![0.1, 0.0]]).unwrap();
        let p = cross();
        assert!(!solve_potentials(&p, &t).unwrap().valid);
        let three = ResidualFunction::table(vec![vec![0.0; 3]; 3]);
        assert!(three.is_err());
        let t3 = ResidualFunction::Table(vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]]);
        assert!(solve_potentials(&p, &t3).is_err());
    }

    #[test]
    fn relabeled_matching_is_monotone() {
        let p = Pairing::new(&[vec![0.0], vec![1.0]], &[vec![1.0], vec![0.0]], &Matching::new(vec![1, 0]).unwrap())
            .unwrap();
        assert!(check_cyclical_monotonicity(&p).monotone);
    }
}
