use rayon::prelude::*;

use super::{check_size, simple_cycles, CycleProblem, InnerOptions};
use crate::error::{Error, Result};
use crate::exact_ot::Pairing;

/// `Ĝ(M)` at one radius with optimizer diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct GPoint {
    pub m: f64,
    pub value: f64,
    /// Cycle achieving `value`, when positive.
    pub best_cycle: Option<Vec<usize>>,
    pub restarts: usize,
    /// Largest restart spread among the cycles optimized.
    pub spread: f64,
}

/// `Ĝ` sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GProfile {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub points: Vec<GPoint>,
    pub nondecreasing: bool,
    /// Largest second difference `(G₂ − G₁) − (h₂/h₁)(G₁ − G₀)` of `Ĝ`.
    pub max_second_difference: f64,
    /// Largest second difference of any single cycle's decrease curve.
    pub max_cycle_second_difference: f64,
    /// Largest restart spread over the whole profile.
    pub spread: f64,
}

impl GProfile {
    /// Second differences of `Ĝ` within `1e-6 + 2·spread`.
    pub fn concave(&self) -> bool {
        self.max_second_difference <= 1e-6 + 2.0 * self.spread
    }

    /// Every cycle's decrease curve has second differences within `1e-6 + 2·spread`.
    pub fn cycles_concave(&self) -> bool {
        self.max_cycle_second_difference <= 1e-6 + 2.0 * self.spread
    }

    /// `Ĝ(M) = 0` for every grid `M ≤ r_hat − tol`.
    pub fn vanishes_below(&self, r_hat: f64, tol: f64) -> bool {
        self.grid.iter().zip(&self.values).all(|(&m, &g)| m > r_hat - tol || g == 0.0)
    }
}

/// `Ĝ(M)`: the largest cost decrease over simple cycles and perturbations of
/// norm at most `M`, clipped at 0.
pub fn estimate_g(p: &Pairing, m: f64) -> Result<GPoint> {
    check_size(p)?;
    if !(m >= 0.0) {
        return Err(Error::Invalid(format!("M must be nonnegative, got {m}")));
    }
    let opts = InnerOptions::default();
    let cycles = simple_cycles(p.len());
    let best = cycles
        .par_iter()
        .enumerate()
        .filter_map(|(idx, cycle)| {
            let prob = CycleProblem::new(p, cycle);
            if prob.decrease_upper_bound(m) <= 0.0 {
                return None;
            }
            let r = prob.maximize_decrease(m, &opts, idx as u64);
            Some((idx, r.decrease, r.spread))
        })
        .reduce_with(|a, b| {
            let spread = a.2.max(b.2);
            let win = if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a };
            (win.0, win.1, spread)
        });
    Ok(match best {
        Some((idx, value, spread)) if value > 0.0 => GPoint {
            m,
            value,
            best_cycle: Some(cycles[idx].clone()),
            restarts: opts.restarts,
            spread,
        },
        Some((_, _, spread)) => GPoint { m, value: 0.0, best_cycle: None, restarts: opts.restarts, spread },
        None => GPoint { m, value: 0.0, best_cycle: None, restarts: 0, spread: 0.0 },
    })
}

fn second_differences(grid: &[f64], v: &[f64]) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for t in 1..grid.len().saturating_sub(1) {
        let (h1, h2) = (grid[t] - grid[t - 1], grid[t + 1] - grid[t]);
        if h1 <= 0.0 {
            continue;
        }
        worst = worst.max((v[t + 1] - v[t]) - (h2 / h1) * (v[t] - v[t - 1]));
    }
    worst
}

/// `Ĝ` on an ascending grid of at least three radii, with monotonicity and
/// concavity diagnostics for `Ĝ` and for each cycle that can ever gain.
pub fn g_profile(p: &Pairing, grid: &[f64]) -> Result<GProfile> {
    check_size(p)?;
    if grid.len() < 3 {
        return Err(Error::Invalid("G profile needs at least three grid points".into()));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) || grid[0] < 0.0 {
        return Err(Error::Invalid("grid must be nonnegative and strictly ascending".into()));
    }
    let opts = InnerOptions::default();
    let cycles = simple_cycles(p.len());
    // per cycle: decrease at each grid point and restart spread
    let curves: Vec<Option<(Vec<f64>, f64)>> = cycles
        .par_iter()
        .enumerate()
        .map(|(idx, cycle)| {
            let prob = CycleProblem::new(p, cycle);
            if prob.unconstrained_decrease() <= 0.0 {
                return None;
            }
            let mut spread = 0.0f64;
            let values = grid
                .iter()
                .map(|&m| {
                    let r = prob.maximize_decrease(m, &opts, idx as u64);
                    spread = spread.max(r.spread);
                    r.decrease
                })
                .collect();
            Some((values, spread))
        })
        .collect();

    let mut points = Vec::with_capacity(grid.len());
    for (g, &m) in grid.iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        let mut spread = 0.0f64;
        for (idx, c) in curves.iter().enumerate() {
            if let Some((values, s)) = c {
                spread = spread.max(*s);
                if best.is_none_or(|(_, v)| values[g] > v) {
                    best = Some((idx, values[g]));
                }
            }
        }
        let (best_cycle, value) = match best {
            Some((idx, v)) if v > 0.0 => (Some(cycles[idx].clone()), v),
            _ => (None, 0.0),
        };
        points.push(GPoint { m, value, best_cycle, restarts: opts.restarts, spread });
    }
    let values: Vec<f64> = points.iter().map(|p| p.value).collect();
    let spread = points.iter().map(|p| p.spread).fold(0.0, f64::max);
    let nondecreasing = values.windows(2).all(|w| w[1] >= w[0] - 1e-12 - 2.0 * spread);
    let max_cycle_second_difference = curves
        .iter()
        .flatten()
        .map(|(v, _)| second_differences(grid, v))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(GProfile {
        grid: grid.to_vec(),
        max_second_difference: second_differences(grid, &values),
        max_cycle_second_difference,
        values,
        points,
        nondecreasing,
        spread,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robustness::estimate_r;

    fn mu_k(k: f64) -> Pairing {
        Pairing::identity(
            vec![vec![-1.0, -1.0 + k / 10.0], vec![1.0, 1.0 - k / 10.0]],
            vec![vec![-1.0, 1.0], vec![1.0, -1.0]],
        )
        .unwrap()
    }

    #[test]
    fn zero_at_zero_for_optimal_matching() {
        assert_eq!(estimate_g(&mu_k(2.0), 0.0).unwrap().value, 0.0);
        assert_eq!(estimate_g(&mu_k(0.0), 0.0).unwrap().value, 0.0);
    }

    #[test]
    fn vanishes_below_radius() {
        let p = mu_k(3.0);
        let r = estimate_r(&p).unwrap();
        let prof = g_profile(&p, &[0.0, r / 2.0, r]).unwrap();
        assert_eq!(prof.values[0], 0.0);
        assert_eq!(prof.values[1], 0.0);
        assert!(prof.values[2] < 1e-3);
        assert!(prof.vanishes_below(r, 1e-4));
    }

    #[test]
    fn cross_profile_matches_closed_form() {
        // 2-cycle gain 16M − 8M² on the cross instance, saturating at 8 from M = 1
        let prof = g_profile(&mu_k(0.0), &[0.0, 0.5, 1.0, 1.5]).unwrap();
        for (&m, g) in prof.grid.iter().zip(&prof.values) {
            let expect = if m <= 1.0 { 16.0 * m - 8.0 * m * m } else { 8.0 };
            assert!((g - expect).abs() < 1e-9, "M={m}: {g}");
        }
        assert!(prof.nondecreasing);
        assert!(prof.concave());
        assert!(prof.cycles_concave());
        assert_eq!(prof.points[1].best_cycle, Some(vec![0, 1]));
    }

    #[test]
    fn grid_validation() {
        assert!(g_profile(&mu_k(1.0), &[0.0, 1.0]).is_err());
        assert!(g_profile(&mu_k(1.0), &[0.0, 1.0, 0.5]).is_err());
        assert!(estimate_g(&mu_k(1.0), -1.0).is_err());
    }
}
