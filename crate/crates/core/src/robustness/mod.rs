//! Robustness of an optimal matching to perturbations of its pairs.

mod cycles;
mod inner;
mod profile;

pub use cycles::{simple_cycle_count, simple_cycles};
pub use inner::{CycleProblem, InnerOptions, InnerResult};
pub use profile::{estimate_g, g_profile, GPoint, GProfile};

use rayon::prelude::*;

use crate::certify::{check_convex_smooth, max_quadratic_lambda, solve_potentials, PotentialCertificate, ResidualFunction};
use crate::error::{Error, Result};
use crate::exact_ot::Pairing;
use crate::measures::{dist, dot};

/// Largest pairing size for cycle enumeration.
pub const MAX_CYCLE_PAIRS: usize = 8;
/// A cycle violates robustness when its cost decrease exceeds this.
pub const ROBUST_SLACK: f64 = 1e-9;
/// Absolute tolerance of the `r_hat` bisection.
pub const R_TOL: f64 = 1e-4;

pub(crate) fn check_size(p: &Pairing) -> Result<()> {
    if p.len() > MAX_CYCLE_PAIRS {
        return Err(Error::TooLarge { what: "pairs", size: p.len(), limit: MAX_CYCLE_PAIRS });
    }
    Ok(())
}

fn pair_min<F: Fn(usize, usize, f64, f64) -> f64>(p: &Pairing, term: F) -> Result<f64> {
    let k = p.len();
    if k < 2 {
        return Err(Error::Precondition("bounds need at least two pairs".into()));
    }
    let mut best = f64::INFINITY;
    for i in 0..k {
        for j in 0..k {
            if i != j {
                let dx = dist(p.x(i), p.x(j));
                let dy = dist(p.y(i), p.y(j));
                best = best.min(term(i, j, dx, dy));
            }
        }
    }
    Ok(0.5 * best.max(0.0))
}

/// `½·min_{i≠j} f(i, j)/(‖x_i − x_j‖ + ‖y_i − y_j‖)` for a valid certificate.
pub fn robustness_lb_general(p: &Pairing, cert: &PotentialCertificate) -> Result<f64> {
    if !cert.valid {
        return Err(Error::Precondition("certificate is not valid".into()));
    }
    pair_min(p, |i, j, dx, dy| {
        let denom = dx + dy;
        if denom > 0.0 {
            cert.residual.eval(p, i, j) / denom
        } else {
            f64::INFINITY
        }
    })
}

fn require_convex_smooth(p: &Pairing, alpha: f64, beta: f64) -> Result<()> {
    if !check_convex_smooth(p, alpha, beta)?.valid {
        return Err(Error::Precondition(format!("no {alpha}-strongly convex, {beta}-smooth certificate")));
    }
    Ok(())
}

/// `½·min_{i≠j} max{‖Δx‖²/β, α‖Δy‖²}/(‖Δx‖ + ‖Δy‖)`.
pub fn robustness_lb_convex(p: &Pairing, alpha: f64, beta: f64) -> Result<f64> {
    require_convex_smooth(p, alpha, beta)?;
    pair_min(p, |_, _, dx, dy| {
        let denom = dx + dy;
        if denom > 0.0 {
            (dx * dx / beta).max(alpha * dy * dy) / denom
        } else {
            f64::INFINITY
        }
    })
}

/// `½·min_{i≠j} max{α/(β(1+α))·‖Δx‖, α/(1+β)·‖Δy‖}`.
///
/// Uses `‖Δx‖ ≤ β‖Δy‖` and `‖Δy‖ ≤ ‖Δx‖/α`, which any `α`-strongly convex,
/// `β`-smooth interpolating potential forces, to lower-bound each term of
/// [`robustness_lb_convex`].
pub fn robustness_lb_simplified(p: &Pairing, alpha: f64, beta: f64) -> Result<f64> {
    require_convex_smooth(p, alpha, beta)?;
    pair_min(p, |_, _, dx, dy| (alpha / (beta * (1.0 + alpha)) * dx).max(alpha / (1.0 + beta) * dy))
}

/// A cycle and perturbations that make reassignment along it cheaper.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub cycle: Vec<usize>,
    /// `α` for each position of `cycle`.
    pub perturbations: Vec<Vec<f64>>,
    pub decrease: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustVerdict {
    pub robust: bool,
    pub witness: Option<Witness>,
}

/// Whether every simple cycle stays no cheaper than the matching under all
/// perturbations of norm at most `eps`.
pub fn verify_eps_robust(p: &Pairing, eps: f64) -> Result<RobustVerdict> {
    verify_eps_robust_with(p, eps, &InnerOptions::default())
}

pub fn verify_eps_robust_with(p: &Pairing, eps: f64, opts: &InnerOptions) -> Result<RobustVerdict> {
    check_size(p)?;
    if !(eps >= 0.0) {
        return Err(Error::Invalid(format!("eps must be nonnegative, got {eps}")));
    }
    if eps == 0.0 {
        let m = crate::certify::check_cyclical_monotonicity(p);
        let witness = m.violating_cycle.map(|cycle| {
            let prob = CycleProblem::new(p, &cycle);
            Witness { perturbations: vec![vec![0.0; p.dim()]; cycle.len()], decrease: prob.decrease_at_zero(), cycle }
        });
        return Ok(RobustVerdict { robust: m.monotone, witness });
    }
    let cycles = simple_cycles(p.len());
    let witness = cycles.par_iter().enumerate().find_map_first(|(idx, cycle)| {
        let prob = CycleProblem::new(p, cycle);
        if prob.decrease_upper_bound(eps) <= ROBUST_SLACK {
            return None;
        }
        let r = prob.maximize_decrease(eps, opts, idx as u64);
        (r.decrease > ROBUST_SLACK).then(|| Witness { cycle: cycle.clone(), perturbations: r.alpha, decrease: r.decrease })
    });
    Ok(RobustVerdict { robust: witness.is_none(), witness })
}

/// Bisection estimate of the robustness radius on `[0, diameter]`.
///
/// Returns the largest radius verified robust; the true radius lies within
/// [`R_TOL`] above it unless the whole interval is robust.
pub fn estimate_r(p: &Pairing) -> Result<f64> {
    check_size(p)?;
    let opts = InnerOptions::default();
    let hi0 = p.diameter();
    if !verify_eps_robust_with(p, 0.0, &opts)?.robust {
        return Ok(0.0);
    }
    if verify_eps_robust_with(p, hi0, &opts)?.robust {
        return Ok(hi0);
    }
    let (mut lo, mut hi) = (0.0, hi0);
    while hi - lo > R_TOL {
        let mid = 0.5 * (lo + hi);
        if verify_eps_robust_with(p, mid, &opts)?.robust {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// An `(α, β)` pair with a valid convex-smooth certificate, if one is found.
///
/// Any such pair satisfies `α ≤ ⟨Δx, Δy⟩/‖Δy‖²` and `β ≥ ‖Δx‖²/⟨Δx, Δy⟩` on
/// every pair. `β` is tried at 2, 8 and 32 times the largest of the latter;
/// `α` is half the largest certifying value, located by bisection.
pub fn fit_convex_smooth(p: &Pairing) -> Option<(f64, f64)> {
    let k = p.len();
    if k < 2 {
        return None;
    }
    let mut beta_min: f64 = 0.0;
    let mut alpha_max = f64::INFINITY;
    for i in 0..k {
        for j in i + 1..k {
            let dx: Vec<f64> = p.x(i).iter().zip(p.x(j)).map(|(a, b)| a - b).collect();
            let dy: Vec<f64> = p.y(i).iter().zip(p.y(j)).map(|(a, b)| a - b).collect();
            let inner = dot(&dx, &dy);
            if inner <= 0.0 {
                return None;
            }
            beta_min = beta_min.max(dot(&dx, &dx) / inner);
            alpha_max = alpha_max.min(inner / dot(&dy, &dy));
        }
    }
    for mult in [2.0, 8.0, 32.0] {
        let beta = mult * beta_min;
        let valid = |a: f64| check_convex_smooth(p, a, beta).map(|c| c.valid).unwrap_or(false);
        let (mut lo, mut hi) = (0.0, alpha_max.min(beta));
        if valid(hi) && hi < beta {
            lo = hi;
        } else {
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if valid(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
        let alpha = 0.5 * lo;
        if alpha > 0.0 && valid(alpha) {
            return Some((alpha, beta));
        }
    }
    None
}

/// Lower bounds and radius estimate for one matching.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessReport {
    pub lambda_star: f64,
    pub lb_general: f64,
    pub alpha_beta: Option<(f64, f64)>,
    pub lb_convex: Option<f64>,
    pub lb_simplified: Option<f64>,
    pub r_hat: Option<f64>,
    pub method_notes: String,
}

/// Options for [`robustness_report`].
#[derive(Debug, Clone, Copy, Default)]
pub struct ReportOptions {
    /// Fixed `(α, β)`; when absent one is fitted.
    pub alpha_beta: Option<(f64, f64)>,
    pub estimate_r: bool,
}

pub fn robustness_report(p: &Pairing, opts: ReportOptions) -> Result<RobustnessReport> {
    if opts.estimate_r {
        check_size(p)?;
    }
    let mut notes = Vec::new();
    let lambda_star = max_quadratic_lambda(p)?;
    let lb_general = if lambda_star > 0.0 {
        let cert = solve_potentials(p, &ResidualFunction::quadratic_y(lambda_star)?)?;
        notes.push(format!("lb_general from quadratic residual at lambda*={lambda_star:?}"));
        robustness_lb_general(p, &cert)?
    } else {
        notes.push("matching is not the unique optimum; no positive residual".to_string());
        0.0
    };
    let alpha_beta = match opts.alpha_beta {
        Some((a, b)) => {
            ResidualFunction::convex_smooth(a, b)?;
            check_convex_smooth(p, a, b)?.valid.then_some((a, b))
        }
        None if lambda_star > 0.0 => fit_convex_smooth(p),
        None => None,
    };
    let (lb_convex, lb_simplified) = match alpha_beta {
        Some((a, b)) => {
            notes.push(format!("convex-smooth certificate at alpha={a:?} beta={b:?}"));
            (Some(robustness_lb_convex(p, a, b)?), Some(robustness_lb_simplified(p, a, b)?))
        }
        None => {
            if opts.alpha_beta.is_some() {
                notes.push("requested convex-smooth certificate is invalid".to_string());
            }
            (None, None)
        }
    };
    let r_hat = if opts.estimate_r {
        notes.push(format!("r_hat by bisection, tolerance {R_TOL:?}"));
        Some(estimate_r(p)?)
    } else {
        None
    };
    Ok(RobustnessReport {
        lambda_star,
        lb_general,
        alpha_beta,
        lb_convex,
        lb_simplified,
        r_hat,
        method_notes: notes.join("; "),
    })
}
