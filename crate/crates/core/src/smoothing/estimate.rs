use rayon::prelude::*;

use super::{empirical_w2, sample_smoothed_with, Allocation, SmoothingKernel};
use crate::error::{Error, Result};
use crate::exact_ot::{solve_w2, Pairing};
use crate::measures::DiscreteMeasure;
use crate::rng::split_seed;
use crate::robustness::{robustness_report, ReportOptions, MAX_CYCLE_PAIRS};

/// Monte Carlo sample size, repetitions and seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarlo {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub allocation: Allocation,
}

impl MonteCarlo {
    pub fn new(n: usize, trials: usize, seed: u64) -> Self {
        MonteCarlo { n, trials, seed, allocation: Allocation::default() }
    }

    pub fn with_allocation(self, allocation: Allocation) -> Self {
        MonteCarlo { allocation, ..self }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Invalid("n must be positive".into()));
        }
        if self.trials < 2 {
            return Err(Error::Invalid(format!("need at least 2 trials, got {}", self.trials)));
        }
        Ok(())
    }
}

impl Default for MonteCarlo {
    fn default() -> Self {
        MonteCarlo::new(500, 20, 0)
    }
}

/// Smoothed W2 estimated from independent pairs of sample clouds.
#[derive(Debug, Clone, PartialEq)]
pub struct GotEstimate {
    pub mean: f64,
    /// Sample standard deviation over `√trials`.
    pub stderr: f64,
    /// Mean of the squared per-trial distances.
    pub mean_sq: f64,
    pub stderr_sq: f64,
    pub trials: usize,
    pub n: usize,
    /// Kernel scale.
    pub sigma: f64,
    /// Per-trial empirical W2, in trial order.
    pub values: Vec<f64>,
}

/// Mean and standard error of the mean.
pub(crate) fn mean_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Estimate of `W2(μ∗N_σ, ν∗N_σ)`.
pub fn got_estimate(mu: &DiscreteMeasure, nu: &DiscreteMeasure, sigma: f64, mc: &MonteCarlo) -> Result<GotEstimate> {
    got_estimate_with_kernel(mu, nu, &SmoothingKernel::gaussian(sigma)?, mc)
}

/// Estimate of `W2(μ∗Q, ν∗Q)` for any kernel `Q`.
///
/// Trial `t` draws both clouds from `split_seed(seed, t)`; the source uses
/// child stream 0 and the target child stream 1.
pub fn got_estimate_with_kernel(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    kernel: &SmoothingKernel,
    mc: &MonteCarlo,
) -> Result<GotEstimate> {
    mc.validate()?;
    kernel.validate()?;
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), found: nu.dim() });
    }
    let values = (0..mc.trials)
        .into_par_iter()
        .map(|t| {
            let s = split_seed(mc.seed, t as u64);
            let a = sample_smoothed_with(mu, kernel, mc.n, split_seed(s, 0), mc.allocation)?;
            let b = sample_smoothed_with(nu, kernel, mc.n, split_seed(s, 1), mc.allocation)?;
            empirical_w2(&a, &b)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean, stderr) = mean_stderr(&values);
    let squares: Vec<f64> = values.iter().map(|v| v * v).collect();
    let (mean_sq, stderr_sq) = mean_stderr(&squares);
    Ok(GotEstimate { mean, stderr, mean_sq, stderr_sq, trials: mc.trials, n: mc.n, sigma: kernel.scale(), values })
}

/// One point of a gap curve.
#[derive(Debug, Clone, PartialEq)]
pub struct GapRecord {
    pub sigma: f64,
    pub w2_exact: f64,
    pub got: GotEstimate,
    /// `w2_exact − got.mean`, not clamped.
    pub gap: f64,
    /// `w2_exact² − got.mean_sq`.
    pub gap_sq: f64,
    /// Shape of the exponential bound at `σ` with `σ* = r_hat`; absent when
    /// `σ ≥ r_hat` or no radius is available.
    pub exp_bound_value: Option<f64>,
}

/// Gap records plus the robustness data of the optimal matching.
#[derive(Debug, Clone, PartialEq)]
pub struct GapCurve {
    pub records: Vec<GapRecord>,
    pub w2_exact: f64,
    /// Robustness radius estimate, when the optimum is a perfect matching
    /// with at most [`MAX_CYCLE_PAIRS`] pairs.
    pub r_hat: Option<f64>,
    pub lb_general: Option<f64>,
}

/// Pairing of the optimal perfect matching, if there is one.
pub(crate) fn optimal_pairing(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<(f64, Option<(Pairing, bool)>)> {
    let sol = solve_w2(mu, nu)?;
    let pairing = match &sol.matching {
        Some(m) => Some((Pairing::new(mu.points(), nu.points(), m)?, sol.unique == Some(true))),
        None => None,
    };
    Ok((sol.w2(), pairing))
}

/// Robustness radius and general lower bound of the optimal matching.
pub(crate) fn radius_data(pairing: Option<&Pairing>) -> Result<(Option<f64>, Option<f64>)> {
    match pairing {
        Some(p) if p.len() >= 2 && p.len() <= MAX_CYCLE_PAIRS => {
            let rep = robustness_report(p, ReportOptions { alpha_beta: None, estimate_r: true })?;
            Ok((rep.r_hat, Some(rep.lb_general)))
        }
        _ => Ok((None, None)),
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Invalid("sigma grid is empty".into()));
    }
    if grid.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::Invalid("sigma values must be positive".into()));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Invalid("sigma grid must be strictly ascending".into()));
    }
    Ok(())
}

/// Exact W2 against Gaussian-smoothed estimates over a grid of `σ`.
///
/// Grid point `s` runs with seed `split_seed(seed, s)`.
pub fn gap_curve(mu: &DiscreteMeasure, nu: &DiscreteMeasure, grid: &[f64], mc: &MonteCarlo) -> Result<GapCurve> {
    check_grid(grid)?;
    mc.validate()?;
    let (w2_exact, pairing) = optimal_pairing(mu, nu)?;
    let (r_hat, lb_general) = radius_data(pairing.as_ref().map(|(p, _)| p))?;
    let records = gap_records(mu, nu, grid, mc, w2_exact, r_hat)?;
    Ok(GapCurve { records, w2_exact, r_hat, lb_general })
}

pub(crate) fn gap_records(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    grid: &[f64],
    mc: &MonteCarlo,
    w2_exact: f64,
    r_hat: Option<f64>,
) -> Result<Vec<GapRecord>> {
    grid.iter()
        .enumerate()
        .map(|(s, &sigma)| {
            let got = got_estimate(mu, nu, sigma, &MonteCarlo { seed: split_seed(mc.seed, s as u64), ..*mc })?;
            let exp_bound_value = match r_hat {
                Some(r) if sigma < r => Some(exp_bound(sigma, r)?),
                _ => None,
            };
            Ok(GapRecord {
                sigma,
                w2_exact,
                gap: w2_exact - got.mean,
                gap_sq: w2_exact * w2_exact - got.mean_sq,
                got,
                exp_bound_value,
            })
        })
        .collect()
}

/// `√(σ*·σ)·exp(−σ*²/(4σ²))` for `0 < σ < σ*`: the shape of the gap bound
/// below the radius, with its constant set to 1.
pub fn exp_bound(sigma: f64, sigma_star: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::Invalid(format!("sigma must be positive, got {sigma}")));
    }
    if !(sigma < sigma_star) {
        return Err(Error::Precondition(format!("exp_bound needs sigma < sigma_star, got {sigma} ≥ {sigma_star}")));
    }
    Ok((sigma_star * sigma).sqrt() * (-(sigma_star * sigma_star) / (4.0 * sigma * sigma)).exp())
}
