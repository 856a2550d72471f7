use statrs::distribution::{ContinuousCDF, StudentsT};

use super::estimate::{gap_records, optimal_pairing, radius_data};
use super::{got_estimate_with_kernel, GapRecord, MonteCarlo, SmoothingKernel};
use crate::error::{Error, Result};
use crate::measures::DiscreteMeasure;

/// Least-squares slope with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub slope_stderr: f64,
    /// Residual degrees of freedom.
    pub df: usize,
    /// One-sided 95% lower confidence limit of the slope.
    pub lower_95: f64,
}

impl SlopeFit {
    pub fn positive(&self) -> bool {
        self.lower_95 > 0.0
    }
}

fn t_quantile_95(df: usize) -> f64 {
    StudentsT::new(0.0, 1.0, df as f64).expect("df is positive").inverse_cdf(0.95)
}

/// Slope of `y ≈ b·x` (through the origin) or `y ≈ a + b·x`.
pub fn fit_slope(xs: &[f64], ys: &[f64], through_origin: bool) -> Result<SlopeFit> {
    let params = if through_origin { 1 } else { 2 };
    if xs.len() != ys.len() || xs.len() <= params {
        return Err(Error::Invalid(format!("need more than {params} points of equal-length data")));
    }
    let n = xs.len() as f64;
    let (mx, my) = if through_origin {
        (0.0, 0.0)
    } else {
        (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n)
    };
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Invalid("regressor has no spread".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let df = xs.len() - params;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let slope_stderr = (rss / df as f64 / sxx).sqrt();
    Ok(SlopeFit { slope, slope_stderr, df, lower_95: slope - t_quantile_95(df) * slope_stderr })
}

/// Result of [`linear_lb_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct LinearCheck {
    pub fit: SlopeFit,
    pub records: Vec<GapRecord>,
}

/// Regresses the squared gap on `σ` through the origin. A positive slope at
/// 95% confidence indicates a gap linear in `σ`.
///
/// Fails with a precondition error when the optimum is a unique perfect
/// matching, where the gap is exponentially small instead.
pub fn linear_lb_check(mu: &DiscreteMeasure, nu: &DiscreteMeasure, grid: &[f64], mc: &MonteCarlo) -> Result<LinearCheck> {
    let (w2_exact, pairing) = optimal_pairing(mu, nu)?;
    if let Some((_, true)) = pairing {
        return Err(Error::Precondition("optimal plan is a unique perfect matching".into()));
    }
    let records = gap_records(mu, nu, grid, mc, w2_exact, None)?;
    let xs: Vec<f64> = records.iter().map(|r| r.sigma).collect();
    let ys: Vec<f64> = records.iter().map(|r| r.gap_sq).collect();
    Ok(LinearCheck { fit: fit_slope(&xs, &ys, true)?, records })
}

/// Relative rounding slack of [`local_invariance_check`].
pub const ROUNDING_TOL: f64 = 1e-12;

/// Result of [`local_invariance_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct LocalInvariance {
    pub w2_exact: f64,
    pub r_hat: f64,
    pub gap_mean: f64,
    pub gap_stderr: f64,
    /// `|gap_mean| ≤ 3·gap_stderr`, plus [`ROUNDING_TOL`] relative slack for
    /// the noiseless case where the stderr is 0.
    pub pass: bool,
}

/// Smooths both measures with a uniform ball kernel of radius below the
/// robustness radius and compares against the exact distance.
pub fn local_invariance_check(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    radius: f64,
    mc: &MonteCarlo,
) -> Result<LocalInvariance> {
    let (w2_exact, pairing) = optimal_pairing(mu, nu)?;
    let r_hat = match radius_data(pairing.as_ref().map(|(p, _)| p))?.0 {
        Some(r) => r,
        None => return Err(Error::Precondition("no robustness radius: optimum is not a small perfect matching".into())),
    };
    if !(radius < r_hat) {
        return Err(Error::Precondition(format!("radius {radius} is not below r_hat {r_hat}")));
    }
    let est = got_estimate_with_kernel(mu, nu, &SmoothingKernel::UniformBall { radius }, mc)?;
    let gap_mean = w2_exact - est.mean;
    let pass = gap_mean.abs() <= 3.0 * est.stderr + ROUNDING_TOL * w2_exact.max(1.0);
    Ok(LocalInvariance { w2_exact, r_hat, gap_mean, gap_stderr: est.stderr, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{presets, Translation};

    #[test]
    fn slope_fits() {
        // y = 2x + 1 exactly: zero stderr
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let f = fit_slope(&xs, &ys, false).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && f.slope_stderr < 1e-12 && f.positive());
        // through the origin: b = Σxy/Σx² = (1·1 + 2·3)/5 = 7/5
        let f = fit_slope(&[1.0, 2.0], &[1.0, 3.0], true).unwrap();
        assert!((f.slope - 1.4).abs() < 1e-12);
        assert_eq!(f.df, 1);
        assert!(fit_slope(&[1.0, 1.0, 1.0], &[0.0, 1.0, 2.0], false).is_err());
        assert!(fit_slope(&[1.0], &[1.0], true).is_err());
    }

    #[test]
    fn t_quantile() {
        // tabulated t_{0.95} at 19 degrees of freedom
        assert!((t_quantile_95(19) - 1.729).abs() < 1e-3);
    }

    #[test]
    fn translation_has_no_linear_regime() {
        let mu = presets::mu_k(1);
        let nu = mu.translate(&Translation::new(vec![1.0, 0.0])).unwrap();
        let err = linear_lb_check(&mu, &nu, &[0.1, 0.2], &MonteCarlo::new(20, 3, 0)).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn zero_radius_has_no_gap() {
        let (mu, nu) = (presets::mu_k(1), presets::cross_target());
        let r = local_invariance_check(&mu, &nu, 0.0, &MonteCarlo::new(40, 3, 1)).unwrap();
        assert!(r.gap_mean.abs() < 1e-12 && r.pass, "{r:?}");
    }

    #[test]
    fn radius_above_r_hat_rejected() {
        let (mu, nu) = (presets::mu_k(1), presets::cross_target());
        let err = local_invariance_check(&mu, &nu, 5.0, &MonteCarlo::new(40, 3, 1)).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }
}
