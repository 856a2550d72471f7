use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::gamma_lr;

use crate::error::{Error, Result};

/// Noise law convolved with a measure before sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmoothingKernel {
    /// `N(0, σ²I)`.
    Gaussian { sigma: f64 },
    /// With probability `p = P[‖N(0, σ²I)‖ < ε*]` a Gaussian draw conditioned
    /// on that event, otherwise no noise.
    TruncatedGaussian { sigma: f64, eps_star: f64 },
    /// Uniform on the closed ball; radius 0 means no noise.
    UniformBall { radius: f64 },
}

impl SmoothingKernel {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        let k = SmoothingKernel::Gaussian { sigma };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Invalid(format!("{name} must be positive, got {v}")))
            }
        };
        match *self {
            SmoothingKernel::Gaussian { sigma } => positive("sigma", sigma),
            SmoothingKernel::TruncatedGaussian { sigma, eps_star } => {
                positive("sigma", sigma)?;
                positive("eps_star", eps_star)
            }
            SmoothingKernel::UniformBall { radius } => {
                if radius.is_finite() && radius >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::Invalid(format!("radius must be nonnegative, got {radius}")))
                }
            }
        }
    }

    /// Scale parameter: `σ` for the Gaussian kernels, the radius for the ball.
    pub fn scale(&self) -> f64 {
        match *self {
            SmoothingKernel::Gaussian { sigma } | SmoothingKernel::TruncatedGaussian { sigma, .. } => sigma,
            SmoothingKernel::UniformBall { radius } => radius,
        }
    }

    /// Probability that a draw in dimension `d` is nonzero.
    pub fn nonzero_mass(&self, d: usize) -> f64 {
        match *self {
            SmoothingKernel::Gaussian { .. } => 1.0,
            SmoothingKernel::TruncatedGaussian { sigma, eps_star } => {
                gamma_lr(d as f64 / 2.0, eps_star * eps_star / (2.0 * sigma * sigma))
            }
            SmoothingKernel::UniformBall { radius } => {
                if radius > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Writes one noise vector into `out`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match *self {
            SmoothingKernel::Gaussian { sigma } => {
                out.iter_mut().for_each(|v| *v = sigma * rng.sample::<f64, _>(StandardNormal));
            }
            SmoothingKernel::TruncatedGaussian { sigma, eps_star } => {
                let p = self.nonzero_mass(out.len());
                if rng.random::<f64>() >= p {
                    out.iter_mut().for_each(|v| *v = 0.0);
                    return;
                }
                loop {
                    out.iter_mut().for_each(|v| *v = sigma * rng.sample::<f64, _>(StandardNormal));
                    if out.iter().map(|v| v * v).sum::<f64>() < eps_star * eps_star {
                        return;
                    }
                }
            }
            SmoothingKernel::UniformBall { radius } => {
                if radius == 0.0 {
                    out.iter_mut().for_each(|v| *v = 0.0);
                    return;
                }
                let norm = loop {
                    out.iter_mut().for_each(|v| *v = rng.sample::<f64, _>(StandardNormal));
                    let n = out.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if n > 0.0 {
                        break n;
                    }
                };
                let r = radius * rng.random::<f64>().powf(1.0 / out.len() as f64);
                out.iter_mut().for_each(|v| *v *= r / norm);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::child_rng;

    #[test]
    fn validation() {
        assert!(SmoothingKernel::gaussian(0.0).is_err());
        assert!(SmoothingKernel::TruncatedGaussian { sigma: 1.0, eps_star: -1.0 }.validate().is_err());
        assert!(SmoothingKernel::UniformBall { radius: 0.0 }.validate().is_ok());
        assert!(SmoothingKernel::UniformBall { radius: f64::NAN }.validate().is_err());
    }

    #[test]
    fn truncated_mass_matches_chi_square() {
        // d = 2: P[‖Z‖ < ε/σ] = 1 − exp(−ε²/(2σ²))
        let k = SmoothingKernel::TruncatedGaussian { sigma: 0.5, eps_star: 0.4 };
        let expect = 1.0 - (-0.16f64 / 0.5).exp();
        assert!((k.nonzero_mass(2) - expect).abs() < 1e-12);
    }

    #[test]
    fn truncated_nonzero_fraction() {
        let k = SmoothingKernel::TruncatedGaussian { sigma: 1.0, eps_star: 1.2 };
        let p = k.nonzero_mass(3);
        let mut rng = child_rng(11, 0);
        let n = 20_000;
        let mut out = [0.0; 3];
        let mut nonzero = 0;
        for _ in 0..n {
            k.sample_into(&mut rng, &mut out);
            let r2: f64 = out.iter().map(|v| v * v).sum();
            assert!(r2 < 1.44);
            if r2 > 0.0 {
                nonzero += 1;
            }
        }
        let frac = nonzero as f64 / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((frac - p).abs() <= 3.0 * se, "{frac} vs {p}");
    }

    #[test]
    fn ball_draws_stay_inside_and_fill_radially() {
        let k = SmoothingKernel::UniformBall { radius: 2.0 };
        let mut rng = child_rng(5, 0);
        let mut out = [0.0; 2];
        let n = 20_000;
        let mut inner = 0;
        for _ in 0..n {
            k.sample_into(&mut rng, &mut out);
            let r = out.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(r <= 2.0);
            if r < 1.0 {
                inner += 1;
            }
        }
        // area fraction of the inner disc is 1/4
        let frac = inner as f64 / n as f64;
        assert!((frac - 0.25).abs() < 3.0 * (0.25f64 * 0.75 / n as f64).sqrt());
    }
}
