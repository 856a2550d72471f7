//! Smoothed measures, Monte Carlo estimates of smoothed W2 and the gap to
//! the exact distance.
//!
//! Every estimate is a pure function of its seed. Trials run in parallel and
//! are collected in trial order, so results do not depend on thread count.

mod checks;
mod estimate;
mod kernel;
mod sampling;

pub use checks::{fit_slope, ROUNDING_TOL, linear_lb_check, local_invariance_check, LinearCheck, LocalInvariance, SlopeFit};
pub use estimate::{exp_bound, gap_curve, got_estimate, got_estimate_with_kernel, GapCurve, GapRecord, GotEstimate, MonteCarlo};
pub use kernel::SmoothingKernel;
pub use sampling::{allocate, empirical_w2, sample_smoothed, sample_smoothed_with, Allocation, PointCloud};
