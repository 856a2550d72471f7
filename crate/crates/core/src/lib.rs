//! Exact W2 optimal transport between discrete measures, with certificates
//! for uniqueness and robustness of the optimal matching and Monte Carlo
//! tools for Gaussian-smoothed transport.

pub mod certify;
pub mod cli;
pub mod error;
pub mod exact_ot;
pub mod instances;
pub mod measures;
pub mod rng;
pub mod robustness;
pub mod smoothing;

pub use error::{Error, Result};
pub use exact_ot::{solve_w2, Matching, OTSolution, Pairing, TransportPlan};
pub use measures::{DiscreteMeasure, Translation};
