//! Exact Le Cam deficiency between finite statistical experiments.
//!
//! The crate computes `δ(E, F) = min_T max_θ TV(P_θ T, Q_θ)` by linear programming over
//! Markov kernels and builds a set of checks on top of it:
//!
//! - [`experiment`]: distributions, experiments, kernels and the experiment algebra.
//! - [`deficiency`]: the deficiency LP, Le Cam distance and a grid-search oracle.
//! - [`risk`]: decision problems, risk, rule transfer and sample-based certificates.
//! - [`hierarchy`]: sufficiency, likelihood distortion, pairwise testing and Le Cam levels.
//! - [`gaussian`]: binned Gaussian location families.
//! - [`composition`]: error accumulation along kernel chains and the transfer inequality.
//! - [`shannon`]: channel codes over the binary symmetric channel as experiments.
//! - [`verify`]: the regression corpus behind `lecam verify-paper`.
//! - [`cli`]: the `lecam` command line.
//!
//! ```
//! use lecam::experiment::Experiment;
//! use lecam::deficiency::deficiency;
//!
//! let sharp = Experiment::from_rows("sharp", &["0", "1"], &["0", "1"],
//!     vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
//! let noisy = Experiment::from_rows("noisy", &["0", "1"], &["0", "1"],
//!     vec![vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap();
//! assert!(deficiency(&sharp, &noisy).unwrap().value < 1e-9);
//! assert!((deficiency(&noisy, &sharp).unwrap().value - 0.1).abs() < 1e-9);
//! ```

#![forbid(unsafe_code)]

pub mod cli;
pub mod composition;
pub mod deficiency;
pub mod error;
pub mod experiment;
pub mod fixtures;
pub mod gaussian;
pub mod hierarchy;
pub mod json;
pub mod lp;
pub mod random;
pub mod risk;
pub mod shannon;
pub mod verify;

pub use error::{Error, Result};
