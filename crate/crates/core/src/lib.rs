//! Estimation of the quadratic functional `Q(theta) = sum_i theta_i^2` in the
//! Gaussian sequence model `Y_i = theta_i + n^{-1/2} z_i`.
//!
//! The crate provides:
//!
//! * the sequence model itself with a dyadic block geometry and the
//!   threshold/centering constants every estimator consumes ([`seq_model`]),
//! * Lp and Besov coefficient balls, membership tests, and adversarial
//!   parameter configurations ([`param_spaces`]),
//! * block/term-by-term thresholding estimators, the oracle-tuned block cut,
//!   and the ball-free adaptive estimator built by penalized maximization
//!   ([`estimators`]),
//! * the minimax/adaptive rate calculus and the regime comparison table
//!   ([`rates`]),
//! * a reproducible, parallel Monte Carlo risk lab with slope fitting and
//!   numerical check suites for the moment bounds the estimators rely on
//!   ([`risk_lab`]).
//!
//! All randomness is derived from explicit 64-bit seeds with one independent
//! substream per replication, so every experiment is bit-reproducible
//! regardless of thread count.

pub mod error;
pub mod estimators;
pub mod gauss;
pub mod param_spaces;
pub mod quad;
pub mod rates;
pub mod risk_lab;
pub mod seq_model;

pub use error::{Error, Result};
pub use estimators::{q_adaptive, q_kstar, EstimateReport, Estimator, MidKind};
pub use param_spaces::{q_of_theta, BallKind, BallSpec, NamedTheta};
pub use rates::{minimax_rate, RateSummary, Regime};
pub use risk_lab::{mc_risk, sup_risk, RiskEstimate, SlopeFit};
pub use seq_model::{block_scheme, simulate, BlockScheme, ModelConfig, Observation, ThetaVector};
