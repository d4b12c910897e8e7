//! Simulation and detection toolkit for data-deception attacks on networked
//! control systems protected by parsimonious physical watermarking.
//!
//! The crate covers the full pipeline:
//!
//! - [`solvers`]: discrete Riccati/Lyapunov solvers and steady-state gains;
//! - [`model`]: plant + LQG controller, attacker process, watermark spec;
//! - [`sim`]: closed-loop simulation with watermark injection and attack onset;
//! - [`detector`]: Shiryaev-statistic detector with joint
//!   innovation/watermark likelihood ratios and two-threshold decisions;
//! - [`policy`]: value iteration on the discretized posterior, threshold
//!   extraction and Lagrange-multiplier grid search;
//! - [`theory`]: closed-form KLD, asymptotic delay/false-alarm formulas,
//!   control-cost increase and the rank-one watermark optimizer;
//! - [`mc`]: Monte-Carlo estimation of detection delay, false alarm rate,
//!   watermark usage, control-cost increase, overshoot statistics and
//!   baseline comparisons;
//! - [`fixtures`]: the two benchmark systems and TOML fixture files.

pub mod detector;
pub mod error;
pub mod fixtures;
pub mod mc;
pub mod model;
pub mod policy;
pub mod sim;
pub mod solvers;
pub mod streams;
pub mod theory;

pub use error::{Error, Result};
