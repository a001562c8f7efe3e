//! Rate functions and the asymptotic implied-volatility surface of the
//! time-discretized log-normal SABR model.
//!
//! The crate evaluates the large-deviations rate functions of the modified
//! Log-Euler discretization (the joint volatility rate I(u, v), the
//! integrated-variance rate J_BS, and the log-price rate J_X), builds the
//! closed-form asymptotic smile from them, and validates both against a
//! reproducible conditional Monte Carlo implementation of the scheme.
//!
//! Entry points:
//! - [`surface::implied_vol`] / [`surface::smile`]: the asymptotic surface.
//! - [`rate`]: rate functions, the martingale infimum point and switch point.
//! - [`mc`]: the Monte Carlo engine with variance-reduced pricing.
//! - [`black`], [`roots`]: pricing and transcendental-solver primitives.

pub mod black;
pub mod error;
pub mod mc;
pub mod rate;
pub mod roots;
pub mod surface;

pub use error::{Result, SabrError};
pub use rate::{Branch, RateEval, ScalingParams};
pub use surface::{ModelParams, Region, SmilePoint};
