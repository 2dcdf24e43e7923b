//! Simulation, exact interval distributions, and statistical inference
//! for the waning-interest point process.
//!
//! The model: events arrive with rate `lambda(t) = b/(at + 1)` for
//! `a >= 0, b > 0` and independent counts over disjoint intervals. The
//! rate decays from `b` toward zero, so activity dies out the way
//! interest in a topic does. The gap after the n-th event then follows a
//! heavy-tailed law whose density falls off as `t^-(b/a + 1)`: a
//! power-law exponent tunable over `(1, inf)` by the two parameters. At
//! `a = 0` the process degenerates to homogeneous Poisson with
//! exponential gaps.
//!
//! What's here:
//!
//! - [`intensity`]: the rate, its cumulative integral `Lambda`, and the
//!   closed-form inverse.
//! - [`simulate`]: exact sampling by time change, Lewis-Shedler thinning,
//!   and seeded deterministic ensembles.
//! - [`analytic`]: the exact survival function and density of the gap
//!   after event `n`, the tail exponent, and the incomplete gamma
//!   helpers.
//! - [`inference`]: interval extraction, log-binned distributions,
//!   log-log regression, Hill estimation, and profile maximum likelihood
//!   for `(a, b)`.
//! - [`validate`]: the cross-checking suite tying simulation to the
//!   analytic forms.
//! - [`cli`]: the `waning` binary's implementation.
//!
//! Start with the runnable examples (`cargo run --example <name>`):
//! `simulate_paths`, `theory_curves`, `exponent_recovery`,
//! `fit_intensity`, `analyze_timestamps`, `validate_model`.

pub mod analytic;
pub mod cli;
pub mod error;
pub mod inference;
pub mod intensity;
pub mod io;
mod quad;
pub mod simulate;
pub mod validate;

pub use error::{Error, Result};
pub use intensity::IntensityParams;
