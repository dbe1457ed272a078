//! Relaxation-based contextual bandits.
//!
//! The crate implements a contextual-bandit learner that only needs the
//! *value* of an empirical-risk-minimization (ERM) objective over a policy
//! class. Each round it draws a random playout of future contexts (from an
//! unlabeled pool) and Rademacher signs, queries the ERM oracle once per
//! action, solves a small minimax problem by water-filling, and mixes in
//! uniform exploration.
//!
//! Layout:
//! - [`policy`]: contexts, cost vectors, simplex distributions, policy classes
//!   and their one-hot matrix representation.
//! - [`erm`]: value-of-ERM oracles (exact, noisy, regularized, relaxed),
//!   constraint functions and a brute-force metric-labeling solver.
//! - [`waterfill`]: the per-round minimax solver.
//! - [`rademacher`]: Monte-Carlo vector Rademacher averages, γ tuning and bounds.
//! - [`bistro`]: the learner and its regularized / relaxed variants.
//! - [`adversarial`]: full-information to bandit reduction with exponential weights.
//! - [`harness`]: environments, episodes, regret accounting, suites, admissibility checks.
//! - [`verify`]: deliberately naive reference oracles used by tests and `selftest`.

pub mod adversarial;
pub mod bistro;
pub mod erm;
mod error;
pub mod harness;
pub mod policy;
pub mod rademacher;
pub mod rng;
pub mod strategy;
pub mod verify;
pub mod waterfill;

pub use error::{Error, Result};
