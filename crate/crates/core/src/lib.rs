//! Simulation library for stochastic low-rank bandits.
//!
//! The learner picks a `d`-subset of rows and a `d`-subset of columns of an
//! unknown non-negative rank-`d` matrix and observes noisy entries. Under the
//! hott-topics assumption the best entry lies in the `d`-row and `d`-column
//! with the largest latent volume, so the problem reduces to eliminating
//! `d`-subsets by estimated squared determinants.
//!
//! * [`matcore`]: dense matrices, exact determinants, subset enumeration.
//! * [`environment`]: instance generation, reward noise, oracle quantities.
//! * [`bandit`]: the noise-free solver, `LowRankElim` and its eliminator-chain
//!   variant, and a flat UCB1 baseline.
//! * [`analysis`]: regret bound evaluation and empirical lemma checks.

pub mod analysis;
pub mod bandit;
pub mod environment;
pub mod error;
pub mod matcore;
pub mod rng;

pub use error::{Error, Result};
