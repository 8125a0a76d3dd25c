//! Entropy rates of classical message sources driven by periodically
//! measured one-dimensional walks.
//!
//! A walker (classical or coined quantum) evolves undisturbed for `w` steps,
//! its position is measured, and the measured position differences form the
//! emitted message. This crate computes, bounds, approximates and samples
//! the Shannon entropy rate of that source:
//!
//! - [`walk`]: state-vector engine for coined walks on a line or a cycle.
//! - [`entropy`]: Shannon entropies and the closed-form classical rates.
//! - [`coin_graph`]: the coin-state Markov chain, its stationary
//!   distribution, exact rates and certified intervals for truncated chains.
//! - [`protocols`]: the coin-ignoring upper bound (Monte Carlo and exact),
//!   scans over the waiting time, and independently prepared walks.
//! - [`weak_limit`]: the large-`w` density and its entropy integral.
//! - [`oracle`]: brute-force joint outcome distributions and partial rates.
//!
//! All rates are in bits per iteration, one iteration being a block of `w`
//! unitary steps followed by one position measurement.
//!
//! The crate is `no_std` and needs only `alloc`.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]
// `!(x >= a)` style checks are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod coin;
pub mod coin_graph;
pub mod entropy;
mod error;
pub mod oracle;
pub mod protocols;
mod quadrature;
mod rng;
mod state_index;
pub mod walk;
pub mod weak_limit;

pub use coin::{CoinOperator, CoinState};
pub use error::{Error, Result};
pub use rng::{seeded_rng, uniform_f64, SeededRng};
pub use walk::{Lattice, ShiftDistribution, ShiftProfile, WalkState};

/// Probabilities at or below this value are treated as exact zeros.
pub const PROBABILITY_THRESHOLD: f64 = 1e-12;
