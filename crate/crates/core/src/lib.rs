//! Random derangements: a restricted-transposition random walk, a sequential
//! importance sampler, and the exact cycle-count statistics both must match.
//!
//! The crate is organised bottom-up:
//!
//! - [`permutation`]: one-line permutations, cycle decomposition, predicates.
//! - [`combinatorics`]: exact big-integer counts (rencontres numbers, Stirling
//!   numbers, cycle-count distributions, perfect matchings).
//! - [`rng`]: the xoshiro256+ generator with reproducible stream derivation.
//! - [`samplers`]: Sattolo, the restricted-transposition walk, sequential
//!   importance sampling, and rejection sampling.
//! - [`statistics`]: empirical measures, total variation, mixing times,
//!   failure experiments, goodness of fit and the uniformity census.
//! - [`cli`]: the `derange` command-line front end.

pub mod cli;
pub mod combinatorics;
mod error;
pub mod permutation;
pub mod rng;
pub mod samplers;
pub mod statistics;

pub use error::{Error, Result};
pub use permutation::{CycleDecomposition, Permutation};
pub use rng::{RandomSource, RngState, Xoshiro256Plus};
