//! Arithmetic functions on short intervals `(X, X+H]`, their major-arc
//! approximants, and the combinatorial and analytic tools used to compare them.
//!
//! Everything here is pure: slabs, partitions and classifications are built once
//! and never mutated, so they can be shared across threads freely.

pub mod approximants;
pub mod arith;
pub mod calibration;
pub mod cli;
pub mod correlations;
pub mod decomposition;
pub mod error;
pub mod hyperbola;
pub mod interval_sieve;
pub mod linear_forms;
pub mod nilsequence;
pub mod poly_equidist;
pub mod progressions;

pub use error::{Error, Result};
pub use interval_sieve::{factor_interval, sieve_slab, FactoredInterval, IntervalSlab, Kind};
