//! Exact computations on Cantor space: dyadic arithmetic, computable
//! measures, truth-table functionals and the measures they induce,
//! limit-computable mutation schedules, tally functionals, staged
//! randomness tests, and set systems built from finite distributive lattices.

#![allow(clippy::needless_range_loop)]

pub mod approximation;
pub mod bits;
pub mod dyadic;
pub mod functionals;
pub mod measures;
pub mod mltests;
pub mod lattice;
pub mod tally;

pub use bits::{BitSource, BitString, EventuallyPeriodic, Sequence};
pub use dyadic::DyadicRational;
