//! Desk-scale algorithmic information theory toolkit.
//!
//! The crate is organised bottom-up:
//!
//! * [`binary`]: finite bit strings, infinite bit sources and run-block analysis.
//! * [`numerics`]: exact rationals and certified intervals for `2^(-l/T)`.
//! * [`machine`]: prefix-free machines (tables, a small interpreter, synthetic
//!   domains), dovetailed enumeration and bounded-search complexity.
//! * [`partition`]: certified partial sums of the partition function `Z(T)`.
//! * [`betting`]: martingales with exact rational capital.
//! * [`prediction`]: predictors, automata with outputs, the predictor to
//!   martingale compilers and the run-length automaton synthesizer.
//! * [`cli`]: the batch command-line surface used by the `aitk` binary.

pub mod betting;
pub mod binary;
pub mod cli;
mod error;
pub mod machine;
pub mod numerics;
pub mod partition;
pub mod prediction;

pub use binary::{BitSource, BitString, RunBlocks};
pub use error::{Error, Result};
pub use numerics::{Rational, RationalInterval, Tristate};
