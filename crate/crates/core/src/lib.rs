//! Executable constructions relating selector functions for sequences of
//! differences of c.e. sets to relative computable categoricity, evaluated
//! at a finite horizon.

pub mod approx;
pub mod cones;
pub mod diff;
pub mod error;
pub mod formula;
pub mod gen;
pub mod genericity;
pub mod numbering;
pub mod structure;
pub mod suite;

pub use error::{Error, Result};
pub use numbering::{Enumeration, FiniteSet, Horizon};
