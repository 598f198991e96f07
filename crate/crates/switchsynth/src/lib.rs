//! Synthesis of safe switching rules for periodically sampled switched
//! linear systems, after the two classic approaches: a grid abstraction
//! with finite-graph safety synthesis (indirect) and a controllable-
//! subspace fixpoint over griddy sets (direct), plus an exact simulator.

pub mod cli;
pub mod direct;
pub mod error;
pub mod flow;
pub mod indirect;
pub mod model;
pub mod numeric;
pub mod sim;

pub use error::{Error, Result};
