//! Time-dependent elementary cellular automata and formal tests for
//! unbounded evolution, innovation and open-ended evolution.

pub mod cli;
pub mod complexity;
pub mod eca;
pub mod ensemble;
pub mod error;
pub mod innovation;
pub mod io;
pub mod recurrence;
pub mod variants;

pub use error::{Error, Result};
