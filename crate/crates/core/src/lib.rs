//! Quantum bit commitment simulator and attack laboratory.
//!
//! The crate models the generic one-way commitment framework (Alice prepares
//! an entangled state, keeps register A, sends register B to Bob, later
//! announces her bit and measurement outcome) and builds the local unitary
//! by which a committer who postpones her measurement switches bits at
//! opening time.

pub mod attacks;
pub mod cli;
pub mod error;
pub mod montecarlo;
pub mod protocol;
pub mod qmath;
pub mod schemes;

pub use error::{Error, Result};
