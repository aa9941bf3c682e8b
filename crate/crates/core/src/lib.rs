//! Existence and finiteness analysis for expected utilities of total reward
//! in finite Markov decision processes.
//!
//! The crate is organised bottom-up:
//!
//! - [`mdp`] and [`utility`]: domain types, document parsing and validation.
//! - [`policy`] and [`chain`]: stationary policies, induced Markov chains and
//!   their recurrent-class structure.
//! - [`engine`]: exact finite-horizon values, the exponential-utility matrix
//!   machinery, infinite-horizon value/existence engines and risk-sensitive
//!   value iteration.
//! - [`conditions`]: checkers for conditions `C1`..`C18` and the existence
//!   verdict table.
//! - [`simulate`]: seeded Monte Carlo estimates used as an independent oracle.

pub mod chain;
pub mod conditions;
pub mod engine;
pub mod error;
pub mod extreal;
mod graph;
pub mod linalg;
pub mod mdp;
pub mod policy;
pub mod simulate;
pub mod utility;

pub use error::{Error, Result};
pub use extreal::{ExtReal, NonExistReason, ValueOutcome};
pub use mdp::{Mdp, RewardSign, Sign};
pub use policy::StationaryPolicy;
pub use utility::UtilitySpec;

/// Absolute tolerance for probability masses (per choice and per policy rule).
pub const PROB_TOL: f64 = 1e-9;
