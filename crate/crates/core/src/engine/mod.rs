//! Value engines: finite-horizon expected utilities, the exponential-utility
//! matrix machinery, infinite-horizon values and risk-sensitive value
//! iteration.

pub mod eq2;
pub mod exp;
pub mod extreme;
pub mod finite;
pub mod linear;
pub mod probe;
pub mod solve;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::extreal::ValueOutcome;

pub use eq2::{decompose_eq2, Eq2Decomposition, Eq2Triple};
pub use exp::{exp_finite_horizon, exp_infinite_value, exp_matrix, hat_decompose, ExpMatrix, HatDecomposition};
pub use extreme::{extreme_total_reward, ExtremeRewards};
pub use finite::{enumerate_eu, finite_horizon_eu, ENUMERATION_BUDGET};
pub use linear::{class_gains, linear_infinite_value};
pub use probe::{classify_sequence, horizon_sequences, limit_probe, ProbeConfig, ProbeVerdict};
pub use solve::{risk_vi_solve, RiskSolution, SolveConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Horizon {
    Finite(usize),
    Infinite,
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Horizon::Finite(t) => write!(f, "{t}"),
            Horizon::Infinite => f.write_str("infinite"),
        }
    }
}

/// Finite per-state values at a fixed horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueVector {
    pub values: Vec<f64>,
    pub horizon: Horizon,
    pub utility: String,
}

/// Infinite-horizon outcome of one state, labelled with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluated {
    pub outcome: ValueOutcome,
    /// Produced by the horizon-sequence probe rather than an analytic rule.
    pub numeric: bool,
}

impl Evaluated {
    pub fn analytic(outcome: ValueOutcome) -> Self {
        Evaluated {
            outcome,
            numeric: false,
        }
    }

    pub fn numeric(outcome: ValueOutcome) -> Self {
        Evaluated {
            outcome,
            numeric: true,
        }
    }
}
