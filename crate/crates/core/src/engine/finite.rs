//! Exact finite-horizon expected utilities.

use crate::engine::exp::{exp_finite_horizon, exp_matrix};
use crate::engine::{Horizon, ValueVector};
use crate::error::{Error, Result};
use crate::mdp::Mdp;
use crate::policy::StationaryPolicy;
use crate::utility::{UtilityForm, UtilitySpec};

/// Default cap on trajectory-steps for exhaustive enumeration.
pub const ENUMERATION_BUDGET: u64 = 10_000_000;

/// `v_{U,T}(s)` for every state: the exponential matrix path when the
/// utility is exponential, exhaustive trajectory enumeration otherwise.
pub fn finite_horizon_eu(
    mdp: &Mdp,
    pi: &StationaryPolicy,
    u: &UtilitySpec,
    horizon: usize,
) -> Result<ValueVector> {
    match u.form {
        UtilityForm::Exponential { gamma } => {
            let m = exp_matrix(mdp, pi, gamma)?;
            exp_finite_horizon(&m, horizon)
        }
        _ => enumerate_eu(mdp, pi, u, horizon, ENUMERATION_BUDGET),
    }
}

/// Number of length-`horizon` trajectories from each state, counting every
/// `(action, successor)` branch separately.
fn trajectory_counts(mdp: &Mdp, pi: &StationaryPolicy, horizon: usize) -> Vec<f64> {
    let n = mdp.num_states();
    let mut count = vec![1.0f64; n];
    for _ in 0..horizon {
        count = (0..n)
            .map(|s| {
                pi.weights(s)
                    .iter()
                    .flat_map(|&(c, _)| mdp.choices(s)[c].outcomes.iter())
                    .map(|o| count[o.to])
                    .sum()
            })
            .collect();
    }
    count
}

/// Sums `P(h) U(w(h))` over every length-`horizon` trajectory `h` from every
/// start state. Fails with a budget error when the total number of
/// trajectory-steps exceeds `budget`.
pub fn enumerate_eu(
    mdp: &Mdp,
    pi: &StationaryPolicy,
    u: &UtilitySpec,
    horizon: usize,
    budget: u64,
) -> Result<ValueVector> {
    if horizon == 0 {
        return Err(Error::Precondition("horizon must be at least 1".into()));
    }
    pi.check(mdp)?;
    let needed: f64 =
        trajectory_counts(mdp, pi, horizon).iter().sum::<f64>() * horizon as f64;
    if needed > budget as f64 {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let values = (0..mdp.num_states())
        .map(|s| {
            let mut acc = 0.0;
            walk(mdp, pi, u, s, horizon, 1.0, 0.0, &mut acc)?;
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ValueVector {
        values,
        horizon: Horizon::Finite(horizon),
        utility: u.describe(),
    })
}

#[allow(clippy::too_many_arguments)]
fn walk(
    mdp: &Mdp,
    pi: &StationaryPolicy,
    u: &UtilitySpec,
    s: usize,
    remaining: usize,
    prob: f64,
    wealth: f64,
    acc: &mut f64,
) -> Result<()> {
    if remaining == 0 {
        *acc += prob * u.evaluate(wealth)?;
        return Ok(());
    }
    for (c, w) in pi.weights(s) {
        for o in &mdp.choices(s)[c].outcomes {
            walk(
                mdp,
                pi,
                u,
                o.to,
                remaining - 1,
                prob * w * o.prob,
                wealth + o.reward,
                acc,
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::fixtures;

    #[test]
    fn goal_model_two_steps_linear() {
        let m = fixtures::fig1a();
        let pi = StationaryPolicy::Deterministic(vec![0, 0]);
        let v = enumerate_eu(&m, &pi, &UtilitySpec::linear(), 2, ENUMERATION_BUDGET).unwrap();
        // -1 w.p. 1/2 (absorbed at once), -2 w.p. 1/4 twice
        assert!((v.values[0] - -1.5).abs() < 1e-15);
        assert_eq!(v.values[1], 0.0);
    }

    #[test]
    fn one_step_linear_is_expected_reward() {
        let m = fixtures::fig3a();
        let pi = StationaryPolicy::Deterministic(vec![0, 0, 0]);
        let v = enumerate_eu(&m, &pi, &UtilitySpec::linear(), 1, ENUMERATION_BUDGET).unwrap();
        assert_eq!(v.values, vec![1.0, 0.5, -1.0]);
    }

    #[test]
    fn exponential_dispatches_to_matrix_path() {
        let m = fixtures::fig3a();
        let pi = StationaryPolicy::Deterministic(vec![0, 0, 0]);
        let u = UtilitySpec::exponential(2.0).unwrap();
        let v = finite_horizon_eu(&m, &pi, &u, 2).unwrap();
        // 5/2 - 1/6 - 4/3 * 1/4
        assert!((v.values[0] - 2.0).abs() < 1e-12);
        let e = enumerate_eu(&m, &pi, &u, 2, ENUMERATION_BUDGET).unwrap();
        assert!((e.values[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn budget_is_enforced() {
        let m = fixtures::fig3a();
        let pi = StationaryPolicy::Deterministic(vec![0, 0, 0]);
        let err = enumerate_eu(&m, &pi, &UtilitySpec::linear(), 30, 1000).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
    }
}
