//! Optimal stationary deterministic policies for positive and negative MDPs
//! under exponential utility, by multiplicative value iteration.

use serde::{Deserialize, Serialize};

use crate::engine::exp::exp_infinite_value;
use crate::engine::{Horizon, ValueVector};
use crate::error::{Error, Result};
use crate::mdp::{Mdp, RewardSign};
use crate::policy::{enumerate_sd_policies, StationaryPolicy, DEFAULT_POLICY_GUARD};
use crate::utility::{iota, EXP_RANGE_LIMIT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Cap on stationary deterministic policies enumerated for the
    /// finiteness precondition.
    pub guard: u128,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            tol: 1e-10,
            max_iter: 100_000,
            guard: DEFAULT_POLICY_GUARD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskSolution {
    pub policy: StationaryPolicy,
    pub values: ValueVector,
    pub iterations: usize,
    /// Sup-norm Bellman residual `|L u - u|` of the returned `u`.
    pub residual: f64,
}

impl RiskSolution {
    /// Choice index taken in state `s`.
    pub fn policy_choice(&self, s: usize) -> usize {
        self.policy.weights(s)[0].0
    }
}

/// Precondition of [`risk_vi_solve`]: the optimal values are finite.
fn check_finiteness(mdp: &Mdp, gamma: f64, guard: u128) -> Result<()> {
    let all_finite = |universal: bool| -> Result<bool> {
        let mut any = false;
        for pi in enumerate_sd_policies(mdp, guard)? {
            let finite = exp_infinite_value(mdp, &pi, gamma)?
                .iter()
                .all(|v| v.outcome.is_finite());
            if universal && !finite {
                return Ok(false);
            }
            any |= finite;
        }
        Ok(universal || any)
    };
    match mdp.reward_sign() {
        RewardSign::AllZero => Ok(()),
        RewardSign::Mixed => Err(Error::Precondition(
            "the model has rewards of both signs; the solver needs a positive or negative MDP".into(),
        )),
        RewardSign::Positive if gamma < 1.0 => Ok(()),
        RewardSign::Positive => {
            if all_finite(true)? {
                Ok(())
            } else {
                Err(Error::Precondition(format!(
                    "positive MDP with gamma = {gamma} > 1 needs C8 (every stationary deterministic policy has finite values), and C8 fails"
                )))
            }
        }
        RewardSign::Negative if gamma > 1.0 => Ok(()),
        RewardSign::Negative => {
            if all_finite(false)? {
                Ok(())
            } else {
                Err(Error::Precondition(format!(
                    "negative MDP with gamma = {gamma} < 1 needs C9 (some stationary deterministic policy has finite values), and C9 fails"
                )))
            }
        }
    }
}

/// `Q(s, c) = sum_{s'} P(s' | s, c) gamma^{r} u(s')` for every choice.
fn q_values(mdp: &Mdp, weights: &[Vec<Vec<(usize, f64)>>], u: &[f64]) -> Vec<Vec<f64>> {
    (0..mdp.num_states())
        .map(|s| {
            weights[s]
                .iter()
                .map(|outs| outs.iter().map(|&(t, w)| w * u[t]).sum())
                .collect()
        })
        .collect()
}

/// Value iteration on `u_{k+1}(s) = opt_a sum P gamma^r u_k(s')` from
/// `u_0 = 1`, with `opt = max` for convex and `min` for concave utilities.
///
/// Several actions can attain the optimum; a greedy pick among them may
/// loop on zero-reward transitions forever and never collect the value. The
/// returned policy therefore prefers, at states whose value differs from
/// `U(0)`, optimal actions that either carry a nonzero reward or move
/// towards states that do.
pub fn risk_vi_solve(mdp: &Mdp, gamma: f64, cfg: &SolveConfig) -> Result<RiskSolution> {
    if !(gamma > 0.0) || gamma == 1.0 || !gamma.is_finite() {
        return Err(Error::Range(format!(
            "gamma must be positive and different from 1, got {gamma}"
        )));
    }
    let ln_g = gamma.ln();
    if mdp.rewards().any(|r| (r * ln_g).abs() > EXP_RANGE_LIMIT) {
        return Err(Error::Range(format!(
            "gamma^r exceeds the representable range for gamma = {gamma}"
        )));
    }
    check_finiteness(mdp, gamma, cfg.guard)?;
    let io = iota(gamma);
    let maximize = io > 0.0;
    let n = mdp.num_states();
    let weights: Vec<Vec<Vec<(usize, f64)>>> = (0..n)
        .map(|s| {
            mdp.choices(s)
                .iter()
                .map(|c| {
                    c.outcomes
                        .iter()
                        .map(|o| (o.to, o.prob * (o.reward * ln_g).exp()))
                        .collect()
                })
                .collect()
        })
        .collect();
    let pick = |qs: &[f64]| -> f64 {
        if maximize {
            qs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        } else {
            qs.iter().copied().fold(f64::INFINITY, f64::min)
        }
    };
    let mut u = vec![1.0; n];
    let mut residuals = Vec::new();
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    while iterations < cfg.max_iter {
        let next: Vec<f64> = q_values(mdp, &weights, &u).iter().map(|qs| pick(qs)).collect();
        residual = next
            .iter()
            .zip(&u)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if !residual.is_finite() {
            return Err(Error::NonConvergence {
                iterations,
                last: residual,
                residuals,
            });
        }
        u = next;
        iterations += 1;
        if residuals.len() == 16 {
            residuals.remove(0);
        }
        residuals.push(residual);
        if residual < cfg.tol {
            break;
        }
    }
    if residual >= cfg.tol {
        return Err(Error::NonConvergence {
            iterations,
            last: residual,
            residuals,
        });
    }
    let q = q_values(mdp, &weights, &u);
    let policy = extract_policy(mdp, &q, &u, maximize, cfg.tol);
    let bellman: Vec<f64> = q.iter().map(|qs| pick(qs)).collect();
    let residual = bellman
        .iter()
        .zip(&u)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(RiskSolution {
        policy: StationaryPolicy::Deterministic(policy),
        values: ValueVector {
            values: u.iter().map(|x| io * x).collect(),
            horizon: Horizon::Infinite,
            utility: format!("exponential(gamma={gamma})"),
        },
        iterations,
        residual,
    })
}

fn extract_policy(mdp: &Mdp, q: &[Vec<f64>], u: &[f64], maximize: bool, tol: f64) -> Vec<usize> {
    let n = mdp.num_states();
    let slack = |s: usize| 1e3 * tol * u[s].abs().max(1.0);
    let optimal: Vec<Vec<usize>> = (0..n)
        .map(|s| {
            let best = if maximize {
                q[s].iter().copied().fold(f64::NEG_INFINITY, f64::max)
            } else {
                q[s].iter().copied().fold(f64::INFINITY, f64::min)
            };
            (0..q[s].len())
                .filter(|&c| (q[s][c] - best).abs() <= slack(s))
                .collect()
        })
        .collect();
    let mut choice: Vec<Option<usize>> = vec![None; n];
    for s in 0..n {
        let neutral = (u[s] - 1.0).abs() <= slack(s);
        let rewarding = optimal[s]
            .iter()
            .copied()
            .find(|&c| mdp.choices(s)[c].outcomes.iter().any(|o| o.reward != 0.0));
        choice[s] = if neutral { Some(optimal[s][0]) } else { rewarding };
    }
    // attractor: states pick an optimal action with an outcome already settled
    loop {
        let mut changed = false;
        for s in 0..n {
            if choice[s].is_some() {
                continue;
            }
            if let Some(&c) = optimal[s]
                .iter()
                .find(|&&c| mdp.choices(s)[c].outcomes.iter().any(|o| choice[o.to].is_some()))
            {
                choice[s] = Some(c);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    (0..n).map(|s| choice[s].unwrap_or(optimal[s][0])).collect()
}
