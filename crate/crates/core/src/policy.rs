//! Stationary deterministic and randomized policies.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::Mdp;
use crate::PROB_TOL;

/// Default cap on the number of stationary deterministic policies a
/// quantified check may enumerate.
pub const DEFAULT_POLICY_GUARD: u128 = 1_000_000;

/// A single decision rule used at every step. Actions are referred to by
/// their position in [`Mdp::choices`] of the state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StationaryPolicy {
    Deterministic(Vec<usize>),
    /// Per state, `(choice index, probability)` with strictly positive
    /// probabilities summing to one.
    Randomized(Vec<Vec<(usize, f64)>>),
}

impl StationaryPolicy {
    pub fn deterministic(mdp: &Mdp, choice: Vec<usize>) -> Result<Self> {
        let pi = StationaryPolicy::Deterministic(choice);
        pi.check(mdp)?;
        Ok(pi)
    }

    pub fn randomized(mdp: &Mdp, rule: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let pi = StationaryPolicy::Randomized(rule);
        pi.check(mdp)?;
        Ok(pi)
    }

    /// Deterministic policy from one action name per state.
    pub fn from_action_names(mdp: &Mdp, names: &[&str]) -> Result<Self> {
        if names.len() != mdp.num_states() {
            return Err(Error::PolicyMismatch(format!(
                "{} actions given for {} states",
                names.len(),
                mdp.num_states()
            )));
        }
        let choice = names
            .iter()
            .enumerate()
            .map(|(s, a)| {
                mdp.choice_index(s, a).ok_or_else(|| {
                    Error::PolicyMismatch(format!(
                        "action '{a}' is not enabled in '{}'",
                        mdp.state_name(s)
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(StationaryPolicy::Deterministic(choice))
    }

    /// Uniform distribution over the enabled actions of every state.
    pub fn uniform(mdp: &Mdp) -> Self {
        StationaryPolicy::Randomized(
            (0..mdp.num_states())
                .map(|s| {
                    let k = mdp.choices(s).len();
                    (0..k).map(|c| (c, 1.0 / k as f64)).collect()
                })
                .collect(),
        )
    }

    pub fn num_states(&self) -> usize {
        match self {
            StationaryPolicy::Deterministic(c) => c.len(),
            StationaryPolicy::Randomized(r) => r.len(),
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, StationaryPolicy::Deterministic(_))
    }

    /// `(choice index, probability)` pairs of state `s`.
    pub fn weights(&self, s: usize) -> Vec<(usize, f64)> {
        match self {
            StationaryPolicy::Deterministic(c) => vec![(c[s], 1.0)],
            StationaryPolicy::Randomized(r) => r[s].clone(),
        }
    }

    /// Checks that the rule matches the model: one entry per state, enabled
    /// actions only, positive probabilities summing to one.
    pub fn check(&self, mdp: &Mdp) -> Result<()> {
        if self.num_states() != mdp.num_states() {
            return Err(Error::PolicyMismatch(format!(
                "policy covers {} states, model has {}",
                self.num_states(),
                mdp.num_states()
            )));
        }
        for s in 0..mdp.num_states() {
            let enabled = mdp.choices(s).len();
            let w = self.weights(s);
            if w.is_empty() {
                return Err(Error::PolicyMismatch(format!(
                    "no action for '{}'",
                    mdp.state_name(s)
                )));
            }
            let mut seen = vec![false; enabled];
            for &(c, p) in &w {
                if c >= enabled || std::mem::replace(&mut seen[c], true) {
                    return Err(Error::PolicyMismatch(format!(
                        "invalid or repeated action index {c} in '{}'",
                        mdp.state_name(s)
                    )));
                }
                if !(p > 0.0) {
                    return Err(Error::PolicyMismatch(format!(
                        "non-positive probability {p} in '{}'",
                        mdp.state_name(s)
                    )));
                }
            }
            let total: f64 = w.iter().map(|&(_, p)| p).sum();
            if (total - 1.0).abs() > PROB_TOL {
                return Err(Error::PolicyMismatch(format!(
                    "probabilities in '{}' sum to {total}",
                    mdp.state_name(s)
                )));
            }
        }
        Ok(())
    }

    /// `s1=top, s2=stay` for deterministic rules, `s1={top:0.5,bottom:0.5}`
    /// entries otherwise.
    pub fn describe(&self, mdp: &Mdp) -> String {
        (0..self.num_states())
            .map(|s| {
                let name = |c: usize| mdp.action_name(mdp.choices(s)[c].action).to_string();
                let rule = match self {
                    StationaryPolicy::Deterministic(c) => name(c[s]),
                    StationaryPolicy::Randomized(r) => {
                        let parts: Vec<String> =
                            r[s].iter().map(|&(c, p)| format!("{}:{p}", name(c))).collect();
                        format!("{{{}}}", parts.join(","))
                    }
                };
                format!("{}={rule}", mdp.state_name(s))
            })
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// Lexicographic enumeration of all stationary deterministic policies, the
/// first state being the most significant digit.
#[derive(Debug, Clone)]
pub struct SdPolicies {
    radix: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl Iterator for SdPolicies {
    type Item = StationaryPolicy;

    fn next(&mut self) -> Option<Self::Item> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut carry = true;
        for (digit, &radix) in succ.iter_mut().zip(&self.radix).rev() {
            *digit += 1;
            if *digit < radix {
                carry = false;
                break;
            }
            *digit = 0;
        }
        if !carry {
            self.next = Some(succ);
        }
        Some(StationaryPolicy::Deterministic(current))
    }
}

/// All stationary deterministic policies of `mdp`, or a guard error carrying
/// the exact count when there are more than `guard`.
pub fn enumerate_sd_policies(mdp: &Mdp, guard: u128) -> Result<SdPolicies> {
    let count = mdp.sd_policy_count();
    if count > guard {
        return Err(Error::GuardExceeded { count, guard });
    }
    let radix: Vec<usize> = (0..mdp.num_states()).map(|s| mdp.choices(s).len()).collect();
    let next = if radix.iter().all(|&r| r > 0) {
        Some(vec![0; radix.len()])
    } else {
        None
    };
    Ok(SdPolicies { radix, next })
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum PolicyDoc {
    Deterministic { choice: BTreeMap<String, String> },
    Randomized { choice: BTreeMap<String, BTreeMap<String, f64>> },
}

/// Parses a policy document against `mdp`. States with a single enabled
/// action may be omitted.
pub fn parse_policy(text: &str, mdp: &Mdp) -> Result<StationaryPolicy> {
    let doc: PolicyDoc = serde_json::from_str(text).map_err(|e| Error::from_json(&e))?;
    let state_of = |name: &str| {
        mdp.state_index(name)
            .ok_or_else(|| Error::semantic(format!("choice.{name}"), "unknown state"))
    };
    let action_of = |s: usize, a: &str| {
        mdp.choice_index(s, a).ok_or_else(|| {
            Error::semantic(
                format!("choice.{}", mdp.state_name(s)),
                format!("action '{a}' is not enabled"),
            )
        })
    };
    let default_rule = |s: usize| {
        if mdp.choices(s).len() == 1 {
            Ok(0)
        } else {
            Err(Error::semantic(
                format!("choice.{}", mdp.state_name(s)),
                "missing rule for a state with several enabled actions",
            ))
        }
    };
    let pi = match doc {
        PolicyDoc::Deterministic { choice } => {
            let mut rule = vec![None; mdp.num_states()];
            for (state, action) in &choice {
                let s = state_of(state)?;
                rule[s] = Some(action_of(s, action)?);
            }
            let rule = rule
                .into_iter()
                .enumerate()
                .map(|(s, c)| c.map_or_else(|| default_rule(s), Ok))
                .collect::<Result<Vec<_>>>()?;
            StationaryPolicy::Deterministic(rule)
        }
        PolicyDoc::Randomized { choice } => {
            let mut rule = vec![None; mdp.num_states()];
            for (state, dist) in &choice {
                let s = state_of(state)?;
                let mut entries = Vec::new();
                for (a, &p) in dist {
                    entries.push((action_of(s, a)?, p));
                }
                entries.sort_by_key(|&(c, _)| c);
                rule[s] = Some(entries);
            }
            let rule = rule
                .into_iter()
                .enumerate()
                .map(|(s, r)| r.map_or_else(|| default_rule(s).map(|c| vec![(c, 1.0)]), Ok))
                .collect::<Result<Vec<_>>>()?;
            StationaryPolicy::Randomized(rule)
        }
    };
    pi.check(mdp)?;
    Ok(pi)
}
