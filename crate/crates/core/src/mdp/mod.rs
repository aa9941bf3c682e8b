//! Finite MDPs `(S, A, P, r)` with per-transition rewards.

mod format;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::PROB_TOL;

pub use format::{parse_mdp, parse_mdp_unchecked, to_document};

/// One successor of a `(state, action)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub to: usize,
    pub prob: f64,
    pub reward: f64,
}

/// An action enabled in a state together with its successor distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Choice {
    /// Index into [`Mdp::actions`].
    pub action: usize,
    pub outcomes: Vec<Outcome>,
}

impl Choice {
    pub fn mass(&self) -> f64 {
        self.outcomes.iter().map(|o| o.prob).sum()
    }
}

/// A finite MDP.
///
/// States and actions keep the order in which they were declared. The
/// choices of a state are the actions enabled in it, in order of first
/// appearance. An `Mdp` may be constructed in an invalid shape (see
/// [`MdpBuilder::build_unchecked`]) so that [`Mdp::validate`] can report
/// every violation; all analyses assume a valid model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mdp {
    states: Vec<String>,
    actions: Vec<String>,
    choices: Vec<Vec<Choice>>,
    initial: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardSign {
    Positive,
    Negative,
    Mixed,
    AllZero,
}

impl RewardSign {
    /// Every reward is `>= 0`.
    pub fn is_positive_model(self) -> bool {
        matches!(self, RewardSign::Positive | RewardSign::AllZero)
    }

    /// Every reward is `<= 0`.
    pub fn is_negative_model(self) -> bool {
        matches!(self, RewardSign::Negative | RewardSign::AllZero)
    }

    /// Classifies a multiset of rewards by exact sign tests.
    pub fn classify(rewards: impl IntoIterator<Item = f64>) -> Self {
        let (mut pos, mut neg) = (false, false);
        for r in rewards {
            pos |= r > 0.0;
            neg |= r < 0.0;
        }
        match (pos, neg) {
            (false, false) => RewardSign::AllZero,
            (true, false) => RewardSign::Positive,
            (false, true) => RewardSign::Negative,
            (true, true) => RewardSign::Mixed,
        }
    }
}

impl fmt::Display for RewardSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RewardSign::Positive => "positive",
            RewardSign::Negative => "negative",
            RewardSign::Mixed => "mixed",
            RewardSign::AllZero => "all-zero",
        })
    }
}

/// A well-formedness violation located at a state and optionally an action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub state: Option<String>,
    pub action: Option<String>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.state, &self.action) {
            (Some(s), Some(a)) => write!(f, "({s}, {a}): {}", self.message),
            (Some(s), None) => write!(f, "{s}: {}", self.message),
            _ => f.write_str(&self.message),
        }
    }
}

impl Mdp {
    pub fn builder() -> MdpBuilder {
        MdpBuilder::default()
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn state_name(&self, s: usize) -> &str {
        &self.states[s]
    }

    pub fn action_name(&self, a: usize) -> &str {
        &self.actions[a]
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn initial(&self) -> Option<usize> {
        self.initial
    }

    /// Enabled actions of `s` with their successor distributions.
    pub fn choices(&self, s: usize) -> &[Choice] {
        &self.choices[s]
    }

    /// Position of `action` among the choices of `s`.
    pub fn choice_index(&self, s: usize, action: &str) -> Option<usize> {
        self.choices[s]
            .iter()
            .position(|c| self.actions[c.action] == action)
    }

    pub fn rewards(&self) -> impl Iterator<Item = f64> + '_ {
        self.choices
            .iter()
            .flatten()
            .flat_map(|c| c.outcomes.iter().map(|o| o.reward))
    }

    /// Number of stationary deterministic policies, saturating at `u128::MAX`.
    pub fn sd_policy_count(&self) -> u128 {
        self.choices
            .iter()
            .fold(1u128, |acc, c| acc.saturating_mul(c.len() as u128))
    }

    pub fn max_abs_reward(&self) -> f64 {
        self.rewards().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// Checks every structural invariant and returns one diagnostic per
    /// violation. An empty list means the model is valid.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        if self.states.is_empty() {
            out.push(Diagnostic {
                state: None,
                action: None,
                message: "model has no states".into(),
            });
        }
        if self.actions.is_empty() {
            out.push(Diagnostic {
                state: None,
                action: None,
                message: "model has no actions".into(),
            });
        }
        for (s, choices) in self.choices.iter().enumerate() {
            let state = Some(self.states[s].clone());
            if choices.is_empty() {
                out.push(Diagnostic {
                    state: state.clone(),
                    action: None,
                    message: "no enabled action".into(),
                });
            }
            for choice in choices {
                let action = Some(self.actions[choice.action].clone());
                let diag = |message: String| Diagnostic {
                    state: state.clone(),
                    action: action.clone(),
                    message,
                };
                for o in &choice.outcomes {
                    if o.to >= self.states.len() {
                        out.push(diag(format!("successor index {} out of range", o.to)));
                    }
                    if !(o.prob > 0.0 && o.prob <= 1.0) {
                        out.push(diag(format!("probability {} outside (0, 1]", o.prob)));
                    }
                    if !o.reward.is_finite() {
                        out.push(diag(format!("reward {} is not finite", o.reward)));
                    }
                }
                let mass = choice.mass();
                if (mass - 1.0).abs() > PROB_TOL {
                    out.push(diag(format!("probability mass {mass} \u{2260} 1")));
                }
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Same structure with every reward replaced by `max(r, 0)` or `min(r, 0)`.
    pub fn signed_part(&self, sign: Sign) -> Mdp {
        let clamp = |r: f64| match sign {
            Sign::Positive => r.max(0.0),
            Sign::Negative => r.min(0.0),
        };
        let mut part = self.clone();
        for o in part
            .choices
            .iter_mut()
            .flatten()
            .flat_map(|c| c.outcomes.iter_mut())
        {
            // `+ 0.0` normalises -0.0.
            o.reward = clamp(o.reward) + 0.0;
        }
        part
    }

    pub fn reward_sign(&self) -> RewardSign {
        RewardSign::classify(self.rewards())
    }

    /// Copy of the model with every reward negated.
    pub fn negated(&self) -> Mdp {
        let mut m = self.clone();
        for o in m
            .choices
            .iter_mut()
            .flatten()
            .flat_map(|c| c.outcomes.iter_mut())
        {
            o.reward = -o.reward + 0.0;
        }
        m
    }
}

/// Incremental constructor used by the document parser and by tests.
#[derive(Debug, Default, Clone)]
pub struct MdpBuilder {
    states: Vec<String>,
    state_ix: HashMap<String, usize>,
    actions: Vec<String>,
    action_ix: HashMap<String, usize>,
    choices: Vec<Vec<Choice>>,
    initial: Option<usize>,
}

impl MdpBuilder {
    /// Declares a state; re-declaring an existing name is a no-op.
    pub fn state(mut self, name: &str) -> Self {
        self.add_state(name);
        self
    }

    pub fn states<'a>(mut self, names: impl IntoIterator<Item = &'a str>) -> Self {
        for n in names {
            self.add_state(n);
        }
        self
    }

    pub fn initial(mut self, name: &str) -> Self {
        self.initial = Some(self.add_state(name));
        self
    }

    /// Appends one transition record. Unknown state names are declared on the
    /// fly; the action becomes enabled in `from`.
    pub fn transition(mut self, from: &str, action: &str, to: &str, prob: f64, reward: f64) -> Self {
        self.add_transition(from, action, to, prob, reward);
        self
    }

    pub(crate) fn has_state(&self, name: &str) -> bool {
        self.state_ix.contains_key(name)
    }

    pub(crate) fn add_state(&mut self, name: &str) -> usize {
        if let Some(&i) = self.state_ix.get(name) {
            return i;
        }
        let i = self.states.len();
        self.states.push(name.to_string());
        self.state_ix.insert(name.to_string(), i);
        self.choices.push(Vec::new());
        i
    }

    /// Returns `false` if `(from, action, to)` was already present.
    pub(crate) fn add_transition(
        &mut self,
        from: &str,
        action: &str,
        to: &str,
        prob: f64,
        reward: f64,
    ) -> bool {
        let s = self.add_state(from);
        let t = self.add_state(to);
        let a = match self.action_ix.get(action) {
            Some(&a) => a,
            None => {
                let a = self.actions.len();
                self.actions.push(action.to_string());
                self.action_ix.insert(action.to_string(), a);
                a
            }
        };
        let choices = &mut self.choices[s];
        let ci = match choices.iter().position(|c| c.action == a) {
            Some(ci) => ci,
            None => {
                choices.push(Choice {
                    action: a,
                    outcomes: Vec::new(),
                });
                choices.len() - 1
            }
        };
        let outcomes = &mut choices[ci].outcomes;
        if outcomes.iter().any(|o| o.to == t) {
            return false;
        }
        outcomes.push(Outcome {
            to: t,
            prob,
            reward: reward + 0.0,
        });
        true
    }

    /// Finishes the model without validation. Actions are renumbered by first
    /// appearance in state order so that equal models compare equal
    /// regardless of record order.
    pub fn build_unchecked(mut self) -> Mdp {
        let mut remap = vec![usize::MAX; self.actions.len()];
        let mut actions = Vec::with_capacity(self.actions.len());
        for c in self.choices.iter_mut().flatten() {
            if remap[c.action] == usize::MAX {
                remap[c.action] = actions.len();
                actions.push(std::mem::take(&mut self.actions[c.action]));
            }
            c.action = remap[c.action];
        }
        Mdp {
            states: self.states,
            actions,
            choices: self.choices,
            initial: self.initial,
        }
    }

    pub fn build(self) -> Result<Mdp> {
        let mdp = self.build_unchecked();
        let diags = mdp.validate();
        if diags.is_empty() {
            Ok(mdp)
        } else {
            Err(Error::Invalid(diags))
        }
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn fig1a_is_valid_and_negative() {
        let m = fig1a();
        assert!(m.validate().is_empty());
        assert_eq!(m.num_states(), 2);
        assert_eq!(m.choices(0).len(), 2);
        assert_eq!(m.choices(1).len(), 1);
        assert_eq!(m.reward_sign(), RewardSign::Negative);
    }

    #[test]
    fn reward_sign_classes() {
        assert_eq!(self_loop(0.0).reward_sign(), RewardSign::AllZero);
        assert_eq!(fig1b().reward_sign(), RewardSign::Mixed);
        assert_eq!(self_loop(3.0).reward_sign(), RewardSign::Positive);
    }

    #[test]
    fn short_mass_yields_one_diagnostic() {
        let m = Mdp::builder()
            .transition("s1", "top", "s1", 0.4, -1.0)
            .transition("s1", "top", "s2", 0.5, -1.0)
            .transition("s2", "stay", "s2", 1.0, 0.0)
            .build_unchecked();
        let diags = m.validate();
        assert_eq!(diags.len(), 1, "{diags:?}");
        assert_eq!(diags[0].state.as_deref(), Some("s1"));
        assert_eq!(diags[0].action.as_deref(), Some("top"));
        assert!(diags[0].message.contains("0.9"));
    }

    #[test]
    fn state_without_actions_is_diagnosed() {
        let m = Mdp::builder()
            .state("lonely")
            .transition("s", "stay", "s", 1.0, 0.0)
            .build_unchecked();
        let diags = m.validate();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].message, "no enabled action");
        assert!(matches!(
            Mdp::builder().state("x").build(),
            Err(Error::Invalid(_))
        ));
    }

    #[test]
    fn positive_part_of_fig3a_zeroes_the_loop_cost() {
        let m = fig3a();
        let pos = m.signed_part(Sign::Positive);
        let s3 = m.state_index("s3").unwrap();
        assert_eq!(pos.choices(s3)[0].outcomes[0].reward, 0.0);
        for s in 0..2 {
            assert_eq!(pos.choices(s), m.choices(s));
        }
        assert_eq!(pos.reward_sign(), RewardSign::Positive);
    }

    #[test]
    fn signed_parts_of_zero_model_are_identical() {
        let m = self_loop(0.0);
        assert_eq!(m.signed_part(Sign::Positive), m);
        assert_eq!(m.signed_part(Sign::Negative), m);
    }

    #[test]
    fn duplicate_transition_is_ignored_by_builder() {
        let mut b = MdpBuilder::default();
        assert!(b.add_transition("a", "x", "b", 0.5, 1.0));
        assert!(!b.add_transition("a", "x", "b", 0.5, 2.0));
    }
}
