//! JSON model documents.
//!
//! ```json
//! {
//!   "states": ["s1", "s2"],
//!   "initial": "s1",
//!   "transitions": [
//!     {"from": "s1", "action": "top", "to": "s2", "prob": 0.5, "reward": -1}
//!   ]
//! }
//! ```

use serde::{Deserialize, Serialize};

use super::{Mdp, MdpBuilder};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MdpDoc {
    states: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    initial: Option<String>,
    transitions: Vec<TransitionDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransitionDoc {
    from: String,
    action: String,
    to: String,
    prob: f64,
    reward: f64,
}

/// Parses a model document without checking the sum-to-one and
/// enabled-action invariants, so that callers can report them as
/// diagnostics. Unknown state references, duplicate records and
/// probabilities outside `(0, 1]` are rejected here.
pub fn parse_mdp_unchecked(text: &str) -> Result<Mdp> {
    let doc: MdpDoc = serde_json::from_str(text).map_err(|e| Error::from_json(&e))?;
    let mut b = MdpBuilder::default();
    for (i, name) in doc.states.iter().enumerate() {
        if b.has_state(name) {
            return Err(Error::semantic(
                format!("states[{i}]"),
                format!("duplicate state '{name}'"),
            ));
        }
        b.add_state(name);
    }
    for (i, t) in doc.transitions.iter().enumerate() {
        let loc = |field: &str| format!("transitions[{i}].{field}");
        for (field, name) in [("from", &t.from), ("to", &t.to)] {
            if !b.has_state(name) {
                return Err(Error::semantic(loc(field), format!("unknown state '{name}'")));
            }
        }
        if !(t.prob > 0.0 && t.prob <= 1.0) {
            return Err(Error::semantic(
                loc("prob"),
                format!("probability {} outside (0, 1]", t.prob),
            ));
        }
        if !b.add_transition(&t.from, &t.action, &t.to, t.prob, t.reward) {
            return Err(Error::semantic(
                format!("transitions[{i}]"),
                format!(
                    "duplicate transition ({}, {}, {})",
                    t.from, t.action, t.to
                ),
            ));
        }
    }
    if let Some(name) = &doc.initial {
        if !b.has_state(name) {
            return Err(Error::semantic("initial", format!("unknown state '{name}'")));
        }
        b = b.initial(name);
    }
    Ok(b.build_unchecked())
}

/// Parses and validates a model document.
pub fn parse_mdp(text: &str) -> Result<Mdp> {
    let mdp = parse_mdp_unchecked(text)?;
    let diags = mdp.validate();
    if diags.is_empty() {
        Ok(mdp)
    } else {
        Err(Error::Invalid(diags))
    }
}

/// Canonical document: states in model order, transitions grouped by state,
/// then by enabled action, then by successor order.
pub fn to_document(mdp: &Mdp) -> String {
    let mut transitions = Vec::new();
    for (s, choices) in mdp.choices.iter().enumerate() {
        for c in choices {
            for o in &c.outcomes {
                transitions.push(TransitionDoc {
                    from: mdp.states[s].clone(),
                    action: mdp.actions[c.action].clone(),
                    to: mdp.states[o.to].clone(),
                    prob: o.prob,
                    reward: o.reward,
                });
            }
        }
    }
    let doc = MdpDoc {
        states: mdp.states.clone(),
        initial: mdp.initial.map(|i| mdp.states[i].clone()),
        transitions,
    };
    serde_json::to_string_pretty(&doc).expect("model documents always serialise")
}
