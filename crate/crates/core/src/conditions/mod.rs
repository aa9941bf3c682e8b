//! Checkers for conditions C1 to C18 and the existence/finiteness decision
//! table built on them.
//!
//! Conditions that quantify over all policies are decided over the
//! stationary deterministic ones, and every such report says so.

mod analyze;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::{exp_infinite_value, extreme_total_reward, linear_infinite_value, Evaluated};
use crate::error::{Error, Result};
use crate::extreal::{ExtReal, ValueOutcome};
use crate::mdp::{Mdp, Sign};
use crate::policy::{enumerate_sd_policies, StationaryPolicy};
use crate::utility::{UtilityForm, UtilitySpec};

pub use analyze::{
    analyze, Citation, ExistenceLevel, ExistenceVerdict, Finding, FinitenessLevel, Table2Cell, Table2Row,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConditionId {
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
    C7,
    C8,
    C9,
    C10,
    C11,
    C12,
    C13,
    C14,
    C15,
    C16,
    C17,
    C18,
}

impl ConditionId {
    pub const ALL: [ConditionId; 18] = [
        ConditionId::C1,
        ConditionId::C2,
        ConditionId::C3,
        ConditionId::C4,
        ConditionId::C5,
        ConditionId::C6,
        ConditionId::C7,
        ConditionId::C8,
        ConditionId::C9,
        ConditionId::C10,
        ConditionId::C11,
        ConditionId::C12,
        ConditionId::C13,
        ConditionId::C14,
        ConditionId::C15,
        ConditionId::C16,
        ConditionId::C17,
        ConditionId::C18,
    ];

    pub fn number(self) -> usize {
        self as usize + 1
    }

    /// Whether the statement quantifies over policies. C1 and C3 are plain
    /// reward scans.
    pub fn policy_quantified(self) -> bool {
        !matches!(self, ConditionId::C1 | ConditionId::C3)
    }

    /// One-line statement in plain words.
    pub fn statement(self) -> &'static str {
        use ConditionId::*;
        match self {
            C1 => "every reward is >= 0",
            C2 => "for every policy and state the linear value is finite",
            C3 => "every reward is <= 0",
            C4 => "some policy has finite linear values in every state",
            C5 => "for every policy and state, v+ or v- (linear, signed parts) is finite",
            C6 => "for every policy and state, v+ (linear) is finite",
            C7 => "some policy has finite v- (linear) in every state",
            C8 => "for every policy and state the exponential value is finite",
            C9 => "some policy has finite exponential values in every state",
            C10 | C12 => "for every policy and state, v_e+ or v_e- is finite",
            C11 => "for every policy and state, v_e+ is finite",
            C13 => "some policy has finite v_e- in every state",
            C14 => "for every policy and state, v_e+ (gamma_plus) and v_e- (gamma_minus) are finite",
            C15 => "for every policy and state, v_e+ (gamma_plus) or v_e- (gamma_minus) is finite",
            C16 => "for every policy and state, v_max+ or v_min- is finite",
            C17 => "for every policy and state, v_max+ is finite",
            C18 => "some policy has finite v_min- in every state",
        }
    }

    /// Whether `check_condition` accepts `u` for this condition.
    pub fn compatible_with(self, u: &UtilitySpec) -> bool {
        use ConditionId::*;
        match self {
            C8 | C9 | C10 | C11 | C12 | C13 => matches!(u.form, UtilityForm::Exponential { .. }),
            C14 | C15 => u.exp_bounds.is_some(),
            _ => true,
        }
    }
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C{}", self.number())
    }
}

impl FromStr for ConditionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let digits = s.trim().strip_prefix(['C', 'c']).unwrap_or("");
        digits
            .parse::<usize>()
            .ok()
            .filter(|n| (1..=18).contains(n))
            .map(|n| ConditionId::ALL[n - 1])
            .ok_or_else(|| Error::semantic("ids", format!("unknown condition '{s}', expected C1..C18")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConditionStatus {
    Holds,
    Violated,
    Unknown,
}

impl fmt::Display for ConditionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConditionStatus::Holds => "holds",
            ConditionStatus::Violated => "violated",
            ConditionStatus::Unknown => "unknown",
        })
    }
}

/// Labelled value that made a condition fail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessValue {
    /// For example `v+` or `v_max+`.
    pub label: String,
    pub value: Evaluated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Offending policy; `None` for reward scans.
    pub policy: Option<StationaryPolicy>,
    pub policy_label: Option<String>,
    pub state: usize,
    pub state_name: String,
    pub values: Vec<WitnessValue>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub id: ConditionId,
    pub status: ConditionStatus,
    pub statement: String,
    /// Present for every policy-quantified condition.
    pub quantifier_note: Option<String>,
    pub witness: Option<Witness>,
    /// Utility and gamma context the check used.
    pub parameters: String,
}

/// Which reward signal a value is computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Part {
    Whole,
    Positive,
    Negative,
}

impl Part {
    fn suffix(self) -> &'static str {
        match self {
            Part::Whole => "",
            Part::Positive => "+",
            Part::Negative => "-",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Quantity {
    Linear(Part),
    /// Exponential value with `gamma` given by its bit pattern.
    Exp(Part, u64),
    Max(Part),
    Min(Part),
}

impl Quantity {
    fn label(self) -> String {
        match self {
            Quantity::Linear(p) => format!("v{}", p.suffix()),
            Quantity::Exp(p, g) => format!("v_e{}(gamma={})", p.suffix(), f64::from_bits(g)),
            Quantity::Max(p) => format!("v_max{}", p.suffix()),
            Quantity::Min(p) => format!("v_min{}", p.suffix()),
        }
    }
}

/// Finiteness test used by a condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Finite {
    /// Finite real number.
    Plain,
    /// Finite certainty equivalent: a finite exponential value that is not
    /// zero, since `iota gamma^w -> 0` means the wealth runs to `-inf`
    /// (convex) or `+inf` (concave).
    CertaintyEquivalent,
}

impl Finite {
    fn test(self, v: &Evaluated) -> bool {
        match (self, v.outcome.finite_value()) {
            (_, None) => false,
            (Finite::Plain, Some(_)) => true,
            (Finite::CertaintyEquivalent, Some(x)) => {
                let floor = if v.numeric { 1e-8 } else { f64::MIN_POSITIVE };
                x.abs() >= floor
            }
        }
    }
}

/// Enumerated SD policies with cached per-policy value vectors, shared by
/// every condition checked against one model.
pub struct ConditionChecker<'a> {
    mdp: &'a Mdp,
    positive: Mdp,
    negative: Mdp,
    policies: Vec<StationaryPolicy>,
    cache: HashMap<Quantity, Vec<Vec<Evaluated>>>,
}

impl<'a> ConditionChecker<'a> {
    pub fn new(mdp: &'a Mdp, guard: u128) -> Result<Self> {
        Ok(ConditionChecker {
            mdp,
            positive: mdp.signed_part(Sign::Positive),
            negative: mdp.signed_part(Sign::Negative),
            policies: enumerate_sd_policies(mdp, guard)?.collect(),
            cache: HashMap::new(),
        })
    }

    pub fn mdp(&self) -> &Mdp {
        self.mdp
    }

    pub fn policies(&self) -> &[StationaryPolicy] {
        &self.policies
    }

    fn model(&self, part: Part) -> &Mdp {
        match part {
            Part::Whole => self.mdp,
            Part::Positive => &self.positive,
            Part::Negative => &self.negative,
        }
    }

    fn values(&mut self, q: Quantity) -> Result<&[Vec<Evaluated>]> {
        if !self.cache.contains_key(&q) {
            let mut all = Vec::with_capacity(self.policies.len());
            for pi in &self.policies {
                let v = match q {
                    Quantity::Linear(p) => linear_infinite_value(self.model(p), pi)?,
                    Quantity::Exp(p, g) => exp_infinite_value(self.model(p), pi, f64::from_bits(g))?,
                    Quantity::Max(p) => as_exact(extreme_total_reward(self.model(p), pi)?.v_max),
                    Quantity::Min(p) => as_exact(extreme_total_reward(self.model(p), pi)?.v_min),
                };
                all.push(v);
            }
            self.cache.insert(q, all);
        }
        Ok(&self.cache[&q])
    }

    fn quantifier_note(&self) -> String {
        format!(
            "verified over Π^SD ({} stationary deterministic policies); the condition quantifies over all policies Π",
            self.policies.len()
        )
    }

    fn witness(&self, k: usize, s: usize, values: Vec<WitnessValue>, note: Option<String>) -> Witness {
        let pi = &self.policies[k];
        Witness {
            policy: Some(pi.clone()),
            policy_label: Some(pi.describe(self.mdp)),
            state: s,
            state_name: self.mdp.state_name(s).to_string(),
            values,
            note,
        }
    }

    /// `for all pi, s: some q in qs is finite`. With a single quantity this is
    /// plain universal finiteness; `all_of` demands every quantity finite.
    fn universal(&mut self, qs: &[Quantity], test: Finite, all_of: bool) -> Result<Option<Witness>> {
        for &q in qs {
            self.values(q)?;
        }
        let tables: Vec<&Vec<Vec<Evaluated>>> = qs.iter().map(|q| &self.cache[q]).collect();
        for k in 0..self.policies.len() {
            for s in 0..self.mdp.num_states() {
                let ok: Vec<bool> = tables.iter().map(|t| test.test(&t[k][s])).collect();
                let pass = if all_of {
                    ok.iter().all(|&b| b)
                } else {
                    ok.iter().any(|&b| b)
                };
                if !pass {
                    let values = qs
                        .iter()
                        .zip(&tables)
                        .map(|(q, t)| WitnessValue {
                            label: q.label(),
                            value: t[k][s],
                        })
                        .collect();
                    return Ok(Some(self.witness(k, s, values, None)));
                }
            }
        }
        Ok(None)
    }

    /// `exists pi, for all s: q finite`. The witness for a violation is the
    /// first policy with its first failing state.
    fn existential(&mut self, q: Quantity, test: Finite) -> Result<Option<Witness>> {
        let n = self.mdp.num_states();
        let table = self.values(q)?;
        if table.iter().any(|vs| vs.iter().all(|v| test.test(v))) {
            return Ok(None);
        }
        let s = (0..n).find(|&s| !test.test(&table[0][s])).unwrap_or(0);
        let value = table[0][s];
        let note = format!(
            "every one of the {} stationary deterministic policies has a non-finite {} somewhere; the first is shown",
            table.len(),
            q.label()
        );
        Ok(Some(self.witness(
            0,
            s,
            vec![WitnessValue {
                label: q.label(),
                value,
            }],
            Some(note),
        )))
    }

    fn reward_scan(&self, sign: Sign) -> Option<Witness> {
        for s in 0..self.mdp.num_states() {
            for c in self.mdp.choices(s) {
                for o in &c.outcomes {
                    let bad = match sign {
                        Sign::Positive => o.reward < 0.0,
                        Sign::Negative => o.reward > 0.0,
                    };
                    if bad {
                        return Some(Witness {
                            policy: None,
                            policy_label: None,
                            state: s,
                            state_name: self.mdp.state_name(s).to_string(),
                            values: Vec::new(),
                            note: Some(format!(
                                "r({}, {}, {}) = {}",
                                self.mdp.state_name(s),
                                self.mdp.action_name(c.action),
                                self.mdp.state_name(o.to),
                                o.reward
                            )),
                        });
                    }
                }
            }
        }
        None
    }

    pub fn check(&mut self, u: &UtilitySpec, id: ConditionId) -> Result<ConditionReport> {
        use ConditionId::*;
        if !id.compatible_with(u) {
            let need = match id {
                C14 | C15 => "exponential bounds (gamma_plus, gamma_minus)",
                _ => "an exponential utility (gamma)",
            };
            return Err(Error::IncompatibleUtility(format!(
                "{id} needs {need}, got {}",
                u.describe()
            )));
        }
        let gamma = u.gamma().map(f64::to_bits);
        let bounds = u.exp_bounds;
        let exp = |p: Part| Quantity::Exp(p, gamma.expect("compatible"));
        let plain = Finite::Plain;
        let witness = match id {
            C1 => self.reward_scan(Sign::Positive),
            C3 => self.reward_scan(Sign::Negative),
            C2 => self.universal(&[Quantity::Linear(Part::Whole)], plain, false)?,
            C4 => self.existential(Quantity::Linear(Part::Whole), plain)?,
            C5 => self.universal(
                &[Quantity::Linear(Part::Positive), Quantity::Linear(Part::Negative)],
                plain,
                false,
            )?,
            C6 => self.universal(&[Quantity::Linear(Part::Positive)], plain, false)?,
            C7 => self.existential(Quantity::Linear(Part::Negative), plain)?,
            C8 => self.universal(&[exp(Part::Whole)], plain, false)?,
            C9 => self.existential(exp(Part::Whole), plain)?,
            C10 | C12 => self.universal(
                &[exp(Part::Positive), exp(Part::Negative)],
                Finite::CertaintyEquivalent,
                false,
            )?,
            C11 => self.universal(&[exp(Part::Positive)], plain, false)?,
            C13 => self.existential(exp(Part::Negative), plain)?,
            C14 | C15 => {
                let b = bounds.expect("compatible");
                let qs = [
                    Quantity::Exp(Part::Positive, b.gamma_plus.to_bits()),
                    Quantity::Exp(Part::Negative, b.gamma_minus.to_bits()),
                ];
                self.universal(&qs, plain, id == C14)?
            }
            C16 => self.universal(&[Quantity::Max(Part::Positive), Quantity::Min(Part::Negative)], plain, false)?,
            C17 => self.universal(&[Quantity::Max(Part::Positive)], plain, false)?,
            C18 => self.existential(Quantity::Min(Part::Negative), plain)?,
        };
        let status = if witness.is_some() {
            ConditionStatus::Violated
        } else {
            ConditionStatus::Holds
        };
        let parameters = match id {
            C8 | C9 | C10 | C11 | C12 | C13 => format!("gamma = {}", f64::from_bits(gamma.expect("compatible"))),
            C14 | C15 => {
                let b = bounds.expect("compatible");
                format!("gamma_plus = {}, gamma_minus = {}", b.gamma_plus, b.gamma_minus)
            }
            C1 | C3 => "reward scan".to_string(),
            C2 | C4 | C5 | C6 | C7 => "linear values".to_string(),
            C16 | C17 | C18 => "extreme total rewards".to_string(),
        };
        Ok(ConditionReport {
            id,
            status,
            statement: id.statement().to_string(),
            quantifier_note: id.policy_quantified().then(|| self.quantifier_note()),
            witness,
            parameters,
        })
    }
}

fn as_exact(v: Vec<ExtReal>) -> Vec<Evaluated> {
    v.into_iter()
        .map(|x| Evaluated::analytic(ValueOutcome::Exists(x)))
        .collect()
}

/// Decides one condition over the stationary deterministic policies of
/// `mdp`, enumerating at most `guard` of them.
pub fn check_condition(mdp: &Mdp, u: &UtilitySpec, id: ConditionId, guard: u128) -> Result<ConditionReport> {
    if !id.policy_quantified() {
        // reward scans need no policy enumeration
        let mut checker = ConditionChecker {
            mdp,
            positive: mdp.clone(),
            negative: mdp.clone(),
            policies: Vec::new(),
            cache: HashMap::new(),
        };
        return checker.check(u, id);
    }
    ConditionChecker::new(mdp, guard)?.check(u, id)
}

/// Every condition compatible with `u`, in order.
pub fn compatible_conditions(u: &UtilitySpec) -> Vec<ConditionId> {
    ConditionId::ALL
        .into_iter()
        .filter(|id| id.compatible_with(u))
        .collect()
}
