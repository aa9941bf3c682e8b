//! Existence and finiteness verdicts assembled from the condition checkers.
//!
//! Each field is decided by its own rule list, first match wins, and rules
//! that cover every policy are tried before the ones proven only for
//! stationary policies.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ConditionChecker, ConditionId, ConditionReport, ConditionStatus, Part, Quantity};
use crate::engine::Evaluated;
use crate::error::Result;
use crate::extreal::{ExtReal, NonExistReason, ValueOutcome};
use crate::mdp::{Mdp, RewardSign};
use crate::utility::{GrowthClass, TailMode, UtilityForm, UtilitySpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExistenceLevel {
    AllPolicies,
    StationaryOnlyConjecturedAll,
    NumericOnly,
    NotGuaranteed,
    Unknown,
}

impl fmt::Display for ExistenceLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExistenceLevel::AllPolicies => "all-policies",
            ExistenceLevel::StationaryOnlyConjecturedAll => "stationary-only-conjectured-all",
            ExistenceLevel::NumericOnly => "numeric-only",
            ExistenceLevel::NotGuaranteed => "not-guaranteed",
            ExistenceLevel::Unknown => "unknown",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FinitenessLevel {
    Yes,
    YesIfExist,
    NotGuaranteed,
    Unknown,
}

impl fmt::Display for FinitenessLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FinitenessLevel::Yes => "yes",
            FinitenessLevel::YesIfExist => "yes-if-exist",
            FinitenessLevel::NotGuaranteed => "not-guaranteed",
            FinitenessLevel::Unknown => "unknown",
        })
    }
}

/// A theorem or condition label with a short justification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Citation {
    pub label: String,
    pub detail: String,
}

impl Citation {
    fn new(label: impl Into<String>, detail: impl Into<String>) -> Self {
        Citation {
            label: label.into(),
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Citation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.label, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding<L> {
    pub level: L,
    pub citations: Vec<Citation>,
}

impl<L> Finding<L> {
    fn new(level: L, citations: Vec<Citation>) -> Self {
        Finding { level, citations }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Table2Row {
    Bounded,
    LinearlyBounded,
    ExponentiallyBounded,
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Table2Cell {
    #[serde(rename = "✓")]
    Check,
    #[serde(rename = "✓?")]
    CheckConjectured,
    #[serde(rename = "?")]
    Open,
    #[serde(rename = "✗")]
    Cross,
    #[serde(rename = "(✗)")]
    ParenCross,
    #[serde(rename = "—")]
    Dash,
}

impl Table2Cell {
    pub fn symbol(self) -> &'static str {
        match self {
            Table2Cell::Check => "✓",
            Table2Cell::CheckConjectured => "✓?",
            Table2Cell::Open => "?",
            Table2Cell::Cross => "✗",
            Table2Cell::ParenCross => "(✗)",
            Table2Cell::Dash => "—",
        }
    }

    /// Fixed table contents, columns C16, C15, C5.
    fn lookup(row: Table2Row, column: ConditionId) -> Table2Cell {
        use Table2Cell::*;
        let cells = match row {
            Table2Row::Bounded | Table2Row::LinearlyBounded => [Dash, Dash, CheckConjectured],
            Table2Row::ExponentiallyBounded => [Dash, Open, Cross],
            Table2Row::General => [Check, ParenCross, Cross],
        };
        match column {
            ConditionId::C16 => cells[0],
            ConditionId::C15 => cells[1],
            _ => cells[2],
        }
    }
}

impl fmt::Display for Table2Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExistenceVerdict {
    pub values_exist: Finding<ExistenceLevel>,
    pub optimal_values_exist: Finding<ExistenceLevel>,
    pub optimal_values_finite: Finding<FinitenessLevel>,
    /// Every citation of the three findings plus the table cell, deduplicated.
    pub citations: Vec<Citation>,
    pub table2_row: Option<Table2Row>,
    /// Present only for utilities described by a growth class.
    pub table2_cell: Option<Table2Cell>,
    /// Result the table cell rests on.
    pub table2_citation: Option<Citation>,
    pub notes: Vec<String>,
    /// Reports of every condition consulted, in consultation order.
    pub conditions: Vec<ConditionReport>,
}

/// Lazily checked conditions, recording each report once.
struct Ctx<'a> {
    checker: ConditionChecker<'a>,
    u: &'a UtilitySpec,
    reports: Vec<(String, ConditionReport)>,
}

impl<'a> Ctx<'a> {
    fn status_with(&mut self, id: ConditionId, u: &UtilitySpec) -> Result<ConditionStatus> {
        let key = format!("{id}|{}", u.describe());
        if let Some((_, r)) = self.reports.iter().find(|(k, _)| *k == key) {
            return Ok(r.status);
        }
        let r = self.checker.check(u, id)?;
        let status = r.status;
        self.reports.push((key, r));
        Ok(status)
    }

    fn holds(&mut self, id: ConditionId) -> Result<bool> {
        let u = self.u;
        Ok(self.status_with(id, u)? == ConditionStatus::Holds)
    }

    /// Condition `id` evaluated with an exponential utility of parameter `gamma`.
    fn holds_at(&mut self, id: ConditionId, gamma: f64) -> Result<bool> {
        let e = UtilitySpec::exponential(gamma)?;
        Ok(self.status_with(id, &e)? == ConditionStatus::Holds)
    }
}

fn cond(id: ConditionId, holds: bool) -> Citation {
    let verb = if holds { "holds" } else { "fails" };
    Citation::new(id.to_string(), format!("{verb}: {}", id.statement()))
}

fn cond_at(id: ConditionId, gamma: f64, holds: bool) -> Citation {
    let verb = if holds { "holds" } else { "fails" };
    Citation::new(format!("{id}(gamma={gamma})"), format!("{verb}: {}", id.statement()))
}

fn monotone(sign: RewardSign) -> Citation {
    let which = if sign == RewardSign::Negative {
        "all rewards are <= 0"
    } else {
        "all rewards are >= 0"
    };
    Citation::new(
        "monotone total reward",
        format!("{which}, so the expected utility is monotone in the horizon and its limit exists for every policy, hence also the optimal value"),
    )
}

fn optimal_unknown_sr(theorem: &str) -> Finding<ExistenceLevel> {
    Finding::new(
        ExistenceLevel::Unknown,
        vec![Citation::new(
            theorem,
            "covers stationary policies only; an optimal stationary policy need not exist, so existence of the optimal values is open",
        )],
    )
}

type Findings = (Finding<ExistenceLevel>, Finding<ExistenceLevel>, Finding<FinitenessLevel>);

/// Verdict on existence and finiteness of the values of `mdp` under `u`.
///
/// Conditions are decided over at most `guard` stationary deterministic
/// policies.
pub fn analyze(mdp: &Mdp, u: &UtilitySpec, guard: u128) -> Result<ExistenceVerdict> {
    let mut ctx = Ctx {
        checker: ConditionChecker::new(mdp, guard)?,
        u,
        reports: Vec::new(),
    };
    let mut notes = Vec::new();
    let sign = mdp.reward_sign();
    let (values_exist, optimal_values_exist, optimal_values_finite) = match &u.form {
        UtilityForm::Linear => linear_rules(&mut ctx, &mut notes)?,
        UtilityForm::Exponential { gamma } => exponential_rules(&mut ctx, sign, *gamma, &mut notes)?,
        UtilityForm::PiecewiseLinear { left_tail, right_tail, .. } => {
            piecewise_rules(&mut ctx, sign, *left_tail, *right_tail)?
        }
    };
    let mut citations: Vec<Citation> = Vec::new();
    let mut push = |c: &Citation| {
        if !citations.contains(c) {
            citations.push(c.clone());
        }
    };
    values_exist.citations.iter().for_each(&mut push);
    optimal_values_exist.citations.iter().for_each(&mut push);
    optimal_values_finite.citations.iter().for_each(&mut push);

    let (table2_row, table2_cell, table2_citation) = if matches!(u.form, UtilityForm::PiecewiseLinear { .. }) {
        let row = match u.growth {
            GrowthClass::Bounded { .. } => Table2Row::Bounded,
            GrowthClass::LinearlyBounded { .. } => Table2Row::LinearlyBounded,
            GrowthClass::ExponentiallyBounded(_) => Table2Row::ExponentiallyBounded,
            GrowthClass::Exponential { .. } => Table2Row::General,
        };
        let (cell, cite) = table2_cell(&mut ctx, row, &mut notes)?;
        if let Some(c) = &cite {
            push(c);
        }
        (Some(row), cell, cite)
    } else {
        (None, None, None)
    };
    if table2_cell == Some(Table2Cell::ParenCross) {
        notes.push("the (✗) marker is reproduced as printed; its parentheses carry no stated definition".into());
    }
    Ok(ExistenceVerdict {
        values_exist,
        optimal_values_exist,
        optimal_values_finite,
        citations,
        table2_row,
        table2_cell,
        table2_citation,
        notes,
        conditions: ctx.reports.into_iter().map(|(_, r)| r).collect(),
    })
}

/// Strongest column among C16, C15, C5 that holds, skipping "—" cells and
/// C15 when no exponential bounds are declared.
fn table2_cell(ctx: &mut Ctx<'_>, row: Table2Row, notes: &mut Vec<String>) -> Result<(Option<Table2Cell>, Option<Citation>)> {
    let mut columns = vec![ConditionId::C16];
    if ctx.u.exp_bounds.is_some() {
        columns.push(ConditionId::C15);
    }
    columns.push(ConditionId::C5);
    for id in columns {
        if !ctx.holds(id)? {
            continue;
        }
        let cell = Table2Cell::lookup(row, id);
        if cell == Table2Cell::Dash {
            continue;
        }
        let theorem = match (row, id) {
            (Table2Row::Bounded, _) => "Theorem 14",
            (Table2Row::LinearlyBounded, _) => "Theorem 15",
            (Table2Row::ExponentiallyBounded, ConditionId::C15) => "Theorem 16",
            (_, ConditionId::C16) => "Theorem 17",
            _ => "Table 2",
        };
        let cite = Citation::new(theorem, format!("Table 2 cell {} for this growth class under {id}", cell.symbol()));
        return Ok((Some(cell), Some(cite)));
    }
    notes.push("none of C16, C15, C5 holds; no Table 2 cell applies".into());
    Ok((None, None))
}

fn linear_rules(ctx: &mut Ctx<'_>, notes: &mut Vec<String>) -> Result<Findings> {
    use ConditionId::*;
    let c1 = ctx.holds(C1)?;
    let c3 = !c1 && ctx.holds(C3)?;
    if c1 || c3 {
        let (sign_id, fin_id) = if c1 { (C1, C2) } else { (C3, C4) };
        let exist = Finding::new(ExistenceLevel::AllPolicies, vec![cond(sign_id, true)]);
        let fin = ctx.holds(fin_id)?;
        let level = if fin {
            FinitenessLevel::Yes
        } else {
            FinitenessLevel::NotGuaranteed
        };
        let finite = Finding::new(level, vec![cond(sign_id, true), cond(fin_id, fin)]);
        return Ok((exist.clone(), exist, finite));
    }
    if ctx.holds(C5)? {
        let exist = Finding::new(
            ExistenceLevel::AllPolicies,
            vec![Citation::new(
                "C5",
                "holds: positive and negative parts cannot both diverge, so the linear value exists for every policy",
            )],
        );
        let c6 = ctx.holds(C6)?;
        let c7 = ctx.holds(C7)?;
        let level = if c6 && c7 {
            FinitenessLevel::Yes
        } else {
            FinitenessLevel::NotGuaranteed
        };
        let finite = Finding::new(level, vec![cond(C5, true), cond(C6, c6), cond(C7, c7)]);
        return Ok((exist.clone(), exist, finite));
    }
    fallback(ctx, Quantity::Linear(Part::Whole), true, notes)
}

fn exponential_rules(ctx: &mut Ctx<'_>, sign: RewardSign, gamma: f64, notes: &mut Vec<String>) -> Result<Findings> {
    use ConditionId::*;
    let convex = gamma > 1.0;
    match sign {
        RewardSign::Positive | RewardSign::AllZero | RewardSign::Negative => {
            let exist = Finding::new(ExistenceLevel::AllPolicies, vec![monotone(sign)]);
            let finite = if sign == RewardSign::AllZero {
                Finding::new(
                    FinitenessLevel::Yes,
                    vec![Citation::new("all-zero rewards", "every value equals U(0)")],
                )
            } else {
                let positive = sign == RewardSign::Positive;
                if positive != convex {
                    // utility bounded on the side the rewards move towards
                    let detail = if positive {
                        "positive MDP with 0 < gamma < 1: U is bounded on w >= 0"
                    } else {
                        "negative MDP with gamma > 1: U is bounded on w <= 0"
                    };
                    Finding::new(FinitenessLevel::Yes, vec![monotone(sign), Citation::new("bounded side", detail)])
                } else {
                    let id = if positive { C8 } else { C9 };
                    let ok = ctx.holds(id)?;
                    let level = if ok {
                        FinitenessLevel::Yes
                    } else {
                        FinitenessLevel::NotGuaranteed
                    };
                    Finding::new(level, vec![monotone(sign), cond(id, ok)])
                }
            };
            Ok((exist.clone(), exist, finite))
        }
        RewardSign::Mixed => {
            let c16 = ctx.holds(C16)?;
            let (ce, fin_id, theorem) = if convex { (C10, C11, "Theorem 8") } else { (C12, C13, "Theorem 9") };
            let (exist, opt_exist) = if c16 {
                let f = Finding::new(ExistenceLevel::AllPolicies, vec![theorem17()]);
                (f.clone(), f)
            } else if ctx.holds(ce)? {
                let kind = if convex { "convex" } else { "concave" };
                (
                    Finding::new(
                        ExistenceLevel::StationaryOnlyConjecturedAll,
                        vec![
                            Citation::new(
                                theorem,
                                format!("{kind} exponential utility and {ce}: values exist for stationary policies, conjectured for all policies"),
                            ),
                            cond(ce, true),
                        ],
                    ),
                    optimal_unknown_sr(theorem),
                )
            } else {
                let (e, _, _) = fallback(ctx, Quantity::Exp(Part::Whole, gamma.to_bits()), convex, notes)?;
                let mut e = e;
                e.citations.push(cond(ce, false));
                e.citations.push(cond(C16, false));
                (e, Finding::new(ExistenceLevel::Unknown, vec![cond(C16, false), cond(ce, false)]))
            };
            let finite = if c16 && ctx.holds(C17)? && ctx.holds(C18)? {
                Finding::new(FinitenessLevel::Yes, vec![theorem17(), cond(C17, true), cond(C18, true)])
            } else if ctx.holds(ce)? && ctx.holds(fin_id)? {
                Finding::new(
                    FinitenessLevel::YesIfExist,
                    vec![Citation::new(
                        theorem,
                        format!("{fin_id} bounds the optimal values, so they are finite whenever they exist"),
                    ), cond(fin_id, true)],
                )
            } else {
                let (_, _, mut f) = fallback(ctx, Quantity::Exp(Part::Whole, gamma.to_bits()), convex, notes)?;
                let fin = ctx.holds(fin_id)?;
                f.citations.push(cond(fin_id, fin));
                f
            };
            Ok((exist, opt_exist, finite))
        }
    }
}

fn theorem17() -> Citation {
    Citation::new(
        "Theorem 17",
        "C16 holds: the total reward is bounded on one side for every policy, so values and optimal values exist for all policies",
    )
}

fn piecewise_rules(ctx: &mut Ctx<'_>, sign: RewardSign, left: TailMode, right: TailMode) -> Result<Findings> {
    use ConditionId::*;
    let bounds = ctx.u.exp_bounds;
    let bounded = left == TailMode::Constant && right == TailMode::Constant;
    if sign != RewardSign::Mixed {
        let exist = Finding::new(ExistenceLevel::AllPolicies, vec![monotone(sign)]);
        let positive = sign != RewardSign::Negative;
        let bounded_side = if positive {
            right == TailMode::Constant
        } else {
            left == TailMode::Constant
        };
        let finite = if sign == RewardSign::AllZero {
            Finding::new(FinitenessLevel::Yes, vec![Citation::new("all-zero rewards", "every value equals U(0)")])
        } else if bounded_side {
            Finding::new(
                FinitenessLevel::Yes,
                vec![monotone(sign), Citation::new("bounded side", "U is constant beyond its last point in the direction the rewards move")],
            )
        } else {
            let (lin_id, lin_theorem, exp_id, exp_theorem) = if positive {
                (C2, "Theorem 10", C8, "Theorem 11")
            } else {
                (C4, "Theorem 12", C9, "Theorem 13")
            };
            let sign_id = if positive { C1 } else { C3 };
            if ctx.holds(lin_id)? {
                Finding::new(
                    FinitenessLevel::Yes,
                    vec![
                        Citation::new(lin_theorem, format!("{sign_id} and {lin_id} hold and U has a linear envelope")),
                        cond(lin_id, true),
                    ],
                )
            } else {
                let mut cites = vec![cond(lin_id, false)];
                let mut level = FinitenessLevel::NotGuaranteed;
                if let Some(b) = bounds {
                    let g = if positive { b.gamma_plus } else { b.gamma_minus };
                    let ok = ctx.holds_at(exp_id, g)?;
                    if ok {
                        level = FinitenessLevel::Yes;
                        cites.insert(
                            0,
                            Citation::new(exp_theorem, format!("{sign_id} and {exp_id} hold at gamma = {g} and U has a matching exponential envelope")),
                        );
                    }
                    cites.push(cond_at(exp_id, g, ok));
                }
                Finding::new(level, cites)
            }
        };
        return Ok((exist.clone(), exist, finite));
    }

    let c16 = ctx.holds(C16)?;
    let c5 = ctx.holds(C5)?;
    let (exist, opt_exist) = if c16 {
        let f = Finding::new(ExistenceLevel::AllPolicies, vec![theorem17()]);
        (f.clone(), f)
    } else if c5 {
        let theorem = if bounded { "Theorem 14" } else { "Theorem 15" };
        let class = if bounded { "bounded" } else { "linearly bounded" };
        let f = Finding::new(
            ExistenceLevel::StationaryOnlyConjecturedAll,
            vec![
                Citation::new(theorem, format!("{class} utility and C5: values exist for stationary policies, conjectured for all policies")),
                cond(C5, true),
            ],
        );
        (f, optimal_unknown_sr(theorem))
    } else {
        let f = Finding::new(ExistenceLevel::NotGuaranteed, vec![cond(C16, false), cond(C5, false)]);
        (f.clone(), f)
    };

    let finite = if c16 && ctx.holds(C17)? && ctx.holds(C18)? {
        Finding::new(FinitenessLevel::Yes, vec![theorem17(), cond(C17, true), cond(C18, true)])
    } else if bounded && c5 {
        Finding::new(
            FinitenessLevel::Yes,
            vec![Citation::new("Theorem 14", "bounded utility and C5: values are finite"), cond(C5, true)],
        )
    } else if bounds.is_some() && ctx.holds(C14)? {
        Finding::new(
            FinitenessLevel::Yes,
            vec![Citation::new("Theorem 16", "exponential envelope and C14: values are finite"), cond(C14, true)],
        )
    } else if c5 && ctx.holds(C6)? && ctx.holds(C7)? {
        Finding::new(
            FinitenessLevel::YesIfExist,
            vec![
                Citation::new("Theorem 15", "C6 bounds the optimal values from above and C7 from below"),
                cond(C6, true),
                cond(C7, true),
            ],
        )
    } else if let Some(b) = bounds.filter(|_| c5) {
        let c11 = ctx.holds_at(C11, b.gamma_plus)?;
        let c13 = ctx.holds_at(C13, b.gamma_minus)?;
        let mut cites = vec![cond_at(C11, b.gamma_plus, c11), cond_at(C13, b.gamma_minus, c13)];
        let level = if c11 && c13 {
            cites.insert(
                0,
                Citation::new("exponential envelope", "C11 at gamma_plus and C13 at gamma_minus bound the optimal values on both sides"),
            );
            FinitenessLevel::YesIfExist
        } else {
            FinitenessLevel::Unknown
        };
        Finding::new(level, cites)
    } else {
        let mut cites = vec![cond(C16, c16), cond(C5, c5)];
        if c5 {
            let c6 = ctx.holds(C6)?;
            let c7 = ctx.holds(C7)?;
            cites.push(cond(C6, c6));
            cites.push(cond(C7, c7));
        }
        Finding::new(FinitenessLevel::Unknown, cites)
    };
    Ok((exist, opt_exist, finite))
}

/// Direct evaluation of every stationary deterministic policy, used when no
/// sufficient condition applies. `upward` marks utilities for which a `+inf`
/// policy value makes the optimal value infinite.
fn fallback(ctx: &mut Ctx<'_>, q: Quantity, upward: bool, notes: &mut Vec<String>) -> Result<Findings> {
    let n = ctx.checker.mdp().num_states();
    let table: Vec<Vec<Evaluated>> = ctx.checker.values(q)?.to_vec();
    let label = |k: usize, s: usize| {
        let mdp = ctx.checker.mdp();
        format!("{} at {}", ctx.checker.policies()[k].describe(mdp), mdp.state_name(s))
    };
    let find = |pred: &dyn Fn(&Evaluated) -> bool| {
        (0..table.len()).find_map(|k| (0..n).find(|&s| pred(&table[k][s])).map(|s| (k, s)))
    };
    let oscillating = find(&|v| v.outcome == ValueOutcome::NonExistent(NonExistReason::Oscillation));
    let undetermined = find(&|v| !v.outcome.exists());
    let exist = if let Some((k, s)) = oscillating {
        Finding::new(
            ExistenceLevel::NotGuaranteed,
            vec![Citation::new(
                "stationary policy evaluation",
                format!("the value does not exist for {} (oscillation)", label(k, s)),
            )],
        )
    } else if let Some((k, s)) = undetermined {
        Finding::new(
            ExistenceLevel::Unknown,
            vec![Citation::new(
                "stationary policy evaluation",
                format!("the value could not be determined for {}", label(k, s)),
            )],
        )
    } else {
        notes.push(
            "no sufficient condition applies, yet every stationary deterministic policy has an existing value; C5 is sufficient, not necessary".into(),
        );
        Finding::new(
            ExistenceLevel::NumericOnly,
            vec![Citation::new(
                "stationary policy evaluation",
                format!("values exist for all {} stationary deterministic policies", table.len()),
            )],
        )
    };
    let target = if upward { ExtReal::PlusInfinity } else { ExtReal::MinusInfinity };
    let finite = match find(&|v| v.outcome == ValueOutcome::Exists(target)) {
        Some((k, s)) if upward => Finding::new(
            FinitenessLevel::NotGuaranteed,
            vec![Citation::new(
                "stationary policy evaluation",
                format!("{} has value +inf, so the optimal value there is +inf", label(k, s)),
            )],
        ),
        _ => Finding::new(FinitenessLevel::Unknown, Vec::new()),
    };
    let opt = Finding::new(ExistenceLevel::Unknown, exist.citations.clone());
    Ok((exist, opt, finite))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::fixtures;
    use crate::policy::DEFAULT_POLICY_GUARD;

    fn run(mdp: &Mdp, u: &UtilitySpec) -> ExistenceVerdict {
        analyze(mdp, u, DEFAULT_POLICY_GUARD).unwrap()
    }

    fn bounded() -> UtilitySpec {
        UtilitySpec::piecewise(vec![(-3.0, -1.0), (3.0, 1.0)], TailMode::Constant, TailMode::Constant, None).unwrap()
    }

    fn labels(cs: &[Citation]) -> Vec<&str> {
        cs.iter().map(|c| c.label.as_str()).collect()
    }

    #[test]
    fn goal_model_at_half_is_not_guaranteed_finite() {
        let v = run(&fixtures::fig1a(), &UtilitySpec::exponential(0.5).unwrap());
        assert_eq!(v.values_exist.level, ExistenceLevel::AllPolicies);
        assert_eq!(v.optimal_values_finite.level, FinitenessLevel::NotGuaranteed);
        assert!(labels(&v.optimal_values_finite.citations).contains(&"C9"));
        assert!(v.table2_cell.is_none());
    }

    #[test]
    fn positive_model_with_small_gamma_is_finite() {
        let m = fixtures::self_loop(1.0);
        let v = run(&m, &UtilitySpec::exponential(0.5).unwrap());
        assert_eq!(v.values_exist.level, ExistenceLevel::AllPolicies);
        assert_eq!(v.optimal_values_finite.level, FinitenessLevel::Yes);
    }

    #[test]
    fn goal_model_bounded_utility_cell() {
        let v = run(&fixtures::fig1a(), &bounded());
        assert_eq!(v.table2_row, Some(Table2Row::Bounded));
        assert_eq!(v.table2_cell, Some(Table2Cell::CheckConjectured));
        assert!(labels(&v.citations).contains(&"Theorem 14"));
        assert_eq!(v.optimal_values_finite.level, FinitenessLevel::Yes);
    }

    #[test]
    fn diverging_cycle_falls_back_to_evaluation() {
        let v = run(&fixtures::fig1c(), &UtilitySpec::linear());
        assert_eq!(v.values_exist.level, ExistenceLevel::NumericOnly);
        assert!(v.notes.iter().any(|n| n.contains("not necessary")));
        let c5 = v.conditions.iter().find(|r| r.id == ConditionId::C5).unwrap();
        assert_eq!(c5.status, ConditionStatus::Violated);
        assert_eq!(v.optimal_values_finite.level, FinitenessLevel::NotGuaranteed);
    }

    #[test]
    fn zero_sum_cycle_has_no_existence_rule() {
        let v = run(&fixtures::fig1b(), &UtilitySpec::linear());
        assert_eq!(v.values_exist.level, ExistenceLevel::NotGuaranteed);
    }

    #[test]
    fn oscillating_exponential_model() {
        let v = run(&fixtures::fig3a(), &UtilitySpec::exponential(2.0).unwrap());
        assert_eq!(v.values_exist.level, ExistenceLevel::NotGuaranteed);
        assert!(v.conditions.iter().any(|r| r.id == ConditionId::C10 && r.status == ConditionStatus::Violated));
    }

    #[test]
    fn mixed_model_with_bounded_utility() {
        // s1 loops at +1 or moves to a -1 sink; C5 holds but C16 does not
        let m = Mdp::builder()
            .transition("s1", "go", "s1", 0.5, 1.0)
            .transition("s1", "go", "s2", 0.5, 1.0)
            .transition("s2", "stay", "s2", 1.0, -1.0)
            .build()
            .unwrap();
        let v = run(&m, &bounded());
        assert_eq!(v.values_exist.level, ExistenceLevel::StationaryOnlyConjecturedAll);
        assert_eq!(v.optimal_values_exist.level, ExistenceLevel::Unknown);
        assert_eq!(v.optimal_values_finite.level, FinitenessLevel::Yes);
        assert_eq!(v.table2_cell, Some(Table2Cell::CheckConjectured));
    }

    #[test]
    fn non_unknown_findings_carry_citations() {
        let models = [fixtures::fig1a(), fixtures::fig1b(), fixtures::fig1c(), fixtures::fig3a()];
        let utils = [
            UtilitySpec::linear(),
            UtilitySpec::exponential(0.5).unwrap(),
            UtilitySpec::exponential(2.0).unwrap(),
            bounded(),
        ];
        for m in &models {
            for u in &utils {
                let v = run(m, u);
                assert!(v.values_exist.level == ExistenceLevel::Unknown || !v.values_exist.citations.is_empty());
                assert!(
                    v.optimal_values_exist.level == ExistenceLevel::Unknown
                        || !v.optimal_values_exist.citations.is_empty()
                );
                assert!(
                    v.optimal_values_finite.level == FinitenessLevel::Unknown
                        || !v.optimal_values_finite.citations.is_empty()
                );
            }
        }
    }
}
