//! Report structures shared by the text and JSON renderers.
//!
//! Every number is stored pre-formatted (12 significant digits, or one of the
//! tokens `+inf`, `-inf`, `nonexistent(<reason>)`), so both renderings carry
//! identical content.

use std::fmt::Write as _;

use riskmdp::extreal::format_sig;
use riskmdp::{ExtReal, ValueOutcome};
use serde::Serialize;

pub const SIG_DIGITS: usize = 12;

pub fn num(x: f64) -> String {
    format_sig(x, SIG_DIGITS)
}

pub fn outcome(v: &ValueOutcome) -> String {
    match v {
        ValueOutcome::Exists(ExtReal::Finite(x)) => num(*x),
        other => other.to_string(),
    }
}

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub inputs: Vec<InputDigest>,
    pub result: Body,
    /// Wall-clock milliseconds; the only field that varies between runs.
    pub timing_ms: String,
}

#[derive(Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Body {
    Validate(ValidateBody),
    Eval(EvalBody),
    Conditions(ConditionsBody),
    Analyze(AnalyzeBody),
    Solve(SolveBody),
    Simulate(SimulateBody),
}

#[derive(Debug, Serialize)]
pub struct ValidateBody {
    pub valid: bool,
    pub states: usize,
    pub actions: usize,
    pub reward_sign: String,
    pub sd_policies: String,
}

#[derive(Debug, Serialize)]
pub struct StateValue {
    pub state: String,
    pub value: String,
    /// `exact`, `analytic` or `numeric`.
    pub source: String,
}

#[derive(Debug, Serialize)]
pub struct EvalBody {
    pub utility: String,
    pub policy: String,
    pub horizon: String,
    pub method: String,
    pub values: Vec<StateValue>,
}

#[derive(Debug, Serialize)]
pub struct LabelledValue {
    pub label: String,
    pub value: String,
    pub source: String,
}

#[derive(Debug, Serialize)]
pub struct WitnessOut {
    pub policy: Option<String>,
    pub state: String,
    pub values: Vec<LabelledValue>,
    pub note: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct ConditionRow {
    pub id: String,
    pub status: String,
    pub statement: String,
    pub parameters: String,
    pub quantifier_note: Option<String>,
    pub witness: Option<WitnessOut>,
}

#[derive(Debug, Serialize)]
pub struct ConditionsBody {
    pub utility: String,
    pub conditions: Vec<ConditionRow>,
}

#[derive(Debug, Serialize)]
pub struct FindingOut {
    pub level: String,
    pub citations: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct Table2Out {
    pub row: String,
    pub cell: Option<String>,
    pub citation: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct AnalyzeBody {
    pub utility: String,
    pub reward_sign: String,
    pub values_exist: FindingOut,
    pub optimal_values_exist: FindingOut,
    pub optimal_values_finite: FindingOut,
    pub table2: Option<Table2Out>,
    pub citations: Vec<String>,
    pub notes: Vec<String>,
    pub conditions: Vec<ConditionRow>,
}

#[derive(Debug, Serialize)]
pub struct StateAction {
    pub state: String,
    pub action: String,
    pub value: String,
}

#[derive(Debug, Serialize)]
pub struct SolveBody {
    pub gamma: String,
    pub policy: Vec<StateAction>,
    pub iterations: usize,
    pub residual: String,
}

#[derive(Debug, Serialize)]
pub struct SimulateBody {
    pub utility: String,
    pub policy: String,
    pub start: String,
    pub horizon: usize,
    pub samples: usize,
    pub seed: u64,
    pub mean: String,
    pub stderr: String,
    /// Exact `v_{U,T}` when an exact engine applies.
    pub exact: Option<String>,
    pub exact_note: Option<String>,
    /// `|mean - exact| <= 4 stderr`.
    pub agrees: Option<bool>,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises") + "\n"
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "command: {}", self.command);
        for i in &self.inputs {
            let _ = writeln!(out, "input {}: {} sha256={}", i.role, i.path, i.sha256);
        }
        match &self.result {
            Body::Validate(b) => {
                let _ = writeln!(out, "valid: {}", b.valid);
                let _ = writeln!(out, "states: {}", b.states);
                let _ = writeln!(out, "actions: {}", b.actions);
                let _ = writeln!(out, "reward sign: {}", b.reward_sign);
                let _ = writeln!(out, "stationary deterministic policies: {}", b.sd_policies);
            }
            Body::Eval(b) => {
                let _ = writeln!(out, "utility: {}", b.utility);
                let _ = writeln!(out, "policy: {}", b.policy);
                let _ = writeln!(out, "horizon: {}", b.horizon);
                let _ = writeln!(out, "method: {}", b.method);
                for v in &b.values {
                    let _ = writeln!(out, "  {}: {} ({})", v.state, v.value, v.source);
                }
            }
            Body::Conditions(b) => {
                let _ = writeln!(out, "utility: {}", b.utility);
                render_conditions(&mut out, &b.conditions);
            }
            Body::Analyze(b) => {
                let _ = writeln!(out, "utility: {}", b.utility);
                let _ = writeln!(out, "reward sign: {}", b.reward_sign);
                for (name, f) in [
                    ("values exist", &b.values_exist),
                    ("optimal values exist", &b.optimal_values_exist),
                    ("optimal values finite", &b.optimal_values_finite),
                ] {
                    let cites = if f.citations.is_empty() {
                        "no applicable result".to_string()
                    } else {
                        f.citations.join("; ")
                    };
                    let _ = writeln!(out, "{name}: {} [{cites}]", f.level);
                }
                match &b.table2 {
                    Some(t) => {
                        let cell = t.cell.as_deref().unwrap_or("none");
                        let cite = t.citation.as_deref().map(|c| format!(" [{c}]")).unwrap_or_default();
                        let _ = writeln!(out, "table 2: row {}, cell {cell}{cite}", t.row);
                    }
                    None => {
                        let _ = writeln!(out, "table 2: not applicable");
                    }
                }
                for n in &b.notes {
                    let _ = writeln!(out, "note: {n}");
                }
                let _ = writeln!(out, "conditions consulted:");
                render_conditions(&mut out, &b.conditions);
            }
            Body::Solve(b) => {
                let _ = writeln!(out, "gamma: {}", b.gamma);
                for p in &b.policy {
                    let _ = writeln!(out, "  {}: {} v*={}", p.state, p.action, p.value);
                }
                let _ = writeln!(out, "iterations: {}", b.iterations);
                let _ = writeln!(out, "bellman residual: {}", b.residual);
            }
            Body::Simulate(b) => {
                let _ = writeln!(out, "utility: {}", b.utility);
                let _ = writeln!(out, "policy: {}", b.policy);
                let _ = writeln!(out, "start: {}", b.start);
                let _ = writeln!(out, "horizon: {}", b.horizon);
                let _ = writeln!(out, "samples: {}", b.samples);
                let _ = writeln!(out, "seed: {}", b.seed);
                let _ = writeln!(out, "mean: {}", b.mean);
                let _ = writeln!(out, "stderr: {}", b.stderr);
                match (&b.exact, &b.exact_note) {
                    (Some(x), _) => {
                        let _ = writeln!(out, "exact: {x}");
                    }
                    (None, Some(note)) => {
                        let _ = writeln!(out, "exact: unavailable ({note})");
                    }
                    (None, None) => {}
                }
                if let Some(a) = b.agrees {
                    let _ = writeln!(out, "agrees within 4 stderr: {a}");
                }
            }
        }
        let _ = writeln!(out, "timing: {} ms", self.timing_ms);
        out
    }
}

fn render_conditions(out: &mut String, rows: &[ConditionRow]) {
    for r in rows {
        let _ = writeln!(out, "  {} {}: {} [{}]", r.id, r.status, r.statement, r.parameters);
        if let Some(q) = &r.quantifier_note {
            let _ = writeln!(out, "    {q}");
        }
        if let Some(w) = &r.witness {
            let policy = w.policy.as_deref().unwrap_or("-");
            let values: Vec<String> = w
                .values
                .iter()
                .map(|v| format!("{} = {} ({})", v.label, v.value, v.source))
                .collect();
            let _ = writeln!(out, "    witness: policy [{policy}] state {} {}", w.state, values.join(", "));
            if let Some(n) = &w.note {
                let _ = writeln!(out, "    witness note: {n}");
            }
        }
    }
}
