//! Command handlers. Each returns a report body or an error to be mapped
//! onto an exit code.

use std::fs;
use std::path::Path;

use riskmdp::conditions::{analyze, check_condition, compatible_conditions, ConditionId, ConditionReport, Finding};
use riskmdp::engine::{
    exp_infinite_value, finite_horizon_eu, enumerate_eu, exp_finite_horizon, exp_matrix, limit_probe,
    linear_infinite_value, risk_vi_solve, Evaluated, ProbeConfig, SolveConfig, ENUMERATION_BUDGET,
};
use riskmdp::mdp::{parse_mdp, parse_mdp_unchecked, Diagnostic};
use riskmdp::policy::{parse_policy, DEFAULT_POLICY_GUARD};
use riskmdp::simulate::sample_eu;
use riskmdp::utility::{parse_utility, UtilityForm};
use riskmdp::{Error, Mdp, StationaryPolicy, UtilitySpec};
use sha2::{Digest, Sha256};

use crate::report::*;

#[derive(Debug)]
pub enum CliError {
    Io { path: String, message: String },
    /// Model read fine but failed validation.
    Invalid(Vec<Diagnostic>),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Invalid(d) => CliError::Invalid(d),
            other => CliError::Core(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 2,
            CliError::Invalid(_) => 1,
            CliError::Core(e) => match e {
                Error::Syntax { .. }
                | Error::Semantic { .. }
                | Error::Invalid(_)
                | Error::ProbabilityMass { .. }
                | Error::PolicyMismatch(_) => 1,
                Error::Precondition(_) | Error::IncompatibleUtility(_) | Error::UnsupportedUtility(_) => 4,
                _ => 3,
            },
        }
    }

    pub fn messages(&self) -> Vec<String> {
        match self {
            CliError::Io { path, message } => vec![format!("error: cannot read {path}: {message}")],
            CliError::Invalid(diags) => {
                let mut out = vec![format!("error: model failed validation with {} diagnostic(s)", diags.len())];
                out.extend(diags.iter().map(|d| format!("diagnostic: {d}")));
                out
            }
            CliError::Core(e) => vec![format!("error: {e}")],
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Inputs read so far, in the order they were given.
#[derive(Default)]
pub struct Inputs {
    pub digests: Vec<InputDigest>,
}

impl Inputs {
    fn read(&mut self, role: &str, path: &Path) -> CliResult<String> {
        let bytes = fs::read(path).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        self.digests.push(InputDigest {
            role: role.into(),
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        String::from_utf8(bytes).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn mdp(&mut self, path: &Path) -> CliResult<Mdp> {
        let text = self.read("mdp", path)?;
        Ok(parse_mdp(&text)?)
    }

    pub fn utility(&mut self, path: &Path) -> CliResult<UtilitySpec> {
        let text = self.read("utility", path)?;
        Ok(parse_utility(&text)?)
    }

    pub fn policy(&mut self, path: &Path, mdp: &Mdp) -> CliResult<StationaryPolicy> {
        let text = self.read("policy", path)?;
        Ok(parse_policy(&text, mdp)?)
    }
}

/// Policy enumeration guard, overridable through `RISKMDP_POLICY_GUARD`.
pub fn policy_guard() -> CliResult<u128> {
    match std::env::var("RISKMDP_POLICY_GUARD") {
        Ok(v) => v.trim().parse().map_err(|_| {
            CliError::Core(Error::Semantic {
                location: "RISKMDP_POLICY_GUARD".into(),
                message: format!("expected a non-negative integer, got '{v}'"),
            })
        }),
        Err(_) => Ok(DEFAULT_POLICY_GUARD),
    }
}

pub fn validate(inputs: &mut Inputs, path: &Path) -> CliResult<Body> {
    let text = inputs.read("mdp", path)?;
    let mdp = parse_mdp_unchecked(&text)?;
    let diags = mdp.validate();
    if !diags.is_empty() {
        return Err(CliError::Invalid(diags));
    }
    Ok(Body::Validate(ValidateBody {
        valid: true,
        states: mdp.num_states(),
        actions: mdp.actions().len(),
        reward_sign: mdp.reward_sign().to_string(),
        sd_policies: mdp.sd_policy_count().to_string(),
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    Auto,
    Matrix,
    Enumerate,
    Probe,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Auto => "auto",
            Method::Matrix => "matrix",
            Method::Enumerate => "enumerate",
            Method::Probe => "probe",
        }
    }
}

fn source(e: &Evaluated) -> String {
    if e.numeric { "numeric" } else { "analytic" }.into()
}

fn gamma_of(u: &UtilitySpec, method: &str) -> CliResult<f64> {
    match u.form {
        UtilityForm::Exponential { gamma } => Ok(gamma),
        _ => Err(Error::IncompatibleUtility(format!(
            "method {method} needs an exponential utility, got {}",
            u.describe()
        ))
        .into()),
    }
}

pub fn eval(
    mdp: &Mdp,
    pi: &StationaryPolicy,
    u: &UtilitySpec,
    horizon: Option<usize>,
    method: Method,
) -> CliResult<Body> {
    let mut method_used = method.name().to_string();
    let values: Vec<StateValue> = match horizon {
        Some(t) => {
            let vv = match method {
                Method::Auto => {
                    method_used = if u.gamma().is_some() { "matrix" } else { "enumerate" }.into();
                    finite_horizon_eu(mdp, pi, u, t)?
                }
                Method::Matrix => exp_finite_horizon(&exp_matrix(mdp, pi, gamma_of(u, "matrix")?)?, t)?,
                Method::Enumerate => enumerate_eu(mdp, pi, u, t, ENUMERATION_BUDGET)?,
                Method::Probe => {
                    return Err(Error::Precondition("the probe method applies to --infinite only".into()).into())
                }
            };
            vv.values
                .iter()
                .enumerate()
                .map(|(s, &x)| StateValue {
                    state: mdp.state_name(s).into(),
                    value: num(x),
                    source: "exact".into(),
                })
                .collect()
        }
        None => {
            let cfg = ProbeConfig::default();
            let evs = match method {
                Method::Auto => match u.form {
                    UtilityForm::Exponential { gamma } => {
                        method_used = "matrix".into();
                        exp_infinite_value(mdp, pi, gamma)?
                    }
                    UtilityForm::Linear => {
                        method_used = "linear".into();
                        linear_infinite_value(mdp, pi)?
                    }
                    UtilityForm::PiecewiseLinear { .. } => {
                        method_used = "probe".into();
                        limit_probe(mdp, pi, u, &cfg)?
                    }
                },
                Method::Matrix => exp_infinite_value(mdp, pi, gamma_of(u, "matrix")?)?,
                Method::Enumerate => {
                    return Err(Error::Precondition("the enumerate method needs a finite --horizon".into()).into())
                }
                Method::Probe => limit_probe(mdp, pi, u, &cfg)?,
            };
            evs.iter()
                .enumerate()
                .map(|(s, e)| StateValue {
                    state: mdp.state_name(s).into(),
                    value: outcome(&e.outcome),
                    source: source(e),
                })
                .collect()
        }
    };
    Ok(Body::Eval(EvalBody {
        utility: u.describe(),
        policy: pi.describe(mdp),
        horizon: horizon.map_or("infinite".into(), |t| t.to_string()),
        method: method_used,
        values,
    }))
}

fn condition_row(r: &ConditionReport) -> ConditionRow {
    ConditionRow {
        id: r.id.to_string(),
        status: r.status.to_string(),
        statement: r.statement.clone(),
        parameters: r.parameters.clone(),
        quantifier_note: r.quantifier_note.clone(),
        witness: r.witness.as_ref().map(|w| WitnessOut {
            policy: w.policy_label.clone(),
            state: w.state_name.clone(),
            values: w
                .values
                .iter()
                .map(|v| LabelledValue {
                    label: v.label.clone(),
                    value: outcome(&v.value.outcome),
                    source: source(&v.value),
                })
                .collect(),
            note: w.note.clone(),
        }),
    }
}

pub fn conditions(mdp: &Mdp, u: &UtilitySpec, ids: Option<Vec<ConditionId>>, guard: u128) -> CliResult<Body> {
    let ids = ids.unwrap_or_else(|| compatible_conditions(u));
    let rows = ids
        .into_iter()
        .map(|id| check_condition(mdp, u, id, guard).map(|r| condition_row(&r)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Body::Conditions(ConditionsBody {
        utility: u.describe(),
        conditions: rows,
    }))
}

fn finding<L: ToString>(f: &Finding<L>) -> FindingOut {
    FindingOut {
        level: f.level.to_string(),
        citations: f.citations.iter().map(|c| c.to_string()).collect(),
    }
}

pub fn analyze_cmd(mdp: &Mdp, u: &UtilitySpec, guard: u128) -> CliResult<Body> {
    let v = analyze(mdp, u, guard)?;
    let table2 = v.table2_row.map(|row| Table2Out {
        row: serde_json::to_value(row)
            .ok()
            .and_then(|x| x.as_str().map(String::from))
            .unwrap_or_default(),
        cell: v.table2_cell.map(|c| c.symbol().to_string()),
        citation: v.table2_citation.as_ref().map(|c| c.to_string()),
    });
    Ok(Body::Analyze(AnalyzeBody {
        utility: u.describe(),
        reward_sign: mdp.reward_sign().to_string(),
        values_exist: finding(&v.values_exist),
        optimal_values_exist: finding(&v.optimal_values_exist),
        optimal_values_finite: finding(&v.optimal_values_finite),
        table2,
        citations: v.citations.iter().map(|c| c.to_string()).collect(),
        notes: v.notes.clone(),
        conditions: v.conditions.iter().map(condition_row).collect(),
    }))
}

pub fn solve(mdp: &Mdp, gamma: f64, guard: u128) -> CliResult<Body> {
    let cfg = SolveConfig {
        guard,
        ..SolveConfig::default()
    };
    let sol = risk_vi_solve(mdp, gamma, &cfg)?;
    let policy = (0..mdp.num_states())
        .map(|s| StateAction {
            state: mdp.state_name(s).into(),
            action: mdp.action_name(mdp.choices(s)[sol.policy_choice(s)].action).into(),
            value: num(sol.values.values[s]),
        })
        .collect();
    Ok(Body::Solve(SolveBody {
        gamma: num(gamma),
        policy,
        iterations: sol.iterations,
        residual: num(sol.residual),
    }))
}

pub struct SimArgs<'a> {
    pub start: Option<&'a str>,
    pub horizon: usize,
    pub samples: usize,
    pub seed: u64,
}

pub fn simulate(mdp: &Mdp, pi: &StationaryPolicy, u: &UtilitySpec, args: &SimArgs<'_>) -> CliResult<Body> {
    let s = match args.start {
        Some(name) => mdp
            .state_index(name)
            .ok_or_else(|| Error::Semantic {
                location: "start".into(),
                message: format!("unknown state '{name}'"),
            })?,
        None => mdp.initial().ok_or_else(|| Error::Semantic {
            location: "start".into(),
            message: "no --start given and the model declares no initial state".into(),
        })?,
    };
    let est = sample_eu(mdp, pi, s, u, args.horizon, args.samples, args.seed)?;
    let (exact, exact_note) = match finite_horizon_eu(mdp, pi, u, args.horizon) {
        Ok(v) => (Some(v.values[s]), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(Body::Simulate(SimulateBody {
        utility: u.describe(),
        policy: pi.describe(mdp),
        start: mdp.state_name(s).into(),
        horizon: args.horizon,
        samples: args.samples,
        seed: args.seed,
        mean: num(est.mean),
        stderr: num(est.stderr),
        exact: exact.map(num),
        exact_note,
        agrees: exact.map(|x| est.agrees_with(x, 4.0)),
    }))
}
