//! Split of the infinite-horizon value into the transient contribution, the
//! contribution at entry into a recurrent class, and the change after entry.
//!
//! With `tau` the first time the chain is in a recurrent state:
//! `v_T = E[U(w_T); tau > T] + E[U(w_tau); tau <= T] + E[U(w_T) - U(w_tau); tau <= T]`.

use serde::{Deserialize, Serialize};

use crate::chain::{analyze_chain, induced_chain};
use crate::engine::exp::ExpAnalysis;
use crate::engine::probe::{classify_sequence, exp_sequences, wealth_steps, ProbeConfig};
use crate::engine::Evaluated;
use crate::error::{Error, Result};
use crate::extreal::{ExtReal, ValueOutcome};
use crate::mdp::Mdp;
use crate::policy::StationaryPolicy;
use crate::utility::{GrowthClass, UtilityForm, UtilitySpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eq2Triple {
    pub transient_limit: Evaluated,
    pub entry_limit: Evaluated,
    pub post_entry_limit: Evaluated,
    /// Sum of the three limits when all exist and the sum is defined,
    /// otherwise the probe verdict on `v_T` itself.
    pub recombination: ValueOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eq2Decomposition {
    pub states: Vec<Eq2Triple>,
}

/// The three term sequences of one state for `T = 1..=t_probe`.
struct TermSeqs {
    transient: Vec<f64>,
    entry: Vec<f64>,
    post: Vec<f64>,
    total: Vec<f64>,
}

fn exp_term_sequences(ea: &ExpAnalysis, t_probe: usize) -> Vec<TermSeqs> {
    let n = ea.m.num_states();
    let iota = ea.m.iota;
    let totals = exp_sequences(&ea.m, t_probe);
    let k = ea.hat.num_transient;
    let a = &ea.hat.a_block;
    let b1: Vec<f64> = (0..k).map(|i| ea.hat.b_block.row(i).sum()).collect();
    let step = |x: &[f64]| -> Vec<f64> {
        (0..k)
            .map(|i| (0..k).filter(|&j| a[(i, j)] > 0.0).map(|j| a[(i, j)] * x[j]).sum())
            .collect()
    };
    // stay_T = A^T 1, entered_T = sum_{t<T} A^t B 1
    let mut stay = vec![1.0; k];
    let mut flow = b1;
    let mut entered = vec![0.0; k];
    let mut out: Vec<TermSeqs> = (0..n)
        .map(|_| TermSeqs {
            transient: Vec::with_capacity(t_probe),
            entry: Vec::with_capacity(t_probe),
            post: Vec::with_capacity(t_probe),
            total: Vec::with_capacity(t_probe),
        })
        .collect();
    for t in 0..t_probe {
        stay = step(&stay);
        for i in 0..k {
            entered[i] += flow[i];
        }
        flow = step(&flow);
        for s in 0..n {
            let (tr, en) = match ea.transient_row(s) {
                Some(i) => (iota * stay[i], iota * entered[i]),
                None => (0.0, iota),
            };
            let v = totals[s][t];
            let seq = &mut out[s];
            seq.transient.push(tr);
            seq.entry.push(en);
            seq.post.push(v - tr - en);
            seq.total.push(v);
        }
    }
    out
}

fn recombine(t: &Evaluated, e: &Evaluated, p: &Evaluated, total: &[f64], cfg: &ProbeConfig) -> ValueOutcome {
    if let (ValueOutcome::Exists(a), ValueOutcome::Exists(b), ValueOutcome::Exists(c)) =
        (t.outcome, e.outcome, p.outcome)
    {
        if let Some(sum) = a.checked_add(b).and_then(|ab| ab.checked_add(c)) {
            return ValueOutcome::Exists(sum);
        }
    }
    classify_sequence(total, cfg).outcome()
}

/// Limits of the three terms for every state. Exponential utilities get
/// analytic limits when the transient block has spectral radius below one;
/// everything else, and bounded piecewise utilities, is probed over
/// horizons `1..=t_probe`.
pub fn decompose_eq2(mdp: &Mdp, pi: &StationaryPolicy, u: &UtilitySpec, t_probe: usize) -> Result<Eq2Decomposition> {
    if t_probe == 0 {
        return Err(Error::Precondition("probe horizon must be at least 1".into()));
    }
    let cfg = ProbeConfig {
        t_max: t_probe,
        ..ProbeConfig::default()
    };
    let numeric = |xs: &[f64]| Evaluated::numeric(classify_sequence(xs, &cfg).outcome());
    match u.form {
        UtilityForm::Exponential { gamma } => {
            let ea = ExpAnalysis::new(mdp, pi, gamma)?;
            let seqs = exp_term_sequences(&ea, t_probe);
            let states = (0..mdp.num_states())
                .map(|s| {
                    let seq = &seqs[s];
                    let (transient, entry, post) = match analytic_terms(&ea, s) {
                        Some((t, e, p)) => (
                            Evaluated::analytic(ValueOutcome::Exists(t)),
                            Evaluated::analytic(ValueOutcome::Exists(e)),
                            p.map(|p| Evaluated::analytic(ValueOutcome::Exists(p)))
                                .unwrap_or_else(|| numeric(&seq.post)),
                        ),
                        None => (numeric(&seq.transient), numeric(&seq.entry), numeric(&seq.post)),
                    };
                    let recombination = recombine(&transient, &entry, &post, &seq.total, &cfg);
                    Eq2Triple {
                        transient_limit: transient,
                        entry_limit: entry,
                        post_entry_limit: post,
                        recombination,
                    }
                })
                .collect();
            Ok(Eq2Decomposition { states })
        }
        UtilityForm::PiecewiseLinear { .. } if matches!(u.growth, GrowthClass::Bounded { .. }) => {
            let analysis = analyze_chain(&induced_chain(mdp, pi)?);
            let transient: Vec<bool> = (0..mdp.num_states()).map(|s| !analysis.is_recurrent(s)).collect();
            let states = (0..mdp.num_states())
                .map(|s| {
                    let steps = wealth_steps(mdp, pi, u, s, &transient, &cfg)?;
                    let tr: Vec<f64> = steps.iter().map(|x| x.transient).collect();
                    let en: Vec<f64> = steps.iter().map(|x| x.entered).collect();
                    let post: Vec<f64> = steps.iter().map(|x| x.total - x.transient - x.entered).collect();
                    let total: Vec<f64> = steps.iter().map(|x| x.total).collect();
                    let (t, e, p) = (numeric(&tr), numeric(&en), numeric(&post));
                    Ok(Eq2Triple {
                        transient_limit: t,
                        entry_limit: e,
                        post_entry_limit: p,
                        recombination: recombine(&t, &e, &p, &total, &cfg),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Eq2Decomposition { states })
        }
        _ => Err(Error::UnsupportedUtility(format!(
            "the three-term split needs an exponential or bounded utility, got {}",
            u.describe()
        ))),
    }
}

/// Analytic limits `(transient, entry, post-entry)`; the post-entry limit is
/// `None` when a reachable class has mixed rewards.
fn analytic_terms(ea: &ExpAnalysis, s: usize) -> Option<(ExtReal, ExtReal, Option<ExtReal>)> {
    let iota = ea.m.iota;
    if let Some(c) = ea.analysis.class_of[s] {
        let post = ea
            .class_limit(ea.analysis.class_types[c])
            .map(|l| relative_to_entry(l, iota, 1.0));
        return Some((ExtReal::ZERO, ExtReal::Finite(iota), post));
    }
    let entry = ea.entry.as_ref()?;
    let row = ea.transient_row(s)?;
    let mut entered = 0.0;
    let mut post = Some(ExtReal::ZERO);
    for &c in &ea.analysis.reach[s] {
        let weight: f64 = ea.class_columns(c).map(|j| entry[(row, j)]).sum();
        entered += iota * weight;
        post = match (post, ea.class_limit(ea.analysis.class_types[c])) {
            (Some(acc), Some(l)) => acc.checked_add(relative_to_entry(l, iota, weight)),
            _ => None,
        };
    }
    Some((ExtReal::ZERO, ExtReal::Finite(entered), post))
}

/// Post-entry change for a class entered with weight `w`: the limit of the
/// class minus the utility at entry.
fn relative_to_entry(limit: ExtReal, iota: f64, w: f64) -> ExtReal {
    match limit {
        ExtReal::Finite(x) => ExtReal::Finite((x - iota) * w),
        inf => inf,
    }
}
