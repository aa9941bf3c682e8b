//! Infinite-horizon values for the linear (risk-neutral) utility.

use nalgebra::{DMatrix, DVector};

use crate::chain::{analyze_chain, induced_chain, ChainAnalysis, ClassType, InducedChain};
use crate::engine::probe::{classify_sequence, linear_sequences, ProbeConfig};
use crate::engine::Evaluated;
use crate::error::{Error, Result};
use crate::extreal::{ExtReal, ValueOutcome};
use crate::linalg::solve_identity_minus;
use crate::mdp::Mdp;
use crate::policy::StationaryPolicy;

/// Long-run average reward of every recurrent class.
pub fn class_gains(chain: &InducedChain, analysis: &ChainAnalysis) -> Result<Vec<f64>> {
    let rbar = chain.expected_rewards();
    analysis
        .recurrent_classes
        .iter()
        .map(|class| {
            let k = class.len();
            // rows 0..k-1 of (P_C^T - I) plus a normalisation row
            let mut m = DMatrix::from_fn(k, k, |i, j| {
                chain.p[(class[j], class[i])] - if i == j { 1.0 } else { 0.0 }
            });
            m.row_mut(k - 1).fill(1.0);
            let mut rhs = DVector::zeros(k);
            rhs[k - 1] = 1.0;
            let dist = m
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::Singular("stationary distribution of a recurrent class".into()))?;
            Ok(class.iter().zip(dist.iter()).map(|(&s, &p)| p * rbar[s]).sum())
        })
        .collect()
}

/// `lim E[w_T]` for every state.
///
/// States whose reachable classes are all zero-reward get the expected
/// accumulated transient reward from the fundamental matrix. A reachable
/// class with positive gain and none with negative gain gives `+inf`, and
/// symmetrically. Mixed signs of gain, or a zero-gain class with nonzero
/// rewards, are left to the probe and labelled numeric.
pub fn linear_infinite_value(mdp: &Mdp, pi: &StationaryPolicy) -> Result<Vec<Evaluated>> {
    let chain = induced_chain(mdp, pi)?;
    let analysis = analyze_chain(&chain);
    let gains = class_gains(&chain, &analysis)?;
    let scale = mdp.max_abs_reward().max(1.0);
    let tr = &analysis.transient;
    let fundamental = if tr.is_empty() {
        None
    } else {
        let k = tr.len();
        let q = DMatrix::from_fn(k, k, |i, j| chain.p[(tr[i], tr[j])]);
        let rbar = chain.expected_rewards();
        let r = DMatrix::from_fn(k, 1, |i, _| rbar[tr[i]]);
        Some(
            solve_identity_minus(&q, &r)
                .ok_or_else(|| Error::Singular("fundamental matrix of the transient states".into()))?,
        )
    };
    let mut probed: Option<Vec<Vec<f64>>> = None;
    let cfg = ProbeConfig::default();
    (0..mdp.num_states())
        .map(|s| {
            let reach = &analysis.reach[s];
            let zero_gain = |c: usize| gains[c].abs() <= 1e-12 * scale;
            let stalled = reach
                .iter()
                .any(|&c| zero_gain(c) && analysis.class_types[c] != ClassType::Zero);
            let up = reach.iter().any(|&c| !zero_gain(c) && gains[c] > 0.0);
            let down = reach.iter().any(|&c| !zero_gain(c) && gains[c] < 0.0);
            let value = match (stalled, up, down) {
                (false, true, false) => Some(ExtReal::PlusInfinity),
                (false, false, true) => Some(ExtReal::MinusInfinity),
                (false, false, false) => Some(match analysis.class_of[s] {
                    Some(_) => ExtReal::ZERO,
                    None => {
                        let row = tr.iter().position(|&t| t == s).expect("transient state");
                        let n = fundamental.as_ref().expect("transient states present");
                        ExtReal::Finite(n[(row, 0)])
                    }
                }),
                _ => None,
            };
            if let Some(v) = value {
                return Ok(Evaluated::analytic(ValueOutcome::Exists(v)));
            }
            if probed.is_none() {
                probed = Some(linear_sequences(mdp, pi, cfg.t_max)?);
            }
            let seqs = probed.as_ref().expect("just filled");
            Ok(Evaluated::numeric(classify_sequence(&seqs[s], &cfg).outcome()))
        })
        .collect()
}
