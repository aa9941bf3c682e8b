//! Largest and smallest total reward over finite trajectories.

use serde::{Deserialize, Serialize};

use crate::chain::induced_chain;
use crate::error::Result;
use crate::extreal::ExtReal;
use crate::mdp::Mdp;
use crate::policy::StationaryPolicy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremeRewards {
    pub v_max: Vec<ExtReal>,
    pub v_min: Vec<ExtReal>,
}

/// `v_max(s)` is the supremum of `w(h_T)` over every trajectory of every
/// length `T >= 1` from `s` in the support graph of `pi`; `v_min` is the
/// infimum.
pub fn extreme_total_reward(mdp: &Mdp, pi: &StationaryPolicy) -> Result<ExtremeRewards> {
    let chain = induced_chain(mdp, pi)?;
    let edges: Vec<Vec<(usize, f64)>> = chain
        .edges
        .iter()
        .map(|es| es.iter().filter(|e| e.share > 0.0).map(|e| (e.to, e.reward)).collect())
        .collect();
    let v_max = longest(&edges);
    let negated: Vec<Vec<(usize, f64)>> = edges
        .iter()
        .map(|es| es.iter().map(|&(t, r)| (t, -r)).collect())
        .collect();
    let v_min = longest(&negated).into_iter().map(ExtReal::neg).collect();
    Ok(ExtremeRewards { v_max, v_min })
}

/// `S(s) = max_e [r_e + max(0, S(to_e))]` by Bellman-Ford. States whose value
/// still grows after `n` rounds sit on or behind a positive cycle; every
/// state that can reach one of them is unbounded.
fn longest(edges: &[Vec<(usize, f64)>]) -> Vec<ExtReal> {
    let n = edges.len();
    let mut best = vec![f64::NEG_INFINITY; n];
    let round = |best: &[f64]| -> Vec<f64> {
        edges
            .iter()
            .map(|es| {
                es.iter()
                    .map(|&(t, r)| r + best[t].max(0.0))
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect()
    };
    for _ in 0..n {
        best = round(&best);
    }
    let mut growing = vec![false; n];
    for _ in 0..n {
        let next = round(&best);
        for s in 0..n {
            // tolerance absorbs rounding on zero-total cycles
            if next[s] > best[s] + 1e-9 * best[s].abs().max(1.0) {
                growing[s] = true;
            }
        }
        best = next;
    }
    // backward closure: predecessors of growing states are unbounded too
    let mut unbounded = growing;
    loop {
        let mut changed = false;
        for s in 0..n {
            if !unbounded[s] && edges[s].iter().any(|&(t, _)| unbounded[t]) {
                unbounded[s] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    (0..n)
        .map(|s| {
            if unbounded[s] {
                ExtReal::PlusInfinity
            } else {
                ExtReal::Finite(best[s])
            }
        })
        .collect()
}
