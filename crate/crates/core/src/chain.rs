//! Markov chains induced by stationary policies and their recurrent-class
//! structure.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{reachable_from, strongly_connected_components};
use crate::linalg::spectral_radius;
use crate::mdp::{Mdp, RewardSign};
use crate::policy::StationaryPolicy;
use crate::PROB_TOL;

/// One `(action, successor)` contribution to a chain edge, kept separate so
/// that reward-sign scans see every reward exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeShare {
    pub to: usize,
    /// `pi(s, a) * P(to | s, a)`.
    pub share: f64,
    pub reward: f64,
    /// Choice index of the action in the source state.
    pub choice: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InducedChain {
    /// Row-stochastic transition matrix `P_pi`.
    pub p: DMatrix<f64>,
    /// Unaggregated contributions per source state.
    pub edges: Vec<Vec<EdgeShare>>,
}

impl InducedChain {
    pub fn num_states(&self) -> usize {
        self.edges.len()
    }

    /// Successors with positive probability, sorted and deduplicated.
    pub fn support(&self) -> Vec<Vec<usize>> {
        self.edges
            .iter()
            .map(|es| {
                let mut v: Vec<usize> = es.iter().map(|e| e.to).collect();
                v.sort_unstable();
                v.dedup();
                v
            })
            .collect()
    }

    /// Expected one-step reward of every state.
    pub fn expected_rewards(&self) -> Vec<f64> {
        self.edges
            .iter()
            .map(|es| es.iter().map(|e| e.share * e.reward).sum())
            .collect()
    }
}

/// Markov chain of `mdp` under `pi`: `P_pi(s, s') = sum_a pi(s, a) P(s' | s, a)`.
pub fn induced_chain(mdp: &Mdp, pi: &StationaryPolicy) -> Result<InducedChain> {
    pi.check(mdp)?;
    let n = mdp.num_states();
    let mut p = DMatrix::zeros(n, n);
    let mut edges = vec![Vec::new(); n];
    for s in 0..n {
        for (c, w) in pi.weights(s) {
            for o in &mdp.choices(s)[c].outcomes {
                let share = w * o.prob;
                p[(s, o.to)] += share;
                edges[s].push(EdgeShare {
                    to: o.to,
                    share,
                    reward: o.reward,
                    choice: c,
                });
            }
        }
        let row: f64 = p.row(s).sum();
        if (row - 1.0).abs() > PROB_TOL {
            return Err(Error::PolicyMismatch(format!(
                "row of '{}' sums to {row}",
                mdp.state_name(s)
            )));
        }
    }
    Ok(InducedChain { p, edges })
}

/// Sign type of the rewards on transitions inside a recurrent class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassType {
    Zero,
    Positive,
    Negative,
    /// Both signs inside one class; only possible when C5 fails.
    Mixed,
}

impl From<RewardSign> for ClassType {
    fn from(s: RewardSign) -> Self {
        match s {
            RewardSign::AllZero => ClassType::Zero,
            RewardSign::Positive => ClassType::Positive,
            RewardSign::Negative => ClassType::Negative,
            RewardSign::Mixed => ClassType::Mixed,
        }
    }
}

impl fmt::Display for ClassType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassType::Zero => "zero",
            ClassType::Positive => "positive",
            ClassType::Negative => "negative",
            ClassType::Mixed => "mixed",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainAnalysis {
    /// Closed communicating classes, ordered by their smallest state.
    pub recurrent_classes: Vec<Vec<usize>>,
    pub transient: Vec<usize>,
    pub class_types: Vec<ClassType>,
    /// Class index of each state, `None` for transient states.
    pub class_of: Vec<Option<usize>>,
    /// Indices of the recurrent classes reachable from each state.
    pub reach: Vec<Vec<usize>>,
}

impl ChainAnalysis {
    pub fn is_recurrent(&self, s: usize) -> bool {
        self.class_of[s].is_some()
    }

    /// Classes reachable from `s` together with their types.
    pub fn reachable_types(&self, s: usize) -> impl Iterator<Item = ClassType> + '_ {
        self.reach[s].iter().map(|&i| self.class_types[i])
    }
}

/// Recurrent classes are the closed strongly connected components of the
/// support graph; everything else is transient. Class types come from exact
/// sign tests on the rewards of within-class transitions.
pub fn analyze_chain(chain: &InducedChain) -> ChainAnalysis {
    let n = chain.num_states();
    let adj = chain.support();
    let mut comp_of = vec![0usize; n];
    let comps = strongly_connected_components(&adj);
    for (i, comp) in comps.iter().enumerate() {
        for &s in comp {
            comp_of[s] = i;
        }
    }
    let mut recurrent_classes: Vec<Vec<usize>> = comps
        .into_iter()
        .filter(|comp| {
            let id = comp_of[comp[0]];
            comp.iter().all(|&s| adj[s].iter().all(|&t| comp_of[t] == id))
        })
        .collect();
    recurrent_classes.sort_by_key(|c| c[0]);

    let mut class_of = vec![None; n];
    for (i, class) in recurrent_classes.iter().enumerate() {
        for &s in class {
            class_of[s] = Some(i);
        }
    }
    let transient = (0..n).filter(|&s| class_of[s].is_none()).collect();
    let class_types = recurrent_classes
        .iter()
        .map(|class| {
            // closed class: every edge out of a member stays inside
            RewardSign::classify(
                class
                    .iter()
                    .flat_map(|&s| chain.edges[s].iter().map(|e| e.reward)),
            )
            .into()
        })
        .collect();
    let reach = (0..n)
        .map(|s| {
            let seen = reachable_from(&adj, s);
            let mut classes: Vec<usize> = (0..n)
                .filter(|&t| seen[t])
                .filter_map(|t| class_of[t])
                .collect();
            classes.sort_unstable();
            classes.dedup();
            classes
        })
        .collect();
    ChainAnalysis {
        recurrent_classes,
        transient,
        class_types,
        class_of,
        reach,
    }
}

/// Default number of steps probed by [`transient_decay`].
pub const DECAY_PROBE: usize = 200;

/// Geometric decay of the transient mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransientDecay {
    pub rho: f64,
    /// `max_s P(s_t not recurrent) <= a rho^t` on the probe window.
    pub a: f64,
    /// `max_s P(s_t transient, s_{t+1} recurrent) <= b rho^t`.
    pub b: f64,
    /// Per recurrent class `i`: `max_s P(s_t transient, s_{t+1} in class i) <= c_i rho^t`.
    pub c: Vec<f64>,
    /// Exact `max_s P(s_t not recurrent)` for `t = 0..=probe`.
    pub mass: Vec<f64>,
}

/// Fits the constants of the geometric transient-mass bound.
///
/// `rho` is the spectral radius of `P_pi` restricted to the transient
/// states (an upper bound from the certified bracket). When that block is
/// nilpotent the radius is zero and no finite constant fits `rho^t`, so
/// `rho = 1/2` is reported instead. The constants are the smallest that make
/// the bounds hold for `t = 0..=probe`; they are diagnostics, not certified
/// global constants. Without transient states the result is `(0, 1)`.
pub fn transient_decay(chain: &InducedChain, analysis: &ChainAnalysis, probe: usize) -> TransientDecay {
    let tr = &analysis.transient;
    let k = analysis.recurrent_classes.len();
    if tr.is_empty() {
        return TransientDecay {
            rho: 0.0,
            a: 1.0,
            b: 0.0,
            c: vec![0.0; k],
            mass: vec![0.0; probe + 1],
        };
    }
    let m = tr.len();
    let q = DMatrix::from_fn(m, m, |i, j| chain.p[(tr[i], tr[j])]);
    // one-step entry probability from each transient state into each class
    let entry = DMatrix::from_fn(m, k, |i, c| {
        analysis.recurrent_classes[c]
            .iter()
            .map(|&t| chain.p[(tr[i], t)])
            .sum::<f64>()
    });
    let mut rho = spectral_radius(&q).upper.min(1.0 - f64::EPSILON);
    if rho <= 1e-12 {
        rho = 0.5;
    }
    let ln_rho = rho.ln();
    let fit = |best: &mut f64, value: f64, t: usize| {
        if value > 0.0 {
            *best = best.max(value.ln() - t as f64 * ln_rho);
        }
    };
    let (mut ln_a, mut ln_b) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut ln_c = vec![f64::NEG_INFINITY; k];
    let mut mass = Vec::with_capacity(probe + 1);
    let mut qt = DMatrix::<f64>::identity(m, m);
    for t in 0..=probe {
        let row_mass = qt.column_sum();
        let mt = row_mass.max();
        mass.push(mt);
        fit(&mut ln_a, mt, t);
        let into = &qt * &entry;
        let into_any = into.column_sum();
        fit(&mut ln_b, into_any.max(), t);
        for c in 0..k {
            fit(&mut ln_c[c], into.column(c).max(), t);
        }
        qt = &qt * &q;
    }
    let finish = |x: f64| if x.is_finite() { x.exp() } else { 0.0 };
    TransientDecay {
        rho,
        a: finish(ln_a),
        b: finish(ln_b),
        c: ln_c.into_iter().map(finish).collect(),
        mass,
    }
}
