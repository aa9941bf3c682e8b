//! Exponential-utility matrices: `D_pi`, its powers, the hat matrix with
//! recurrent rows replaced by identity rows, and infinite-horizon values.

use nalgebra::DMatrix;

use crate::chain::{analyze_chain, induced_chain, ChainAnalysis, ClassType};
use crate::engine::probe::{classify_sequence, exp_sequences, ProbeConfig};
use crate::engine::{Evaluated, Horizon, ValueVector};
use crate::error::{Error, Result};
use crate::extreal::{ExtReal, ValueOutcome};
use crate::linalg::{solve_identity_minus, spectral_radius, SPECTRAL_MARGIN};
use crate::mdp::Mdp;
use crate::policy::StationaryPolicy;
use crate::utility::{iota, EXP_RANGE_LIMIT};

/// `D(s, s') = sum_a pi(s, a) P(s' | s, a) gamma^{r(s, a, s')}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpMatrix {
    pub gamma: f64,
    pub iota: f64,
    pub d: DMatrix<f64>,
}

impl ExpMatrix {
    pub fn num_states(&self) -> usize {
        self.d.nrows()
    }

    /// Nonzero entries per row, for sparse iteration. Sparse products keep
    /// infinite entries from turning into NaN through `0 * inf`.
    pub(crate) fn sparse_rows(&self) -> Vec<Vec<(usize, f64)>> {
        let n = self.num_states();
        (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| self.d[(i, j)] > 0.0)
                    .map(|j| (j, self.d[(i, j)]))
                    .collect()
            })
            .collect()
    }

    /// `u_T = D^T 1`, computed as `T` sparse matrix-vector products.
    pub(crate) fn apply(&self, rows: &[Vec<(usize, f64)>], u: &[f64]) -> Vec<f64> {
        rows.iter()
            .map(|row| row.iter().map(|&(j, w)| w * u[j]).sum())
            .collect()
    }
}

pub fn exp_matrix(mdp: &Mdp, pi: &StationaryPolicy, gamma: f64) -> Result<ExpMatrix> {
    if !(gamma > 0.0) || gamma == 1.0 || !gamma.is_finite() {
        return Err(Error::Range(format!(
            "gamma must be positive and different from 1, got {gamma}"
        )));
    }
    let chain = induced_chain(mdp, pi)?;
    let ln_g = gamma.ln();
    let n = mdp.num_states();
    let mut d = DMatrix::zeros(n, n);
    for (s, edges) in chain.edges.iter().enumerate() {
        for e in edges {
            let exponent = e.reward * ln_g;
            if exponent.abs() > EXP_RANGE_LIMIT {
                return Err(Error::Range(format!(
                    "{gamma}^{} on a transition out of '{}' exceeds the representable range",
                    e.reward,
                    mdp.state_name(s)
                )));
            }
            d[(s, e.to)] += e.share * exponent.exp();
        }
    }
    Ok(ExpMatrix {
        gamma,
        iota: iota(gamma),
        d,
    })
}

/// `v_{e,T}(s) = iota * sum_{s'} D^T(s, s')`.
pub fn exp_finite_horizon(m: &ExpMatrix, horizon: usize) -> Result<ValueVector> {
    if horizon == 0 {
        return Err(Error::Precondition("horizon must be at least 1".into()));
    }
    let rows = m.sparse_rows();
    let mut u = vec![1.0; m.num_states()];
    for t in 1..=horizon {
        u = m.apply(&rows, &u);
        if u.iter().any(|x| !x.is_finite()) {
            return Err(Error::PowerOverflow { last_finite: t - 1 });
        }
    }
    Ok(ValueVector {
        values: u.iter().map(|x| m.iota * x).collect(),
        horizon: Horizon::Finite(horizon),
        utility: format!("exponential(gamma={})", m.gamma),
    })
}

/// The hat matrix and its blocks under the transient-first ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct HatDecomposition {
    /// `D` with every recurrent row replaced by the identity row, in the
    /// original state order.
    pub hat: DMatrix<f64>,
    pub a_block: DMatrix<f64>,
    pub b_block: DMatrix<f64>,
    /// Transient states first, then recurrent states class by class.
    pub ordering: Vec<usize>,
    pub num_transient: usize,
}

impl HatDecomposition {
    /// `hat` with rows and columns permuted by `ordering`.
    pub fn permuted(&self) -> DMatrix<f64> {
        let n = self.ordering.len();
        DMatrix::from_fn(n, n, |i, j| self.hat[(self.ordering[i], self.ordering[j])])
    }
}

pub fn hat_decompose(m: &ExpMatrix, analysis: &ChainAnalysis) -> Result<HatDecomposition> {
    let n = m.num_states();
    if analysis.class_of.len() != n {
        return Err(Error::Dimension(format!(
            "chain analysis covers {} states, matrix has {n}",
            analysis.class_of.len()
        )));
    }
    let mut hat = m.d.clone();
    for s in (0..n).filter(|&s| analysis.is_recurrent(s)) {
        hat.row_mut(s).fill(0.0);
        hat[(s, s)] = 1.0;
    }
    let mut ordering = analysis.transient.clone();
    for class in &analysis.recurrent_classes {
        ordering.extend(class);
    }
    if ordering.len() != n {
        return Err(Error::Dimension(
            "chain analysis does not partition the state space".into(),
        ));
    }
    let k = analysis.transient.len();
    let a_block = DMatrix::from_fn(k, k, |i, j| hat[(ordering[i], ordering[j])]);
    let b_block = DMatrix::from_fn(k, n - k, |i, j| hat[(ordering[i], ordering[k + j])]);
    Ok(HatDecomposition {
        hat,
        a_block,
        b_block,
        ordering,
        num_transient: k,
    })
}

/// Everything the analytic path needs about one `(mdp, pi, gamma)`.
pub(crate) struct ExpAnalysis {
    pub m: ExpMatrix,
    pub analysis: ChainAnalysis,
    pub hat: HatDecomposition,
    /// `(I - A)^{-1} B`, present when `rho(A) < 1 - eta`.
    pub entry: Option<DMatrix<f64>>,
}

impl ExpAnalysis {
    pub fn new(mdp: &Mdp, pi: &StationaryPolicy, gamma: f64) -> Result<Self> {
        let m = exp_matrix(mdp, pi, gamma)?;
        let chain = induced_chain(mdp, pi)?;
        let analysis = analyze_chain(&chain);
        let hat = hat_decompose(&m, &analysis)?;
        let rho = spectral_radius(&hat.a_block);
        let entry = if rho.below_one(SPECTRAL_MARGIN) {
            Some(solve_identity_minus(&hat.a_block, &hat.b_block).ok_or_else(|| {
                Error::Singular(format!(
                    "I - A is singular although rho(A) <= {}",
                    rho.upper
                ))
            })?)
        } else {
            None
        };
        Ok(ExpAnalysis {
            m,
            analysis,
            hat,
            entry,
        })
    }

    pub fn convex(&self) -> bool {
        self.m.iota > 0.0
    }

    /// Limit of `iota * gamma^{w_T}` on trajectories that stay inside a
    /// recurrent class of type `t`, relative to the wealth at entry.
    /// `None` for mixed classes, which have no structural answer.
    pub fn class_limit(&self, t: ClassType) -> Option<ExtReal> {
        let convex = self.convex();
        Some(match t {
            ClassType::Zero => ExtReal::Finite(self.m.iota),
            ClassType::Positive if convex => ExtReal::PlusInfinity,
            ClassType::Positive => ExtReal::ZERO,
            ClassType::Negative if convex => ExtReal::ZERO,
            ClassType::Negative => ExtReal::MinusInfinity,
            ClassType::Mixed => return None,
        })
    }

    /// Row of state `s` among the transient states, if transient.
    pub fn transient_row(&self, s: usize) -> Option<usize> {
        self.hat.ordering[..self.hat.num_transient]
            .iter()
            .position(|&t| t == s)
    }

    /// Columns of `B` belonging to recurrent class `c`.
    pub fn class_columns(&self, c: usize) -> impl Iterator<Item = usize> + '_ {
        let k = self.hat.num_transient;
        self.hat.ordering[k..]
            .iter()
            .enumerate()
            .filter(move |&(_, &s)| self.analysis.class_of[s] == Some(c))
            .map(|(j, _)| j)
    }

    /// Analytic value of state `s`, or `None` when the probe must decide.
    pub fn analytic_value(&self, s: usize) -> Option<ExtReal> {
        if let Some(c) = self.analysis.class_of[s] {
            return self.class_limit(self.analysis.class_types[c]);
        }
        let entry = self.entry.as_ref()?;
        let row = self.transient_row(s)?;
        let mut total = ExtReal::ZERO;
        for &c in &self.analysis.reach[s] {
            let weight: f64 = self.class_columns(c).map(|j| entry[(row, j)]).sum();
            let contribution = match self.class_limit(self.analysis.class_types[c])? {
                ExtReal::Finite(x) => ExtReal::Finite(x * weight),
                inf => inf,
            };
            total = total.checked_add(contribution)?;
        }
        Some(total)
    }
}

/// Infinite-horizon exponential-utility value of every state.
///
/// Recurrent starts follow their class type. Transient starts use the entry
/// weights `(I - A)^{-1} B` when `rho(A)` is certified below one; otherwise,
/// and for mixed classes, the horizon sequence is probed and the verdict is
/// labelled numeric.
pub fn exp_infinite_value(mdp: &Mdp, pi: &StationaryPolicy, gamma: f64) -> Result<Vec<Evaluated>> {
    let ea = ExpAnalysis::new(mdp, pi, gamma)?;
    let mut probed: Option<Vec<Vec<f64>>> = None;
    let cfg = ProbeConfig::default();
    (0..mdp.num_states())
        .map(|s| {
            if let Some(v) = ea.analytic_value(s) {
                return Ok(Evaluated::analytic(ValueOutcome::Exists(v)));
            }
            let seqs = probed.get_or_insert_with(|| exp_sequences(&ea.m, cfg.t_max));
            Ok(Evaluated::numeric(classify_sequence(&seqs[s], &cfg).outcome()))
        })
        .collect()
}
