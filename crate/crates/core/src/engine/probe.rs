//! Numeric fallback: iterate the horizon sequence `v_{U,T}` and classify its
//! limit behaviour.

use std::collections::BTreeMap;

use crate::chain::induced_chain;
use crate::engine::exp::{exp_matrix, ExpMatrix};
use crate::engine::Evaluated;
use crate::error::{Error, Result};
use crate::extreal::{ExtReal, NonExistReason, ValueOutcome};
use crate::mdp::Mdp;
use crate::policy::StationaryPolicy;
use crate::utility::{UtilityForm, UtilitySpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeConfig {
    /// Largest horizon iterated.
    pub t_max: usize,
    pub eps: f64,
    /// Number of trailing values (per residue class) inspected.
    pub window: usize,
    pub max_period: usize,
    /// Cap on wealth atoms per step for utilities without a matrix path.
    pub atom_budget: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            t_max: 1000,
            eps: 1e-8,
            window: 50,
            max_period: 12,
            atom_budget: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProbeVerdict {
    Converged(f64),
    Diverged(ExtReal),
    /// Limits of the residue classes, sorted.
    Oscillating(Vec<f64>),
    Undetermined,
}

impl ProbeVerdict {
    pub fn outcome(&self) -> ValueOutcome {
        match self {
            ProbeVerdict::Converged(x) => ValueOutcome::finite(*x),
            ProbeVerdict::Diverged(v) => ValueOutcome::Exists(*v),
            ProbeVerdict::Oscillating(_) => ValueOutcome::NonExistent(NonExistReason::Oscillation),
            ProbeVerdict::Undetermined => {
                ValueOutcome::NonExistent(NonExistReason::UndeterminedNumeric)
            }
        }
    }
}

/// Classifies `xs[i] = v_{i+1}`.
///
/// Converged when every residue class modulo some period `p <= max_period`
/// has its last `window` values within `eps` of their mean and all those means
/// agree; oscillating when they converge to means further apart than
/// `10 eps`. Diverged when the sequence reaches an infinity, when for some
/// period the last `window` lag-`p` increments share a strict sign without
/// shrinking, or when it runs monotonically beyond `1/eps`.
pub fn classify_sequence(xs: &[f64], cfg: &ProbeConfig) -> ProbeVerdict {
    if let Some(&bad) = xs.iter().find(|x| !x.is_finite()) {
        return match ExtReal::from_f64(bad) {
            Some(v) => ProbeVerdict::Diverged(v),
            None => ProbeVerdict::Undetermined,
        };
    }
    let n = xs.len();
    let k = cfg.window.max(2);
    for p in 1..=cfg.max_period {
        if n < k * p {
            break;
        }
        let mut means = Vec::with_capacity(p);
        let mut settled = true;
        for r in 0..p {
            let tail: Vec<f64> = (0..k).map(|j| xs[n - 1 - r - j * p]).collect();
            let mean = tail.iter().sum::<f64>() / k as f64;
            if tail.iter().any(|x| (x - mean).abs() > cfg.eps) {
                settled = false;
                break;
            }
            means.push(mean);
        }
        if !settled {
            continue;
        }
        let lo = means.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo > 10.0 * cfg.eps {
            means.sort_by(f64::total_cmp);
            means.dedup_by(|a, b| (*a - *b).abs() <= 10.0 * cfg.eps);
            return ProbeVerdict::Oscillating(means);
        }
        let limit = means.iter().sum::<f64>() / p as f64;
        // below the probe's resolution a limit is reported as exactly zero
        return ProbeVerdict::Converged(if limit.abs() < 1e-3 * cfg.eps { 0.0 } else { limit });
    }
    for p in 1..=cfg.max_period {
        if n < k + p {
            break;
        }
        let incs: Vec<f64> = (0..k).rev().map(|j| xs[n - 1 - j] - xs[n - 1 - j - p]).collect();
        let tiny = 10.0 * cfg.eps;
        let up = incs.iter().all(|&d| d > tiny);
        let down = incs.iter().all(|&d| d < -tiny);
        let (first, last) = (incs[0].abs(), incs[k - 1].abs());
        if (up || down) && last >= first * (1.0 - 1e-3) {
            return ProbeVerdict::Diverged(if up {
                ExtReal::PlusInfinity
            } else {
                ExtReal::MinusInfinity
            });
        }
    }
    if n >= 2 {
        let last = xs[n - 1];
        let tail = &xs[n.saturating_sub(k)..];
        let monotone_up = tail.windows(2).all(|w| w[1] >= w[0]);
        let monotone_down = tail.windows(2).all(|w| w[1] <= w[0]);
        if last > 1.0 / cfg.eps && monotone_up {
            return ProbeVerdict::Diverged(ExtReal::PlusInfinity);
        }
        if last < -1.0 / cfg.eps && monotone_down {
            return ProbeVerdict::Diverged(ExtReal::MinusInfinity);
        }
    }
    ProbeVerdict::Undetermined
}

/// `seqs[s][T - 1] = v_{e,T}(s)` for `T = 1..=t_max`. Overflowing entries
/// become infinities of the matching sign instead of failing.
pub(crate) fn exp_sequences(m: &ExpMatrix, t_max: usize) -> Vec<Vec<f64>> {
    let rows = m.sparse_rows();
    let n = m.num_states();
    let mut seqs = vec![Vec::with_capacity(t_max); n];
    let mut u = vec![1.0; n];
    for _ in 0..t_max {
        u = m.apply(&rows, &u);
        for s in 0..n {
            seqs[s].push(m.iota * u[s]);
        }
    }
    seqs
}

/// `E[w_T]` for `T = 1..=t_max`, via `m_T = rbar + P m_{T-1}`.
pub(crate) fn linear_sequences(mdp: &Mdp, pi: &StationaryPolicy, t_max: usize) -> Result<Vec<Vec<f64>>> {
    let chain = induced_chain(mdp, pi)?;
    let rbar = chain.expected_rewards();
    let n = mdp.num_states();
    let mut seqs = vec![Vec::with_capacity(t_max); n];
    let mut m = vec![0.0; n];
    for _ in 0..t_max {
        m = (0..n)
            .map(|s| {
                rbar[s]
                    + chain.edges[s]
                        .iter()
                        .map(|e| e.share * m[e.to])
                        .sum::<f64>()
            })
            .collect();
        for s in 0..n {
            seqs[s].push(m[s]);
        }
    }
    Ok(seqs)
}

/// One horizon of the wealth-distribution recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct WealthStep {
    /// `E[U(w_T)]`.
    pub total: f64,
    /// `E[U(w_T); s_T transient]`.
    pub transient: f64,
    /// `E[U(w_tau); tau <= T]` where `tau` is the first recurrent visit.
    pub entered: f64,
}

// ordered so that summation order, and hence every bit of the result, is fixed
type Atoms = BTreeMap<i64, (f64, f64)>;

fn wealth_key(w: f64) -> i64 {
    (w * 1e9).round() as i64
}

fn add_atom(atoms: &mut Atoms, w: f64, p: f64) {
    atoms
        .entry(wealth_key(w))
        .and_modify(|a| a.1 += p)
        .or_insert((w, p));
}

/// Propagates the joint distribution of state and accumulated wealth from
/// `start` for `t_max` steps. `transient` marks states whose mass counts as
/// not yet entered; pass all-`false` when only totals are needed.
pub(crate) fn wealth_steps(
    mdp: &Mdp,
    pi: &StationaryPolicy,
    u: &UtilitySpec,
    start: usize,
    transient: &[bool],
    cfg: &ProbeConfig,
) -> Result<Vec<WealthStep>> {
    let chain = induced_chain(mdp, pi)?;
    let n = mdp.num_states();
    let mut dist: Vec<Atoms> = vec![Atoms::new(); n];
    add_atom(&mut dist[start], 0.0, 1.0);
    let mut entered = if transient[start] { 0.0 } else { u.evaluate(0.0)? };
    let mut out = Vec::with_capacity(cfg.t_max);
    for _ in 0..cfg.t_max {
        let mut next: Vec<Atoms> = vec![Atoms::new(); n];
        for s in 0..n {
            for &(w, p) in dist[s].values() {
                for e in &chain.edges[s] {
                    let (w2, p2) = (w + e.reward, p * e.share);
                    if p2 == 0.0 {
                        continue;
                    }
                    if transient[s] && !transient[e.to] {
                        entered += p2 * u.evaluate(w2)?;
                    }
                    add_atom(&mut next[e.to], w2, p2);
                }
            }
        }
        let atoms: usize = next.iter().map(|a| a.len()).sum();
        if atoms > cfg.atom_budget {
            return Err(Error::BudgetExceeded {
                needed: atoms as f64,
                budget: cfg.atom_budget as u64,
            });
        }
        dist = next;
        let (mut total, mut tr) = (0.0, 0.0);
        for s in 0..n {
            let part: f64 = dist[s]
                .values()
                .map(|&(w, p)| u.evaluate(w).map(|x| p * x))
                .sum::<Result<f64>>()?;
            total += part;
            if transient[s] {
                tr += part;
            }
        }
        out.push(WealthStep {
            total,
            transient: tr,
            entered,
        });
    }
    Ok(out)
}

/// `seqs[s][T - 1] = v_{U,T}(s)` for any utility form.
pub fn horizon_sequences(
    mdp: &Mdp,
    pi: &StationaryPolicy,
    u: &UtilitySpec,
    cfg: &ProbeConfig,
) -> Result<Vec<Vec<f64>>> {
    match u.form {
        UtilityForm::Exponential { gamma } => Ok(exp_sequences(&exp_matrix(mdp, pi, gamma)?, cfg.t_max)),
        UtilityForm::Linear => linear_sequences(mdp, pi, cfg.t_max),
        UtilityForm::PiecewiseLinear { .. } => {
            let none = vec![false; mdp.num_states()];
            (0..mdp.num_states())
                .map(|s| {
                    wealth_steps(mdp, pi, u, s, &none, cfg)
                        .map(|steps| steps.iter().map(|st| st.total).collect())
                })
                .collect()
        }
    }
}

/// Probe verdict for every state, always labelled numeric.
pub fn limit_probe(
    mdp: &Mdp,
    pi: &StationaryPolicy,
    u: &UtilitySpec,
    cfg: &ProbeConfig,
) -> Result<Vec<Evaluated>> {
    Ok(horizon_sequences(mdp, pi, u, cfg)?
        .iter()
        .map(|seq| Evaluated::numeric(classify_sequence(seq, cfg).outcome()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::fixtures;

    fn cfg() -> ProbeConfig {
        ProbeConfig::default()
    }

    #[test]
    fn classifies_basic_shapes() {
        let c = cfg();
        let conv: Vec<f64> = (1..=1000).map(|t| 3.0 + 0.5f64.powi(t)).collect();
        assert_eq!(classify_sequence(&conv, &c), ProbeVerdict::Converged(3.0));
        let alt: Vec<f64> = (1..=1000).map(|t| (t % 2) as f64).collect();
        assert_eq!(classify_sequence(&alt, &c), ProbeVerdict::Oscillating(vec![0.0, 1.0]));
        let lin: Vec<f64> = (1..=1000).map(|t| -0.25 * t as f64).collect();
        assert_eq!(classify_sequence(&lin, &c), ProbeVerdict::Diverged(ExtReal::MinusInfinity));
        let stair: Vec<f64> = (1..=1000).map(|t| (t / 3) as f64).collect();
        assert_eq!(classify_sequence(&stair, &c), ProbeVerdict::Diverged(ExtReal::PlusInfinity));
        let inf = vec![1.0, 2.0, f64::INFINITY];
        assert_eq!(classify_sequence(&inf, &c), ProbeVerdict::Diverged(ExtReal::PlusInfinity));
        let slow: Vec<f64> = (1..=1000).map(|t| 1.0 / t as f64).collect();
        assert_eq!(classify_sequence(&slow, &c), ProbeVerdict::Undetermined);
    }

    #[test]
    fn period_three_oscillation() {
        let xs: Vec<f64> = (1..=1000).map(|t| [0.0, 1.0, 5.0][t % 3]).collect();
        assert_eq!(classify_sequence(&xs, &cfg()), ProbeVerdict::Oscillating(vec![0.0, 1.0, 5.0]));
    }

    #[test]
    fn oscillating_model_accumulation_points() {
        let m = fixtures::fig3a();
        let pi = StationaryPolicy::Deterministic(vec![0, 0, 0]);
        let u = UtilitySpec::exponential(2.0).unwrap();
        let seqs = horizon_sequences(&m, &pi, &u, &cfg()).unwrap();
        match classify_sequence(&seqs[0], &cfg()) {
            ProbeVerdict::Oscillating(pts) => {
                assert_eq!(pts.len(), 2);
                assert!((pts[0] - 7.0 / 3.0).abs() < 1e-9);
                assert!((pts[1] - 8.0 / 3.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(classify_sequence(&seqs[2], &cfg()), ProbeVerdict::Converged(0.0));
    }

    #[test]
    fn linear_cycle_oscillates() {
        let m = fixtures::fig1b();
        let pi = StationaryPolicy::Deterministic(vec![0, 0]);
        let v = limit_probe(&m, &pi, &UtilitySpec::linear(), &cfg()).unwrap();
        assert_eq!(v[0].outcome, ValueOutcome::NonExistent(NonExistReason::Oscillation));
        assert!(v[0].numeric);
    }

    #[test]
    fn piecewise_matches_enumeration() {
        let m = fixtures::fig3a();
        let pi = StationaryPolicy::Deterministic(vec![0, 0, 0]);
        let u = UtilitySpec::piecewise(
            vec![(-3.0, -2.0), (0.0, 0.0), (2.0, 1.0)],
            crate::utility::TailMode::Constant,
            crate::utility::TailMode::Constant,
            None,
        )
        .unwrap();
        let small = ProbeConfig { t_max: 6, ..cfg() };
        let seqs = horizon_sequences(&m, &pi, &u, &small).unwrap();
        for t in 1..=6 {
            let e = crate::engine::enumerate_eu(&m, &pi, &u, t, 1 << 30).unwrap();
            for s in 0..3 {
                assert!((seqs[s][t - 1] - e.values[s]).abs() < 1e-12);
            }
        }
    }
}
