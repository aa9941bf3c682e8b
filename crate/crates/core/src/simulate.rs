//! Seeded Monte Carlo estimates of finite-horizon expected utilities.
//!
//! Only finite horizons are sampled: a sampler cannot certify an infinite
//! or non-existent limit. Trajectory `i` draws from a ChaCha8 stream selected
//! by `(seed, i)`, so an estimate does not depend on the order in which
//! trajectories are generated.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chain::{analyze_chain, induced_chain, EdgeShare, InducedChain};
use crate::error::{Error, Result};
use crate::mdp::Mdp;
use crate::policy::StationaryPolicy;
use crate::utility::UtilitySpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n)`.
    pub stderr: f64,
    pub n: usize,
    pub horizon: usize,
    pub seed: u64,
}

impl SimEstimate {
    /// Whether `exact` lies within `k` standard errors of the mean.
    pub fn agrees_with(&self, exact: f64, k: f64) -> bool {
        (self.mean - exact).abs() <= k * self.stderr + 1e-12 * exact.abs().max(1.0)
    }
}

fn check_args(mdp: &Mdp, s: usize, horizon: usize, n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::semantic("samples", format!("at least 2 samples are needed, got {n}")));
    }
    if horizon < 1 {
        return Err(Error::semantic("horizon", "the horizon must be at least 1"));
    }
    if s >= mdp.num_states() {
        return Err(Error::semantic("start", format!("state index {s} out of range")));
    }
    Ok(())
}

fn stream(seed: u64, trajectory: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trajectory as u64);
    rng
}

fn step<'a>(edges: &'a [EdgeShare], rng: &mut ChaCha8Rng) -> &'a EdgeShare {
    let x: f64 = rng.gen();
    let mut acc = 0.0;
    for e in edges {
        acc += e.share;
        if x < acc {
            return e;
        }
    }
    // rounding left a sliver of mass past the last edge
    edges.last().expect("valid chain has successors")
}

/// Reward collected forever in `s` when every edge loops back with the same
/// reward.
fn absorbing_reward(edges: &[EdgeShare], s: usize) -> Option<f64> {
    let r = edges.first()?.reward;
    edges.iter().all(|e| e.to == s && e.reward == r).then_some(r)
}

fn total_reward(chain: &InducedChain, absorbing: &[Option<f64>], s: usize, horizon: usize, rng: &mut ChaCha8Rng) -> f64 {
    let mut w = 0.0;
    let mut state = s;
    for t in 0..horizon {
        if let Some(r) = absorbing[state] {
            return w + r * (horizon - t) as f64;
        }
        let e = step(&chain.edges[state], rng);
        w += e.reward;
        state = e.to;
    }
    w
}

/// Sum with a fixed binary reduction tree.
fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

fn estimate(samples: &[f64], horizon: usize, seed: u64) -> SimEstimate {
    let n = samples.len();
    // shifting by the first sample keeps constant samples exact
    let shift = samples[0];
    let deltas: Vec<f64> = samples.iter().map(|x| x - shift).collect();
    let mean = shift + pairwise_sum(&deltas) / n as f64;
    let squares: Vec<f64> = samples.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&squares) / (n - 1) as f64;
    SimEstimate {
        mean,
        stderr: (var / n as f64).sqrt(),
        n,
        horizon,
        seed,
    }
}

/// Estimates `E[U(w_T)]` from state `s` under `pi` with `n` rollouts.
pub fn sample_eu(
    mdp: &Mdp,
    pi: &StationaryPolicy,
    s: usize,
    u: &UtilitySpec,
    horizon: usize,
    n: usize,
    seed: u64,
) -> Result<SimEstimate> {
    check_args(mdp, s, horizon, n)?;
    let chain = induced_chain(mdp, pi)?;
    let absorbing: Vec<Option<f64>> = (0..chain.num_states())
        .map(|q| absorbing_reward(&chain.edges[q], q))
        .collect();
    let samples = (0..n)
        .map(|i| {
            let mut rng = stream(seed, i);
            u.evaluate(total_reward(&chain, &absorbing, s, horizon, &mut rng))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(estimate(&samples, horizon, seed))
}

/// Fraction of `n` rollouts from `s` that are still in a transient state of
/// the induced chain at each step `t = 0..=horizon`.
pub fn sample_transient_mass(
    mdp: &Mdp,
    pi: &StationaryPolicy,
    s: usize,
    horizon: usize,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_args(mdp, s, horizon, n)?;
    let chain = induced_chain(mdp, pi)?;
    let analysis = analyze_chain(&chain);
    let mut counts = vec![0usize; horizon + 1];
    for i in 0..n {
        let mut rng = stream(seed, i);
        let mut state = s;
        for count in counts.iter_mut() {
            // recurrent classes are closed, so the rollout can stop here
            if analysis.is_recurrent(state) {
                break;
            }
            *count += 1;
            state = step(&chain.edges[state], &mut rng).to;
        }
    }
    Ok(counts.iter().map(|&c| c as f64 / n as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{exp_finite_horizon, exp_matrix};
    use crate::mdp::fixtures;

    #[test]
    fn deterministic_chain_has_zero_stderr() {
        let m = Mdp::builder()
            .transition("a", "go", "b", 1.0, 3.0)
            .transition("b", "stay", "b", 1.0, 0.0)
            .build()
            .unwrap();
        let pi = StationaryPolicy::Deterministic(vec![0, 0]);
        let u = UtilitySpec::exponential(2.0).unwrap();
        let est = sample_eu(&m, &pi, 0, &u, 1, 100, 3).unwrap();
        assert!((est.mean - 8.0).abs() < 1e-12);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn same_seed_same_estimate() {
        let m = fixtures::fig3a();
        let pi = StationaryPolicy::Deterministic(vec![0, 0, 0]);
        let u = UtilitySpec::exponential(2.0).unwrap();
        let a = sample_eu(&m, &pi, 0, &u, 5, 1000, 11).unwrap();
        let b = sample_eu(&m, &pi, 0, &u, 5, 1000, 11).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
        let c = sample_eu(&m, &pi, 0, &u, 5, 1000, 12).unwrap();
        assert_ne!(a.mean, c.mean);
    }

    #[test]
    fn oscillating_model_at_two_steps() {
        let m = fixtures::fig3a();
        let pi = StationaryPolicy::Deterministic(vec![0, 0, 0]);
        let u = UtilitySpec::exponential(2.0).unwrap();
        let exact = exp_finite_horizon(&exp_matrix(&m, &pi, 2.0).unwrap(), 2).unwrap().values[0];
        assert_eq!(exact, 2.0);
        let est = sample_eu(&m, &pi, 0, &u, 2, 20_000, 7).unwrap();
        assert!(est.agrees_with(exact, 4.0), "{est:?}");
    }

    #[test]
    fn transient_mass_of_geometric_exit() {
        let m = fixtures::fig1d(0.5);
        let pi = StationaryPolicy::Deterministic(vec![0, 0]);
        let mass = sample_transient_mass(&m, &pi, 0, 10, 20_000, 1).unwrap();
        assert_eq!(mass[0], 1.0);
        for (t, f) in mass.iter().enumerate() {
            let exact = 0.5f64.powi(t as i32);
            let sigma = (exact * (1.0 - exact) / 20_000.0).sqrt();
            assert!((f - exact).abs() <= 4.0 * sigma + 1e-12, "t={t}: {f} vs {exact}");
        }
    }

    #[test]
    fn bad_arguments_rejected() {
        let m = fixtures::fig1d(0.5);
        let pi = StationaryPolicy::Deterministic(vec![0, 0]);
        let u = UtilitySpec::linear();
        assert!(sample_eu(&m, &pi, 0, &u, 1, 1, 0).is_err());
        assert!(sample_eu(&m, &pi, 0, &u, 0, 10, 0).is_err());
        assert!(sample_eu(&m, &pi, 5, &u, 1, 10, 0).is_err());
    }
}
