//! Random small MDPs for property tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use riskmdp::{Mdp, StationaryPolicy};

/// Model with at most `max_states` states and `max_actions` actions per
/// state, 1 to 3 successors per action and integer rewards in `-2..=2`.
pub fn random_mdp(seed: u64, max_states: usize, max_actions: usize) -> Mdp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_states);
    let names: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let mut b = Mdp::builder().states(names.iter().map(String::as_str));
    for s in 0..n {
        let actions = rng.gen_range(1..=max_actions);
        for a in 0..actions {
            let k = rng.gen_range(1..=3.min(n));
            let mut succ: Vec<usize> = (0..n).collect();
            for i in 0..k {
                let j = rng.gen_range(i..n);
                succ.swap(i, j);
            }
            let weights: Vec<u32> = (0..k).map(|_| rng.gen_range(1..=4)).collect();
            let total: u32 = weights.iter().sum();
            for (i, &t) in succ[..k].iter().enumerate() {
                let reward = rng.gen_range(-2..=2) as f64;
                b = b.transition(
                    &names[s],
                    &format!("a{a}"),
                    &names[t],
                    weights[i] as f64 / total as f64,
                    reward,
                );
            }
        }
    }
    b.build().expect("generated model is valid")
}

pub fn random_sd_policy(mdp: &Mdp, seed: u64) -> StationaryPolicy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    StationaryPolicy::Deterministic(
        (0..mdp.num_states())
            .map(|s| rng.gen_range(0..mdp.choices(s).len()))
            .collect(),
    )
}

/// Loads a model from the workspace `fixtures/` directory.
pub fn fixture(name: &str) -> Mdp {
    let path = format!("{}/../../fixtures/{name}.json", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    riskmdp::mdp::parse_mdp(&text).unwrap()
}
