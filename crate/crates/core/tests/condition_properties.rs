//! Implication chain between conditions, witness soundness and the class
//! structure promised when C5 holds.

mod common;

use proptest::prelude::*;
use riskmdp::chain::{analyze_chain, induced_chain, ClassType};
use riskmdp::conditions::{check_condition, ConditionId, ConditionReport, ConditionStatus};
use riskmdp::engine::{exp_infinite_value, extreme_total_reward, linear_infinite_value, Evaluated};
use riskmdp::policy::enumerate_sd_policies;
use riskmdp::utility::{ExpBounds, TailMode};
use riskmdp::{ExtReal, Mdp, Sign, UtilitySpec, ValueOutcome};

use common::random_mdp;

const GUARD: u128 = 1_000;

fn bounded_with_envelope() -> UtilitySpec {
    let bounds = ExpBounds {
        c: 1.0,
        d: 1.0,
        gamma_plus: 2.0,
        gamma_minus: 0.5,
    };
    UtilitySpec::piecewise(vec![(-3.0, -1.0), (3.0, 1.0)], TailMode::Constant, TailMode::Constant, Some(bounds))
        .unwrap()
}

fn holds(mdp: &Mdp, u: &UtilitySpec, id: ConditionId) -> bool {
    check_condition(mdp, u, id, GUARD).unwrap().status == ConditionStatus::Holds
}

/// Re-evaluates one labelled witness value with the engine it came from.
fn reevaluate(mdp: &Mdp, r: &ConditionReport, label: &str) -> Evaluated {
    let w = r.witness.as_ref().unwrap();
    let pi = w.policy.as_ref().unwrap();
    let part = |suffix: &str| match suffix {
        "+" => mdp.signed_part(Sign::Positive),
        "-" => mdp.signed_part(Sign::Negative),
        _ => mdp.clone(),
    };
    if let Some(rest) = label.strip_prefix("v_max") {
        let v = extreme_total_reward(&part(rest), pi).unwrap().v_max[w.state];
        return Evaluated::analytic(ValueOutcome::Exists(v));
    }
    if let Some(rest) = label.strip_prefix("v_min") {
        let v = extreme_total_reward(&part(rest), pi).unwrap().v_min[w.state];
        return Evaluated::analytic(ValueOutcome::Exists(v));
    }
    if let Some(rest) = label.strip_prefix("v_e") {
        let (suffix, gamma) = rest.split_once("(gamma=").unwrap();
        let gamma: f64 = gamma.trim_end_matches(')').parse().unwrap();
        return exp_infinite_value(&part(suffix), pi, gamma).unwrap()[w.state];
    }
    let suffix = label.strip_prefix('v').unwrap();
    linear_infinite_value(&part(suffix), pi).unwrap()[w.state]
}

fn assert_witness_sound(mdp: &Mdp, r: &ConditionReport) {
    let Some(w) = &r.witness else {
        assert_ne!(r.status, ConditionStatus::Violated, "{} violated without witness", r.id);
        return;
    };
    if w.policy.is_none() {
        // reward scan: the note names the offending reward
        assert!(w.note.is_some());
        return;
    }
    let finite_ce = |e: &Evaluated| match e.outcome.finite_value() {
        Some(x) if matches!(r.id, ConditionId::C10 | ConditionId::C12) => x.abs() >= 1e-8,
        Some(_) => true,
        None => false,
    };
    let mut infinite = 0;
    for v in &w.values {
        let again = reevaluate(mdp, r, &v.label);
        assert_eq!(again.outcome, v.value.outcome, "{} {}", r.id, v.label);
        if !finite_ce(&again) {
            infinite += 1;
        }
    }
    match r.id {
        // existential conditions: the witness is the least bad policy found
        ConditionId::C4 | ConditionId::C7 | ConditionId::C9 | ConditionId::C13 | ConditionId::C18 => {}
        // a conjunction fails on one side
        ConditionId::C14 => assert!(infinite >= 1, "C14 witness is finite"),
        id => assert_eq!(infinite, w.values.len(), "{id} witness has a finite value"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn implication_chain(seed in any::<u64>()) {
        let mdp = random_mdp(seed, 4, 3);
        let lin = UtilitySpec::linear();
        let env = bounded_with_envelope();
        let c16 = holds(&mdp, &lin, ConditionId::C16);
        let c15 = holds(&mdp, &env, ConditionId::C15);
        let c14 = holds(&mdp, &env, ConditionId::C14);
        let c5 = holds(&mdp, &lin, ConditionId::C5);
        let c1 = holds(&mdp, &lin, ConditionId::C1);
        let c3 = holds(&mdp, &lin, ConditionId::C3);
        let c17 = holds(&mdp, &lin, ConditionId::C17);
        let c18 = holds(&mdp, &lin, ConditionId::C18);
        prop_assert!(!c16 || c15, "C16 without C15");
        prop_assert!(!c15 || c5, "C15 without C5");
        prop_assert!(!c1 || c5);
        prop_assert!(!c3 || c5);
        prop_assert!(!c14 || c15);
        prop_assert!(!(c17 && c18) || c16);
    }

    #[test]
    fn violated_reports_have_sound_witnesses(seed in any::<u64>(), convex in any::<bool>()) {
        let mdp = random_mdp(seed, 4, 2);
        let lin = UtilitySpec::linear();
        let exp = UtilitySpec::exponential(if convex { 2.0 } else { 0.5 }).unwrap();
        let env = bounded_with_envelope();
        for id in ConditionId::ALL {
            let u = match id {
                ConditionId::C8 | ConditionId::C9 | ConditionId::C10
                | ConditionId::C11 | ConditionId::C12 | ConditionId::C13 => &exp,
                ConditionId::C14 | ConditionId::C15 => &env,
                _ => &lin,
            };
            let r = check_condition(&mdp, u, id, GUARD).unwrap();
            if id.policy_quantified() {
                prop_assert!(r.quantifier_note.as_deref().unwrap().contains("Π^SD"));
            }
            assert_witness_sound(&mdp, &r);
        }
    }

    #[test]
    fn c5_excludes_mixed_reachability(seed in any::<u64>()) {
        let mdp = random_mdp(seed, 4, 3);
        prop_assume!(holds(&mdp, &UtilitySpec::linear(), ConditionId::C5));
        for pi in enumerate_sd_policies(&mdp, GUARD).unwrap() {
            let analysis = analyze_chain(&induced_chain(&mdp, &pi).unwrap());
            prop_assert!(!analysis.class_types.contains(&ClassType::Mixed));
            for s in 0..mdp.num_states() {
                let types: Vec<ClassType> = analysis.reachable_types(s).collect();
                prop_assert!(
                    !(types.contains(&ClassType::Positive) && types.contains(&ClassType::Negative)),
                    "state {s} reaches both signs"
                );
            }
        }
    }

    #[test]
    fn c10_and_c12_share_data(seed in any::<u64>(), convex in any::<bool>()) {
        let mdp = random_mdp(seed, 4, 2);
        let u = UtilitySpec::exponential(if convex { 2.0 } else { 0.5 }).unwrap();
        let a = check_condition(&mdp, &u, ConditionId::C10, GUARD).unwrap();
        let b = check_condition(&mdp, &u, ConditionId::C12, GUARD).unwrap();
        prop_assert_eq!(a.status, b.status);
        prop_assert_eq!(a.witness, b.witness);
    }
}

#[test]
fn zero_sum_cycle_witness_is_infinite_on_both_sides() {
    let mdp = Mdp::builder()
        .transition("s1", "go", "s2", 1.0, 1.0)
        .transition("s2", "go", "s1", 1.0, -1.0)
        .build()
        .unwrap();
    let r = check_condition(&mdp, &UtilitySpec::linear(), ConditionId::C5, GUARD).unwrap();
    let w = r.witness.unwrap();
    let values: Vec<ValueOutcome> = w.values.iter().map(|v| v.value.outcome).collect();
    assert_eq!(
        values,
        vec![
            ValueOutcome::Exists(ExtReal::PlusInfinity),
            ValueOutcome::Exists(ExtReal::MinusInfinity)
        ]
    );
}
