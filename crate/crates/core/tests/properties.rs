use cprt_core::mp::{MpFloat, Precision};
use cprt_core::parser::parse_program;
use cprt_core::program::RandomWalkProgram;
use cprt_core::rational::{rat, Rational};
use cprt_core::reduction::{to_random_walk, RdwMap};
use cprt_core::runtime::{analyze_cp, solve_rw};
use cprt_core::termination::{bounds_rw, decide_rw, drift, VerdictKind};
use cprt_core::verify::{boundary_residual, check_closed_form, recurrence_residual, CheckOptions};
use num_traits::Zero;
use proptest::prelude::*;

const PAST: &[&str] = &[
    "race",
    "race_rdw",
    "mod_race",
    "direct",
    "direct_termination",
    "complex_roots",
    "multiplicity",
    "negative_binomial",
    "irrational",
    "ngo",
    "decrement",
];

fn source(name: &str) -> String {
    std::fs::read_to_string(format!("{}/../../programs/{name}.cp", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

#[test]
fn check_suite_passes_on_past_fixtures() {
    for name in PAST {
        let prog = parse_program(&source(name)).unwrap();
        let a = analyze_cp(&prog, Precision::new(50)).unwrap();
        assert_eq!(a.verdict.kind, VerdictKind::Past, "{name}");
        let s = a.solution.as_ref().unwrap();
        let report = check_closed_form(
            &a.random_walk,
            s.retained.total_multiplicity(),
            &s.closed_form,
            a.bounds.as_ref().unwrap(),
            &CheckOptions::default(),
        )
        .unwrap();
        for c in &report.checks {
            assert!(c.passed, "{name}: {} failed: {}", c.name, c.detail);
        }
    }
}

#[test]
fn perturbed_coefficient_fails_boundary_check() {
    for name in ["race", "mod_race", "direct"] {
        let prog = parse_program(&source(name)).unwrap();
        let a = analyze_cp(&prog, Precision::new(50)).unwrap();
        let s = a.solution.as_ref().unwrap();
        let bad = s.closed_form.perturbed(1e-3);
        let report = check_closed_form(
            &a.random_walk,
            s.retained.total_multiplicity(),
            &bad,
            a.bounds.as_ref().unwrap(),
            &CheckOptions {
                points: vec![1],
                depth: 8,
                ..CheckOptions::default()
            },
        )
        .unwrap();
        assert!(!report.passed, "{name}");
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        assert!(failed.contains(&"boundary_residual") || failed.contains(&"recurrence_residual"), "{name}: {failed:?}");
    }
}

#[test]
fn race_and_its_reduction_share_a_closed_form() {
    let race = parse_program(&source("race")).unwrap();
    let (rw, rdw) = to_random_walk(&race).unwrap();
    assert_eq!(rdw, RdwMap { a: vec![1, -1], b: -1 });
    let reduced = parse_program(&source("race_rdw")).unwrap();
    assert_eq!(to_random_walk(&reduced).unwrap().0, rw);
}

fn arb_past_walk() -> impl Strategy<Value = RandomWalkProgram> {
    (0usize..=3, 0usize..=2, prop::collection::vec(0u32..6, 7), 0u32..3)
        .prop_filter_map("not a PAST walk", |(k, m, weights, reset)| {
            let mut w: Vec<u32> = weights[..k + m + 1].to_vec();
            if k > 0 {
                w[0] = w[0].max(1);
            }
            if m > 0 {
                w[k + m] = w[k + m].max(1);
            }
            let total: u32 = w.iter().sum::<u32>() + reset;
            if total == 0 {
                return None;
            }
            let probs: Vec<Rational> = w.iter().map(|&v| rat(v as i64, total as i64)).collect();
            let direct = rat(reset as i64, total as i64);
            let rw = RandomWalkProgram::new(k, m, probs, direct, -1).ok()?;
            (decide_rw(&rw).kind == VerdictKind::Past).then_some(rw)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_past_walks_satisfy_recurrence(rw in arb_past_walk()) {
        let s = solve_rw(&rw, RdwMap::identity(), Precision::new(50)).unwrap();
        let tol = MpFloat::pow10(-25, Precision::new(50));
        prop_assert_eq!(s.retained.total_multiplicity(), rw.k());
        prop_assert!(recurrence_residual(&rw, &s.closed_form, 40) < tol);
        prop_assert!(boundary_residual(rw.k(), &s.closed_form) < tol);
    }

    #[test]
    fn bounds_bracket_random_walks(rw in arb_past_walk()) {
        let s = solve_rw(&rw, RdwMap::identity(), Precision::new(50)).unwrap();
        let b = bounds_rw(&rw).unwrap();
        let p = Precision::new(50);
        let tol = MpFloat::pow10(-25, p);
        for x in 1..=60i128 {
            let v = s.closed_form.evaluate(x);
            prop_assert!(&MpFloat::from_rational(&b.lower(x), p) - &v < tol);
            prop_assert!(&v - &MpFloat::from_rational(&b.upper(x), p) < tol);
        }
        if rw.direct_prob().is_zero() {
            prop_assert!(drift(&rw) < Rational::zero());
        }
    }
}
