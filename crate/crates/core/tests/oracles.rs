use cprt_core::mp::Precision;
use cprt_core::oracles::distribution::{compare_programs, distribution_match, DEFAULT_ALPHA};
use cprt_core::oracles::simulate::{simulate, termination_frequencies, DEFAULT_STEP_CAP};
use cprt_core::oracles::kleene::{kleene_converge, KleeneLimits};
use cprt_core::parser::parse_program;
use cprt_core::program::CpProgram;
use cprt_core::reduction::to_random_walk;
use cprt_core::runtime::analyze_cp;

fn load(name: &str) -> CpProgram {
    let src = std::fs::read_to_string(format!("{}/../../programs/{name}.cp", env!("CARGO_MANIFEST_DIR"))).unwrap();
    parse_program(&src).unwrap()
}

#[test]
fn simulation_brackets_closed_forms() {
    for name in ["race", "mod_race", "complex_roots", "direct_termination", "irrational"] {
        let prog = load(name);
        let a = analyze_cp(&prog, Precision::new(50)).unwrap();
        let cf = a.closed_form().unwrap();
        for x in [1i64, 5, 25] {
            let rt = cf.evaluate(x as i128).to_f64();
            let rw = a.random_walk.to_cp();
            let e = simulate(&rw, &[x], 20_000, DEFAULT_STEP_CAP, 11);
            assert_eq!(e.censored, 0);
            assert!(e.covers(rt, 4.0), "{name} at {x}: rt {rt}, {e:?}");
        }
    }
}

#[test]
fn direct_race_runtime_is_ten() {
    let e = simulate(&load("direct"), &[5, 1], 200_000, DEFAULT_STEP_CAP, 42);
    assert!(e.covers(10.0, 3.0), "{e:?}");
}

#[test]
fn kleene_agrees_with_closed_forms_under_a_tight_stopping_rule() {
    for name in ["race", "mod_race", "multiplicity", "complex_roots"] {
        let a = analyze_cp(&load(name), Precision::new(50)).unwrap();
        let cf = a.closed_form().unwrap();
        for x in [1, 5, 25] {
            let c = kleene_converge(&a.random_walk, x, 1e-10, usize::MAX, KleeneLimits::default()).unwrap();
            let rt = cf.evaluate(x as i128).to_f64();
            assert!(c.value <= rt + 1e-9);
            assert!((c.value - rt).abs() < 1e-6, "{name} at {x}: {} vs {rt}", c.value);
        }
    }
}

#[test]
fn race_termination_time_survives_reduction() {
    let r = distribution_match(&load("race"), &[11, 1], 50_000, DEFAULT_STEP_CAP, 2024).unwrap();
    assert!(r.passed, "{r:?}");
}

#[test]
fn perturbed_mod_race_is_rejected() {
    let p = load("mod_race");
    let q = parse_program(
        "vars x\nwhile x > 0 { x += (1) [49/110]; x += (0) [21/110]; x += (-1) [1/22]; x += (-2) [7/22]; }",
    )
    .unwrap();
    let rejected = (0..20)
        .filter(|&run| !compare_programs(&p, &[5], &q, &[5], 20_000, DEFAULT_STEP_CAP, 1000 + 2 * run, DEFAULT_ALPHA).passed)
        .count();
    assert_eq!(rejected, 20);
}

#[test]
fn symmetric_walk_terminates_ever_more_often() {
    let prog = load("symmetric");
    let caps = [10, 100, 1_000, 10_000];
    let f = termination_frequencies(&prog, &[1], 4000, &caps, 5);
    assert!(f.windows(2).all(|w| w[0] <= w[1]), "{f:?}");
    assert!(f[3] > 0.98, "{f:?}");
}

#[test]
fn positive_drift_is_censored() {
    let prog = load("race_positive_drift");
    let e = simulate(&prog, &[3], 2000, 10_000, 1);
    assert!(e.censored > 0);
    let rw = to_random_walk(&prog).unwrap().0;
    assert!(kleene_converge(&rw, 3, 1e-6, 5_000, KleeneLimits::default()).map(|c| !c.converged).unwrap());
}
