//! Closed forms of the published case studies against independently derived
//! values.

use cprt_core::mp::{MpFloat, Precision};
use cprt_core::parser::parse_program;
use cprt_core::rational::{int, rat, Rational};
use cprt_core::runtime::{analyze_cp, Analysis, ClosedForm, Particular, RealTerm};

fn load(name: &str) -> Analysis {
    let path = format!("{}/../../programs/{name}.cp", env!("CARGO_MANIFEST_DIR"));
    let src = std::fs::read_to_string(&path).unwrap();
    analyze_cp(&parse_program(&src).unwrap(), Precision::new(50)).unwrap()
}

fn prec() -> Precision {
    Precision::new(50)
}

fn mp(s: &str) -> MpFloat {
    MpFloat::parse_decimal(s, prec()).unwrap()
}

fn assert_close(actual: &MpFloat, expected: &MpFloat, tol: &MpFloat, what: &str) {
    let err = (actual - expected).abs();
    assert!(
        &err < tol,
        "{what}: got {}, expected {}, error {}",
        actual.to_sci_string(25),
        expected.to_sci_string(25),
        err.to_sci_string(3)
    );
}

fn real_root_coeffs(cf: &ClosedForm) -> Vec<(f64, u32, MpFloat)> {
    cf.real_terms
        .iter()
        .filter_map(|t| match t {
            RealTerm::RealRoot { lambda, power, coeff } => Some((lambda.to_f64(), *power, coeff.clone())),
            _ => None,
        })
        .collect()
}

#[test]
fn mod_race_coefficients() {
    let a = load("mod_race");
    let cf = a.closed_form().unwrap();
    assert_eq!(cf.particular, Particular::Linear(rat(22, 3)));
    let tol = MpFloat::pow10(-20, prec());
    for (lambda, power, coeff) in real_root_coeffs(cf) {
        assert_eq!(power, 0);
        let expected = if lambda == 1.0 { rat(22, 9) } else { rat(-22, 9) };
        assert_close(&coeff, &MpFloat::from_rational(&expected, prec()), &tol, "a_j");
    }
    let expect = [(1, "11"), (2, "16.5"), (5, "39.1875")];
    for (x, v) in expect {
        assert_close(&cf.evaluate(x), &mp(v), &tol, "rt");
    }
}

#[test]
fn race_matches_independent_solution() {
    let a = load("race");
    let cf = a.closed_form().unwrap();
    assert_eq!(cf.particular, Particular::Linear(rat(2, 3)));
    let tol = MpFloat::pow10(-12, prec());
    assert_close(&cf.evaluate_at(&[1000, 0]), &mp("668.91889586546085739"), &tol, "rt(1000,0)");
    assert_close(&cf.evaluate(1), &mp("2.97303636998264"), &tol, "rt(1)");
    assert_close(&cf.evaluate(5), &mp("4.87186281274317"), &tol, "rt(5)");
    assert_close(&cf.evaluate(25), &mp("18.2528715812192"), &tol, "rt(25)");

    let pairs: Vec<[f64; 4]> = cf
        .real_terms
        .iter()
        .filter_map(|t| match t {
            RealTerm::ConjugatePair { modulus, angle, b, b_prime, power } => {
                assert_eq!(*power, 0);
                Some([modulus.to_f64(), angle.to_f64(), b.to_f64(), b_prime.to_f64()])
            }
            _ => None,
        })
        .collect();
    let expected = [
        [0.651231, 2.81601, -0.346551, 0.0464371],
        [0.664347, 2.16343, -0.356593, 0.149982],
        [0.69454, 1.5054, -0.386659, 0.298351],
        [0.755567, 0.830968, -0.49576, 0.61937],
    ];
    assert_eq!(pairs.len(), 4);
    for (got, want) in pairs.iter().zip(&expected) {
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-5, "{got:?} vs {want:?}");
        }
    }
    let one = real_root_coeffs(cf);
    assert_eq!(one.len(), 1);
    assert!((one[0].2.to_f64() - 1.58556).abs() < 1e-5);
}

#[test]
fn reduced_race_agrees_with_race() {
    let a = load("race").closed_form().unwrap().clone();
    let b = load("race_rdw").closed_form().unwrap().clone();
    let tol = MpFloat::pow10(-30, prec());
    for x in [1, 2, 7, 50, 1001] {
        assert_close(&a.evaluate(x), &b.evaluate(x), &tol, "race vs race_rdw");
    }
}

#[test]
fn direct_termination_example() {
    let a = load("direct_termination");
    let cf = a.closed_form().unwrap();
    assert_eq!(cf.particular, Particular::Constant(int(8)));
    let terms = real_root_coeffs(cf);
    assert_eq!(terms.len(), 1);
    let tol = MpFloat::pow10(-10, prec());
    let root = &MpFloat::from_i64(2, prec()) - &MpFloat::from_i64(2, prec()).sqrt();
    match &cf.real_terms[0] {
        RealTerm::RealRoot { lambda, coeff, .. } => {
            assert_close(lambda, &root, &tol, "root");
            assert_close(coeff, &MpFloat::from_i64(-8, prec()), &tol, "a_1");
        }
        _ => unreachable!(),
    }
    assert_close(&cf.evaluate(1), &mp("3.31370849898"), &tol, "rt(1)");
    assert_close(&cf.evaluate(25), &mp("7.9999875097"), &tol, "rt(25)");
}

#[test]
fn multiplicity_example() {
    let a = load("multiplicity");
    let cf = a.closed_form().unwrap();
    assert_eq!(cf.particular, Particular::Linear(rat(175, 12)));
    let tol = MpFloat::pow10(-25, prec());
    for x in 1..=30i64 {
        let fifth = rat(-1, 5).pow(x as i32);
        let exact: Rational = rat(175, 12) * int(x) + rat(175, 36)
            - rat(175, 36) * &fifth
            - rat(35, 12) * int(x) * &fifth;
        assert_close(&cf.evaluate(x as i128), &MpFloat::from_rational(&exact, prec()), &tol, "rt");
    }
    let powers: Vec<u32> = real_root_coeffs(cf).iter().map(|t| t.1).collect();
    assert!(powers.contains(&1));
}

#[test]
fn complex_roots_example() {
    let a = load("complex_roots");
    let cf = a.closed_form().unwrap();
    assert_eq!(cf.particular, Particular::Linear(rat(30, 13)));
    let p = prec();
    let w = MpFloat::from_rational(&rat(2, 5), p);
    let theta = &(&MpFloat::pi(p) * &MpFloat::from_i64(2, p)) / &MpFloat::from_i64(3, p);
    let c = MpFloat::from_rational(&rat(180, 169), p);
    let s = &MpFloat::from_rational(&rat(4, 169), p) * &MpFloat::from_i64(3, p).sqrt();
    let tol = MpFloat::pow10(-8, p);
    for x in 1..=20i64 {
        let xf = MpFloat::from_i64(x, p);
        let phase = &theta * &xf;
        let published = &MpFloat::from_rational(&rat(30, 13), p) * &xf + &c
            - &(&c * &w.powi(x)) * &phase.cos()
            + &(&s * &w.powi(x)) * &phase.sin();
        assert_close(&cf.evaluate(x as i128), &published, &tol, "rt");
    }
    assert_close(&cf.evaluate(2), &mp("5.76"), &tol, "rt(2)");
}

#[test]
fn irrational_example() {
    let a = load("irrational");
    let cf = a.closed_form().unwrap();
    let p = prec();
    let expected = &MpFloat::one(p) + &MpFloat::from_i64(5, p).sqrt();
    assert_close(&cf.evaluate(1), &expected, &MpFloat::pow10(-10, p), "rt(1)");
    assert_close(&cf.evaluate(25), &mp("50.7639365762"), &MpFloat::pow10(-9, p), "rt(25)");
}

#[test]
fn linear_examples_are_exactly_linear() {
    for name in ["negative_binomial", "ngo"] {
        let a = load(name);
        let cf = a.closed_form().unwrap();
        let tol = MpFloat::pow10(-30, prec());
        for x in 1..=40 {
            assert_close(&cf.evaluate(x), &MpFloat::from_i64(2 * x as i64, prec()), &tol, name);
        }
    }
    let dec = load("decrement");
    assert_close(
        &dec.closed_form().unwrap().evaluate(5),
        &MpFloat::from_i64(5, prec()),
        &MpFloat::pow10(-30, prec()),
        "decrement",
    );
}
