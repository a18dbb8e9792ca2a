//! Invariant suite run against a computed closed form.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::ResourceError;
use crate::mp::{MpFloat, Precision};
use crate::oracles::kleene::{kleene_converge, kleene_iterate, KleeneLimits};
use crate::program::RandomWalkProgram;
use crate::runtime::ClosedForm;
use crate::termination::RuntimeBounds;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Largest observed violation measure, when the check has one.
    pub max_error: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOptions {
    /// Reduced states at which the Kleene comparisons run.
    pub points: Vec<i64>,
    /// Largest Kleene depth for the lower-bound comparison.
    pub depth: usize,
    /// The recurrence is checked on `1..=recurrence_upto`.
    pub recurrence_upto: i64,
    /// The bounds envelope is checked on `1..=envelope_upto`.
    pub envelope_upto: i64,
    /// Residual threshold is `10^-residual_digits`.
    pub residual_digits: i64,
    /// Kleene iteration stops once its increment is below this.
    pub kleene_increment: f64,
    pub kleene_tolerance: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            points: vec![1, 5, 25],
            depth: 256,
            recurrence_upto: 100,
            envelope_upto: 200,
            residual_digits: 25,
            kleene_increment: 1e-10,
            kleene_tolerance: 1e-4,
        }
    }
}

fn result(name: &str, passed: bool, max_error: Option<f64>, detail: String) -> CheckResult {
    CheckResult {
        name: name.into(),
        passed,
        max_error,
        detail,
    }
}

/// Values of `rt` on `lo..=hi`, 0 where the guard fails.
struct Table {
    lo: i64,
    values: Vec<MpFloat>,
}

impl Table {
    fn new(cf: &ClosedForm, lo: i64, hi: i64) -> Self {
        Table {
            lo,
            values: (lo..=hi).map(|x| cf.evaluate(x as i128)).collect(),
        }
    }

    fn at(&self, x: i64) -> &MpFloat {
        &self.values[(x - self.lo) as usize]
    }
}

/// `max |rt(x) - 1 - sum_j p_j rt(x + j)|` over `x = 1..=upto`. The reset
/// term vanishes because the reset target violates the guard.
pub fn recurrence_residual(rw: &RandomWalkProgram, cf: &ClosedForm, upto: i64) -> MpFloat {
    let prec = cf.precision;
    let (k, m) = (rw.k() as i64, rw.m() as i64);
    let table = Table::new(cf, 1 - k, upto + m);
    let probs: Vec<(i64, MpFloat)> = rw
        .offsets()
        .filter(|(_, p)| !p.is_zero())
        .map(|(j, p)| (j, MpFloat::from_rational(p, prec)))
        .collect();
    let mut worst = MpFloat::zero(prec);
    for x in 1..=upto {
        let mut rhs = MpFloat::one(prec);
        for (j, p) in &probs {
            rhs = &rhs + &(p * table.at(x + j));
        }
        worst = worst.max(&(table.at(x) - &rhs).abs());
    }
    worst
}

/// `max |formula(x)|` over `x = -k+1..=0`, where the formula must meet the
/// boundary values.
pub fn boundary_residual(k: usize, cf: &ClosedForm) -> MpFloat {
    let mut worst = MpFloat::zero(cf.precision);
    for x in -(k as i64) + 1..=0 {
        worst = worst.max(&cf.formula_at(x as i128).abs());
    }
    worst
}

fn sci(v: &MpFloat) -> String {
    v.to_sci_string(3)
}

/// Runs the full suite. `retained` is the number of roots (with
/// multiplicity) kept from the unit disc.
pub fn check_closed_form(
    rw: &RandomWalkProgram,
    retained: usize,
    cf: &ClosedForm,
    bounds: &RuntimeBounds,
    opts: &CheckOptions,
) -> Result<CheckReport, ResourceError> {
    let prec: Precision = cf.precision;
    let tol = MpFloat::pow10(-opts.residual_digits, prec);
    let mut checks = Vec::new();

    checks.push(result(
        "root_count",
        retained == rw.k(),
        None,
        format!("{retained} retained roots, k = {}", rw.k()),
    ));

    let r = recurrence_residual(rw, cf, opts.recurrence_upto);
    checks.push(result(
        "recurrence_residual",
        r < tol,
        Some(r.to_f64()),
        format!("max residual {} on x = 1..{}", sci(&r), opts.recurrence_upto),
    ));

    let b = boundary_residual(rw.k(), cf);
    checks.push(result(
        "boundary_residual",
        b < tol,
        Some(b.to_f64()),
        format!("max |rt(x)| {} on x = {}..0", sci(&b), 1 - rw.k() as i64),
    ));

    let direct = !rw.direct_prob().is_zero();
    let mut envelope = MpFloat::zero(prec);
    let mut addon = MpFloat::zero(prec);
    for x in 1..=opts.envelope_upto {
        let v = cf.evaluate(x as i128);
        let lo = MpFloat::from_rational(&bounds.lower(x as i128), prec);
        let hi = MpFloat::from_rational(&bounds.upper(x as i128), prec);
        envelope = envelope.max(&(&lo - &v)).max(&(&v - &hi));
        // rt(x) - C(x) must be <= 0 with direct termination and >= 0 without.
        let diff = &v - &cf.particular.at(x as i128, prec);
        addon = addon.max(&if direct { diff } else { -diff });
    }
    checks.push(result(
        "bounds_envelope",
        envelope < tol,
        Some(envelope.to_f64().max(0.0)),
        format!("{bounds} on x = 1..{}, worst excess {}", opts.envelope_upto, sci(&envelope)),
    ));
    checks.push(result(
        "add_on_sign",
        addon < tol,
        Some(addon.to_f64().max(0.0)),
        format!(
            "rt(x) - C(x) {} 0 on x = 1..{}, worst excess {}",
            if direct { "<=" } else { ">=" },
            opts.envelope_upto,
            sci(&addon)
        ),
    ));

    let mut sandwich = 0.0f64;
    let mut agreement = 0.0f64;
    let mut notes = Vec::new();
    let mut depths = vec![1usize];
    while *depths.last().unwrap() < opts.depth {
        depths.push((depths.last().unwrap() * 2).min(opts.depth));
    }
    for &x in &opts.points {
        let rt = cf.evaluate(x as i128).to_f64();
        for &n in &depths {
            let v = kleene_iterate(rw, x, n)?.value;
            sandwich = sandwich.max(v - rt);
        }
        let c = kleene_converge(rw, x, opts.kleene_increment, usize::MAX, KleeneLimits::default())?;
        agreement = agreement.max((c.value - rt).abs());
        notes.push(format!("x = {x}: n = {}, |rt - L^n 0| = {:.3e}", c.iterations, (c.value - rt).abs()));
    }
    checks.push(result(
        "kleene_lower_bound",
        sandwich <= 1e-9,
        Some(sandwich.max(0.0)),
        format!("L^n 0 <= rt for n in {depths:?} at x in {:?}", opts.points),
    ));
    checks.push(result(
        "kleene_agreement",
        agreement < opts.kleene_tolerance,
        Some(agreement),
        format!(
            "increment < {:e}: {}",
            opts.kleene_increment,
            notes.join("; ")
        ),
    ));

    Ok(CheckReport {
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}
