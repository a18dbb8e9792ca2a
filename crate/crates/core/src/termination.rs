//! Drift, the (P)AST decision procedure and linear runtime bounds.

use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::AnalysisError;
use crate::program::{CpProgram, RandomWalkProgram};
use crate::rational::{format_rational, int, serde_rational, serde_rational_opt, Rational};
use crate::reduction::{to_random_walk, trivial_case, TrivialCase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    Trivial,
    #[serde(rename = "not_ast")]
    NotAst,
    #[serde(rename = "ast_not_past")]
    AstNotPast,
    Past,
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerdictKind::Trivial => "trivial",
            VerdictKind::NotAst => "not AST",
            VerdictKind::AstNotPast => "AST but not PAST",
            VerdictKind::Past => "PAST",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    DirectTermination,
    DriftSign,
    Triviality,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    /// Absent for trivial programs and when direct termination decides.
    #[serde(with = "serde_rational_opt")]
    pub drift: Option<Rational>,
    pub reason: Reason,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trivial_case: Option<TrivialCase>,
}

impl Verdict {
    pub fn is_past(&self) -> bool {
        self.kind == VerdictKind::Past
    }
}

/// `sum j * p_j`.
pub fn drift(rw: &RandomWalkProgram) -> Rational {
    rw.offsets()
        .filter(|(j, _)| *j != 0)
        .map(|(j, p)| int(j) * p)
        .sum()
}

fn verdict_for(rw: &RandomWalkProgram, trivial: Option<TrivialCase>) -> Verdict {
    if let Some(case) = trivial {
        return Verdict {
            kind: VerdictKind::Trivial,
            drift: None,
            reason: Reason::Triviality,
            trivial_case: Some(case),
        };
    }
    if !rw.direct_prob().is_zero() {
        return Verdict {
            kind: VerdictKind::Past,
            drift: None,
            reason: Reason::DirectTermination,
            trivial_case: None,
        };
    }
    let mu = drift(rw);
    let kind = if mu.is_positive() {
        VerdictKind::NotAst
    } else if mu.is_zero() {
        VerdictKind::AstNotPast
    } else {
        VerdictKind::Past
    };
    Verdict {
        kind,
        drift: Some(mu),
        reason: Reason::DriftSign,
        trivial_case: None,
    }
}

/// Decides termination of a validated CP program.
pub fn decide(prog: &CpProgram) -> Verdict {
    let trivial = trivial_case(prog);
    match to_random_walk(prog) {
        Ok((rw, _)) => verdict_for(&rw, trivial),
        // Only reachable for a = 0 with astronomically large deltas; such a
        // program is trivial anyway.
        Err(_) => Verdict {
            kind: VerdictKind::Trivial,
            drift: None,
            reason: Reason::Triviality,
            trivial_case: trivial,
        },
    }
}

/// Same as [`decide`] for a program already in random-walk form.
pub fn decide_rw(rw: &RandomWalkProgram) -> Verdict {
    let stuck = rw.k() == 0 && rw.m() == 0 && rw.direct_prob().is_zero();
    verdict_for(rw, stuck.then_some(TrivialCase::Stuck))
}

/// Affine bounds `slope * x + intercept` on the runtime, valid for `x > 0`
/// where `x` is the reduced variable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuntimeBounds {
    #[serde(with = "serde_rational")]
    pub lower_slope: Rational,
    #[serde(with = "serde_rational")]
    pub lower_intercept: Rational,
    #[serde(with = "serde_rational")]
    pub upper_slope: Rational,
    #[serde(with = "serde_rational")]
    pub upper_intercept: Rational,
}

impl RuntimeBounds {
    pub fn lower(&self, x: i128) -> Rational {
        affine(&self.lower_slope, &self.lower_intercept, x)
    }

    pub fn upper(&self, x: i128) -> Rational {
        affine(&self.upper_slope, &self.upper_intercept, x)
    }
}

fn affine(slope: &Rational, intercept: &Rational, x: i128) -> Rational {
    if x <= 0 {
        return Rational::zero();
    }
    slope * Rational::from_integer(x.into()) + intercept
}

impl fmt::Display for RuntimeBounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let term = |s: &Rational, c: &Rational| {
            if s.is_zero() {
                format_rational(c)
            } else if c.is_zero() {
                format!("{}*x", format_rational(s))
            } else {
                let sign = if c.is_negative() { "-" } else { "+" };
                format!("{}*x {} {}", format_rational(s), sign, format_rational(&c.abs()))
            }
        };
        write!(
            f,
            "{} <= rt(x) <= {}",
            term(&self.lower_slope, &self.lower_intercept),
            term(&self.upper_slope, &self.upper_intercept)
        )
    }
}

/// Bounds for a PAST random walk.
pub fn bounds_rw(rw: &RandomWalkProgram) -> Result<RuntimeBounds, AnalysisError> {
    let v = decide_rw(rw);
    if !v.is_past() {
        return Err(AnalysisError::NotPast(v.kind.to_string()));
    }
    if !rw.direct_prob().is_zero() {
        return Ok(RuntimeBounds {
            lower_slope: Rational::zero(),
            lower_intercept: Rational::zero(),
            upper_slope: Rational::zero(),
            upper_intercept: rw.direct_prob().recip(),
        });
    }
    let mu = drift(rw);
    let slope = -mu.recip();
    Ok(RuntimeBounds {
        lower_slope: slope.clone(),
        lower_intercept: Rational::zero(),
        upper_slope: slope,
        upper_intercept: (int(1) - int(rw.k() as i64)) / mu,
    })
}

/// Bounds for a PAST CP program, in terms of `x = rdw(vars)`.
pub fn bounds(prog: &CpProgram) -> Result<RuntimeBounds, AnalysisError> {
    let v = decide(prog);
    if !v.is_past() {
        return Err(AnalysisError::NotPast(v.kind.to_string()));
    }
    let (rw, _) = to_random_walk(prog).map_err(|e| AnalysisError::Internal(e.to_string()))?;
    bounds_rw(&rw)
}
