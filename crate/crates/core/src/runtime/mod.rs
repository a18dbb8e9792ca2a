//! Exact expected runtime of PAST programs.
//!
//! The pipeline reduces a program to a random walk, builds the
//! characteristic polynomial of its runtime recurrence, keeps the roots in
//! the closed unit disc and fixes their coefficients from the boundary
//! values `rt(x) = 0` on `-k < x <= 0`.

pub mod boundary;
pub mod charpoly;
pub mod closed_form;
pub mod roots;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::AnalysisError;
use crate::mp::Precision;
use crate::program::{CpProgram, RandomWalkProgram};
use crate::rational::Rational;
use crate::reduction::{to_random_walk, RdwMap};
use crate::termination::{bounds_rw, decide, drift, RuntimeBounds, Verdict};

pub use boundary::{particular_solution, solve_boundary};
pub use charpoly::{characteristic_polynomial, CharPoly};
pub use closed_form::{ClosedForm, ComplexTerm, Particular, RealTerm};
pub use roots::{filter_unit_disc, find_roots, Root, RootSet};

/// Wall-clock time spent in one pipeline stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub ms: f64,
}

/// Intermediate and final results of the closed-form pipeline for a walk.
#[derive(Debug, Clone)]
pub struct Solution {
    pub charpoly: CharPoly,
    pub roots: RootSet,
    pub retained: RootSet,
    pub closed_form: ClosedForm,
}

struct Clock(Vec<StageTiming>, Instant);

impl Clock {
    fn new() -> Self {
        Clock(Vec::new(), Instant::now())
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.0.push(StageTiming {
            stage: stage.into(),
            ms: (now - self.1).as_secs_f64() * 1e3,
        });
        self.1 = now;
    }
}

fn solve_timed(
    rw: &RandomWalkProgram,
    rdw: RdwMap,
    prec: Precision,
    clock: &mut Clock,
) -> Result<Solution, AnalysisError> {
    let charpoly = characteristic_polynomial(rw);
    clock.lap("charpoly");
    let roots = find_roots(&charpoly, prec)?;
    clock.lap("roots");
    let retained = filter_unit_disc(&roots, rw.k())?;
    clock.lap("filter");
    let closed_form = solve_boundary(&particular_solution(rw), &retained, rw.k(), rdw)?;
    clock.lap("boundary");
    Ok(Solution {
        charpoly,
        roots,
        retained,
        closed_form,
    })
}

/// Closed form of a PAST random walk, in terms of `x` under `rdw`.
pub fn solve_rw(
    rw: &RandomWalkProgram,
    rdw: RdwMap,
    prec: Precision,
) -> Result<Solution, AnalysisError> {
    let verdict = crate::termination::decide_rw(rw);
    if !verdict.is_past() {
        return Err(AnalysisError::NotPast(verdict.kind.to_string()));
    }
    solve_timed(rw, rdw, prec, &mut Clock::new())
}

/// Everything known about a CP program after analysis.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub random_walk: RandomWalkProgram,
    pub rdw: RdwMap,
    pub verdict: Verdict,
    /// Drift of the reduced walk, reported even when direct termination
    /// decides the verdict.
    pub drift: Rational,
    pub bounds: Option<RuntimeBounds>,
    pub solution: Option<Solution>,
    pub precision: Precision,
    pub timings: Vec<StageTiming>,
}

impl Analysis {
    pub fn closed_form(&self) -> Option<&ClosedForm> {
        self.solution.as_ref().map(|s| &s.closed_form)
    }
}

/// Reduce, decide, bound and (for PAST programs) solve exactly.
pub fn analyze_cp(prog: &CpProgram, prec: Precision) -> Result<Analysis, AnalysisError> {
    let mut clock = Clock::new();
    let (random_walk, rdw) =
        to_random_walk(prog).map_err(|e| AnalysisError::Internal(e.to_string()))?;
    clock.lap("reduce");
    let verdict = decide(prog);
    let mu = drift(&random_walk);
    clock.lap("decide");
    let (bounds, solution) = if verdict.is_past() {
        let b = bounds_rw(&random_walk)?;
        clock.lap("bounds");
        let s = solve_timed(&random_walk, rdw.clone(), prec, &mut clock)?;
        (Some(b), Some(s))
    } else {
        (None, None)
    };
    Ok(Analysis {
        random_walk,
        rdw,
        verdict,
        drift: mu,
        bounds,
        solution,
        precision: prec,
        timings: clock.0,
    })
}
