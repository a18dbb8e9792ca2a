//! Reduction of a CP program to a univariate random walk.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::program::{dot, linear_expr, CpProgram, RandomWalkProgram, ValidationError};
use crate::rational::Rational;

/// Offset spans beyond this are rejected rather than allocated.
pub const MAX_SPAN: i128 = 1 << 24;

/// `rdw(z) = a . z - b`, the distance of `z` from leaving the loop.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RdwMap {
    pub a: Vec<i64>,
    pub b: i64,
}

impl RdwMap {
    pub fn identity() -> Self {
        RdwMap { a: vec![1], b: 0 }
    }

    pub fn of(prog: &CpProgram) -> Self {
        RdwMap {
            a: prog.guard_a().to_vec(),
            b: prog.guard_b(),
        }
    }

    pub fn apply(&self, z: &[i64]) -> i128 {
        dot(&self.a, z) - self.b as i128
    }

    /// `a . z - b` written over `names`, e.g. `1*t - 1*h + 1`.
    pub fn expr(&self, names: &[String]) -> String {
        let mut out = linear_expr(names, &self.a);
        if self.b != 0 {
            let sign = if self.b < 0 { "+" } else { "-" };
            out.push_str(&format!(" {sign} {}", self.b.unsigned_abs()));
        }
        out
    }
}

/// Why a trivial program behaves the way it does.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrivialCase {
    /// `a = 0` and `b < 0`: the guard always holds, the loop never exits.
    NeverExits,
    /// `a = 0` and `b >= 0`: the guard never holds, runtime 0 everywhere.
    NeverEntered,
    /// The reduced walk is `x = x [1]`: runtime infinite wherever the guard
    /// holds, 0 elsewhere.
    Stuck,
}

/// Reduces `prog` to `while (x > 0)` form.
///
/// Offsets are aggregated by `a . c`. The extreme offsets `-k` and `m` are
/// taken over branches of positive probability, so both carry positive mass.
pub fn to_random_walk(
    prog: &CpProgram,
) -> Result<(RandomWalkProgram, RdwMap), ValidationError> {
    let map = RdwMap::of(prog);
    let mut mass: BTreeMap<i128, Rational> = BTreeMap::new();
    for b in prog.branches() {
        let j = dot(prog.guard_a(), &b.delta);
        *mass.entry(j).or_insert_with(Rational::zero) += &b.prob;
    }
    let live = || mass.iter().filter(|(_, p)| !p.is_zero()).map(|(j, _)| *j);
    let k = live().min().map_or(0, |j| (-j).max(0));
    let m = live().max().map_or(0, |j| j.max(0));
    if k + m > MAX_SPAN {
        return Err(ValidationError::Overflow("reduced offset range"));
    }
    let (k, m) = (k as usize, m as usize);
    let mut probs = vec![Rational::zero(); k + m + 1];
    for (j, p) in mass {
        if !p.is_zero() {
            probs[(j + k as i128) as usize] = p;
        }
    }
    let (direct, target) = match prog.reset() {
        Some(r) => {
            let t = map.apply(&r.target);
            let t = i64::try_from(t).map_err(|_| ValidationError::Overflow("reset target"))?;
            (r.prob.clone(), t)
        }
        None => (Rational::zero(), 0),
    };
    let rw = RandomWalkProgram::new(k, m, probs, direct, target)?;
    Ok((rw, map))
}

/// The program itself when it is already a random walk (one variable,
/// guard `x > 0`).
pub fn as_random_walk(prog: &CpProgram) -> Option<RandomWalkProgram> {
    if prog.guard_a() != [1] || prog.guard_b() != 0 {
        return None;
    }
    to_random_walk(prog).ok().map(|(rw, _)| rw)
}

fn is_stuck(rw: &RandomWalkProgram) -> bool {
    rw.k() == 0 && rw.m() == 0 && rw.p(0).is_one()
}

/// Trivial-program classification; `None` for non-trivial programs.
pub fn trivial_case(prog: &CpProgram) -> Option<TrivialCase> {
    if prog.guard_a().iter().all(|&a| a == 0) {
        return Some(if prog.guard_b() < 0 {
            TrivialCase::NeverExits
        } else {
            TrivialCase::NeverEntered
        });
    }
    match to_random_walk(prog) {
        Ok((rw, _)) if is_stuck(&rw) => Some(TrivialCase::Stuck),
        _ => None,
    }
}

pub fn is_trivial(prog: &CpProgram) -> bool {
    trivial_case(prog).is_some()
}
