//! Truncated Kleene iteration of the expected-runtime transformer.
//!
//! For a random walk, `L(f)(x) = 1 + sum_j p_j f(x + j) + p' f(d)` on
//! `x > 0` and `L(f)(x) = 0` elsewhere. The reset target `d` never satisfies
//! the guard, so the reset term is always zero. `(L^n 0)(x)` equals
//! `E[min(T, n)]` for the walk started at `x`.

use std::ops::{Add, Mul, RangeInclusive};

use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::ResourceError;
use crate::program::RandomWalkProgram;
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arithmetic {
    Rational,
    Float,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KleeneLimits {
    /// Work (state updates) up to which exact rationals are used.
    pub rational_cells: usize,
    /// Largest state window before giving up.
    pub max_window: usize,
}

impl Default for KleeneLimits {
    fn default() -> Self {
        KleeneLimits {
            rational_cells: 50_000,
            max_window: 1 << 24,
        }
    }
}

/// `(L^n 0)(x)` for every `x` in `lo..lo + values.len()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KleeneTable {
    pub iterations: usize,
    pub lo: i64,
    pub values: Vec<f64>,
    #[serde(skip)]
    pub exact: Option<Vec<Rational>>,
    pub arithmetic: Arithmetic,
}

impl KleeneTable {
    pub fn get(&self, x: i64) -> Option<f64> {
        let i = x.checked_sub(self.lo)?;
        usize::try_from(i).ok().and_then(|i| self.values.get(i).copied())
    }

    pub fn get_exact(&self, x: i64) -> Option<&Rational> {
        let i = usize::try_from(x.checked_sub(self.lo)?).ok()?;
        self.exact.as_ref()?.get(i)
    }
}

/// One value of the iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KleeneResult {
    pub x0: i64,
    pub iterations: usize,
    pub value: f64,
    #[serde(with = "crate::rational::serde_rational_opt")]
    pub exact: Option<Rational>,
    pub arithmetic: Arithmetic,
}

/// Iteration run until the per-step increment drops below a tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KleeneConvergence {
    pub x0: i64,
    pub iterations: usize,
    pub value: f64,
    /// `(L^{n+1} 0)(x0) - (L^n 0)(x0)`.
    pub last_increment: f64,
    pub converged: bool,
    pub arithmetic: Arithmetic,
}

trait Num: Clone + Zero + for<'a> Add<&'a Self, Output = Self> {
    fn one() -> Self;
    fn mul_ref(&self, o: &Self) -> Self;
}

impl Num for Rational {
    fn one() -> Self {
        num_traits::One::one()
    }
    fn mul_ref(&self, o: &Self) -> Self {
        self * o
    }
}

impl Num for f64 {
    fn one() -> Self {
        1.0
    }
    fn mul_ref(&self, o: &Self) -> Self {
        self.mul(o)
    }
}

fn window(rw: &RandomWalkProgram, lo: i64, hi: i64, n: usize) -> (i128, i128) {
    let n = n as i128;
    (lo as i128 - n * rw.k() as i128, hi as i128 + n * rw.m() as i128)
}

/// Backward dynamic programming over a window that shrinks by `k` on the
/// left and `m` on the right per step.
fn table_in<T: Num>(probs: &[T], k: usize, m: usize, lo: i64, hi: i64, n: usize) -> Vec<T> {
    let (k, m) = (k as i64, m as i64);
    let width = |i: usize| (hi - lo + 1) as usize + (n - i) * (k + m) as usize;
    let mut prev = vec![T::zero(); width(0)];
    for i in 1..=n {
        let base = lo - (n - i) as i64 * k;
        let prev_base = lo - (n - i + 1) as i64 * k;
        let mut next = Vec::with_capacity(width(i));
        for idx in 0..width(i) {
            let x = base + idx as i64;
            if x <= 0 {
                next.push(T::zero());
                continue;
            }
            let start = (x - k - prev_base) as usize;
            let mut acc = T::one();
            for (p, v) in probs.iter().zip(&prev[start..]) {
                acc = acc + &p.mul_ref(v);
            }
            next.push(acc);
        }
        prev = next;
    }
    prev
}

fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// `(L^n 0)(x)` for `x` in `range`.
pub fn kleene_table(
    rw: &RandomWalkProgram,
    range: RangeInclusive<i64>,
    n: usize,
    limits: KleeneLimits,
) -> Result<KleeneTable, ResourceError> {
    let (lo, hi) = (*range.start(), *range.end());
    if hi < lo {
        return Err(ResourceError("empty state range".into()));
    }
    let (wlo, whi) = window(rw, lo, hi, n);
    let width = whi - wlo + 1;
    if width > limits.max_window as i128 {
        return Err(ResourceError(format!(
            "Kleene window of {width} states exceeds the limit of {}",
            limits.max_window
        )));
    }
    let cells = n as i128 * width * (rw.k() + rw.m() + 1) as i128;
    if cells <= limits.rational_cells as i128 {
        let probs: Vec<Rational> = rw.offsets().map(|(_, p)| p.clone()).collect();
        let exact = table_in(&probs, rw.k(), rw.m(), lo, hi, n);
        Ok(KleeneTable {
            iterations: n,
            lo,
            values: exact.iter().map(to_f64).collect(),
            exact: Some(exact),
            arithmetic: Arithmetic::Rational,
        })
    } else {
        let probs: Vec<f64> = rw.offsets().map(|(_, p)| to_f64(p)).collect();
        Ok(KleeneTable {
            iterations: n,
            lo,
            values: table_in(&probs, rw.k(), rw.m(), lo, hi, n),
            exact: None,
            arithmetic: Arithmetic::Float,
        })
    }
}

/// `(L^n 0)(x0)`, exact when the work is small enough.
pub fn kleene_iterate(
    rw: &RandomWalkProgram,
    x0: i64,
    n: usize,
) -> Result<KleeneResult, ResourceError> {
    kleene_iterate_with(rw, x0, n, KleeneLimits::default())
}

pub fn kleene_iterate_with(
    rw: &RandomWalkProgram,
    x0: i64,
    n: usize,
    limits: KleeneLimits,
) -> Result<KleeneResult, ResourceError> {
    let t = kleene_table(rw, x0..=x0, n, limits)?;
    Ok(KleeneResult {
        x0,
        iterations: n,
        value: t.values[0],
        exact: t.exact.map(|mut v| v.swap_remove(0)),
        arithmetic: t.arithmetic,
    })
}

/// Runs the iteration at `x0` until the increment `(L^{n+1} 0)(x0) - (L^n 0)(x0)`
/// falls below `tol` or `max_n` steps are done.
///
/// The increment equals the probability that the walk is still running after
/// `n` steps, so a forward pass over the state distribution yields every
/// `(L^n 0)(x0)` in one sweep. Floats throughout.
pub fn kleene_converge(
    rw: &RandomWalkProgram,
    x0: i64,
    tol: f64,
    max_n: usize,
    limits: KleeneLimits,
) -> Result<KleeneConvergence, ResourceError> {
    let probs: Vec<f64> = rw.offsets().map(|(_, p)| to_f64(p)).collect();
    let (k, span) = (rw.k() as i64, probs.len());
    // dist[i] is the probability of being alive at state lo + i.
    let mut lo = x0;
    let mut dist = vec![if x0 > 0 { 1.0 } else { 0.0 }];
    let mut value = 0.0;
    let mut n = 0;
    loop {
        let alive: f64 = dist.iter().sum();
        if alive < tol || n >= max_n {
            return Ok(KleeneConvergence {
                x0,
                iterations: n,
                value,
                last_increment: alive,
                converged: alive < tol,
                arithmetic: Arithmetic::Float,
            });
        }
        value += alive;
        n += 1;
        let mut next = vec![0.0; dist.len() + span - 1];
        for (i, &mass) in dist.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for (j, p) in probs.iter().enumerate() {
                next[i + j] += mass * p;
            }
        }
        let new_lo = lo - k;
        // Mass that left the guard stops contributing.
        let first_alive = (1 - new_lo).max(0) as usize;
        let first_alive = first_alive.min(next.len());
        let first_nonzero = next[first_alive..]
            .iter()
            .position(|&v| v != 0.0)
            .map_or(next.len(), |p| p + first_alive);
        let last = next.iter().rposition(|&v| v != 0.0).map_or(first_nonzero, |p| p + 1);
        dist = next[first_nonzero..last.max(first_nonzero)].to_vec();
        lo = new_lo + first_nonzero as i64;
        if dist.len() > limits.max_window {
            return Err(ResourceError(format!(
                "Kleene window of {} states exceeds the limit of {}",
                dist.len(),
                limits.max_window
            )));
        }
    }
}
