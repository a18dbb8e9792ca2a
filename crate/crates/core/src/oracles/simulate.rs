//! Seeded Monte-Carlo simulation of CP programs.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use rand::distributions::{Distribution, Uniform};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::program::{dot, CpProgram};
use crate::rational::Rational;

pub const DEFAULT_STEP_CAP: u64 = 1_000_000;

/// Sample mean of the termination time over uncensored trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEstimate {
    /// `None` when every trial was censored.
    pub mean: Option<f64>,
    /// Normal-approximation 95% half-width; `None` below two uncensored
    /// trials.
    pub half_width_95: Option<f64>,
    pub trials: u64,
    /// Trials that hit `step_cap` without leaving the loop.
    pub censored: u64,
    pub seed: u64,
    pub step_cap: u64,
}

impl SimEstimate {
    pub fn terminated_fraction(&self) -> f64 {
        (self.trials - self.censored) as f64 / self.trials as f64
    }

    /// Whether `v` lies within `widths` half-widths of the mean.
    pub fn covers(&self, v: f64, widths: f64) -> bool {
        match (self.mean, self.half_width_95) {
            (Some(m), Some(h)) => (v - m).abs() <= widths * h,
            _ => false,
        }
    }
}

enum Effect {
    Add(Vec<i64>),
    Set(Vec<i64>),
}

/// Branch choice by `u < thresholds[i]` for the first such `i`.
///
/// With a common denominator `D < 2^64` the draw is uniform on `0..D` and
/// exact. Otherwise cumulative probabilities are scaled to `2^64` once.
struct Sampler {
    effects: Vec<Effect>,
    /// Change of `a . x` under each effect that adds a delta.
    guard_steps: Vec<i128>,
    thresholds: Vec<u128>,
    uniform: Option<Uniform<u64>>,
}

impl Sampler {
    fn new(prog: &CpProgram) -> Self {
        let mut effects = Vec::new();
        let mut probs: Vec<Rational> = Vec::new();
        for b in prog.branches() {
            effects.push(Effect::Add(b.delta.clone()));
            probs.push(b.prob.clone());
        }
        if let Some(r) = prog.reset() {
            effects.push(Effect::Set(r.target.clone()));
            probs.push(r.prob.clone());
        }
        let lcm = probs.iter().fold(BigInt::one(), |acc, p| acc.lcm(p.denom()));
        let denom = lcm.to_u64();
        let scale = match denom {
            Some(d) => BigInt::from(d),
            None => BigInt::one() << 64,
        };
        let mut cum = Rational::from_integer(0.into());
        let mut thresholds: Vec<u128> = probs
            .iter()
            .map(|p| {
                cum += p;
                (&cum * Rational::from_integer(scale.clone()))
                    .floor()
                    .to_integer()
                    .to_u128()
                    .expect("threshold within scale")
            })
            .collect();
        // Guard against any rounding of the final threshold below the range.
        if let Some(last) = thresholds.last_mut() {
            *last = u128::MAX;
        }
        let guard_steps = effects
            .iter()
            .map(|e| match e {
                Effect::Add(d) => dot(prog.guard_a(), d),
                Effect::Set(_) => 0,
            })
            .collect();
        Sampler {
            effects,
            guard_steps,
            thresholds,
            uniform: denom.map(|d| Uniform::new(0, d)),
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> usize {
        let u = match &self.uniform {
            Some(uni) => uni.sample(rng) as u128,
            None => rng.next_u64() as u128,
        };
        self.thresholds.iter().position(|&t| u < t).unwrap_or(self.thresholds.len() - 1)
    }
}

fn rng_for(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn run_trial(prog: &CpProgram, sampler: &Sampler, x0: &[i64], cap: u64, rng: &mut ChaCha8Rng) -> Option<u64> {
    let a = prog.guard_a();
    let b = prog.guard_b() as i128;
    let mut x = x0.to_vec();
    // `a . x`, kept in step with `x`.
    let mut g = dot(a, &x);
    let mut steps = 0;
    while g > b {
        if steps == cap {
            return None;
        }
        let i = sampler.draw(rng);
        match &sampler.effects[i] {
            Effect::Add(d) => {
                for (xi, di) in x.iter_mut().zip(d) {
                    *xi = xi.saturating_add(*di);
                }
                g += sampler.guard_steps[i];
            }
            Effect::Set(t) => {
                x.copy_from_slice(t);
                g = dot(a, &x);
            }
        }
        steps += 1;
    }
    Some(steps)
}

/// Termination time of every trial in trial order; `None` for censored runs.
/// Trial `i` draws from stream `i` of the generator keyed by `seed`, so the
/// result does not depend on scheduling.
pub fn termination_times(
    prog: &CpProgram,
    x0: &[i64],
    trials: u64,
    step_cap: u64,
    seed: u64,
) -> Vec<Option<u64>> {
    assert_eq!(x0.len(), prog.arity(), "initial state arity");
    let sampler = Sampler::new(prog);
    (0..trials)
        .into_par_iter()
        .map(|t| run_trial(prog, &sampler, x0, step_cap, &mut rng_for(seed, t)))
        .collect()
}

pub fn estimate(times: &[Option<u64>], seed: u64, step_cap: u64) -> SimEstimate {
    let (mut n, mut sum, mut sumsq) = (0u128, 0u128, 0u128);
    for t in times.iter().flatten() {
        let t = *t as u128;
        n += 1;
        sum += t;
        sumsq += t * t;
    }
    let mean = (n > 0).then(|| sum as f64 / n as f64);
    let half_width_95 = (n > 1).then(|| {
        let var = (n * sumsq - sum * sum) as f64 / (n * (n - 1)) as f64;
        let z = Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(0.975);
        z * (var / n as f64).sqrt()
    });
    SimEstimate {
        mean,
        half_width_95,
        trials: times.len() as u64,
        censored: times.len() as u64 - n as u64,
        seed,
        step_cap,
    }
}

/// Runs `trials` independent executions of `prog` from `x0`.
pub fn simulate(prog: &CpProgram, x0: &[i64], trials: u64, step_cap: u64, seed: u64) -> SimEstimate {
    assert!(trials >= 1 && step_cap >= 1);
    estimate(&termination_times(prog, x0, trials, step_cap, seed), seed, step_cap)
}

/// Fraction of trials terminated within each cap, from a single run at the
/// largest cap. Used to watch AST programs whose runtime has no mean.
pub fn termination_frequencies(
    prog: &CpProgram,
    x0: &[i64],
    trials: u64,
    caps: &[u64],
    seed: u64,
) -> Vec<f64> {
    let max = caps.iter().copied().max().unwrap_or(0);
    let times = termination_times(prog, x0, trials, max, seed);
    caps.iter()
        .map(|&c| times.iter().flatten().filter(|&&t| t <= c).count() as f64 / trials as f64)
        .collect()
}
