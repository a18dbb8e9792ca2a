//! Two-sample comparison of termination-time distributions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::AnalysisError;
use crate::oracles::simulate::termination_times;
use crate::program::CpProgram;
use crate::reduction::to_random_walk;
use crate::termination::{decide, VerdictKind};

pub const DEFAULT_ALPHA: f64 = 0.001;

/// Pooled count below which adjacent histogram bins are merged.
const MIN_BIN: u64 = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionReport {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub alpha: f64,
    pub passed: bool,
    pub trials: u64,
    pub bins: usize,
    pub censored: [u64; 2],
}

/// Chi-squared test that two samples of termination times share one
/// distribution. Censored runs form their own bin.
pub fn chi_squared_two_sample(a: &[Option<u64>], b: &[Option<u64>], alpha: f64) -> DistributionReport {
    let mut hist: BTreeMap<u64, [u64; 2]> = BTreeMap::new();
    for (side, sample) in [a, b].into_iter().enumerate() {
        for t in sample {
            hist.entry(t.unwrap_or(u64::MAX)).or_default()[side] += 1;
        }
    }
    let mut bins: Vec<[u64; 2]> = Vec::new();
    let mut open = [0u64; 2];
    for c in hist.values() {
        open[0] += c[0];
        open[1] += c[1];
        if open[0] + open[1] >= MIN_BIN {
            bins.push(open);
            open = [0, 0];
        }
    }
    if open[0] + open[1] > 0 {
        match bins.last_mut() {
            Some(last) => {
                last[0] += open[0];
                last[1] += open[1];
            }
            None => bins.push(open),
        }
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ra, rb) = ((nb / na).sqrt(), (na / nb).sqrt());
    let statistic: f64 = bins
        .iter()
        .map(|&[x, y]| {
            let d = x as f64 * ra - y as f64 * rb;
            d * d / (x + y) as f64
        })
        .sum();
    let dof = bins.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        ChiSquared::new(dof as f64).expect("positive dof").sf(statistic)
    };
    let censored = |s: &[Option<u64>]| s.iter().filter(|t| t.is_none()).count() as u64;
    DistributionReport {
        statistic,
        dof,
        p_value,
        alpha,
        passed: p_value >= alpha,
        trials: a.len().min(b.len()) as u64,
        bins: bins.len(),
        censored: [censored(a), censored(b)],
    }
}

/// Simulates `p` from `x0` and `q` from `y0` with distinct seeds and tests
/// the termination times for equality in distribution.
#[allow(clippy::too_many_arguments)]
pub fn compare_programs(
    p: &CpProgram,
    x0: &[i64],
    q: &CpProgram,
    y0: &[i64],
    trials: u64,
    step_cap: u64,
    seed: u64,
    alpha: f64,
) -> DistributionReport {
    let a = termination_times(p, x0, trials, step_cap, seed);
    let b = termination_times(q, y0, trials, step_cap, seed.wrapping_add(1));
    chi_squared_two_sample(&a, &b, alpha)
}

/// Tests that `p` from `x0` and its reduced walk from `rdw(x0)` terminate
/// with the same distribution.
pub fn distribution_match(
    p: &CpProgram,
    x0: &[i64],
    trials: u64,
    step_cap: u64,
    seed: u64,
) -> Result<DistributionReport, AnalysisError> {
    if decide(p).kind == VerdictKind::NotAst {
        return Err(AnalysisError::NotPast(
            "distribution test needs an AST program".into(),
        ));
    }
    let (rw, rdw) = to_random_walk(p).map_err(|e| AnalysisError::Internal(e.to_string()))?;
    let y0 = i64::try_from(rdw.apply(x0))
        .map_err(|_| AnalysisError::Internal("reduced start state overflows".into()))?;
    Ok(compare_programs(p, x0, &rw.to_cp(), &[y0], trials, step_cap, seed, DEFAULT_ALPHA))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;

    #[test]
    fn identical_point_masses() {
        let p = parse_program("vars x\nwhile x > 0 { inc (-1) [1]; }").unwrap();
        let r = distribution_match(&p, &[6], 1000, 100, 1).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert!(r.passed);
    }

    #[test]
    fn shifted_samples_are_rejected() {
        let a: Vec<Option<u64>> = (0..5000).map(|i| Some(i % 10)).collect();
        let b: Vec<Option<u64>> = (0..5000).map(|i| Some(i % 10 + 1)).collect();
        assert!(!chi_squared_two_sample(&a, &b, DEFAULT_ALPHA).passed);
        assert!(chi_squared_two_sample(&a, &a, DEFAULT_ALPHA).p_value > 0.999);
    }

    #[test]
    fn not_ast_is_refused() {
        let p = parse_program("vars x\nwhile x > 0 { inc (1) [2/3]; inc (-1) [1/3]; }").unwrap();
        assert!(distribution_match(&p, &[1], 10, 10, 0).is_err());
    }
}
