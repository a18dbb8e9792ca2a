//! Constant-probability loop programs and their univariate normal form.

use std::collections::HashSet;
use std::fmt;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::rational::{format_rational, Rational};

/// Reasons a program is rejected after parsing.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("a program needs at least one variable")]
    NoVariables,
    #[error("invalid variable name `{0}`")]
    InvalidIdentifier(String),
    #[error("variable `{0}` declared twice")]
    DuplicateVariable(String),
    #[error("{what} has {found} components, expected {expected}")]
    ArityMismatch {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("{what} has negative probability {prob}")]
    NegativeProbability { what: String, prob: String },
    #[error("probabilities sum to {0}, expected 1")]
    ProbabilitySum(String),
    #[error("increment {0:?} occurs in more than one branch")]
    DuplicateDelta(Vec<i64>),
    #[error("reset branch must have positive probability")]
    ZeroResetProbability,
    #[error("reset target satisfies the loop guard (a.d = {dot} > {bound})")]
    ResetSatisfiesGuard { dot: i128, bound: i64 },
    #[error("random walk boundary offset {0} must have positive probability")]
    ZeroBoundaryProbability(i64),
    #[error("random walk reset target {0} is positive")]
    PositiveResetTarget(i64),
    #[error("integer overflow in {0}")]
    Overflow(&'static str),
}

/// One probabilistic update `x := x + delta` taken with probability `prob`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Branch {
    pub delta: Vec<i64>,
    pub prob: Rational,
}

/// Direct-termination update `x := target` taken with probability `prob`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Reset {
    pub target: Vec<i64>,
    pub prob: Rational,
}

/// `while (a . x > b) { x += c_1 [p_1]; ...; x = d [p'] }` over integer
/// variables with constant rational probabilities.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CpProgram {
    var_names: Vec<String>,
    guard_a: Vec<i64>,
    guard_b: i64,
    branches: Vec<Branch>,
    reset: Option<Reset>,
}

pub(crate) const KEYWORDS: [&str; 4] = ["vars", "while", "inc", "reset"];

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_') && !KEYWORDS.contains(&s)
}

pub(crate) fn dot(a: &[i64], z: &[i64]) -> i128 {
    a.iter().zip(z).map(|(&x, &y)| x as i128 * y as i128).sum()
}

impl CpProgram {
    /// Builds and validates a program.
    pub fn new(
        var_names: Vec<String>,
        guard_a: Vec<i64>,
        guard_b: i64,
        branches: Vec<Branch>,
        reset: Option<Reset>,
    ) -> Result<Self, ValidationError> {
        let prog = CpProgram {
            var_names,
            guard_a,
            guard_b,
            branches,
            reset,
        };
        prog.validate()?;
        Ok(prog)
    }

    pub fn arity(&self) -> usize {
        self.var_names.len()
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    pub fn guard_a(&self) -> &[i64] {
        &self.guard_a
    }

    pub fn guard_b(&self) -> i64 {
        self.guard_b
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn reset(&self) -> Option<&Reset> {
        self.reset.as_ref()
    }

    /// Probability `p'` of direct termination (0 without a reset branch).
    pub fn direct_prob(&self) -> Rational {
        self.reset
            .as_ref()
            .map(|r| r.prob.clone())
            .unwrap_or_else(Rational::zero)
    }

    /// Whether `state` satisfies the loop guard `a . x > b`.
    pub fn guard_holds(&self, state: &[i64]) -> bool {
        dot(&self.guard_a, state) > self.guard_b as i128
    }

    /// Checks every structural invariant of a CP program.
    pub fn validate(&self) -> Result<(), ValidationError> {
        let r = self.var_names.len();
        if r == 0 {
            return Err(ValidationError::NoVariables);
        }
        let mut seen = HashSet::new();
        for v in &self.var_names {
            if !is_identifier(v) {
                return Err(ValidationError::InvalidIdentifier(v.clone()));
            }
            if !seen.insert(v.as_str()) {
                return Err(ValidationError::DuplicateVariable(v.clone()));
            }
        }
        let arity = |what: String, found: usize| {
            if found == r {
                Ok(())
            } else {
                Err(ValidationError::ArityMismatch {
                    what,
                    expected: r,
                    found,
                })
            }
        };
        arity("guard".into(), self.guard_a.len())?;
        let mut deltas = HashSet::new();
        let mut total = Rational::zero();
        for (i, b) in self.branches.iter().enumerate() {
            arity(format!("branch {}", i + 1), b.delta.len())?;
            if b.prob.is_negative() {
                return Err(ValidationError::NegativeProbability {
                    what: format!("branch {}", i + 1),
                    prob: format_rational(&b.prob),
                });
            }
            if !deltas.insert(&b.delta) {
                return Err(ValidationError::DuplicateDelta(b.delta.clone()));
            }
            total += &b.prob;
        }
        if let Some(reset) = &self.reset {
            arity("reset".into(), reset.target.len())?;
            if reset.prob.is_negative() {
                return Err(ValidationError::NegativeProbability {
                    what: "reset".into(),
                    prob: format_rational(&reset.prob),
                });
            }
            if reset.prob.is_zero() {
                return Err(ValidationError::ZeroResetProbability);
            }
            let d = dot(&self.guard_a, &reset.target);
            if d > self.guard_b as i128 {
                return Err(ValidationError::ResetSatisfiesGuard {
                    dot: d,
                    bound: self.guard_b,
                });
            }
            total += &reset.prob;
        }
        if !total.is_one() {
            return Err(ValidationError::ProbabilitySum(format_rational(&total)));
        }
        Ok(())
    }

    /// Guard expression in canonical source syntax, e.g. `1*t - 1*h`.
    pub fn guard_expr(&self) -> String {
        linear_expr(&self.var_names, &self.guard_a)
    }
}

pub(crate) fn linear_expr(names: &[String], coeffs: &[i64]) -> String {
    let mut out = String::new();
    for (name, &c) in names.iter().zip(coeffs) {
        if c == 0 {
            continue;
        }
        if out.is_empty() {
            if c < 0 {
                out.push('-');
            }
        } else {
            out.push_str(if c < 0 { " - " } else { " + " });
        }
        out.push_str(&format!("{}*{}", c.unsigned_abs(), name));
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

fn tuple(v: &[i64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(", "))
}

/// Canonical source text; parsing it yields the same program.
impl fmt::Display for CpProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "vars {}", self.var_names.join(", "))?;
        writeln!(f, "while {} > {} {{", self.guard_expr(), self.guard_b)?;
        for b in &self.branches {
            writeln!(f, "  inc {} [{}];", tuple(&b.delta), format_rational(&b.prob))?;
        }
        if let Some(r) = &self.reset {
            writeln!(f, "  reset {} [{}];", tuple(&r.target), format_rational(&r.prob))?;
        }
        write!(f, "}}")
    }
}

/// `while (x > 0) { x += j [p_j] for -k <= j <= m; x = d [p'] }`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RandomWalkProgram {
    k: usize,
    m: usize,
    probs: Vec<Rational>,
    direct_prob: Rational,
    reset_target: i64,
}

impl RandomWalkProgram {
    /// `probs[i]` is the probability of offset `i - k`. A zero `direct_prob`
    /// normalises the reset target to 0.
    pub fn new(
        k: usize,
        m: usize,
        probs: Vec<Rational>,
        direct_prob: Rational,
        reset_target: i64,
    ) -> Result<Self, ValidationError> {
        if probs.len() != k + m + 1 {
            return Err(ValidationError::ArityMismatch {
                what: "offset table".into(),
                expected: k + m + 1,
                found: probs.len(),
            });
        }
        for (i, p) in probs.iter().enumerate() {
            if p.is_negative() {
                return Err(ValidationError::NegativeProbability {
                    what: format!("offset {}", i as i64 - k as i64),
                    prob: format_rational(p),
                });
            }
        }
        if direct_prob.is_negative() {
            return Err(ValidationError::NegativeProbability {
                what: "reset".into(),
                prob: format_rational(&direct_prob),
            });
        }
        if m > 0 && probs[k + m].is_zero() {
            return Err(ValidationError::ZeroBoundaryProbability(m as i64));
        }
        if k > 0 && probs[0].is_zero() {
            return Err(ValidationError::ZeroBoundaryProbability(-(k as i64)));
        }
        if reset_target > 0 {
            return Err(ValidationError::PositiveResetTarget(reset_target));
        }
        let total: Rational = probs.iter().sum::<Rational>() + &direct_prob;
        if !total.is_one() {
            return Err(ValidationError::ProbabilitySum(format_rational(&total)));
        }
        let reset_target = if direct_prob.is_zero() { 0 } else { reset_target };
        Ok(RandomWalkProgram {
            k,
            m,
            probs,
            direct_prob,
            reset_target,
        })
    }

    /// Largest downward step.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Largest upward step.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Probability of offset `j`; zero outside `-k..=m`.
    pub fn p(&self, j: i64) -> Rational {
        let idx = j + self.k as i64;
        if idx < 0 || idx as usize >= self.probs.len() {
            Rational::zero()
        } else {
            self.probs[idx as usize].clone()
        }
    }

    /// `(offset, probability)` for every offset in `-k..=m`, ascending.
    pub fn offsets(&self) -> impl DoubleEndedIterator<Item = (i64, &Rational)> + '_ {
        let k = self.k as i64;
        self.probs.iter().enumerate().map(move |(i, p)| (i as i64 - k, p))
    }

    pub fn direct_prob(&self) -> &Rational {
        &self.direct_prob
    }

    pub fn reset_target(&self) -> i64 {
        self.reset_target
    }

    /// The walk as a one-variable CP program over `x` with guard `x > 0`.
    /// Zero-probability offsets are omitted.
    pub fn to_cp(&self) -> CpProgram {
        let branches = self
            .offsets()
            .filter(|(_, p)| !p.is_zero())
            .map(|(j, p)| Branch {
                delta: vec![j],
                prob: p.clone(),
            })
            .collect();
        let reset = (!self.direct_prob.is_zero()).then(|| Reset {
            target: vec![self.reset_target],
            prob: self.direct_prob.clone(),
        });
        CpProgram::new(vec!["x".into()], vec![1], 0, branches, reset)
            .expect("a valid random walk is a valid CP program")
    }
}

impl fmt::Display for RandomWalkProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "vars x")?;
        writeln!(f, "while 1*x > 0 {{")?;
        for (j, p) in self.offsets().rev() {
            writeln!(f, "  inc ({j}) [{}];", format_rational(p))?;
        }
        if !self.direct_prob.is_zero() {
            writeln!(
                f,
                "  reset ({}) [{}];",
                self.reset_target,
                format_rational(&self.direct_prob)
            )?;
        }
        write!(f, "}}")
    }
}
