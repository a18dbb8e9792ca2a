//! Closed-form expected runtime `rt(x) = C(x) + sum a_{j,u} lambda_j^x x^u`.

use std::fmt::Write as _;

use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::mp::{MpComplex, MpFloat, Precision};
use crate::rational::{format_rational, serde_rational, Rational};
use crate::reduction::RdwMap;

/// `C(x)`: the particular solution of the inhomogeneous recurrence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "ParticularRepr", from = "ParticularRepr")]
pub enum Particular {
    /// `C(x) = 1/p'`.
    Constant(Rational),
    /// `C(x) = -x/mu`.
    Linear(Rational),
}

#[derive(Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ParticularKind {
    Constant,
    Linear,
}

#[derive(Serialize, Deserialize)]
struct ParticularRepr {
    kind: ParticularKind,
    #[serde(with = "serde_rational")]
    coeff: Rational,
}

impl From<Particular> for ParticularRepr {
    fn from(p: Particular) -> Self {
        match p {
            Particular::Constant(coeff) => ParticularRepr { kind: ParticularKind::Constant, coeff },
            Particular::Linear(coeff) => ParticularRepr { kind: ParticularKind::Linear, coeff },
        }
    }
}

impl From<ParticularRepr> for Particular {
    fn from(r: ParticularRepr) -> Self {
        match r.kind {
            ParticularKind::Constant => Particular::Constant(r.coeff),
            ParticularKind::Linear => Particular::Linear(r.coeff),
        }
    }
}

impl Particular {
    pub fn coeff(&self) -> &Rational {
        match self {
            Particular::Constant(c) | Particular::Linear(c) => c,
        }
    }

    pub fn at(&self, x: i128, prec: Precision) -> MpFloat {
        let c = MpFloat::from_rational(self.coeff(), prec);
        match self {
            Particular::Constant(_) => c,
            Particular::Linear(_) => &c * &MpFloat::from_bigint(&x.into(), prec),
        }
    }
}

/// `coeff * root^x * x^power`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTerm {
    pub root: MpComplex,
    pub power: u32,
    pub coeff: MpComplex,
}

/// Real-valued building blocks of the closed form.
#[derive(Debug, Clone, PartialEq)]
pub enum RealTerm {
    /// `coeff * lambda^x * x^power`.
    RealRoot {
        lambda: MpFloat,
        power: u32,
        coeff: MpFloat,
    },
    /// `modulus^x * x^power * (b cos(angle x) + b' sin(angle x))`, standing
    /// for a root `modulus * e^(i angle)` and its conjugate.
    ConjugatePair {
        modulus: MpFloat,
        angle: MpFloat,
        power: u32,
        b: MpFloat,
        b_prime: MpFloat,
    },
}

/// Exact expected runtime of a PAST program as a function of `x = rdw(vars)`.
/// The value is 0 for `x <= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedForm {
    pub particular: Particular,
    /// Coefficients as solved, before conjugate symmetrisation.
    pub complex_terms: Vec<ComplexTerm>,
    pub real_terms: Vec<RealTerm>,
    pub rdw: RdwMap,
    pub precision: Precision,
}

fn x_pow(x: i128, u: u32, prec: Precision) -> MpFloat {
    if u == 0 {
        MpFloat::one(prec)
    } else {
        MpFloat::from_bigint(&x.into(), prec).powi(u as i64)
    }
}

impl ClosedForm {
    /// `rt(x)`; 0 when the guard is violated.
    pub fn evaluate(&self, x: i128) -> MpFloat {
        if x <= 0 {
            MpFloat::zero(self.precision)
        } else {
            self.formula_at(x)
        }
    }

    /// `rt` at a program state.
    pub fn evaluate_at(&self, state: &[i64]) -> MpFloat {
        self.evaluate(self.rdw.apply(state))
    }

    /// The real-form expression at any `x`, ignoring the guard cutoff. On
    /// `-k < x <= 0` this vanishes up to solver tolerance.
    pub fn formula_at(&self, x: i128) -> MpFloat {
        let prec = self.precision;
        let xi = x as i64;
        let xf = MpFloat::from_bigint(&x.into(), prec);
        let mut acc = self.particular.at(x, prec);
        for t in &self.real_terms {
            let term = match t {
                RealTerm::RealRoot {
                    lambda,
                    power,
                    coeff,
                } => coeff * &lambda.powi(xi) * x_pow(x, *power, prec),
                RealTerm::ConjugatePair {
                    modulus,
                    angle,
                    power,
                    b,
                    b_prime,
                } => {
                    let phase = angle * &xf;
                    let osc = b * &phase.cos() + b_prime * &phase.sin();
                    &modulus.powi(xi) * &x_pow(x, *power, prec) * osc
                }
            };
            acc = &acc + &term;
        }
        acc
    }

    /// The complex-form expression at any `x`, from the unsymmetrised
    /// coefficients.
    pub fn complex_formula_at(&self, x: i128) -> MpComplex {
        let prec = self.precision;
        let mut acc = MpComplex::from_real(self.particular.at(x, prec));
        for t in &self.complex_terms {
            let term = (&t.coeff * &t.root.powi(x as i64)).scale(&x_pow(x, t.power, prec));
            acc = &acc + &term;
        }
        acc
    }

    /// Copy with the first boundary coefficient shifted by `delta` (the
    /// particular coefficient when there is none). Used as a negative
    /// control for the verification suite.
    pub fn perturbed(&self, delta: f64) -> ClosedForm {
        let mut out = self.clone();
        let d = MpFloat::from_f64(delta, self.precision);
        match out.real_terms.first_mut() {
            Some(RealTerm::RealRoot { coeff, .. }) => *coeff = &*coeff + &d,
            Some(RealTerm::ConjugatePair { b, .. }) => *b = &*b + &d,
            None => {
                let shift = Rational::from_float(delta).unwrap_or_default();
                out.particular = match &out.particular {
                    Particular::Constant(c) => Particular::Constant(c + shift),
                    Particular::Linear(c) => Particular::Linear(c + shift),
                };
            }
        }
        if let Some(t) = out.complex_terms.first_mut() {
            t.coeff.re = &t.coeff.re + &d;
        }
        out
    }

    /// Human-readable form with `sig` significant digits, one term per line.
    pub fn pretty(&self, var_names: &[String], sig: usize) -> String {
        let num = |v: &MpFloat| v.to_decimal_string(sig);
        let mut terms: Vec<(bool, String)> = Vec::new();
        let c = self.particular.coeff();
        let neg = c.is_negative();
        let mag = format_rational(&c.abs());
        terms.push((
            neg,
            match self.particular {
                Particular::Constant(_) => mag,
                Particular::Linear(_) => format!("{mag}*x"),
            },
        ));
        let xpow = |u: u32| match u {
            0 => String::new(),
            1 => "x*".to_string(),
            _ => format!("x^{u}*"),
        };
        for t in &self.real_terms {
            match t {
                RealTerm::RealRoot {
                    lambda,
                    power,
                    coeff,
                } => {
                    let is_one = (lambda - &MpFloat::one(self.precision)).is_zero();
                    let body = if is_one {
                        format!("{}{}", num(&coeff.abs()), power_suffix(*power))
                    } else {
                        format!("{}*{}({})^x", num(&coeff.abs()), xpow(*power), num(lambda))
                    };
                    terms.push((coeff.is_negative(), body));
                }
                RealTerm::ConjugatePair {
                    modulus,
                    angle,
                    power,
                    b,
                    b_prime,
                } => {
                    let w = num(modulus);
                    let th = num(angle);
                    terms.push((
                        b.is_negative(),
                        format!("{}*{}{w}^x*cos({th}*x)", num(&b.abs()), xpow(*power)),
                    ));
                    terms.push((
                        b_prime.is_negative(),
                        format!("{}*{}{w}^x*sin({th}*x)", num(&b_prime.abs()), xpow(*power)),
                    ));
                }
            }
        }
        let mut out = String::from("rt(x) = ");
        for (i, (neg, body)) in terms.iter().enumerate() {
            match (i, neg) {
                (0, true) => out.push('-'),
                (0, false) => {}
                (_, true) => out.push_str("\n        - "),
                (_, false) => out.push_str("\n        + "),
            }
            out.push_str(body);
        }
        let _ = write!(
            out,
            "\n  for x = {} > 0, and rt = 0 otherwise",
            self.rdw.expr(var_names)
        );
        out
    }
}

fn power_suffix(u: u32) -> String {
    match u {
        0 => String::new(),
        1 => "*x".into(),
        _ => format!("*x^{u}"),
    }
}

mod repr {
    use super::*;

    #[derive(Serialize, Deserialize)]
    pub struct ComplexRepr {
        pub re: String,
        pub im: String,
    }

    #[derive(Serialize, Deserialize)]
    pub struct ComplexTermRepr {
        pub root: ComplexRepr,
        pub power: u32,
        pub coeff: ComplexRepr,
    }

    #[derive(Serialize, Deserialize)]
    #[serde(tag = "kind", rename_all = "snake_case")]
    pub enum RealTermRepr {
        RealRoot {
            lambda: String,
            power: u32,
            coeff: String,
        },
        ConjugatePair {
            modulus: String,
            angle: String,
            power: u32,
            b: String,
            b_prime: String,
        },
    }

    #[derive(Serialize, Deserialize)]
    pub struct ClosedFormRepr {
        pub particular: Particular,
        pub real_terms: Vec<RealTermRepr>,
        pub complex_terms: Vec<ComplexTermRepr>,
        pub rdw: RdwMap,
        pub precision_digits: u32,
    }
}

use repr::*;

impl Serialize for ClosedForm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let sig = self.precision.digits() as usize;
        let f = |v: &MpFloat| v.to_sci_string(sig);
        let c = |z: &MpComplex| ComplexRepr {
            re: f(&z.re),
            im: f(&z.im),
        };
        ClosedFormRepr {
            particular: self.particular.clone(),
            real_terms: self
                .real_terms
                .iter()
                .map(|t| match t {
                    RealTerm::RealRoot {
                        lambda,
                        power,
                        coeff,
                    } => RealTermRepr::RealRoot {
                        lambda: f(lambda),
                        power: *power,
                        coeff: f(coeff),
                    },
                    RealTerm::ConjugatePair {
                        modulus,
                        angle,
                        power,
                        b,
                        b_prime,
                    } => RealTermRepr::ConjugatePair {
                        modulus: f(modulus),
                        angle: f(angle),
                        power: *power,
                        b: f(b),
                        b_prime: f(b_prime),
                    },
                })
                .collect(),
            complex_terms: self
                .complex_terms
                .iter()
                .map(|t| ComplexTermRepr {
                    root: c(&t.root),
                    power: t.power,
                    coeff: c(&t.coeff),
                })
                .collect(),
            rdw: self.rdw.clone(),
            precision_digits: self.precision.digits(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ClosedForm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let r = ClosedFormRepr::deserialize(d)?;
        let prec = Precision::new(r.precision_digits);
        let f = |s: &str| {
            MpFloat::parse_decimal(s, prec).ok_or_else(|| D::Error::custom(format!("bad number `{s}`")))
        };
        let c = |z: &ComplexRepr| Ok::<_, D::Error>(MpComplex::new(f(&z.re)?, f(&z.im)?));
        let real_terms = r
            .real_terms
            .iter()
            .map(|t| {
                Ok(match t {
                    RealTermRepr::RealRoot {
                        lambda,
                        power,
                        coeff,
                    } => RealTerm::RealRoot {
                        lambda: f(lambda)?,
                        power: *power,
                        coeff: f(coeff)?,
                    },
                    RealTermRepr::ConjugatePair {
                        modulus,
                        angle,
                        power,
                        b,
                        b_prime,
                    } => RealTerm::ConjugatePair {
                        modulus: f(modulus)?,
                        angle: f(angle)?,
                        power: *power,
                        b: f(b)?,
                        b_prime: f(b_prime)?,
                    },
                })
            })
            .collect::<Result<_, D::Error>>()?;
        let complex_terms = r
            .complex_terms
            .iter()
            .map(|t| {
                Ok(ComplexTerm {
                    root: c(&t.root)?,
                    power: t.power,
                    coeff: c(&t.coeff)?,
                })
            })
            .collect::<Result<_, D::Error>>()?;
        Ok(ClosedForm {
            particular: r.particular,
            complex_terms,
            real_terms,
            rdw: r.rdw,
            precision: prec,
        })
    }
}
