//! Characteristic polynomial of the runtime recurrence.

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::mp::{MpComplex, MpFloat, Precision};
use crate::program::RandomWalkProgram;
use crate::rational::{format_rational, int, Rational};

/// Polynomial with exact rational coefficients, `coeffs[i]` multiplying
/// `lambda^i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharPoly {
    #[serde(with = "rational_vec")]
    coeffs: Vec<Rational>,
}

mod rational_vec {
    use super::*;
    use crate::rational::parse_rational;
    use serde::{de::Error, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(format_rational))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| parse_rational(s).ok_or_else(|| D::Error::custom(format!("bad rational `{s}`"))))
            .collect()
    }
}

/// `chi(lambda) = sum_j p_j lambda^(k+j) - lambda^k`.
pub fn characteristic_polynomial(rw: &RandomWalkProgram) -> CharPoly {
    let k = rw.k() as i64;
    let mut coeffs: Vec<Rational> = rw.offsets().map(|(_, p)| p.clone()).collect();
    coeffs[k as usize] -= int(1);
    CharPoly::new(coeffs)
}

impl CharPoly {
    /// Trailing zero coefficients of the highest powers are dropped.
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Rational::zero());
        }
        CharPoly { coeffs }
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        self.coeffs
            .iter()
            .rev()
            .fold(Rational::zero(), |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> CharPoly {
        if self.coeffs.len() == 1 {
            return CharPoly::new(vec![Rational::zero()]);
        }
        CharPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * int(i as i64))
                .collect(),
        )
    }

    /// Synthetic division by `lambda - 1`; `None` unless 1 is a root.
    pub fn deflate_one(&self) -> Option<CharPoly> {
        if self.degree() == 0 || !self.eval(&Rational::one()).is_zero() {
            return None;
        }
        let n = self.degree();
        let mut q = vec![Rational::zero(); n];
        let mut carry = Rational::zero();
        for i in (1..=n).rev() {
            carry = &carry + &self.coeffs[i];
            q[i - 1] = carry.clone();
        }
        Some(CharPoly::new(q))
    }

    /// Division by `lambda` while the constant term vanishes; returns the
    /// quotient and how many times 0 is a root.
    pub fn strip_zero_roots(&self) -> (CharPoly, usize) {
        let zeros = self
            .coeffs
            .iter()
            .take_while(|c| c.is_zero())
            .count()
            .min(self.degree());
        (CharPoly::new(self.coeffs[zeros..].to_vec()), zeros)
    }

    pub fn to_mp(&self, prec: Precision) -> MpPoly {
        MpPoly {
            coeffs: self.coeffs.iter().map(|c| MpFloat::from_rational(c, prec)).collect(),
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coeffs
            .iter()
            .map(|c| MpFloat::from_rational(c, Precision::new(20)).to_f64())
            .collect()
    }
}

impl fmt::Display for CharPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            if first {
                if c.is_negative() {
                    f.write_str("-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let mag = format_rational(&c.abs());
            match i {
                0 => write!(f, "{mag}")?,
                1 => write!(f, "{mag}*l")?,
                _ => write!(f, "{mag}*l^{i}")?,
            }
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

/// Real-coefficient polynomial at working precision.
#[derive(Debug, Clone)]
pub struct MpPoly {
    pub coeffs: Vec<MpFloat>,
}

impl MpPoly {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Value and first derivative at `z` by Horner's scheme.
    pub fn eval_d(&self, z: &MpComplex) -> (MpComplex, MpComplex) {
        let n = self.degree();
        let mut p = MpComplex::from_real(self.coeffs[n].clone());
        let mut d = MpComplex::from_real(MpFloat::zero_like(&self.coeffs[n]));
        for c in self.coeffs[..n].iter().rev() {
            d = &(&d * z) + &p;
            p = &p * z;
            p.re = &p.re + c;
        }
        (p, d)
    }

    pub fn eval(&self, z: &MpComplex) -> MpComplex {
        let n = self.degree();
        let mut p = MpComplex::from_real(self.coeffs[n].clone());
        for c in self.coeffs[..n].iter().rev() {
            p = &p * z;
            p.re = &p.re + c;
        }
        p
    }

    /// `sum |c_i| |z|^i`, the natural scale of `|p(z)|` under rounding.
    pub fn magnitude(&self, z: &MpComplex) -> MpFloat {
        let r = z.abs();
        let n = self.degree();
        let mut acc = self.coeffs[n].abs();
        for c in self.coeffs[..n].iter().rev() {
            acc = &(&acc * &r) + &c.abs();
        }
        acc
    }
}
