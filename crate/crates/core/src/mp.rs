//! Multi-precision real and complex numbers.
//!
//! Thin value types over [`astro_float::BigFloat`]. Every value carries its
//! own mantissa length and binary operations round to the larger of the two
//! operand precisions, so a computation seeded at one [`Precision`] stays at
//! that precision without threading a context through every call.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use crate::rational::Rational;

const RM: RoundingMode = RoundingMode::ToEven;

/// Extra decimal digits carried internally on top of the requested precision.
const GUARD_DIGITS: u32 = 20;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("astro-float constant cache"));
}

fn with_consts<T>(f: impl FnOnce(&mut Consts) -> T) -> T {
    CONSTS.with(|cc| f(&mut cc.borrow_mut()))
}

/// Working precision, in decimal digits. All numeric tolerances of the
/// exact-runtime pipeline derive from this one number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct Precision {
    digits: u32,
}

impl Precision {
    pub const DEFAULT_DIGITS: u32 = 50;
    pub const MIN_DIGITS: u32 = 10;

    pub fn new(digits: u32) -> Self {
        Precision {
            digits: digits.max(Self::MIN_DIGITS),
        }
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    /// Mantissa length in bits, including guard digits, rounded up to whole
    /// 64-bit words.
    pub fn bits(&self) -> usize {
        let digits = (self.digits + GUARD_DIGITS) as f64;
        let bits = (digits * std::f64::consts::LOG2_10).ceil() as usize;
        bits.div_ceil(64) * 64
    }

    /// `10^-(digits/2)`: bound on equation and polynomial residuals.
    pub fn residual_tolerance(&self) -> MpFloat {
        MpFloat::pow10(-((self.digits / 2) as i64), *self)
    }

    /// `10^-(digits/3)`: distance below which roots are merged into a cluster.
    pub fn cluster_tolerance(&self) -> MpFloat {
        MpFloat::pow10(-((self.digits / 3) as i64), *self)
    }

    /// Smallest relative step that is still meaningful at this precision.
    pub fn epsilon(&self) -> MpFloat {
        let e = 2 - self.bits() as i64;
        MpFloat::from_i64(2, *self).powi(e)
    }
}

impl Default for Precision {
    fn default() -> Self {
        Precision::new(Self::DEFAULT_DIGITS)
    }
}

/// Arbitrary-precision real number.
#[derive(Clone)]
pub struct MpFloat(BigFloat);

impl MpFloat {
    fn wrap(v: BigFloat) -> Self {
        debug_assert!(!v.is_nan(), "multi-precision operation produced NaN");
        MpFloat(v)
    }

    fn p(&self) -> usize {
        self.0.mantissa_max_bit_len().unwrap_or(64)
    }

    fn p2(&self, other: &Self) -> usize {
        self.p().max(other.p())
    }

    pub fn zero(prec: Precision) -> Self {
        MpFloat(BigFloat::from_i64(0, prec.bits()))
    }

    pub fn one(prec: Precision) -> Self {
        MpFloat(BigFloat::from_i64(1, prec.bits()))
    }

    pub fn from_i64(v: i64, prec: Precision) -> Self {
        MpFloat(BigFloat::from_i64(v, prec.bits()))
    }

    pub fn from_f64(v: f64, prec: Precision) -> Self {
        MpFloat(BigFloat::from_f64(v, prec.bits()))
    }

    pub fn from_bigint(v: &BigInt, prec: Precision) -> Self {
        if let Some(small) = v.to_i128() {
            return MpFloat(BigFloat::from_i128(small, prec.bits()));
        }
        let s = v.to_string();
        with_consts(|cc| MpFloat::wrap(BigFloat::parse(&s, Radix::Dec, prec.bits(), RM, cc)))
    }

    pub fn from_rational(q: &Rational, prec: Precision) -> Self {
        let n = Self::from_bigint(q.numer(), prec);
        if q.denom().is_zero() {
            unreachable!("rational with zero denominator");
        }
        let d = Self::from_bigint(q.denom(), prec);
        &n / &d
    }

    /// Parses a decimal literal such as `-1.25e-3`.
    pub fn parse_decimal(s: &str, prec: Precision) -> Option<Self> {
        let t = s.trim();
        if t.is_empty()
            || !t
                .chars()
                .all(|c| c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E'))
        {
            return None;
        }
        let v = with_consts(|cc| BigFloat::parse(t, Radix::Dec, prec.bits(), RM, cc));
        if v.is_nan() || v.is_inf() {
            None
        } else {
            Some(MpFloat(v))
        }
    }

    /// `10^e` at the given precision.
    pub fn pow10(e: i64, prec: Precision) -> Self {
        MpFloat::from_i64(10, prec).powi(e)
    }

    /// Zero carrying the same precision as `self`.
    pub fn zero_like(&self) -> Self {
        MpFloat(BigFloat::from_i64(0, self.p()))
    }

    pub fn one_like(&self) -> Self {
        MpFloat(BigFloat::from_i64(1, self.p()))
    }

    pub fn precision_bits(&self) -> usize {
        self.p()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative() && !self.0.is_zero()
    }

    pub fn abs(&self) -> Self {
        MpFloat(self.0.abs())
    }

    pub fn sqrt(&self) -> Self {
        MpFloat::wrap(self.0.sqrt(self.p(), RM))
    }

    pub fn recip(&self) -> Self {
        MpFloat::wrap(self.0.reciprocal(self.p(), RM))
    }

    /// Integer power; negative exponents go through the reciprocal.
    pub fn powi(&self, e: i64) -> Self {
        let p = self.p();
        let pos = MpFloat::wrap(self.0.powi(e.unsigned_abs() as usize, p, RM));
        if e < 0 {
            pos.recip()
        } else {
            pos
        }
    }

    pub fn sin(&self) -> Self {
        with_consts(|cc| MpFloat::wrap(self.0.sin(self.p(), RM, cc)))
    }

    pub fn cos(&self) -> Self {
        with_consts(|cc| MpFloat::wrap(self.0.cos(self.p(), RM, cc)))
    }

    pub fn pi(prec: Precision) -> Self {
        with_consts(|cc| MpFloat(cc.pi(prec.bits(), RM)))
    }

    /// Four-quadrant arctangent of `y / x`, in `(-pi, pi]`.
    pub fn atan2(y: &Self, x: &Self) -> Self {
        let p = y.p2(x);
        let prec_bits = p;
        let pi = with_consts(|cc| MpFloat(cc.pi(prec_bits, RM)));
        if x.is_zero() {
            if y.is_zero() {
                return MpFloat(BigFloat::from_i64(0, p));
            }
            let half = MpFloat(pi.0.div(&BigFloat::from_i64(2, p), p, RM));
            return if y.is_negative() { -half } else { half };
        }
        let ratio = y / x;
        let base = with_consts(|cc| MpFloat::wrap(ratio.0.atan(p, RM, cc)));
        if !x.is_negative() {
            base
        } else if y.is_negative() {
            &base - &pi
        } else {
            &base + &pi
        }
    }

    pub fn max(&self, other: &Self) -> Self {
        if self >= other {
            self.clone()
        } else {
            other.clone()
        }
    }

    /// Nearest `f64` (via decimal text, adequate for display and statistics).
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        self.to_sci_string(20).parse().unwrap_or(f64::NAN)
    }

    /// Scientific notation with `sig` significant digits, e.g. `-3.46551e-1`.
    pub fn to_sci_string(&self, sig: usize) -> String {
        let (neg, digits, exp) = self.decimal_digits(sig);
        let mut s = String::new();
        if neg {
            s.push('-');
        }
        s.push_str(&digits[..1]);
        if digits.len() > 1 {
            s.push('.');
            s.push_str(&digits[1..]);
        }
        s.push_str(&format!("e{exp}"));
        s
    }

    /// Decimal text with `sig` significant digits, trailing zeros removed.
    /// Plain notation is used for moderate magnitudes, scientific otherwise.
    pub fn to_decimal_string(&self, sig: usize) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let (neg, digits, exp) = self.decimal_digits(sig);
        let digits = digits.trim_end_matches('0');
        let digits = if digits.is_empty() { "0" } else { digits };
        let mut s = String::new();
        if neg {
            s.push('-');
        }
        if !(-7..=20).contains(&exp) {
            s.push_str(&digits[..1]);
            if digits.len() > 1 {
                s.push('.');
                s.push_str(&digits[1..]);
            }
            s.push_str(&format!("e{exp}"));
            return s;
        }
        if exp < 0 {
            s.push_str("0.");
            for _ in 0..(-exp - 1) {
                s.push('0');
            }
            s.push_str(digits);
        } else {
            let int_len = exp as usize + 1;
            if digits.len() <= int_len {
                s.push_str(digits);
                for _ in digits.len()..int_len {
                    s.push('0');
                }
            } else {
                s.push_str(&digits[..int_len]);
                s.push('.');
                s.push_str(&digits[int_len..]);
            }
        }
        s
    }

    /// Sign, exactly `sig` rounded significant digits, and the decimal
    /// exponent of the first digit.
    fn decimal_digits(&self, sig: usize) -> (bool, String, i64) {
        let sig = sig.max(1);
        if self.is_zero() {
            return (false, "0".repeat(sig), 0);
        }
        let text = with_consts(|cc| self.0.format(Radix::Dec, RM, cc)).unwrap_or_default();
        let (mant, exp) = match text.split_once('e') {
            Some((m, e)) => (m, e.parse::<i64>().unwrap_or(0)),
            None => (text.as_str(), 0),
        };
        let neg = mant.starts_with('-');
        let mant = mant.trim_start_matches(['-', '+']);
        let (int_part, frac_part) = mant.split_once('.').unwrap_or((mant, ""));
        let mut all: Vec<u8> = int_part
            .bytes()
            .chain(frac_part.bytes())
            .map(|b| b - b'0')
            .collect();
        // Exponent of the first digit of `all`.
        let mut first_exp = exp + int_part.len() as i64 - 1;
        while all.len() > 1 && all[0] == 0 {
            all.remove(0);
            first_exp -= 1;
        }
        if all.len() > sig {
            let round_up = all[sig] >= 5;
            all.truncate(sig);
            if round_up {
                let mut i = sig;
                loop {
                    if i == 0 {
                        all.insert(0, 1);
                        all.truncate(sig);
                        first_exp += 1;
                        break;
                    }
                    i -= 1;
                    if all[i] == 9 {
                        all[i] = 0;
                    } else {
                        all[i] += 1;
                        break;
                    }
                }
            }
        }
        while all.len() < sig {
            all.push(0);
        }
        let digits: String = all.iter().map(|d| char::from(b'0' + d)).collect();
        (neg, digits, first_exp)
    }
}

impl fmt::Debug for MpFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_sci_string(30))
    }
}

impl fmt::Display for MpFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sig = f.precision().unwrap_or(6);
        f.write_str(&self.to_decimal_string(sig))
    }
}

impl PartialEq for MpFloat {
    fn eq(&self, other: &Self) -> bool {
        self.partial_cmp(other) == Some(Ordering::Equal)
    }
}

impl PartialOrd for MpFloat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.cmp(&other.0).map(|c| c.cmp(&0))
    }
}

macro_rules! bin_op {
    ($tr:ident, $method:ident, $inner:ident) => {
        impl $tr<&MpFloat> for &MpFloat {
            type Output = MpFloat;
            fn $method(self, rhs: &MpFloat) -> MpFloat {
                MpFloat::wrap(self.0.$inner(&rhs.0, self.p2(rhs), RM))
            }
        }
        impl $tr<MpFloat> for MpFloat {
            type Output = MpFloat;
            fn $method(self, rhs: MpFloat) -> MpFloat {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&MpFloat> for MpFloat {
            type Output = MpFloat;
            fn $method(self, rhs: &MpFloat) -> MpFloat {
                (&self).$method(rhs)
            }
        }
        impl $tr<MpFloat> for &MpFloat {
            type Output = MpFloat;
            fn $method(self, rhs: MpFloat) -> MpFloat {
                self.$method(&rhs)
            }
        }
    };
}

bin_op!(Add, add, add);
bin_op!(Sub, sub, sub);
bin_op!(Mul, mul, mul);
bin_op!(Div, div, div);

impl Neg for MpFloat {
    type Output = MpFloat;
    fn neg(self) -> MpFloat {
        MpFloat(self.0.neg())
    }
}

impl Neg for &MpFloat {
    type Output = MpFloat;
    fn neg(self) -> MpFloat {
        MpFloat(self.0.clone().neg())
    }
}

/// Arbitrary-precision complex number in Cartesian form.
#[derive(Clone, Debug, PartialEq)]
pub struct MpComplex {
    pub re: MpFloat,
    pub im: MpFloat,
}

impl MpComplex {
    pub fn new(re: MpFloat, im: MpFloat) -> Self {
        MpComplex { re, im }
    }

    pub fn zero(prec: Precision) -> Self {
        MpComplex::new(MpFloat::zero(prec), MpFloat::zero(prec))
    }

    pub fn one(prec: Precision) -> Self {
        MpComplex::new(MpFloat::one(prec), MpFloat::zero(prec))
    }

    pub fn from_real(re: MpFloat) -> Self {
        let prec_zero = MpFloat(BigFloat::from_i64(0, re.p()));
        MpComplex::new(re, prec_zero)
    }

    pub fn from_f64(re: f64, im: f64, prec: Precision) -> Self {
        MpComplex::new(MpFloat::from_f64(re, prec), MpFloat::from_f64(im, prec))
    }

    pub fn conj(&self) -> Self {
        MpComplex::new(self.re.clone(), -&self.im)
    }

    pub fn norm_sqr(&self) -> MpFloat {
        &self.re * &self.re + &self.im * &self.im
    }

    /// Modulus `|z|`.
    pub fn abs(&self) -> MpFloat {
        self.norm_sqr().sqrt()
    }

    /// Argument in `(-pi, pi]`.
    pub fn arg(&self) -> MpFloat {
        MpFloat::atan2(&self.im, &self.re)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn scale(&self, s: &MpFloat) -> Self {
        MpComplex::new(&self.re * s, &self.im * s)
    }

    pub fn recip(&self) -> Self {
        let d = self.norm_sqr();
        MpComplex::new(&self.re / &d, -(&self.im / &d))
    }

    /// Integer power by repeated squaring; negative exponents invert first.
    pub fn powi(&self, e: i64) -> Self {
        let mut base = if e < 0 { self.recip() } else { self.clone() };
        let mut n = e.unsigned_abs();
        let mut acc = MpComplex::from_real(MpFloat(BigFloat::from_i64(1, self.re.p())));
        while n > 0 {
            if n & 1 == 1 {
                acc = &acc * &base;
            }
            n >>= 1;
            if n > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn to_f64(&self) -> num_complex::Complex64 {
        num_complex::Complex64::new(self.re.to_f64(), self.im.to_f64())
    }
}

impl Add<&MpComplex> for &MpComplex {
    type Output = MpComplex;
    fn add(self, rhs: &MpComplex) -> MpComplex {
        MpComplex::new(&self.re + &rhs.re, &self.im + &rhs.im)
    }
}

impl Sub<&MpComplex> for &MpComplex {
    type Output = MpComplex;
    fn sub(self, rhs: &MpComplex) -> MpComplex {
        MpComplex::new(&self.re - &rhs.re, &self.im - &rhs.im)
    }
}

impl Mul<&MpComplex> for &MpComplex {
    type Output = MpComplex;
    fn mul(self, rhs: &MpComplex) -> MpComplex {
        MpComplex::new(
            &self.re * &rhs.re - &self.im * &rhs.im,
            &self.re * &rhs.im + &self.im * &rhs.re,
        )
    }
}

impl Div<&MpComplex> for &MpComplex {
    type Output = MpComplex;
    fn div(self, rhs: &MpComplex) -> MpComplex {
        let d = rhs.norm_sqr();
        let re = &self.re * &rhs.re + &self.im * &rhs.im;
        let im = &self.im * &rhs.re - &self.re * &rhs.im;
        MpComplex::new(&re / &d, &im / &d)
    }
}

impl Neg for &MpComplex {
    type Output = MpComplex;
    fn neg(self) -> MpComplex {
        MpComplex::new(-&self.re, -&self.im)
    }
}

macro_rules! owned_complex_op {
    ($tr:ident, $method:ident) => {
        impl $tr<MpComplex> for MpComplex {
            type Output = MpComplex;
            fn $method(self, rhs: MpComplex) -> MpComplex {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&MpComplex> for MpComplex {
            type Output = MpComplex;
            fn $method(self, rhs: &MpComplex) -> MpComplex {
                (&self).$method(rhs)
            }
        }
    };
}

owned_complex_op!(Add, add);
owned_complex_op!(Sub, sub);
owned_complex_op!(Mul, mul);
owned_complex_op!(Div, div);

#[cfg(test)]
mod tests {
    use super::*;

    fn prec() -> Precision {
        Precision::new(50)
    }

    #[test]
    fn sqrt_two_to_fifty_digits() {
        let two = MpFloat::from_i64(2, prec());
        let s = two.sqrt().to_decimal_string(50);
        assert_eq!(s, "1.4142135623730950488016887242096980785696718753769");
    }

    #[test]
    fn rational_conversion_is_accurate() {
        let q = Rational::new(22.into(), 9.into());
        let v = MpFloat::from_rational(&q, prec());
        assert_eq!(v.to_decimal_string(12), "2.44444444444");
    }

    #[test]
    fn decimal_rounding_carries() {
        let v = MpFloat::parse_decimal("9.9996", prec()).unwrap();
        assert_eq!(v.to_decimal_string(4), "10");
        assert_eq!(v.to_sci_string(3), "1.00e1");
        let w = MpFloat::parse_decimal("-0.000123456", prec()).unwrap();
        assert_eq!(w.to_decimal_string(3), "-0.000123");
    }

    #[test]
    fn atan2_quadrants() {
        let p = prec();
        let one = MpFloat::one(p);
        let m1 = -MpFloat::one(p);
        let pi = MpFloat::pi(p);
        let q2 = MpFloat::atan2(&one, &m1);
        let expect = &(&pi * &MpFloat::from_i64(3, p)) / &MpFloat::from_i64(4, p);
        assert!((&q2 - &expect).abs() < MpFloat::pow10(-45, p));
        let q3 = MpFloat::atan2(&m1, &m1);
        assert!((&q3 + &expect).abs() < MpFloat::pow10(-45, p));
    }

    #[test]
    fn complex_power_matches_polar_form() {
        let p = prec();
        // (-1 + sqrt(3) i) / 5 = 2/5 * exp(2 pi i / 3)
        let three = MpFloat::from_i64(3, p);
        let five = MpFloat::from_i64(5, p);
        let z = MpComplex::new(-(&MpFloat::one(p) / &five), &three.sqrt() / &five);
        let z7 = z.powi(7);
        let w = MpFloat::from_rational(&Rational::new(2.into(), 5.into()), p).powi(7);
        let theta = &(&MpFloat::pi(p) * &MpFloat::from_i64(14, p)) / &three;
        assert!((&z7.re - &(&w * &theta.cos())).abs() < MpFloat::pow10(-45, p));
        assert!((&z7.im - &(&w * &theta.sin())).abs() < MpFloat::pow10(-45, p));
        let back = z.powi(-3) * z.powi(3);
        assert!((&back.re - &MpFloat::one(p)).abs() < MpFloat::pow10(-45, p));
    }

    #[test]
    fn tolerances_follow_digits() {
        let p = Precision::new(50);
        assert_eq!(p.residual_tolerance().to_sci_string(2), "1.0e-25");
        assert_eq!(p.cluster_tolerance().to_sci_string(2), "1.0e-16");
        assert!(p.bits() >= 232);
    }
}
