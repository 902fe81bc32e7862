//! Exact coefficient arithmetic.
//!
//! [`Rational`] is an arbitrary-precision reduced fraction. [`GaussRational`]
//! adjoins `i`, and [`Scalar`] additionally carries an integer power of
//! `sqrt(pi)`, which is how Gaussian moment constants stay exact. Addition of
//! two nonzero scalars with different `sqrt(pi)` exponents is an error rather
//! than a silent coercion: a final coefficient is rational exactly when its
//! exponent is zero and its imaginary part vanishes.
//!
//! [`QuadExt`] is the extension `a + b*sqrt(d)` for `d` in {2, 3}, used to
//! evaluate trigonometric monomials exactly at `pi/4` and `pi/3`.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use dashu_int::{IBig, UBig};
use dashu_ratio::RBig;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Reduced fraction with arbitrary-precision numerator and denominator.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Rational(RBig);

impl Rational {
    pub const ZERO: Rational = Rational(RBig::ZERO);
    pub const ONE: Rational = Rational(RBig::ONE);

    pub fn new(numerator: i64, denominator: i64) -> Result<Self> {
        if denominator == 0 {
            return Err(Error::DivisionByZero);
        }
        Ok(Rational(RBig::from_parts_signed(
            IBig::from(numerator),
            IBig::from(denominator),
        )))
    }

    pub fn from_big(numerator: IBig, denominator: IBig) -> Result<Self> {
        if denominator == IBig::ZERO {
            return Err(Error::DivisionByZero);
        }
        Ok(Rational(RBig::from_parts_signed(numerator, denominator)))
    }

    pub fn integer(n: i64) -> Self {
        Rational(RBig::from(n))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_int()
    }

    pub fn numerator(&self) -> &IBig {
        self.0.numerator()
    }

    pub fn denominator(&self) -> &UBig {
        self.0.denominator()
    }

    pub fn checked_div(&self, rhs: &Rational) -> Result<Rational> {
        if rhs.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Rational(&self.0 / &rhs.0))
    }

    pub fn recip(&self) -> Result<Rational> {
        Rational::ONE.checked_div(self)
    }

    /// Integer power; negative exponents invert.
    pub fn pow(&self, exp: i32) -> Result<Rational> {
        let mut base = if exp < 0 { self.recip()? } else { self.clone() };
        let mut e = exp.unsigned_abs();
        let mut acc = Rational::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        Ok(acc)
    }

    pub fn signum(&self) -> i32 {
        use dashu_int::Sign;
        if self.is_zero() {
            0
        } else if self.0.numerator().sign() == Sign::Negative {
            -1
        } else {
            1
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().value()
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denominator().is_one() {
            write!(f, "{}", self.0.numerator())
        } else {
            write!(f, "{}/{}", self.0.numerator(), self.0.denominator())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parse = |t: &str| {
            IBig::from_str(t.trim()).map_err(|e| Error::Parse(format!("{t:?}: {e}")))
        };
        match s.split_once('/') {
            Some((n, d)) => Rational::from_big(parse(n)?, parse(d)?),
            None => Ok(Rational(RBig::from(parse(s)?))),
        }
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::integer(n)
    }
}

macro_rules! forward_binop {
    ($ty:ty, $tr:ident, $method:ident, $body:expr) => {
        impl $tr<&$ty> for &$ty {
            type Output = $ty;
            fn $method(self, rhs: &$ty) -> $ty {
                let f: fn(&$ty, &$ty) -> $ty = $body;
                f(self, rhs)
            }
        }
        impl $tr<$ty> for $ty {
            type Output = $ty;
            fn $method(self, rhs: $ty) -> $ty {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&$ty> for $ty {
            type Output = $ty;
            fn $method(self, rhs: &$ty) -> $ty {
                (&self).$method(rhs)
            }
        }
    };
}

forward_binop!(Rational, Add, add, |a, b| Rational(&a.0 + &b.0));
forward_binop!(Rational, Sub, sub, |a, b| Rational(&a.0 - &b.0));
forward_binop!(Rational, Mul, mul, |a, b| Rational(&a.0 * &b.0));

/// Panics on a zero divisor; use [`Rational::checked_div`] where that can happen.
impl Div<&Rational> for &Rational {
    type Output = Rational;
    fn div(self, rhs: &Rational) -> Rational {
        self.checked_div(rhs).expect("rational division by zero")
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        self.0 += &rhs.0;
    }
}

impl SubAssign<&Rational> for Rational {
    fn sub_assign(&mut self, rhs: &Rational) {
        self.0 -= &rhs.0;
    }
}

/// `re + i*im` with rational parts.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct GaussRational {
    pub re: Rational,
    pub im: Rational,
}

impl GaussRational {
    pub const ZERO: GaussRational = GaussRational { re: Rational::ZERO, im: Rational::ZERO };
    pub const ONE: GaussRational = GaussRational { re: Rational::ONE, im: Rational::ZERO };

    pub fn new(re: Rational, im: Rational) -> Self {
        GaussRational { re, im }
    }

    pub fn real(re: Rational) -> Self {
        GaussRational { re, im: Rational::ZERO }
    }

    pub fn imag(im: Rational) -> Self {
        GaussRational { re: Rational::ZERO, im }
    }

    pub fn i() -> Self {
        GaussRational::imag(Rational::ONE)
    }

    pub fn int(n: i64) -> Self {
        GaussRational::real(Rational::integer(n))
    }

    /// `(re_num/re_den) + i*(im_num/im_den)`; panics on a zero denominator.
    pub fn ratio(re_num: i64, re_den: i64, im_num: i64, im_den: i64) -> Self {
        GaussRational {
            re: Rational::new(re_num, re_den).expect("nonzero denominator"),
            im: Rational::new(im_num, im_den).expect("nonzero denominator"),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        GaussRational { re: self.re.clone(), im: -&self.im }
    }

    pub fn scale(&self, k: &Rational) -> Self {
        GaussRational { re: &self.re * k, im: &self.im * k }
    }

    pub fn scale_int(&self, k: i64) -> Self {
        match k {
            1 => self.clone(),
            -1 => -self,
            _ => self.scale(&Rational::integer(k)),
        }
    }

    /// Multiplication by `i`.
    pub fn times_i(&self) -> Self {
        GaussRational { re: -&self.im, im: self.re.clone() }
    }

    pub fn norm_sqr(&self) -> Rational {
        &(&self.re * &self.re) + &(&self.im * &self.im)
    }

    pub fn recip(&self) -> Result<Self> {
        let n = self.norm_sqr();
        if n.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let inv = n.recip()?;
        Ok(self.conj().scale(&inv))
    }

    pub fn checked_div(&self, rhs: &GaussRational) -> Result<Self> {
        Ok(self * &rhs.recip()?)
    }

    pub fn to_complex(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }
}

impl fmt::Display for GaussRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => write!(f, "{}", self.re),
            (true, false) => write!(f, "{}*i", self.im),
            (false, false) => write!(f, "({} + {}*i)", self.re, self.im),
        }
    }
}

impl fmt::Debug for GaussRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Add<&GaussRational> for &GaussRational {
    type Output = GaussRational;
    fn add(self, rhs: &GaussRational) -> GaussRational {
        GaussRational { re: &self.re + &rhs.re, im: &self.im + &rhs.im }
    }
}

impl Sub<&GaussRational> for &GaussRational {
    type Output = GaussRational;
    fn sub(self, rhs: &GaussRational) -> GaussRational {
        GaussRational { re: &self.re - &rhs.re, im: &self.im - &rhs.im }
    }
}

impl Mul<&GaussRational> for &GaussRational {
    type Output = GaussRational;
    fn mul(self, rhs: &GaussRational) -> GaussRational {
        // most coefficients are purely real or purely imaginary
        match (self.im.is_zero(), rhs.im.is_zero()) {
            (true, true) => GaussRational::real(&self.re * &rhs.re),
            (true, false) => GaussRational { re: &self.re * &rhs.re, im: &self.re * &rhs.im },
            (false, true) => GaussRational { re: &self.re * &rhs.re, im: &self.im * &rhs.re },
            (false, false) => {
                if self.re.is_zero() && rhs.re.is_zero() {
                    GaussRational::real(-(&self.im * &rhs.im))
                } else {
                    GaussRational {
                        re: &(&self.re * &rhs.re) - &(&self.im * &rhs.im),
                        im: &(&self.re * &rhs.im) + &(&self.im * &rhs.re),
                    }
                }
            }
        }
    }
}

impl Neg for &GaussRational {
    type Output = GaussRational;
    fn neg(self) -> GaussRational {
        GaussRational { re: -&self.re, im: -&self.im }
    }
}

impl Neg for GaussRational {
    type Output = GaussRational;
    fn neg(self) -> GaussRational {
        GaussRational { re: -self.re, im: -self.im }
    }
}

impl AddAssign<&GaussRational> for GaussRational {
    fn add_assign(&mut self, rhs: &GaussRational) {
        if !rhs.re.is_zero() {
            self.re += &rhs.re;
        }
        if !rhs.im.is_zero() {
            self.im += &rhs.im;
        }
    }
}

impl From<Rational> for GaussRational {
    fn from(r: Rational) -> Self {
        GaussRational::real(r)
    }
}

/// A Gaussian rational times `sqrt(pi)^sqrt_pi_exp`.
#[derive(Clone, Default, Serialize, Deserialize)]
pub struct Scalar {
    pub value: GaussRational,
    pub sqrt_pi_exp: i32,
}

impl Scalar {
    pub fn new(value: GaussRational, sqrt_pi_exp: i32) -> Self {
        Scalar { value, sqrt_pi_exp }
    }

    pub fn rational(r: Rational) -> Self {
        Scalar { value: GaussRational::real(r), sqrt_pi_exp: 0 }
    }

    pub fn zero() -> Self {
        Scalar::default()
    }

    pub fn one() -> Self {
        Scalar::rational(Rational::ONE)
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    /// True when the value is a real rational with no `sqrt(pi)` factor.
    pub fn is_rational(&self) -> bool {
        self.is_zero() || (self.value.is_real() && self.sqrt_pi_exp == 0)
    }

    pub fn checked_add(&self, rhs: &Scalar) -> Result<Scalar> {
        if rhs.is_zero() {
            return Ok(self.clone());
        }
        if self.is_zero() {
            return Ok(rhs.clone());
        }
        if self.sqrt_pi_exp != rhs.sqrt_pi_exp {
            return Err(Error::PiExponentMismatch {
                left: self.sqrt_pi_exp,
                right: rhs.sqrt_pi_exp,
            });
        }
        Ok(Scalar { value: &self.value + &rhs.value, sqrt_pi_exp: self.sqrt_pi_exp })
    }

    pub fn checked_sub(&self, rhs: &Scalar) -> Result<Scalar> {
        self.checked_add(&-rhs)
    }

    pub fn checked_div(&self, rhs: &Scalar) -> Result<Scalar> {
        Ok(Scalar {
            value: self.value.checked_div(&rhs.value)?,
            sqrt_pi_exp: self.sqrt_pi_exp - rhs.sqrt_pi_exp,
        })
    }

    pub fn to_complex(&self) -> (f64, f64) {
        let f = std::f64::consts::PI.sqrt().powi(self.sqrt_pi_exp);
        let (re, im) = self.value.to_complex();
        (re * f, im * f)
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        if self.is_zero() || other.is_zero() {
            return self.is_zero() && other.is_zero();
        }
        self.sqrt_pi_exp == other.sqrt_pi_exp && self.value == other.value
    }
}

impl Eq for Scalar {}

impl Mul<&Scalar> for &Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &Scalar) -> Scalar {
        Scalar { value: &self.value * &rhs.value, sqrt_pi_exp: self.sqrt_pi_exp + rhs.sqrt_pi_exp }
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar { value: -&self.value, sqrt_pi_exp: self.sqrt_pi_exp }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sqrt_pi_exp {
            0 => write!(f, "{}", self.value),
            e if e % 2 == 0 => write!(f, "{}*pi^{}", self.value, e / 2),
            e => write!(f, "{}*sqrt(pi)^{}", self.value, e),
        }
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// `Gamma(k + 1/2) = (2k)! / (4^k k!) * sqrt(pi)`.
pub fn gamma_half(k: u32) -> Scalar {
    // (2k)!/(4^k k!) = prod_{m=1}^{k} (2m-1)/2
    let mut r = Rational::ONE;
    for m in 1..=k as i64 {
        r = &r * &Rational::new(2 * m - 1, 2).expect("nonzero");
    }
    Scalar { value: GaussRational::real(r), sqrt_pi_exp: 1 }
}

/// `a + b*sqrt(d)` over [`Scalar`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadExt {
    pub a: Scalar,
    pub b: Scalar,
    pub d: u32,
}

impl QuadExt {
    pub const SUPPORTED: [u32; 2] = [2, 3];

    pub fn new(a: Scalar, b: Scalar, d: u32) -> Self {
        assert!(Self::SUPPORTED.contains(&d), "unsupported extension sqrt({d})");
        QuadExt { a, b, d }
    }

    pub fn from_scalar(a: Scalar, d: u32) -> Self {
        QuadExt::new(a, Scalar::zero(), d)
    }

    /// `p/q + (r/s)*sqrt(d)` with real rational parts.
    pub fn from_rationals(a: Rational, b: Rational, d: u32) -> Self {
        QuadExt::new(Scalar::rational(a), Scalar::rational(b), d)
    }

    pub fn one(d: u32) -> Self {
        QuadExt::from_scalar(Scalar::one(), d)
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    fn check(&self, rhs: &QuadExt) -> Result<()> {
        if self.d != rhs.d {
            return Err(Error::ExtensionMismatch { left: self.d, right: rhs.d });
        }
        Ok(())
    }

    pub fn checked_add(&self, rhs: &QuadExt) -> Result<QuadExt> {
        self.check(rhs)?;
        Ok(QuadExt { a: self.a.checked_add(&rhs.a)?, b: self.b.checked_add(&rhs.b)?, d: self.d })
    }

    pub fn checked_mul(&self, rhs: &QuadExt) -> Result<QuadExt> {
        self.check(rhs)?;
        let d = Scalar::rational(Rational::integer(self.d as i64));
        let bb = &(&self.b * &rhs.b) * &d;
        Ok(QuadExt {
            a: (&self.a * &rhs.a).checked_add(&bb)?,
            b: (&self.a * &rhs.b).checked_add(&(&self.b * &rhs.a))?,
            d: self.d,
        })
    }

    pub fn conj(&self) -> QuadExt {
        QuadExt { a: self.a.clone(), b: -&self.b, d: self.d }
    }

    /// `a^2 - d*b^2`, the field norm.
    pub fn norm(&self) -> Result<Scalar> {
        let d = Scalar::rational(Rational::integer(self.d as i64));
        (&self.a * &self.a).checked_sub(&(&(&self.b * &self.b) * &d))
    }

    pub fn recip(&self) -> Result<QuadExt> {
        let n = self.norm()?;
        if n.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let c = self.conj();
        Ok(QuadExt { a: c.a.checked_div(&n)?, b: c.b.checked_div(&n)?, d: self.d })
    }

    pub fn pow(&self, exp: i32) -> Result<QuadExt> {
        let mut base = if exp < 0 { self.recip()? } else { self.clone() };
        let mut e = exp.unsigned_abs();
        let mut acc = QuadExt::one(self.d);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.checked_mul(&base)?;
            }
            base = base.checked_mul(&base)?;
            e >>= 1;
        }
        Ok(acc)
    }

    pub fn to_f64(&self) -> (f64, f64) {
        let s = (self.d as f64).sqrt();
        let (ar, ai) = self.a.to_complex();
        let (br, bi) = self.b.to_complex();
        (ar + s * br, ai + s * bi)
    }
}
