//! Canonical sums of `coefficient * blade * angle monomial * jet monomial`.
//!
//! Angles are Laurent monomials in `sin v`, `cos v` for up to two angular
//! variables `v` (slots `2p` and `2p + 1` hold `sin` and `cos` of variable
//! `p`). `tan`, `cot`, `sec`, `csc` are written as monomials at construction
//! and `sin^2 + cos^2 = 1` is never applied, so the representation is a free
//! Laurent basis; angle identities only enter through exact evaluation.
//!
//! Jets are monomials in `a, a', a'', ...`; only `a` itself may carry a
//! negative power.
//!
//! Terms are kept sorted by `(blade, angles, jets)` with no zero
//! coefficients, so structural equality is mathematical equality in the free
//! basis.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::clifford::{blade_mul, Blade};
use crate::error::{Error, Result};
use crate::scalar::{GaussRational, QuadExt, Rational, Scalar};

pub const ANGLE_SLOTS: usize = 4;
/// Capacity for `a, a', ..., a^(JET_SLOTS - 1)`.
pub const JET_SLOTS: usize = 16;

/// Exponents of `sin v0, cos v0, sin v1, cos v1`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct AngleMonomial(pub [i16; ANGLE_SLOTS]);

impl AngleMonomial {
    pub const ONE: AngleMonomial = AngleMonomial([0; ANGLE_SLOTS]);

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    #[inline]
    pub fn mul(&self, rhs: &AngleMonomial) -> AngleMonomial {
        let mut out = [0i16; ANGLE_SLOTS];
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.0[k].checked_add(rhs.0[k]).expect("angle exponent overflow");
        }
        AngleMonomial(out)
    }

    pub fn inverse(&self) -> AngleMonomial {
        AngleMonomial(self.0.map(|e| -e))
    }
}

impl fmt::Debug for AngleMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// Exponents of `a^(0), a^(1), ...`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct JetMonomial(pub [i8; JET_SLOTS]);

impl JetMonomial {
    pub const ONE: JetMonomial = JetMonomial([0; JET_SLOTS]);

    /// `a^(order)^exp`.
    pub fn var(order: usize, exp: i8) -> JetMonomial {
        let mut m = JetMonomial::ONE;
        m.0[order] = exp;
        m
    }

    pub fn from_exponents(exps: &[i64]) -> Result<JetMonomial> {
        if exps.len() > JET_SLOTS {
            if exps[JET_SLOTS..].iter().any(|&e| e != 0) {
                return Err(Error::ExponentOverflow);
            }
        }
        let mut m = JetMonomial::ONE;
        for (k, &e) in exps.iter().take(JET_SLOTS).enumerate() {
            m.0[k] = i8::try_from(e).map_err(|_| Error::ExponentOverflow)?;
            if k > 0 && e < 0 {
                return Err(Error::NegativeJetPower { order: k });
            }
        }
        Ok(m)
    }

    pub fn a_power(&self) -> i32 {
        self.0[0] as i32
    }

    pub fn with_a_power(&self, p: i32) -> JetMonomial {
        let mut m = *self;
        m.0[0] = i8::try_from(p).expect("a exponent overflow");
        m
    }

    pub fn exponents(&self) -> &[i8; JET_SLOTS] {
        &self.0
    }

    /// Highest derivative order present, if any derivative appears.
    pub fn max_order(&self) -> usize {
        (0..JET_SLOTS).rev().find(|&k| self.0[k] != 0).unwrap_or(0)
    }

    /// `(sum k_j, sum j*k_j)` over all variables including `a` itself.
    pub fn degree_and_weight(&self) -> (i32, i32) {
        self.0.iter().enumerate().fold((0, 0), |(d, w), (j, &k)| {
            (d + k as i32, w + j as i32 * k as i32)
        })
    }

    #[inline]
    pub fn mul(&self, rhs: &JetMonomial) -> JetMonomial {
        let mut out = [0i8; JET_SLOTS];
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.0[k].checked_add(rhs.0[k]).expect("jet exponent overflow");
        }
        JetMonomial(out)
    }

    /// Trimmed exponent list `[k0, k1, ...]`.
    pub fn to_vec(&self) -> Vec<i64> {
        let len = (0..JET_SLOTS).rev().find(|&k| self.0[k] != 0).map_or(1, |k| k + 1);
        self.0[..len].iter().map(|&e| e as i64).collect()
    }

    pub fn to_latex(&self) -> String {
        let mut parts = Vec::new();
        for (k, &e) in self.0.iter().enumerate().rev() {
            if e == 0 {
                continue;
            }
            let base = match k {
                0 => "a(t)".to_string(),
                1 => "a'(t)".to_string(),
                2 => "a''(t)".to_string(),
                _ => format!("a^{{({k})}}(t)"),
            };
            parts.push(match e {
                1 => base,
                e if (0..10).contains(&e) => format!("{base}^{e}"),
                e => format!("{base}^{{{e}}}"),
            });
        }
        parts.join(" ")
    }
}

impl fmt::Debug for JetMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.to_vec())
    }
}

/// Sort key of a term. The derived order is blade, then angles, then jets.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct TermKey {
    pub blade: Blade,
    pub angles: AngleMonomial,
    pub jets: JetMonomial,
}

impl TermKey {
    pub const ONE: TermKey =
        TermKey { blade: Blade::UNIT, angles: AngleMonomial::ONE, jets: JetMonomial::ONE };

    #[inline]
    fn mul(&self, rhs: &TermKey) -> (i8, TermKey) {
        let (sign, blade) = blade_mul(self.blade, rhs.blade);
        (sign, TermKey { blade, angles: self.angles.mul(&rhs.angles), jets: self.jets.mul(&rhs.jets) })
    }
}

impl fmt::Debug for TermKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:?}{:?}", self.blade, self.angles, self.jets)
    }
}

/// Unsorted bag of terms, canonicalized once at the end.
#[derive(Default)]
pub struct TermSink {
    terms: Vec<(TermKey, GaussRational)>,
    sqrt_pi_exp: Option<i32>,
}

impl TermSink {
    pub fn new() -> Self {
        Self::default()
    }

    fn note_exp(&mut self, e: i32) {
        match self.sqrt_pi_exp {
            None => self.sqrt_pi_exp = Some(e),
            Some(old) => assert_eq!(old, e, "sqrt(pi) exponent mismatch inside one sum"),
        }
    }

    pub fn push(&mut self, key: TermKey, coeff: GaussRational) {
        if !coeff.is_zero() {
            self.terms.push((key, coeff));
        }
    }

    /// Adds `x`.
    pub fn add(&mut self, x: &SymExpr) {
        if x.is_zero() {
            return;
        }
        self.note_exp(x.sqrt_pi_exp);
        self.terms.extend(x.terms.iter().cloned());
    }

    /// Adds `c * x`.
    pub fn add_scaled(&mut self, x: &SymExpr, c: &GaussRational) {
        if x.is_zero() || c.is_zero() {
            return;
        }
        self.note_exp(x.sqrt_pi_exp);
        self.terms.extend(x.terms.iter().map(|(k, v)| (*k, v * c)));
    }

    /// Adds `c * x * y`.
    pub fn add_product(&mut self, x: &SymExpr, y: &SymExpr, c: &GaussRational) {
        if x.is_zero() || y.is_zero() || c.is_zero() {
            return;
        }
        self.note_exp(x.sqrt_pi_exp + y.sqrt_pi_exp);
        self.terms.reserve(x.terms.len() * y.terms.len());
        for (kx, vx) in &x.terms {
            let vxc = vx * c;
            for (ky, vy) in &y.terms {
                let (sign, key) = kx.mul(ky);
                let v = &vxc * vy;
                self.terms.push((key, if sign < 0 { -v } else { v }));
            }
        }
    }

    /// Adds the unit-blade part of `c * x * y` without forming the rest.
    pub fn add_product_unit(&mut self, x: &SymExpr, y: &SymExpr, c: &GaussRational) {
        if x.is_zero() || y.is_zero() || c.is_zero() {
            return;
        }
        self.note_exp(x.sqrt_pi_exp + y.sqrt_pi_exp);
        // terms are sorted by blade first, so matching blades are contiguous runs
        let mut start = 0;
        for (kx, vx) in &x.terms {
            while start < y.terms.len() && y.terms[start].0.blade < kx.blade {
                start += 1;
            }
            let vxc = vx * c;
            for (ky, vy) in y.terms[start..].iter().take_while(|(k, _)| k.blade == kx.blade) {
                let (sign, key) = kx.mul(ky);
                let v = &vxc * vy;
                self.terms.push((key, if sign < 0 { -v } else { v }));
            }
        }
    }

    pub fn finish(self) -> SymExpr {
        SymExpr::from_terms(self.terms, self.sqrt_pi_exp.unwrap_or(0))
    }
}

/// Exact value of `(sin v, cos v)` for each angular variable.
#[derive(Clone, Debug)]
pub struct AnglePoint {
    pub d: u32,
    pub values: Vec<(QuadExt, QuadExt)>,
}

impl AnglePoint {
    /// Checks `sin^2 + cos^2 = 1` for every assigned pair.
    pub fn new(d: u32, values: Vec<(QuadExt, QuadExt)>) -> Result<Self> {
        for (s, c) in &values {
            let one = s.pow(2)?.checked_add(&c.pow(2)?)?;
            if one != QuadExt::one(d) {
                return Err(Error::Invariant("sin^2 + cos^2 != 1 at evaluation point".into()));
            }
        }
        Ok(AnglePoint { d, values })
    }

    /// `pi/4`: `sin = cos = sqrt(2)/2`.
    pub fn quarter_pi() -> (QuadExt, QuadExt) {
        let h = QuadExt::from_rationals(Rational::ZERO, Rational::new(1, 2).unwrap(), 2);
        (h.clone(), h)
    }

    /// `pi/3`: `sin = sqrt(3)/2`, `cos = 1/2`.
    pub fn third_pi() -> (QuadExt, QuadExt) {
        let half = Rational::new(1, 2).unwrap();
        (
            QuadExt::from_rationals(Rational::ZERO, half.clone(), 3),
            QuadExt::from_rationals(half, Rational::ZERO, 3),
        )
    }

    /// `pi/6`: `sin = 1/2`, `cos = sqrt(3)/2`. Pairs with `pi/3` when a
    /// point needs two angles in the same field.
    pub fn sixth_pi() -> (QuadExt, QuadExt) {
        let (s, c) = Self::third_pi();
        (c, s)
    }
}

/// `rational + radical * sqrt(d)` with angle-free parts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadExpr {
    pub d: u32,
    pub rational: SymExpr,
    pub radical: SymExpr,
}

impl QuadExpr {
    pub fn is_zero(&self) -> bool {
        self.rational.is_zero() && self.radical.is_zero()
    }
}

/// A canonical symbolic sum.
#[derive(Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SymExpr {
    sqrt_pi_exp: i32,
    terms: Vec<(TermKey, GaussRational)>,
}

impl SymExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(GaussRational::ONE)
    }

    pub fn constant(c: GaussRational) -> Self {
        Self::monomial(c, Blade::UNIT, AngleMonomial::ONE, JetMonomial::ONE)
    }

    pub fn from_scalar(s: &Scalar) -> Self {
        let mut out = Self::constant(s.value.clone());
        if !out.is_zero() {
            out.sqrt_pi_exp = s.sqrt_pi_exp;
        }
        out
    }

    pub fn monomial(c: GaussRational, blade: Blade, angles: AngleMonomial, jets: JetMonomial) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        SymExpr { sqrt_pi_exp: 0, terms: vec![(TermKey { blade, angles, jets }, c)] }
    }

    /// `a^(order)^exp`.
    pub fn jet(order: usize, exp: i8) -> Self {
        Self::monomial(GaussRational::ONE, Blade::UNIT, AngleMonomial::ONE, JetMonomial::var(order, exp))
    }

    /// Single angle power, `slot` indexing `sin v0, cos v0, sin v1, cos v1`.
    pub fn angle(slot: usize, exp: i16) -> Self {
        let mut m = AngleMonomial::ONE;
        m.0[slot] = exp;
        Self::monomial(GaussRational::ONE, Blade::UNIT, m, JetMonomial::ONE)
    }

    pub fn blade(b: Blade) -> Self {
        Self::monomial(GaussRational::ONE, b, AngleMonomial::ONE, JetMonomial::ONE)
    }

    /// Builds from arbitrary terms: sorts, merges duplicates, drops zeros.
    pub fn from_terms(mut terms: Vec<(TermKey, GaussRational)>, sqrt_pi_exp: i32) -> Self {
        terms.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let mut out: Vec<(TermKey, GaussRational)> = Vec::with_capacity(terms.len());
        for (k, v) in terms {
            match out.last_mut() {
                Some((lk, lv)) if *lk == k => *lv += &v,
                _ => {
                    if let Some((_, lv)) = out.last() {
                        if lv.is_zero() {
                            out.pop();
                        }
                    }
                    out.push((k, v));
                }
            }
        }
        if let Some((_, lv)) = out.last() {
            if lv.is_zero() {
                out.pop();
            }
        }
        // merging can shrink the input a lot; don't keep the slack
        out.shrink_to_fit();
        let sqrt_pi_exp = if out.is_empty() { 0 } else { sqrt_pi_exp };
        SymExpr { sqrt_pi_exp, terms: out }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn sqrt_pi_exp(&self) -> i32 {
        self.sqrt_pi_exp
    }

    pub fn terms(&self) -> &[(TermKey, GaussRational)] {
        &self.terms
    }

    pub fn coeff(&self, key: &TermKey) -> GaussRational {
        match self.terms.binary_search_by(|(k, _)| k.cmp(key)) {
            Ok(i) => self.terms[i].1.clone(),
            Err(_) => GaussRational::ZERO,
        }
    }

    /// Scalar coefficient of `key` including the `sqrt(pi)` power.
    pub fn scalar_coeff(&self, key: &TermKey) -> Scalar {
        Scalar::new(self.coeff(key), self.sqrt_pi_exp)
    }

    pub fn checked_add(&self, rhs: &SymExpr) -> Result<SymExpr> {
        if rhs.is_zero() {
            return Ok(self.clone());
        }
        if self.is_zero() {
            return Ok(rhs.clone());
        }
        if self.sqrt_pi_exp != rhs.sqrt_pi_exp {
            return Err(Error::PiExponentMismatch { left: self.sqrt_pi_exp, right: rhs.sqrt_pi_exp });
        }
        // merge of two sorted runs
        let mut out = Vec::with_capacity(self.terms.len() + rhs.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() && j < rhs.terms.len() {
            let (ka, va) = &self.terms[i];
            let (kb, vb) = &rhs.terms[j];
            match ka.cmp(kb) {
                std::cmp::Ordering::Less => {
                    out.push((*ka, va.clone()));
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push((*kb, vb.clone()));
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let v = va + vb;
                    if !v.is_zero() {
                        out.push((*ka, v));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend(self.terms[i..].iter().cloned());
        out.extend(rhs.terms[j..].iter().cloned());
        let sqrt_pi_exp = if out.is_empty() { 0 } else { self.sqrt_pi_exp };
        Ok(SymExpr { sqrt_pi_exp, terms: out })
    }

    pub fn checked_sub(&self, rhs: &SymExpr) -> Result<SymExpr> {
        self.checked_add(&rhs.neg())
    }

    pub fn neg(&self) -> SymExpr {
        SymExpr {
            sqrt_pi_exp: self.sqrt_pi_exp,
            terms: self.terms.iter().map(|(k, v)| (*k, -v)).collect(),
        }
    }

    pub fn scale(&self, c: &GaussRational) -> SymExpr {
        if c.is_zero() {
            return SymExpr::zero();
        }
        SymExpr {
            sqrt_pi_exp: self.sqrt_pi_exp,
            terms: self.terms.iter().map(|(k, v)| (*k, v * c)).collect(),
        }
    }

    pub fn scale_scalar(&self, s: &Scalar) -> SymExpr {
        let mut out = self.scale(&s.value);
        if !out.is_zero() {
            out.sqrt_pi_exp += s.sqrt_pi_exp;
        }
        out
    }

    /// Noncommutative product; blades multiply through [`blade_mul`].
    pub fn mul(&self, rhs: &SymExpr) -> SymExpr {
        let mut sink = TermSink::new();
        sink.add_product(self, rhs, &GaussRational::ONE);
        sink.finish()
    }

    pub fn pow(&self, n: u32) -> SymExpr {
        (0..n).fold(SymExpr::one(), |acc, _| acc.mul(self))
    }

    /// Inverse of a single-term expression with blade `1` or a blade
    /// squaring to a scalar.
    pub fn monomial_inverse(&self) -> Result<SymExpr> {
        if self.terms.len() != 1 {
            return Err(Error::Invariant("only monomials are invertible".into()));
        }
        let (k, v) = &self.terms[0];
        let (sign, b) = blade_mul(k.blade, k.blade);
        debug_assert!(b.is_unit());
        let inv = v.recip()?.scale_int(sign as i64);
        let jets = JetMonomial(k.jets.0.map(|e| -e));
        if jets.0[1..].iter().any(|&e| e != 0) {
            return Err(Error::NegativeJetPower { order: k.jets.max_order() });
        }
        Ok(SymExpr {
            sqrt_pi_exp: -self.sqrt_pi_exp,
            terms: vec![(TermKey { blade: k.blade, angles: k.angles.inverse(), jets }, inv)],
        })
    }

    /// Coefficient expression of the unit blade.
    pub fn unit_part(&self) -> SymExpr {
        self.blade_part(Blade::UNIT)
    }

    pub fn blade_part(&self, b: Blade) -> SymExpr {
        let terms: Vec<_> = self.terms.iter().filter(|(k, _)| k.blade == b).cloned().collect();
        let sqrt_pi_exp = if terms.is_empty() { 0 } else { self.sqrt_pi_exp };
        SymExpr { sqrt_pi_exp, terms }
    }

    /// Spinor trace: four times the unit-blade part.
    pub fn trace(&self) -> SymExpr {
        self.unit_part().scale(&GaussRational::int(4))
    }

    pub fn is_blade_free(&self) -> bool {
        self.terms.iter().all(|(k, _)| k.blade.is_unit())
    }

    pub fn is_angle_free(&self) -> bool {
        self.terms.iter().all(|(k, _)| k.angles.is_one())
    }

    /// Minimum exponent of `a` over all terms (0 for the zero expression).
    pub fn min_a_power(&self) -> i32 {
        self.terms.iter().map(|(k, _)| k.jets.a_power()).min().unwrap_or(0)
    }

    /// Highest jet derivative order present.
    pub fn max_jet_order(&self) -> usize {
        self.terms.iter().map(|(k, _)| k.jets.max_order()).max().unwrap_or(0)
    }

    /// Multiplies every term by `a^p`.
    pub fn shift_a(&self, p: i32) -> SymExpr {
        SymExpr {
            sqrt_pi_exp: self.sqrt_pi_exp,
            terms: self
                .terms
                .iter()
                .map(|(k, v)| {
                    let mut k = *k;
                    k.jets = k.jets.with_a_power(k.jets.a_power() + p);
                    (k, v.clone())
                })
                .collect(),
        }
    }

    /// Total derivative in `t` by the jet chain rule.
    pub fn d_dt(&self) -> SymExpr {
        let mut sink = TermSink::new();
        if self.is_zero() {
            return SymExpr::zero();
        }
        sink.note_exp(self.sqrt_pi_exp);
        for (k, v) in &self.terms {
            for order in 0..JET_SLOTS {
                let m = k.jets.0[order];
                if m == 0 {
                    continue;
                }
                assert!(order + 1 < JET_SLOTS, "jet order exceeds capacity");
                let mut key = *k;
                key.jets.0[order] -= 1;
                key.jets.0[order + 1] += 1;
                sink.push(key, v.scale_int(m as i64));
            }
        }
        sink.finish()
    }

    /// Derivative in the angular variable `var` (slots `2var`, `2var+1`):
    /// `d(s^p c^q) = p s^(p-1) c^(q+1) - q s^(p+1) c^(q-1)`.
    pub fn d_angle(&self, var: usize) -> SymExpr {
        let (si, ci) = (2 * var, 2 * var + 1);
        if self.is_zero() {
            return SymExpr::zero();
        }
        let mut sink = TermSink::new();
        sink.note_exp(self.sqrt_pi_exp);
        for (k, v) in &self.terms {
            let p = k.angles.0[si];
            let q = k.angles.0[ci];
            if p != 0 {
                let mut key = *k;
                key.angles.0[si] -= 1;
                key.angles.0[ci] += 1;
                sink.push(key, v.scale_int(p as i64));
            }
            if q != 0 {
                let mut key = *k;
                key.angles.0[si] += 1;
                key.angles.0[ci] -= 1;
                sink.push(key, v.scale_int(-(q as i64)));
            }
        }
        sink.finish()
    }

    /// Replaces every angle monomial by its exact value at `point`.
    pub fn eval_angles(&self, point: &AnglePoint) -> Result<QuadExpr> {
        let d = point.d;
        let mut cache: HashMap<(usize, i16), QuadExt> = HashMap::new();
        let mut rational = TermSink::new();
        let mut radical = TermSink::new();
        for (k, v) in &self.terms {
            let mut val = QuadExt::one(d);
            for slot in 0..ANGLE_SLOTS {
                let e = k.angles.0[slot];
                if e == 0 {
                    continue;
                }
                let base = point.values.get(slot / 2).ok_or_else(|| {
                    Error::Invariant(format!("no value assigned to angle slot {slot}"))
                })?;
                let p = match cache.get(&(slot, e)) {
                    Some(p) => p.clone(),
                    None => {
                        let b = if slot % 2 == 0 { &base.0 } else { &base.1 };
                        let p = b.pow(e as i32)?;
                        cache.insert((slot, e), p.clone());
                        p
                    }
                };
                val = val.checked_mul(&p)?;
            }
            let key = TermKey { angles: AngleMonomial::ONE, ..*k };
            let coeff = Scalar::new(v.clone(), 0);
            let a = &coeff * &val.a;
            let b = &coeff * &val.b;
            if a.sqrt_pi_exp != 0 || b.sqrt_pi_exp != 0 {
                return Err(Error::Invariant("angle values must be sqrt(pi)-free".into()));
            }
            rational.push(key, a.value);
            radical.push(key, b.value);
        }
        let mut rational = rational.finish();
        let mut radical = radical.finish();
        if !rational.is_zero() {
            rational.sqrt_pi_exp = self.sqrt_pi_exp;
        }
        if !radical.is_zero() {
            radical.sqrt_pi_exp = self.sqrt_pi_exp;
        }
        Ok(QuadExpr { d, rational, radical })
    }

    /// Substitutes rational `(sin v, cos v)` values for every angular
    /// variable.
    pub fn eval_angles_rational(&self, values: &[(Rational, Rational)]) -> Result<SymExpr> {
        let mut sink = TermSink::new();
        sink.note_exp(self.sqrt_pi_exp);
        for (k, v) in &self.terms {
            let mut factor = Rational::ONE;
            for slot in 0..ANGLE_SLOTS {
                let e = k.angles.0[slot];
                if e == 0 {
                    continue;
                }
                let (s, c) = values.get(slot / 2).ok_or_else(|| {
                    Error::Invariant(format!("no value assigned to angle slot {slot}"))
                })?;
                factor = &factor * &(if slot % 2 == 0 { s } else { c }).pow(e as i32)?;
            }
            sink.push(TermKey { angles: AngleMonomial::ONE, ..*k }, v.scale(&factor));
        }
        Ok(sink.finish())
    }

    /// Whether the expression is zero as a function of the angles, i.e.
    /// zero modulo `sin^2 + cos^2 = 1`.
    ///
    /// With every angle exponent bounded by `m` in absolute value,
    /// `(sin cos)^m x` is a polynomial of degree at most `4m` in each pair,
    /// which either lies in the ideal of the circle or has at most `8m`
    /// zeros on it. Checking `8m + 1` rational points per variable, on a
    /// grid, is therefore a proof.
    pub fn vanishes_on_circle(&self) -> Result<bool> {
        let vars: Vec<usize> = (0..ANGLE_SLOTS / 2)
            .filter(|&v| self.terms.iter().any(|(k, _)| k.angles.0[2 * v] != 0 || k.angles.0[2 * v + 1] != 0))
            .collect();
        let bound = |v: usize| {
            self.terms
                .iter()
                .map(|(k, _)| k.angles.0[2 * v].unsigned_abs().max(k.angles.0[2 * v + 1].unsigned_abs()))
                .max()
                .unwrap_or(0) as i64
        };
        // (2t/(1+t^2), (1-t^2)/(1+t^2)) for t = 1/2, 1/3, ...: distinct, nonzero
        let point = |i: i64| {
            let t = Rational::new(1, i + 2).expect("nonzero");
            let den = &Rational::ONE + &(&t * &t);
            let s = (&Rational::integer(2) * &t).checked_div(&den).expect("positive");
            let c = (&Rational::ONE - &(&t * &t)).checked_div(&den).expect("positive");
            (s, c)
        };
        let counts: Vec<i64> = vars.iter().map(|&v| 8 * bound(v) + 1).collect();
        let mut index = vec![0i64; vars.len()];
        loop {
            let mut values = vec![(Rational::ZERO, Rational::ONE); ANGLE_SLOTS / 2];
            for (slot, &v) in vars.iter().enumerate() {
                values[v] = point(index[slot]);
            }
            if !self.eval_angles_rational(&values)?.is_zero() {
                return Ok(false);
            }
            // advance the grid odometer
            let mut d = 0;
            loop {
                if d == vars.len() {
                    return Ok(true);
                }
                index[d] += 1;
                if index[d] < counts[d] {
                    break;
                }
                index[d] = 0;
                d += 1;
            }
        }
    }

    /// Equality as functions of the angles.
    pub fn equal_on_circle(&self, other: &SymExpr) -> Result<bool> {
        self.checked_sub(other)?.vanishes_on_circle()
    }

    /// Floating-point value of each blade component at the given jets
    /// (`jets[k] = a^(k)(t)`) and angles (`(sin v, cos v)` per variable).
    pub fn eval_f64(&self, jets: &[f64], angles: &[(f64, f64)]) -> [(f64, f64); 16] {
        let mut out = [(0.0, 0.0); 16];
        let pi_factor = std::f64::consts::PI.sqrt().powi(self.sqrt_pi_exp);
        for (k, v) in &self.terms {
            let mut m = pi_factor;
            for (slot, &e) in k.angles.0.iter().enumerate() {
                if e != 0 {
                    let (s, c) = angles[slot / 2];
                    m *= if slot % 2 == 0 { s } else { c }.powi(e as i32);
                }
            }
            for (order, &e) in k.jets.0.iter().enumerate() {
                if e != 0 {
                    m *= jets[order].powi(e as i32);
                }
            }
            let (re, im) = v.to_complex();
            let slot = &mut out[k.blade.0 as usize];
            slot.0 += re * m;
            slot.1 += im * m;
        }
        out
    }

    /// One record per term: coefficient, blade, angle and jet exponents.
    pub fn to_json(&self) -> serde_json::Value {
        let records: Vec<_> = self
            .terms
            .iter()
            .map(|(k, v)| {
                serde_json::json!({
                    "coeff": { "re": v.re.to_string(), "im": v.im.to_string() },
                    "sqrtPiExp": self.sqrt_pi_exp,
                    "blade": k.blade.to_string(),
                    "angles": k.angles.0,
                    "jets": k.jets.to_vec(),
                })
            })
            .collect();
        serde_json::Value::Array(records)
    }

    /// LaTeX rendering; `angle_names` names the angular variables in order.
    pub fn to_latex(&self, angle_names: &[&str]) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut out = String::new();
        for (idx, (k, v)) in self.terms.iter().enumerate() {
            let coeff = latex_coeff(v);
            let mut factors = Vec::new();
            if !k.blade.is_unit() {
                let idx: String = k.blade.indices().map(|i| i.to_string()).collect();
                factors.push(format!("\\gamma^{{{idx}}}"));
            }
            for (slot, &e) in k.angles.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let f = if slot % 2 == 0 { "\\sin" } else { "\\cos" };
                let name = angle_names.get(slot / 2).copied().unwrap_or("x");
                factors.push(if e == 1 {
                    format!("{f}({name})")
                } else {
                    format!("{f}({name})^{{{e}}}")
                });
            }
            let jets = k.jets.to_latex();
            if !jets.is_empty() {
                factors.push(jets);
            }
            let body = factors.join(" ");
            let negative = coeff.starts_with('-');
            if idx > 0 {
                out.push_str(if negative { " - " } else { " + " });
            } else if negative {
                out.push('-');
            }
            let mag = coeff.trim_start_matches('-');
            match (mag, body.is_empty()) {
                ("1", false) => out.push_str(&body),
                (_, true) => out.push_str(mag),
                (_, false) => {
                    out.push_str(mag);
                    out.push(' ');
                    out.push_str(&body);
                }
            }
        }
        match self.sqrt_pi_exp {
            0 => out,
            e => format!("\\pi^{{{}}}\\left({out}\\right)", e as f64 / 2.0),
        }
    }
}

fn latex_coeff(v: &GaussRational) -> String {
    let frac = |r: &Rational| {
        if r.is_integer() {
            r.to_string()
        } else {
            let sign = if r.signum() < 0 { "-" } else { "" };
            format!("{sign}\\frac{{{}}}{{{}}}", r.numerator().to_string().trim_start_matches('-'), r.denominator())
        }
    };
    match (v.re.is_zero(), v.im.is_zero()) {
        (_, true) => frac(&v.re),
        (true, false) => {
            if v.im.is_one() {
                "i".into()
            } else if (-&v.im).is_one() {
                "-i".into()
            } else {
                format!("{} i", frac(&v.im))
            }
        }
        _ => format!("({} + {} i)", frac(&v.re), frac(&v.im)),
    }
}

impl fmt::Debug for SymExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (k, v)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({v}){k:?}")?;
        }
        if self.sqrt_pi_exp != 0 {
            write!(f, " * sqrt(pi)^{}", self.sqrt_pi_exp)?;
        }
        Ok(())
    }
}

impl std::ops::Add<&SymExpr> for &SymExpr {
    type Output = SymExpr;
    /// Panics on a `sqrt(pi)` exponent mismatch; see [`SymExpr::checked_add`].
    fn add(self, rhs: &SymExpr) -> SymExpr {
        self.checked_add(rhs).expect("sqrt(pi) exponent mismatch")
    }
}

impl std::ops::Sub<&SymExpr> for &SymExpr {
    type Output = SymExpr;
    fn sub(self, rhs: &SymExpr) -> SymExpr {
        self.checked_sub(rhs).expect("sqrt(pi) exponent mismatch")
    }
}

impl std::ops::Mul<&SymExpr> for &SymExpr {
    type Output = SymExpr;
    fn mul(self, rhs: &SymExpr) -> SymExpr {
        SymExpr::mul(self, rhs)
    }
}

impl std::ops::Neg for &SymExpr {
    type Output = SymExpr;
    fn neg(self) -> SymExpr {
        SymExpr::neg(self)
    }
}

/// Shorthands for building symbol tables.
pub mod build {
    use super::*;

    pub fn q(n: i64, d: i64) -> GaussRational {
        GaussRational::real(Rational::new(n, d).expect("nonzero denominator"))
    }

    pub fn qi(n: i64, d: i64) -> GaussRational {
        GaussRational::imag(Rational::new(n, d).expect("nonzero denominator"))
    }

    /// `c * blade * prod angles * prod jets`, with `angles[slot]` and
    /// `jets[order]` exponent lists.
    pub fn term(c: GaussRational, blade: &[u8], angles: [i16; ANGLE_SLOTS], jets: &[i8]) -> SymExpr {
        let mut j = JetMonomial::ONE;
        for (k, &e) in jets.iter().enumerate() {
            j.0[k] = e;
        }
        SymExpr::monomial(c, Blade::from_indices(blade), AngleMonomial(angles), j)
    }

    pub fn sum(parts: &[SymExpr]) -> SymExpr {
        let mut sink = TermSink::new();
        for p in parts {
            sink.add(p);
        }
        sink.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::build::*;
    use super::*;
    use proptest::prelude::*;

    const S: usize = 0;
    const C: usize = 1;

    fn sin_eta(e: i16) -> SymExpr {
        SymExpr::angle(S, e)
    }

    fn cos_eta(e: i16) -> SymExpr {
        SymExpr::angle(C, e)
    }

    #[test]
    fn circle_identities() {
        let one = SymExpr::one();
        let s2c2 = &(&sin_eta(2) + &cos_eta(2)) - &one;
        assert!(s2c2.vanishes_on_circle().unwrap());
        // tan sec + csc = csc sec^2
        let lhs = &term(q(1, 1), &[], [1, -2, 0, 0], &[]) + &term(q(1, 1), &[], [-1, 0, 0, 0], &[]);
        let rhs = term(q(1, 1), &[], [-1, -2, 0, 0], &[]);
        assert!(lhs.equal_on_circle(&rhs).unwrap());
        assert!(!(&sin_eta(1) - &cos_eta(1)).vanishes_on_circle().unwrap());
        // d(cot) = -csc^2
        let dcot = term(q(1, 1), &[], [-1, 1, 0, 0], &[]).d_angle(0);
        assert!(dcot.equal_on_circle(&term(q(-1, 1), &[], [-2, 0, 0, 0], &[])).unwrap());
        // two variables, identity only in the second
        let chi_theta = &(&term(q(1, 1), &[], [1, 0, 2, 0], &[]) + &term(q(1, 1), &[], [1, 0, 0, 2], &[]))
            - &term(q(1, 1), &[], [1, 0, 0, 0], &[]);
        assert!(chi_theta.vanishes_on_circle().unwrap());
        assert!(!term(q(1, 1), &[], [1, 0, 2, 0], &[]).vanishes_on_circle().unwrap());
        assert!(SymExpr::zero().vanishes_on_circle().unwrap());
        assert!(!one.vanishes_on_circle().unwrap());
    }

    #[test]
    fn bivector_square() {
        let x = term(q(1, 1), &[1, 2], [0; 4], &[0, 1]);
        let expected = term(q(-1, 1), &[], [0; 4], &[0, 2]);
        assert_eq!(x.mul(&x), expected);
    }

    #[test]
    fn laurent_cancellation() {
        assert_eq!(sin_eta(1).mul(&sin_eta(-1)), SymExpr::one());
    }

    #[test]
    fn generators_anticommute() {
        let g1 = SymExpr::blade(Blade::generator(1));
        let g2 = SymExpr::blade(Blade::generator(2));
        assert!((&g1.mul(&g2) + &g2.mul(&g1)).is_zero());
    }

    #[test]
    fn time_derivative_examples() {
        let a2 = SymExpr::jet(0, 2);
        assert_eq!(a2.d_dt(), term(q(2, 1), &[], [0; 4], &[1, 1]));

        let x = term(q(1, 1), &[], [0; 4], &[1, 2]);
        let expected = sum(&[term(q(1, 1), &[], [0; 4], &[0, 3]), term(q(2, 1), &[], [0; 4], &[1, 1, 1])]);
        assert_eq!(x.d_dt(), expected);

        let inv = SymExpr::jet(0, -1);
        assert_eq!(inv.d_dt(), term(q(-1, 1), &[], [0; 4], &[-2, 1]));
    }

    #[test]
    fn angle_derivative_examples() {
        assert_eq!(sin_eta(1).d_angle(0), cos_eta(1));

        // cot = s^-1 c  ->  -s^-2 c^2 - 1
        let cot = sin_eta(-1).mul(&cos_eta(1));
        let expected = sum(&[term(q(-1, 1), &[], [-2, 2, 0, 0], &[]), term(q(-1, 1), &[], [0; 4], &[])]);
        assert_eq!(cot.d_angle(0), expected);
        // equals -csc^2 numerically
        for eta in [0.3, 0.7, 1.1, 1.3, 0.45] {
            let v = expected.eval_f64(&[1.0], &[(f64::sin(eta), f64::cos(eta))])[0].0;
            let csc2 = 1.0 / f64::sin(eta).powi(2);
            assert!((v + csc2).abs() < 1e-12);
        }

        // sec(theta) in the second angular variable
        let sec = SymExpr::angle(3, -1);
        assert_eq!(sec.d_angle(1), term(q(1, 1), &[], [0, 0, 1, -2], &[]));
    }

    #[test]
    fn exact_angle_evaluation() {
        let quarter = AnglePoint::new(2, vec![AnglePoint::quarter_pi()]).unwrap();
        let third = AnglePoint::new(3, vec![AnglePoint::third_pi()]).unwrap();

        let pyth = &sin_eta(2) + &cos_eta(2);
        let v = pyth.eval_angles(&quarter).unwrap();
        assert_eq!(v.rational, SymExpr::one());
        assert!(v.radical.is_zero());

        // cot(2x) = (c^2 - s^2)/(2 s c) = (1/2)(c s^-1 - s c^-1)
        let cot2 = sum(&[term(q(1, 2), &[], [-1, 1, 0, 0], &[]), term(q(-1, 2), &[], [1, -1, 0, 0], &[])]);
        let v = cot2.eval_angles(&quarter).unwrap();
        assert!(v.rational.is_zero() && v.radical.is_zero());

        let sc = sin_eta(1).mul(&cos_eta(1));
        let v = sc.eval_angles(&third).unwrap();
        assert!(v.rational.is_zero());
        assert_eq!(v.radical, SymExpr::constant(q(1, 4)));
    }

    #[test]
    fn bad_point_rejected() {
        let h = QuadExt::from_rationals(Rational::new(1, 2).unwrap(), Rational::ZERO, 2);
        assert!(AnglePoint::new(2, vec![(h.clone(), h)]).is_err());
    }

    #[test]
    fn latex_rendering() {
        let x = sum(&[
            term(q(1, 4), &[], [0; 4], &[1, 2]),
            term(q(-1, 4), &[], [0; 4], &[1]),
            term(qi(3, 1), &[1, 2], [0; 4], &[0, 0, 1]),
        ]);
        assert_eq!(x.to_latex(&["\\eta"]), "-\\frac{1}{4} a(t) + \\frac{1}{4} a'(t)^2 a(t) + 3 i \\gamma^{12} a''(t)");
    }

    // random expressions over Hopf-style generators with small exponents
    pub(crate) fn arb_expr(max_terms: usize) -> impl Strategy<Value = SymExpr> {
        prop::collection::vec(
            (
                prop::sample::select(vec![0u8, 3, 5, 6, 9, 15]),
                -3i16..3,
                -3i16..3,
                -2i8..3,
                0i8..3,
                0i8..2,
                -4i64..5,
                -3i64..4,
            ),
            0..max_terms,
        )
        .prop_map(|terms| {
            let mut sink = TermSink::new();
            for (b, s, c, a0, a1, a2, re, im) in terms {
                let mut j = JetMonomial::ONE;
                j.0[0] = a0;
                j.0[1] = a1;
                j.0[2] = a2;
                sink.push(
                    TermKey { blade: Blade(b), angles: AngleMonomial([s, c, 0, 0]), jets: j },
                    GaussRational::new(Rational::integer(re), Rational::integer(im)),
                );
            }
            sink.finish()
        })
    }

    fn eval_at(x: &SymExpr, t: f64, eta: f64) -> [(f64, f64); 16] {
        // a(t) = 2 + cos t
        let jets: Vec<f64> = (0..JET_SLOTS)
            .map(|k| {
                let d = match k % 4 {
                    0 => f64::cos(t),
                    1 => -f64::sin(t),
                    2 => -f64::cos(t),
                    _ => f64::sin(t),
                };
                if k == 0 { 2.0 + d } else { d }
            })
            .collect();
        x.eval_f64(&jets, &[(f64::sin(eta), f64::cos(eta))])
    }

    proptest! {
        #[test]
        fn ring_axioms(x in arb_expr(5), y in arb_expr(5), z in arb_expr(5)) {
            prop_assert_eq!(x.mul(&y).mul(&z), x.mul(&y.mul(&z)));
            prop_assert_eq!(x.mul(&(&y + &z)), &x.mul(&y) + &x.mul(&z));
            prop_assert_eq!(&(&x + &y) + &z, &x + &(&y + &z));
        }

        #[test]
        fn derivatives_commute(x in arb_expr(6)) {
            prop_assert_eq!(x.d_angle(0).d_dt(), x.d_dt().d_angle(0));
        }

        #[test]
        fn leibniz_rule(x in arb_expr(4), y in arb_expr(4)) {
            prop_assert_eq!(x.mul(&y).d_dt(), &x.d_dt().mul(&y) + &x.mul(&y.d_dt()));
            prop_assert_eq!(x.mul(&y).d_angle(0), &x.d_angle(0).mul(&y) + &x.mul(&y.d_angle(0)));
        }

        #[test]
        fn evaluation_is_a_homomorphism(x in arb_expr(4), y in arb_expr(4)) {
            let point = AnglePoint::new(3, vec![AnglePoint::third_pi()]).unwrap();
            let ex = x.eval_angles(&point).unwrap();
            let ey = y.eval_angles(&point).unwrap();
            let exy = x.mul(&y).eval_angles(&point).unwrap();
            let d = SymExpr::constant(GaussRational::int(3));
            let rational = &ex.rational.mul(&ey.rational) + &d.mul(&ex.radical.mul(&ey.radical));
            let radical = &ex.rational.mul(&ey.radical) + &ex.radical.mul(&ey.rational);
            prop_assert_eq!(exy.rational, rational);
            prop_assert_eq!(exy.radical, radical);
        }

        #[test]
        fn d_dt_matches_finite_differences(x in arb_expr(6)) {
            let (t, eta, h) = (1.3, 0.7, 1e-5);
            let exact = eval_at(&x.d_dt(), t, eta);
            let plus = eval_at(&x, t + h, eta);
            let minus = eval_at(&x, t - h, eta);
            for b in 0..16 {
                for part in 0..2 {
                    let pick = |v: (f64, f64)| if part == 0 { v.0 } else { v.1 };
                    let fd = (pick(plus[b]) - pick(minus[b])) / (2.0 * h);
                    let ex = pick(exact[b]);
                    let scale = ex.abs().max(1.0);
                    prop_assert!((fd - ex).abs() / scale < 1e-6, "blade {} fd {} exact {}", b, fd, ex);
                }
            }
        }
    }
}
