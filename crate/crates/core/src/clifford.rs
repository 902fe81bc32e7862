//! The rank-4 Clifford algebra generated by `g1..g4` with `gi*gi = -1`.
//!
//! Squaring the four explicit 4x4 gamma matrices used for the Dirac symbol
//! gives `-I`, so every generator squares to `-1`. With the opposite
//! convention the `p0` terms flip sign silently; [`verify_matrix_model`]
//! pins the convention against the matrices themselves.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::scalar::{GaussRational, Rational};

/// Product of distinct generators in ascending order, encoded as a bitmask
/// (bit `k-1` set when `gk` is present). The empty mask is the unit.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Blade(pub u8);

impl Blade {
    pub const UNIT: Blade = Blade(0);

    /// Blade from 1-based generator indices; repeated indices are rejected.
    pub fn from_indices(indices: &[u8]) -> Blade {
        let mut mask = 0u8;
        for &i in indices {
            assert!((1..=4).contains(&i), "generator index {i} out of range");
            assert!(mask & (1 << (i - 1)) == 0, "repeated generator g{i}");
            mask |= 1 << (i - 1);
        }
        Blade(mask)
    }

    pub fn generator(i: u8) -> Blade {
        Blade::from_indices(&[i])
    }

    pub fn is_unit(self) -> bool {
        self.0 == 0
    }

    pub fn grade(self) -> u32 {
        self.0.count_ones()
    }

    pub fn indices(self) -> impl Iterator<Item = u8> {
        (1..=4u8).filter(move |i| self.0 & (1 << (i - 1)) != 0)
    }

    pub fn all() -> impl Iterator<Item = Blade> {
        (0..16u8).map(Blade)
    }
}

impl fmt::Display for Blade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_unit() {
            return write!(f, "1");
        }
        write!(f, "g")?;
        for i in self.indices() {
            write!(f, "{i}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Blade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// `s * t = sign * (s xor t)`.
///
/// Moving each generator of `t` leftwards past the larger generators of `s`
/// costs one sign flip per transposition; each shared generator then
/// contracts with `gi*gi = -1`.
#[inline]
pub fn blade_mul(s: Blade, t: Blade) -> (i8, Blade) {
    let (a, b) = (s.0 as u32, t.0 as u32);
    let mut swaps = 0u32;
    let mut rest = b;
    while rest != 0 {
        let bit = rest.trailing_zeros();
        swaps += (a >> (bit + 1)).count_ones();
        rest &= rest - 1;
    }
    swaps += (a & b).count_ones();
    let sign = if swaps % 2 == 0 { 1 } else { -1 };
    (sign, Blade((a ^ b) as u8))
}

/// Minimal ring interface for Clifford coefficients.
pub trait Ring: Clone + PartialEq {
    fn zero() -> Self;
    fn from_int(n: i64) -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
}

impl Ring for Rational {
    fn zero() -> Self {
        Rational::ZERO
    }
    fn from_int(n: i64) -> Self {
        Rational::integer(n)
    }
    fn is_zero(&self) -> bool {
        Rational::is_zero(self)
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
}

impl Ring for GaussRational {
    fn zero() -> Self {
        GaussRational::ZERO
    }
    fn from_int(n: i64) -> Self {
        GaussRational::int(n)
    }
    fn is_zero(&self) -> bool {
        GaussRational::is_zero(self)
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
}

/// Sparse element `sum_S c_S g^S`; zero coefficients are never stored.
#[derive(Clone, PartialEq, Debug)]
pub struct CliffordElement<C: Ring> {
    coeffs: BTreeMap<Blade, C>,
}

impl<C: Ring> Default for CliffordElement<C> {
    fn default() -> Self {
        CliffordElement { coeffs: BTreeMap::new() }
    }
}

impl<C: Ring> CliffordElement<C> {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn scalar(c: C) -> Self {
        Self::blade(Blade::UNIT, c)
    }

    pub fn blade(b: Blade, c: C) -> Self {
        let mut out = Self::zero();
        out.add_term(b, c);
        out
    }

    pub fn add_term(&mut self, b: Blade, c: C) {
        if c.is_zero() {
            return;
        }
        let merged = match self.coeffs.get(&b) {
            Some(old) => old.add(&c),
            None => c,
        };
        if merged.is_zero() {
            self.coeffs.remove(&b);
        } else {
            self.coeffs.insert(b, merged);
        }
    }

    pub fn coeff(&self, b: Blade) -> C {
        self.coeffs.get(&b).cloned().unwrap_or_else(C::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (Blade, &C)> {
        self.coeffs.iter().map(|(b, c)| (*b, c))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        for (b, c) in rhs.terms() {
            out.add_term(b, c.clone());
        }
        out
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let mut out = Self::zero();
        for (s, x) in self.terms() {
            for (t, y) in rhs.terms() {
                let (sign, b) = blade_mul(s, t);
                let c = x.mul(y);
                out.add_term(b, if sign < 0 { c.neg() } else { c });
            }
        }
        out
    }

    /// Trace in the 4-dimensional spinor representation: every non-unit
    /// blade is traceless.
    pub fn trace(&self) -> C {
        self.coeff(Blade::UNIT).mul(&C::from_int(4))
    }
}

/// 4x4 matrix over the Gaussian rationals.
pub type Matrix4 = [[GaussRational; 4]; 4];

fn mat_mul(a: &Matrix4, b: &Matrix4) -> Matrix4 {
    let mut out: Matrix4 = Default::default();
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = GaussRational::ZERO;
            for k in 0..4 {
                acc += &(&a[i][k] * &b[k][j]);
            }
            out[i][j] = acc;
        }
    }
    out
}

fn mat_identity() -> Matrix4 {
    let mut m: Matrix4 = Default::default();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = GaussRational::ONE;
    }
    m
}

fn mat_trace(m: &Matrix4) -> GaussRational {
    let mut acc = GaussRational::ZERO;
    for (i, row) in m.iter().enumerate() {
        acc += &row[i];
    }
    acc
}

fn mat_from(entries: [[(i64, i64); 4]; 4]) -> Matrix4 {
    let mut m: Matrix4 = Default::default();
    for i in 0..4 {
        for j in 0..4 {
            let (re, im) = entries[i][j];
            m[i][j] = GaussRational::new(Rational::integer(re), Rational::integer(im));
        }
    }
    m
}

/// The explicit gamma matrices `g1..g4` (entries as `(re, im)`).
pub fn gamma_matrices() -> [Matrix4; 4] {
    const O: (i64, i64) = (0, 0);
    const I: (i64, i64) = (0, 1);
    const MI: (i64, i64) = (0, -1);
    const P: (i64, i64) = (1, 0);
    const M: (i64, i64) = (-1, 0);
    [
        mat_from([[O, O, I, O], [O, O, O, I], [I, O, O, O], [O, I, O, O]]),
        mat_from([[O, O, O, P], [O, O, P, O], [O, M, O, O], [M, O, O, O]]),
        mat_from([[O, O, O, MI], [O, O, I, O], [O, I, O, O], [MI, O, O, O]]),
        mat_from([[O, O, P, O], [O, O, O, M], [M, O, O, O], [O, P, O, O]]),
    ]
}

/// Matrix of a blade: the ascending product of its generators.
pub fn blade_matrix(b: Blade) -> Matrix4 {
    let gammas = gamma_matrices();
    b.indices()
        .fold(mat_identity(), |acc, i| mat_mul(&acc, &gammas[(i - 1) as usize]))
}

/// First disagreement between a blade multiplication table and the matrices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelMismatch {
    Product { left: Blade, right: Blade },
    Trace { blade: Blade },
}

impl fmt::Display for ModelMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelMismatch::Product { left, right } => write!(f, "product {left}*{right}"),
            ModelMismatch::Trace { blade } => write!(f, "trace of {blade}"),
        }
    }
}

/// Checks all 256 blade products and all 16 traces against the explicit matrices.
pub fn verify_matrix_model() -> Result<(), ModelMismatch> {
    verify_table(blade_mul)
}

/// [`verify_matrix_model`] for an arbitrary multiplication table.
pub fn verify_table(mul: impl Fn(Blade, Blade) -> (i8, Blade)) -> Result<(), ModelMismatch> {
    let mats: Vec<Matrix4> = Blade::all().map(blade_matrix).collect();
    for s in Blade::all() {
        for t in Blade::all() {
            let (sign, b) = mul(s, t);
            let lhs = mat_mul(&mats[s.0 as usize], &mats[t.0 as usize]);
            let rhs = &mats[b.0 as usize];
            let ok = lhs.iter().zip(rhs.iter()).all(|(lr, rr)| {
                lr.iter().zip(rr.iter()).all(|(x, y)| *x == y.scale_int(sign as i64))
            });
            if !ok {
                return Err(ModelMismatch::Product { left: s, right: t });
            }
        }
    }
    for b in Blade::all() {
        let el = CliffordElement::blade(b, GaussRational::ONE);
        if el.trace() != mat_trace(&mats[b.0 as usize]) {
            return Err(ModelMismatch::Trace { blade: b });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn g(i: u8) -> Blade {
        Blade::generator(i)
    }

    #[test]
    fn generator_products() {
        assert_eq!(blade_mul(g(1), g(1)), (-1, Blade::UNIT));
        assert_eq!(blade_mul(g(1), g(2)), (1, Blade::from_indices(&[1, 2])));
        assert_eq!(blade_mul(g(2), g(1)), (-1, Blade::from_indices(&[1, 2])));
    }

    #[test]
    fn generator_square_matches_matrices() {
        let gm = gamma_matrices();
        let minus_id: Matrix4 = {
            let mut m = mat_identity();
            for (i, row) in m.iter_mut().enumerate() {
                row[i] = GaussRational::int(-1);
            }
            m
        };
        for m in &gm {
            assert_eq!(mat_mul(m, m), minus_id);
        }
    }

    #[test]
    fn anticommutation_relations() {
        for i in 1..=4u8 {
            for j in 1..=4u8 {
                let x = CliffordElement::blade(g(i), Rational::ONE);
                let y = CliffordElement::blade(g(j), Rational::ONE);
                let anti = x.mul(&y).add(&y.mul(&x));
                let expected = if i == j {
                    CliffordElement::scalar(Rational::integer(-2))
                } else {
                    CliffordElement::zero()
                };
                assert_eq!(anti, expected, "i={i} j={j}");
            }
        }
    }

    #[test]
    fn blade_mul_is_associative() {
        for a in Blade::all() {
            for b in Blade::all() {
                for c in Blade::all() {
                    let (s1, ab) = blade_mul(a, b);
                    let (s2, left) = blade_mul(ab, c);
                    let (s3, bc) = blade_mul(b, c);
                    let (s4, right) = blade_mul(a, bc);
                    assert_eq!((s1 * s2, left), (s3 * s4, right));
                }
            }
        }
    }

    #[test]
    fn traces() {
        let unit = CliffordElement::scalar(Rational::ONE);
        assert_eq!(unit.trace(), Rational::integer(4));
        let g12 = CliffordElement::blade(Blade::from_indices(&[1, 2]), Rational::ONE);
        assert_eq!(g12.trace(), Rational::ZERO);
        let x = CliffordElement::scalar(Rational::integer(3))
            .add(&CliffordElement::blade(Blade::from_indices(&[1, 3]), Rational::integer(2)));
        assert_eq!(x.trace(), Rational::integer(12));
        // matrix oracle for g1*g2
        let gm = gamma_matrices();
        assert_eq!(mat_trace(&mat_mul(&gm[0], &gm[1])), GaussRational::ZERO);
    }

    #[test]
    fn matrix_model_agrees() {
        assert_eq!(verify_matrix_model(), Ok(()));
    }

    #[test]
    fn matrix_model_detects_fault() {
        let faulty = |s: Blade, t: Blade| {
            let (sign, b) = blade_mul(s, t);
            if s == g(2) && t == g(3) {
                (-sign, b)
            } else {
                (sign, b)
            }
        };
        assert_eq!(verify_table(faulty), Err(ModelMismatch::Product { left: g(2), right: g(3) }));
    }

    #[test]
    fn display() {
        assert_eq!(Blade::UNIT.to_string(), "1");
        assert_eq!(Blade::from_indices(&[1, 2]).to_string(), "g12");
        assert_eq!(Blade::from_indices(&[4, 1, 3]).to_string(), "g134");
    }

    fn element() -> impl Strategy<Value = CliffordElement<GaussRational>> {
        prop::collection::vec((0u8..16, -5i64..5, -5i64..5), 0..6).prop_map(|terms| {
            let mut x = CliffordElement::zero();
            for (b, re, im) in terms {
                x.add_term(Blade(b), GaussRational::new(Rational::integer(re), Rational::integer(im)));
            }
            x
        })
    }

    proptest! {
        #[test]
        fn trace_is_cyclic(x in element(), y in element()) {
            prop_assert_eq!(x.mul(&y).trace(), y.mul(&x).trace());
        }
    }
}
