//! Slow reference computation of the parametrix by direct symbol composition.
//!
//! Symbols are kept as polynomials in `r0 = 1/p2` and `xi` with expression
//! coefficients, and `r_n` is obtained from
//!
//! ```text
//! r_n = -r0 sum (-i)^|b| / b! * d_xi^b p_k * d_x^b r_m,   |b| + m + 2 - k = n, m < n
//! ```
//!
//! with no specialization beyond `d_x r0^j = -j r0^(j+1) sum_l d_x g^ll xi_l^2`.
//! This is exponential in `n` and only meant for cross-checking small levels.

use std::collections::BTreeMap;

use crate::engine::{Alpha, Level, NodeKey};
use crate::expr::{SymExpr, TermSink};
use crate::geometry::{DiracSymbol, SymbolTable};
use crate::scalar::{GaussRational, Rational};

/// `sum c_{j,alpha} r0^j xi^alpha`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct XiPoly {
    pub terms: BTreeMap<(u8, Alpha), SymExpr>,
}

impl XiPoly {
    pub fn monomial(j: u8, alpha: Alpha, c: SymExpr) -> Self {
        let mut out = XiPoly::default();
        out.push(j, alpha, &c);
        out
    }

    pub fn push(&mut self, j: u8, alpha: Alpha, c: &SymExpr) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry((j, alpha)).or_default();
        *slot = &*slot + c;
        if slot.is_zero() {
            self.terms.remove(&(j, alpha));
        }
    }

    pub fn add(&mut self, rhs: &XiPoly) {
        for ((j, a), c) in &rhs.terms {
            self.push(*j, *a, c);
        }
    }

    pub fn scale(&self, c: &GaussRational) -> XiPoly {
        let mut out = XiPoly::default();
        for ((j, a), v) in &self.terms {
            out.push(*j, *a, &v.scale(c));
        }
        out
    }

    /// Product with the left factor's coefficients on the left.
    pub fn mul(&self, rhs: &XiPoly) -> XiPoly {
        let mut acc: BTreeMap<(u8, Alpha), TermSink> = BTreeMap::new();
        for ((j1, a1), c1) in &self.terms {
            for ((j2, a2), c2) in &rhs.terms {
                let alpha = [a1[0] + a2[0], a1[1] + a2[1], a1[2] + a2[2], a1[3] + a2[3]];
                acc.entry((j1 + j2, alpha)).or_default().add_product(c1, c2, &GaussRational::ONE);
            }
        }
        let mut out = XiPoly::default();
        for (k, sink) in acc {
            out.push(k.0, k.1, &sink.finish());
        }
        out
    }

    /// `d/dx_k`, including the derivative of `r0`.
    pub fn d_x(&self, k: usize, table: &SymbolTable) -> XiPoly {
        let mut out = XiPoly::default();
        for ((j, alpha), c) in &self.terms {
            out.push(*j, *alpha, &table.d_coord(k, c));
            if *j == 0 {
                continue;
            }
            for l in 0..4 {
                let dg = table.d_coord(k, &table.g_inv_diag[l]);
                if dg.is_zero() {
                    continue;
                }
                let mut a = *alpha;
                a[l] += 2;
                out.push(j + 1, a, &c.mul(&dg).scale(&GaussRational::int(-(*j as i64))));
            }
        }
        out
    }

    /// `d/dxi_k`; only valid for `r0`-free polynomials.
    pub fn d_xi(&self, k: usize) -> XiPoly {
        let mut out = XiPoly::default();
        for ((j, alpha), c) in &self.terms {
            assert_eq!(*j, 0, "d_xi of r0 is not supported");
            if alpha[k] == 0 {
                continue;
            }
            let mut a = *alpha;
            a[k] -= 1;
            out.push(0, a, &c.scale(&GaussRational::int(alpha[k] as i64)));
        }
        out
    }
}

/// `p2`, `p1`, `p0` as polynomials in `xi`.
pub fn symbol_parts(table: &SymbolTable) -> [XiPoly; 3] {
    let mut p2 = XiPoly::default();
    let mut p1 = XiPoly::default();
    for k in 0..4 {
        let mut a2 = [0; 4];
        a2[k] = 2;
        p2.push(0, a2, &table.g_inv_diag[k]);
        let mut a1 = [0; 4];
        a1[k] = 1;
        p1.push(0, a1, &table.p1_linear[k]);
    }
    [XiPoly::monomial(0, [0; 4], table.p0.clone()), p1, p2]
}

/// Multi-indices `b` with `|b| = m`.
fn multi_indices(m: usize) -> Vec<Alpha> {
    let mut out = Vec::new();
    for b0 in 0..=m {
        for b1 in 0..=m - b0 {
            for b2 in 0..=m - b0 - b1 {
                let b3 = m - b0 - b1 - b2;
                out.push([b0 as u8, b1 as u8, b2 as u8, b3 as u8]);
            }
        }
    }
    out
}

fn factorial(n: u8) -> i64 {
    (1..=n as i64).product()
}

/// `(-i)^|b| / b!`.
fn composition_weight(b: &Alpha) -> GaussRational {
    let len: u8 = b.iter().sum();
    let denom: i64 = b.iter().map(|&x| factorial(x)).product();
    let unit = match len % 4 {
        0 => GaussRational::ONE,
        1 => GaussRational::imag(Rational::integer(-1)),
        2 => GaussRational::int(-1),
        _ => GaussRational::i(),
    };
    unit.scale(&Rational::new(1, denom).expect("nonzero"))
}

fn apply_d_xi(p: &XiPoly, b: &Alpha) -> XiPoly {
    let mut out = p.clone();
    for k in 0..4 {
        for _ in 0..b[k] {
            out = out.d_xi(k);
        }
    }
    out
}

fn apply_d_x(r: &XiPoly, b: &Alpha, table: &SymbolTable) -> XiPoly {
    let mut out = r.clone();
    for k in 0..4 {
        for _ in 0..b[k] {
            if out.terms.is_empty() {
                return out;
            }
            out = out.d_x(k, table);
        }
    }
    out
}

/// `r_0, ..., r_n` by raw composition.
pub fn slow_parametrix(n: usize, table: &SymbolTable) -> Vec<XiPoly> {
    let parts = symbol_parts(table);
    let mut rs = vec![XiPoly::monomial(1, [0; 4], SymExpr::one())];
    for level in 1..=n {
        let mut acc = XiPoly::default();
        for (k, p) in parts.iter().enumerate() {
            for (m, r) in rs.iter().enumerate() {
                // |b| = level + k - m - 2 must be non-negative and at most k
                let Some(len) = (level + k).checked_sub(m + 2) else { continue };
                if len > k || (k == 2 && len == 0) {
                    continue;
                }
                for b in multi_indices(len) {
                    let dp = apply_d_xi(p, &b);
                    if dp.terms.is_empty() {
                        continue;
                    }
                    let dr = apply_d_x(r, &b, table);
                    acc.add(&dp.mul(&dr).scale(&composition_weight(&b)));
                }
            }
        }
        let r0 = XiPoly::monomial(1, [0; 4], SymExpr::one());
        rs.push(r0.mul(&acc).scale(&GaussRational::int(-1)));
    }
    rs
}

/// The nodes `r_{n,j,alpha}` of the slow computation.
pub fn slow_oracle_rn(n: usize, table: &SymbolTable) -> BTreeMap<NodeKey, SymExpr> {
    let rs = slow_parametrix(n, table);
    rs[n]
        .terms
        .iter()
        .map(|((j, alpha), c)| (NodeKey { n: n as u8, j: *j, alpha: *alpha }, c.clone()))
        .collect()
}

/// Converts a stored engine level into the same shape for comparison.
pub fn level_as_nodes(n: usize, level: &Level) -> BTreeMap<NodeKey, SymExpr> {
    level
        .iter()
        .map(|(alpha, c)| (NodeKey::for_alpha(n, *alpha).expect("stored keys are valid"), c.clone()))
        .collect()
}

/// Symbol of `D o D` from the first-order symbol of `D`:
/// `sigma sigma - i sum_k d_xi_k sigma d_x_k sigma`.
pub fn compose_dirac(d: &DiracSymbol, table: &SymbolTable) -> XiPoly {
    let mut sigma = XiPoly::monomial(0, [0; 4], d.constant.clone());
    for k in 0..4 {
        let mut a = [0; 4];
        a[k] = 1;
        sigma.push(0, a, &d.linear[k]);
    }
    let mut out = sigma.mul(&sigma);
    for k in 0..4 {
        let dx = sigma.d_x(k, table);
        let first = XiPoly::monomial(0, [0; 4], d.linear[k].clone());
        out.add(&first.mul(&dx).scale(&GaussRational::imag(Rational::integer(-1))));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::MemoTable;
    use crate::geometry::{dirac_symbol, Coords};

    #[test]
    fn dirac_square_reproduces_symbol_tables() {
        for coords in [Coords::Hopf, Coords::Spherical] {
            let table = coords.symbols();
            let composed = compose_dirac(&dirac_symbol(coords), &table);
            let [p0, p1, p2] = symbol_parts(&table);
            let mut diff = composed;
            diff.add(&p0.scale(&GaussRational::int(-1)));
            diff.add(&p1.scale(&GaussRational::int(-1)));
            diff.add(&p2.scale(&GaussRational::int(-1)));
            // equal up to sin^2 + cos^2 = 1, so compare exact values
            for point in table.eval_points() {
                for ((j, alpha), c) in &diff.terms {
                    let v = c.eval_angles(&point).unwrap();
                    assert!(v.is_zero(), "{coords:?} r0^{j} xi^{alpha:?}: {c:?}");
                }
            }
        }
    }

    #[test]
    fn slow_level_one_is_base_cases() {
        let table = Coords::Hopf.symbols();
        let slow = slow_oracle_rn(1, &table);
        let mut memo = MemoTable::new(table);
        memo.compute_level(1);
        assert_eq!(slow, level_as_nodes(1, memo.level(1).unwrap()));
        assert_eq!(slow.len(), 9);
    }

    #[test]
    fn slow_oracle_level_zero() {
        let slow = slow_oracle_rn(0, &Coords::Hopf.symbols());
        assert_eq!(slow.len(), 1);
        assert_eq!(slow[&NodeKey { n: 0, j: 1, alpha: [0; 4] }], SymExpr::one());
    }

    #[test]
    fn recursion_matches_raw_composition() {
        for coords in [Coords::Hopf, Coords::Spherical] {
            let table = coords.symbols();
            let rs = slow_parametrix(4, &table);
            let mut memo = MemoTable::new(table);
            memo.ensure(4);
            for n in 0..=4 {
                let slow: BTreeMap<_, _> = rs[n]
                    .terms
                    .iter()
                    .map(|((j, a), c)| (NodeKey { n: n as u8, j: *j, alpha: *a }, c.clone()))
                    .collect();
                assert_eq!(slow, level_as_nodes(n, memo.level(n).unwrap()), "{coords:?} level {n}");
            }
        }
    }
}
