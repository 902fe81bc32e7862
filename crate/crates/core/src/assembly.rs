//! From a level of parametrix nodes to the exact coefficient `a_n(t)`.
//!
//! ```text
//! tr(e_n) = sum c_alpha / (j-1)! tr(r_{n,j,alpha}) prod_k g_kk^((alpha_k+1)/2) / sqrt(g)
//! a_n     = tr(e_n) a^3 vol(S^3) / (16 pi^4)
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::clifford::Blade;
use crate::engine::{Alpha, MemoTable, NodeKey};
use crate::error::{Error, Result};
use crate::expr::{AngleMonomial, AnglePoint, JetMonomial, SymExpr, TermSink};
use crate::geometry::SymbolTable;
use crate::scalar::{gamma_half, GaussRational, Rational, Scalar};

/// Gaussian moment `c_alpha = prod_k Gamma((alpha_k+1)/2)`, zero when any
/// component is odd.
pub fn moment(alpha: &Alpha) -> Scalar {
    if alpha.iter().any(|a| a % 2 == 1) {
        return Scalar::zero();
    }
    alpha
        .iter()
        .fold(Scalar::one(), |acc, &a| &acc * &gamma_half(a as u32 / 2))
}

fn factorial(n: u32) -> Rational {
    (1..=n as i64).fold(Rational::ONE, |acc, k| &acc * &Rational::integer(k))
}

/// Square root of a blade-free monomial with coefficient one and even exponents.
fn monomial_sqrt(x: &SymExpr) -> Result<SymExpr> {
    let [(key, c)] = x.terms() else {
        return Err(Error::Invariant(format!("not a monomial: {x:?}")));
    };
    let even = key.angles.0.iter().all(|e| e % 2 == 0) && key.jets.0.iter().all(|e| e % 2 == 0);
    if *c != GaussRational::ONE || !key.blade.is_unit() || !even {
        return Err(Error::Invariant(format!("no monomial square root of {x:?}")));
    }
    Ok(SymExpr::monomial(
        GaussRational::ONE,
        Blade::UNIT,
        AngleMonomial(key.angles.0.map(|e| e / 2)),
        JetMonomial(key.jets.0.map(|e| e / 2)),
    ))
}

/// `tr(e_n)` as an expression in the angles, before evaluation.
pub fn trace_density(n: usize, memo: &mut MemoTable) -> Result<SymExpr> {
    Ok(trace_density_counted(n, memo)?.0)
}

/// [`trace_density`] plus the number of nodes and terms it read.
fn trace_density_counted(n: usize, memo: &mut MemoTable) -> Result<(SymExpr, usize, usize)> {
    let nodes = memo.trace_nodes(n);
    let counts = (nodes.len(), nodes.values().map(|v| v.len()).sum());
    let table = memo.table();
    let mut sqrt_g = Vec::with_capacity(4);
    for g in &table.g_inv_diag {
        sqrt_g.push(monomial_sqrt(&g.monomial_inverse()?)?);
    }
    let inv_vol = table.volume_density.monomial_inverse()?;

    let parts: Vec<SymExpr> = nodes
        .par_iter()
        .map(|(alpha, r)| {
            let key = NodeKey::for_alpha(n, *alpha).expect("stored keys are valid");
            let c = moment(alpha);
            let weight = c.value.scale(&Rational::integer(4)).scale(
                &factorial(key.j as u32 - 1).recip().expect("factorials are nonzero"),
            );
            let mut factor = SymExpr::one();
            for k in 0..4 {
                factor = factor.mul(&sqrt_g[k].pow(alpha[k] as u32 + 1));
            }
            r.mul(&factor).scale(&weight)
        })
        .collect();
    let mut sink = TermSink::new();
    for p in &parts {
        sink.add(p);
    }
    drop(parts);
    // only the sum is regular, so divide by sqrt(g) here
    let sum = sink.finish().mul(&inv_vol);
    Ok((sum.scale_scalar(&Scalar::new(GaussRational::ONE, 4)), counts.0, counts.1))
}

/// Exact value of an angle-dependent expression at `point`; a surviving
/// `sqrt(d)` part is an error.
pub fn eval_at(density: &SymExpr, point: &AnglePoint) -> Result<SymExpr> {
    let q = density.eval_angles(point)?;
    if !q.radical.is_zero() {
        let first = q.radical.terms()[0].0.jets;
        return Err(Error::AngleDependence(format!(
            "sqrt({}) component survives, first at {:?}",
            q.d, first
        )));
    }
    Ok(q.rational)
}

/// `tr(e_n)` evaluated at one exact angle point.
pub fn assemble_trace_en(n: usize, memo: &mut MemoTable, point: &AnglePoint) -> Result<SymExpr> {
    eval_at(&trace_density(n, memo)?, point)
}

/// Outcome of comparing `tr(e_n)` at the two evaluation points.
#[derive(Clone, Debug)]
pub struct EtaReport {
    pub independent: bool,
    pub first_difference: Option<JetMonomial>,
    pub values: [SymExpr; 2],
}

fn compare_points(density: &SymExpr, table: &SymbolTable) -> Result<EtaReport> {
    let [pa, pb] = table.eval_points();
    let (va, vb) = rayon::join(|| eval_at(density, &pa), || eval_at(density, &pb));
    let (va, vb) = (va?, vb?);
    let diff = va.checked_sub(&vb)?;
    Ok(EtaReport {
        independent: diff.is_zero(),
        first_difference: diff.terms().first().map(|(k, _)| k.jets),
        values: [va, vb],
    })
}

/// Whether `tr(e_n)` takes the same value at both exact angle points.
pub fn eta_independence_check(n: usize, memo: &mut MemoTable) -> Result<EtaReport> {
    let density = trace_density(n, memo)?;
    compare_points(&density, memo.table())
}

/// `a_n(t)` from level `n`. Enforces angle independence, rationality, and
/// vanishing for odd `n`.
pub fn a_term(n: usize, memo: &mut MemoTable) -> Result<JetRationalPoly> {
    Ok(a_term_counted(n, memo)?.0)
}

/// [`a_term`] plus the number of trace nodes and terms assembled.
pub fn a_term_counted(n: usize, memo: &mut MemoTable) -> Result<(JetRationalPoly, usize, usize)> {
    let (density, nodes, terms) = trace_density_counted(n, memo)?;
    let table = memo.table();
    let report = compare_points(&density, table)?;
    if !report.independent {
        return Err(Error::AngleDependence(format!(
            "tr(e_{n}) differs between the evaluation points at {:?}",
            report.first_difference.expect("nonzero difference")
        )));
    }
    let [value, _] = report.values;
    let (vol, pi_power) = &table.angular_volume;
    let norm = Scalar::new(
        GaussRational::real(vol.checked_div(&Rational::integer(16))?),
        2 * pi_power - 8,
    );
    let a_n = value.shift_a(3).scale_scalar(&norm);
    let poly = JetRationalPoly::from_sym(&a_n)?;
    if n % 2 == 1 && !poly.is_zero() {
        return Err(Error::Invariant(format!("a_{n} should vanish but has {} terms", poly.len())));
    }
    Ok((poly, nodes, terms))
}

/// Exact rational polynomial in the jets of `a`, divided by `a^a_power`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct JetRationalPoly {
    terms: BTreeMap<JetMonomial, Rational>,
    a_power: i32,
}

impl JetRationalPoly {
    /// Builds `(sum c m) / a^a_power`, dropping zero coefficients.
    pub fn new(terms: impl IntoIterator<Item = (JetMonomial, Rational)>, a_power: i32) -> Self {
        let mut map: BTreeMap<JetMonomial, Rational> = BTreeMap::new();
        for (m, c) in terms {
            *map.entry(m).or_insert(Rational::ZERO) += &c;
        }
        map.retain(|_, c| !c.is_zero());
        JetRationalPoly { terms: map, a_power }
    }

    /// Converts an angle-free, blade-free expression; fails unless every
    /// coefficient is a real rational with no `sqrt(pi)`.
    pub fn from_sym(x: &SymExpr) -> Result<Self> {
        if x.is_zero() {
            return Ok(Self::default());
        }
        if x.sqrt_pi_exp() != 0 {
            return Err(Error::Rationality(format!("sqrt(pi)^{} survives", x.sqrt_pi_exp())));
        }
        let mut terms = Vec::with_capacity(x.len());
        for (k, c) in x.terms() {
            if !k.blade.is_unit() || !k.angles.is_one() {
                return Err(Error::Invariant(format!("unexpected blade or angle in {k:?}")));
            }
            if !c.is_real() {
                return Err(Error::Rationality(format!("imaginary coefficient {c} at {:?}", k.jets)));
            }
            terms.push((k.jets, c.re.clone()));
        }
        Ok(Self::new(terms, 0))
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

    pub fn a_power(&self) -> i32 {
        self.a_power
    }

    /// Numerator terms in the current form.
    pub fn terms(&self) -> &BTreeMap<JetMonomial, Rational> {
        &self.terms
    }

    /// Numerator coefficient of `m` in the current form.
    pub fn coefficient(&self, m: &JetMonomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or(Rational::ZERO)
    }

    /// Same value with denominator `a^d`. Fails if the numerator would need
    /// a negative power of `a`.
    pub fn with_a_power(&self, d: i32) -> Result<Self> {
        let shift = d - self.a_power;
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            let p = m.a_power() + shift;
            if p < 0 {
                return Err(Error::Invariant(format!("a^{d} does not clear the denominator of {m:?}")));
            }
            let p = i8::try_from(p).map_err(|_| Error::ExponentOverflow)?;
            terms.insert(m.with_a_power(p as i32), c.clone());
        }
        Ok(JetRationalPoly { terms, a_power: d })
    }

    /// Smallest non-negative denominator power with a polynomial numerator.
    pub fn reduced(&self) -> Self {
        let low = self.terms.keys().map(|m| m.a_power()).min().unwrap_or(0);
        let d = (self.a_power - low).max(0);
        self.with_a_power(d).expect("reduction keeps exponents non-negative")
    }

    /// The per-term layout of the printed tables: `a^max(0, order-4)` in the
    /// denominator.
    pub fn table_form(&self, order: usize) -> Result<Self> {
        self.with_a_power((order as i32 - 4).max(0))
    }

    /// `Q = a_order * a^(order-3)`, stored with `a_power = order - 3`.
    pub fn q_form(&self, order: usize) -> Result<Self> {
        let d = order as i32 - 3;
        let shift = d - self.a_power;
        let terms = self
            .terms
            .iter()
            .map(|(m, c)| (m.with_a_power(m.a_power() + shift), c.clone()))
            .collect();
        Ok(JetRationalPoly { terms, a_power: d })
    }

    /// Smallest denominator power at least as large as both sides' own that
    /// clears both.
    fn common_a_power(&self, other: &Self) -> i32 {
        [self.a_power, other.a_power, self.reduced().a_power, other.reduced().a_power]
            .into_iter()
            .max()
            .expect("nonempty")
    }

    /// Value-level equality, independent of the chosen denominator.
    pub fn same_value(&self, other: &Self) -> bool {
        self.diff(other).is_empty()
    }

    /// Numerator terms present on one side only or with different coefficients.
    pub fn diff(&self, other: &Self) -> Vec<(JetMonomial, Rational, Rational)> {
        let d = self.common_a_power(other);
        let a = self.with_a_power(d).expect("raising the denominator is always possible");
        let b = other.with_a_power(d).expect("raising the denominator is always possible");
        let mut out = Vec::new();
        for m in a.terms.keys().chain(b.terms.keys().filter(|m| !a.terms.contains_key(m))) {
            let (x, y) = (a.coefficient(m), b.coefficient(m));
            if x != y {
                out.push((*m, x, y));
            }
        }
        out.sort_by(|p, q| p.0.cmp(&q.0));
        out
    }

    /// Numerical value for given jets `a, a', a'', ...`.
    pub fn eval_f64(&self, jets: &[f64]) -> f64 {
        let num: f64 = self
            .terms
            .iter()
            .map(|(m, c)| {
                m.0.iter()
                    .enumerate()
                    .filter(|(_, &e)| e != 0)
                    .fold(c.to_f64(), |acc, (k, &e)| acc * jets[k].powi(e as i32))
            })
            .sum();
        num / jets[0].powi(self.a_power)
    }

    /// Terms in display order: highest derivative first, then by degree.
    fn display_order(&self) -> Vec<(&JetMonomial, &Rational)> {
        let mut v: Vec<_> = self.terms.iter().collect();
        v.sort_by(|(m1, _), (m2, _)| {
            let key = |m: &JetMonomial| {
                let mut e = m.0;
                e.reverse();
                e
            };
            key(m2).cmp(&key(m1))
        });
        v
    }

    pub fn terms_json(&self) -> Value {
        Value::Array(
            self.display_order()
                .into_iter()
                .map(|(m, c)| json!({ "coeff": c.to_string(), "jets": m.to_vec() }))
                .collect(),
        )
    }

    pub fn to_text(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut out = String::new();
        for (idx, (m, c)) in self.display_order().into_iter().enumerate() {
            let neg = c.signum() < 0;
            if idx == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let num = c.numerator().to_string();
            let num = num.trim_start_matches('-');
            let den = c.denominator().to_string();
            let mono = text_monomial(m);
            match (num, mono.is_empty()) {
                (n, true) => out.push_str(n),
                ("1", false) => out.push_str(&mono),
                (n, false) => {
                    let _ = write!(out, "{n} {mono}");
                }
            }
            if den != "1" {
                let _ = write!(out, "/{den}");
            }
        }
        match self.a_power {
            0 => out,
            d if self.len() == 1 => format!("{out}/a(t)^{d}"),
            d => format!("({out})/a(t)^{d}"),
        }
    }

    pub fn to_latex(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut out = String::new();
        for (idx, (m, c)) in self.display_order().into_iter().enumerate() {
            let neg = c.signum() < 0;
            if idx == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let num = c.numerator().to_string();
            let num = num.trim_start_matches('-').to_string();
            let den = c.denominator().to_string();
            let mono = m.to_latex();
            let coeff = if den == "1" { num.clone() } else { format!("\\frac{{{num}}}{{{den}}}") };
            if mono.is_empty() {
                out.push_str(&coeff);
            } else if coeff == "1" {
                out.push_str(&mono);
            } else {
                let _ = write!(out, "{coeff} {mono}");
            }
        }
        match self.a_power {
            0 => out,
            d => format!("\\frac{{1}}{{a(t)^{{{d}}}}}\\left({out}\\right)"),
        }
    }
}

fn text_monomial(m: &JetMonomial) -> String {
    let mut parts = Vec::new();
    for (k, &e) in m.0.iter().enumerate() {
        if e == 0 {
            continue;
        }
        let base = match k {
            0 => "a(t)".to_string(),
            1..=3 => format!("a{}(t)", "'".repeat(k)),
            _ => format!("a^({k})(t)"),
        };
        parts.push(if e == 1 { base } else { format!("{base}^{e}") });
    }
    parts.join(" ")
}

/// JSON record of one coefficient: the table-style form at top level and the
/// reduced form under `"reduced"`.
pub fn result_json(poly: &JetRationalPoly, order: usize, coords: &str) -> Result<Value> {
    let table = poly.table_form(order)?;
    let reduced = poly.reduced();
    Ok(json!({
        "order": order,
        "coords": coords,
        "aPower": table.a_power(),
        "terms": table.terms_json(),
        "reduced": { "aPower": reduced.a_power(), "terms": reduced.terms_json() },
    }))
}

/// Monomials of the Q-form of `a_order` whose degree and weight differ, or
/// whose common value is outside `{order-2, order}`.
pub fn grading_violations(poly: &JetRationalPoly, order: usize) -> Result<Vec<JetMonomial>> {
    let q = poly.q_form(order)?;
    let allowed = [order as i32 - 2, order as i32];
    Ok(q.terms()
        .keys()
        .filter(|m| {
            let (deg, weight) = m.degree_and_weight();
            deg != weight || !allowed.contains(&deg)
        })
        .copied()
        .collect())
}
