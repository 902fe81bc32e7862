//! Reference values and independent checks of the computed coefficients.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::assembly::JetRationalPoly;
use crate::engine::{MemoTable, NodeKey};
use crate::error::{Error, Result};
use crate::expr::JetMonomial;
use crate::geometry::Coords;
use crate::hopf_e::e_from_r;
use crate::scalar::{gamma_half, GaussRational, Rational, Scalar};

const REFERENCE_JSON: &str = include_str!("../data/reference_coefficients.json");
const REFERENCE_SHA256: &str = "55fc69292ce91159b2638c8d6b52624aab97cfd73cd90658d844b819391a4756";

#[derive(Deserialize)]
struct RawFile {
    version: u32,
    coefficients: Vec<RawCoefficient>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct RawCoefficient {
    order: usize,
    prefactor: String,
    a_power: i32,
    terms: Vec<RawTerm>,
}

#[derive(Deserialize)]
struct RawTerm {
    coeff: String,
    jets: Vec<i64>,
}

/// A published closed form, with the global prefactor folded in.
#[derive(Clone, Debug)]
pub struct ReferenceCoefficient {
    pub order: usize,
    pub prefactor: Rational,
    pub expr: JetRationalPoly,
}

/// Parses the bundled reference table after checking its checksum.
pub fn reference_coefficients() -> Result<Vec<ReferenceCoefficient>> {
    parse_reference(REFERENCE_JSON, REFERENCE_SHA256)
}

fn parse_reference(text: &str, sha: &str) -> Result<Vec<ReferenceCoefficient>> {
    let digest: String = Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
    if digest != sha {
        return Err(Error::Parse(format!("reference data checksum {digest} != {sha}")));
    }
    let raw: RawFile = serde_json::from_str(text)?;
    if raw.version != 1 {
        return Err(Error::Parse(format!("unsupported reference version {}", raw.version)));
    }
    let mut out = Vec::new();
    for c in raw.coefficients {
        let prefactor: Rational = c.prefactor.parse()?;
        let mut terms = Vec::new();
        for t in &c.terms {
            let coeff: Rational = t.coeff.parse()?;
            terms.push((JetMonomial::from_exponents(&t.jets)?, &coeff * &prefactor));
        }
        let expr = JetRationalPoly::new(terms, c.a_power);
        if expr.len() != c.terms.len() {
            return Err(Error::Parse(format!("duplicate monomials in reference a_{}", c.order)));
        }
        out.push(ReferenceCoefficient { order: c.order, prefactor, expr });
    }
    Ok(out)
}

/// The reference closed form for `order`, if tabulated.
pub fn reference(order: usize) -> Result<Option<ReferenceCoefficient>> {
    Ok(reference_coefficients()?.into_iter().find(|o| o.order == order))
}

/// One monomial on which computed and reference values disagree.
#[derive(Clone, Debug, Serialize)]
pub struct MonomialDiff {
    pub jets: Vec<i64>,
    pub computed: String,
    pub reference: String,
}

/// Monomial-by-monomial diff against the reference, in the reference's
/// denominator convention. Empty means exact agreement.
pub fn compare_to_reference(order: usize, computed: &JetRationalPoly) -> Result<Vec<MonomialDiff>> {
    let oracle = reference(order)?
        .ok_or_else(|| Error::Invariant(format!("no reference value for a_{order}")))?;
    Ok(computed
        .diff(&oracle.expr)
        .into_iter()
        .map(|(m, a, b)| MonomialDiff { jets: m.to_vec(), computed: a.to_string(), reference: b.to_string() })
        .collect())
}

/// `even(S) + C odd(S)` with `S = sin t`, `C = cos t`; keys are powers of `S`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RoundPoly {
    pub even: BTreeMap<u32, Rational>,
    pub odd: BTreeMap<u32, Rational>,
}

impl RoundPoly {
    fn add(part: &mut BTreeMap<u32, Rational>, power: u32, c: &Rational) {
        let slot = part.entry(power).or_insert(Rational::ZERO);
        *slot += c;
        if slot.is_zero() {
            part.remove(&power);
        }
    }

    pub fn eval_f64(&self, t: f64) -> f64 {
        let (s, c) = (t.sin(), t.cos());
        let sum = |p: &BTreeMap<u32, Rational>| p.iter().map(|(k, v)| v.to_f64() * s.powi(*k as i32)).sum::<f64>();
        sum(&self.even) + c * sum(&self.odd)
    }

    pub fn to_text(&self) -> String {
        let mut parts = Vec::new();
        for (k, v) in &self.even {
            parts.push(format!("({v}) S^{k}"));
        }
        for (k, v) in &self.odd {
            parts.push(format!("({v}) C S^{k}"));
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }
}

fn binomial(n: u32, k: u32) -> i64 {
    (0..k).fold(1i64, |acc, i| acc * (n - i) as i64 / (i + 1) as i64)
}

/// Specializes to `a(t) = sin t`: `a^(2m) -> (-1)^m S`, `a^(2m+1) -> (-1)^m C`,
/// then `C^2 -> 1 - S^2` and division by `S^a_power`.
pub fn round_reduce(p: &JetRationalPoly) -> Result<RoundPoly> {
    let p = &p.reduced();
    let mut num = RoundPoly::default();
    for (m, c) in p.terms() {
        let (mut s_pow, mut c_pow, mut sign) = (0u32, 0u32, 1i64);
        for (k, &e) in m.exponents().iter().enumerate() {
            if e == 0 {
                continue;
            }
            if e < 0 {
                return Err(Error::NegativeJetPower { order: k });
            }
            let e = e as u32;
            if (k / 2) % 2 == 1 && e % 2 == 1 {
                sign = -sign;
            }
            if k % 2 == 0 {
                s_pow += e;
            } else {
                c_pow += e;
            }
        }
        // C^(2q+r) = C^r (1 - S^2)^q
        let q = c_pow / 2;
        let part = if c_pow % 2 == 0 { &mut num.even } else { &mut num.odd };
        for i in 0..=q {
            let b = binomial(q, i) * if i % 2 == 0 { sign } else { -sign };
            RoundPoly::add(part, s_pow + 2 * i, &(c * &Rational::integer(b)));
        }
    }
    let d = p.a_power();
    let shift = |part: &BTreeMap<u32, Rational>| -> Result<BTreeMap<u32, Rational>> {
        part.iter()
            .map(|(k, v)| {
                let e = *k as i64 - d as i64;
                u32::try_from(e)
                    .map(|e| (e, v.clone()))
                    .map_err(|_| Error::Invariant(format!("S^{k} is not divisible by S^{d}")))
            })
            .collect()
    };
    Ok(RoundPoly { even: shift(&num.even)?, odd: shift(&num.odd)? })
}

/// `rational + pi_coefficient * pi`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundIntegral {
    pub rational: Rational,
    pub pi_coefficient: Rational,
}

impl RoundIntegral {
    pub fn is_rational(&self) -> bool {
        self.pi_coefficient.is_zero()
    }
}

/// `int_0^pi S^m dt`, split into rational and `pi` parts.
fn sine_power_integral(m: u32) -> (Rational, Rational) {
    // I_m = (m-1)/m I_{m-2}, I_0 = pi, I_1 = 2
    let (mut r, mut pi) = if m % 2 == 0 { (Rational::ZERO, Rational::ONE) } else { (Rational::integer(2), Rational::ZERO) };
    let mut k = 2 + m % 2;
    while k <= m {
        let f = Rational::new(k as i64 - 1, k as i64).expect("k > 0");
        r = &r * &f;
        pi = &pi * &f;
        k += 2;
    }
    (r, pi)
}

/// `int_0^pi q(S) dt` for a reduced round polynomial without `C` part.
pub fn integrate_round(q: &RoundPoly) -> Result<RoundIntegral> {
    if !q.odd.is_empty() {
        return Err(Error::Invariant("cos(t) part must vanish before integrating".into()));
    }
    let mut out = RoundIntegral { rational: Rational::ZERO, pi_coefficient: Rational::ZERO };
    for (m, c) in &q.even {
        let (r, pi) = sine_power_integral(*m);
        out.rational += &(c * &r);
        out.pi_coefficient += &(c * &pi);
    }
    Ok(out)
}

/// `H_{n,j,alpha_1}` values as coefficients of `1/sqrt(pi)`.
#[derive(Clone, Debug, Default)]
pub struct HTable {
    values: BTreeMap<(usize, usize, usize), GaussRational>,
}

impl HTable {
    pub fn get(&self, n: usize, j: usize, alpha: usize) -> GaussRational {
        self.values.get(&(n, j, alpha)).cloned().unwrap_or(GaussRational::ZERO)
    }

    /// As a [`Scalar`] including the `1/sqrt(pi)`.
    pub fn scalar(&self, n: usize, j: usize, alpha: usize) -> Scalar {
        Scalar::new(self.get(n, j, alpha), -1)
    }

    fn set(&mut self, key: (usize, usize, usize), v: GaussRational) {
        if !v.is_zero() {
            self.values.insert(key, v);
        }
    }

    /// Initial data at `n = 1, 2`, then the recursion up to `max_n`.
    pub fn build(max_n: usize) -> Self {
        let mut h = HTable::default();
        let three_half_i = GaussRational::ratio(0, 1, 3, 2);
        h.set((1, 2, 1), three_half_i.clone());
        h.set((1, 3, 1), three_half_i);
        h.set((2, 4, 2), GaussRational::int(-1));
        h.set((2, 3, 0), GaussRational::ratio(3, 4, 0, 1));
        h.set((2, 2, 0), GaussRational::ratio(3, 4, 0, 1));
        h.set((2, 3, 2), GaussRational::ratio(-3, 2, 0, 1));
        let two_i = GaussRational::imag(Rational::integer(2));
        for n in 3..=max_n {
            for j in n / 2 + 1..=2 * n + 1 {
                let inv = Rational::new(1, j as i64 - 1).expect("j >= 2");
                for alpha in 0..=2 * j {
                    let mut v = h.get(n - 2, j - 1, alpha);
                    if alpha >= 1 {
                        v += &(&two_i * &h.get(n - 1, j - 1, alpha - 1));
                    }
                    h.set((n, j, alpha), v.scale(&inv));
                }
            }
        }
        h
    }

    /// `h_n = sum_j sum_k Gamma(k + 1/2) H_{n,j,2k}`.
    pub fn h(&self, n: usize) -> Result<Rational> {
        let mut total = Scalar::zero();
        for j in n / 2 + 1..=2 * n + 1 {
            // k <= j - n/2 - 1
            let top = 2 * j as i64 - n as i64 - 2;
            if top < 0 {
                continue;
            }
            for k in 0..=(top / 2) as usize {
                let term = &gamma_half(k as u32) * &self.scalar(n, j, 2 * k);
                total = total.checked_add(&term)?;
            }
        }
        if total.is_zero() {
            return Ok(Rational::ZERO);
        }
        if total.sqrt_pi_exp != 0 || !total.value.is_real() {
            return Err(Error::Rationality(format!("h_{n} = {total}")));
        }
        Ok(total.value.re)
    }
}

/// `h_n` for every `n` in `2..=max_n`.
pub fn h_recursion(max_n: usize) -> Result<BTreeMap<usize, Rational>> {
    let table = HTable::build(max_n);
    (2..=max_n).map(|n| Ok((n, table.h(n)?))).collect()
}

/// Published values of `h_2, h_4, ..., h_20`.
pub fn h_reference() -> BTreeMap<usize, Rational> {
    [
        (2, 4i64),
        (4, 40),
        (6, 560),
        (8, 10080),
        (10, 221760),
        (12, 5765760),
        (14, 172972800),
        (16, 5881075200),
        (18, 223480857600),
        (20, 9386196019200),
    ]
    .into_iter()
    .map(|(n, d)| (n, Rational::new(1, d).expect("nonzero")))
    .collect()
}

/// Coefficient of `a^(n-1) a^(n)` in the Q-form of `a_n`.
pub fn extract_highest(n: usize, a_n: &JetRationalPoly) -> Result<Rational> {
    let q = a_n.q_form(n)?;
    let mut m = JetMonomial::var(n, 1);
    m = m.with_a_power(n as i32 - 1);
    match q.terms().get(&m) {
        Some(c) => Ok(c.clone()),
        None => Err(Error::Invariant(format!("a^{} a^({n}) is absent from a_{n}", n - 1))),
    }
}

/// Exact equality of two results regardless of denominator convention.
pub fn cross_check(a: &JetRationalPoly, b: &JetRationalPoly) -> bool {
    a.same_value(b)
}

/// Keys whose `a^n e_{n,j,alpha}` has a monomial with degree != weight.
/// Needs every level up to `max_n` held in `memo` (Hopf symbols).
pub fn node_grading_violations(memo: &MemoTable, max_n: usize) -> Result<Vec<NodeKey>> {
    if memo.table().coords != Coords::Hopf {
        return Err(Error::Invariant("the e-normalization is specific to Hopf coordinates".into()));
    }
    let mut bad = Vec::new();
    for n in 0..=max_n {
        let level = memo
            .level(n)
            .ok_or_else(|| Error::Invariant(format!("level {n} is not held")))?;
        for (alpha, r) in level {
            let key = NodeKey::for_alpha(n, *alpha).expect("stored keys are valid");
            let e = e_from_r(&key, r).shift_a(n as i32);
            let ok = e.terms().iter().all(|(k, _)| {
                let (deg, weight) = k.jets.degree_and_weight();
                deg == weight && k.jets.exponents().iter().all(|&x| x >= 0)
            });
            if !ok {
                bad.push(key);
            }
        }
    }
    Ok(bad)
}

/// `max |a_n(sin t) - round_reduce(a_n)(t)| / |.|` at `t`.
pub fn round_float_error(a_n: &JetRationalPoly, t: f64) -> Result<f64> {
    let reduced = round_reduce(a_n)?;
    let max_order = a_n.terms().keys().map(|m| m.max_order()).max().unwrap_or(0);
    let jets: Vec<f64> = (0..=max_order)
        .map(|k| match k % 4 {
            0 => t.sin(),
            1 => t.cos(),
            2 => -t.sin(),
            _ => -t.cos(),
        })
        .collect();
    let direct = a_n.eval_f64(&jets);
    let via = reduced.eval_f64(t);
    let scale = direct.abs().max(via.abs()).max(f64::MIN_POSITIVE);
    Ok((direct - via).abs() / scale)
}

/// Outcome of one named check.
#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CheckResult {
    /// Runs `f` and records its outcome and wall time. Errors count as failures.
    pub fn run(name: impl Into<String>, f: impl FnOnce() -> Result<(bool, String)>) -> Self {
        let start = Instant::now();
        let (passed, detail) = match f() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        CheckResult { name: name.into(), passed, detail, seconds: start.elapsed().as_secs_f64() }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Report {
    pub checks: Vec<CheckResult>,
}

impl Report {
    pub fn push(&mut self, c: CheckResult) {
        self.checks.push(c);
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_text(&self) -> String {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "{} {:width$}  {:>8.2}s  {}\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.seconds,
                c.detail
            ));
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        out.push_str(&format!("{} checks, {failed} failed\n", self.checks.len()));
        out
    }

    pub fn to_json(&self) -> Value {
        json!({ "passed": self.all_passed(), "checks": self.checks })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d).unwrap()
    }

    fn jets(e: &[i64]) -> JetMonomial {
        JetMonomial::from_exponents(e).unwrap()
    }

    #[test]
    fn reference_table_loads() {
        let refs = reference_coefficients().unwrap();
        let orders: Vec<_> = refs.iter().map(|o| o.order).collect();
        assert_eq!(orders, vec![0, 2, 4, 6, 8, 10, 12]);
        let counts: Vec<_> = refs.iter().map(|o| o.expr.len()).collect();
        assert_eq!(counts, vec![1, 3, 5, 14, 31, 62, 117]);
        let a10 = &refs[5].expr;
        assert_eq!(a10.a_power(), 6);
        assert_eq!(a10.coefficient(&jets(&[8, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1])), r(3, 665280));
        let a12 = &refs[6].expr;
        assert_eq!(a12.coefficient(&jets(&[0, 10, 1])), r(-749700, 17297280));
    }

    #[test]
    fn tampered_reference_is_rejected() {
        let text = REFERENCE_JSON.replacen("\"1/2\"", "\"1/3\"", 1);
        assert!(parse_reference(&text, REFERENCE_SHA256).is_err());
    }

    #[test]
    fn sine_integrals() {
        assert_eq!(sine_power_integral(0), (Rational::ZERO, Rational::ONE));
        assert_eq!(sine_power_integral(1), (r(2, 1), Rational::ZERO));
        assert_eq!(sine_power_integral(3), (r(4, 3), Rational::ZERO));
        assert_eq!(sine_power_integral(4), (Rational::ZERO, r(3, 8)));
        let s3 = RoundPoly { even: [(3, r(10331, 8648640))].into(), odd: BTreeMap::new() };
        assert_eq!(integrate_round(&s3).unwrap().rational, r(10331, 6486480));
    }

    #[test]
    fn round_reduction_of_small_orders() {
        let refs = reference_coefficients().unwrap();
        let a0 = round_reduce(&refs[0].expr).unwrap();
        assert_eq!(a0, RoundPoly { even: [(3, r(1, 2))].into(), odd: BTreeMap::new() });
        let a2 = round_reduce(&refs[1].expr).unwrap();
        assert_eq!(a2, RoundPoly { even: [(3, r(-1, 2))].into(), odd: BTreeMap::new() });
        for o in &refs[..4] {
            assert!(round_float_error(&o.expr, 0.9).unwrap() < 1e-12);
        }
    }

    #[test]
    fn round_reduction_needs_divisibility() {
        // (a'^2 - 1)/a = -S
        let p = JetRationalPoly::new([(jets(&[0, 2]), r(1, 1)), (jets(&[0]), r(-1, 1))], 1);
        assert_eq!(round_reduce(&p).unwrap().even, [(1, r(-1, 1))].into());
        let bad = JetRationalPoly::new([(jets(&[0, 2]), r(1, 1))], 1);
        assert!(round_reduce(&bad).is_err());
    }

    #[test]
    fn h_values_match_published_list() {
        let h = h_recursion(20).unwrap();
        for (n, expected) in h_reference() {
            assert_eq!(h[&n], expected, "h_{n}");
        }
    }

    #[test]
    fn highest_coefficient_of_reference_values() {
        for o in reference_coefficients().unwrap().into_iter().filter(|o| o.order >= 2) {
            assert_eq!(extract_highest(o.order, &o.expr).unwrap(), h_reference()[&o.order]);
        }
    }

    #[test]
    fn report_formats() {
        let mut rep = Report::default();
        rep.push(CheckResult::run("ok", || Ok((true, "fine".into()))));
        rep.push(CheckResult::run("bad", || Err(Error::Invariant("x".into()))));
        assert!(!rep.all_passed());
        assert!(rep.to_text().contains("FAIL bad"));
        assert_eq!(rep.to_json()["checks"][0]["passed"], json!(true));
    }
}
