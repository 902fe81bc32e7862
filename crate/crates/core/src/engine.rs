//! Level-by-level evaluation of the parametrix coefficients `r_{n,j,alpha}`.
//!
//! The parametrix term `r_n` of `D^2` is `sum r_{n,j,alpha} r0^j xi^alpha`
//! with `r0 = 1/p2`. For a given level `n` and multi-index `alpha` the power
//! `j` is forced by `2j - 2 - |alpha| = n`, so a level is stored as a map
//! `alpha -> expression` holding only nonzero nodes.
//!
//! Every node depends only on levels `n - 1` and `n - 2`:
//!
//! ```text
//! r_{n,j,a} = -p0 r_{n-2,j-1,a} - sum_k P_k r_{n-1,j-1,a-e_k}
//!   + i sum_k P_k d_k r_{n-2,j-1,a} + 2i sum_k g^kk d_k r_{n-1,j-1,a-e_k}
//!   + sum_k g^kk d_k^2 r_{n-2,j-1,a}
//!   + (2-j) sum_{k,l} (i d_k g^ll P_k + g^kk d_k^2 g^ll) r_{n-2,j-2,a-2e_l}
//!   + (4-2j) sum_{k,l} g^kk d_k g^ll (i r_{n-1,j-2,a-2e_l-e_k} + d_k r_{n-2,j-2,a-2e_l})
//!   + (3-j)(2-j) sum_{k,l,l'} g^kk d_k g^ll d_k g^l'l' r_{n-2,j-3,a-2e_l-2e_l'}
//! ```
//!
//! Symbol coefficients always multiply from the left.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::expr::{SymExpr, TermSink};
use crate::geometry::SymbolTable;
use crate::scalar::GaussRational;

pub type Alpha = [u8; 4];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeKey {
    pub n: u8,
    pub j: u8,
    pub alpha: Alpha,
}

impl NodeKey {
    /// The key with the forced `j`, if `(n, alpha)` can be nonzero at all.
    pub fn for_alpha(n: usize, alpha: Alpha) -> Option<NodeKey> {
        let total = n + alpha_len(&alpha);
        if total % 2 != 0 {
            return None;
        }
        let key = NodeKey { n: n as u8, j: (total / 2 + 1) as u8, alpha };
        key.is_valid().then_some(key)
    }

    /// `2j - 2 - |alpha| = n` and `n/2 + 1 <= j <= 2n + 1`.
    pub fn is_valid(&self) -> bool {
        let (n, j) = (self.n as usize, self.j as usize);
        2 * j == n + 2 + alpha_len(&self.alpha) && 2 * j >= n + 2 && j <= 2 * n + 1
    }
}

pub fn alpha_len(alpha: &Alpha) -> usize {
    alpha.iter().map(|&a| a as usize).sum()
}

fn sub(alpha: &Alpha, k: usize, by: u8) -> Option<Alpha> {
    let mut out = *alpha;
    out[k] = out[k].checked_sub(by)?;
    Some(out)
}

fn add(alpha: &Alpha, k: usize, by: u8) -> Alpha {
    let mut out = *alpha;
    out[k] += by;
    out
}

pub type Level = BTreeMap<Alpha, SymExpr>;

/// Symbol-dependent coefficients of the recursion, computed once per table.
pub struct Coefficients {
    active: Vec<usize>,
    p0: SymExpr,
    p: [SymExpr; 4],
    g: [SymExpr; 4],
    /// `g^kk d_k g^ll`, indexed `[k][l]`.
    b: [[SymExpr; 4]; 4],
    /// `sum_k (i d_k g^ll P_k + g^kk d_k^2 g^ll)`.
    m: [SymExpr; 4],
    /// `sum_k g^kk d_k g^ll d_k g^l'l'`.
    f: [[SymExpr; 4]; 4],
}

impl Coefficients {
    pub fn new(table: &SymbolTable) -> Self {
        let active: Vec<usize> = table.active_coords().collect();
        let g = table.g_inv_diag.clone();
        let dg = |k: usize, l: usize| table.d_coord(k, &g[l]);
        let mut b: [[SymExpr; 4]; 4] = Default::default();
        let mut m: [SymExpr; 4] = Default::default();
        let mut f: [[SymExpr; 4]; 4] = Default::default();
        for l in 0..4 {
            let mut sink = TermSink::new();
            for &k in &active {
                b[k][l] = g[k].mul(&dg(k, l));
                sink.add_product(&dg(k, l), &table.p1_linear[k], &GaussRational::i());
                sink.add_product(&g[k], &table.d_coord(k, &dg(k, l)), &GaussRational::ONE);
            }
            m[l] = sink.finish();
            for lp in 0..4 {
                let mut sink = TermSink::new();
                for &k in &active {
                    sink.add_product(&b[k][l], &dg(k, lp), &GaussRational::ONE);
                }
                f[l][lp] = sink.finish();
            }
        }
        Coefficients { active, p0: table.p0.clone(), p: table.p1_linear.clone(), g, b, m, f }
    }
}


/// Derivatives of one lower node, formed on first use.
struct Lazy<'a> {
    table: &'a SymbolTable,
    value: &'a SymExpr,
    d: [Option<SymExpr>; 4],
}

impl<'a> Lazy<'a> {
    fn new(table: &'a SymbolTable, value: &'a SymExpr) -> Self {
        Lazy { table, value, d: Default::default() }
    }

    fn d(&mut self, k: usize) -> &SymExpr {
        let (table, value) = (self.table, self.value);
        self.d[k].get_or_insert_with(|| table.d_coord(k, value))
    }
}

/// Output mode of a recursion step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Output {
    Full,
    /// Only the unit-blade part, which is all a trace needs.
    UnitOnly,
}

/// One step of the recursion for `(n, alpha)` given the two previous levels.
fn r_step(
    table: &SymbolTable,
    c: &Coefficients,
    n: usize,
    alpha: &Alpha,
    prev1: &Level,
    prev2: &Level,
    output: Output,
) -> SymExpr {
    let Some(key) = NodeKey::for_alpha(n, *alpha) else {
        return SymExpr::zero();
    };
    let j = key.j as i64;
    let one = GaussRational::ONE;
    let minus_one = GaussRational::int(-1);
    let i = GaussRational::i();
    let mut sink = TermSink::new();
    let put = |sink: &mut TermSink, x: &SymExpr, y: &SymExpr, k: &GaussRational| match output {
        Output::Full => sink.add_product(x, y, k),
        Output::UnitOnly => sink.add_product_unit(x, y, k),
    };

    if let Some(x) = prev2.get(alpha) {
        put(&mut sink, &c.p0, x, &minus_one);
        let mut lazy = Lazy::new(table, x);
        for &k in &c.active {
            let dk = lazy.d(k).clone();
            put(&mut sink, &c.p[k], &dk, &i);
            put(&mut sink, &c.g[k], &table.d_coord(k, &dk), &one);
        }
    }
    for k in 0..4 {
        if let Some(x) = sub(alpha, k, 1).and_then(|b| prev1.get(&b)) {
            put(&mut sink, &c.p[k], x, &minus_one);
            if c.active.contains(&k) {
                put(&mut sink, &c.g[k], &table.d_coord(k, x), &GaussRational::imag(2.into()));
            }
        }
    }
    let two_minus_j = GaussRational::int(2 - j);
    let four_minus_2j = GaussRational::int(4 - 2 * j);
    let cubic = GaussRational::int((3 - j) * (2 - j));
    for l in 0..4 {
        let Some(beta) = sub(alpha, l, 2) else { continue };
        if let Some(x) = prev2.get(&beta) {
            put(&mut sink, &c.m[l], x, &two_minus_j);
            if !four_minus_2j.is_zero() {
                let mut lazy = Lazy::new(table, x);
                for &k in &c.active {
                    if !c.b[k][l].is_zero() {
                        let dk = lazy.d(k).clone();
                        put(&mut sink, &c.b[k][l], &dk, &four_minus_2j);
                    }
                }
            }
        }
        for &k in &c.active {
            if let Some(x) = sub(&beta, k, 1).and_then(|b| prev1.get(&b)) {
                put(&mut sink, &c.b[k][l], x, &four_minus_2j.times_i());
            }
        }
        if !cubic.is_zero() {
            for lp in 0..4 {
                if let Some(x) = sub(&beta, lp, 2).and_then(|b| prev2.get(&b)) {
                    put(&mut sink, &c.f[l][lp], x, &cubic);
                }
            }
        }
    }
    sink.finish()
}

/// Every `alpha` that can be reached from a nonzero lower node.
fn candidates(n: usize, prev1: &Level, prev2: &Level) -> BTreeSet<Alpha> {
    let mut out = BTreeSet::new();
    for beta in prev1.keys() {
        for k in 0..4 {
            out.insert(add(beta, k, 1));
            for l in 0..4 {
                out.insert(add(&add(beta, k, 1), l, 2));
            }
        }
    }
    for beta in prev2.keys() {
        out.insert(*beta);
        for l in 0..4 {
            let b2 = add(beta, l, 2);
            out.insert(b2);
            for lp in 0..4 {
                out.insert(add(&b2, lp, 2));
            }
        }
    }
    out.retain(|a| NodeKey::for_alpha(n, *a).is_some());
    out
}

/// All valid `alpha` at level `n`, without looking at lower levels.
pub fn all_valid_alphas(n: usize) -> Vec<Alpha> {
    let max = 3 * n;
    let mut out = Vec::new();
    for a0 in 0..=max {
        for a1 in 0..=max - a0 {
            for a2 in 0..=max - a0 - a1 {
                for a3 in 0..=max - a0 - a1 - a2 {
                    let alpha = [a0 as u8, a1 as u8, a2 as u8, a3 as u8];
                    if NodeKey::for_alpha(n, alpha).is_some() {
                        out.push(alpha);
                    }
                }
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KeyFilter {
    /// Only keys reachable from nonzero nodes of the previous two levels.
    Reachable,
    /// Every key satisfying the index constraints.
    AllValid,
}

/// Which nodes of a level to compute.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Subset {
    All,
    /// Only `alpha` with every component even: all the assembly needs.
    EvenAlpha,
}

/// Which lower levels a [`MemoTable`] keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Retention {
    /// Every computed level stays available.
    All,
    /// Only the two most recent levels, which is all the recursion reads.
    Window,
}

/// Computed levels of one symbol table.
pub struct MemoTable {
    symbol_hash: String,
    coefficients: Coefficients,
    table: SymbolTable,
    /// `None` for levels dropped under [`Retention::Window`].
    levels: Vec<Option<Level>>,
    pub filter: KeyFilter,
    pub retention: Retention,
}

impl MemoTable {
    pub fn new(table: SymbolTable) -> Self {
        let mut zero = Level::new();
        zero.insert([0; 4], SymExpr::one());
        MemoTable {
            symbol_hash: table.fingerprint(),
            coefficients: Coefficients::new(&table),
            table,
            levels: vec![Some(zero)],
            filter: KeyFilter::Reachable,
            retention: Retention::All,
        }
    }

    pub fn with_retention(mut self, retention: Retention) -> Self {
        self.retention = retention;
        self
    }

    /// Rebuilds a table from stored levels (`None` for dropped ones). The
    /// top two levels must be present.
    pub(crate) fn from_levels(table: SymbolTable, levels: Vec<Option<Level>>) -> Self {
        let mut memo = MemoTable::new(table);
        let top = levels.len();
        assert!(top >= 1 && levels[top - 1].is_some(), "top level missing");
        assert!(top < 2 || levels[top - 2].is_some(), "second level missing");
        memo.levels = levels;
        memo
    }

    pub fn table(&self) -> &SymbolTable {
        &self.table
    }

    pub fn symbol_hash(&self) -> &str {
        &self.symbol_hash
    }

    /// Highest level with every valid key computed.
    pub fn level_complete(&self) -> usize {
        self.levels.len() - 1
    }

    /// A computed level, unless it was dropped.
    pub fn level(&self, n: usize) -> Option<&Level> {
        self.levels.get(n).and_then(|l| l.as_ref())
    }

    /// `(n, level)` for every level still held.
    pub fn levels(&self) -> impl Iterator<Item = (usize, &Level)> {
        self.levels.iter().enumerate().filter_map(|(n, l)| l.as_ref().map(|l| (n, l)))
    }

    pub(crate) fn stored_levels(&self) -> &[Option<Level>] {
        &self.levels
    }

    /// `r_{n,j,alpha}`; zero for invalid keys and negative indices.
    /// Panics if level `n` is not available.
    pub fn get(&self, key: &NodeKey) -> SymExpr {
        if !key.is_valid() {
            return SymExpr::zero();
        }
        let level = self.level(key.n as usize).expect("level not available");
        level.get(&key.alpha).cloned().unwrap_or_default()
    }

    /// `r_{n,j,alpha}` with signed indices; anything negative is zero.
    pub fn get_signed(&self, n: i64, j: i64, alpha: [i64; 4]) -> SymExpr {
        if n < 0 || j < 1 || alpha.iter().any(|&a| a < 0) {
            return SymExpr::zero();
        }
        let key = NodeKey { n: n as u8, j: j as u8, alpha: alpha.map(|a| a as u8) };
        self.get(&key)
    }

    fn compute(&self, n: usize, subset: Subset, output: Output) -> Level {
        assert!(n >= 1 && n <= self.levels.len(), "levels below {n} must be complete");
        let empty = Level::new();
        let prev1 = self.level(n - 1).expect("previous level available");
        let prev2 = if n >= 2 { self.level(n - 2).expect("level n-2 available") } else { &empty };
        let mut keys: Vec<Alpha> = match self.filter {
            KeyFilter::Reachable => candidates(n, prev1, prev2).into_iter().collect(),
            KeyFilter::AllValid => all_valid_alphas(n),
        };
        if subset == Subset::EvenAlpha {
            keys.retain(|a| a.iter().all(|x| x % 2 == 0));
        }
        let (t, c) = (&self.table, &self.coefficients);
        keys.par_iter()
            .map(|alpha| (*alpha, r_step(t, c, n, alpha, prev1, prev2, output)))
            .filter(|(_, v)| !v.is_zero())
            .collect()
    }

    /// Computes and stores level `n`; returns its number of nonzero nodes.
    pub fn compute_level(&mut self, n: usize) -> usize {
        if let Some(level) = self.level(n) {
            return level.len();
        }
        assert_eq!(n, self.levels.len(), "levels are computed in order");
        let level = self.compute(n, Subset::All, Output::Full);
        let count = level.len();
        self.levels.push(Some(level));
        if self.retention == Retention::Window && n >= 2 {
            for old in &mut self.levels[..n - 1] {
                *old = None;
            }
        }
        count
    }

    /// Computes every level up to and including `n`.
    pub fn ensure(&mut self, n: usize) {
        for m in self.levels.len()..=n {
            self.compute_level(m);
        }
    }

    /// Unit-blade parts of the even-`alpha` nodes of level `n`: everything
    /// the trace assembly reads. When level `n` is not stored only those
    /// parts are computed; levels below `n` are filled in as needed.
    pub fn trace_nodes(&mut self, n: usize) -> Level {
        let even = |a: &Alpha| a.iter().all(|x| x % 2 == 0);
        if n < self.levels.len() {
            let level = self.level(n).expect("level was dropped");
            return level
                .iter()
                .filter(|(a, _)| even(a))
                .map(|(a, v)| (*a, v.unit_part()))
                .filter(|(_, v)| !v.is_zero())
                .collect();
        }
        if n > 0 {
            self.ensure(n - 1);
        }
        self.compute(n, Subset::EvenAlpha, Output::UnitOnly)
    }
}
