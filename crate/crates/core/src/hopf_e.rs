//! Hopf-only recursion for the rescaled nodes
//! `e_{n,j,alpha} = r_{n,j,alpha} a^(alpha_2+alpha_3+alpha_4) sin^alpha_3 cos^alpha_4 / (j-1)!`.
//!
//! This is an independent route to the same quantities as [`crate::engine`],
//! written directly in terms of `tan`, `cot` and the scale factor instead of
//! the generic metric coefficients. Two corrections to the commonly printed
//! form are applied: the whole level `n-1` bracket carries a factor `i`, and
//! the `8(a'^2 - 1)` term reads `e_{n-2,j-3,alpha-2e_3-2e_4}`.

use std::collections::BTreeMap;

use crate::engine::{Alpha, Level, NodeKey};
use crate::expr::build::{q, qi, sum, term};
use crate::expr::{SymExpr, TermSink};
use crate::geometry::hopf_symbols;
use crate::scalar::{GaussRational, Rational};

fn ang(s: i16, c: i16) -> SymExpr {
    term(q(1, 1), &[], [s, c, 0, 0], &[])
}

fn jets(e: &[i8]) -> SymExpr {
    term(q(1, 1), &[], [0; 4], e)
}

fn g12() -> SymExpr {
    term(q(1, 1), &[1, 2], [0; 4], &[])
}

fn int(k: i64) -> SymExpr {
    SymExpr::constant(GaussRational::int(k))
}

fn ratio(n: i64, d: i64) -> SymExpr {
    SymExpr::constant(q(n, d))
}

/// Printed initial values at levels 0 and 1.
pub fn initial_values() -> Vec<Level> {
    let none = [0; 4];
    let mut l0 = Level::new();
    l0.insert([0; 4], SymExpr::one());
    let mut l1 = Level::new();
    let two_i_da = term(qi(2, 1), &[], none, &[-1, 1]);
    l1.insert([1, 0, 0, 0], term(qi(3, 1), &[], none, &[-1, 1]));
    l1.insert([1, 2, 0, 0], two_i_da.clone());
    l1.insert([1, 0, 2, 0], two_i_da.clone());
    l1.insert([1, 0, 0, 2], two_i_da);
    l1.insert([0, 1, 0, 2], term(qi(-2, 1), &[], [1, -1, 0, 0], &[-1]));
    l1.insert([0, 1, 2, 0], term(qi(2, 1), &[], [-1, 1, 0, 0], &[-1]));
    l1.insert(
        [0, 0, 1, 0],
        sum(&[term(qi(1, 1), &[1, 3], none, &[-1, 1]), term(qi(1, 1), &[2, 3], [-1, 1, 0, 0], &[-1])]),
    );
    l1.insert(
        [0, 0, 0, 1],
        sum(&[term(qi(1, 1), &[1, 4], none, &[-1, 1]), term(qi(-1, 1), &[2, 4], [1, -1, 0, 0], &[-1])]),
    );
    // 2i cot(2 eta) = i (cot - tan)
    l1.insert(
        [0, 1, 0, 0],
        sum(&[
            term(qi(1, 1), &[], [-1, 1, 0, 0], &[-1]),
            term(qi(-1, 1), &[], [1, -1, 0, 0], &[-1]),
            term(qi(1, 1), &[1, 2], none, &[-1, 1]),
        ]),
    );
    vec![l0, l1]
}

struct Terms<'a> {
    prev: &'a Level,
    alpha: Alpha,
    sink: TermSink,
}

impl Terms<'_> {
    /// Adds `coeff * op(e_{., ., alpha - shift})`.
    fn add(&mut self, coeff: &SymExpr, shift: [u8; 4], op: impl Fn(&SymExpr) -> SymExpr) {
        let mut beta = self.alpha;
        for k in 0..4 {
            match beta[k].checked_sub(shift[k]) {
                Some(b) => beta[k] = b,
                None => return,
            }
        }
        if let Some(e) = self.prev.get(&beta) {
            self.sink.add_product(coeff, &op(e), &GaussRational::ONE);
        }
    }
}

fn id(e: &SymExpr) -> SymExpr {
    e.clone()
}

fn dt(e: &SymExpr) -> SymExpr {
    e.d_dt()
}

fn deta(e: &SymExpr) -> SymExpr {
    e.d_angle(0)
}

/// One node of level `n >= 1` from levels `n-1` and `n-2`.
fn e_step(n: usize, alpha: Alpha, prev1: &Level, prev2: &Level) -> SymExpr {
    let Some(key) = NodeKey::for_alpha(n, alpha) else {
        return SymExpr::zero();
    };
    let j = key.j as i64;
    let [_, a2, a3, a4] = alpha.map(|x| x as i64);
    let big_a = a2 + a3 + a4;
    let da = jets(&[0, 1]);
    let a = jets(&[1]);
    let tan = ang(1, -1);
    let cot = ang(-1, 1);
    let lin = |x: i64, y: i64| sum(&[cot.scale(&q(x, 1)), tan.scale(&q(y, 1))]);

    // level n-1 bracket
    let mut t1 = Terms { prev: prev1, alpha, sink: TermSink::new() };
    t1.add(&sum(&[term(q(1, 1), &[1, 4], [0; 4], &[0, 1]), term(q(-1, 1), &[2, 4], [1, -1, 0, 0], &[])]), [0, 0, 0, 1], id);
    t1.add(&sum(&[term(q(1, 1), &[1, 3], [0; 4], &[0, 1]), term(q(1, 1), &[2, 3], [-1, 1, 0, 0], &[])]), [0, 0, 1, 0], id);
    t1.add(&sum(&[g12().mul(&da), lin(1 - 2 * a3, 2 * a4 - 1)]), [0, 1, 0, 0], id);
    let four_da = da.scale(&q(4, 1));
    t1.add(&four_da, [1, 2, 0, 0], id);
    t1.add(&four_da, [1, 0, 2, 0], id);
    t1.add(&four_da, [1, 0, 0, 2], id);
    t1.add(&da.scale(&q(3 - 2 * big_a, 1)), [1, 0, 0, 0], id);
    t1.add(&a.scale(&q(2, 1)), [1, 0, 0, 0], dt);
    t1.add(&tan.scale(&q(-4, 1)), [0, 1, 0, 2], id);
    t1.add(&cot.scale(&q(4, 1)), [0, 1, 2, 0], id);
    t1.add(&int(2), [0, 1, 0, 0], deta);
    let b1 = t1.sink.finish();

    // level n-2 bracket
    let mut t2 = Terms { prev: prev2, alpha, sink: TermSink::new() };
    let aa2 = jets(&[1, 0, 1]).scale(&q(2, 1));
    let da2 = jets(&[0, 2]);
    let ada4 = jets(&[1, 1]).scale(&q(4, 1));
    t2.add(&jets(&[2]), [0; 4], |e| e.d_dt().d_dt());
    t2.add(&ada4, [0, 2, 0, 0], dt);
    t2.add(&ada4, [0, 0, 2, 0], dt);
    t2.add(&ada4, [0, 0, 0, 2], dt);
    t2.add(&jets(&[1, 1]).scale(&q(3 - 2 * big_a, 1)), [0; 4], dt);
    t2.add(&da2.scale(&q(4, 1)), [0, 4, 0, 0], id);
    t2.add(&da2.scale(&q(8, 1)), [0, 2, 2, 0], id);
    t2.add(&da2.scale(&q(8, 1)), [0, 2, 0, 2], id);
    t2.add(&cot.scale(&q(4, 1)), [0, 0, 2, 0], deta);
    t2.add(&tan.scale(&q(-4, 1)), [0, 0, 0, 2], deta);
    t2.add(&int(1), [0; 4], |e| e.d_angle(0).d_angle(0));
    let shared = sum(&[da2.scale(&q(-4 * (big_a - 2), 1)), int(4 * (a3 + a4 - 2)), aa2.clone()]);
    t2.add(
        &sum(&[
            g12().mul(&cot).mul(&da).scale(&q(2, 1)),
            shared.clone(),
            ang(-2, 0).scale(&q(-4 * (a3 - 1), 1)),
        ]),
        [0, 0, 2, 0],
        id,
    );
    t2.add(&sum(&[lin(1 - 2 * a3, 2 * a4 - 1), g12().mul(&da)]), [0; 4], deta);
    t2.add(
        &sum(&[shared, ang(0, -2).scale(&q(-4 * (a4 - 1), 1)), g12().mul(&tan).mul(&da).scale(&q(-2, 1))]),
        [0, 0, 0, 2],
        id,
    );
    t2.add(&sum(&[da2.scale(&q(8, 1)), int(-8)]), [0, 0, 2, 2], id);
    t2.add(&sum(&[ang(-2, 2), da2.clone()]).scale(&q(4, 1)), [0, 0, 4, 0], id);
    t2.add(&sum(&[ang(2, -2), da2.clone()]).scale(&q(4, 1)), [0, 0, 0, 4], id);
    t2.add(&sum(&[aa2.clone(), da2.scale(&q(-4 * (big_a - 2), 1))]), [0, 2, 0, 0], id);
    let quarter = sum(&[
        ang(-2, 0).scale(&q(4 * a3 * a3 - 1, 1)),
        int(-4 * (a3 + a4 - 1) * (a3 + a4 - 1)),
        da2.scale(&q((2 * big_a - 3) * (2 * big_a - 1), 1)),
        ang(0, -2).scale(&q(4 * a4 * a4 - 1, 1)),
        jets(&[1, 0, 1]).scale(&q(-2 * (2 * big_a - 3), 1)),
    ]);
    t2.add(
        &sum(&[lin(1 - 2 * a3, 2 * a4 - 1).mul(&g12()).mul(&da).scale(&q(1, 2)), quarter.mul(&ratio(1, 4))]),
        [0; 4],
        id,
    );
    let b2 = t2.sink.finish();

    let inv = Rational::new(1, j - 1).expect("j >= 2");
    let first = b1.mul(&jets(&[-1])).scale(&GaussRational::imag(inv.clone()));
    let second = b2.mul(&jets(&[-2])).scale(&GaussRational::real(inv));
    &first + &second
}

/// Levels `0..=max` of the e-recursion, started from the printed level 0.
pub fn e_levels(max: usize) -> Vec<Level> {
    let mut levels = vec![initial_values().swap_remove(0)];
    let empty = Level::new();
    for n in 1..=max {
        let prev1 = &levels[n - 1];
        let prev2 = if n >= 2 { &levels[n - 2] } else { &empty };
        let keys = crate::engine::all_valid_alphas(n);
        let level: Level = keys
            .into_iter()
            .map(|alpha| (alpha, e_step(n, alpha, prev1, prev2)))
            .filter(|(_, v)| !v.is_zero())
            .collect();
        levels.push(level);
    }
    levels
}

/// `e_{n,j,alpha}` from an r-node: `r a^(a2+a3+a4) sin^a3 cos^a4 / (j-1)!`.
pub fn e_from_r(key: &NodeKey, r: &SymExpr) -> SymExpr {
    let [_, a2, a3, a4] = key.alpha.map(|x| x as i16);
    let fact: i64 = (1..key.j as i64).product();
    let scale = term(q(1, fact), &[], [a3, a4, 0, 0], &[(a2 + a3 + a4) as i8]);
    r.mul(&scale)
}

/// Node-by-node comparison of the two routes up to level `max`, as
/// functions of `eta`; returns the keys that differ.
pub fn path_mismatches(max: usize) -> Vec<NodeKey> {
    let mut memo = crate::engine::MemoTable::new(hopf_symbols());
    memo.ensure(max);
    let e = e_levels(max);
    let mut bad = Vec::new();
    for (n, e_level) in e.iter().enumerate() {
        let r_level = memo.level(n).expect("retained");
        let mut keys: BTreeMap<Alpha, ()> = e_level.keys().map(|k| (*k, ())).collect();
        keys.extend(r_level.keys().map(|k| (*k, ())));
        for alpha in keys.keys() {
            let key = NodeKey::for_alpha(n, *alpha).expect("valid");
            let from_r = r_level.get(alpha).map(|r| e_from_r(&key, r)).unwrap_or_default();
            let from_e = e_level.get(alpha).cloned().unwrap_or_default();
            if !from_r.equal_on_circle(&from_e).expect("rational points are admissible") {
                bad.push(key);
            }
        }
    }
    bad
}
