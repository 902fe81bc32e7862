//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Set `RW_SPECTRAL_EXTENDED=1` to also cross-check a_10 and a_12 between the
//! two coordinate systems (several more minutes and ~1.5 GB).

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use rw_spectral::assembly::{eta_independence_check, grading_violations, JetRationalPoly};
use rw_spectral::clifford::{verify_matrix_model, Blade};
use rw_spectral::engine::{MemoTable, NodeKey};
use rw_spectral::expr::build::{q, term};
use rw_spectral::expr::SymExpr;
use rw_spectral::geometry::{hopf_symbols, Coords};
use rw_spectral::hopf_e::{e_levels, initial_values, path_mismatches};
use rw_spectral::oracle::{level_as_nodes, slow_oracle_rn};
use rw_spectral::pipeline::Pipeline;
use rw_spectral::scalar::Rational;
use rw_spectral::verification::{
    compare_to_reference, cross_check, extract_highest, h_recursion, h_reference, integrate_round,
    node_grading_violations, round_reduce,
};

type Outcome = Result<(bool, String), String>;

struct Runner {
    failures: usize,
}

impl Runner {
    fn criterion(&mut self, id: u32, name: &str, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let (ok, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
        if !ok {
            self.failures += 1;
        }
        println!(
            "criterion {id:>2} {} {name} ({:.1}s): {detail}",
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Computes even orders up to `max`, recording the wall time of each.
fn run_orders(p: &mut Pipeline, max: usize, times: &mut BTreeMap<usize, f64>) -> Result<(), String> {
    for order in (0..=max).step_by(2) {
        let start = Instant::now();
        p.a(order).map_err(err)?;
        times.insert(order, start.elapsed().as_secs_f64());
    }
    Ok(())
}

fn reference_match(p: &mut Pipeline, orders: &[usize]) -> Result<Vec<String>, String> {
    let mut bad = Vec::new();
    for &o in orders {
        let a = p.a(o).map_err(err)?;
        let diff = compare_to_reference(o, &a).map_err(err)?;
        if let Some(d) = diff.first() {
            bad.push(format!("a_{o}: {} differ, first {:?} {} vs {}", diff.len(), d.jets, d.computed, d.reference));
        }
    }
    Ok(bad)
}

fn random_expr(rng: &mut StdRng) -> SymExpr {
    let mut parts = Vec::new();
    for _ in 0..rng.gen_range(1..=5) {
        let c = q(rng.gen_range(-9..=9), rng.gen_range(1..=5));
        let blade: Vec<u8> = (1..=4).filter(|_| rng.gen_bool(0.3)).collect();
        let angles = [rng.gen_range(-2..=2), rng.gen_range(-2..=2), 0, 0];
        let jets = [rng.gen_range(-3..=3), rng.gen_range(0..=2), rng.gen_range(0..=2), rng.gen_range(0..=1)];
        parts.push(term(c, &blade, angles, &jets));
    }
    parts.iter().fold(SymExpr::zero(), |acc, p| &acc + p)
}

/// Jets of `a(t) = 2 + cos t`.
fn jets_at(t: f64) -> Vec<f64> {
    (0..16)
        .map(|k| {
            let d = match k % 4 {
                0 => t.cos(),
                1 => -t.sin(),
                2 => -t.cos(),
                _ => t.sin(),
            };
            if k == 0 { 2.0 + d } else { d }
        })
        .collect()
}

/// Largest relative error of `d/dt` against a five-point finite difference.
fn derivative_error(x: &SymExpr, t: f64, eta: f64) -> f64 {
    let h = 1e-3;
    let angles = [(eta.sin(), eta.cos())];
    let f = |s: f64| x.eval_f64(&jets_at(s), &angles);
    let exact = x.d_dt().eval_f64(&jets_at(t), &angles);
    let (p2, p1, m1, m2) = (f(t + 2.0 * h), f(t + h), f(t - h), f(t - 2.0 * h));
    let mut worst: f64 = 0.0;
    for b in 0..16 {
        for part in 0..2 {
            let pick = |v: (f64, f64)| if part == 0 { v.0 } else { v.1 };
            let fd = (-pick(p2[b]) + 8.0 * pick(p1[b]) - 8.0 * pick(m1[b]) + pick(m2[b])) / (12.0 * h);
            let ex = pick(exact[b]);
            if ex == 0.0 && fd.abs() < 1e-12 {
                continue;
            }
            worst = worst.max((fd - ex).abs() / ex.abs());
        }
    }
    worst
}

fn main() -> ExitCode {
    let extended = std::env::var("RW_SPECTRAL_EXTENDED").is_ok_and(|v| v == "1");
    let mut runner = Runner { failures: 0 };
    let mut hopf = Pipeline::new(Coords::Hopf);
    let mut spherical = Pipeline::new(Coords::Spherical);
    let mut times = BTreeMap::new();

    runner.criterion(1, "a_0..a_6 (hopf) equal the reference exactly, < 10 s", || {
        let start = Instant::now();
        run_orders(&mut hopf, 6, &mut times)?;
        let bad = reference_match(&mut hopf, &[0, 2, 4, 6])?;
        let secs = start.elapsed().as_secs_f64();
        Ok((bad.is_empty() && secs < 10.0, if bad.is_empty() { format!("exact match in {secs:.2}s") } else { bad.join("; ") }))
    });

    runner.criterion(2, "a_8, a_10, a_12 (hopf) equal the reference exactly", || {
        run_orders(&mut hopf, 12, &mut times)?;
        let bad = reference_match(&mut hopf, &[8, 10, 12])?;
        let t10: f64 = times.range(..=10).map(|(_, t)| t).sum();
        let t12: f64 = times.values().sum();
        let in_budget = t10 <= 300.0 && t12 <= 3600.0;
        Ok((
            bad.is_empty() && in_budget,
            if bad.is_empty() {
                format!("exact match; cumulative time to a_10 {t10:.1}s, to a_12 {t12:.1}s")
            } else {
                bad.join("; ")
            },
        ))
    });

    runner.criterion(3, "round metric: a_12 -> 10331/8648640 sin^3, integral 10331/6486480", || {
        let a12 = hopf.a(12).map_err(err)?;
        let r = round_reduce(&a12).map_err(err)?;
        let expected: BTreeMap<u32, Rational> = [(3, Rational::new(10331, 8648640).map_err(err)?)].into();
        let total = integrate_round(&r).map_err(err)?;
        let ok = r.odd.is_empty()
            && r.even == expected
            && total.is_rational()
            && total.rational == Rational::new(10331, 6486480).map_err(err)?;
        Ok((ok, format!("{} ; integral {}", r.to_text(), total.rational)))
    });

    runner.criterion(4, "h_2..h_20 from the recursion; highest terms of a_2..a_12", || {
        let h = h_recursion(20).map_err(err)?;
        let reference = h_reference();
        let bad_h: Vec<_> = reference.iter().filter(|(n, v)| h[n] != **v).map(|(n, _)| *n).collect();
        let mut bad_x = Vec::new();
        for n in (2..=12).step_by(2) {
            let a = hopf.a(n).map_err(err)?;
            if extract_highest(n, &a).map_err(err)? != h[&n] {
                bad_x.push(n);
            }
        }
        Ok((
            bad_h.is_empty() && bad_x.is_empty(),
            format!("{} h values exact, h_20 = {}; extraction mismatches {bad_x:?}", reference.len() - bad_h.len(), h[&20]),
        ))
    });

    runner.criterion(5, "hopf and spherical agree exactly", || {
        let max = if extended { 12 } else { 8 };
        let start = Instant::now();
        let mut agreed = Vec::new();
        for order in (0..=max).step_by(2) {
            let s = spherical.a(order).map_err(err)?;
            let h = hopf.a(order).map_err(err)?;
            if !cross_check(&h, &s) {
                return Ok((false, format!("a_{order} differs")));
            }
            agreed.push(order);
        }
        let secs = start.elapsed().as_secs_f64();
        let note = if extended { "extended mode" } else { "a_10, a_12 need RW_SPECTRAL_EXTENDED=1" };
        Ok((secs <= 600.0 || extended, format!("orders {agreed:?} in {secs:.1}s ({note})")))
    });

    runner.criterion(6, "rational coefficients for every even order; odd orders vanish", || {
        // a_n is only constructible when every coefficient is real rational
        let evens: Vec<usize> = hopf.results().keys().copied().filter(|n| n % 2 == 0).collect();
        let mut odd_nonzero = Vec::new();
        for coords in [Coords::Hopf, Coords::Spherical] {
            let mut p = Pipeline::new(coords);
            for n in [1, 3, 5] {
                if !p.a(n).map_err(err)?.is_zero() {
                    odd_nonzero.push((coords.name(), n));
                }
            }
        }
        Ok((odd_nonzero.is_empty() && evens.len() >= 7, format!("even orders {evens:?} rational; a_1, a_3, a_5 zero in both systems")))
    });

    runner.criterion(7, "tr(e_n) equal at both exact angle points", || {
        // a_n refuses to assemble if the two points disagree, so every order
        // computed above already passed; check the low levels directly too
        let mut checked = 0;
        for coords in [Coords::Hopf, Coords::Spherical] {
            let mut memo = MemoTable::new(coords.symbols());
            for n in 0..=8 {
                let r = eta_independence_check(n, &mut memo).map_err(err)?;
                if !r.independent {
                    return Ok((false, format!("{} n={n} differs at {:?}", coords.name(), r.first_difference)));
                }
                checked += 1;
            }
        }
        // a tampered p0 must be caught
        let mut table = hopf_symbols();
        let g12 = table.p0.blade_part(Blade::from_indices(&[1, 2]));
        table.p0 = &table.p0 - &g12;
        let mut broken = MemoTable::new(table);
        let caught = !eta_independence_check(4, &mut broken).map_err(err)?.independent;
        let hopf_orders: Vec<_> = hopf.results().keys().copied().collect();
        Ok((caught, format!("{checked} direct checks (n <= 8), plus a_n for hopf orders {hopf_orders:?}; tampered p0 detected at n=4")))
    });

    runner.criterion(8, "recursion vs raw composition (n <= 4); e-recursion vs r-nodes (n <= 6)", || {
        for coords in [Coords::Hopf, Coords::Spherical] {
            let mut memo = MemoTable::new(coords.symbols());
            memo.ensure(4);
            for n in 0..=4 {
                if slow_oracle_rn(n, &coords.symbols()) != level_as_nodes(n, memo.level(n).ok_or("level missing")?) {
                    return Ok((false, format!("{} level {n} differs", coords.name())));
                }
            }
        }
        let printed_ok = e_levels(1)[1] == initial_values()[1];
        let bad = path_mismatches(6);
        Ok((printed_ok && bad.is_empty(), format!("levels 0..4 identical; e-path mismatches {}; printed initial values reproduced: {printed_ok}", bad.len())))
    });

    runner.criterion(9, "grading: a^n e_{n,j,alpha} (n <= 8) and Q-forms (order <= 12)", || {
        let mut memo = MemoTable::new(hopf_symbols());
        memo.ensure(8);
        let bad_nodes: Vec<NodeKey> = node_grading_violations(&memo, 8).map_err(err)?;
        let nodes: usize = memo.levels().map(|(_, l)| l.len()).sum();
        let mut bad_q = Vec::new();
        for (order, a) in hopf.results() {
            if order % 2 == 0 {
                let a: &JetRationalPoly = a;
                bad_q.extend(grading_violations(a, *order).map_err(err)?.into_iter().map(|m| (*order, m.to_vec())));
            }
        }
        Ok((
            bad_nodes.is_empty() && bad_q.is_empty(),
            format!("{nodes} nodes checked, {} violations; Q-form violations {bad_q:?}", bad_nodes.len()),
        ))
    });

    runner.criterion(10, "Clifford matrix model; d/dt vs finite differences on 100 random expressions", || {
        let model = verify_matrix_model().is_ok();
        let mut rng = StdRng::seed_from_u64(0x5eed);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let x = random_expr(&mut rng);
            worst = worst.max(derivative_error(&x, 1.3, 0.7));
        }
        Ok((model && worst < 1e-6, format!("256 products match: {model}; worst relative error {worst:.2e}")))
    });

    if runner.failures > 0 {
        println!("{} criteria failed", runner.failures);
        ExitCode::FAILURE
    } else {
        println!("all criteria passed");
        ExitCode::SUCCESS
    }
}
