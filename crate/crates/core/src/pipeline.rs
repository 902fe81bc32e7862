//! One coordinate system end to end: levels, timings, and the `a_n` results.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

use crate::assembly::{a_term_counted, JetRationalPoly};
use crate::engine::{MemoTable, Retention};
use crate::error::Result;
use crate::geometry::Coords;

#[derive(Clone, Debug, Serialize)]
pub struct LevelStat {
    pub level: usize,
    pub nodes: usize,
    pub terms: usize,
    pub seconds: f64,
    /// Only the unit-blade, even-alpha part was computed.
    pub trace_only: bool,
}

pub struct Pipeline {
    pub coords: Coords,
    memo: MemoTable,
    results: BTreeMap<usize, JetRationalPoly>,
    pub stats: Vec<LevelStat>,
    /// Levels that were already present when the pipeline started.
    pub reused_levels: usize,
}

impl Pipeline {
    /// Keeps only the two most recent levels, which is all `a_n` needs.
    pub fn new(coords: Coords) -> Self {
        Self::from_memo(coords, MemoTable::new(coords.symbols()).with_retention(Retention::Window))
    }

    pub fn from_memo(coords: Coords, memo: MemoTable) -> Self {
        let reused_levels = memo.level_complete();
        Pipeline { coords, memo, results: BTreeMap::new(), stats: Vec::new(), reused_levels }
    }

    pub fn memo(&self) -> &MemoTable {
        &self.memo
    }

    pub fn into_memo(self) -> MemoTable {
        self.memo
    }

    /// Already computed coefficients.
    pub fn results(&self) -> &BTreeMap<usize, JetRationalPoly> {
        &self.results
    }

    /// Computes full levels `0..n` in order.
    pub fn ensure_levels(&mut self, n: usize) {
        for m in self.memo.level_complete() + 1..=n {
            let start = Instant::now();
            let nodes = self.memo.compute_level(m);
            let terms = self.memo.level(m).map_or(0, |l| l.values().map(|v| v.len()).sum());
            let seconds = start.elapsed().as_secs_f64();
            self.stats.push(LevelStat { level: m, nodes, terms, seconds, trace_only: false });
        }
    }

    /// `a_n`, computing whatever levels are missing.
    pub fn a(&mut self, n: usize) -> Result<JetRationalPoly> {
        if let Some(p) = self.results.get(&n) {
            return Ok(p.clone());
        }
        let held = n <= self.memo.level_complete() && self.memo.level(n).is_some();
        let poly = if n > self.memo.level_complete() || held {
            if n > 0 {
                self.ensure_levels(n - 1);
            }
            let start = Instant::now();
            let trace_only = self.memo.level(n).is_none();
            let (poly, nodes, terms) = a_term_counted(n, &mut self.memo)?;
            if trace_only {
                self.stats.push(LevelStat {
                    level: n,
                    nodes,
                    terms,
                    seconds: start.elapsed().as_secs_f64(),
                    trace_only,
                });
            }
            poly
        } else {
            // the level was dropped; lower orders are cheap to redo
            let mut fresh = Pipeline::new(self.coords);
            fresh.a(n)?
        };
        self.results.insert(n, poly.clone());
        Ok(poly)
    }
}
