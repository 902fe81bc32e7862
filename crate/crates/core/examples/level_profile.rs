//! Times each level of the recursion and reports node and term counts.
//!
//! Usage: `level_profile [hopf|spherical] [max-level]`

use std::time::Instant;

use rw_spectral::engine::{MemoTable, Retention};
use rw_spectral::geometry::Coords;

fn rss_mb(field: &str) -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with(field))?;
    line.split_whitespace().nth(1)?.parse::<u64>().ok().map(|kb| kb / 1024)
}

fn main() {
    let coords: Coords = std::env::args().nth(1).as_deref().unwrap_or("hopf").parse().expect("coords");
    let max: usize = std::env::args().nth(2).map(|s| s.parse().expect("level")).unwrap_or(8);
    let mut memo = MemoTable::new(coords.symbols()).with_retention(Retention::Window);
    for n in 1..max {
        let start = Instant::now();
        let nodes = memo.compute_level(n);
        let terms: usize = memo.level(n).unwrap().values().map(|v| v.len()).sum();
        println!(
            "level {n:2}: {nodes:6} nodes {terms:10} terms {:8.2}s  rss {} MB",
            start.elapsed().as_secs_f64(),
            rss_mb("VmRSS:").unwrap_or(0)
        );
    }
    let start = Instant::now();
    let trace = memo.trace_nodes(max);
    let terms: usize = trace.values().map(|v| v.len()).sum();
    println!("level {max:2} (trace only): {:6} nodes {terms:10} terms {:8.2}s", trace.len(), start.elapsed().as_secs_f64());
    if let Some(mb) = rss_mb("VmHWM:") {
        println!("peak rss {mb} MB");
    }
}
