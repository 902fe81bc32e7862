//! Computes `a_0 .. a_max` and diffs each against the bundled reference table.
//!
//! Usage: `reference_diff [hopf|spherical] [max]`

use std::time::Instant;

use rw_spectral::geometry::Coords;
use rw_spectral::pipeline::Pipeline;
use rw_spectral::verification::compare_to_reference;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let coords: Coords = args.next().as_deref().unwrap_or("hopf").parse()?;
    let max: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(8);

    let mut pipeline = Pipeline::new(coords);
    for order in (0..=max).step_by(2) {
        let start = Instant::now();
        let a = pipeline.a(order)?;
        let diff = compare_to_reference(order, &a)?;
        println!(
            "a_{order:<2} {:>4} terms  {:>8.2}s  {}",
            a.len(),
            start.elapsed().as_secs_f64(),
            if diff.is_empty() { "matches reference".to_string() } else { format!("{} differing monomials", diff.len()) }
        );
        for d in diff.iter().take(5) {
            println!("    jets {:?}: computed {} reference {}", d.jets, d.computed, d.reference);
        }
    }
    Ok(())
}
