//! Computes the same coefficients in Hopf and spherical coordinates and
//! checks that they agree.
//!
//! Usage: `cross_coordinates [max-order]`

use std::time::Instant;

use rw_spectral::geometry::Coords;
use rw_spectral::pipeline::Pipeline;

fn main() -> anyhow::Result<()> {
    let max: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(6);
    let mut hopf = Pipeline::new(Coords::Hopf);
    let mut spherical = Pipeline::new(Coords::Spherical);
    for n in (0..=max).step_by(2) {
        let start = Instant::now();
        let a = hopf.a(n)?;
        let t_hopf = start.elapsed().as_secs_f64();
        let b = spherical.a(n)?;
        let t_sph = start.elapsed().as_secs_f64() - t_hopf;
        let verdict = if a.same_value(&b) { "agree" } else { "DISAGREE" };
        println!("a_{n:<2} {verdict}: {} terms, hopf {t_hopf:.2}s, spherical {t_sph:.2}s", a.len());
        if !a.same_value(&b) {
            for (m, x, y) in a.diff(&b) {
                println!("  {:?}: {x} vs {y}", m.to_vec());
            }
        }
    }
    Ok(())
}
