//! Specialises coefficients to the round sphere a(t) = sin t and integrates
//! them over [0, pi].
//!
//! Usage: `round_sphere [max-order]`

use rw_spectral::geometry::Coords;
use rw_spectral::pipeline::Pipeline;
use rw_spectral::verification::{integrate_round, round_float_error, round_reduce};

fn main() -> anyhow::Result<()> {
    let max: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(8);
    let mut pipeline = Pipeline::new(Coords::Hopf);
    for n in (0..=max).step_by(2) {
        let a = pipeline.a(n)?;
        let q = round_reduce(&a)?;
        let integral = integrate_round(&q)?;
        println!(
            "a_{n:<2} -> {:<24} integral {:<18} float check {:.1e}",
            q.to_text(),
            integral.rational,
            round_float_error(&a, 0.7)?
        );
    }
    Ok(())
}
