//! Runs the recursion for the leading coefficients h_n and compares them with
//! the values extracted from computed a_n.
//!
//! Usage: `h_coefficients [max-n] [max-extract]`

use rw_spectral::geometry::Coords;
use rw_spectral::pipeline::Pipeline;
use rw_spectral::verification::{extract_highest, h_recursion, h_reference};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let max: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20);
    let extract: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(8);

    let reference = h_reference();
    for (n, h) in h_recursion(max)? {
        let mark = match reference.get(&n) {
            Some(r) if *r == h => "matches table",
            Some(_) => "DIFFERS from table",
            None => "",
        };
        println!("h_{n:<2} = {h:<22} {mark}");
    }

    let mut pipeline = Pipeline::new(Coords::Hopf);
    for n in (2..=extract).step_by(2) {
        println!("coefficient of a^{} a^({n}) in a_{n}: {}", n - 1, extract_highest(n, &pipeline.a(n)?)?);
    }
    Ok(())
}
