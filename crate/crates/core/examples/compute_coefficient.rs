//! Computes one heat coefficient and prints it in every output form.
//!
//! Usage: `compute_coefficient [order] [hopf|spherical]`

use rw_spectral::assembly::result_json;
use rw_spectral::geometry::Coords;
use rw_spectral::pipeline::Pipeline;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let order: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(4);
    let coords: Coords = args.next().as_deref().unwrap_or("hopf").parse()?;

    let mut pipeline = Pipeline::new(coords);
    let a = pipeline.a(order)?;
    println!("a_{order}       = {}", a.table_form(order)?.to_text());
    println!("reduced     = {}", a.reduced().to_text());
    println!("latex       = {}", a.table_form(order)?.to_latex());
    println!("json        = {}", serde_json::to_string(&result_json(&a, order, coords.name())?)?);
    for s in &pipeline.stats {
        println!("level {:2}: {:6} nodes {:9} terms {:.2}s", s.level, s.nodes, s.terms, s.seconds);
    }
    Ok(())
}
