//! Saves computed levels to disk and warm-starts a second run from them.
//!
//! Usage: `cache_reuse [first-order] [second-order]`

use std::time::Instant;

use rw_spectral::cache;
use rw_spectral::geometry::Coords;
use rw_spectral::pipeline::Pipeline;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let first: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(6);
    let second: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(8);
    let dir = tempfile_dir()?;
    let path = cache::cache_path(&dir, Coords::Hopf);

    let start = Instant::now();
    let mut cold = Pipeline::new(Coords::Hopf);
    cold.a(first)?;
    cache::save(cold.memo(), &path)?;
    println!("cold a_{first}: {:.2}s, saved to {}", start.elapsed().as_secs_f64(), path.display());

    let start = Instant::now();
    let (memo, hit) = cache::load_or_new(Coords::Hopf, &path)?;
    let mut warm = Pipeline::from_memo(Coords::Hopf, memo);
    let a = warm.a(second)?;
    println!(
        "warm a_{second}: {:.2}s, cache hit {hit}, reused {} levels, computed {:?}",
        start.elapsed().as_secs_f64(),
        warm.reused_levels,
        warm.stats.iter().map(|s| s.level).collect::<Vec<_>>()
    );
    println!("a_{second} has {} terms", a.len());
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

fn tempfile_dir() -> std::io::Result<std::path::PathBuf> {
    let dir = std::env::temp_dir().join(format!("rw-spectral-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}
