//! Compares tr(e_n) at the two exact angle points, optionally after
//! tampering with the gamma^12 term of p0.
//!
//! Usage: `eta_independence [intact|drop-g12|flip-g12] [max]`

use rw_spectral::assembly::eta_independence_check;
use rw_spectral::clifford::Blade;
use rw_spectral::engine::MemoTable;
use rw_spectral::geometry::hopf_symbols;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let variant = args.next().unwrap_or_else(|| "intact".into());
    let max: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(6);

    let mut table = hopf_symbols();
    let g12 = table.p0.blade_part(Blade::from_indices(&[1, 2]));
    table.p0 = match variant.as_str() {
        "intact" => table.p0,
        "drop-g12" => &table.p0 - &g12,
        "flip-g12" => &(&table.p0 - &g12) - &g12,
        other => anyhow::bail!("unknown variant {other}"),
    };
    let mut memo = MemoTable::new(table);
    for n in (0..=max).step_by(2) {
        match eta_independence_check(n, &mut memo) {
            Ok(r) if r.independent => println!("n={n}: same value at both points"),
            Ok(r) => println!("n={n}: values differ, first at jets {:?}", r.first_difference.map(|m| m.to_vec())),
            Err(e) => println!("n={n}: {e}"),
        }
    }
    Ok(())
}
