//! Checks the blade multiplication table against explicit 4x4 gamma
//! matrices and prints a few products.

use rw_spectral::clifford::{blade_mul, verify_matrix_model, Blade, CliffordElement};
use rw_spectral::scalar::Rational;

fn main() -> anyhow::Result<()> {
    verify_matrix_model().map_err(|m| anyhow::anyhow!("matrix model disagrees: {m}"))?;
    println!("all 256 blade products and 16 traces agree with the matrices");

    for (s, t) in [(&[1u8][..], &[2u8][..]), (&[1, 2], &[1, 2]), (&[1, 2, 3], &[3, 4]), (&[1, 2, 3, 4], &[1, 2, 3, 4])] {
        let (sign, b) = blade_mul(Blade::from_indices(s), Blade::from_indices(t));
        println!("{} * {} = {}{}", Blade::from_indices(s), Blade::from_indices(t), if sign < 0 { "-" } else { "" }, b);
    }

    // (1 + g12)(1 - g12) = 2
    let g12 = CliffordElement::blade(Blade::from_indices(&[1, 2]), Rational::integer(1));
    let one = CliffordElement::scalar(Rational::integer(1));
    let minus = CliffordElement::blade(Blade::from_indices(&[1, 2]), Rational::integer(-1));
    let p = one.add(&g12).mul(&one.add(&minus));
    println!("(1 + g12)(1 - g12) has trace {}", p.trace());
    Ok(())
}
