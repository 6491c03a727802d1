//! Pauli strings as bitmasks: parsing, commutation, and a commuting layer.

use hva_lab::{validate_layer, Lattice, LocalHamiltonian, Pauli, PauliString};

fn main() -> hva_lab::Result<()> {
    let a: PauliString = "XXII".parse()?;
    let b: PauliString = "IZZI".parse()?;
    let c: PauliString = "IIZZ".parse()?;
    println!("{a}: x={:04b} z={:04b} weight {}", a.x_mask(), a.z_mask(), a.weight());
    println!("{a} vs {b} commute: {}", a.commutes(&b)?);
    println!("{a} vs {c} commute: {}", a.commutes(&c)?);
    println!("{b} shifted by 2: {}", b.translate(2));

    let ring = Lattice::ring(6)?;
    let even: Vec<Vec<usize>> = (0..3).map(|i| vec![2 * i, 2 * i + 1]).collect();
    let h = LocalHamiltonian::uniform_sum(6, &even, Pauli::Y, 1.0)?;
    let report = validate_layer(&h, &ring, 2)?;
    println!("YY on even bonds: commuting {}, checks ok {}", h.is_commuting(), report.all_ok());
    Ok(())
}
