//! Infinite-temperature OTOC: Haar-random unitaries against local evolution.

use hva_lab::ansatz::site_observable;
use hva_lab::spectral::haar_otoc_value;
use hva_lab::{eigendecompose, haar_unitary, otoc, random_k_local_hamiltonian, Pauli, RandomHamiltonianSpec, RngStream, Rho0};

fn main() -> hva_lab::Result<()> {
    let n = 6;
    let (oi, oj) = (site_observable(n, 0, Pauli::Z)?, site_observable(n, 3, Pauli::Z)?);
    let root = RngStream::new(8);
    let draws = 200;
    let vals = (0..draws)
        .map(|s| otoc(&haar_unitary(1 << n, &root.substream(s)), &oi, &oj, Rho0::MaximallyMixed))
        .collect::<hva_lab::Result<Vec<f64>>>()?;
    let m = draws as f64;
    let mean = vals.iter().sum::<f64>() / m;
    let se = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0) / m).sqrt();
    println!("Haar mean {mean:.5} +- {se:.5} (expected {:.5})", haar_otoc_value(n));

    let h = random_k_local_hamiltonian(&RandomHamiltonianSpec { n_sites: n, k: 2, time_reversal: false, seed: 1 })?;
    let eig = eigendecompose(&h)?;
    for t in [1.0, 10.0, 50.0] {
        println!("local H, t = {t:>4}: {:.5}", otoc(&eig.propagator(t), &oi, &oj, Rho0::MaximallyMixed)?);
    }
    Ok(())
}
