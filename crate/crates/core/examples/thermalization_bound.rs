//! Long-time gradient bound for a random translation-invariant 2-local H,
//! checked against a direct time average.

use hva_lab::spectral::{random_k_local_hamiltonian, ProjectedObservables};
use hva_lab::{eigendecompose, LocalHamiltonian, Pauli, RandomHamiltonianSpec, StateVector};

fn main() -> hva_lab::Result<()> {
    let n = 6;
    let h = random_k_local_hamiltonian(&RandomHamiltonianSpec { n_sites: n, k: 2, time_reversal: false, seed: 11 })?;
    println!("{} terms, norm of coefficients {:.3}", h.terms().len(), h.coefficient_norm());
    let eig = eigendecompose(&h)?;
    let psi0 = StateVector::plus_state(n)?;
    let sites: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let g = LocalHamiltonian::uniform_sum(n, &sites, Pauli::Y, 1.0)?;
    let o = LocalHamiltonian::uniform_sum(n, &sites, Pauli::Z, 1.0)?;

    let proj = ProjectedObservables::new(&eig, &psi0, &g, &o)?;
    let b = proj.f_h();
    let avg = proj.time_average(20_000.0, 50_001)?;
    println!("F_H {:.5}  diagonal term {:.5}  time average {avg:.5}", b.f_h, b.diag_term);
    println!("min gap distinctness {:.2e}", eig.min_gap_distinctness());
    Ok(())
}
