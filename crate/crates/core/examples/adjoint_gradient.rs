//! Adjoint gradient against a central difference on one parameter.

use hva_lab::ansatz::pair_observable;
use hva_lab::{apply_circuit, exact_gradient, neel_state, sample_params, xyz_hva, InitScheme, Lattice, Pauli, RngStream};

fn main() -> hva_lab::Result<()> {
    let ring = Lattice::ring(10)?;
    let spec = xyz_hva(&ring, 3)?;
    let psi0 = neel_state(&ring)?;
    let o = pair_observable(10, 0, 1, Pauli::Y)?;
    let theta = sample_params(&InitScheme::Random, 3, 3, &RngStream::new(5))?;

    let g = exact_gradient(&spec, &theta, &o, &psi0)?;
    let h = 1e-6;
    let mut up = theta.clone();
    up.set(1, 2, theta.get(1, 2) + h);
    let mut down = theta.clone();
    down.set(1, 2, theta.get(1, 2) - h);
    let fd = (apply_circuit(&spec, &up, &psi0)?.expectation(&o)? - apply_circuit(&spec, &down, &psi0)?.expectation(&o)?) / (2.0 * h);
    println!("d C / d theta[1][2]: adjoint {:.10}, finite difference {fd:.10}", g.get(1, 2));
    println!("mean squared gradient {:.4e}", g.mean_sq());
    Ok(())
}
