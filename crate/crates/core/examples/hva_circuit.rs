//! XYZ ansatz on a ring from the Neel state, at three initializations.

use hva_lab::ansatz::heisenberg_xyz;
use hva_lab::{apply_circuit, neel_state, sample_params, xyz_hva, InitScheme, Lattice, RngStream};

fn main() -> hva_lab::Result<()> {
    let n = 8;
    let ring = Lattice::ring(n)?;
    let spec = xyz_hva(&ring, 4)?;
    let psi0 = neel_state(&ring)?;
    let h = heisenberg_xyz(&ring, 1.0, 1.0, 1.0)?;
    println!("{} blocks x {} layers, {} parameters", spec.blocks_p(), spec.q(), spec.n_params());
    for scheme in [InitScheme::constrained_default(n), InitScheme::Small { eps: 0.1 }, InitScheme::Random] {
        let theta = sample_params(&scheme, spec.blocks_p(), spec.q(), &RngStream::new(1))?;
        let psi = apply_circuit(&spec, &theta, &psi0)?;
        println!("{:<12} sum theta {:>7.3}  <H> {:>8.4}", scheme.name(), theta.total(), psi.expectation(&h)?);
    }
    Ok(())
}
