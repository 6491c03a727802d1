//! Adam training on the Heisenberg ring from constrained and random starts.
//! Every layer is translation invariant and the cat Neel start has momentum
//! zero, so rings with N/2 odd cannot reach their ground state.

use hva_lab::ansatz::heisenberg_xyz;
use hva_lab::{eigendecompose, neel_state, run_vqe, xyz_hva, InitScheme, Lattice, RngStream, VqeOptions};

fn main() -> hva_lab::Result<()> {
    let ring = Lattice::ring(8)?;
    let spec = xyz_hva(&ring, 8)?;
    let psi0 = neel_state(&ring)?;
    let h = heisenberg_xyz(&ring, 1.0, 1.0, 1.0)?;
    let e_gs = eigendecompose(&h)?.ground_energy();
    let opts = VqeOptions { iterations: 300, ..VqeOptions::default() };
    println!("ground energy {e_gs:.6}");
    for scheme in [InitScheme::constrained_default(8), InitScheme::Random] {
        let recs = run_vqe(&spec, &psi0, &scheme, &h, &opts, &RngStream::new(3))?;
        let curve: Vec<String> = recs.iter().step_by(50).map(|r| format!("{:.3}", r.energy)).collect();
        println!("{:<12} {}", scheme.name(), curve.join(" "));
    }
    Ok(())
}
