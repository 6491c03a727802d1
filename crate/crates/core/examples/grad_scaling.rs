//! Mean squared gradient versus system size for each initialization.

use hva_lab::ansatz::pair_observable;
use hva_lab::{grad_variance_scan, neel_state, xyz_hva, InitScheme, Lattice, Pauli, RngStream};

fn main() -> hva_lab::Result<()> {
    println!("{:>3} {:>12} {:>12} {:>12}", "N", "constrained", "small", "random");
    for n in [4, 6, 8, 10] {
        let ring = Lattice::ring(n)?;
        let spec = xyz_hva(&ring, 8)?;
        let psi0 = neel_state(&ring)?;
        let o = pair_observable(n, 0, 1, Pauli::Y)?;
        let mut row = format!("{n:>3}");
        for scheme in [InitScheme::constrained_default(n), InitScheme::Small { eps: 0.1 }, InitScheme::Random] {
            let r = grad_variance_scan(&spec, &scheme, &o, &psi0, 64, &RngStream::new(n as u64))?;
            row += &format!(" {:>12.4e}", r.mean_sq_grad);
        }
        println!("{row}");
    }
    Ok(())
}
