//! Short-circuit regime: effective Hamiltonian error against its bound.

use hva_lab::bounds::{fm_approx_verify, FmParameters};
use hva_lab::{fm_order_n0, sample_params, xyz_hva, InitScheme, Lattice, RngStream};

fn main() -> hva_lab::Result<()> {
    let n = 6;
    let spec = xyz_hva(&Lattice::ring(n)?, 2)?;
    let params = FmParameters::from_spec(&spec)?;
    println!("h_max {} J {} k {}", params.h_max, params.j_strength, params.k);
    for tau in [0.02, 0.01, 0.005, 0.0025] {
        let mut theta = sample_params(&InitScheme::Random, 2, 3, &RngStream::new(4))?;
        let s = theta.total();
        theta.as_mut_slice().iter_mut().for_each(|v| *v *= tau / s);
        let n0 = fm_order_n0(tau, params.k, params.j_strength)?;
        println!("tau {tau}: highest admissible order {n0}");
        for order in 0..=n0.min(1) as u32 {
            let v = fm_approx_verify(&spec, &theta, order)?;
            println!("tau {tau:<6} n {order}: error {:.3e} <= bound {:.3e}", v.measured_error, v.bound);
        }
    }
    Ok(())
}
