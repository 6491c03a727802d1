//! Shift-rule gradient of the Heisenberg energy from measurement samples.

use hva_lab::ansatz::heisenberg_xyz;
use hva_lab::{exact_gradient, neel_state, sample_params, shot_gradient, xyz_hva, GradientMode, InitScheme, Lattice, RngStream};

fn main() -> hva_lab::Result<()> {
    let ring = Lattice::ring(6)?;
    let spec = xyz_hva(&ring, 2)?;
    let psi0 = neel_state(&ring)?;
    let h = heisenberg_xyz(&ring, 1.0, 1.0, 1.0)?;
    let theta = sample_params(&InitScheme::constrained_default(6), 2, 3, &RngStream::new(2))?;

    let exact = exact_gradient(&spec, &theta, &h, &psi0)?;
    for n_shot in [128, 2048, 32768] {
        let est = shot_gradient(&spec, &theta, &h, &psi0, GradientMode::Shots(n_shot), &RngStream::new(n_shot))?;
        let err = est.gradient.as_slice().iter().zip(exact.as_slice()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        println!("n_shot {n_shot:>6}: {:>9} state preparations, max error {err:.4}", est.state_preps);
    }
    Ok(())
}
