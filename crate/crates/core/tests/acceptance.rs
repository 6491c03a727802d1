//! End-to-end acceptance run: one PASS/FAIL line per criterion.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use hva_lab::ansatz::{heisenberg_xyz, ising_field_hva, neel_state, pair_observable, single_site_layer, site_observable, xyz_hva};
use hva_lab::bounds::{fm_approx_verify, measured_norms, norm_bounds, theorem_constants};
use hva_lab::grad::{grad_variance_scan, saturation_eps, shot_gradient};
use hva_lab::spectral::{
    eigendecompose, fh_ensemble, haar_otoc_value, haar_unitary, otoc, random_k_local_hamiltonian, ProjectedObservables,
    RandomHamiltonianSpec, Rho0,
};
use hva_lab::vqe::{run_vqe, VqeOptions};
use hva_lab::{
    exact_gradient, sample_params, apply_circuit, GradientMode, HvaSpec, InitScheme, Lattice, LocalHamiltonian, ParamSet, Pauli,
    RngStream, StateVector,
};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

type Complex = nalgebra::Complex<f64>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn plus_y_problem(n: usize) -> (HvaSpec, StateVector, LocalHamiltonian) {
    (single_site_layer(n, Pauli::Y).unwrap(), StateVector::plus_state(n).unwrap(), site_observable(n, 1, Pauli::Z).unwrap())
}

fn c1_initial_gradient() -> Outcome {
    let mut worst = 0.0f64;
    for n in [2, 4, 8] {
        let (spec, psi, o) = plus_y_problem(n);
        let g = exact_gradient(&spec, &ParamSet::zeros(1, 1).unwrap(), &o, &psi).unwrap();
        worst = worst.max((g.get(0, 0) + 2.0).abs());
    }
    outcome(worst <= 1e-10, format!("max |g + 2| = {worst:.2e} over N in {{2, 4, 8}}"))
}

fn c2_ising_zero() -> Outcome {
    let mut worst = 0.0f64;
    for n in [4, 8] {
        let p = 3;
        let spec = ising_field_hva(&Lattice::ring(n).unwrap(), p).unwrap();
        let mut rng = RngStream::new(n as u64).rng();
        let raw: Vec<f64> = (0..p).map(|_| rng.random_range(0.1..1.0)).collect();
        let s: f64 = raw.iter().sum();
        let mut th = ParamSet::zeros(p, 3).unwrap();
        for (i, r) in raw.iter().enumerate() {
            th.set(i, 2, r * PI / 4.0 / s);
        }
        let g = exact_gradient(&spec, &th, &site_observable(n, 1, Pauli::Y).unwrap(), &StateVector::plus_state(n).unwrap()).unwrap();
        worst = worst.max(g.get(p - 1, 2).abs());
    }
    outcome(worst <= 1e-10, format!("max |d_(p,3) C| = {worst:.2e} over N in {{4, 8}}"))
}

fn expm_apply(h: &LocalHamiltonian, angle: f64, psi: &StateVector) -> Vec<Complex> {
    let eig = h.dense_matrix().unwrap().symmetric_eigen();
    let v = &eig.eigenvectors;
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| Complex::new(0.0, -angle * e).exp()));
    let u = v * phases * v.adjoint();
    (u * DVector::from_column_slice(psi.amplitudes())).iter().copied().collect()
}

fn c3_oracles() -> Outcome {
    // Layer application against dense exponentials.
    let mut layer_err = 0.0f64;
    for (idx, n) in [3usize, 4, 5, 6].into_iter().enumerate() {
        let lat = Lattice::ring(n).unwrap();
        let mut layers: Vec<LocalHamiltonian> = xyz_hva(&lat, 1).unwrap().layers().to_vec();
        layers.extend(ising_field_hva(&lat, 1).unwrap().layers().iter().cloned());
        let stream = RngStream::new(100 + idx as u64);
        let psi = StateVector::random(n, &stream).unwrap();
        let mut rng = stream.substream(1).rng();
        for h in &layers {
            let angle = rng.random_range(-PI..PI);
            let mut got = psi.clone();
            got.apply_layer(h, angle).unwrap();
            let want = expm_apply(h, angle, &psi);
            for (a, b) in got.amplitudes().iter().zip(&want) {
                layer_err = layer_err.max((a - b).norm());
            }
        }
    }
    // Adjoint gradient against central differences.
    let mut fd_err = 0.0f64;
    let mut rng = RngStream::new(2024).rng();
    for case in 0..20 {
        let n = [4, 6, 8][case % 3];
        let p = 1 + rng.random_range(0..4usize);
        let lat = Lattice::ring(n).unwrap();
        let spec = xyz_hva(&lat, p).unwrap();
        let psi = neel_state(&lat).unwrap();
        let o = if case % 2 == 0 { pair_observable(n, 0, 1, Pauli::Y).unwrap() } else { heisenberg_xyz(&lat, 1.0, 0.7, -0.4).unwrap() };
        let th = sample_params(&InitScheme::Random, p, 3, &RngStream::new(case as u64)).unwrap();
        let g = exact_gradient(&spec, &th, &o, &psi).unwrap();
        let h = 1e-5;
        let cost = |t: &ParamSet| apply_circuit(&spec, t, &psi).unwrap().expectation(&o).unwrap();
        let mut diff = 0.0f64;
        for k in 0..th.as_slice().len() {
            let mut a = th.clone();
            a.as_mut_slice()[k] += h;
            let mut b = th.clone();
            b.as_mut_slice()[k] -= h;
            let fd = (cost(&a) - cost(&b)) / (2.0 * h);
            diff = diff.max((fd - g.as_slice()[k]).abs());
        }
        fd_err = fd_err.max(diff / g.max_abs().max(1e-3));
    }
    // Exact-mode shift rule against the adjoint gradient.
    let mut shift_err = 0.0f64;
    for (case, n) in [4usize, 6, 8].into_iter().enumerate() {
        let lat = Lattice::ring(n).unwrap();
        let spec = xyz_hva(&lat, 2).unwrap();
        let psi = neel_state(&lat).unwrap();
        let h = heisenberg_xyz(&lat, 1.0, 1.0, 1.0).unwrap();
        let th = sample_params(&InitScheme::Random, 2, 3, &RngStream::new(50 + case as u64)).unwrap();
        let adj = exact_gradient(&spec, &th, &h, &psi).unwrap();
        let sr = shot_gradient(&spec, &th, &h, &psi, GradientMode::Exact, &RngStream::new(0)).unwrap().gradient;
        for (a, b) in adj.as_slice().iter().zip(sr.as_slice()) {
            shift_err = shift_err.max((a - b).abs());
        }
    }
    outcome(
        layer_err <= 1e-10 && fd_err <= 1e-5 && shift_err <= 1e-8,
        format!("layer vs expm {layer_err:.2e}; adjoint vs FD rel {fd_err:.2e} (20 configs); shift rule vs adjoint {shift_err:.2e}"),
    )
}

fn c4_haar_otoc() -> Outcome {
    let n = 4;
    let oi = site_observable(n, 0, Pauli::Z).unwrap();
    let oj = site_observable(n, 2, Pauli::Z).unwrap();
    let root = RngStream::new(4);
    let vals: Vec<f64> = (0..500)
        .map(|s| otoc(&haar_unitary(1 << n, &root.substream(s)), &oi, &oj, Rho0::MaximallyMixed).unwrap())
        .collect();
    let m = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / m;
    let se = (vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0) / m).sqrt();
    let target = -16.0 / 255.0;
    let z = (mean - target).abs() / se;
    let normalized = haar_otoc_value(n);
    let zn = (mean - normalized).abs() / se;
    outcome(
        z <= 4.0,
        format!(
            "mean {mean:.5} vs {target:.5}, {z:.2} standard errors (se {se:.1e}); vs normalized-trace value {normalized:.5}: {zn:.2} standard errors"
        ),
    )
}

fn site_sum(n: usize, p: Pauli) -> LocalHamiltonian {
    let g: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    LocalHamiltonian::uniform_sum(n, &g, p, 1.0).unwrap()
}

fn c5_time_average_identity() -> Outcome {
    let n = 8;
    let psi = StateVector::plus_state(n).unwrap();
    let (g, o) = (site_sum(n, Pauli::Y), site_sum(n, Pauli::Z));
    let mut worst = 0.0f64;
    let mut ordered = true;
    for i in 0..10 {
        let h = random_k_local_hamiltonian(&RandomHamiltonianSpec { n_sites: n, k: 2, time_reversal: false, seed: 500 + i }).unwrap();
        let eig = eigendecompose(&h).unwrap();
        let proj = ProjectedObservables::new(&eig, &psi, &g, &o).unwrap();
        let b = proj.f_h();
        let avg = proj.time_average(20_000.0, 100_001).unwrap();
        let closed = b.f_h - b.diag_term;
        worst = worst.max((avg - closed).abs() / closed.abs());
        ordered &= b.f_h <= avg;
    }
    outcome(
        worst <= 0.02 && ordered,
        format!("max relative gap {:.2}% over 10 instances (t in [0, 2e4], 1e5 points); F_H <= average: {ordered}", 100.0 * worst),
    )
}

fn c6_fh_no_decay() -> Outcome {
    let root = RngStream::new(6);
    let means: Vec<f64> = [6usize, 8, 10]
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let rows = fh_ensemble(n, 2, false, 128, &root.substream(i as u64), None).unwrap();
            rows.iter().map(|r| r.f_h).sum::<f64>() / rows.len() as f64
        })
        .collect();
    let ratio = means.iter().copied().fold(f64::MIN, f64::max) / means.iter().copied().fold(f64::MAX, f64::min);
    outcome(ratio < 3.0, format!("mean F_H at N = 6, 8, 10: {:.3}, {:.3}, {:.3}; max/min {ratio:.2}", means[0], means[1], means[2]))
}

fn xyz_scan(n: usize, p: usize, r: usize, scheme: InitScheme, samples: usize, seed: u64) -> f64 {
    let lat = Lattice::ring(n).unwrap();
    let spec = xyz_hva(&lat, p).unwrap().with_repetitions(r).unwrap();
    let o = pair_observable(n, 0, 1, Pauli::Y).unwrap();
    grad_variance_scan(&spec, &scheme, &o, &neel_state(&lat).unwrap(), samples, &RngStream::new(seed)).unwrap().mean_sq_grad
}

fn c7_fig3() -> Outcome {
    let c8 = xyz_scan(8, 16, 1, InitScheme::constrained_default(8), 256, 71);
    let c16 = xyz_scan(16, 16, 1, InitScheme::constrained_default(16), 256, 72);
    let r8 = xyz_scan(8, 16, 1, InitScheme::Random, 256, 73);
    let r14 = xyz_scan(14, 16, 1, InitScheme::Random, 256, 74);
    let cr = c8.max(c16) / c8.min(c16);
    let rr = r8 / r14;
    outcome(
        cr <= 4.0 && rr > 10.0,
        format!("constrained N=8 {c8:.3e}, N=16 {c16:.3e} (factor {cr:.2}); random N=8 {r8:.3e}, N=14 {r14:.3e} (drop {rr:.1}x)"),
    )
}

fn c8_fig4() -> Outcome {
    let eps: Vec<f64> = (1..=20).map(|i| i as f64 / 10.0).collect();
    let curve = |n: usize| -> Vec<f64> {
        eps.iter().enumerate().map(|(i, &e)| xyz_scan(n, 16, 1, InitScheme::Small { eps: e }, 128, 800 + 100 * n as u64 + i as u64)).collect()
    };
    let v8 = curve(8);
    let v12 = curve(12);
    let drop = v12[0] / v12[19];
    let e8 = saturation_eps(&eps, &v8).unwrap();
    let e12 = saturation_eps(&eps, &v12).unwrap();
    outcome(drop >= 10.0 && e12 > e8, format!("N=12 eps 0.1 -> 2.0 drop {drop:.1}x; eps0(8) = {e8}, eps0(12) = {e12}"))
}

fn c9_fig5() -> Outcome {
    let lat = Lattice::ring(8).unwrap();
    let spec = xyz_hva(&lat, 8).unwrap();
    let psi = neel_state(&lat).unwrap();
    let h = heisenberg_xyz(&lat, 1.0, 1.0, 1.0).unwrap();
    let e_gs = eigendecompose(&h).unwrap().ground_energy();
    let opts = VqeOptions { iterations: 1000, learning_rate: 0.025, ..VqeOptions::default() };
    let finals = |scheme: InitScheme, base: u64| -> Vec<Vec<f64>> {
        use rayon::prelude::*;
        (0..16u64)
            .into_par_iter()
            .map(|s| run_vqe(&spec, &psi, &scheme, &h, &opts, &RngStream::new(base + s)).unwrap().iter().map(|r| r.energy).collect())
            .collect()
    };
    let constrained = finals(InitScheme::constrained_default(8), 9000);
    let random = finals(InitScheme::Random, 9100);
    let constant = finals(InitScheme::Constant { v: PI }, 9200);
    let mean_err = constrained.iter().map(|c| c[c.len() - 1] - e_gs).sum::<f64>() / 16.0;
    let near_zero = random.iter().filter(|c| c[c.len() - 1].abs() <= 0.5).count();
    let same = constant.iter().all(|c| c == &constant[0]);
    let rel = mean_err / e_gs.abs();
    let random_finals: Vec<String> = random.iter().map(|c| format!("{:.2}", c[c.len() - 1])).collect();
    outcome(
        rel <= 0.01 && near_zero >= 8 && same,
        format!(
            "E_GS {e_gs:.4}; constrained mean error {:.3}% of |E_GS|; random within 0.5 of 0: {near_zero}/16 (finals {}); constant curves identical: {same}",
            100.0 * rel,
            random_finals.join(" ")
        ),
    )
}

fn c10_shot_budget() -> Outcome {
    let lat = Lattice::ring(8).unwrap();
    let spec = xyz_hva(&lat, 8).unwrap();
    let opts = VqeOptions { iterations: 1, learning_rate: 0.025, mode: GradientMode::Shots(128), snapshot_every_iteration: false };
    let recs = run_vqe(
        &spec,
        &neel_state(&lat).unwrap(),
        &InitScheme::constrained_default(8),
        &heisenberg_xyz(&lat, 1.0, 1.0, 1.0).unwrap(),
        &opts,
        &RngStream::new(10),
    )
    .unwrap();
    let preps = recs[1].state_prep_count;
    outcome(preps == 18 * 8 * 8 * 128, format!("{preps} state preparations (expected {})", 18 * 8 * 8 * 128))
}

fn c11_fig7() -> Outcome {
    let sizes = [4usize, 8, 12];
    let reps = |n: usize| (n * n).div_ceil(4);
    let con: Vec<f64> = sizes.iter().map(|&n| xyz_scan(n, 16, reps(n), InitScheme::constrained_default(n), 128, 1100 + n as u64)).collect();
    let unc: Vec<f64> = sizes.iter().map(|&n| xyz_scan(n, 16, reps(n), InitScheme::Random, 128, 1200 + n as u64)).collect();
    let spread = con.iter().copied().fold(f64::MIN, f64::max) / con.iter().copied().fold(f64::MAX, f64::min);
    let drop = unc[0] / unc[2];
    outcome(
        spread <= 4.0 && drop > 10.0,
        format!(
            "constrained {:.3e}, {:.3e}, {:.3e} (spread {spread:.2}); unconstrained {:.3e}, {:.3e}, {:.3e} (drop {drop:.1}x)",
            con[0], con[1], con[2], unc[0], unc[1], unc[2]
        ),
    )
}

fn c12_bounds() -> Outcome {
    let mut checks = 0;
    let mut failures = Vec::new();
    for n in [4usize, 5, 6] {
        let lat = Lattice::ring(n).unwrap();
        for seed in 0..4 {
            let h = random_k_local_hamiltonian(&RandomHamiltonianSpec { n_sites: n, k: 2, time_reversal: false, seed }).unwrap();
            for (site, axis) in [(0, Pauli::X), (n / 2, Pauli::Z)] {
                let o = site_observable(n, site, axis).unwrap();
                let b = norm_bounds(&h, &o, 2, &lat).unwrap();
                let (hn, cn) = measured_norms(&h, &o).unwrap();
                checks += 2;
                if hn > b.h_norm_bound * (1.0 + 1e-12) || cn > b.commutator_bound * (1.0 + 1e-12) {
                    failures.push(format!("norm N={n} seed={seed}"));
                }
            }
        }
    }
    let cases: [(f64, u32); 4] = [(0.01, 0), (0.005, 0), (0.005, 1), (0.0025, 1)];
    for n in [4usize, 6] {
        let spec = xyz_hva(&Lattice::ring(n).unwrap(), 2).unwrap();
        for (ci, &(tau, order)) in cases.iter().enumerate() {
            let mut th = sample_params(&InitScheme::Random, 2, 3, &RngStream::new(1200 + ci as u64)).unwrap();
            let s = th.total();
            th.as_mut_slice().iter_mut().for_each(|v| *v *= tau / s);
            let v = fm_approx_verify(&spec, &th, order).unwrap();
            checks += 2;
            if v.measured_error > v.bound {
                failures.push(format!("fm N={n} tau={tau} n={order}"));
            }
            if v.measured_k_norm > v.k_norm_bound {
                failures.push(format!("K N={n} tau={tau} n={order}"));
            }
        }
    }
    let tc = theorem_constants(2.0, 1.0, 1.0, 1.0, 1.0, 2, 2.0).unwrap();
    let consts_ok = tc.mu == 1.015625 && (tc.gamma - 11.00).abs() <= 1e-2;
    outcome(
        failures.is_empty() && consts_ok,
        format!("{checks} dominance checks, {} violations {failures:?}; mu = {}, gamma = {:.4}", failures.len(), tc.mu, tc.gamma),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("initial gradient -2", c1_initial_gradient),
        ("Ising-with-fields zero gradient", c2_ising_zero),
        ("oracle equivalence", c3_oracles),
        ("Haar OTOC", c4_haar_otoc),
        ("time average vs F_H", c5_time_average_identity),
        ("F_H flat in N for k=2", c6_fh_no_decay),
        ("gradient scaling by initialization", c7_fig3),
        ("small-range saturation", c8_fig4),
        ("VQE learning curves", c9_fig5),
        ("shot budget", c10_shot_budget),
        ("repeated ansatz", c11_fig7),
        ("bounds dominance", c12_bounds),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if only.is_some_and(|k| k != i + 1) {
            continue;
        }
        let start = Instant::now();
        let o = f();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} [{:>2}] {name}: {} ({:.1}s)", i + 1, o.detail, start.elapsed().as_secs_f64());
        failed += usize::from(!o.pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
