//! Closed-form locality, speed-limit and Floquet-Magnus bounds, with dense
//! measurements to compare them against on small systems.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::ansatz::{apply_circuit, HvaSpec, ParamSet};
use crate::error::{ensure, Result};
use crate::lattice::Lattice;
use crate::pauli::LocalHamiltonian;
use crate::statevec::StateVector;
use crate::Complex64;

/// Largest site count for dense Floquet-Magnus checks.
pub const FM_VERIFY_MAX_SITES: usize = 8;

pub const MU: f64 = 65.0 / 64.0;

/// `ln(4^7 3^3 / e^2)`.
pub fn gamma_constant() -> f64 {
    7.0 * 4f64.ln() + 3.0 * 3f64.ln() - 2.0
}

/// Locality data of a layered ansatz.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FmParameters {
    /// Largest summed term norm of any single layer.
    pub h_max: f64,
    /// Largest summed norm of one layer's terms touching any one site.
    pub j_strength: f64,
    pub k: usize,
    pub lambda: f64,
    pub v0: f64,
}

impl FmParameters {
    pub fn new(h_max: f64, j_strength: f64, k: usize) -> Result<Self> {
        Self::with_v0(h_max, j_strength, k, h_max)
    }

    pub fn with_v0(h_max: f64, j_strength: f64, k: usize, v0: f64) -> Result<Self> {
        ensure!(h_max > 0.0 && h_max.is_finite(), Input, "h_max must be positive, got {h_max}");
        ensure!(j_strength > 0.0 && j_strength.is_finite(), Input, "J must be positive, got {j_strength}");
        ensure!(k >= 1, Input, "k must be positive");
        ensure!(v0 >= 0.0 && v0 <= h_max, Input, "v0 = {v0} must lie in [0, h_max = {h_max}]");
        Ok(Self { h_max, j_strength, k, lambda: 2.0 * k as f64 * j_strength, v0 })
    }

    /// Reads `h_max` and `J` off the layers of `spec`.
    pub fn from_layers(layers: &[LocalHamiltonian], k: usize) -> Result<Self> {
        ensure!(!layers.is_empty(), Input, "no layers");
        let n = layers[0].n_sites();
        let h_max = layers.iter().map(|h| h.coefficient_norm()).fold(0.0, f64::max);
        let mut j = 0.0f64;
        for h in layers {
            for a in 0..n {
                let touching: f64 = h.terms().iter().filter(|t| t.string.support_mask() >> a & 1 == 1).map(|t| t.coeff.abs()).sum();
                j = j.max(touching);
            }
        }
        Self::new(h_max, j, k)
    }

    pub fn from_spec(spec: &HvaSpec) -> Result<Self> {
        Self::from_layers(spec.layers(), spec.locality_k())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormBounds {
    pub h_norm_bound: f64,
    pub commutator_bound: f64,
    /// Number of terms of `H` within lattice distance `k` of the support of `O`.
    pub s: usize,
}

/// `||H|| <= sum |c|` and `||[H, O]|| <= 2 s ||O|| max |c|`, with `||O||`
/// bounded by its own coefficient sum.
pub fn norm_bounds(h: &LocalHamiltonian, o: &LocalHamiltonian, k: usize, lattice: &Lattice) -> Result<NormBounds> {
    let n = h.n_sites();
    ensure!(o.n_sites() == n && lattice.n_sites() == n, Input, "H, O and lattice must share a site count");
    let o_sites: Vec<usize> = (0..n).filter(|&s| o.terms().iter().any(|t| t.string.support_mask() >> s & 1 == 1)).collect();
    let near = |sites: &[usize]| sites.iter().any(|&a| o_sites.iter().any(|&b| lattice.distance(a, b) <= k));
    let s = h.terms().iter().filter(|t| near(&t.string.support())).count();
    let max_c = h.terms().iter().map(|t| t.coeff.abs()).fold(0.0, f64::max);
    Ok(NormBounds {
        h_norm_bound: h.coefficient_norm(),
        commutator_bound: 2.0 * s as f64 * o.coefficient_norm() * max_c,
        s,
    })
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    m.singular_values().iter().copied().fold(0.0, f64::max)
}

fn hermitian_norm(m: &DMatrix<Complex64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.amax()
}

/// Dense `(||H||, ||[H, O]||)`.
pub fn measured_norms(h: &LocalHamiltonian, o: &LocalHamiltonian) -> Result<(f64, f64)> {
    let hd = h.dense_matrix()?;
    let od = o.dense_matrix()?;
    let comm = &hd * &od - &od * &hd;
    Ok((hermitian_norm(&hd), spectral_norm(&comm)))
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    ensure!(v > 0.0 && v.is_finite(), Input, "{name} must be positive and finite, got {v}");
    Ok(())
}

/// `t_c = g / (4 K C)`.
pub fn speed_limit_tc(g: f64, big_k: f64, big_c: f64) -> Result<f64> {
    check_positive("g", g)?;
    check_positive("K", big_k)?;
    check_positive("C", big_c)?;
    Ok(g / (4.0 * big_k * big_c))
}

/// `floor(1 / (32 k J t))`, saturating for tiny `t`.
pub fn fm_order_n0(t: f64, k: usize, j: f64) -> Result<u64> {
    check_positive("t", t)?;
    check_positive("J", j)?;
    ensure!(k >= 1, Input, "k must be positive");
    Ok((1.0 / (32.0 * k as f64 * j * t)).floor() as u64)
}

/// `Omega-bar_n = 2 v0 lambda^n n! / (n + 1)^2`.
pub fn omega_bound(n: u32, v0: f64, lambda: f64) -> f64 {
    2.0 * v0 * lambda.powi(n as i32) * factorial(n) / f64::from(n + 1).powi(2)
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// `6 H_max 2^{-n0} t + 2 H_max (2kJ)^{n+1} (n+1)! t^{n+2} / (n+2)^2`, valid for `n <= n0`.
pub fn fm_error_bound(n: u32, t: f64, params: &FmParameters) -> Result<f64> {
    let n0 = fm_order_n0(t, params.k, params.j_strength)?;
    ensure!(
        u64::from(n) <= n0,
        Precondition,
        "truncation order n = {n} exceeds n0 = {n0} at t = {t}, k = {}, J = {}",
        params.k,
        params.j_strength
    );
    let first = 6.0 * params.h_max * 0.5f64.powf(n0 as f64) * t;
    Ok(first + omega_bound(n + 1, params.h_max, params.lambda) * t.powi(n as i32 + 2))
}

/// `H_max sum_{m=0}^{n} (2kJ)^m m! t^m / (m + 1)^2`.
pub fn k_norm_bound(n: u32, t: f64, params: &FmParameters) -> Result<f64> {
    ensure!(t >= 0.0 && t.is_finite(), Input, "t must be non-negative, got {t}");
    Ok(params.h_max * (0..=n).map(|m| params.lambda.powi(m as i32) * factorial(m) * t.powi(m as i32) / f64::from(m + 1).powi(2)).sum::<f64>())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremConstants {
    pub mu: f64,
    pub gamma: f64,
    pub c: f64,
    pub beta_c: f64,
    pub n_min: f64,
}

pub fn theorem_constants(g: f64, r: f64, o_norm: f64, l: f64, s: f64, k: usize, j: f64) -> Result<TheoremConstants> {
    for (name, v) in [("g", g), ("r", r), ("||O||", o_norm), ("l", l), ("s", s), ("J", j)] {
        check_positive(name, v)?;
    }
    ensure!(k >= 1, Input, "k must be positive");
    let kf = k as f64;
    let gamma = gamma_constant();
    let c = g / (8.0 * MU * r * o_norm * (MU * l).max(s));
    let beta_c = 8.0 * c.powi(3) * r * (2.0 * kf * j).powi(2) / 9.0;
    let n_min = (128.0 * gamma * c * kf * j).max(32.0 * r * beta_c * o_norm / g);
    Ok(TheoremConstants { mu: MU, gamma, c, beta_c, n_min })
}

/// Truncated Floquet-Magnus Hamiltonian of the layer schedule, for `n <= 1`:
/// `H^(0) = sum_a theta_a H_a / tau`, and `H^(1)` adds
/// `(-i / 2 tau) sum_{a<b} theta_a theta_b [H_b, H_a]` over the time-ordered
/// layer applications.
pub fn fm_hamiltonian(spec: &HvaSpec, params: &ParamSet, n: u32) -> Result<(DMatrix<Complex64>, f64)> {
    spec.check_params(params)?;
    ensure!(n <= 1, Unsupported, "closed-form Floquet-Magnus terms are implemented for n <= 1, got {n}");
    let tau = params.total() * spec.repetitions_r() as f64;
    ensure!(tau > 0.0, Input, "parameter sum must be positive, got {tau}");
    ensure!(params.as_slice().iter().all(|&v| v >= 0.0), Input, "Floquet-Magnus schedule needs non-negative parameters");
    let dense: Vec<DMatrix<Complex64>> = spec.layers().iter().map(|h| h.dense_matrix()).collect::<Result<_>>()?;
    let mut schedule = Vec::with_capacity(spec.total_layers());
    for _ in 0..spec.repetitions_r() {
        for i in 0..spec.blocks_p() {
            for j in 0..spec.q() {
                schedule.push((j, params.get(i, j)));
            }
        }
    }
    let dim = 1usize << spec.n_sites();
    let mut h = DMatrix::<Complex64>::zeros(dim, dim);
    for &(j, th) in &schedule {
        h += &dense[j] * Complex64::new(th / tau, 0.0);
    }
    if n == 1 {
        let q = spec.q();
        let mut comm = vec![None; q * q];
        // sum_{a<b} theta_a theta_b [H_b, H_a], grouped by layer pair.
        let mut weights = vec![0.0; q * q];
        let mut prefix = vec![0.0; q];
        for &(jb, tb) in &schedule {
            for ja in 0..q {
                weights[jb * q + ja] += tb * prefix[ja];
            }
            prefix[jb] += tb;
        }
        let mut acc = DMatrix::<Complex64>::zeros(dim, dim);
        for jb in 0..q {
            for ja in 0..q {
                let w = weights[jb * q + ja];
                if ja == jb || w == 0.0 {
                    continue;
                }
                let c: &DMatrix<Complex64> =
                    comm[jb * q + ja].get_or_insert_with(|| &dense[jb] * &dense[ja] - &dense[ja] * &dense[jb]);
                acc += c * Complex64::new(w, 0.0);
            }
        }
        h += acc * Complex64::new(0.0, -0.5 / tau);
    }
    Ok((h, tau))
}

/// Dense circuit unitary, column `b` being the circuit applied to `|b>`.
pub fn circuit_unitary(spec: &HvaSpec, params: &ParamSet) -> Result<DMatrix<Complex64>> {
    let n = spec.n_sites();
    let dim = 1usize << n;
    let mut u = DMatrix::<Complex64>::zeros(dim, dim);
    for b in 0..dim {
        let out = apply_circuit(spec, params, &StateVector::basis_state(n, b as u64)?)?;
        u.set_column(b, &nalgebra::DVector::from_column_slice(out.amplitudes()));
    }
    Ok(u)
}

fn expm_minus_i(h: &DMatrix<Complex64>, t: f64) -> DMatrix<Complex64> {
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, &e) in eig.eigenvalues.iter().enumerate() {
        let w = Complex64::new(0.0, -e * t).exp();
        for z in scaled.column_mut(j).iter_mut() {
            *z *= w;
        }
    }
    scaled * v.adjoint()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FmVerification {
    pub n: u32,
    pub tau: f64,
    pub n0: u64,
    /// `||U - exp(-i H^(n) tau)||`.
    pub measured_error: f64,
    pub bound: f64,
    /// `||H^(n)||`.
    pub measured_k_norm: f64,
    pub k_norm_bound: f64,
}

impl FmVerification {
    pub fn dominated(&self) -> bool {
        self.measured_error <= self.bound && self.measured_k_norm <= self.k_norm_bound
    }
}

pub fn fm_approx_verify(spec: &HvaSpec, params: &ParamSet, n: u32) -> Result<FmVerification> {
    ensure!(
        spec.n_sites() <= FM_VERIFY_MAX_SITES,
        Resource,
        "dense Floquet-Magnus checks are capped at {FM_VERIFY_MAX_SITES} sites, got {}",
        spec.n_sites()
    );
    let fm = FmParameters::from_spec(spec)?;
    let (h, tau) = fm_hamiltonian(spec, params, n)?;
    let bound = fm_error_bound(n, tau, &fm)?;
    let u = circuit_unitary(spec, params)?;
    let measured_error = spectral_norm(&(u - expm_minus_i(&h, tau)));
    Ok(FmVerification {
        n,
        tau,
        n0: fm_order_n0(tau, fm.k, fm.j_strength)?,
        measured_error,
        bound,
        measured_k_norm: hermitian_norm(&h),
        k_norm_bound: k_norm_bound(n, tau, &fm)?,
    })
}
