//! Exact diagonalization, translation-invariant random Hamiltonians, the
//! long-time gradient bound F_H, diagonal ensembles and OTOCs.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::pauli::{LocalHamiltonian, Pauli, PauliString, Term};
use crate::rng::RngStream;
use crate::statevec::{apply_hamiltonian, StateVector};
use crate::{Complex64, DENSE_MAX_SITES};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Gap-distinctness below this is reported as degenerate.
pub const DEGENERATE_GAP_TOL: f64 = 1e-10;

/// Ascending eigenvalues with matching eigenvector columns.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    n_sites: usize,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<Complex64>,
    min_gap_distinctness: f64,
}

impl EigenSystem {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<Complex64> {
        &self.eigenvectors
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Smallest difference between two gaps `E_i - E_j` (`i > j`) of distinct pairs.
    pub fn min_gap_distinctness(&self) -> f64 {
        self.min_gap_distinctness
    }

    pub fn has_degenerate_gaps(&self) -> bool {
        self.min_gap_distinctness < DEGENERATE_GAP_TOL
    }

    /// Coordinates `V^dagger psi`.
    pub fn coordinates(&self, psi: &[Complex64]) -> Vec<Complex64> {
        (0..self.dim())
            .map(|j| self.eigenvectors.column(j).iter().zip(psi).map(|(v, x)| v.conj() * x).sum())
            .collect()
    }

    /// `V diag(f(E)) V^dagger`.
    pub fn function(&self, f: impl Fn(f64) -> Complex64) -> DMatrix<Complex64> {
        self.function_indexed(|j| f(self.eigenvalues[j]))
    }

    /// `exp(-i H t)`.
    pub fn propagator(&self, t: f64) -> DMatrix<Complex64> {
        self.function(|e| Complex64::new(0.0, -e * t).exp())
    }

    /// `V diag(E) V^dagger`.
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        self.function(|e| Complex64::new(e, 0.0))
    }
}

fn min_gap_distinctness(e: &[f64]) -> f64 {
    let mut gaps = Vec::with_capacity(e.len() * e.len().saturating_sub(1) / 2);
    for i in 0..e.len() {
        for j in 0..i {
            gaps.push(e[i] - e[j]);
        }
    }
    if gaps.len() < 2 {
        return f64::INFINITY;
    }
    gaps.sort_by(f64::total_cmp);
    gaps.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

pub fn eigendecompose(h: &LocalHamiltonian) -> Result<EigenSystem> {
    ensure!(
        h.n_sites() <= DENSE_MAX_SITES,
        Resource,
        "exact diagonalization is capped at {DENSE_MAX_SITES} sites, got {}",
        h.n_sites()
    );
    let dense = h.dense_matrix()?;
    let (values, vectors) = if dense.iter().all(|z| z.im == 0.0) {
        let eig = dense.map(|z| z.re).symmetric_eigen();
        (eig.eigenvalues, eig.eigenvectors.map(|x| Complex64::new(x, 0.0)))
    } else {
        let eig = dense.symmetric_eigen();
        (eig.eigenvalues, eig.eigenvectors)
    };
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let dim = eigenvalues.len();
    let mut eigenvectors = DMatrix::zeros(dim, dim);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &vectors.column(src));
    }
    let min_gap_distinctness = min_gap_distinctness(&eigenvalues);
    Ok(EigenSystem { n_sites: h.n_sites(), eigenvalues, eigenvectors, min_gap_distinctness })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomHamiltonianSpec {
    pub n_sites: usize,
    pub k: usize,
    pub time_reversal: bool,
    pub seed: u64,
}

fn canonical(s: &PauliString) -> PauliString {
    (0..s.n_sites()).map(|t| s.translate(t)).min().expect("at least one site")
}

/// Canonical representatives of the translation classes of non-identity
/// `k`-site windows on an `n`-site ring, sorted by letter sequence
/// (`I < X < Y < Z`). With `time_reversal`, classes with an odd number of
/// Y letters are dropped.
pub fn random_hamiltonian_classes(n_sites: usize, k: usize, time_reversal: bool) -> Result<Vec<PauliString>> {
    ensure!(k >= 1, Input, "k must be positive");
    ensure!(k <= n_sites, Input, "window length k = {k} exceeds {n_sites} sites");
    PauliString::identity(n_sites)?;
    let mut classes = BTreeSet::new();
    let mut letters = vec![Pauli::I; n_sites];
    for code in 1..4usize.pow(k as u32) {
        let mut c = code;
        for slot in letters.iter_mut().take(k) {
            *slot = Pauli::ALL[c % 4];
            c /= 4;
        }
        let rep = canonical(&PauliString::from_paulis(&letters)?);
        if !(time_reversal && rep.y_count() % 2 == 1) {
            classes.insert(rep);
        }
    }
    Ok(classes.into_iter().collect())
}

/// `H = sum_s c_s sum_n T^n s` with one standard-normal `c_s` per class,
/// drawn in class order from `RngStream::new(seed)`. Coinciding translates
/// of periodic strings add up.
pub fn random_k_local_hamiltonian(spec: &RandomHamiltonianSpec) -> Result<LocalHamiltonian> {
    let n = spec.n_sites;
    let classes = random_hamiltonian_classes(n, spec.k, spec.time_reversal)?;
    let mut rng = RngStream::new(spec.seed).rng();
    let mut terms = Vec::with_capacity(classes.len() * n);
    for s in &classes {
        let c: f64 = StandardNormal.sample(&mut rng);
        terms.extend((0..n).map(|t| Term { coeff: c, string: s.translate(t) }));
    }
    Ok(LocalHamiltonian::from_terms_merged(n, terms)?.with_locality(spec.k))
}

/// `O~ = sum_j O_jj |E_j><E_j|` as a dense matrix.
pub fn diagonal_ensemble(eig: &EigenSystem, o: &LocalHamiltonian) -> Result<DMatrix<Complex64>> {
    ensure!(o.n_sites() == eig.n_sites(), Input, "observable and Hamiltonian have different site counts");
    let diag = observable_diagonal(eig, o);
    Ok(eig.function_indexed(|j| Complex64::new(diag[j], 0.0)))
}

impl EigenSystem {
    fn function_indexed(&self, f: impl Fn(usize) -> Complex64) -> DMatrix<Complex64> {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for j in 0..self.dim() {
            let w = f(j);
            for z in scaled.column_mut(j).iter_mut() {
                *z *= w;
            }
        }
        scaled * v.adjoint()
    }
}

fn column(eig: &EigenSystem, j: usize) -> Vec<Complex64> {
    eig.eigenvectors.column(j).iter().copied().collect()
}

/// `O_jj = <E_j|O|E_j>` for every eigenstate.
pub fn observable_diagonal(eig: &EigenSystem, o: &LocalHamiltonian) -> Vec<f64> {
    (0..eig.dim())
        .map(|j| {
            let v = column(eig, j);
            let w = apply_hamiltonian(&v, o);
            v.iter().zip(&w).map(|(a, b)| a.conj() * b).sum::<Complex64>().re
        })
        .collect()
}

/// Eigenbasis data for one `(psi, G, O)` triple, restricted to the
/// eigenstates that overlap `psi` or `G psi`; all other eigenstates drop
/// out of every sum below.
#[derive(Clone, Debug)]
pub struct ProjectedObservables {
    /// Energies of the retained eigenstates.
    energies: Vec<f64>,
    /// `u_j = <psi|G|E_j>`.
    u: Vec<Complex64>,
    /// `C_k = <E_k|psi>`.
    c: Vec<Complex64>,
    /// `O_jk` on the retained block, row-major.
    o: Vec<Complex64>,
}

impl ProjectedObservables {
    pub fn new(eig: &EigenSystem, psi0: &StateVector, g: &LocalHamiltonian, o: &LocalHamiltonian) -> Result<Self> {
        let n = eig.n_sites();
        ensure!(
            psi0.n_sites() == n && g.n_sites() == n && o.n_sites() == n,
            Input,
            "state, G, O and Hamiltonian must share a site count"
        );
        let c_all = eig.coordinates(psi0.amplitudes());
        let gpsi = apply_hamiltonian(psi0.amplitudes(), g);
        let u_all: Vec<Complex64> = eig.coordinates(&gpsi).into_iter().map(|z| z.conj()).collect();
        let scale = u_all.iter().chain(&c_all).fold(0.0f64, |m, z| m.max(z.norm()));
        let tol = 1e-13 * scale.max(1.0);
        let support: Vec<usize> = (0..eig.dim()).filter(|&j| u_all[j].norm() > tol || c_all[j].norm() > tol).collect();
        let cols: Vec<Vec<Complex64>> = support.iter().map(|&j| column(eig, j)).collect();
        let o_cols: Vec<Vec<Complex64>> = cols.par_iter().map(|v| apply_hamiltonian(v, o)).collect();
        let m = support.len();
        let mut om = vec![ZERO; m * m];
        om.par_chunks_mut(m).enumerate().for_each(|(a, row)| {
            for (b, ob) in o_cols.iter().enumerate() {
                row[b] = cols[a].iter().zip(ob).map(|(x, y)| x.conj() * y).sum();
            }
        });
        Ok(Self {
            energies: support.iter().map(|&j| eig.eigenvalues[j]).collect(),
            u: support.iter().map(|&j| u_all[j]).collect(),
            c: support.iter().map(|&j| c_all[j]).collect(),
            o: om,
        })
    }

    pub fn support_size(&self) -> usize {
        self.energies.len()
    }

    fn a(&self, j: usize, k: usize) -> Complex64 {
        self.u[j] * self.o[j * self.support_size() + k] * self.c[k]
    }

    /// `<psi|[G, O~]|psi>`; purely imaginary.
    pub fn commutator_with_diagonal_ensemble(&self) -> Complex64 {
        let s: Complex64 = (0..self.support_size()).map(|j| self.a(j, j)).sum();
        s - s.conj()
    }

    pub fn f_h(&self) -> FhBound {
        let m = self.support_size();
        let (mut t1, mut t23, mut coincident) = (0.0, 0.0, 0.0);
        for j in 0..m {
            for k in 0..m {
                let ajk = self.a(j, k);
                let akj = self.a(k, j);
                t1 += 2.0 * ajk.norm_sqr();
                // a_jk a_kj + conj(a_jk a_kj) = 2 Re(a_jk a_kj)
                t23 += 2.0 * (ajk * akj).re;
            }
            coincident += 4.0 * self.a(j, j).im.powi(2);
        }
        let printed = t1 - t23;
        let c = self.commutator_with_diagonal_ensemble();
        FhBound {
            f_h: printed - coincident,
            unrestricted: printed,
            coincident,
            diag_term: (c * c).re,
        }
    }

    /// Mean of `-<psi|[G, O(t)]|psi>^2` over `n_times` equally spaced times in `[0, t_max]`.
    pub fn time_average(&self, t_max: f64, n_times: usize) -> Result<f64> {
        ensure!(n_times >= 100, Input, "n_times must be at least 100, got {n_times}");
        ensure!(t_max >= 0.0 && t_max.is_finite(), Input, "t_max must be non-negative");
        let m = self.support_size();
        let dt = t_max / (n_times - 1) as f64;
        let sum: f64 = (0..n_times)
            .into_par_iter()
            .map(|i| {
                let t = dt * i as f64;
                let y: Vec<Complex64> = (0..m).map(|k| self.c[k] * Complex64::new(0.0, -self.energies[k] * t).exp()).collect();
                let mut a = ZERO;
                for j in 0..m {
                    let row = &self.o[j * m..(j + 1) * m];
                    let oy: Complex64 = row.iter().zip(&y).map(|(x, z)| x * z).sum();
                    a += self.u[j] * Complex64::new(0.0, self.energies[j] * t).exp() * oy;
                }
                let comm = a - a.conj();
                -(comm * comm).re
            })
            .collect::<Vec<f64>>()
            .into_iter()
            .sum();
        Ok(sum / n_times as f64)
    }
}

/// Closed-form long-time gradient bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FhBound {
    /// The bound with coincident eigenstate pairs counted once.
    pub f_h: f64,
    /// The three-term sum taken over all index tuples, coincident pairs included.
    pub unrestricted: f64,
    /// `unrestricted - f_h = 4 sum_j (Im a_jj)^2`.
    pub coincident: f64,
    /// `<psi|[G, O~]|psi>^2` (non-positive).
    pub diag_term: f64,
}

/// F_H result together with the degenerate-gap flag of the source spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FhReport {
    pub bound: FhBound,
    pub min_gap: f64,
    pub degenerate_gap_warning: bool,
}

pub fn f_h_lower_bound(eig: &EigenSystem, psi0: &StateVector, g: &LocalHamiltonian, o: &LocalHamiltonian) -> Result<FhReport> {
    let proj = ProjectedObservables::new(eig, psi0, g, o)?;
    Ok(FhReport {
        bound: proj.f_h(),
        min_gap: eig.min_gap_distinctness(),
        degenerate_gap_warning: eig.has_degenerate_gaps(),
    })
}

pub fn time_average_grad_sq(
    eig: &EigenSystem,
    psi0: &StateVector,
    g: &LocalHamiltonian,
    o: &LocalHamiltonian,
    t_max: f64,
    n_times: usize,
) -> Result<f64> {
    ProjectedObservables::new(eig, psi0, g, o)?.time_average(t_max, n_times)
}

/// One instance of an F_H ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FhRow {
    pub n_sites: usize,
    pub k: usize,
    pub time_reversal: bool,
    pub instance_seed: u64,
    pub f_h: f64,
    pub time_avg: Option<f64>,
    pub diag_term: f64,
    pub min_gap: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_max: f64,
    pub n_times: usize,
}

/// `|+>^N`, `G = sum Y_i`, `O = sum Z_i` over `n_instances` random
/// Hamiltonians. Instance `i` uses seed `stream.child_seed(i)`.
pub fn fh_ensemble(
    n_sites: usize,
    k: usize,
    time_reversal: bool,
    n_instances: usize,
    stream: &RngStream,
    grid: Option<TimeGrid>,
) -> Result<Vec<FhRow>> {
    let psi0 = StateVector::plus_state(n_sites)?;
    let sites: Vec<Vec<usize>> = (0..n_sites).map(|s| vec![s]).collect();
    let g = LocalHamiltonian::uniform_sum(n_sites, &sites, Pauli::Y, 1.0)?;
    let o = LocalHamiltonian::uniform_sum(n_sites, &sites, Pauli::Z, 1.0)?;
    (0..n_instances)
        .into_par_iter()
        .map(|i| {
            let seed = stream.child_seed(i as u64);
            let h = random_k_local_hamiltonian(&RandomHamiltonianSpec { n_sites, k, time_reversal, seed })?;
            let eig = eigendecompose(&h)?;
            let proj = ProjectedObservables::new(&eig, &psi0, &g, &o)?;
            let b = proj.f_h();
            let time_avg = grid.map(|tg| proj.time_average(tg.t_max, tg.n_times)).transpose()?;
            Ok(FhRow {
                n_sites,
                k,
                time_reversal,
                instance_seed: seed,
                f_h: b.f_h,
                time_avg,
                diag_term: b.diag_term,
                min_gap: eig.min_gap_distinctness(),
            })
        })
        .collect()
}

/// Initial state for an OTOC.
#[derive(Clone, Debug)]
pub enum Rho0<'a> {
    MaximallyMixed,
    Pure(&'a StateVector),
}

/// `Tr[rho0 (U O_i U^dagger O_j)^2]`.
pub fn otoc(u: &DMatrix<Complex64>, o_i: &LocalHamiltonian, o_j: &LocalHamiltonian, rho0: Rho0<'_>) -> Result<f64> {
    let n = o_i.n_sites();
    ensure!(o_j.n_sites() == n, Input, "observables have different site counts");
    let dim = 1usize << n;
    ensure!(u.nrows() == dim && u.ncols() == dim, Input, "unitary must be {dim}x{dim}");
    let oi = o_i.dense_matrix()?;
    let oj = o_j.dense_matrix()?;
    let w = u * oi * u.adjoint() * oj;
    let w2 = &w * &w;
    let val = match rho0 {
        Rho0::MaximallyMixed => w2.trace() / dim as f64,
        Rho0::Pure(psi) => {
            ensure!(psi.n_sites() == n, Input, "state has {} sites, observables have {n}", psi.n_sites());
            let v = DVector::from_column_slice(psi.amplitudes());
            (v.adjoint() * w2 * &v)[(0, 0)]
        }
    };
    Ok(val.re)
}

/// Haar-random unitary: QR of a complex Ginibre matrix with the phases of
/// `R`'s diagonal moved into `Q`.
pub fn haar_unitary(dim: usize, stream: &RngStream) -> DMatrix<Complex64> {
    let mut rng = stream.rng();
    let g = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
    });
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for z in q.column_mut(j).iter_mut() {
            *z *= ph;
        }
    }
    q
}

/// Infinite-temperature Haar average `-1 / (4^N - 1)` for distinct-site Pauli
/// observables under the normalized trace. The unnormalized trace gives
/// `-2^N / (4^N - 1)`.
pub fn haar_otoc_value(n_sites: usize) -> f64 {
    let d = (1u64 << n_sites) as f64;
    -1.0 / (d * d - 1.0)
}
