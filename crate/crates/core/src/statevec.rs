//! Dense statevectors, Pauli rotations, expectations and basis sampling.

use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

use crate::error::{ensure, HvaError, Result};
use crate::pauli::{i_pow, LocalHamiltonian, Pauli, PauliString};
use crate::rng::RngStream;
use crate::{Complex64, MAX_SITES};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `2^n` complex amplitudes of unit norm. Basis index bit `s` is site `s`;
/// bit value 0 is spin up (Z = +1).
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_sites: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    fn check_sites(n_sites: usize) -> Result<()> {
        ensure!(n_sites >= 1, Input, "a state needs at least one site");
        ensure!(n_sites <= MAX_SITES, Resource, "{n_sites} sites exceeds the {MAX_SITES}-site statevector limit");
        Ok(())
    }

    /// The computational basis state `|b>`.
    pub fn basis_state(n_sites: usize, b: u64) -> Result<Self> {
        Self::check_sites(n_sites)?;
        let dim = 1usize << n_sites;
        ensure!((b as usize) < dim, Input, "basis index {b} out of range for {n_sites} sites");
        let mut amps = vec![ZERO; dim];
        amps[b as usize] = ONE;
        Ok(Self { n_sites, amps })
    }

    pub fn zero_state(n_sites: usize) -> Result<Self> {
        Self::basis_state(n_sites, 0)
    }

    /// `|+>^N`.
    pub fn plus_state(n_sites: usize) -> Result<Self> {
        Self::check_sites(n_sites)?;
        let dim = 1usize << n_sites;
        let a = Complex64::new((dim as f64).sqrt().recip(), 0.0);
        Ok(Self { n_sites, amps: vec![a; dim] })
    }

    /// Normalizes the given amplitudes. Rejects a zero vector.
    pub fn from_amplitudes(n_sites: usize, amps: Vec<Complex64>) -> Result<Self> {
        Self::check_sites(n_sites)?;
        ensure!(
            amps.len() == 1usize << n_sites,
            Input,
            "expected {} amplitudes, got {}",
            1usize << n_sites,
            amps.len()
        );
        let norm = norm_sqr(&amps).sqrt();
        ensure!(norm.is_finite() && norm > 0.0, Input, "amplitudes have zero or non-finite norm");
        let inv = norm.recip();
        Ok(Self { n_sites, amps: amps.into_iter().map(|a| a * inv).collect() })
    }

    /// Haar-random state from normalized complex Gaussian amplitudes.
    pub fn random(n_sites: usize, stream: &RngStream) -> Result<Self> {
        Self::check_sites(n_sites)?;
        let mut rng = stream.rng();
        let amps = (0..1usize << n_sites)
            .map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
            .collect();
        Self::from_amplitudes(n_sites, amps)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        norm_sqr(&self.amps).sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        ensure!(self.n_sites == other.n_sites, Input, "site count mismatch: {} vs {}", self.n_sites, other.n_sites);
        Ok(inner(&self.amps, &other.amps))
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    fn check_string(&self, p: &PauliString) -> Result<()> {
        ensure!(
            p.n_sites() == self.n_sites,
            Input,
            "string {p} has {} sites, state has {}",
            p.n_sites(),
            self.n_sites
        );
        Ok(())
    }

    fn check_hamiltonian(&self, h: &LocalHamiltonian) -> Result<()> {
        ensure!(
            h.n_sites() == self.n_sites,
            Input,
            "Hamiltonian has {} sites, state has {}",
            h.n_sites(),
            self.n_sites
        );
        Ok(())
    }

    /// `psi <- exp(-i angle P) psi`.
    pub fn apply_pauli_rotation(&mut self, p: &PauliString, angle: f64) -> Result<()> {
        self.check_string(p)?;
        rotate(&mut self.amps, p, angle);
        Ok(())
    }

    /// `psi <- P psi`.
    pub fn apply_pauli(&mut self, p: &PauliString) -> Result<()> {
        self.check_string(p)?;
        let mut out = vec![ZERO; self.amps.len()];
        accumulate_string(&self.amps, p, ONE, &mut out);
        self.amps = out;
        Ok(())
    }

    /// `psi <- exp(-i angle H) psi` for a Hamiltonian of pairwise commuting terms.
    pub fn apply_layer(&mut self, h: &LocalHamiltonian, angle: f64) -> Result<()> {
        self.check_hamiltonian(h)?;
        ensure!(h.is_commuting(), Precondition, "layer terms do not pairwise commute");
        apply_terms(&mut self.amps, h, angle);
        Ok(())
    }

    /// `<psi|H|psi>`.
    pub fn expectation(&self, h: &LocalHamiltonian) -> Result<f64> {
        self.check_hamiltonian(h)?;
        Ok(expectation(&self.amps, h))
    }

    /// `<psi|P|psi>`.
    pub fn expectation_string(&self, p: &PauliString) -> Result<f64> {
        self.check_string(p)?;
        Ok(string_expectation(&self.amps, p))
    }

    /// Applies the same 2x2 unitary `[[u00, u01], [u10, u11]]` to `site`.
    pub fn apply_single_site(&mut self, site: usize, u: [[Complex64; 2]; 2]) -> Result<()> {
        ensure!(site < self.n_sites, Input, "site {site} out of range");
        let bit = 1usize << site;
        for b in 0..self.amps.len() {
            if b & bit == 0 {
                let a0 = self.amps[b];
                let a1 = self.amps[b | bit];
                self.amps[b] = u[0][0] * a0 + u[0][1] * a1;
                self.amps[b | bit] = u[1][0] * a0 + u[1][1] * a1;
            }
        }
        Ok(())
    }

    /// The state expressed in `basis`: each site rotated so that the chosen
    /// axis becomes Z.
    pub fn in_basis(&self, basis: MeasurementBasis) -> StateVector {
        let mut s = self.clone();
        if let Some(u) = basis.site_unitary() {
            for site in 0..self.n_sites {
                s.apply_single_site(site, u).expect("site in range");
            }
        }
        s
    }
}

/// Uniform single-axis measurement of every site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MeasurementBasis {
    axis: Pauli,
}

impl MeasurementBasis {
    pub const X: Self = Self { axis: Pauli::X };
    pub const Y: Self = Self { axis: Pauli::Y };
    pub const Z: Self = Self { axis: Pauli::Z };

    pub fn new(axis: Pauli) -> Result<Self> {
        ensure!(axis != Pauli::I, Input, "identity is not a measurement axis");
        Ok(Self { axis })
    }

    pub fn axis(&self) -> Pauli {
        self.axis
    }

    /// X: Hadamard. Y: `H S^dagger`, i.e. S-dagger first. Z: none.
    pub fn site_unitary(&self) -> Option<[[Complex64; 2]; 2]> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let r = |x: f64| Complex64::new(x, 0.0);
        let i = |x: f64| Complex64::new(0.0, x);
        match self.axis {
            Pauli::X => Some([[r(h), r(h)], [r(h), r(-h)]]),
            Pauli::Y => Some([[r(h), i(-h)], [r(h), i(h)]]),
            _ => None,
        }
    }
}

/// Draws `n_shot` outcomes in `basis`, one uniform variate per shot from
/// `stream`, by inverse-CDF lookup. Outcome bit `s` is site `s`.
pub fn sample_bitstrings(state: &StateVector, basis: MeasurementBasis, n_shot: usize, stream: &RngStream) -> Result<Vec<u64>> {
    ensure!(n_shot >= 1, Input, "n_shot must be positive");
    let rotated = state.in_basis(basis);
    let mut cdf = Vec::with_capacity(rotated.dim());
    let mut acc = 0.0;
    for a in rotated.amplitudes() {
        acc += a.norm_sqr();
        cdf.push(acc);
    }
    let total = acc;
    let mut rng = stream.rng();
    Ok((0..n_shot)
        .map(|_| {
            let u: f64 = rng.random::<f64>() * total;
            let idx = cdf.partition_point(|&c| c <= u);
            idx.min(cdf.len() - 1) as u64
        })
        .collect())
}

/// Outcome histogram of `n_shot` draws in `basis`, sampled as a chain of
/// conditional binomials. Distributed identically to counting the output of
/// [`sample_bitstrings`], at a cost independent of `n_shot`.
pub fn sample_counts(state: &StateVector, basis: MeasurementBasis, n_shot: u64, stream: &RngStream) -> Result<Vec<u64>> {
    ensure!(n_shot >= 1, Input, "n_shot must be positive");
    let probs = state.in_basis(basis).probabilities();
    let mut rng = stream.rng();
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = n_shot;
    let mut mass = 1.0f64;
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == probs.len() || mass <= p {
            counts[i] = remaining;
            break;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let k = Binomial::new(remaining, q).map_err(|e| HvaError::Input(e.to_string()))?.sample(&mut rng);
        counts[i] = k;
        remaining -= k;
        mass -= p;
    }
    Ok(counts)
}

/// Sample mean of `(1 - 2 x_a)(1 - 2 x_b)`.
pub fn estimate_pauli_pair(samples: &[u64], a: usize, b: usize) -> Result<f64> {
    estimate_parity(samples, (1u64 << a) | (1u64 << b))
}

/// Sample mean of `(-1)^{popcount(x & mask)}`.
pub fn estimate_parity(samples: &[u64], mask: u64) -> Result<f64> {
    ensure!(!samples.is_empty(), Input, "no samples");
    let s: i64 = samples.iter().map(|&x| if (x & mask).count_ones() % 2 == 0 { 1 } else { -1 }).sum();
    Ok(s as f64 / samples.len() as f64)
}

/// Parity estimate from an outcome histogram.
pub fn estimate_parity_counts(counts: &[u64], mask: u64) -> Result<f64> {
    let total: u64 = counts.iter().sum();
    ensure!(total > 0, Input, "no samples");
    let s: i64 = counts
        .iter()
        .enumerate()
        .map(|(x, &c)| if (x as u64 & mask).count_ones() % 2 == 0 { c as i64 } else { -(c as i64) })
        .sum();
    Ok(s as f64 / total as f64)
}

// Slice kernels shared with the gradient code, which also needs them on
// unnormalized vectors.

pub(crate) fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

pub(crate) fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[inline]
fn parity_sign(b: usize, z: u64) -> f64 {
    if (b as u64 & z).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Inserts a zero at bit position `h` of `i`.
#[inline]
fn insert_zero(i: usize, h: u32) -> usize {
    let low = i & ((1usize << h) - 1);
    ((i >> h) << (h + 1)) | low
}

/// `amps <- exp(-i angle P) amps = cos(angle) amps - i sin(angle) P amps`.
pub(crate) fn rotate(amps: &mut [Complex64], p: &PauliString, angle: f64) {
    if angle == 0.0 {
        return;
    }
    let (s, c) = angle.sin_cos();
    let x = p.x_mask() as usize;
    let z = p.z_mask();
    if x == 0 {
        // Diagonal: exp(-i angle (+-1)).
        let plus = Complex64::new(c, -s);
        let minus = Complex64::new(c, s);
        for (b, a) in amps.iter_mut().enumerate() {
            *a *= if parity_sign(b, z) > 0.0 { plus } else { minus };
        }
        return;
    }
    // P|b> = ph(b) |b^x>, so (P psi)[b] = ph(b^x) psi[b^x].
    let base = i_pow(p.y_count()) * Complex64::new(0.0, -s);
    let h = 63 - (x as u64).leading_zeros();
    for i in 0..amps.len() / 2 {
        let b0 = insert_zero(i, h);
        let b1 = b0 ^ x;
        let a0 = amps[b0];
        let a1 = amps[b1];
        amps[b0] = a0 * c + base * parity_sign(b1, z) * a1;
        amps[b1] = a1 * c + base * parity_sign(b0, z) * a0;
    }
}

/// `out += w P amps`.
pub(crate) fn accumulate_string(amps: &[Complex64], p: &PauliString, w: Complex64, out: &mut [Complex64]) {
    let x = p.x_mask() as usize;
    let z = p.z_mask();
    let ph = i_pow(p.y_count()) * w;
    for (b, a) in amps.iter().enumerate() {
        out[b ^ x] += ph * parity_sign(b, z) * a;
    }
}

/// `H amps`.
pub(crate) fn apply_hamiltonian(amps: &[Complex64], h: &LocalHamiltonian) -> Vec<Complex64> {
    let mut out = vec![ZERO; amps.len()];
    for t in h.terms() {
        accumulate_string(amps, &t.string, Complex64::new(t.coeff, 0.0), &mut out);
    }
    out
}

/// `<a|P|b>`.
pub(crate) fn string_matrix_element(a: &[Complex64], p: &PauliString, b: &[Complex64]) -> Complex64 {
    let x = p.x_mask() as usize;
    let z = p.z_mask();
    let mut acc = ZERO;
    for (i, bi) in b.iter().enumerate() {
        acc += a[i ^ x].conj() * bi * parity_sign(i, z);
    }
    acc * i_pow(p.y_count())
}

pub(crate) fn string_expectation(amps: &[Complex64], p: &PauliString) -> f64 {
    string_matrix_element(amps, p, amps).re
}

pub(crate) fn expectation(amps: &[Complex64], h: &LocalHamiltonian) -> f64 {
    h.terms().iter().map(|t| t.coeff * string_expectation(amps, &t.string)).sum()
}

/// `<a|H|b>`.
pub(crate) fn matrix_element(a: &[Complex64], h: &LocalHamiltonian, b: &[Complex64]) -> Complex64 {
    h.terms()
        .iter()
        .map(|t| string_matrix_element(a, &t.string, b) * t.coeff)
        .sum()
}

/// Product of per-term rotations; exact when the terms commute.
pub(crate) fn apply_terms(amps: &mut [Complex64], h: &LocalHamiltonian, angle: f64) {
    if angle == 0.0 {
        return;
    }
    for t in h.terms() {
        rotate(amps, &t.string, t.coeff * angle);
    }
}
