//! Pauli strings, Pauli-sum Hamiltonians and layer validation.
//!
//! A [`PauliString`] is stored as two site-indexed bitmasks: bit `s` of
//! `x_mask` is set when site `s` carries X or Y, bit `s` of `z_mask` when it
//! carries Z or Y. The operator is always the literal tensor product of
//! {I, X, Y, Z}, so it is Hermitian and squares to the identity. Site 0 is
//! the least significant bit of a computational-basis index.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{ensure, HvaError, Result};
use crate::lattice::Lattice;
use crate::{Complex64, DENSE_MAX_SITES, MAX_SITES};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// An `n_sites`-qubit tensor product of single-site Pauli operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    n_sites: usize,
    x_mask: u64,
    z_mask: u64,
}

impl PauliString {
    pub fn identity(n_sites: usize) -> Result<Self> {
        ensure!(n_sites >= 1, Input, "a Pauli string needs at least one site");
        ensure!(n_sites <= MAX_SITES, Resource, "{n_sites} sites exceeds the {MAX_SITES}-site limit");
        Ok(Self { n_sites, x_mask: 0, z_mask: 0 })
    }

    pub fn from_masks(n_sites: usize, x_mask: u64, z_mask: u64) -> Result<Self> {
        let id = Self::identity(n_sites)?;
        let full = id.full_mask();
        ensure!(
            x_mask & !full == 0 && z_mask & !full == 0,
            Input,
            "mask bits set beyond site {}",
            n_sites - 1
        );
        Ok(Self { n_sites, x_mask, z_mask })
    }

    pub fn from_paulis(paulis: &[Pauli]) -> Result<Self> {
        let mut s = Self::identity(paulis.len())?;
        for (site, &p) in paulis.iter().enumerate() {
            s.set(site, p);
        }
        Ok(s)
    }

    /// A string acting with `p` on each listed site and identity elsewhere.
    pub fn on_sites(n_sites: usize, sites: &[usize], p: Pauli) -> Result<Self> {
        let mut s = Self::identity(n_sites)?;
        for &site in sites {
            ensure!(site < n_sites, Input, "site {site} out of range for {n_sites} sites");
            s.set(site, p);
        }
        Ok(s)
    }

    pub fn single(n_sites: usize, site: usize, p: Pauli) -> Result<Self> {
        Self::on_sites(n_sites, &[site], p)
    }

    fn set(&mut self, site: usize, p: Pauli) {
        let bit = 1u64 << site;
        let (x, z) = p.bits();
        self.x_mask = if x { self.x_mask | bit } else { self.x_mask & !bit };
        self.z_mask = if z { self.z_mask | bit } else { self.z_mask & !bit };
    }

    fn full_mask(&self) -> u64 {
        if self.n_sites == 64 {
            u64::MAX
        } else {
            (1u64 << self.n_sites) - 1
        }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn x_mask(&self) -> u64 {
        self.x_mask
    }

    pub fn z_mask(&self) -> u64 {
        self.z_mask
    }

    pub fn get(&self, site: usize) -> Pauli {
        let bit = 1u64 << site;
        match (self.x_mask & bit != 0, self.z_mask & bit != 0) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn letters(&self) -> Vec<Pauli> {
        (0..self.n_sites).map(|s| self.get(s)).collect()
    }

    pub fn support_mask(&self) -> u64 {
        self.x_mask | self.z_mask
    }

    pub fn support(&self) -> Vec<usize> {
        let m = self.support_mask();
        (0..self.n_sites).filter(|&s| m & (1u64 << s) != 0).collect()
    }

    pub fn weight(&self) -> usize {
        self.support_mask().count_ones() as usize
    }

    pub fn is_identity(&self) -> bool {
        self.support_mask() == 0
    }

    pub fn y_count(&self) -> u32 {
        (self.x_mask & self.z_mask).count_ones()
    }

    /// True when every non-identity site carries the same letter.
    pub fn uniform_axis(&self) -> Option<Pauli> {
        let letters: HashSet<Pauli> = self.letters().into_iter().filter(|&p| p != Pauli::I).collect();
        if letters.len() == 1 {
            letters.into_iter().next()
        } else {
            None
        }
    }

    /// Cyclic translation by `shift` sites: the letter at site `s` moves to `s + shift`.
    pub fn translate(&self, shift: usize) -> Self {
        let n = self.n_sites;
        let mut out = Self { n_sites: n, x_mask: 0, z_mask: 0 };
        for s in 0..n {
            out.set((s + shift) % n, self.get(s));
        }
        out
    }

    /// Symplectic commutation test.
    pub fn commutes(&self, other: &PauliString) -> Result<bool> {
        ensure!(
            self.n_sites == other.n_sites,
            Input,
            "site count mismatch: {} vs {}",
            self.n_sites,
            other.n_sites
        );
        let overlap = (self.x_mask & other.z_mask).count_ones() + (self.z_mask & other.x_mask).count_ones();
        Ok(overlap % 2 == 0)
    }

    /// Phase `c` such that `P|b> = c |b xor x_mask>`.
    #[inline]
    pub fn phase_on(&self, basis: u64) -> Complex64 {
        let sign = if (basis & self.z_mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        i_pow(self.y_count()) * sign
    }

    /// Dense `2^n x 2^n` matrix; refuses more than [`DENSE_MAX_SITES`] sites.
    pub fn dense_matrix(&self) -> Result<DMatrix<Complex64>> {
        ensure!(
            self.n_sites <= DENSE_MAX_SITES,
            Resource,
            "dense matrices are capped at {DENSE_MAX_SITES} sites, got {}",
            self.n_sites
        );
        let dim = 1usize << self.n_sites;
        let mut m = DMatrix::zeros(dim, dim);
        for col in 0..dim as u64 {
            let row = col ^ self.x_mask;
            m[(row as usize, col as usize)] = self.phase_on(col);
        }
        Ok(m)
    }
}

pub(crate) fn i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Lexicographic order on the letter sequence, site 0 first, with I < X < Y < Z.
impl Ord for PauliString {
    fn cmp(&self, other: &Self) -> Ordering {
        self.n_sites
            .cmp(&other.n_sites)
            .then_with(|| self.letters().cmp(&other.letters()))
    }
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in 0..self.n_sites {
            write!(f, "{}", self.get(s).letter())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = HvaError;

    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .trim()
            .chars()
            .map(|c| Pauli::from_letter(c.to_ascii_uppercase()).ok_or_else(|| HvaError::Input(format!("bad Pauli letter {c:?} in {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_paulis(&letters)
    }
}

impl Serialize for PauliString {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: f64,
    pub string: PauliString,
}

/// A real-weighted sum of distinct Pauli strings.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalHamiltonian {
    n_sites: usize,
    terms: Vec<Term>,
    locality_k: Option<usize>,
}

impl LocalHamiltonian {
    /// Builds a Hamiltonian, rejecting repeated strings and site-count mismatches.
    pub fn new(n_sites: usize, terms: Vec<Term>) -> Result<Self> {
        PauliString::identity(n_sites)?;
        let mut seen = HashSet::with_capacity(terms.len());
        for t in &terms {
            ensure!(
                t.string.n_sites() == n_sites,
                Input,
                "term {} has {} sites, expected {n_sites}",
                t.string,
                t.string.n_sites()
            );
            ensure!(t.coeff.is_finite(), Input, "non-finite coefficient on {}", t.string);
            ensure!(seen.insert(t.string), Input, "duplicate term {}", t.string);
        }
        Ok(Self { n_sites, terms, locality_k: None })
    }

    /// Builds a Hamiltonian, summing the coefficients of repeated strings and
    /// dropping terms whose summed coefficient is exactly zero.
    pub fn from_terms_merged(n_sites: usize, terms: impl IntoIterator<Item = Term>) -> Result<Self> {
        let mut merged: Vec<Term> = Vec::new();
        let mut index = std::collections::HashMap::new();
        for t in terms {
            match index.get(&t.string) {
                Some(&i) => {
                    let m: &mut Term = &mut merged[i];
                    m.coeff += t.coeff;
                }
                None => {
                    index.insert(t.string, merged.len());
                    merged.push(t);
                }
            }
        }
        merged.retain(|t| t.coeff != 0.0);
        Self::new(n_sites, merged)
    }

    /// Uniform-coefficient sum of `p` on every listed group of sites.
    pub fn uniform_sum(n_sites: usize, groups: &[Vec<usize>], p: Pauli, coeff: f64) -> Result<Self> {
        let terms = groups
            .iter()
            .map(|g| Ok(Term { coeff, string: PauliString::on_sites(n_sites, g, p)? }))
            .collect::<Result<Vec<_>>>()?;
        Self::new(n_sites, terms)
    }

    pub fn with_locality(mut self, k: usize) -> Self {
        self.locality_k = Some(k);
        self
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn locality_k(&self) -> Option<usize> {
        self.locality_k
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when all terms pairwise commute.
    pub fn is_commuting(&self) -> bool {
        self.terms.iter().enumerate().all(|(i, a)| {
            self.terms[i + 1..]
                .iter()
                .all(|b| a.string.commutes(&b.string).unwrap_or(false))
        })
    }

    /// Sum of absolute coefficients; an upper bound on the operator norm.
    pub fn coefficient_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.abs()).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n_sites: self.n_sites,
            terms: self.terms.iter().map(|t| Term { coeff: t.coeff * factor, string: t.string }).collect(),
            locality_k: self.locality_k,
        }
    }

    pub fn dense_matrix(&self) -> Result<DMatrix<Complex64>> {
        ensure!(
            self.n_sites <= DENSE_MAX_SITES,
            Resource,
            "dense matrices are capped at {DENSE_MAX_SITES} sites, got {}",
            self.n_sites
        );
        let dim = 1usize << self.n_sites;
        let mut m = DMatrix::zeros(dim, dim);
        for t in &self.terms {
            for col in 0..dim as u64 {
                let row = col ^ t.string.x_mask();
                m[(row as usize, col as usize)] += t.string.phase_on(col) * t.coeff;
            }
        }
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.terms).expect("terms always serialize")
    }

    /// Parses a JSON list of `{coeff, string}` objects. The site count is taken
    /// from the strings, so the list must be non-empty.
    pub fn from_json(json: &str) -> Result<Self> {
        let terms: Vec<Term> = serde_json::from_str(json).map_err(|e| HvaError::Input(e.to_string()))?;
        let n = terms
            .first()
            .map(|t| t.string.n_sites())
            .ok_or_else(|| HvaError::Input("empty Hamiltonian list; site count unknown".into()))?;
        Self::new(n, terms)
    }
}

impl Serialize for LocalHamiltonian {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.terms.serialize(serializer)
    }
}

/// Outcome of checking a layer Hamiltonian against conditions (C1)-(C3).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerValidationReport {
    /// (C1) all terms pairwise commute.
    pub is_c1_commuting: bool,
    /// (C2) every term's support has pairwise lattice distance at most k.
    pub is_c2_klocal: bool,
    /// (C3) no two terms share a support set.
    pub is_c3_unique_support: bool,
    /// Number of nonzero terms.
    pub h_max_count: usize,
    /// Largest number of nonzero terms touching any single site.
    pub j_strength: usize,
}

impl LayerValidationReport {
    pub fn all_ok(&self) -> bool {
        self.is_c1_commuting && self.is_c2_klocal && self.is_c3_unique_support
    }
}

pub fn validate_layer(h: &LocalHamiltonian, lattice: &Lattice, k: usize) -> Result<LayerValidationReport> {
    ensure!(
        h.n_sites() == lattice.n_sites(),
        Input,
        "Hamiltonian has {} sites but lattice has {}",
        h.n_sites(),
        lattice.n_sites()
    );
    let nonzero: Vec<&Term> = h.terms().iter().filter(|t| t.coeff != 0.0).collect();
    let is_c2_klocal = nonzero.iter().all(|t| {
        let sup = t.string.support();
        sup.iter()
            .enumerate()
            .all(|(i, &a)| sup[i + 1..].iter().all(|&b| lattice.distance(a, b) <= k))
    });
    let mut supports = HashSet::new();
    let is_c3_unique_support = nonzero.iter().all(|t| supports.insert(t.string.support_mask()));
    let mut touching = vec![0usize; h.n_sites()];
    for t in &nonzero {
        for s in t.string.support() {
            touching[s] += 1;
        }
    }
    Ok(LayerValidationReport {
        is_c1_commuting: h.is_commuting(),
        is_c2_klocal,
        is_c3_unique_support,
        h_max_count: nonzero.len(),
        j_strength: touching.into_iter().max().unwrap_or(0),
    })
}
