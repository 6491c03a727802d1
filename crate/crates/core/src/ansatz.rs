//! Layered variational circuits, initial states and parameter initialization.
//!
//! A circuit is `p` blocks of `q` layers, each layer `exp(-i theta_{i,j} H^{(j)})`,
//! and the whole `p`-block word repeated `r` times with the same parameters.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use crate::lattice::{Lattice, LatticeKind};

use crate::error::{ensure, HvaError, Result};
use crate::pauli::{validate_layer, LocalHamiltonian, Pauli, PauliString, Term};
use crate::rng::RngStream;
use crate::statevec::{apply_terms, StateVector};
use crate::Complex64;

/// Circuit structure: layer Hamiltonians, block count and repetition count.
#[derive(Clone, Debug, PartialEq)]
pub struct HvaSpec {
    n_sites: usize,
    lattice: Option<Lattice>,
    layers: Vec<LocalHamiltonian>,
    blocks_p: usize,
    repetitions_r: usize,
    locality_k: usize,
}

impl HvaSpec {
    /// Validates every layer against `lattice` at locality `k`: terms must
    /// commute, be `k`-local and have pairwise distinct supports.
    pub fn new(lattice: Lattice, layers: Vec<LocalHamiltonian>, blocks_p: usize, locality_k: usize) -> Result<Self> {
        for (j, h) in layers.iter().enumerate() {
            let r = validate_layer(h, &lattice, locality_k)?;
            ensure!(r.all_ok(), Precondition, "layer {j} fails validation: {r:?}");
        }
        Self::build(lattice.n_sites(), Some(lattice), layers, blocks_p, locality_k)
    }

    /// A circuit with no lattice attached. Layers only need pairwise
    /// commuting terms; locality is not checked.
    pub fn without_lattice(n_sites: usize, layers: Vec<LocalHamiltonian>, blocks_p: usize) -> Result<Self> {
        for (j, h) in layers.iter().enumerate() {
            ensure!(h.n_sites() == n_sites, Input, "layer {j} has {} sites, expected {n_sites}", h.n_sites());
            ensure!(h.is_commuting(), Precondition, "layer {j} terms do not pairwise commute");
        }
        let k = layers
            .iter()
            .flat_map(|h| h.terms().iter().map(|t| t.string.weight()))
            .max()
            .unwrap_or(1);
        Self::build(n_sites, None, layers, blocks_p, k)
    }

    fn build(n_sites: usize, lattice: Option<Lattice>, layers: Vec<LocalHamiltonian>, blocks_p: usize, locality_k: usize) -> Result<Self> {
        ensure!(!layers.is_empty(), Input, "a circuit needs at least one layer Hamiltonian");
        ensure!(blocks_p >= 1, Input, "p must be positive");
        let layers = layers
            .into_iter()
            .map(|h| if h.locality_k().is_some() { h } else { h.with_locality(locality_k) })
            .collect();
        Ok(Self { n_sites, lattice, layers, blocks_p, repetitions_r: 1, locality_k })
    }

    pub fn with_repetitions(mut self, r: usize) -> Result<Self> {
        ensure!(r >= 1, Input, "r must be positive");
        self.repetitions_r = r;
        Ok(self)
    }

    pub fn with_blocks(mut self, p: usize) -> Result<Self> {
        ensure!(p >= 1, Input, "p must be positive");
        self.blocks_p = p;
        Ok(self)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn lattice(&self) -> Option<&Lattice> {
        self.lattice.as_ref()
    }

    pub fn layers(&self) -> &[LocalHamiltonian] {
        &self.layers
    }

    pub fn blocks_p(&self) -> usize {
        self.blocks_p
    }

    pub fn q(&self) -> usize {
        self.layers.len()
    }

    pub fn repetitions_r(&self) -> usize {
        self.repetitions_r
    }

    pub fn locality_k(&self) -> usize {
        self.locality_k
    }

    pub fn n_params(&self) -> usize {
        self.blocks_p * self.q()
    }

    pub fn total_layers(&self) -> usize {
        self.blocks_p * self.q() * self.repetitions_r
    }

    pub fn check_params(&self, params: &ParamSet) -> Result<()> {
        ensure!(
            params.p() == self.blocks_p && params.q() == self.q(),
            Input,
            "parameters are {}x{}, circuit needs {}x{}",
            params.p(),
            params.q(),
            self.blocks_p,
            self.q()
        );
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&HvaSpecRecord::from(self)).expect("spec always serializes")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let rec: HvaSpecRecord = serde_json::from_str(json).map_err(|e| HvaError::Input(e.to_string()))?;
        let layers = rec
            .layers
            .into_iter()
            .map(|t| LocalHamiltonian::new(rec.n_sites, t))
            .collect::<Result<Vec<_>>>()?;
        let spec = match rec.lattice {
            Some(kind) => Self::new(Lattice::new(kind)?, layers, rec.blocks_p, rec.locality_k)?,
            None => Self::without_lattice(rec.n_sites, layers, rec.blocks_p)?,
        };
        spec.with_repetitions(rec.repetitions_r)
    }
}

#[derive(Serialize, Deserialize)]
struct HvaSpecRecord {
    n_sites: usize,
    lattice: Option<LatticeKind>,
    blocks_p: usize,
    q: usize,
    repetitions_r: usize,
    locality_k: usize,
    layers: Vec<Vec<Term>>,
}

impl From<&HvaSpec> for HvaSpecRecord {
    fn from(s: &HvaSpec) -> Self {
        Self {
            n_sites: s.n_sites,
            lattice: s.lattice.as_ref().map(Lattice::kind),
            blocks_p: s.blocks_p,
            q: s.q(),
            repetitions_r: s.repetitions_r,
            locality_k: s.locality_k,
            layers: s.layers.iter().map(|h| h.terms().to_vec()).collect(),
        }
    }
}

/// The `p x q` parameter matrix, stored row-major (`theta[i * q + j]`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    p: usize,
    q: usize,
    theta: Vec<f64>,
}

impl ParamSet {
    pub fn new(p: usize, q: usize, theta: Vec<f64>) -> Result<Self> {
        ensure!(p >= 1 && q >= 1, Input, "parameter matrix must be at least 1x1");
        ensure!(theta.len() == p * q, Input, "expected {} parameters, got {}", p * q, theta.len());
        ensure!(theta.iter().all(|t| t.is_finite()), Input, "non-finite parameter");
        Ok(Self { p, q, theta })
    }

    pub fn zeros(p: usize, q: usize) -> Result<Self> {
        Self::new(p, q, vec![0.0; p * q])
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let q = rows.first().map_or(0, Vec::len);
        ensure!(rows.iter().all(|r| r.len() == q), Input, "ragged parameter rows");
        Self::new(rows.len(), q, rows.concat())
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.theta[i * self.q + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.theta[i * self.q + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.theta
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.theta[i * self.q..(i + 1) * self.q]
    }

    pub fn block_sum(&self, i: usize) -> f64 {
        self.row(i).iter().sum()
    }

    pub fn total(&self) -> f64 {
        self.theta.iter().sum()
    }
}

/// How initial parameters are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitScheme {
    /// i.i.d. uniform on `[0, 2 pi)`.
    Random,
    /// Uniform draws rescaled so every block sums to `t`.
    Constrained { t: f64 },
    /// i.i.d. uniform on `[0, eps)`.
    Small { eps: f64 },
    /// Every entry equal to `v`.
    Constant { v: f64 },
}

impl InitScheme {
    /// `Constrained` with the default block sum `pi / (2N)`.
    pub fn constrained_default(n_sites: usize) -> Self {
        InitScheme::Constrained { t: default_block_sum(n_sites) }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InitScheme::Random => "random",
            InitScheme::Constrained { .. } => "constrained",
            InitScheme::Small { .. } => "small",
            InitScheme::Constant { .. } => "constant",
        }
    }

    /// `T` for constrained, `eps` for small, `v` for constant, none for random.
    pub fn scale(&self) -> Option<f64> {
        match *self {
            InitScheme::Random => None,
            InitScheme::Constrained { t } => Some(t),
            InitScheme::Small { eps } => Some(eps),
            InitScheme::Constant { v } => Some(v),
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, InitScheme::Constant { .. })
    }
}

pub fn default_block_sum(n_sites: usize) -> f64 {
    PI / (2.0 * n_sites as f64)
}

pub fn sample_params(scheme: &InitScheme, p: usize, q: usize, stream: &RngStream) -> Result<ParamSet> {
    ensure!(p >= 1 && q >= 1, Input, "p and q must be positive");
    let mut rng = stream.rng();
    let n = p * q;
    let theta = match *scheme {
        InitScheme::Random => (0..n).map(|_| rng.random_range(0.0..2.0 * PI)).collect(),
        InitScheme::Small { eps } => {
            ensure!(eps > 0.0 && eps.is_finite(), Input, "eps must be positive, got {eps}");
            (0..n).map(|_| rng.random_range(0.0..eps)).collect()
        }
        InitScheme::Constant { v } => {
            ensure!(v.is_finite(), Input, "constant must be finite");
            vec![v; n]
        }
        InitScheme::Constrained { t } => {
            ensure!(t > 0.0 && t.is_finite(), Input, "block sum T must be positive, got {t}");
            let mut theta = Vec::with_capacity(n);
            for _ in 0..p {
                let raw = loop {
                    let raw: Vec<f64> = (0..q).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
                    if raw.iter().sum::<f64>() > 0.0 {
                        break raw;
                    }
                };
                let s: f64 = raw.iter().sum();
                theta.extend(raw.iter().map(|x| x * t / s));
            }
            theta
        }
    };
    ParamSet::new(p, q, theta)
}

/// Heaviside-masked cost for the constrained ansatz. `free` holds the first
/// `q - 1` columns of each block; the last column is `T - sum(free)`.
/// Returns `raw_cost` when every free entry and every derived entry is
/// non-negative, otherwise 0.
pub fn constrained_cost(raw_cost: f64, free: &ParamSet, t: f64) -> f64 {
    if is_feasible(free, t) {
        raw_cost
    } else {
        0.0
    }
}

pub fn is_feasible(free: &ParamSet, t: f64) -> bool {
    free.as_slice().iter().all(|&x| x >= 0.0) && (0..free.p()).all(|i| t - free.block_sum(i) >= 0.0)
}

/// Appends the derived column `T - sum(free)` to each block.
pub fn complete_constrained(free: &ParamSet, t: f64) -> ParamSet {
    let rows: Vec<Vec<f64>> = (0..free.p())
        .map(|i| {
            let mut r = free.row(i).to_vec();
            r.push(t - free.block_sum(i));
            r
        })
        .collect();
    ParamSet::from_rows(&rows).expect("shape is consistent")
}

/// Drops the last column of each block.
pub fn free_columns(params: &ParamSet) -> Result<ParamSet> {
    ensure!(params.q() >= 2, Input, "the constrained ansatz needs q >= 2");
    let rows: Vec<Vec<f64>> = (0..params.p()).map(|i| params.row(i)[..params.q() - 1].to_vec()).collect();
    ParamSet::from_rows(&rows)
}

/// `|psi(theta)> = prod_r prod_{i=1..p} exp(-i theta_{i,q} H^{(q)}) ... exp(-i theta_{i,1} H^{(1)}) |psi0>`.
pub fn apply_circuit(spec: &HvaSpec, params: &ParamSet, state: &StateVector) -> Result<StateVector> {
    spec.check_params(params)?;
    ensure!(
        state.n_sites() == spec.n_sites(),
        Input,
        "state has {} sites, circuit has {}",
        state.n_sites(),
        spec.n_sites()
    );
    let mut out = state.clone();
    let amps = out.amplitudes_mut();
    for _ in 0..spec.repetitions_r() {
        for i in 0..spec.blocks_p() {
            for (j, h) in spec.layers().iter().enumerate() {
                apply_terms(amps, h, params.get(i, j));
            }
        }
    }
    Ok(out)
}

/// Equal superposition of the two Neel patterns. Pattern A puts spin up
/// (bit 0) on the even sublattice.
pub fn neel_state(lattice: &Lattice) -> Result<StateVector> {
    ensure!(
        lattice.is_bipartite(),
        Input,
        "the Neel state needs even lattice dimensions, got {:?}",
        lattice.kind()
    );
    let mut a = 0u64;
    for s in 0..lattice.n_sites() {
        if lattice.sublattice(s) == 1 {
            a |= 1 << s;
        }
    }
    cat_state(lattice.n_sites(), a)
}

/// The one-dimensional Neel cat state for any even `n`, including `n = 2`.
pub fn neel_chain_state(n_sites: usize) -> Result<StateVector> {
    ensure!(n_sites >= 2 && n_sites % 2 == 0, Input, "the Neel chain needs an even site count, got {n_sites}");
    let a = (0..n_sites).filter(|s| s % 2 == 1).fold(0u64, |m, s| m | (1 << s));
    cat_state(n_sites, a)
}

fn cat_state(n_sites: usize, pattern: u64) -> Result<StateVector> {
    let full = (1u64 << n_sites) - 1;
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_sites];
    amps[pattern as usize] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    amps[(pattern ^ full) as usize] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    StateVector::from_amplitudes(n_sites, amps)
}

fn edge_sum(lattice: &Lattice, p: Pauli, coeff: f64) -> Result<LocalHamiltonian> {
    let groups: Vec<Vec<usize>> = lattice.edges().iter().map(|&(a, b)| vec![a, b]).collect();
    Ok(LocalHamiltonian::uniform_sum(lattice.n_sites(), &groups, p, coeff)?.with_locality(2))
}

fn site_sum(n_sites: usize, p: Pauli, coeff: f64) -> Result<LocalHamiltonian> {
    let groups: Vec<Vec<usize>> = (0..n_sites).map(|s| vec![s]).collect();
    Ok(LocalHamiltonian::uniform_sum(n_sites, &groups, p, coeff)?.with_locality(1))
}

/// Layers `sum XX`, `sum YY`, `sum ZZ` over nearest-neighbour edges.
pub fn xyz_hva(lattice: &Lattice, p: usize) -> Result<HvaSpec> {
    let layers = vec![
        edge_sum(lattice, Pauli::X, 1.0)?,
        edge_sum(lattice, Pauli::Y, 1.0)?,
        edge_sum(lattice, Pauli::Z, 1.0)?,
    ];
    HvaSpec::new(lattice.clone(), layers, p, 2)
}

/// `sum_<a,b> Jx X_a X_b + Jy Y_a Y_b + Jz Z_a Z_b`.
pub fn heisenberg_xyz(lattice: &Lattice, jx: f64, jy: f64, jz: f64) -> Result<LocalHamiltonian> {
    let mut terms = Vec::new();
    for (p, j) in [(Pauli::X, jx), (Pauli::Y, jy), (Pauli::Z, jz)] {
        if j != 0.0 {
            terms.extend_from_slice(edge_sum(lattice, p, j)?.terms());
        }
    }
    Ok(LocalHamiltonian::new(lattice.n_sites(), terms)?.with_locality(2))
}

/// Ising chain with transverse and longitudinal fields: layers `sum ZZ`,
/// `sum X`, `sum Z`. Start from `|+>^N`.
pub fn ising_field_hva(lattice: &Lattice, p: usize) -> Result<HvaSpec> {
    let n = lattice.n_sites();
    let layers = vec![edge_sum(lattice, Pauli::Z, 1.0)?, site_sum(n, Pauli::X, 1.0)?, site_sum(n, Pauli::Z, 1.0)?];
    HvaSpec::new(lattice.clone(), layers, p, 2)
}

/// Single-layer circuit `exp(-i theta sum_i P_i)`.
pub fn single_site_layer(n_sites: usize, p: Pauli) -> Result<HvaSpec> {
    HvaSpec::without_lattice(n_sites, vec![site_sum(n_sites, p, 1.0)?], 1)
}

/// Single-site Pauli observable.
pub fn site_observable(n_sites: usize, site: usize, p: Pauli) -> Result<LocalHamiltonian> {
    LocalHamiltonian::new(n_sites, vec![Term { coeff: 1.0, string: PauliString::single(n_sites, site, p)? }])
}

/// Two-site Pauli observable `P_a P_b`.
pub fn pair_observable(n_sites: usize, a: usize, b: usize, p: Pauli) -> Result<LocalHamiltonian> {
    LocalHamiltonian::new(n_sites, vec![Term { coeff: 1.0, string: PauliString::on_sites(n_sites, &[a, b], p)? }])
}
