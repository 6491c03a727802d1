//! Gradients: reverse-sweep exact derivatives, parameter-shift estimates on
//! the per-gate expanded circuit, and gradient-magnitude scans.

use std::f64::consts::FRAC_PI_4;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{apply_circuit, sample_params, HvaSpec, InitScheme, ParamSet};
use crate::error::{ensure, HvaError, Result};
use crate::pauli::{LocalHamiltonian, Pauli, PauliString};
use crate::rng::RngStream;
use crate::statevec::{
    apply_hamiltonian, estimate_parity, estimate_parity_counts, expectation, matrix_element, rotate, sample_bitstrings,
    sample_counts, MeasurementBasis, StateVector,
};

/// Derivatives aligned with a [`ParamSet`], row-major `p x q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientVector {
    p: usize,
    q: usize,
    entries: Vec<f64>,
}

impl GradientVector {
    pub fn new(p: usize, q: usize, entries: Vec<f64>) -> Result<Self> {
        ensure!(entries.len() == p * q, Input, "expected {} entries, got {}", p * q, entries.len());
        Ok(Self { p, q, entries })
    }

    pub fn zeros(p: usize, q: usize) -> Self {
        Self { p, q, entries: vec![0.0; p * q] }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.q + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    /// Mean of the squared entries.
    pub fn mean_sq(&self) -> f64 {
        self.entries.iter().map(|g| g * g).sum::<f64>() / self.entries.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, g| m.max(g.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|g| g.is_finite())
    }
}

/// `d<O>/d theta_{i,j}` by one forward pass and one reverse sweep. Parameters
/// shared across repetitions receive the sum of their per-occurrence
/// derivatives.
pub fn exact_gradient(spec: &HvaSpec, params: &ParamSet, observable: &LocalHamiltonian, psi0: &StateVector) -> Result<GradientVector> {
    ensure!(
        observable.n_sites() == spec.n_sites(),
        Input,
        "observable has {} sites, circuit has {}",
        observable.n_sites(),
        spec.n_sites()
    );
    let psi = apply_circuit(spec, params, psi0)?;
    let mut psi = psi.into_amplitudes();
    let mut lam = apply_hamiltonian(&psi, observable);
    let (p, q) = (spec.blocks_p(), spec.q());
    let mut g = vec![0.0; p * q];
    for _ in 0..spec.repetitions_r() {
        for i in (0..p).rev() {
            for j in (0..q).rev() {
                let h = &spec.layers()[j];
                g[i * q + j] += 2.0 * matrix_element(&lam, h, &psi).im;
                let theta = params.get(i, j);
                if theta != 0.0 {
                    for t in h.terms() {
                        rotate(&mut psi, &t.string, -t.coeff * theta);
                        rotate(&mut lam, &t.string, -t.coeff * theta);
                    }
                }
            }
        }
    }
    GradientVector::new(p, q, g)
}

/// One gate `exp(-i alpha coeff P)` of the expanded circuit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gate {
    pub string: PauliString,
    pub coeff: f64,
    /// Position `(i, j)` of the shared parameter this gate came from.
    pub param: (usize, usize),
}

/// The circuit with one independent parameter per (repetition, block,
/// layer, term) gate.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpandedCircuit {
    n_sites: usize,
    p: usize,
    q: usize,
    gates: Vec<Gate>,
    alphas: Vec<f64>,
}

impl ExpandedCircuit {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn set_alphas(&mut self, alphas: Vec<f64>) -> Result<()> {
        ensure!(alphas.len() == self.gates.len(), Input, "expected {} gate parameters, got {}", self.gates.len(), alphas.len());
        self.alphas = alphas;
        Ok(())
    }

    /// Gate index to shared-parameter position.
    pub fn index_map(&self) -> Vec<(usize, usize)> {
        self.gates.iter().map(|g| g.param).collect()
    }

    fn apply_range(&self, amps: &mut [crate::Complex64], alphas: &[f64], range: std::ops::Range<usize>) {
        for k in range {
            let g = &self.gates[k];
            rotate(amps, &g.string, g.coeff * alphas[k]);
        }
    }

    /// Runs the circuit with the given gate parameters.
    pub fn run(&self, psi0: &StateVector, alphas: &[f64]) -> Result<StateVector> {
        ensure!(psi0.n_sites() == self.n_sites, Input, "state has {} sites, circuit has {}", psi0.n_sites(), self.n_sites);
        ensure!(alphas.len() == self.gates.len(), Input, "expected {} gate parameters, got {}", self.gates.len(), alphas.len());
        let mut s = psi0.clone();
        self.apply_range(s.amplitudes_mut(), alphas, 0..self.gates.len());
        Ok(s)
    }

    /// Collapses gate parameters back to the shared matrix, reading the
    /// first gate mapped to each position. Positions whose layer has no
    /// terms stay 0.
    pub fn collapse_params(&self) -> ParamSet {
        let mut theta = ParamSet::zeros(self.p, self.q).expect("shape is positive");
        let mut seen = vec![false; self.p * self.q];
        for (g, a) in self.gates.iter().zip(&self.alphas) {
            let (i, j) = g.param;
            if !seen[i * self.q + j] {
                seen[i * self.q + j] = true;
                theta.set(i, j, *a);
            }
        }
        theta
    }

    /// Sums per-gate derivatives into the shared-parameter gradient.
    pub fn collapse_gradient(&self, per_gate: &[f64]) -> Result<GradientVector> {
        ensure!(per_gate.len() == self.gates.len(), Input, "expected {} derivatives, got {}", self.gates.len(), per_gate.len());
        let mut g = vec![0.0; self.p * self.q];
        for (gate, d) in self.gates.iter().zip(per_gate) {
            g[gate.param.0 * self.q + gate.param.1] += d;
        }
        GradientVector::new(self.p, self.q, g)
    }
}

pub fn expand_parameters(spec: &HvaSpec, params: &ParamSet) -> Result<ExpandedCircuit> {
    spec.check_params(params)?;
    let mut gates = Vec::new();
    let mut alphas = Vec::new();
    for _ in 0..spec.repetitions_r() {
        for i in 0..spec.blocks_p() {
            for (j, h) in spec.layers().iter().enumerate() {
                for t in h.terms() {
                    gates.push(Gate { string: t.string, coeff: t.coeff, param: (i, j) });
                    alphas.push(params.get(i, j));
                }
            }
        }
    }
    Ok(ExpandedCircuit { n_sites: spec.n_sites(), p: spec.blocks_p(), q: spec.q(), gates, alphas })
}

/// Estimates a cost from a prepared state.
pub trait CostEvaluator: Sync {
    fn initial_state(&self) -> &StateVector;

    /// Cost of `state`; shot-based evaluators draw from `stream`.
    fn measure(&self, state: &StateVector, stream: &RngStream) -> Result<f64>;

    /// State preparations consumed by one call of [`CostEvaluator::measure`].
    fn state_preps_per_eval(&self) -> u64;

    fn evaluate(&self, circuit: &ExpandedCircuit, alphas: &[f64], stream: &RngStream) -> Result<f64> {
        let s = circuit.run(self.initial_state(), alphas)?;
        self.measure(&s, stream)
    }
}

/// Exact `<psi|H|psi>`.
pub struct ExactEvaluator {
    psi0: StateVector,
    h: LocalHamiltonian,
}

impl ExactEvaluator {
    pub fn new(psi0: StateVector, h: LocalHamiltonian) -> Result<Self> {
        ensure!(psi0.n_sites() == h.n_sites(), Input, "state and cost have different site counts");
        Ok(Self { psi0, h })
    }
}

impl CostEvaluator for ExactEvaluator {
    fn initial_state(&self) -> &StateVector {
        &self.psi0
    }

    fn measure(&self, state: &StateVector, _stream: &RngStream) -> Result<f64> {
        Ok(expectation(state.amplitudes(), &self.h))
    }

    fn state_preps_per_eval(&self) -> u64 {
        0
    }
}

/// Cost terms grouped by measurement axis. Every term must use a single
/// Pauli letter on its support, so one sample set per axis serves all terms
/// of that axis.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisGroups {
    groups: Vec<(MeasurementBasis, Vec<(f64, u64)>)>,
    constant: f64,
}

impl BasisGroups {
    pub fn new(h: &LocalHamiltonian) -> Result<Self> {
        let mut by_axis: Vec<(Pauli, Vec<(f64, u64)>)> = vec![(Pauli::X, vec![]), (Pauli::Y, vec![]), (Pauli::Z, vec![])];
        let mut constant = 0.0;
        for t in h.terms() {
            if t.string.is_identity() {
                constant += t.coeff;
                continue;
            }
            let axis = t.string.uniform_axis().ok_or_else(|| {
                HvaError::Unsupported(format!("term {} mixes measurement axes; cost is not basis-groupable", t.string))
            })?;
            let slot = by_axis.iter_mut().find(|(a, _)| *a == axis).expect("axis is X, Y or Z");
            slot.1.push((t.coeff, t.string.support_mask()));
        }
        let groups = by_axis
            .into_iter()
            .filter(|(_, terms)| !terms.is_empty())
            .map(|(a, terms)| (MeasurementBasis::new(a).expect("non-identity axis"), terms))
            .collect();
        Ok(Self { groups, constant })
    }

    pub fn n_bases(&self) -> usize {
        self.groups.len()
    }
}

/// Finite-shot estimate: `n_shot` samples in each needed basis.
pub struct ShotEvaluator {
    psi0: StateVector,
    groups: BasisGroups,
    n_shot: u64,
}

impl ShotEvaluator {
    pub fn new(psi0: StateVector, h: &LocalHamiltonian, n_shot: u64) -> Result<Self> {
        ensure!(n_shot >= 1, Input, "n_shot must be positive");
        ensure!(psi0.n_sites() == h.n_sites(), Input, "state and cost have different site counts");
        Ok(Self { psi0, groups: BasisGroups::new(h)?, n_shot })
    }
}

impl CostEvaluator for ShotEvaluator {
    fn initial_state(&self) -> &StateVector {
        &self.psi0
    }

    fn measure(&self, state: &StateVector, stream: &RngStream) -> Result<f64> {
        let mut total = self.groups.constant;
        for (b, (basis, terms)) in self.groups.groups.iter().enumerate() {
            let sub = stream.substream(b as u64);
            if self.n_shot as usize >= state.dim() {
                let counts = sample_counts(state, *basis, self.n_shot, &sub)?;
                for &(c, mask) in terms {
                    total += c * estimate_parity_counts(&counts, mask)?;
                }
            } else {
                let samples = sample_bitstrings(state, *basis, self.n_shot as usize, &sub)?;
                for &(c, mask) in terms {
                    total += c * estimate_parity(&samples, mask)?;
                }
            }
        }
        Ok(total)
    }

    fn state_preps_per_eval(&self) -> u64 {
        self.groups.n_bases() as u64 * self.n_shot
    }
}

/// Two-term shift rule for gate `exp(-i alpha c P)`:
/// `df/dalpha = c [f(alpha + pi/(4c)) - f(alpha - pi/(4c))]`.
pub fn shift_rule_gradient(circuit: &ExpandedCircuit, gate: usize, evaluator: &dyn CostEvaluator, stream: &RngStream) -> Result<f64> {
    ensure!(gate < circuit.len(), Input, "gate {gate} out of range for {} gates", circuit.len());
    let g = &circuit.gates()[gate];
    ensure!(!g.string.is_identity(), Precondition, "gate {gate} has an identity generator");
    if g.coeff == 0.0 {
        return Ok(0.0);
    }
    let shift = FRAC_PI_4 / g.coeff;
    let mut a = circuit.alphas().to_vec();
    a[gate] += shift;
    let plus = evaluator.evaluate(circuit, &a, &stream.substream(0))?;
    a[gate] -= 2.0 * shift;
    let minus = evaluator.evaluate(circuit, &a, &stream.substream(1))?;
    Ok(g.coeff * (plus - minus))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    Exact,
    Shots(u64),
}

/// Shift-rule gradient together with its state-preparation cost.
#[derive(Clone, Debug, PartialEq)]
pub struct ShotGradient {
    pub gradient: GradientVector,
    pub state_preps: u64,
}

/// Parameter-shift gradient of `<H>` over every expanded gate, summed back
/// onto the shared parameters. In `Shots(n)` mode each shifted cost uses `n`
/// samples in each of the cost's measurement bases; in `Exact` mode the
/// shifted costs are exact expectations.
pub fn shot_gradient(
    spec: &HvaSpec,
    params: &ParamSet,
    cost: &LocalHamiltonian,
    psi0: &StateVector,
    mode: GradientMode,
    stream: &RngStream,
) -> Result<ShotGradient> {
    let circuit = expand_parameters(spec, params)?;
    let evaluator: Box<dyn CostEvaluator> = match mode {
        GradientMode::Exact => Box::new(ExactEvaluator::new(psi0.clone(), cost.clone())?),
        GradientMode::Shots(n) => Box::new(ShotEvaluator::new(psi0.clone(), cost, n)?),
    };
    let alphas = circuit.alphas().to_vec();
    let mut prefix = psi0.clone();
    let mut per_gate = vec![0.0; circuit.len()];
    let mut preps = 0u64;
    for (k, g) in circuit.gates().iter().enumerate() {
        if g.coeff != 0.0 {
            let shift = FRAC_PI_4 / g.coeff;
            let mut f = [0.0; 2];
            for (s, sign) in [1.0, -1.0].into_iter().enumerate() {
                let mut st = prefix.clone();
                rotate(st.amplitudes_mut(), &g.string, g.coeff * (alphas[k] + sign * shift));
                circuit.apply_range(st.amplitudes_mut(), &alphas, k + 1..circuit.len());
                f[s] = evaluator.measure(&st, &stream.substream(2 * k as u64 + s as u64))?;
                preps += evaluator.state_preps_per_eval();
            }
            per_gate[k] = g.coeff * (f[0] - f[1]);
        }
        rotate(prefix.amplitudes_mut(), &g.string, g.coeff * alphas[k]);
    }
    Ok(ShotGradient { gradient: circuit.collapse_gradient(&per_gate)?, state_preps: preps })
}

/// Statistics of squared gradient components over random parameter draws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradScanResult {
    pub n_sites: usize,
    pub depth_p: usize,
    pub repetitions_r: usize,
    pub scheme: InitScheme,
    /// Mean of `(d_{i,j} C)^2` over samples and components.
    pub mean_sq_grad: f64,
    /// `sigma(X) / E[X]` with `X` the per-sample component mean; population
    /// standard deviation.
    pub rel_std: f64,
    pub n_samples: usize,
    /// Per-sample component means `X`, in sample order.
    pub per_sample: Vec<f64>,
}

impl GradScanResult {
    /// Standard error of `mean_sq_grad`.
    pub fn std_err(&self) -> f64 {
        let n = self.per_sample.len() as f64;
        let m = self.mean_sq_grad;
        let var = self.per_sample.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        (var / n).sqrt()
    }
}

/// Draws `n_samples` parameter sets (sample `s` from `stream.substream(s)`),
/// computes exact gradients in parallel and aggregates in sample order.
pub fn grad_variance_scan(
    spec: &HvaSpec,
    scheme: &InitScheme,
    observable: &LocalHamiltonian,
    psi0: &StateVector,
    n_samples: usize,
    stream: &RngStream,
) -> Result<GradScanResult> {
    ensure!(n_samples >= 2, Input, "n_samples must be at least 2");
    let per_sample = (0..n_samples)
        .into_par_iter()
        .map(|s| {
            let theta = sample_params(scheme, spec.blocks_p(), spec.q(), &stream.substream(s as u64))?;
            Ok(exact_gradient(spec, &theta, observable, psi0)?.mean_sq())
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = n_samples as f64;
    let mean = per_sample.iter().sum::<f64>() / n;
    let var = per_sample.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let constant = per_sample.iter().all(|&x| x == per_sample[0]);
    let rel_std = if mean > 0.0 && !constant { var.sqrt() / mean } else { 0.0 };
    Ok(GradScanResult {
        n_sites: spec.n_sites(),
        depth_p: spec.blocks_p(),
        repetitions_r: spec.repetitions_r(),
        scheme: *scheme,
        mean_sq_grad: mean,
        rel_std,
        n_samples,
        per_sample,
    })
}

/// Smallest `eps` on an ascending grid from which every value lies within a
/// factor 2 of the value at the largest `eps`.
pub fn saturation_eps(eps: &[f64], values: &[f64]) -> Result<f64> {
    ensure!(!eps.is_empty() && eps.len() == values.len(), Input, "eps and values must be equal-length and non-empty");
    ensure!(eps.windows(2).all(|w| w[0] < w[1]), Input, "eps grid must be strictly ascending");
    let last = values[values.len() - 1];
    let close = |v: f64| v <= 2.0 * last && v >= 0.5 * last;
    let i = values.iter().rposition(|&v| !close(v)).map_or(0, |i| i + 1);
    Ok(eps[i])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{ising_field_hva, neel_state, pair_observable, single_site_layer, site_observable, xyz_hva, heisenberg_xyz, Lattice};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn cost(spec: &HvaSpec, theta: &ParamSet, o: &LocalHamiltonian, psi0: &StateVector) -> f64 {
        apply_circuit(spec, theta, psi0).unwrap().expectation(o).unwrap()
    }

    fn finite_difference(spec: &HvaSpec, theta: &ParamSet, o: &LocalHamiltonian, psi0: &StateVector, h: f64) -> Vec<f64> {
        (0..theta.as_slice().len())
            .map(|k| {
                let mut a = theta.clone();
                a.as_mut_slice()[k] += h;
                let mut b = theta.clone();
                b.as_mut_slice()[k] -= h;
                (cost(spec, &a, o, psi0) - cost(spec, &b, o, psi0)) / (2.0 * h)
            })
            .collect()
    }

    fn rel_inf(a: &[f64], b: &[f64]) -> f64 {
        let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
    }

    #[test]
    fn initial_gradient_is_minus_two() {
        for n in [2, 4, 8] {
            let spec = single_site_layer(n, Pauli::Y).unwrap();
            let o = site_observable(n, 1, Pauli::Z).unwrap();
            let g = exact_gradient(&spec, &ParamSet::zeros(1, 1).unwrap(), &o, &StateVector::plus_state(n).unwrap()).unwrap();
            assert!((g.get(0, 0) + 2.0).abs() < 1e-10, "{}", g.get(0, 0));
        }
    }

    #[test]
    fn ising_field_gradient_vanishes_at_quarter_pi() {
        for n in [4, 8] {
            let lat = Lattice::ring(n).unwrap();
            let p = 3;
            let spec = ising_field_hva(&lat, p).unwrap();
            let mut theta = ParamSet::zeros(p, 3).unwrap();
            for (i, v) in [0.1, 0.5, PI / 4.0 - 0.6].into_iter().enumerate() {
                theta.set(i, 2, v);
            }
            let o = site_observable(n, 1, Pauli::Y).unwrap();
            let g = exact_gradient(&spec, &theta, &o, &StateVector::plus_state(n).unwrap()).unwrap();
            assert!(g.get(p - 1, 2).abs() < 1e-10);
        }
    }

    #[test]
    fn adjoint_matches_finite_differences() {
        let lat = Lattice::ring(6).unwrap();
        let spec = xyz_hva(&lat, 3).unwrap();
        let psi0 = neel_state(&lat).unwrap();
        let o = pair_observable(6, 0, 1, Pauli::Y).unwrap();
        let theta = sample_params(&InitScheme::Random, 3, 3, &RngStream::new(1)).unwrap();
        let g = exact_gradient(&spec, &theta, &o, &psi0).unwrap();
        let fd = finite_difference(&spec, &theta, &o, &psi0, 1e-5);
        assert!(rel_inf(g.as_slice(), &fd) < 1e-6);
    }

    #[test]
    fn repeated_ansatz_gradient_sums_occurrences() {
        let lat = Lattice::ring(4).unwrap();
        let spec = xyz_hva(&lat, 2).unwrap().with_repetitions(3).unwrap();
        let psi0 = neel_state(&lat).unwrap();
        let o = pair_observable(4, 0, 1, Pauli::Y).unwrap();
        let theta = sample_params(&InitScheme::Random, 2, 3, &RngStream::new(2)).unwrap();
        let g = exact_gradient(&spec, &theta, &o, &psi0).unwrap();
        let fd = finite_difference(&spec, &theta, &o, &psi0, 1e-5);
        assert!(rel_inf(g.as_slice(), &fd) < 1e-6);
    }

    #[test]
    fn expansion_counts_and_round_trip() {
        let lat = Lattice::ring(4).unwrap();
        let spec = xyz_hva(&lat, 1).unwrap();
        let theta = sample_params(&InitScheme::Random, 1, 3, &RngStream::new(3)).unwrap();
        let e = expand_parameters(&spec, &theta).unwrap();
        assert_eq!(e.len(), 12);
        assert_eq!(e.collapse_params(), theta);

        let spec = xyz_hva(&lat, 3).unwrap();
        let theta = sample_params(&InitScheme::Random, 3, 3, &RngStream::new(4)).unwrap();
        let e = expand_parameters(&spec, &theta).unwrap();
        let psi0 = neel_state(&lat).unwrap();
        let a = e.run(&psi0, e.alphas()).unwrap();
        let b = apply_circuit(&spec, &theta, &psi0).unwrap();
        let d: f64 = a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(d < 1e-12);
    }

    #[test]
    fn single_qubit_shift_rule() {
        let spec = single_site_layer(1, Pauli::X).unwrap();
        let o = site_observable(1, 0, Pauli::Z).unwrap();
        let ev = ExactEvaluator::new(StateVector::zero_state(1).unwrap(), o).unwrap();
        let st = RngStream::new(0);
        let at = |t: f64| {
            let e = expand_parameters(&spec, &ParamSet::new(1, 1, vec![t]).unwrap()).unwrap();
            shift_rule_gradient(&e, 0, &ev, &st).unwrap()
        };
        assert!(at(0.0).abs() < 1e-12);
        assert!((at(PI / 8.0) + 2.0f64.sqrt()).abs() < 1e-10);
        assert!((at(PI / 8.0) + 1.41421).abs() < 1e-5);
    }

    #[test]
    fn shift_rule_matches_adjoint() {
        let lat = Lattice::ring(4).unwrap();
        let spec = xyz_hva(&lat, 2).unwrap();
        let psi0 = neel_state(&lat).unwrap();
        let h = heisenberg_xyz(&lat, 1.0, 1.0, 1.0).unwrap();
        let theta = sample_params(&InitScheme::Random, 2, 3, &RngStream::new(5)).unwrap();
        let adj = exact_gradient(&spec, &theta, &h, &psi0).unwrap();
        let e = expand_parameters(&spec, &theta).unwrap();
        let ev = ExactEvaluator::new(psi0.clone(), h.clone()).unwrap();
        let per_gate: Vec<f64> = (0..e.len()).map(|k| shift_rule_gradient(&e, k, &ev, &RngStream::new(0)).unwrap()).collect();
        let summed = e.collapse_gradient(&per_gate).unwrap();
        for (a, b) in summed.as_slice().iter().zip(adj.as_slice()) {
            assert!((a - b).abs() < 1e-8);
        }
        let fast = shot_gradient(&spec, &theta, &h, &psi0, GradientMode::Exact, &RngStream::new(0)).unwrap();
        for (a, b) in fast.gradient.as_slice().iter().zip(adj.as_slice()) {
            assert!((a - b).abs() < 1e-8);
        }
        assert_eq!(fast.state_preps, 0);
    }

    #[test]
    fn shared_parameter_consistency() {
        // Per-gate exact derivatives from the adjoint of the expanded circuit,
        // summed through the index map.
        let lat = Lattice::ring(6).unwrap();
        let spec = xyz_hva(&lat, 2).unwrap().with_repetitions(2).unwrap();
        let psi0 = neel_state(&lat).unwrap();
        let o = pair_observable(6, 0, 1, Pauli::Y).unwrap();
        let theta = sample_params(&InitScheme::Small { eps: 0.5 }, 2, 3, &RngStream::new(6)).unwrap();
        let e = expand_parameters(&spec, &theta).unwrap();
        let single: Vec<LocalHamiltonian> = e
            .gates()
            .iter()
            .map(|g| LocalHamiltonian::new(6, vec![crate::pauli::Term { coeff: g.coeff, string: g.string }]).unwrap())
            .collect();
        let flat = HvaSpec::without_lattice(6, single, 1).unwrap();
        let per_gate = exact_gradient(&flat, &ParamSet::new(1, e.len(), e.alphas().to_vec()).unwrap(), &o, &psi0).unwrap();
        let summed = e.collapse_gradient(per_gate.as_slice()).unwrap();
        let adj = exact_gradient(&spec, &theta, &o, &psi0).unwrap();
        for (a, b) in summed.as_slice().iter().zip(adj.as_slice()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn non_groupable_cost_rejected() {
        let h = LocalHamiltonian::new(2, vec![crate::pauli::Term { coeff: 1.0, string: "XZ".parse().unwrap() }]).unwrap();
        assert!(matches!(
            ShotEvaluator::new(StateVector::zero_state(2).unwrap(), &h, 10),
            Err(HvaError::Unsupported(_))
        ));
    }

    #[test]
    fn state_prep_budget() {
        let lat = Lattice::ring(4).unwrap();
        let spec = xyz_hva(&lat, 2).unwrap();
        let h = heisenberg_xyz(&lat, 1.0, 1.0, 1.0).unwrap();
        let theta = sample_params(&InitScheme::Random, 2, 3, &RngStream::new(7)).unwrap();
        let g = shot_gradient(&spec, &theta, &h, &neel_state(&lat).unwrap(), GradientMode::Shots(128), &RngStream::new(1)).unwrap();
        assert_eq!(g.state_preps, 18 * 4 * 2 * 128);
        assert_eq!(g.state_preps, 18432);
    }

    #[test]
    fn shot_gradient_unbiased() {
        let lat = Lattice::ring(4).unwrap();
        let spec = xyz_hva(&lat, 2).unwrap();
        let h = heisenberg_xyz(&lat, 1.0, 1.0, 1.0).unwrap();
        let psi0 = neel_state(&lat).unwrap();
        let theta = sample_params(&InitScheme::Random, 2, 3, &RngStream::new(8)).unwrap();
        let exact = exact_gradient(&spec, &theta, &h, &psi0).unwrap();
        let reps = 100;
        let root = RngStream::new(99);
        let est: Vec<GradientVector> = (0..reps)
            .map(|r| shot_gradient(&spec, &theta, &h, &psi0, GradientMode::Shots(512), &root.substream(r)).unwrap().gradient)
            .collect();
        for k in 0..6 {
            let xs: Vec<f64> = est.iter().map(|g| g.as_slice()[k]).collect();
            let m = xs.iter().sum::<f64>() / reps as f64;
            let sd = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (reps as f64 - 1.0)).sqrt();
            let se = sd / (reps as f64).sqrt();
            assert!((m - exact.as_slice()[k]).abs() <= 4.0 * se, "entry {k}: {m} vs {} (se {se})", exact.as_slice()[k]);
        }
    }

    #[test]
    fn constant_scheme_has_zero_spread() {
        let lat = Lattice::ring(4).unwrap();
        let spec = xyz_hva(&lat, 2).unwrap();
        let r = grad_variance_scan(
            &spec,
            &InitScheme::Constant { v: PI },
            &pair_observable(4, 0, 1, Pauli::Y).unwrap(),
            &neel_state(&lat).unwrap(),
            8,
            &RngStream::new(1),
        )
        .unwrap();
        assert_eq!(r.rel_std, 0.0);
        assert!(r.mean_sq_grad >= 0.0);
    }

    #[test]
    fn scan_is_deterministic() {
        let lat = Lattice::ring(6).unwrap();
        let spec = xyz_hva(&lat, 2).unwrap();
        let o = pair_observable(6, 0, 1, Pauli::Y).unwrap();
        let psi0 = neel_state(&lat).unwrap();
        let a = grad_variance_scan(&spec, &InitScheme::Random, &o, &psi0, 16, &RngStream::new(3)).unwrap();
        let b = grad_variance_scan(&spec, &InitScheme::Random, &o, &psi0, 16, &RngStream::new(3)).unwrap();
        assert_eq!(a, b);
        assert!(a.rel_std > 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]

        #[test]
        fn adjoint_agrees_with_central_differences(
            n in prop_oneof![Just(4usize), Just(6), Just(8)],
            p in 1usize..=4,
            seed in 0u64..100_000,
        ) {
            let lat = Lattice::ring(n).unwrap();
            let spec = xyz_hva(&lat, p).unwrap();
            let psi0 = neel_state(&lat).unwrap();
            let o = pair_observable(n, 0, 1, Pauli::Y).unwrap();
            let theta = sample_params(&InitScheme::Random, p, 3, &RngStream::new(seed)).unwrap();
            let g = exact_gradient(&spec, &theta, &o, &psi0).unwrap();
            let fd = finite_difference(&spec, &theta, &o, &psi0, 1e-5);
            prop_assert!(g.is_finite());
            prop_assert!(rel_inf(g.as_slice(), &fd) <= 1e-5);
        }
    }
}
