//! Adam-driven VQE loops.

use serde::{Deserialize, Serialize};

use crate::ansatz::{apply_circuit, complete_constrained, free_columns, is_feasible, sample_params, HvaSpec, InitScheme, ParamSet};
use crate::error::{ensure, Result};
use crate::grad::{exact_gradient, shot_gradient, GradientMode, GradientVector};
use crate::pauli::LocalHamiltonian;
use crate::rng::RngStream;
use crate::statevec::StateVector;

/// Bias-corrected Adam moments and hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step_count: u64,
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_hat: f64,
}

impl AdamState {
    pub fn new(n_params: usize, alpha: f64) -> Self {
        Self {
            first_moment: vec![0.0; n_params],
            second_moment: vec![0.0; n_params],
            step_count: 0,
            alpha,
            beta1: 0.9,
            beta2: 0.999,
            eps_hat: 1e-8,
        }
    }

    /// One descent step on `params` in place.
    pub fn step(&mut self, grad: &[f64], params: &mut [f64]) -> Result<()> {
        ensure!(
            grad.len() == params.len() && grad.len() == self.first_moment.len(),
            Input,
            "Adam shape mismatch: {} moments, {} gradient entries, {} parameters",
            self.first_moment.len(),
            grad.len(),
            params.len()
        );
        self.step_count += 1;
        let t = self.step_count as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for k in 0..grad.len() {
            let g = grad[k];
            self.first_moment[k] = self.beta1 * self.first_moment[k] + (1.0 - self.beta1) * g;
            self.second_moment[k] = self.beta2 * self.second_moment[k] + (1.0 - self.beta2) * g * g;
            let m_hat = self.first_moment[k] / c1;
            let v_hat = self.second_moment[k] / c2;
            params[k] -= self.alpha * m_hat / (v_hat.sqrt() + self.eps_hat);
        }
        Ok(())
    }
}

pub fn adam_step(state: &AdamState, grad: &GradientVector, params: &ParamSet) -> Result<(AdamState, ParamSet)> {
    ensure!(
        grad.p() == params.p() && grad.q() == params.q(),
        Input,
        "gradient is {}x{}, parameters are {}x{}",
        grad.p(),
        grad.q(),
        params.p(),
        params.q()
    );
    let mut s = state.clone();
    let mut p = params.clone();
    s.step(grad.as_slice(), p.as_mut_slice())?;
    Ok((s, p))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub iteration: usize,
    /// Exact `<H>` at this iteration's parameters.
    pub energy: f64,
    pub params_snapshot: Option<ParamSet>,
    /// Cumulative state preparations spent on gradients so far.
    pub state_prep_count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VqeOptions {
    pub iterations: usize,
    pub learning_rate: f64,
    pub mode: GradientMode,
    /// Keep a parameter snapshot on every record instead of only the last.
    pub snapshot_every_iteration: bool,
}

impl Default for VqeOptions {
    fn default() -> Self {
        Self { iterations: 1000, learning_rate: 0.025, mode: GradientMode::Exact, snapshot_every_iteration: false }
    }
}

fn energy(spec: &HvaSpec, theta: &ParamSet, h: &LocalHamiltonian, psi0: &StateVector) -> Result<f64> {
    apply_circuit(spec, theta, psi0)?.expectation(h)
}

fn finish(records: &mut [TrainingRecord], theta: ParamSet) {
    if let Some(last) = records.last_mut() {
        last.params_snapshot = Some(theta);
    }
}

/// Trains from parameters drawn with `scheme` (from `stream.substream(0)`).
/// Records iterations `0..=iterations`; record 0 holds the initial energy.
pub fn run_vqe(
    spec: &HvaSpec,
    psi0: &StateVector,
    scheme: &InitScheme,
    cost: &LocalHamiltonian,
    opts: &VqeOptions,
    stream: &RngStream,
) -> Result<Vec<TrainingRecord>> {
    let theta = sample_params(scheme, spec.blocks_p(), spec.q(), &stream.substream(0))?;
    run_vqe_from(spec, psi0, theta, cost, opts, stream)
}

pub fn run_vqe_from(
    spec: &HvaSpec,
    psi0: &StateVector,
    mut theta: ParamSet,
    cost: &LocalHamiltonian,
    opts: &VqeOptions,
    stream: &RngStream,
) -> Result<Vec<TrainingRecord>> {
    ensure!(opts.iterations >= 1, Input, "iterations must be positive");
    spec.check_params(&theta)?;
    let grad_stream = stream.substream(1);
    let mut adam = AdamState::new(spec.n_params(), opts.learning_rate);
    let mut preps = 0u64;
    let snap = |t: &ParamSet| opts.snapshot_every_iteration.then(|| t.clone());
    let mut records = vec![TrainingRecord {
        iteration: 0,
        energy: energy(spec, &theta, cost, psi0)?,
        params_snapshot: snap(&theta),
        state_prep_count: 0,
    }];
    for it in 1..=opts.iterations {
        let g = match opts.mode {
            GradientMode::Exact => exact_gradient(spec, &theta, cost, psi0)?,
            mode => {
                let sg = shot_gradient(spec, &theta, cost, psi0, mode, &grad_stream.substream(it as u64))?;
                preps += sg.state_preps;
                sg.gradient
            }
        };
        adam.step(g.as_slice(), theta.as_mut_slice())?;
        records.push(TrainingRecord {
            iteration: it,
            energy: energy(spec, &theta, cost, psi0)?,
            params_snapshot: snap(&theta),
            state_prep_count: preps,
        });
    }
    finish(&mut records, theta);
    Ok(records)
}

/// Euclidean projection of `v` onto `{x >= 0, sum x = t}`.
pub fn project_simplex(v: &[f64], t: f64) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut lambda = 0.0;
    for (j, &x) in u.iter().enumerate() {
        cum += x;
        let l = (cum - t) / (j + 1) as f64;
        if x - l > 0.0 {
            lambda = l;
        }
    }
    v.iter().map(|x| (x - lambda).max(0.0)).collect()
}

/// Chain-rule gradient on the free columns: `dC/dtheta_{j,i} - dC/dtheta_{j,q}`.
pub fn constrained_gradient(full: &GradientVector) -> Vec<f64> {
    let q = full.q();
    (0..full.p())
        .flat_map(|i| (0..q - 1).map(move |j| (i, j)))
        .map(|(i, j)| full.get(i, j) - full.get(i, q - 1))
        .collect()
}

/// VQE over the first `q - 1` columns of each block, with the last column
/// fixed to `T - sum(free)`. The initial point is a `Constrained(T)` draw.
pub fn run_vqe_constrained_ansatz(
    spec: &HvaSpec,
    psi0: &StateVector,
    t: f64,
    cost: &LocalHamiltonian,
    opts: &VqeOptions,
    stream: &RngStream,
) -> Result<Vec<TrainingRecord>> {
    let full = sample_params(&InitScheme::Constrained { t }, spec.blocks_p(), spec.q(), &stream.substream(0))?;
    run_vqe_constrained_ansatz_from(spec, psi0, &free_columns(&full)?, t, cost, opts)
}

/// As [`run_vqe_constrained_ansatz`] from a given free-parameter matrix.
/// Gradients are exact. After each Adam step every block is projected back
/// onto the simplex, so every iterate stays feasible.
pub fn run_vqe_constrained_ansatz_from(
    spec: &HvaSpec,
    psi0: &StateVector,
    free: &ParamSet,
    t: f64,
    cost: &LocalHamiltonian,
    opts: &VqeOptions,
) -> Result<Vec<TrainingRecord>> {
    ensure!(spec.q() >= 2, Input, "the constrained ansatz needs q >= 2");
    ensure!(opts.iterations >= 1, Input, "iterations must be positive");
    ensure!(t > 0.0, Input, "block sum T must be positive");
    ensure!(
        free.p() == spec.blocks_p() && free.q() == spec.q() - 1,
        Input,
        "free parameters must be {}x{}",
        spec.blocks_p(),
        spec.q() - 1
    );
    ensure!(is_feasible(free, t), Input, "initial point is outside the feasible simplex");
    let q = spec.q();
    let mut free = free.clone();
    let mut adam = AdamState::new(free.as_slice().len(), opts.learning_rate);
    let snap = |f: &ParamSet| opts.snapshot_every_iteration.then(|| complete_constrained(f, t));
    let mut full = complete_constrained(&free, t);
    let mut records = vec![TrainingRecord {
        iteration: 0,
        energy: energy(spec, &full, cost, psi0)?,
        params_snapshot: snap(&free),
        state_prep_count: 0,
    }];
    for it in 1..=opts.iterations {
        let g = exact_gradient(spec, &full, cost, psi0)?;
        let gf = constrained_gradient(&g);
        adam.step(&gf, free.as_mut_slice())?;
        for i in 0..free.p() {
            let mut block = free.row(i).to_vec();
            block.push(t - block.iter().sum::<f64>());
            let proj = project_simplex(&block, t);
            for j in 0..q - 1 {
                free.set(i, j, proj[j]);
            }
        }
        full = complete_constrained(&free, t);
        // Rounding can leave the derived column at -1e-17; clamp it into the simplex.
        for i in 0..full.p() {
            if full.get(i, q - 1) < 0.0 {
                full.set(i, q - 1, 0.0);
            }
        }
        records.push(TrainingRecord {
            iteration: it,
            energy: energy(spec, &full, cost, psi0)?,
            params_snapshot: opts.snapshot_every_iteration.then(|| full.clone()),
            state_prep_count: 0,
        });
    }
    finish(&mut records, full);
    Ok(records)
}
