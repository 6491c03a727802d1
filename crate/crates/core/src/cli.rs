//! Config-driven experiment runners behind the `hva-lab` binary.
//!
//! Every runner reads a JSON config whose fields are all optional, fills the
//! gaps with desk-scale defaults (or larger ones under `--paper-scale`), and
//! writes a CSV whose first line is `# hva-lab <version> config=<json>` with
//! the fully resolved config. A fixed config and seed give identical bytes.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ansatz::{heisenberg_xyz, neel_state, pair_observable, sample_params, site_observable, xyz_hva, HvaSpec, InitScheme};
use crate::bounds::{
    fm_approx_verify, fm_error_bound, fm_order_n0, k_norm_bound, measured_norms, norm_bounds, omega_bound, speed_limit_tc,
    theorem_constants, FmParameters,
};
use crate::error::HvaError;
use crate::grad::{grad_variance_scan, saturation_eps, GradientMode};
use crate::lattice::Lattice;
use crate::pauli::Pauli;
use crate::rng::RngStream;
use crate::spectral::{eigendecompose, fh_ensemble, FhRow, TimeGrid};
use crate::vqe::{run_vqe, run_vqe_constrained_ansatz, TrainingRecord, VqeOptions};
use crate::DENSE_MAX_SITES;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    /// 2 for config errors, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Resource(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<HvaError> for CliError {
    fn from(e: HvaError) -> Self {
        match e {
            HvaError::Resource(_) => CliError::Resource(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    GradScan,
    EpsScan,
    Vqe,
    FhScan,
    Bounds,
}

#[derive(Clone, Debug)]
pub struct RunArgs {
    pub command: Command,
    pub config: PathBuf,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub paper_scale: bool,
}

/// Runs one subcommand end to end and returns the number of CSV rows written.
pub fn run(args: &RunArgs) -> CliResult<usize> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.config.display())))?;
    run_json(args.command, &text, &args.out, args.seed, args.paper_scale)
}

/// As [`run`] with the config given as a JSON string.
pub fn run_json(command: Command, json: &str, out: &Path, seed: Option<u64>, paper_scale: bool) -> CliResult<usize> {
    match command {
        Command::GradScan => {
            let cfg = parse::<GradScanConfig>(json)?.resolve(seed, paper_scale);
            write_csv(out, &cfg, &grad_scan(&cfg)?)
        }
        Command::EpsScan => {
            let cfg = parse::<EpsScanConfig>(json)?.resolve(seed, paper_scale);
            write_csv(out, &cfg, &eps_scan(&cfg)?)
        }
        Command::Vqe => {
            let cfg = parse::<VqeConfig>(json)?.resolve(seed, paper_scale);
            let summary_path = out.with_extension("json");
            if summary_path == out {
                return Err(CliError::Config("--out must not end in .json; the summary is written there".into()));
            }
            let (rows, summary) = vqe(&cfg)?;
            let n = write_csv(out, &cfg, &rows)?;
            let text = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Io(e.to_string()))?;
            fs::write(&summary_path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", summary_path.display())))?;
            Ok(n)
        }
        Command::FhScan => {
            let cfg = parse::<FhScanConfig>(json)?.resolve(seed, paper_scale);
            write_csv(out, &cfg, &fh_scan(&cfg)?)
        }
        Command::Bounds => {
            let cfg = parse::<BoundsConfig>(json)?.resolve(seed, paper_scale);
            write_csv(out, &cfg, &bounds(&cfg)?)
        }
    }
}

fn parse<T: for<'de> Deserialize<'de>>(json: &str) -> CliResult<T> {
    serde_json::from_str(json).map_err(|e| CliError::Config(format!("bad config: {e}")))
}

pub fn header_line<C: Serialize>(config: &C) -> CliResult<String> {
    let json = serde_json::to_string(config).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(format!("# hva-lab {VERSION} config={json}\n"))
}

fn write_csv<C: Serialize, R: Serialize>(out: &Path, config: &C, rows: &[R]) -> CliResult<usize> {
    let mut buf = header_line(config)?.into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for r in rows {
            w.serialize(r).map_err(|e| CliError::Io(e.to_string()))?;
        }
        w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    }
    fs::write(out, buf).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    Ok(rows.len())
}

/// A single value or a list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LatticeChoice {
    /// `size` sites on a ring.
    Ring,
    /// `size x ly` torus.
    Torus { ly: usize },
}

impl LatticeChoice {
    pub fn build(&self, size: usize) -> crate::Result<Lattice> {
        match *self {
            LatticeChoice::Ring => Lattice::ring(size),
            LatticeChoice::Torus { ly } => Lattice::torus(size, ly),
        }
    }
}

fn half_pi() -> f64 {
    PI / 2.0
}

/// Initialization schemes as written in configs. Constrained block sums are
/// given as `T = c / N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SchemeChoice {
    Random,
    Small { eps: f64 },
    Constrained {
        #[serde(default = "half_pi")]
        c: f64,
    },
    Constant { v: f64 },
    /// Constraint kept during training (VQE only).
    ConstrainedAnsatz {
        #[serde(default = "half_pi")]
        c: f64,
    },
}

impl SchemeChoice {
    pub fn init(&self, n_sites: usize) -> InitScheme {
        match *self {
            SchemeChoice::Random => InitScheme::Random,
            SchemeChoice::Small { eps } => InitScheme::Small { eps },
            SchemeChoice::Constrained { c } | SchemeChoice::ConstrainedAnsatz { c } => {
                InitScheme::Constrained { t: c / n_sites as f64 }
            }
            SchemeChoice::Constant { v } => InitScheme::Constant { v },
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SchemeChoice::ConstrainedAnsatz { .. } => "constrained_ansatz",
            other => other.init(1).name(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepetitionRule {
    /// `ceil(N^2 / 4)`.
    QuarterNSquared,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Repetitions {
    Fixed(usize),
    Rule(RepetitionRule),
}

impl Repetitions {
    pub fn count(&self, n_sites: usize) -> usize {
        match *self {
            Repetitions::Fixed(r) => r,
            Repetitions::Rule(RepetitionRule::QuarterNSquared) => (n_sites * n_sites).div_ceil(4),
        }
    }
}

fn pick<T>(value: Option<T>, paper_scale: bool, desk: T, paper: T) -> T {
    value.unwrap_or(if paper_scale { paper } else { desk })
}

fn even_range(lo: usize, hi: usize) -> Vec<usize> {
    (lo..=hi).step_by(2).collect()
}

// ---- grad-scan ----

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradScanConfig {
    pub lattice: Option<LatticeChoice>,
    pub sizes: Option<Vec<usize>>,
    pub p: Option<OneOrMany<usize>>,
    pub schemes: Option<Vec<SchemeChoice>>,
    pub samples: Option<usize>,
    pub repetitions: Option<Repetitions>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradScanResolved {
    pub lattice: LatticeChoice,
    pub sizes: Vec<usize>,
    pub p: Vec<usize>,
    pub schemes: Vec<SchemeChoice>,
    pub samples: usize,
    pub repetitions: Repetitions,
    pub seed: u64,
}

fn default_schemes() -> Vec<SchemeChoice> {
    vec![SchemeChoice::Random, SchemeChoice::Small { eps: 0.2 }, SchemeChoice::Constrained { c: half_pi() }]
}

impl GradScanConfig {
    pub fn resolve(self, seed: Option<u64>, paper_scale: bool) -> GradScanResolved {
        GradScanResolved {
            lattice: self.lattice.unwrap_or(LatticeChoice::Ring),
            sizes: pick(self.sizes, paper_scale, even_range(4, 14), even_range(4, 24)),
            p: pick(self.p.map(|p| p.to_vec()), paper_scale, vec![16], vec![16, 32, 64]),
            schemes: self.schemes.unwrap_or_else(default_schemes),
            samples: pick(self.samples, paper_scale, 256, 1024),
            repetitions: self.repetitions.unwrap_or(Repetitions::Fixed(1)),
            seed: seed.or(self.seed).unwrap_or(7),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradScanRow {
    pub n_sites: usize,
    pub depth_p: usize,
    pub repetitions: usize,
    pub scheme: String,
    pub scheme_param: Option<f64>,
    pub mean_sq_grad: f64,
    pub rel_std: f64,
    pub std_err: f64,
    pub n_samples: usize,
}

/// XYZ ansatz, Neel start and `O = Y_0 Y_1` on the given lattice.
pub fn xyz_problem(lattice: &Lattice, p: usize) -> crate::Result<(HvaSpec, crate::StateVector, crate::LocalHamiltonian)> {
    let n = lattice.n_sites();
    Ok((xyz_hva(lattice, p)?, neel_state(lattice)?, pair_observable(n, 0, 1, Pauli::Y)?))
}

pub fn grad_scan(cfg: &GradScanResolved) -> CliResult<Vec<GradScanRow>> {
    let root = RngStream::new(cfg.seed);
    let mut rows = Vec::new();
    for &size in &cfg.sizes {
        let lattice = cfg.lattice.build(size)?;
        let n = lattice.n_sites();
        for &p in &cfg.p {
            let (spec, psi0, o) = xyz_problem(&lattice, p)?;
            let spec = spec.with_repetitions(cfg.repetitions.count(n))?;
            for scheme in &cfg.schemes {
                if matches!(scheme, SchemeChoice::ConstrainedAnsatz { .. }) {
                    return Err(CliError::Config("constrained_ansatz is a VQE-only scheme".into()));
                }
                let stream = root.substream(rows.len() as u64);
                let init = scheme.init(n);
                let r = grad_variance_scan(&spec, &init, &o, &psi0, cfg.samples, &stream)?;
                rows.push(GradScanRow {
                    n_sites: n,
                    depth_p: p,
                    repetitions: spec.repetitions_r(),
                    scheme: scheme.label().to_string(),
                    scheme_param: init.scale(),
                    mean_sq_grad: r.mean_sq_grad,
                    rel_std: r.rel_std,
                    std_err: r.std_err(),
                    n_samples: r.n_samples,
                });
            }
        }
    }
    Ok(rows)
}

// ---- eps-scan ----

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsScanConfig {
    pub lattice: Option<LatticeChoice>,
    pub sizes: Option<Vec<usize>>,
    pub p: Option<usize>,
    pub eps: Option<Vec<f64>>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpsScanResolved {
    pub lattice: LatticeChoice,
    pub sizes: Vec<usize>,
    pub p: usize,
    pub eps: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
}

pub fn default_eps_grid() -> Vec<f64> {
    (1..=20).map(|i| i as f64 / 10.0).collect()
}

impl EpsScanConfig {
    pub fn resolve(self, seed: Option<u64>, paper_scale: bool) -> EpsScanResolved {
        EpsScanResolved {
            lattice: self.lattice.unwrap_or(LatticeChoice::Ring),
            sizes: pick(self.sizes, paper_scale, vec![8, 10, 12], even_range(8, 24)),
            p: self.p.unwrap_or(16),
            eps: self.eps.unwrap_or_else(default_eps_grid),
            samples: pick(self.samples, paper_scale, 64, 1024),
            seed: seed.or(self.seed).unwrap_or(7),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsScanRow {
    pub n_sites: usize,
    pub depth_p: usize,
    pub eps: f64,
    #[serde(rename = "eps_over_logN")]
    pub eps_over_log_n: f64,
    pub mean_sq_grad: f64,
    pub rel_std: f64,
    pub std_err: f64,
    pub n_samples: usize,
    /// Saturation point of this size's curve.
    pub eps0: f64,
}

pub fn eps_scan(cfg: &EpsScanResolved) -> CliResult<Vec<EpsScanRow>> {
    let root = RngStream::new(cfg.seed);
    let mut rows = Vec::new();
    for (si, &size) in cfg.sizes.iter().enumerate() {
        let lattice = cfg.lattice.build(size)?;
        let n = lattice.n_sites();
        let (spec, psi0, o) = xyz_problem(&lattice, cfg.p)?;
        let mut block = Vec::with_capacity(cfg.eps.len());
        for (ei, &eps) in cfg.eps.iter().enumerate() {
            let stream = root.substream(si as u64).substream(ei as u64);
            let r = grad_variance_scan(&spec, &InitScheme::Small { eps }, &o, &psi0, cfg.samples, &stream)?;
            block.push(EpsScanRow {
                n_sites: n,
                depth_p: cfg.p,
                eps,
                eps_over_log_n: eps / (n as f64).ln(),
                mean_sq_grad: r.mean_sq_grad,
                rel_std: r.rel_std,
                std_err: r.std_err(),
                n_samples: r.n_samples,
                eps0: f64::NAN,
            });
        }
        let values: Vec<f64> = block.iter().map(|r| r.mean_sq_grad).collect();
        let eps0 = saturation_eps(&cfg.eps, &values)?;
        block.iter_mut().for_each(|r| r.eps0 = eps0);
        rows.extend(block);
    }
    Ok(rows)
}

// ---- vqe ----

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VqeMode {
    Exact,
    Shots,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VqeConfig {
    pub lattice: Option<LatticeChoice>,
    pub n_sites: Option<usize>,
    pub p: Option<usize>,
    pub schemes: Option<Vec<SchemeChoice>>,
    pub instances: Option<usize>,
    pub iterations: Option<usize>,
    pub learning_rate: Option<f64>,
    pub mode: Option<VqeMode>,
    pub n_shots: Option<Vec<u64>>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VqeResolved {
    pub lattice: LatticeChoice,
    pub n_sites: usize,
    pub p: usize,
    pub schemes: Vec<SchemeChoice>,
    pub instances: usize,
    pub iterations: usize,
    pub learning_rate: f64,
    pub mode: VqeMode,
    pub n_shots: Vec<u64>,
    pub seed: u64,
}

impl VqeConfig {
    pub fn resolve(self, seed: Option<u64>, paper_scale: bool) -> VqeResolved {
        let mode = self.mode.unwrap_or(VqeMode::Exact);
        let schemes = self.schemes.unwrap_or_else(|| match mode {
            VqeMode::Exact => vec![SchemeChoice::Constrained { c: half_pi() }, SchemeChoice::Random, SchemeChoice::Constant { v: PI }],
            VqeMode::Shots => vec![SchemeChoice::Constrained { c: half_pi() }, SchemeChoice::Constant { v: PI }],
        });
        let n_shots = match mode {
            VqeMode::Exact => Vec::new(),
            VqeMode::Shots => pick(self.n_shots, paper_scale, vec![1 << 7, 1 << 11, 1 << 15], (0..6).map(|i| 1u64 << (7 + 2 * i)).collect()),
        };
        VqeResolved {
            lattice: self.lattice.unwrap_or(LatticeChoice::Ring),
            n_sites: pick(self.n_sites, paper_scale, 8, 16),
            p: pick(self.p, paper_scale, 8, 16),
            schemes,
            instances: pick(self.instances, paper_scale, 4, 16),
            iterations: pick(self.iterations, paper_scale, if mode == VqeMode::Shots { 300 } else { 1000 }, 1000),
            learning_rate: self.learning_rate.unwrap_or(0.025),
            mode,
            n_shots,
            seed: seed.or(self.seed).unwrap_or(7),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VqeRow {
    pub scheme: String,
    pub scheme_param: Option<f64>,
    pub n_shot: Option<u64>,
    pub instance: usize,
    pub iteration: usize,
    pub energy: f64,
    pub error: Option<f64>,
    pub state_preps: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VqeGroupSummary {
    pub scheme: String,
    pub scheme_param: Option<f64>,
    pub n_shot: Option<u64>,
    pub final_energies: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VqeSummary {
    pub version: String,
    pub e_gs: Option<f64>,
    pub groups: Vec<VqeGroupSummary>,
}

/// Learning curves for every `(scheme, n_shot, instance)`; instance `s`
/// of group `g` uses `RngStream::new(seed).substream(g).substream(s)`.
pub fn vqe(cfg: &VqeResolved) -> CliResult<(Vec<VqeRow>, VqeSummary)> {
    let lattice = cfg.lattice.build(cfg.n_sites)?;
    let n = lattice.n_sites();
    let spec = xyz_hva(&lattice, cfg.p)?;
    let psi0 = neel_state(&lattice)?;
    let h = heisenberg_xyz(&lattice, 1.0, 1.0, 1.0)?;
    let e_gs = if n <= DENSE_MAX_SITES { Some(eigendecompose(&h)?.ground_energy()) } else { None };
    let shots: Vec<Option<u64>> = match cfg.mode {
        VqeMode::Exact => vec![None],
        VqeMode::Shots => cfg.n_shots.iter().map(|&s| Some(s)).collect(),
    };
    let mut groups = Vec::new();
    for scheme in &cfg.schemes {
        for &shot in &shots {
            if shot.is_some() && matches!(scheme, SchemeChoice::ConstrainedAnsatz { .. }) {
                return Err(CliError::Config("constrained_ansatz trains with exact gradients only".into()));
            }
            groups.push((*scheme, shot));
        }
    }
    let tasks: Vec<(usize, usize)> = (0..groups.len()).flat_map(|g| (0..cfg.instances).map(move |s| (g, s))).collect();
    let root = RngStream::new(cfg.seed);
    let curves = tasks
        .par_iter()
        .map(|&(g, s)| {
            let (scheme, shot) = groups[g];
            let opts = VqeOptions {
                iterations: cfg.iterations,
                learning_rate: cfg.learning_rate,
                mode: shot.map_or(GradientMode::Exact, GradientMode::Shots),
                snapshot_every_iteration: false,
            };
            let stream = root.substream(g as u64).substream(s as u64);
            match scheme {
                SchemeChoice::ConstrainedAnsatz { c } => run_vqe_constrained_ansatz(&spec, &psi0, c / n as f64, &h, &opts, &stream),
                other => run_vqe(&spec, &psi0, &other.init(n), &h, &opts, &stream),
            }
        })
        .collect::<crate::Result<Vec<Vec<TrainingRecord>>>>()?;
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for (g, &(scheme, shot)) in groups.iter().enumerate() {
        let mut finals = Vec::with_capacity(cfg.instances);
        for s in 0..cfg.instances {
            let curve = &curves[g * cfg.instances + s];
            for rec in curve {
                rows.push(VqeRow {
                    scheme: scheme.label().to_string(),
                    scheme_param: scheme.init(n).scale(),
                    n_shot: shot,
                    instance: s,
                    iteration: rec.iteration,
                    energy: rec.energy,
                    error: e_gs.map(|e| rec.energy - e),
                    state_preps: rec.state_prep_count,
                });
            }
            finals.push(curve.last().map_or(f64::NAN, |r| r.energy));
        }
        let m = finals.len() as f64;
        let mean = finals.iter().sum::<f64>() / m;
        let std = (finals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m).sqrt();
        summaries.push(VqeGroupSummary {
            scheme: scheme.label().to_string(),
            scheme_param: scheme.init(n).scale(),
            n_shot: shot,
            mean,
            std,
            min: finals.iter().copied().fold(f64::INFINITY, f64::min),
            max: finals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            final_energies: finals,
        });
    }
    Ok((rows, VqeSummary { version: VERSION.to_string(), e_gs, groups: summaries }))
}

// ---- fh-scan ----

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FhScanConfig {
    pub sizes: Option<Vec<usize>>,
    pub k: Option<OneOrMany<usize>>,
    pub time_reversal: Option<OneOrMany<bool>>,
    pub instances: Option<usize>,
    pub time_average: Option<TimeGrid>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FhScanResolved {
    pub sizes: Vec<usize>,
    pub k: Vec<usize>,
    pub time_reversal: Vec<bool>,
    pub instances: usize,
    pub time_average: Option<TimeGrid>,
    pub seed: u64,
}

impl FhScanConfig {
    pub fn resolve(self, seed: Option<u64>, paper_scale: bool) -> FhScanResolved {
        FhScanResolved {
            sizes: pick(self.sizes, paper_scale, vec![6, 8, 10], vec![6, 8, 10, 12]),
            k: pick(self.k.map(|k| k.to_vec()), paper_scale, vec![2], vec![2, 3, 4]),
            time_reversal: pick(self.time_reversal.map(|t| t.to_vec()), paper_scale, vec![false], vec![false, true]),
            instances: pick(self.instances, paper_scale, 128, 1024),
            time_average: self.time_average,
            seed: seed.or(self.seed).unwrap_or(7),
        }
    }
}

/// Groups run in `(k, time_reversal, size)` order; group `g` draws its
/// instance seeds from `RngStream::new(seed).substream(g)`.
pub fn fh_scan(cfg: &FhScanResolved) -> CliResult<Vec<FhRow>> {
    for &n in &cfg.sizes {
        if n > DENSE_MAX_SITES {
            return Err(CliError::Resource(format!("fh-scan is capped at {DENSE_MAX_SITES} sites, got {n}")));
        }
    }
    let root = RngStream::new(cfg.seed);
    let mut rows = Vec::new();
    let mut g = 0u64;
    for &k in &cfg.k {
        for &tr in &cfg.time_reversal {
            for &n in &cfg.sizes {
                rows.extend(fh_ensemble(n, k, tr, cfg.instances, &root.substream(g), cfg.time_average)?);
                g += 1;
            }
        }
    }
    let degenerate = rows.iter().filter(|r| r.min_gap < crate::spectral::DEGENERATE_GAP_TOL).count();
    if degenerate > 0 {
        eprintln!("warning: {degenerate} instance(s) have degenerate energy gaps");
    }
    Ok(rows)
}

// ---- bounds ----

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundRequest {
    TheoremConstants { g: f64, r: f64, o_norm: f64, l: f64, s: f64, k: usize, j: f64 },
    SpeedLimit { g: f64, big_k: f64, big_c: f64 },
    FmOrder { t: f64, k: usize, j: f64 },
    FmError { n: u32, t: f64, h_max: f64, j: f64, k: usize },
    Omega { n: u32, v0: f64, lambda: f64 },
    KNorm { n: u32, t: f64, h_max: f64, j: f64, k: usize },
    /// XXX Heisenberg ring against a single-site Pauli observable.
    Norm { n_sites: usize, site: usize, axis: Pauli, k: usize },
    /// XYZ ansatz on a ring with random parameters rescaled to sum to `tau`.
    FmVerify { n_sites: usize, p: usize, tau: f64, orders: Vec<u32> },
}

impl BoundRequest {
    pub fn defaults() -> Vec<BoundRequest> {
        vec![
            BoundRequest::TheoremConstants { g: 2.0, r: 1.0, o_norm: 1.0, l: 1.0, s: 1.0, k: 2, j: 2.0 },
            BoundRequest::SpeedLimit { g: 2.0, big_k: 10.0, big_c: 4.0 },
            BoundRequest::FmOrder { t: 1.0 / 256.0, k: 2, j: 2.0 },
            BoundRequest::FmError { n: 1, t: 1e-3, h_max: 10.0, j: 2.0, k: 2 },
            BoundRequest::Omega { n: 1, v0: 10.0, lambda: 8.0 },
            BoundRequest::KNorm { n: 1, t: 1e-3, h_max: 10.0, j: 2.0, k: 2 },
            BoundRequest::Norm { n_sites: 6, site: 0, axis: Pauli::Z, k: 2 },
            BoundRequest::FmVerify { n_sites: 6, p: 1, tau: 0.005, orders: vec![0, 1] },
            BoundRequest::FmVerify { n_sites: 6, p: 1, tau: 0.01, orders: vec![0] },
        ]
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub requests: Option<Vec<BoundRequest>>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsResolved {
    pub requests: Vec<BoundRequest>,
    pub seed: u64,
}

impl BoundsConfig {
    pub fn resolve(self, seed: Option<u64>, _paper_scale: bool) -> BoundsResolved {
        BoundsResolved {
            requests: self.requests.unwrap_or_else(BoundRequest::defaults),
            seed: seed.or(self.seed).unwrap_or(7),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub quantity: String,
    pub inputs: String,
    pub value: f64,
    pub measured: Option<f64>,
    pub dominated: Option<bool>,
}

fn row(quantity: &str, inputs: &BoundRequest, value: f64, measured: Option<f64>) -> CliResult<BoundRow> {
    let inputs = serde_json::to_string(inputs).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(BoundRow { quantity: quantity.to_string(), inputs, value, measured, dominated: measured.map(|m| m <= value) })
}

/// Request `i` with random parameters draws them from `RngStream::new(seed).substream(i)`.
pub fn bounds(cfg: &BoundsResolved) -> CliResult<Vec<BoundRow>> {
    let root = RngStream::new(cfg.seed);
    let mut rows = Vec::new();
    for (i, req) in cfg.requests.iter().enumerate() {
        match *req {
            BoundRequest::TheoremConstants { g, r, o_norm, l, s, k, j } => {
                let c = theorem_constants(g, r, o_norm, l, s, k, j)?;
                for (name, v) in [("mu", c.mu), ("gamma", c.gamma), ("c", c.c), ("beta_c", c.beta_c), ("n_min", c.n_min)] {
                    rows.push(row(name, req, v, None)?);
                }
            }
            BoundRequest::SpeedLimit { g, big_k, big_c } => rows.push(row("t_c", req, speed_limit_tc(g, big_k, big_c)?, None)?),
            BoundRequest::FmOrder { t, k, j } => rows.push(row("n0", req, fm_order_n0(t, k, j)? as f64, None)?),
            BoundRequest::FmError { n, t, h_max, j, k } => {
                rows.push(row("fm_error_bound", req, fm_error_bound(n, t, &FmParameters::new(h_max, j, k)?)?, None)?)
            }
            BoundRequest::Omega { n, v0, lambda } => rows.push(row("omega_bound", req, omega_bound(n, v0, lambda), None)?),
            BoundRequest::KNorm { n, t, h_max, j, k } => {
                rows.push(row("k_norm_bound", req, k_norm_bound(n, t, &FmParameters::new(h_max, j, k)?)?, None)?)
            }
            BoundRequest::Norm { n_sites, site, axis, k } => {
                let lattice = Lattice::ring(n_sites)?;
                let h = heisenberg_xyz(&lattice, 1.0, 1.0, 1.0)?;
                let o = site_observable(n_sites, site, axis)?;
                let b = norm_bounds(&h, &o, k, &lattice)?;
                let measured = if n_sites <= DENSE_MAX_SITES { Some(measured_norms(&h, &o)?) } else { None };
                rows.push(row("h_norm", req, b.h_norm_bound, measured.map(|m| m.0))?);
                rows.push(row("commutator_norm", req, b.commutator_bound, measured.map(|m| m.1))?);
            }
            BoundRequest::FmVerify { n_sites, p, tau, ref orders } => {
                let spec = xyz_hva(&Lattice::ring(n_sites)?, p)?;
                let mut theta = sample_params(&InitScheme::Random, p, spec.q(), &root.substream(i as u64))?;
                let total = theta.total();
                theta.as_mut_slice().iter_mut().for_each(|v| *v *= tau / total);
                for &n in orders {
                    let v = fm_approx_verify(&spec, &theta, n)?;
                    rows.push(row(&format!("fm_error_n{n}"), req, v.bound, Some(v.measured_error))?);
                    rows.push(row(&format!("k_norm_n{n}"), req, v.k_norm_bound, Some(v.measured_k_norm))?);
                }
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grad_scan_defaults() {
        let cfg = parse::<GradScanConfig>(r#"{"sizes":[4,6,8,10,12,14],"p":16,"samples":256,"seed":7}"#).unwrap().resolve(None, false);
        assert_eq!(cfg.schemes.len(), 3);
        assert_eq!(cfg.p, vec![16]);
        let paper = GradScanConfig::default().resolve(Some(3), true);
        assert_eq!(paper.samples, 1024);
        assert_eq!(paper.seed, 3);
        assert!(parse::<GradScanConfig>(r#"{"bogus":1}"#).is_err());
    }

    #[test]
    fn schemes_parse() {
        let s: Vec<SchemeChoice> =
            serde_json::from_str(r#"[{"kind":"random"},{"kind":"small","eps":0.2},{"kind":"constrained"},{"kind":"constant","v":3.0}]"#).unwrap();
        assert_eq!(s[2], SchemeChoice::Constrained { c: PI / 2.0 });
        assert_eq!(s[2].init(8), InitScheme::Constrained { t: PI / 16.0 });
        assert_eq!(s[1].label(), "small");
    }

    #[test]
    fn repetitions_rule() {
        let r: Repetitions = serde_json::from_str(r#""quarter_n_squared""#).unwrap();
        assert_eq!((r.count(4), r.count(6), r.count(12)), (4, 9, 36));
        let f: Repetitions = serde_json::from_str("3").unwrap();
        assert_eq!(f.count(10), 3);
    }

    #[test]
    fn error_codes() {
        assert_eq!(CliError::from(HvaError::Resource("x".into())).exit_code(), 1);
        assert_eq!(CliError::from(HvaError::Precondition("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(HvaError::Input("x".into())).exit_code(), 2);
    }

    #[test]
    fn bounds_default_rows_dominated() {
        let rows = bounds(&BoundsConfig::default().resolve(None, false)).unwrap();
        let get = |q: &str| rows.iter().find(|r| r.quantity == q).unwrap().value;
        assert_eq!(get("mu"), 1.015625);
        assert!((get("gamma") - 11.0).abs() < 1e-2);
        assert_eq!(get("t_c"), 0.0125);
        assert!(rows.iter().filter(|r| r.measured.is_some()).all(|r| r.dominated == Some(true)));
        assert!(rows.iter().any(|r| r.quantity == "fm_error_n1"));
    }

    #[test]
    fn fm_verify_beyond_n0_is_config_error() {
        let cfg = BoundsResolved { requests: vec![BoundRequest::FmVerify { n_sites: 4, p: 1, tau: 0.01, orders: vec![1] }], seed: 1 };
        assert_eq!(bounds(&cfg).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn eps_rows_have_log_column() {
        let cfg = EpsScanResolved { lattice: LatticeChoice::Ring, sizes: vec![4], p: 2, eps: vec![0.1, 1.0], samples: 4, seed: 1 };
        let rows = eps_scan(&cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert!((rows[1].eps_over_log_n - 1.0 / 4f64.ln()).abs() < 1e-15);
    }
}
