//! Monte-Carlo robustness studies: noisy state preparation, static disorder
//! in the hopping rates, and the effect of network depth.
//!
//! Run `k` of every study draws from ChaCha8 stream `k` of the configured
//! seed. Every grid cell therefore sees the same underlying uniforms (common
//! random numbers), and results do not depend on thread scheduling.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::optimizer::{maximize, OptimizerConfig};
use crate::qdynamics::{DensityMatrix, Hamiltonian, SinkReadout, TransitionMatrix};
use crate::states::{helstrom_ensemble, pure_mixed_pair, EnsembleFamily, StateEnsemble};
use crate::topology::{build_topology, ModelSpec, Topology};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NominalPair {
    pub theta: f64,
    pub xi: f64,
    pub r: f64,
}

impl Default for NominalPair {
    fn default() -> Self {
        NominalPair {
            theta: std::f64::consts::PI / 8.0,
            xi: std::f64::consts::PI / 4.0,
            r: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseKind {
    /// `x · (1 + δu)`
    #[default]
    Multiplicative,
    /// `x + δu`
    Additive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub n_runs: usize,
    pub deltas: Vec<f64>,
    pub seed: u64,
    pub p_values: Vec<f64>,
    pub tau_values: Vec<f64>,
    pub nominal: NominalPair,
    pub noise: NoiseKind,
    /// Both states use one draw of `(θ, ξ)` instead of one draw each.
    pub shared_draw: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            n_runs: 1000,
            deltas: vec![0.0, 0.05, 0.1, 0.25, 0.5, 1.0],
            seed: 0,
            p_values: vec![0.0],
            tau_values: vec![1.0, 10.0],
            nominal: NominalPair::default(),
            noise: NoiseKind::Multiplicative,
            shared_draw: false,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_runs == 0 {
            return Err(Error::InvalidParameter("n_runs must be at least 1".into()));
        }
        if let Some(d) = self.deltas.iter().find(|d| !(**d >= 0.0 && d.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "error level {d} must be non-negative"
            )));
        }
        if let Some(p) = self.p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidParameter(format!(
                "p = {p} is outside [0, 1]"
            )));
        }
        if let Some(t) = self
            .tau_values
            .iter()
            .find(|t| !(**t >= 0.0 && t.is_finite()))
        {
            return Err(Error::InvalidParameter(format!("tau = {t}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McCell {
    pub p: f64,
    pub tau: f64,
    pub delta: f64,
    /// `P_c` of the unperturbed problem.
    pub nominal_pc: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct McSummary {
    pub cells: Vec<McCell>,
}

impl McSummary {
    pub fn cell(&self, p: f64, tau: f64, delta: f64) -> Option<&McCell> {
        self.cells
            .iter()
            .find(|c| c.p == p && c.tau == tau && c.delta == delta)
    }

    /// Cells of one `(p, τ)` slice in `δ` order.
    pub fn slice(&self, p: f64, tau: f64) -> Vec<&McCell> {
        let mut out: Vec<&McCell> = self
            .cells
            .iter()
            .filter(|c| c.p == p && c.tau == tau)
            .collect();
        out.sort_by(|a, b| a.delta.total_cmp(&b.delta));
        out
    }

    /// Smallest `δ` of the slice whose mean drops below `level`.
    pub fn first_mean_below(&self, p: f64, tau: f64, level: f64) -> Option<f64> {
        self.slice(p, tau)
            .into_iter()
            .find(|c| c.mean < level)
            .map(|c| c.delta)
    }

    /// Smallest `δ` of the slice whose envelope minimum drops below `level`.
    pub fn first_min_below(&self, p: f64, tau: f64, level: f64) -> Option<f64> {
        self.slice(p, tau)
            .into_iter()
            .find(|c| c.min < level)
            .map(|c| c.delta)
    }
}

fn summarize(p: f64, tau: f64, delta: f64, nominal_pc: f64, values: &[f64]) -> McCell {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    McCell {
        p,
        tau,
        delta,
        nominal_pc,
        mean,
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        std: var.sqrt(),
    }
}

fn run_rng(seed: u64, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64);
    rng
}

fn perturb(x: f64, delta: f64, u: f64, noise: NoiseKind) -> f64 {
    match noise {
        NoiseKind::Multiplicative => x * (1.0 + delta * u),
        NoiseKind::Additive => x + delta * u,
    }
}

/// One noisy draw of the pure-versus-mixed pair. The pure state takes its
/// own `(θ, ξ)` and the mixed state its own `(θ, ξ, r)` unless `shared_draw`
/// is set; `r` is clamped to `[0, 1]`.
pub fn sample_noisy_ensemble(
    nominal: NominalPair,
    delta: f64,
    noise: NoiseKind,
    shared_draw: bool,
    rng: &mut ChaCha8Rng,
) -> Result<StateEnsemble> {
    let mut u = [0.0; 5];
    for x in u.iter_mut() {
        *x = rng.random_range(-1.0..=1.0);
    }
    let (a, b) = if shared_draw { (0, 0) } else { (0, 2) };
    let theta1 = perturb(nominal.theta, delta, u[a], noise);
    let xi1 = perturb(nominal.xi, delta, u[a + 1], noise);
    let theta2 = perturb(nominal.theta, delta, u[b], noise);
    let xi2 = perturb(nominal.xi, delta, u[b + 1], noise);
    let r = perturb(nominal.r, delta, u[4], noise).clamp(0.0, 1.0);
    let pure = pure_mixed_pair(theta1, xi1, r)?.states()[0].clone();
    let mixed = pure_mixed_pair(theta2, xi2, r)?.states()[1].clone();
    StateEnsemble::with_family(vec![pure, mixed], vec![0.5, 0.5], EnsembleFamily::Custom)
}

/// Multiplies every linked entry of `H` by an independent `1 + δu`.
pub fn sample_noisy_hamiltonian(
    topology: &Topology,
    h_star: &Hamiltonian,
    delta: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Hamiltonian> {
    let mut h = h_star.matrix().clone();
    for (i, j) in topology.links() {
        let v = h[(i, j)] * (1.0 + delta * rng.random_range(-1.0..=1.0));
        h[(i, j)] = v;
        h[(j, i)] = v;
    }
    Hamiltonian::new(topology, h)
}

/// Optimal parameters for one `(p, τ)` grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalNetwork {
    pub p: f64,
    pub tau: f64,
    pub ham: Hamiltonian,
    pub trans: TransitionMatrix,
    pub pc: f64,
}

/// Optimizes the nominal problem on every `(p, τ)` cell of the config.
pub fn optimize_cells(
    topology: &Topology,
    config: &McConfig,
    optimizer: &OptimizerConfig,
) -> Result<Vec<OptimalNetwork>> {
    config.validate()?;
    let n = config.nominal;
    let ensemble = pure_mixed_pair(n.theta, n.xi, n.r)?;
    let mut out = Vec::new();
    for &p in &config.p_values {
        for &tau in &config.tau_values {
            let r = maximize(topology, p, tau, &ensemble, optimizer)?;
            out.push(OptimalNetwork {
                p,
                tau,
                ham: r.best_h,
                trans: r.best_t,
                pc: r.best_pc,
            });
        }
    }
    Ok(out)
}

fn pc_from_rows(
    readout: &SinkReadout,
    rows: &DMatrix<f64>,
    ensemble: &StateEnsemble,
) -> Result<f64> {
    let mut pc = 0.0;
    for (m, (rho, prior)) in ensemble.states().iter().zip(ensemble.priors()).enumerate() {
        let x: DVector<f64> = readout.encode(rho)?;
        pc += prior * rows.row(m).transpose().dot(&x);
    }
    Ok(pc.clamp(0.0, 1.0))
}

/// Evolves noisy input pairs through each fixed optimal network.
pub fn run_state_noise_study(
    topology: &Topology,
    networks: &[OptimalNetwork],
    config: &McConfig,
) -> Result<McSummary> {
    config.validate()?;
    let mut cells = Vec::new();
    for net in networks {
        let readout = SinkReadout::new(topology, net.p, 1.0)?;
        let rows = readout.sink_rows(net.ham.matrix(), net.trans.matrix(), net.tau)?;
        for &delta in &config.deltas {
            let values = (0..config.n_runs)
                .into_par_iter()
                .map(|k| {
                    let mut rng = run_rng(config.seed, k);
                    let e = sample_noisy_ensemble(
                        config.nominal,
                        delta,
                        config.noise,
                        config.shared_draw,
                        &mut rng,
                    )?;
                    pc_from_rows(&readout, &rows, &e)
                })
                .collect::<Result<Vec<f64>>>()?;
            cells.push(summarize(net.p, net.tau, delta, net.pc, &values));
        }
    }
    Ok(McSummary { cells })
}

/// Perturbs the optimal hopping rates and evaluates the nominal pair.
pub fn run_disorder_study(
    topology: &Topology,
    networks: &[OptimalNetwork],
    config: &McConfig,
) -> Result<McSummary> {
    config.validate()?;
    let n = config.nominal;
    let ensemble = pure_mixed_pair(n.theta, n.xi, n.r)?;
    let pairs: Vec<(f64, &DensityMatrix)> = ensemble
        .priors()
        .iter()
        .copied()
        .zip(ensemble.states())
        .collect();
    let mut cells = Vec::new();
    for net in networks {
        let readout = SinkReadout::new(topology, net.p, 1.0)?;
        let scored = readout.score(&pairs)?;
        for &delta in &config.deltas {
            let values = (0..config.n_runs)
                .into_par_iter()
                .map(|k| {
                    let mut rng = run_rng(config.seed, k);
                    let h = sample_noisy_hamiltonian(topology, &net.ham, delta, &mut rng)?;
                    Ok(readout
                        .pc(h.matrix(), net.trans.matrix(), net.tau, &scored)?
                        .clamp(0.0, 1.0))
                })
                .collect::<Result<Vec<f64>>>()?;
            cells.push(summarize(net.p, net.tau, delta, net.pc, &values));
        }
    }
    Ok(McSummary { cells })
}

/// `2r-2r-…-2r-2` with `depth` intermediate layers.
pub fn depth_model(depth: usize) -> Result<ModelSpec> {
    if depth == 0 {
        return Err(Error::InvalidParameter("depth must be at least 1".into()));
    }
    ModelSpec::new(vec![2; depth + 2], vec![true; depth + 1])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthRow {
    pub depth: usize,
    pub tau: f64,
    pub pc: f64,
    pub helstrom: f64,
}

/// Optimized `P_c` at `p = 0` for every `(depth, τ)`.
pub fn run_depth_study(
    depths: &[usize],
    taus: &[f64],
    ensemble: &StateEnsemble,
    optimizer: &OptimizerConfig,
) -> Result<Vec<DepthRow>> {
    let helstrom = helstrom_ensemble(ensemble)?;
    let mut rows = Vec::new();
    for &depth in depths {
        let topology = build_topology(&depth_model(depth)?);
        for &tau in taus {
            let r = maximize(&topology, 0.0, tau, ensemble, optimizer)?;
            rows.push(DepthRow {
                depth,
                tau,
                pc: r.best_pc,
                helstrom,
            });
        }
    }
    Ok(rows)
}
