//! Maximizes the probability of correct decision over `(H, T)`.
//!
//! `H` is parameterized by its linked upper-triangle entries and every column
//! of `T` by a softmax over the logits of its linked entries, so the
//! column-stochastic constraints hold by construction and the problem is
//! unconstrained. Local ascent is BFGS with a Wolfe line search, restarted
//! from seeded random points.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::qdynamics::{DensityMatrix, Hamiltonian, ScoredState, SinkReadout, TransitionMatrix};
use crate::states::{check_fits, StateEnsemble};
use crate::topology::Topology;

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    pub h_free: Vec<f64>,
    pub t_logits: Vec<f64>,
}

impl ParameterVector {
    pub fn zeros(topology: &Topology) -> Self {
        ParameterVector {
            h_free: vec![0.0; topology.links().len()],
            t_logits: vec![0.0; topology.arcs().len()],
        }
    }

    /// Inverse of [`decode`] up to a per-column logit shift; zero entries of
    /// `T` map to a large negative logit.
    pub fn encode(topology: &Topology, ham: &Hamiltonian, trans: &TransitionMatrix) -> Self {
        let h = ham.matrix();
        let t = trans.matrix();
        ParameterVector {
            h_free: topology.links().iter().map(|&(i, j)| h[(i, j)]).collect(),
            t_logits: topology
                .arcs()
                .iter()
                .map(|&(i, j)| t[(i, j)].max(1e-300).ln().max(-700.0))
                .collect(),
        }
    }
}

fn softmax_columns(topology: &Topology, arcs: &[(usize, usize)], logits: &[f64]) -> DMatrix<f64> {
    let n = topology.n_network;
    let mut t = DMatrix::zeros(n, n);
    let mut start = 0;
    while start < arcs.len() {
        let j = arcs[start].1;
        let mut end = start;
        while end < arcs.len() && arcs[end].1 == j {
            end += 1;
        }
        let top = logits[start..end]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for k in start..end {
            let w = (logits[k] - top).exp();
            t[(arcs[k].0, j)] = w;
            total += w;
        }
        for k in start..end {
            t[(arcs[k].0, j)] /= total;
        }
        start = end;
    }
    t
}

pub fn decode(
    params: &ParameterVector,
    topology: &Topology,
) -> Result<(Hamiltonian, TransitionMatrix)> {
    let links = topology.links();
    let arcs = topology.arcs();
    if params.h_free.len() != links.len() || params.t_logits.len() != arcs.len() {
        return Err(Error::DimensionMismatch(format!(
            "expected {} hopping and {} transition parameters, got {} and {}",
            links.len(),
            arcs.len(),
            params.h_free.len(),
            params.t_logits.len()
        )));
    }
    let n = topology.n_network;
    let mut h = DMatrix::zeros(n, n);
    for (&(i, j), &v) in links.iter().zip(&params.h_free) {
        h[(i, j)] = v;
        h[(j, i)] = v;
    }
    let t = softmax_columns(topology, &arcs, &params.t_logits);
    Ok((
        Hamiltonian::new(topology, h)?,
        TransitionMatrix::new(topology, t)?,
    ))
}

pub fn objective(
    params: &ParameterVector,
    topology: &Topology,
    p: f64,
    tau: f64,
    ensemble: &StateEnsemble,
) -> Result<f64> {
    let (ham, trans) = decode(params, topology)?;
    crate::states::network_pc(topology, &ham, &trans, p, tau, ensemble)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum GradientMode {
    #[default]
    /// Fréchet derivative of the propagator.
    Exact,
    CentralDifference {
        step: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
    pub gradient: GradientMode,
    pub gamma: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            restarts: 16,
            max_iters: 500,
            tol: 1e-8,
            seed: 0,
            gradient: GradientMode::Exact,
            gamma: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub best_h: Hamiltonian,
    pub best_t: TransitionMatrix,
    pub best_pc: f64,
    pub best_params: ParameterVector,
    /// `P_c` after every iteration of the winning restart.
    pub history: Vec<f64>,
    pub restarts_used: usize,
    /// Whether the winning restart met the tolerance before `max_iters`.
    pub converged: bool,
    /// Final `P_c` of every restart, in restart order.
    pub restart_pcs: Vec<f64>,
}

/// The objective restricted to the parameter blocks that matter at this `p`:
/// `H` drops out at `p = 1` and `T` at `p = 0`.
pub struct Problem<'a> {
    topology: &'a Topology,
    readout: SinkReadout,
    states: Vec<ScoredState>,
    tau: f64,
    links: Vec<(usize, usize)>,
    arcs: Vec<(usize, usize)>,
    use_h: bool,
    use_t: bool,
    gradient: GradientMode,
}

impl<'a> Problem<'a> {
    pub fn new(
        topology: &'a Topology,
        p: f64,
        tau: f64,
        ensemble: &StateEnsemble,
        gamma: f64,
        gradient: GradientMode,
    ) -> Result<Self> {
        check_fits(topology, ensemble)?;
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau = {tau}")));
        }
        let readout = SinkReadout::new(topology, p, gamma)?;
        let pairs: Vec<(f64, &DensityMatrix)> = ensemble
            .priors()
            .iter()
            .copied()
            .zip(ensemble.states())
            .collect();
        let states = readout.score(&pairs)?;
        Ok(Problem {
            topology,
            readout,
            states,
            tau,
            links: topology.links(),
            arcs: topology.arcs(),
            use_h: p < 1.0,
            use_t: p > 0.0,
            gradient,
        })
    }

    pub fn dim(&self) -> usize {
        self.h_len() + self.t_len()
    }

    fn h_len(&self) -> usize {
        if self.use_h {
            self.links.len()
        } else {
            0
        }
    }

    fn t_len(&self) -> usize {
        if self.use_t {
            self.arcs.len()
        } else {
            0
        }
    }

    /// Full parameter vector from the active coordinates; inactive blocks are
    /// zero (no hopping, classical `T`).
    pub fn expand(&self, x: &DVector<f64>) -> ParameterVector {
        let mut out = ParameterVector::zeros(self.topology);
        let nh = self.h_len();
        if self.use_h {
            out.h_free.copy_from_slice(&x.as_slice()[..nh]);
        }
        if self.use_t {
            out.t_logits.copy_from_slice(&x.as_slice()[nh..]);
        }
        out
    }

    fn matrices(&self, x: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let params = self.expand(x);
        let n = self.topology.n_network;
        let mut h = DMatrix::zeros(n, n);
        for (&(i, j), &v) in self.links.iter().zip(&params.h_free) {
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
        (
            h,
            softmax_columns(self.topology, &self.arcs, &params.t_logits),
        )
    }

    pub fn value(&self, x: &DVector<f64>) -> Result<f64> {
        let (h, t) = self.matrices(x);
        self.readout.pc(&h, &t, self.tau, &self.states)
    }

    pub fn value_and_gradient(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        match self.gradient {
            GradientMode::Exact => self.exact_gradient(x),
            GradientMode::CentralDifference { step } => {
                let f = self.value(x)?;
                let mut g = DVector::zeros(x.len());
                let mut probe = x.clone();
                for k in 0..x.len() {
                    probe[k] = x[k] + step;
                    let up = self.value(&probe)?;
                    probe[k] = x[k] - step;
                    let down = self.value(&probe)?;
                    probe[k] = x[k];
                    g[k] = (up - down) / (2.0 * step);
                }
                Ok((f, g))
            }
        }
    }

    fn exact_gradient(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        let (h, t) = self.matrices(x);
        let (f, gh, gt) = self
            .readout
            .pc_and_gradient(&h, &t, self.tau, &self.states)?;
        let mut g = DVector::zeros(x.len());
        let nh = self.h_len();
        if self.use_h {
            for (k, &(i, j)) in self.links.iter().enumerate() {
                g[k] = gh[(i, j)];
            }
        }
        if self.use_t {
            // ∂f/∂ℓ_ij = T_ij (∂f/∂T_ij − Σ_k T_kj ∂f/∂T_kj)
            let n = self.topology.n_network;
            let mut mean = vec![0.0; n];
            for &(i, j) in &self.arcs {
                mean[j] += t[(i, j)] * gt[(i, j)];
            }
            for (k, &(i, j)) in self.arcs.iter().enumerate() {
                g[nh + k] = t[(i, j)] * (gt[(i, j)] - mean[j]);
            }
        }
        Ok((f, g))
    }

    fn random_start(&self, rng: &mut ChaCha8Rng, classical_t: bool) -> DVector<f64> {
        let mut x = DVector::zeros(self.dim());
        let nh = self.h_len();
        for k in 0..nh {
            x[k] = rng.random_range(-1.0..1.0);
        }
        for k in nh..self.dim() {
            let v = rng.random_range(-1.0..1.0);
            x[k] = if classical_t { 0.0 } else { v };
        }
        x
    }
}

struct LocalRun {
    x: DVector<f64>,
    f: f64,
    history: Vec<f64>,
    converged: bool,
}

const MAX_STEP: f64 = 2.0;
const C1: f64 = 1e-4;
const C2: f64 = 0.9;

/// Minimizes `phi = -f` along `d` from `x`, returning the accepted point.
/// `(step, x, f, ∇f)` at the accepted point.
type Accepted = (f64, DVector<f64>, f64, DVector<f64>);

fn line_search(
    problem: &Problem,
    x: &DVector<f64>,
    f0: f64,
    g0: &DVector<f64>,
    d: &DVector<f64>,
    alpha0: f64,
) -> Result<Option<Accepted>> {
    let phi0 = -f0;
    let dphi0 = -g0.dot(d);
    let eval = |a: f64| -> Result<(f64, f64, DVector<f64>, DVector<f64>)> {
        let xa = x + d * a;
        let (f, g) = problem.value_and_gradient(&xa)?;
        Ok((-f, -g.dot(d), g, xa))
    };

    let mut best: Option<(f64, DVector<f64>, f64, DVector<f64>)> = None;
    let mut keep = |phi: f64, xa: &DVector<f64>, g: &DVector<f64>, a: f64| {
        if phi < phi0 + C1 * a * dphi0 && best.as_ref().is_none_or(|b| -phi > b.2) {
            best = Some((a, xa.clone(), -phi, g.clone()));
        }
    };

    let (mut a_lo, mut phi_lo, mut dphi_lo) = (0.0, phi0, dphi0);
    let mut a = alpha0;
    let mut bracket: Option<(f64, f64, f64, f64, f64, f64)> = None;
    for i in 0..12 {
        let (phi, dphi, g, xa) = eval(a)?;
        keep(phi, &xa, &g, a);
        if phi > phi0 + C1 * a * dphi0 || (i > 0 && phi >= phi_lo) {
            bracket = Some((a_lo, phi_lo, dphi_lo, a, phi, dphi));
            break;
        }
        if dphi.abs() <= -C2 * dphi0 {
            return Ok(Some((a, xa, -phi, g)));
        }
        if dphi >= 0.0 {
            bracket = Some((a, phi, dphi, a_lo, phi_lo, dphi_lo));
            break;
        }
        a_lo = a;
        phi_lo = phi;
        dphi_lo = dphi;
        a *= 2.0;
    }

    if let Some((mut lo, mut phi_l, mut dphi_l, mut hi, mut phi_h, _)) = bracket {
        for _ in 0..20 {
            // safeguarded quadratic interpolation from the low end
            let width = hi - lo;
            let denom = 2.0 * (phi_h - phi_l - dphi_l * width);
            let mut trial = if denom > 0.0 {
                lo - dphi_l * width * width / denom
            } else {
                lo + 0.5 * width
            };
            let (left, right) = if lo < hi { (lo, hi) } else { (hi, lo) };
            let margin = 0.1 * (right - left);
            if !(trial > left + margin && trial < right - margin) {
                trial = 0.5 * (lo + hi);
            }
            let (phi, dphi, g, xa) = eval(trial)?;
            keep(phi, &xa, &g, trial);
            if phi > phi0 + C1 * trial * dphi0 || phi >= phi_l {
                hi = trial;
                phi_h = phi;
            } else {
                if dphi.abs() <= -C2 * dphi0 {
                    return Ok(Some((trial, xa, -phi, g)));
                }
                if dphi * (hi - lo) >= 0.0 {
                    hi = lo;
                    phi_h = phi_l;
                }
                lo = trial;
                phi_l = phi;
                dphi_l = dphi;
            }
            if (hi - lo).abs() < 1e-14 * (1.0 + lo.abs()) {
                break;
            }
        }
    }
    Ok(best)
}

fn bfgs(problem: &Problem, x0: DVector<f64>, max_iters: usize, tol: f64) -> Result<LocalRun> {
    let n = x0.len();
    let (mut f, mut g) = problem.value_and_gradient(&x0)?;
    let mut x = x0;
    let mut history = vec![f];
    if n == 0 {
        return Ok(LocalRun {
            x,
            f,
            history,
            converged: true,
        });
    }
    let mut hinv = DMatrix::<f64>::identity(n, n);
    let mut stalls = 0;
    let mut fresh = true;
    for _ in 0..max_iters {
        if g.amax() <= tol {
            return Ok(LocalRun {
                x,
                f,
                history,
                converged: true,
            });
        }
        // ascent direction for f
        let mut d = &hinv * &g;
        if d.dot(&g) <= 0.0 {
            hinv.fill_with_identity();
            d = g.clone();
            fresh = true;
        }
        let len = d.amax();
        let alpha0 = if fresh {
            (MAX_STEP / len).min(1.0 / g.norm().max(1e-300)).min(1.0)
        } else {
            (MAX_STEP / len).min(1.0)
        };
        let Some((_, x_new, f_new, g_new)) = line_search(problem, &x, f, &g, &d, alpha0)? else {
            if fresh {
                return Ok(LocalRun {
                    x,
                    f,
                    history,
                    converged: true,
                });
            }
            hinv.fill_with_identity();
            fresh = true;
            continue;
        };
        let s = &x_new - &x;
        // gradient of the minimized function is -g
        let y = &g - &g_new;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if fresh {
                hinv *= sy / y.dot(&y);
            }
            let rho = 1.0 / sy;
            let hy = &hinv * &y;
            let yhy = y.dot(&hy);
            hinv += (&s * s.transpose()) * (rho * rho * yhy + rho)
                - (&hy * s.transpose() + &s * hy.transpose()) * rho;
            fresh = false;
        }
        let gain = f_new - f;
        x = x_new;
        f = f_new;
        g = g_new;
        history.push(f);
        if gain.abs() <= tol * f.abs().max(1.0) {
            stalls += 1;
            if stalls >= 3 {
                return Ok(LocalRun {
                    x,
                    f,
                    history,
                    converged: true,
                });
            }
        } else {
            stalls = 0;
        }
    }
    Ok(LocalRun {
        x,
        f,
        history,
        converged: false,
    })
}

/// Multi-start maximization. Restart `k` draws its start from the ChaCha8
/// stream `k` of `seed`, so the result does not depend on scheduling. Restart
/// 0 starts `T` at the classical random walk of the topology.
pub fn maximize(
    topology: &Topology,
    p: f64,
    tau: f64,
    ensemble: &StateEnsemble,
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    if config.restarts == 0 {
        return Err(Error::InvalidParameter(
            "at least one restart is needed".into(),
        ));
    }
    let problem = Problem::new(topology, p, tau, ensemble, config.gamma, config.gradient)?;
    let runs: Vec<Result<LocalRun>> = (0..config.restarts)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(k as u64);
            let x0 = problem.random_start(&mut rng, k == 0);
            bfgs(&problem, x0, config.max_iters, config.tol)
        })
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;

    let mut best = 0;
    for (k, run) in runs.iter().enumerate() {
        if run.f > runs[best].f {
            best = k;
        }
    }
    let restart_pcs = runs.iter().map(|r| r.f).collect();
    let winner = &runs[best];
    let best_params = problem.expand(&winner.x);
    let (best_h, best_t) = decode(&best_params, topology)?;
    Ok(OptimizationResult {
        best_h,
        best_t,
        best_pc: winner.f.clamp(0.0, 1.0),
        best_params,
        history: winner.history.clone(),
        restarts_used: config.restarts,
        converged: winner.converged,
        restart_pcs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{helstrom_ensemble, pure_mixed_pair, symmetric_pure_pair};
    use crate::topology::build_topology;
    use std::f64::consts::PI;

    fn topo(s: &str) -> Topology {
        build_topology(&s.parse().unwrap())
    }

    #[test]
    fn softmax_columns_are_stochastic() {
        let t = topo("2r-2r-2");
        let mut params = ParameterVector::zeros(&t);
        let (ham, tr) = decode(&params, &t).unwrap();
        assert_eq!(ham.matrix(), &DMatrix::zeros(4, 4));
        for j in 0..4 {
            let col: Vec<f64> = tr
                .matrix()
                .column(j)
                .iter()
                .copied()
                .filter(|&x| x > 0.0)
                .collect();
            assert_eq!(col, vec![0.5, 0.5]);
        }
        params.t_logits[0] = 40.0;
        params.t_logits[1] = -40.0;
        let (_, tr) = decode(&params, &t).unwrap();
        let (i0, j0) = t.arcs()[0];
        assert!((tr.matrix()[(i0, j0)] - 1.0).abs() < 1e-30_f64.max(1e-15));
        params.t_logits[0] = 1e6;
        let (_, tr) = decode(&params, &t).unwrap();
        assert!(tr.matrix().iter().all(|x| x.is_finite()));
    }

    #[test]
    fn decode_rejects_wrong_sizes() {
        let t = topo("2r-2r-2");
        let params = ParameterVector {
            h_free: vec![0.0; 3],
            t_logits: vec![0.0; 8],
        };
        assert!(matches!(
            decode(&params, &t),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn encode_inverts_decode() {
        let t = topo("2-2-2");
        let params = ParameterVector {
            h_free: (0..t.links().len()).map(|k| 0.1 * k as f64 - 0.2).collect(),
            t_logits: (0..t.arcs().len())
                .map(|k| (k as f64 * 0.7).sin())
                .collect(),
        };
        let (ham, tr) = decode(&params, &t).unwrap();
        let back = ParameterVector::encode(&t, &ham, &tr);
        let (ham2, tr2) = decode(&back, &t).unwrap();
        assert_eq!(ham, ham2);
        assert!((tr.matrix() - tr2.matrix()).amax() < 1e-14);
    }

    #[test]
    fn objective_edge_cases() {
        let t = topo("2r-2r-2");
        let e = symmetric_pure_pair(PI / 8.0, 0.0);
        let zero = ParameterVector::zeros(&t);
        assert_eq!(objective(&zero, &t, 0.0, 0.0, &e).unwrap(), 0.0);
        let h = 0.5;
        let ansatz = ParameterVector {
            h_free: vec![h, h, h, -h],
            t_logits: vec![0.0; 8],
        };
        let v = objective(&ansatz, &t, 0.0, 5.0, &e).unwrap();
        let closed = crate::analytic::pc_p0_closed(PI / 8.0, h, 5.0);
        assert!((v - closed).abs() < 1e-10);
    }

    #[test]
    fn exact_and_difference_gradients_agree() {
        let t = topo("2-2-2");
        let e = pure_mixed_pair(PI / 8.0, PI / 4.0, 0.5).unwrap();
        for p in [0.0, 0.4, 1.0] {
            let exact = Problem::new(&t, p, 2.0, &e, 1.0, GradientMode::Exact).unwrap();
            let fd = Problem::new(
                &t,
                p,
                2.0,
                &e,
                1.0,
                GradientMode::CentralDifference { step: 1e-6 },
            )
            .unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let x = exact.random_start(&mut rng, false);
            let (f1, g1) = exact.value_and_gradient(&x).unwrap();
            let (f2, g2) = fd.value_and_gradient(&x).unwrap();
            assert_eq!(f1, f2);
            assert!((g1 - g2).amax() < 1e-8, "p = {p}");
        }
    }

    #[test]
    fn central_and_forward_differences_agree() {
        let t = topo("2r-2r-2");
        let e = pure_mixed_pair(PI / 8.0, PI / 4.0, 0.5).unwrap();
        let problem = Problem::new(
            &t,
            0.3,
            3.0,
            &e,
            1.0,
            GradientMode::CentralDifference { step: 1e-5 },
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..5 {
            let x = problem.random_start(&mut rng, false);
            let (f, central) = problem.value_and_gradient(&x).unwrap();
            let mut probe = x.clone();
            for k in 0..x.len() {
                probe[k] += 1e-5;
                let forward = (problem.value(&probe).unwrap() - f) / 1e-5;
                probe[k] = x[k];
                let scale = central[k].abs().max(1e-3);
                assert!(
                    (forward - central[k]).abs() / scale < 1e-4 * 10.0_f64.max(1.0 / scale * 1e-2)
                );
            }
        }
    }

    #[test]
    fn inactive_blocks_are_dropped() {
        let t = topo("2r-2r-2");
        let e = symmetric_pure_pair(PI / 8.0, 0.0);
        assert_eq!(
            Problem::new(&t, 0.0, 1.0, &e, 1.0, GradientMode::Exact)
                .unwrap()
                .dim(),
            4
        );
        assert_eq!(
            Problem::new(&t, 1.0, 1.0, &e, 1.0, GradientMode::Exact)
                .unwrap()
                .dim(),
            8
        );
        assert_eq!(
            Problem::new(&t, 0.5, 1.0, &e, 1.0, GradientMode::Exact)
                .unwrap()
                .dim(),
            12
        );
    }

    #[test]
    fn maximize_is_reproducible_and_feasible() {
        let t = topo("2r-2r-2");
        let e = pure_mixed_pair(PI / 8.0, PI / 4.0, 0.5).unwrap();
        let config = OptimizerConfig {
            restarts: 4,
            max_iters: 200,
            seed: 7,
            ..Default::default()
        };
        let a = maximize(&t, 0.3, 4.0, &e, &config).unwrap();
        let b = maximize(&t, 0.3, 4.0, &e, &config).unwrap();
        assert_eq!(a.best_pc.to_bits(), b.best_pc.to_bits());
        assert_eq!(a.restart_pcs, b.restart_pcs);
        let again = crate::states::network_pc(&t, &a.best_h, &a.best_t, 0.3, 4.0, &e).unwrap();
        assert!((again - a.best_pc).abs() < 1e-10);
        assert!(a.best_pc <= helstrom_ensemble(&e).unwrap() + 1e-8);
        assert!(a.restart_pcs.iter().all(|&v| v <= a.best_pc));
        for w in a.history.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
    }

    #[test]
    fn single_thread_pool_gives_same_answer() {
        let t = topo("2r-2r-2");
        let e = symmetric_pure_pair(PI / 8.0, 0.0);
        let config = OptimizerConfig {
            restarts: 3,
            max_iters: 100,
            seed: 1,
            ..Default::default()
        };
        let a = maximize(&t, 0.0, 3.0, &e, &config).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool.install(|| maximize(&t, 0.0, 3.0, &e, &config).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn short_time_optimum_beats_ansatz_scan() {
        let t = topo("2r-2r-2");
        let e = symmetric_pure_pair(PI / 8.0, 0.0);
        let config = OptimizerConfig {
            restarts: 4,
            ..Default::default()
        };
        let r = maximize(&t, 0.0, 2.0, &e, &config).unwrap();
        let h = crate::analytic::optimal_h_p0(PI / 8.0, 2.0);
        let ansatz = crate::analytic::pc_p0_closed(PI / 8.0, h, 2.0);
        assert!(r.best_pc >= ansatz - 1e-6, "{} < {ansatz}", r.best_pc);
    }
}
