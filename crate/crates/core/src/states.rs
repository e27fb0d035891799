//! State ensembles, discrimination bounds, and the network's probability of
//! correct decision.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::hermitian_trace_norm;
use crate::qdynamics::{DensityMatrix, Hamiltonian, SinkReadout, TransitionMatrix};
use crate::topology::Topology;

const PRIOR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub rx: f64,
    pub ry: f64,
    pub rz: f64,
}

impl BlochVector {
    pub fn new(rx: f64, ry: f64, rz: f64) -> Result<Self> {
        let v = BlochVector { rx, ry, rz };
        if !(v.radius() <= 1.0 + 1e-12) {
            return Err(Error::InvalidState(format!(
                "Bloch radius {} exceeds 1",
                v.radius()
            )));
        }
        Ok(v)
    }

    pub fn of(rho: &DensityMatrix) -> Result<Self> {
        if rho.dim() != 2 {
            return Err(Error::DimensionMismatch(format!(
                "expected a qubit, got dimension {}",
                rho.dim()
            )));
        }
        let m = rho.matrix();
        Ok(BlochVector {
            rx: 2.0 * m[(0, 1)].re,
            ry: -2.0 * m[(0, 1)].im,
            rz: (m[(0, 0)] - m[(1, 1)]).re,
        })
    }

    pub fn radius(&self) -> f64 {
        (self.rx * self.rx + self.ry * self.ry + self.rz * self.rz).sqrt()
    }

    /// `(I + rx σx + ry σy + rz σz) / 2`
    pub fn to_density(&self) -> Result<DensityMatrix> {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(0.5 * (1.0 + self.rz), 0.0),
                C64::new(0.5 * self.rx, -0.5 * self.ry),
                C64::new(0.5 * self.rx, 0.5 * self.ry),
                C64::new(0.5 * (1.0 - self.rz), 0.0),
            ],
        );
        DensityMatrix::new(m)
    }
}

/// Where an ensemble came from; decides which closed-form bound applies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnsembleFamily {
    Custom,
    SymmetricPair { theta: f64, xi: f64 },
    BinaryPair { theta: f64, xi: f64, r: f64 },
    Equiphase { m: usize },
    MubMixture { alpha: f64, m: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateEnsemble {
    states: Vec<DensityMatrix>,
    priors: Vec<f64>,
    family: EnsembleFamily,
}

impl StateEnsemble {
    pub fn new(states: Vec<DensityMatrix>, priors: Vec<f64>) -> Result<Self> {
        Self::with_family(states, priors, EnsembleFamily::Custom)
    }

    pub fn with_family(
        states: Vec<DensityMatrix>,
        priors: Vec<f64>,
        family: EnsembleFamily,
    ) -> Result<Self> {
        if states.is_empty() || states.len() != priors.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} states with {} priors",
                states.len(),
                priors.len()
            )));
        }
        let d = states[0].dim();
        if states.iter().any(|s| s.dim() != d) {
            return Err(Error::DimensionMismatch(
                "states of different dimension".into(),
            ));
        }
        if priors.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::InvalidParameter("priors must lie in [0, 1]".into()));
        }
        let total: f64 = priors.iter().sum();
        if (total - 1.0).abs() > PRIOR_TOL {
            return Err(Error::InvalidParameter(format!("priors sum to {total}")));
        }
        Ok(StateEnsemble {
            states,
            priors,
            family,
        })
    }

    fn uniform(states: Vec<DensityMatrix>, family: EnsembleFamily) -> Self {
        let m = states.len();
        StateEnsemble {
            states,
            priors: vec![1.0 / m as f64; m],
            family,
        }
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn family(&self) -> EnsembleFamily {
        self.family
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    /// Same priors, each state transformed; the family tag is dropped.
    pub fn map_states<F>(&self, f: F) -> Result<StateEnsemble>
    where
        F: Fn(&DensityMatrix) -> Result<DensityMatrix>,
    {
        let states = self.states.iter().map(f).collect::<Result<Vec<_>>>()?;
        StateEnsemble::new(states, self.priors.clone())
    }

    /// Relabels states (and their sinks) by `order`.
    pub fn permuted(&self, order: &[usize]) -> Result<StateEnsemble> {
        if order.len() != self.len() {
            return Err(Error::DimensionMismatch("permutation length".into()));
        }
        StateEnsemble::new(
            order.iter().map(|&k| self.states[k].clone()).collect(),
            order.iter().map(|&k| self.priors[k]).collect(),
        )
    }
}

fn ket(amps: &[C64]) -> DVector<C64> {
    DVector::from_column_slice(amps)
}

/// `cosθ|1⟩ ± e^{iξ} sinθ|2⟩` with equal priors.
pub fn symmetric_pure_pair(theta: f64, xi: f64) -> StateEnsemble {
    let (c, s) = (theta.cos(), theta.sin());
    let ph = C64::from_polar(s, xi);
    let a = DensityMatrix::pure(&ket(&[C64::new(c, 0.0), ph])).expect("unit vector");
    let b = DensityMatrix::pure(&ket(&[C64::new(c, 0.0), -ph])).expect("unit vector");
    StateEnsemble::uniform(vec![a, b], EnsembleFamily::SymmetricPair { theta, xi })
}

/// Rescales the Bloch vector of a qubit to length `radius`.
pub fn bloch_shrink(rho: &DensityMatrix, radius: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&radius) {
        return Err(Error::InvalidParameter(format!(
            "radius {radius} outside [0, 1]"
        )));
    }
    let v = BlochVector::of(rho)?;
    let len = v.radius();
    if radius == 0.0 {
        return Ok(DensityMatrix::maximally_mixed(2));
    }
    if len == 0.0 {
        return Err(Error::Degenerate(
            "maximally mixed state has no Bloch direction".into(),
        ));
    }
    let k = radius / len;
    BlochVector::new(v.rx * k, v.ry * k, v.rz * k)?.to_density()
}

/// Pure `cosθ|1⟩ + e^{-iξ} sinθ|2⟩` against the mixed state with Bloch vector
/// `r (-cosξ sin2θ, sinξ sin2θ, cos2θ)`, equal priors.
pub fn pure_mixed_pair(theta: f64, xi: f64, r: f64) -> Result<StateEnsemble> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::InvalidParameter(format!(
            "radius {r} outside [0, 1]"
        )));
    }
    let pure = DensityMatrix::pure(&ket(&[
        C64::new(theta.cos(), 0.0),
        C64::from_polar(theta.sin(), -xi),
    ]))?;
    let s2 = (2.0 * theta).sin();
    let mixed = BlochVector::new(
        -r * xi.cos() * s2,
        r * xi.sin() * s2,
        r * (2.0 * theta).cos(),
    )?
    .to_density()?;
    Ok(StateEnsemble::uniform(
        vec![pure, mixed],
        EnsembleFamily::BinaryPair { theta, xi, r },
    ))
}

/// `(|1⟩ + e^{i2πm/M}|2⟩)/√2` for `m = 1..M`, equal priors.
pub fn equiphase_states(m_states: usize) -> Result<StateEnsemble> {
    if m_states < 2 {
        return Err(Error::InvalidParameter("need at least two states".into()));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let states = (1..=m_states)
        .map(|m| {
            let phase = 2.0 * PI * m as f64 / m_states as f64;
            DensityMatrix::pure(&ket(&[C64::new(h, 0.0), C64::from_polar(h, phase)]))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StateEnsemble::uniform(
        states,
        EnsembleFamily::Equiphase { m: m_states },
    ))
}

/// Binary test pairs `a`–`f` at `θ = π/8`: `a`, `b` pure pairs with relative
/// phase 0 and π/2; `c`, `d` pure-versus-mixed pairs with `ξ = π` and `π/2`;
/// `e`, `f` the pure pairs of `a`, `b` shrunk to Bloch radius ½ (`e` lists the
/// states in swapped order).
pub fn preset_pair(label: char) -> Result<StateEnsemble> {
    let t = std::f64::consts::PI / 8.0;
    let half_pi = std::f64::consts::FRAC_PI_2;
    let shrunk = |e: StateEnsemble, order: [usize; 2]| -> Result<StateEnsemble> {
        let s = e.states();
        StateEnsemble::new(
            vec![
                bloch_shrink(&s[order[0]], 0.5)?,
                bloch_shrink(&s[order[1]], 0.5)?,
            ],
            vec![0.5, 0.5],
        )
    };
    match label {
        'a' => Ok(symmetric_pure_pair(t, 0.0)),
        'b' => Ok(symmetric_pure_pair(t, half_pi)),
        'c' => pure_mixed_pair(t, std::f64::consts::PI, 0.5),
        'd' => pure_mixed_pair(t, half_pi, 0.5),
        'e' => shrunk(symmetric_pure_pair(t, 0.0), [1, 0]),
        'f' => shrunk(symmetric_pure_pair(t, half_pi), [0, 1]),
        _ => Err(Error::InvalidParameter(format!(
            "no preset `{label}`, expected a-f"
        ))),
    }
}

/// `α|φ_m⟩⟨φ_m| + (1-α) I/M` over the Fourier basis
/// `|φ_m⟩ = Σ_k e^{-i2πmk/M}|k⟩/√M`.
pub fn mub_mixture(alpha: f64, m_states: usize) -> Result<StateEnsemble> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!(
            "alpha {alpha} outside [0, 1]"
        )));
    }
    if m_states < 2 {
        return Err(Error::InvalidParameter("need at least two states".into()));
    }
    let mm = m_states as f64;
    let mixed =
        DMatrix::from_diagonal_element(m_states, m_states, C64::new((1.0 - alpha) / mm, 0.0));
    let states = (1..=m_states)
        .map(|m| {
            let phi = DVector::from_iterator(
                m_states,
                (1..=m_states)
                    .map(|k| C64::from_polar(1.0 / mm.sqrt(), -2.0 * PI * (m * k) as f64 / mm)),
            );
            DensityMatrix::new(&phi * phi.adjoint() * C64::new(alpha, 0.0) + &mixed)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StateEnsemble::uniform(
        states,
        EnsembleFamily::MubMixture { alpha, m: m_states },
    ))
}

fn check_binary(rho1: &DensityMatrix, rho2: &DensityMatrix, p1: f64, p2: f64) -> Result<()> {
    if rho1.dim() != rho2.dim() {
        return Err(Error::DimensionMismatch(
            "states of different dimension".into(),
        ));
    }
    if p1 < 0.0 || p2 < 0.0 || (p1 + p2 - 1.0).abs() > PRIOR_TOL {
        return Err(Error::InvalidParameter(format!("priors {p1}, {p2}")));
    }
    Ok(())
}

/// `½ (1 + ‖p₁ρ₁ − p₂ρ₂‖₁)`.
pub fn helstrom_binary(
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    p1: f64,
    p2: f64,
) -> Result<f64> {
    check_binary(rho1, rho2, p1, p2)?;
    let diff = rho1.matrix() * C64::new(p1, 0.0) - rho2.matrix() * C64::new(p2, 0.0);
    let diff = (&diff + diff.adjoint()) * C64::new(0.5, 0.0);
    Ok(0.5 * (1.0 + hermitian_trace_norm(&diff)))
}

/// Helstrom bound after discarding every coherence.
pub fn classical_helstrom(
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    p1: f64,
    p2: f64,
) -> Result<f64> {
    helstrom_binary(&rho1.dephased(), &rho2.dephased(), p1, p2)
}

/// The qubit state with its `ry` Bloch component set to zero.
pub fn ry_zeroed(rho: &DensityMatrix) -> Result<DensityMatrix> {
    let v = BlochVector::of(rho)?;
    BlochVector::new(v.rx, 0.0, v.rz)?.to_density()
}

pub fn helstrom_ensemble(ensemble: &StateEnsemble) -> Result<f64> {
    if ensemble.len() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "Helstrom bound needs two states, got {}",
            ensemble.len()
        )));
    }
    let (s, p) = (ensemble.states(), ensemble.priors());
    helstrom_binary(&s[0], &s[1], p[0], p[1])
}

/// Success probability of the square-root measurement
/// `Π_m = p_m ρ̄^{-1/2} ρ_m ρ̄^{-1/2}`, inverse taken on the support of `ρ̄`.
pub fn square_root_measurement_pc(ensemble: &StateEnsemble) -> Result<f64> {
    let d = ensemble.dim();
    let mut avg = DMatrix::<C64>::zeros(d, d);
    for (rho, &p) in ensemble.states().iter().zip(ensemble.priors()) {
        avg += rho.matrix() * C64::new(p, 0.0);
    }
    let eig = avg.symmetric_eigen();
    let mut inv_sqrt = DMatrix::<C64>::zeros(d, d);
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam > 1e-12 {
            let v = eig.eigenvectors.column(k);
            inv_sqrt += v * v.adjoint() * C64::new(1.0 / lam.sqrt(), 0.0);
        }
    }
    let pc = ensemble
        .states()
        .iter()
        .zip(ensemble.priors())
        .map(|(rho, &p)| {
            let pi = &inv_sqrt * rho.matrix() * &inv_sqrt * C64::new(p, 0.0);
            p * (rho.matrix() * pi).trace().re
        })
        .sum();
    Ok(pc)
}

/// Optimal success probability for the recognised symmetric families.
///
/// Binary ensembles use the Helstrom bound. Equiphase qubits are pure and
/// geometrically uniform, so the square-root measurement is optimal and gives
/// `2/M` for `M ≥ 3`. The Fourier-basis mixtures commute with each other;
/// measuring in that basis is optimal and gives `α + (1-α)/M`.
pub fn symmetric_mary_bound(ensemble: &StateEnsemble) -> Result<f64> {
    if ensemble.len() == 2 {
        return helstrom_ensemble(ensemble);
    }
    match ensemble.family() {
        EnsembleFamily::Equiphase { .. } => square_root_measurement_pc(ensemble),
        EnsembleFamily::MubMixture { alpha, m } => Ok(alpha + (1.0 - alpha) / m as f64),
        _ => Err(Error::UnsupportedEnsemble),
    }
}

/// Sink projectors plus the inconclusive projector on the rest of the nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSetup {
    n_total: usize,
    sinks: Vec<usize>,
}

impl MeasurementSetup {
    pub fn new(topology: &Topology) -> Self {
        MeasurementSetup {
            n_total: topology.n_total,
            sinks: topology.sink_pairs.iter().map(|&(_, s)| s).collect(),
        }
    }

    pub fn sink_projectors(&self) -> Vec<DMatrix<C64>> {
        self.sinks
            .iter()
            .map(|&s| {
                let mut m = DMatrix::zeros(self.n_total, self.n_total);
                m[(s, s)] = C64::new(1.0, 0.0);
                m
            })
            .collect()
    }

    pub fn inconclusive(&self) -> DMatrix<C64> {
        let mut m = DMatrix::identity(self.n_total, self.n_total);
        for &s in &self.sinks {
            m[(s, s)] = C64::new(0.0, 0.0);
        }
        m
    }

    /// `tr(Π ρ)` for every sink projector, then the inconclusive outcome.
    pub fn probabilities(&self, rho: &DensityMatrix) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .sinks
            .iter()
            .map(|&s| rho.matrix()[(s, s)].re)
            .collect();
        out.push((self.inconclusive() * rho.matrix()).trace().re);
        out
    }
}

/// Checks that an ensemble can be scored on a topology's input layer and sinks.
pub fn check_fits(topology: &Topology, ensemble: &StateEnsemble) -> Result<()> {
    if ensemble.len() > topology.n_sinks() {
        return Err(Error::DimensionMismatch(format!(
            "{} states need as many sinks, the model has {}",
            ensemble.len(),
            topology.n_sinks()
        )));
    }
    let inputs = topology.input_nodes().len();
    if ensemble.dim() > inputs {
        return Err(Error::DimensionMismatch(format!(
            "{}-level states do not fit on {inputs} input nodes",
            ensemble.dim()
        )));
    }
    Ok(())
}

/// `Σ p_m ρ^{(m)}_{s_m s_m}(τ)`: state `m` is scored on sink `m`.
pub fn network_pc(
    topology: &Topology,
    ham: &Hamiltonian,
    trans: &TransitionMatrix,
    p: f64,
    tau: f64,
    ensemble: &StateEnsemble,
) -> Result<f64> {
    network_pc_with_gamma(topology, ham, trans, p, 1.0, tau, ensemble)
}

pub fn network_pc_with_gamma(
    topology: &Topology,
    ham: &Hamiltonian,
    trans: &TransitionMatrix,
    p: f64,
    gamma: f64,
    tau: f64,
    ensemble: &StateEnsemble,
) -> Result<f64> {
    check_fits(topology, ensemble)?;
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!("tau = {tau}")));
    }
    crate::qdynamics::check_parameters(topology, ham, trans)?;
    let readout = SinkReadout::new(topology, p, gamma)?;
    let pairs: Vec<(f64, &DensityMatrix)> = ensemble
        .priors()
        .iter()
        .copied()
        .zip(ensemble.states())
        .collect();
    let scored = readout.score(&pairs)?;
    let pc = readout.pc(ham.matrix(), trans.matrix(), tau, &scored)?;
    Ok(pc.clamp(0.0, 1.0))
}
