//! Quantum stochastic walk dynamics with absorbing sinks.
//!
//! The density matrix lives on every node, sinks included, and is stacked
//! column-wise: entry `(r, c)` of an `n × n` matrix sits at `r + n c`, so that
//! `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.
//!
//! The generator is
//!
//! ```text
//! L̃ = -(1-p) i (I⊗H - Hᵀ⊗I)
//!     + p Σ T_ij [E_ij⊗E_ij - ½ (I⊗E_jj + E_jj⊗I)]
//!     + Γ Σ_k [2 E_{s_k,k}⊗E_{s_k,k} - I⊗E_kk - E_kk⊗I]
//! ```
//!
//! where `k` runs over sinker nodes and `s_k` is the sink fed by `k`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{expm, expm_frechet, hermitian_eigenvalues};
use crate::topology::Topology;

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-9;
const PSD_TOL: f64 = 1e-9;
const STOCHASTIC_TOL: f64 = 1e-9;

fn check_mask(topology: &Topology, m: &DMatrix<f64>, what: &'static str) -> Result<()> {
    let n = topology.n_network;
    if m.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "{what} is {}x{}, the network has {n} nodes",
            m.nrows(),
            m.ncols()
        )));
    }
    for j in 0..n {
        for i in 0..n {
            if !topology.mask[(i, j)] && m[(i, j)] != 0.0 {
                return Err(Error::MaskViolation {
                    what,
                    row: i,
                    col: j,
                });
            }
        }
    }
    Ok(())
}

/// Checks that `(H, T)` live on the topology's links.
pub fn check_parameters(
    topology: &Topology,
    ham: &Hamiltonian,
    trans: &TransitionMatrix,
) -> Result<()> {
    check_mask(topology, ham.matrix(), "hamiltonian")?;
    check_mask(topology, trans.matrix(), "transition matrix")
}

/// Real symmetric hopping rates over the non-sink nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian(DMatrix<f64>);

impl Hamiltonian {
    pub fn new(topology: &Topology, h: DMatrix<f64>) -> Result<Self> {
        check_mask(topology, &h, "hamiltonian")?;
        if h != h.transpose() {
            return Err(Error::InvalidParameter(
                "hamiltonian is not symmetric".into(),
            ));
        }
        if h.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "hamiltonian has non-finite entries".into(),
            ));
        }
        Ok(Hamiltonian(h))
    }

    pub fn zeros(topology: &Topology) -> Self {
        Hamiltonian(DMatrix::zeros(topology.n_network, topology.n_network))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

/// Column-stochastic incoherent hopping probabilities over the non-sink nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix(DMatrix<f64>);

impl TransitionMatrix {
    pub fn new(topology: &Topology, t: DMatrix<f64>) -> Result<Self> {
        check_mask(topology, &t, "transition matrix")?;
        for (j, col) in t.column_iter().enumerate() {
            if col.iter().any(|&x| !(-1e-12..=1.0 + 1e-12).contains(&x)) {
                return Err(Error::InvalidParameter(format!(
                    "transition column {j} has entries outside [0, 1]"
                )));
            }
            if (col.sum() - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::InvalidParameter(format!(
                    "transition column {j} sums to {}",
                    col.sum()
                )));
            }
        }
        Ok(TransitionMatrix(t))
    }

    /// Classical random walk on the topology, `A D⁻¹`.
    pub fn classical(topology: &Topology) -> Self {
        TransitionMatrix(
            crate::topology::classical_transition_from_adjacency(&topology.mask)
                .expect("layered topologies have no isolated nodes"),
        )
    }

    /// No incoherent hopping at all. Not column-stochastic; only meaningful
    /// as a degenerate reference network.
    pub fn zeros(topology: &Topology) -> Self {
        TransitionMatrix(DMatrix::zeros(topology.n_network, topology.n_network))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(DMatrix<C64>);

impl DensityMatrix {
    pub fn new(rho: DMatrix<C64>) -> Result<Self> {
        if !rho.is_square() {
            return Err(Error::InvalidState("not square".into()));
        }
        if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite entries".into()));
        }
        let herm = (&rho - rho.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (residual {herm:.3e})"
            )));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        let min_ev = hermitian_eigenvalues(&rho)[0];
        if min_ev < -PSD_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min_ev:.3e}"
            )));
        }
        Ok(DensityMatrix(rho))
    }

    pub fn pure(psi: &DVector<C64>) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let psi = psi / C64::new(norm, 0.0);
        DensityMatrix::new(&psi * psi.adjoint())
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        m[(k, k)] = C64::new(1.0, 0.0);
        DensityMatrix(m)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix(DMatrix::from_diagonal_element(
            dim,
            dim,
            C64::new(1.0 / dim as f64, 0.0),
        ))
    }

    /// Evolved states are not re-validated; the generator guarantees the
    /// invariants up to roundoff.
    pub(crate) fn from_raw(rho: DMatrix<C64>) -> Self {
        DensityMatrix(rho)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    /// Places the state on the first `self.dim()` nodes of an `n`-node space.
    pub fn embed(&self, n: usize) -> Result<DensityMatrix> {
        let d = self.dim();
        if d > n {
            return Err(Error::DimensionMismatch(format!(
                "cannot embed a {d}-level state in {n} nodes"
            )));
        }
        let mut m = DMatrix::zeros(n, n);
        m.view_mut((0, 0), (d, d)).copy_from(&self.0);
        Ok(DensityMatrix(m))
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0);
        hermitian_eigenvalues(&herm)[0]
    }

    pub fn purity(&self) -> f64 {
        (&self.0 * &self.0).trace().re
    }

    /// Zeroes every off-diagonal entry.
    pub fn dephased(&self) -> DensityMatrix {
        DensityMatrix(DMatrix::from_diagonal(&self.0.diagonal()))
    }
}

/// `vec` index of entry `(r, c)` of an `n × n` matrix.
#[inline]
pub fn vec_index(n: usize, r: usize, c: usize) -> usize {
    r + n * c
}

pub fn vectorize(m: &DMatrix<C64>) -> DVector<C64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &DVector<C64>, n: usize) -> DMatrix<C64> {
    DMatrix::from_column_slice(n, n, v.as_slice())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Liouvillian {
    pub l_tilde: DMatrix<C64>,
    pub p: f64,
    pub gamma: f64,
    pub n_total: usize,
}

fn check_rates(p: f64, gamma: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "p = {p} is outside [0, 1]"
        )));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "gamma = {gamma} must be positive"
        )));
    }
    Ok(())
}

pub fn build_liouvillian(
    topology: &Topology,
    ham: &Hamiltonian,
    trans: &TransitionMatrix,
    p: f64,
    gamma: f64,
) -> Result<Liouvillian> {
    check_rates(p, gamma)?;
    check_parameters(topology, ham, trans)?;
    let n = topology.n_total;
    let nn = topology.n_network;
    let h = ham.matrix();
    let t = trans.matrix();
    let mut l = DMatrix::<C64>::zeros(n * n, n * n);
    let coh = C64::new(0.0, -(1.0 - p));

    // -(1-p) i (I⊗H - Hᵀ⊗I)
    for c in 0..n {
        for r in 0..nn {
            for k in 0..nn {
                let hv = h[(r, k)];
                if hv != 0.0 {
                    l[(vec_index(n, r, c), vec_index(n, k, c))] += coh * hv;
                    l[(vec_index(n, c, r), vec_index(n, c, k))] -= coh * h[(k, r)];
                }
            }
        }
    }

    // p Σ T_ij [E_ij⊗E_ij - ½(I⊗E_jj + E_jj⊗I)]
    if p > 0.0 {
        for j in 0..nn {
            for i in 0..nn {
                let tv = t[(i, j)];
                if tv == 0.0 {
                    continue;
                }
                l[(vec_index(n, i, i), vec_index(n, j, j))] += C64::new(p * tv, 0.0);
                for c in 0..n {
                    l[(vec_index(n, j, c), vec_index(n, j, c))] -= C64::new(0.5 * p * tv, 0.0);
                    l[(vec_index(n, c, j), vec_index(n, c, j))] -= C64::new(0.5 * p * tv, 0.0);
                }
            }
        }
    }

    // Γ Σ [2 E_{s,k}⊗E_{s,k} - I⊗E_kk - E_kk⊗I]
    for &(k, s) in &topology.sink_pairs {
        l[(vec_index(n, s, s), vec_index(n, k, k))] += C64::new(2.0 * gamma, 0.0);
        for c in 0..n {
            l[(vec_index(n, k, c), vec_index(n, k, c))] -= C64::new(gamma, 0.0);
            l[(vec_index(n, c, k), vec_index(n, c, k))] -= C64::new(gamma, 0.0);
        }
    }

    Ok(Liouvillian {
        l_tilde: l,
        p,
        gamma,
        n_total: n,
    })
}

/// Coordinate of the real representation of a Hermitian matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RealCoord {
    /// `ρ_mm`
    Diag(usize),
    /// `Re ρ_mn`, `m < n`
    Re(usize, usize),
    /// `Im ρ_mn`, `m < n`
    Im(usize, usize),
}

impl RealCoord {
    /// Diagonals first, then real parts, then imaginary parts, pairs in
    /// lexicographic order.
    pub fn ordering(n: usize) -> Vec<RealCoord> {
        let mut out: Vec<RealCoord> = (0..n).map(RealCoord::Diag).collect();
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|m| (m + 1..n).map(move |k| (m, k)))
            .collect();
        out.extend(pairs.iter().map(|&(m, k)| RealCoord::Re(m, k)));
        out.extend(pairs.iter().map(|&(m, k)| RealCoord::Im(m, k)));
        out
    }

    /// Column of `P⁻¹`: the Hermitian basis matrix for this coordinate, as
    /// `(row, col, value)` entries.
    pub fn basis(self) -> Vec<(usize, usize, C64)> {
        match self {
            RealCoord::Diag(m) => vec![(m, m, C64::new(1.0, 0.0))],
            RealCoord::Re(m, k) => vec![(m, k, C64::new(1.0, 0.0)), (k, m, C64::new(1.0, 0.0))],
            RealCoord::Im(m, k) => vec![(m, k, C64::new(0.0, 1.0)), (k, m, C64::new(0.0, -1.0))],
        }
    }

    /// Row of `P`: the functional extracting this coordinate.
    pub fn dual(self) -> Vec<(usize, usize, C64)> {
        match self {
            RealCoord::Diag(m) => vec![(m, m, C64::new(1.0, 0.0))],
            RealCoord::Re(m, k) => vec![(m, k, C64::new(0.5, 0.0)), (k, m, C64::new(0.5, 0.0))],
            RealCoord::Im(m, k) => vec![(m, k, C64::new(0.0, -0.5)), (k, m, C64::new(0.0, 0.5))],
        }
    }

    pub fn read(self, x: &DMatrix<C64>) -> C64 {
        self.dual().iter().map(|&(r, c, w)| w * x[(r, c)]).sum()
    }

    pub fn label(self) -> String {
        match self {
            RealCoord::Diag(m) => format!("rho{},{}", m + 1, m + 1),
            RealCoord::Re(m, k) => format!("a{},{}", m + 1, k + 1),
            RealCoord::Im(m, k) => format!("b{},{}", m + 1, k + 1),
        }
    }
}

/// `r = P vec(ρ)`.
pub fn to_real_coords(rho: &DMatrix<C64>) -> DVector<f64> {
    let coords = RealCoord::ordering(rho.nrows());
    DVector::from_iterator(coords.len(), coords.iter().map(|c| c.read(rho).re))
}

/// `ρ = unvec(P⁻¹ r)`.
pub fn from_real_coords(r: &DVector<f64>, n: usize) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(n, n);
    for (coord, &x) in RealCoord::ordering(n).iter().zip(r.iter()) {
        for (i, j, w) in coord.basis() {
            m[(i, j)] += w * x;
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealBlockForm {
    pub matrix: DMatrix<f64>,
    pub coords: Vec<RealCoord>,
}

/// `𝓛 = P L̃ P⁻¹` in the [`RealCoord::ordering`] basis.
pub fn real_block_form(liouvillian: &Liouvillian) -> RealBlockForm {
    let n = liouvillian.n_total;
    let coords = RealCoord::ordering(n);
    let dim = coords.len();
    let l = &liouvillian.l_tilde;
    let mut out = DMatrix::zeros(dim, dim);
    let mut col = DVector::<C64>::zeros(n * n);
    for (q, coord) in coords.iter().enumerate() {
        col.fill(C64::new(0.0, 0.0));
        for (r, c, w) in coord.basis() {
            col.axpy(w, &l.column(vec_index(n, r, c)), C64::new(1.0, 0.0));
        }
        let img = unvectorize(&col, n);
        for (k, row) in coords.iter().enumerate() {
            out[(k, q)] = row.read(&img).re;
        }
    }
    RealBlockForm {
        matrix: out,
        coords,
    }
}

/// `ρ(τ) = unvec(exp(τ L̃) vec(ρ₀))`.
pub fn evolve(liouvillian: &Liouvillian, rho0: &DensityMatrix, tau: f64) -> Result<DensityMatrix> {
    let n = liouvillian.n_total;
    if rho0.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "state has dimension {}, generator acts on {n} nodes",
            rho0.dim()
        )));
    }
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!("tau = {tau}")));
    }
    if tau == 0.0 {
        return Ok(rho0.clone());
    }
    let prop = propagator(liouvillian, tau)?;
    apply_propagator(&prop, rho0, n)
}

/// `exp(τ L̃)`.
pub fn propagator(liouvillian: &Liouvillian, tau: f64) -> Result<DMatrix<C64>> {
    let scaled = &liouvillian.l_tilde * C64::new(tau, 0.0);
    let prop = expm(&scaled).ok_or_else(|| Error::Numerical("matrix exponential failed".into()))?;
    if prop.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("propagator has non-finite entries".into()));
    }
    Ok(prop)
}

fn apply_propagator(prop: &DMatrix<C64>, rho: &DensityMatrix, n: usize) -> Result<DensityMatrix> {
    let v = prop * vectorize(rho.matrix());
    if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical(
            "evolved state has non-finite entries".into(),
        ));
    }
    Ok(DensityMatrix::from_raw(unvectorize(&v, n)))
}

/// States at `0, dt, 2dt, …, steps·dt`, stepping one fixed propagator.
pub fn trajectory(
    liouvillian: &Liouvillian,
    rho0: &DensityMatrix,
    dt: f64,
    steps: usize,
) -> Result<Vec<DensityMatrix>> {
    let n = liouvillian.n_total;
    let prop = propagator(liouvillian, dt)?;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(rho0.clone());
    for _ in 0..steps {
        let next = apply_propagator(&prop, out.last().unwrap(), n)?;
        out.push(next);
    }
    Ok(out)
}

pub fn sink_populations(rho_tau: &DensityMatrix, topology: &Topology) -> Vec<f64> {
    topology
        .sink_pairs
        .iter()
        .map(|&(_, s)| rho_tau.matrix()[(s, s)].re)
        .collect()
}

/// The generator in operator form, applied to sparse matrices.
#[derive(Debug, Clone)]
struct GeneratorTerms<'a> {
    h: &'a DMatrix<f64>,
    t: &'a DMatrix<f64>,
    /// `Σ_i T_ij`, network columns only.
    out_weight: Vec<f64>,
    /// `Γ` on sinker nodes, zero elsewhere.
    sinker_rate: Vec<f64>,
    sink_of: Vec<Option<usize>>,
    p: f64,
    gamma: f64,
}

impl<'a> GeneratorTerms<'a> {
    fn new(
        n: usize,
        sink_pairs: &[(usize, usize)],
        h: &'a DMatrix<f64>,
        t: &'a DMatrix<f64>,
        p: f64,
        gamma: f64,
    ) -> Self {
        let nn = h.nrows();
        let mut out_weight = vec![0.0; n];
        for (j, w) in out_weight.iter_mut().enumerate().take(nn) {
            *w = t.column(j).sum();
        }
        let mut sinker_rate = vec![0.0; n];
        let mut sink_of = vec![None; n];
        for &(k, s) in sink_pairs {
            sinker_rate[k] = gamma;
            sink_of[k] = Some(s);
        }
        GeneratorTerms {
            h,
            t,
            out_weight,
            sinker_rate,
            sink_of,
            p,
            gamma,
        }
    }

    /// Adds `𝓛(X)` to `out` for `X = Σ val E_rc`.
    fn apply(&self, entries: &[(usize, usize, C64)], out: &mut DMatrix<C64>) {
        let nn = self.h.nrows();
        let coh = C64::new(0.0, -(1.0 - self.p));
        for &(r, c, val) in entries {
            if self.p < 1.0 {
                // H X: column c gains H[:, r] val; X H: row r gains val H[c, :]
                if r < nn {
                    for i in 0..nn {
                        let hv = self.h[(i, r)];
                        if hv != 0.0 {
                            out[(i, c)] += coh * hv * val;
                        }
                    }
                }
                if c < nn {
                    for j in 0..nn {
                        let hv = self.h[(c, j)];
                        if hv != 0.0 {
                            out[(r, j)] -= coh * hv * val;
                        }
                    }
                }
            }
            let decay = 0.5 * self.p * (self.out_weight[r] + self.out_weight[c])
                + self.sinker_rate[r]
                + self.sinker_rate[c];
            out[(r, c)] -= val * decay;
            if r == c {
                if self.p > 0.0 && r < nn {
                    for i in 0..nn {
                        let tv = self.t[(i, r)];
                        if tv != 0.0 {
                            out[(i, i)] += val * (self.p * tv);
                        }
                    }
                }
                if let Some(s) = self.sink_of[r] {
                    out[(s, s)] += val * (2.0 * self.gamma);
                }
            }
        }
    }
}

/// Exact sink readout on the invariant subspace that matters for
/// discrimination: every diagonal (sinks included) plus the coherences among
/// network nodes. Coherences touching a sink never feed back and are dropped.
#[derive(Debug, Clone)]
pub struct SinkReadout {
    n_total: usize,
    n_network: usize,
    sink_pairs: Vec<(usize, usize)>,
    p: f64,
    gamma: f64,
    coords: Vec<RealCoord>,
}

/// A prior-weighted state in reduced coordinates, scored on sink `target`.
#[derive(Debug, Clone)]
pub struct ScoredState {
    pub prior: f64,
    pub coords: DVector<f64>,
    pub target: usize,
}

impl SinkReadout {
    pub fn new(topology: &Topology, p: f64, gamma: f64) -> Result<Self> {
        check_rates(p, gamma)?;
        let n = topology.n_total;
        let nn = topology.n_network;
        let mut coords: Vec<RealCoord> = (0..n).map(RealCoord::Diag).collect();
        let pairs: Vec<(usize, usize)> = (0..nn)
            .flat_map(|m| (m + 1..nn).map(move |k| (m, k)))
            .collect();
        coords.extend(pairs.iter().map(|&(m, k)| RealCoord::Re(m, k)));
        coords.extend(pairs.iter().map(|&(m, k)| RealCoord::Im(m, k)));
        Ok(SinkReadout {
            n_total: n,
            n_network: nn,
            sink_pairs: topology.sink_pairs.clone(),
            p,
            gamma,
            coords,
        })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[RealCoord] {
        &self.coords
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Reduced coordinates of a state supported on the first nodes.
    pub fn encode(&self, rho: &DensityMatrix) -> Result<DVector<f64>> {
        let d = rho.dim();
        if d > self.n_network {
            return Err(Error::DimensionMismatch(format!(
                "a {d}-level state does not fit on {} network nodes",
                self.n_network
            )));
        }
        let m = rho.matrix();
        let read = |r: usize, c: usize| {
            if r < d && c < d {
                m[(r, c)]
            } else {
                C64::new(0.0, 0.0)
            }
        };
        Ok(DVector::from_iterator(
            self.dim(),
            self.coords.iter().map(|coord| match *coord {
                RealCoord::Diag(k) => read(k, k).re,
                RealCoord::Re(a, b) => 0.5 * (read(a, b) + read(b, a)).re,
                RealCoord::Im(a, b) => 0.5 * (read(a, b) - read(b, a)).im,
            }),
        ))
    }

    pub fn score(&self, states: &[(f64, &DensityMatrix)]) -> Result<Vec<ScoredState>> {
        if states.len() > self.sink_pairs.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} states but only {} sinks",
                states.len(),
                self.sink_pairs.len()
            )));
        }
        states
            .iter()
            .enumerate()
            .map(|(m, &(prior, rho))| {
                Ok(ScoredState {
                    prior,
                    coords: self.encode(rho)?,
                    target: m,
                })
            })
            .collect()
    }

    fn check(&self, h: &DMatrix<f64>, t: &DMatrix<f64>) -> Result<()> {
        let nn = self.n_network;
        if h.shape() != (nn, nn) || t.shape() != (nn, nn) {
            return Err(Error::DimensionMismatch(format!(
                "parameters must be {nn}x{nn}"
            )));
        }
        Ok(())
    }

    /// Reduced real generator `G` for `(H, T)`.
    pub fn generator(&self, h: &DMatrix<f64>, t: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check(h, t)?;
        let terms = GeneratorTerms::new(self.n_total, &self.sink_pairs, h, t, self.p, self.gamma);
        let dim = self.dim();
        let mut g = DMatrix::zeros(dim, dim);
        let mut img = DMatrix::<C64>::zeros(self.n_total, self.n_total);
        for (q, coord) in self.coords.iter().enumerate() {
            img.fill(C64::new(0.0, 0.0));
            terms.apply(&coord.basis(), &mut img);
            for (k, row) in self.coords.iter().enumerate() {
                g[(k, q)] = row.read(&img).re;
            }
        }
        Ok(g)
    }

    fn sink_coord(&self, target: usize) -> usize {
        self.sink_pairs[target].1
    }

    /// Sink populations at `τ` from a reduced initial vector.
    pub fn populations(
        &self,
        h: &DMatrix<f64>,
        t: &DMatrix<f64>,
        tau: f64,
        x0: &DVector<f64>,
    ) -> Result<Vec<f64>> {
        let g = self.generator(h, t)?;
        let e =
            expm(&(g * tau)).ok_or_else(|| Error::Numerical("matrix exponential failed".into()))?;
        let x = e * x0;
        Ok((0..self.sink_pairs.len())
            .map(|m| x[self.sink_coord(m)])
            .collect())
    }

    /// Row `m` maps reduced initial coordinates to the population of sink `m`
    /// at `τ`.
    pub fn sink_rows(&self, h: &DMatrix<f64>, t: &DMatrix<f64>, tau: f64) -> Result<DMatrix<f64>> {
        let g = self.generator(h, t)?;
        let e =
            expm(&(g * tau)).ok_or_else(|| Error::Numerical("matrix exponential failed".into()))?;
        let m = self.sink_pairs.len();
        Ok(DMatrix::from_fn(m, self.dim(), |r, c| {
            e[(self.sink_coord(r), c)]
        }))
    }

    /// `Σ prior · population(target sink)` at `τ`.
    pub fn pc(
        &self,
        h: &DMatrix<f64>,
        t: &DMatrix<f64>,
        tau: f64,
        states: &[ScoredState],
    ) -> Result<f64> {
        let g = self.generator(h, t)?;
        let e =
            expm(&(g * tau)).ok_or_else(|| Error::Numerical("matrix exponential failed".into()))?;
        let pc = states
            .iter()
            .map(|s| s.prior * e.row(self.sink_coord(s.target)).dot(&s.coords.transpose()))
            .sum::<f64>();
        if !pc.is_finite() {
            return Err(Error::Numerical("non-finite probability".into()));
        }
        Ok(pc)
    }

    /// Probability of correct decision together with its derivatives with
    /// respect to every `H_ij = H_ji` (stored symmetrically) and every `T_ij`.
    pub fn pc_and_gradient(
        &self,
        h: &DMatrix<f64>,
        t: &DMatrix<f64>,
        tau: f64,
        states: &[ScoredState],
    ) -> Result<(f64, DMatrix<f64>, DMatrix<f64>)> {
        let g = self.generator(h, t)?;
        let dim = self.dim();
        let mut c = DMatrix::zeros(dim, dim);
        for s in states {
            let col = self.sink_coord(s.target);
            for k in 0..dim {
                c[(k, col)] += s.prior * s.coords[k];
            }
        }
        let (e, y) = expm_frechet(&(g * tau), &(&c * tau))
            .ok_or_else(|| Error::Numerical("matrix exponential failed".into()))?;
        let pc = (e.transpose().component_mul(&c)).sum();
        if !pc.is_finite() || y.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical("non-finite gradient".into()));
        }

        // Ỹ = P⁻¹ Y P over vec indices
        let n = self.n_total;
        let mut yt = DMatrix::<C64>::zeros(n * n, n * n);
        let bases: Vec<_> = self.coords.iter().map(|c| c.basis()).collect();
        let duals: Vec<_> = self.coords.iter().map(|c| c.dual()).collect();
        for l in 0..dim {
            for k in 0..dim {
                let v = y[(k, l)];
                if v == 0.0 {
                    continue;
                }
                for &(r1, c1, w1) in &bases[k] {
                    for &(r2, c2, w2) in &duals[l] {
                        yt[(vec_index(n, r1, c1), vec_index(n, r2, c2))] += w1 * w2 * v;
                    }
                }
            }
        }

        let nn = self.n_network;
        let mut gh = DMatrix::zeros(nn, nn);
        if self.p < 1.0 {
            for i in 0..nn {
                for j in i + 1..nn {
                    let mut left = C64::new(0.0, 0.0);
                    let mut right = C64::new(0.0, 0.0);
                    for q in 0..n {
                        left += yt[(vec_index(n, j, q), vec_index(n, i, q))]
                            + yt[(vec_index(n, i, q), vec_index(n, j, q))];
                        right += yt[(vec_index(n, q, j), vec_index(n, q, i))]
                            + yt[(vec_index(n, q, i), vec_index(n, q, j))];
                    }
                    let d = (C64::new(0.0, -(1.0 - self.p)) * (left - right)).re;
                    gh[(i, j)] = d;
                    gh[(j, i)] = d;
                }
            }
        }
        let mut gt = DMatrix::zeros(nn, nn);
        if self.p > 0.0 {
            for j in 0..nn {
                let mut loss = C64::new(0.0, 0.0);
                for q in 0..n {
                    loss += yt[(vec_index(n, j, q), vec_index(n, j, q))]
                        + yt[(vec_index(n, q, j), vec_index(n, q, j))];
                }
                for i in 0..nn {
                    if i == j {
                        continue;
                    }
                    let gain = yt[(vec_index(n, j, j), vec_index(n, i, i))];
                    gt[(i, j)] = (self.p * (gain - loss * 0.5)).re;
                }
            }
        }
        Ok((pc, gh, gt))
    }
}
