//! Python module `qswd`. Matrices cross the boundary as nested lists,
//! density matrices with complex entries.

use nalgebra::DMatrix;
use num_complex::Complex64;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

use qswd_core::analytic;
use qswd_core::optimizer::{self, OptimizerConfig};
use qswd_core::qdynamics::{self, DensityMatrix, Hamiltonian, TransitionMatrix};
use qswd_core::robustness::{self, McConfig, NoiseKind, NominalPair};
use qswd_core::states;
use qswd_core::topology::{build_topology, ModelSpec};

fn err(e: qswd_core::Error) -> PyErr {
    match e {
        qswd_core::Error::Numerical(_) => PyArithmeticError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn matrix<T: Copy + nalgebra::Scalar>(rows: &[Vec<T>]) -> PyResult<DMatrix<T>> {
    let n = rows.len();
    if rows
        .iter()
        .any(|r| r.len() != rows.first().map_or(0, Vec::len))
    {
        return Err(PyValueError::new_err("rows have different lengths"));
    }
    let m = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn rows<T: Copy + nalgebra::Scalar>(m: &DMatrix<T>) -> Vec<Vec<T>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

#[pyclass(name = "Topology", frozen)]
struct PyTopology(qswd_core::topology::Topology);

#[pymethods]
impl PyTopology {
    #[new]
    fn new(model: &str) -> PyResult<Self> {
        let spec: ModelSpec = model.parse().map_err(err)?;
        Ok(PyTopology(build_topology(&spec)))
    }

    #[getter]
    fn model(&self) -> String {
        self.0.spec().to_string()
    }

    #[getter]
    fn n_total(&self) -> usize {
        self.0.n_total
    }

    #[getter]
    fn n_network(&self) -> usize {
        self.0.n_network
    }

    #[getter]
    fn n_sinks(&self) -> usize {
        self.0.n_sinks()
    }

    /// Undirected coherent links `(i, j)`, `i < j`.
    #[getter]
    fn links(&self) -> Vec<(usize, usize)> {
        self.0.links()
    }

    /// Directed incoherent arcs `(from, to)`.
    #[getter]
    fn arcs(&self) -> Vec<(usize, usize)> {
        self.0.arcs()
    }

    #[getter]
    fn sink_pairs(&self) -> Vec<(usize, usize)> {
        self.0.sink_pairs.clone()
    }

    /// Column-stochastic classical random walk on the network.
    fn classical_transition(&self) -> Vec<Vec<f64>> {
        rows(TransitionMatrix::classical(&self.0).matrix())
    }

    fn __repr__(&self) -> String {
        format!("Topology('{}')", self.0.spec())
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }
}

#[pyclass(name = "Ensemble", frozen)]
struct PyEnsemble(states::StateEnsemble);

#[pymethods]
impl PyEnsemble {
    /// Arbitrary states with priors summing to one.
    #[new]
    fn new(states: Vec<Vec<Vec<Complex64>>>, priors: Vec<f64>) -> PyResult<Self> {
        let rhos = states
            .iter()
            .map(|s| DensityMatrix::new(matrix(s)?).map_err(err))
            .collect::<PyResult<Vec<_>>>()?;
        Ok(PyEnsemble(
            states::StateEnsemble::new(rhos, priors).map_err(err)?,
        ))
    }

    /// One of the labelled pairs `a`..`f`.
    #[staticmethod]
    fn preset(label: char) -> PyResult<Self> {
        Ok(PyEnsemble(states::preset_pair(label).map_err(err)?))
    }

    #[staticmethod]
    fn symmetric_pair(theta: f64, xi: f64) -> Self {
        PyEnsemble(states::symmetric_pure_pair(theta, xi))
    }

    /// A pure state and a mixed state of Bloch radius `r`.
    #[staticmethod]
    fn pure_mixed_pair(theta: f64, xi: f64, r: f64) -> PyResult<Self> {
        Ok(PyEnsemble(
            states::pure_mixed_pair(theta, xi, r).map_err(err)?,
        ))
    }

    #[staticmethod]
    fn equiphase(m: usize) -> PyResult<Self> {
        Ok(PyEnsemble(states::equiphase_states(m).map_err(err)?))
    }

    #[staticmethod]
    fn mub_mixture(alpha: f64, m: usize) -> PyResult<Self> {
        Ok(PyEnsemble(states::mub_mixture(alpha, m).map_err(err)?))
    }

    #[getter]
    fn priors(&self) -> Vec<f64> {
        self.0.priors().to_vec()
    }

    #[getter]
    fn states(&self) -> Vec<Vec<Vec<Complex64>>> {
        self.0.states().iter().map(|s| rows(s.matrix())).collect()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    /// Helstrom probability; binary ensembles only.
    fn helstrom(&self) -> PyResult<f64> {
        states::helstrom_ensemble(&self.0).map_err(err)
    }

    /// The best achievable probability of a correct decision for this family.
    fn bound(&self) -> PyResult<f64> {
        states::symmetric_mary_bound(&self.0).map_err(err)
    }

    fn square_root_measurement(&self) -> PyResult<f64> {
        states::square_root_measurement_pc(&self.0).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Ensemble(len={}, dim={})", self.0.len(), self.0.dim())
    }
}

#[pyclass(name = "OptimizationResult", frozen, get_all)]
struct PyOptimizationResult {
    pc: f64,
    h: Vec<Vec<f64>>,
    t: Vec<Vec<f64>>,
    converged: bool,
    restart_pcs: Vec<f64>,
    history: Vec<f64>,
}

#[pymethods]
impl PyOptimizationResult {
    fn __repr__(&self) -> String {
        let converged = if self.converged { "True" } else { "False" };
        format!(
            "OptimizationResult(pc={:.6}, converged={converged})",
            self.pc
        )
    }
}

fn parameters(
    topology: &PyTopology,
    h: Vec<Vec<f64>>,
    t: Vec<Vec<f64>>,
) -> PyResult<(Hamiltonian, TransitionMatrix)> {
    let ham = Hamiltonian::new(&topology.0, matrix(&h)?).map_err(err)?;
    let trans = TransitionMatrix::new(&topology.0, matrix(&t)?).map_err(err)?;
    Ok((ham, trans))
}

/// Maximizes the probability of a correct decision over `H` and `T`.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (topology, p, tau, ensemble, restarts=16, seed=0, max_iters=500))]
fn optimize(
    py: Python<'_>,
    topology: &PyTopology,
    p: f64,
    tau: f64,
    ensemble: &PyEnsemble,
    restarts: usize,
    seed: u64,
    max_iters: usize,
) -> PyResult<PyOptimizationResult> {
    let config = OptimizerConfig {
        restarts,
        seed,
        max_iters,
        ..Default::default()
    };
    let r = py
        .detach(|| optimizer::maximize(&topology.0, p, tau, &ensemble.0, &config))
        .map_err(err)?;
    Ok(PyOptimizationResult {
        pc: r.best_pc,
        h: rows(r.best_h.matrix()),
        t: rows(r.best_t.matrix()),
        converged: r.converged,
        restart_pcs: r.restart_pcs,
        history: r.history,
    })
}

#[pyfunction]
#[pyo3(signature = (topology, h, t, p, tau, ensemble, gamma=1.0))]
fn network_pc(
    topology: &PyTopology,
    h: Vec<Vec<f64>>,
    t: Vec<Vec<f64>>,
    p: f64,
    tau: f64,
    ensemble: &PyEnsemble,
    gamma: f64,
) -> PyResult<f64> {
    let (ham, trans) = parameters(topology, h, t)?;
    states::network_pc_with_gamma(&topology.0, &ham, &trans, p, gamma, tau, &ensemble.0)
        .map_err(err)
}

/// `ρ(τ)` on the full graph. A state on the inputs only is embedded first.
#[pyfunction]
#[pyo3(signature = (topology, h, t, p, rho0, tau, gamma=1.0))]
fn evolve(
    topology: &PyTopology,
    h: Vec<Vec<f64>>,
    t: Vec<Vec<f64>>,
    p: f64,
    rho0: Vec<Vec<Complex64>>,
    tau: f64,
    gamma: f64,
) -> PyResult<Vec<Vec<Complex64>>> {
    let (ham, trans) = parameters(topology, h, t)?;
    let l = qdynamics::build_liouvillian(&topology.0, &ham, &trans, p, gamma).map_err(err)?;
    let rho = DensityMatrix::new(matrix(&rho0)?)
        .and_then(|r| r.embed(topology.0.n_total))
        .map_err(err)?;
    Ok(rows(
        qdynamics::evolve(&l, &rho, tau).map_err(err)?.matrix(),
    ))
}

#[pyfunction]
fn sink_populations(topology: &PyTopology, rho: Vec<Vec<Complex64>>) -> PyResult<Vec<f64>> {
    let rho = DensityMatrix::new(matrix(&rho)?).map_err(err)?;
    Ok(qdynamics::sink_populations(&rho, &topology.0))
}

#[pyfunction]
fn pc_p0_closed(theta: f64, h: f64, tau: f64) -> f64 {
    analytic::pc_p0_closed(theta, h, tau)
}

#[pyfunction]
fn optimal_h_p0(theta: f64, tau: f64) -> f64 {
    analytic::optimal_h_p0(theta, tau)
}

/// Hamiltonian of the symmetric `p = 0` ansatz on `2r-2r-2`.
#[pyfunction]
fn p0_ansatz_hamiltonian(topology: &PyTopology, h: f64, theta: f64) -> PyResult<Vec<Vec<f64>>> {
    let ham = analytic::P0Ansatz::new(h, theta)
        .hamiltonian(&topology.0)
        .map_err(err)?;
    Ok(rows(ham.matrix()))
}

/// `d` defaults to the optimal transition parameters for the two imbalances.
#[pyfunction]
#[pyo3(signature = (delta1, delta2, tau, d=None))]
fn pc_p1_closed(delta1: f64, delta2: f64, tau: f64, d: Option<[f64; 4]>) -> PyResult<f64> {
    let params = match d {
        Some([a, b, c, e]) => analytic::P1Params::new(a, b, c, e),
        None => analytic::optimal_params_p1(delta1, delta2),
    }
    .map_err(err)?;
    Ok(analytic::pc_p1_closed(delta1, delta2, &params, tau))
}

/// Real-coordinate labels of input directions that never reach a sink.
#[pyfunction]
fn trapped_directions(
    topology: &PyTopology,
    h: Vec<Vec<f64>>,
    t: Vec<Vec<f64>>,
    p: f64,
) -> PyResult<Vec<String>> {
    let (ham, trans) = parameters(topology, h, t)?;
    let report = analytic::invariant_subspace_report(&topology.0, &ham, &trans, p).map_err(err)?;
    Ok(report
        .trapped_input_directions()
        .into_iter()
        .map(|c| c.label())
        .collect())
}

/// `(p, tau, delta, nominal_pc, mean, min, max, std)`
type CellRow = (f64, f64, f64, f64, f64, f64, f64, f64);

/// Monte-Carlo study around the optimal networks; one tuple per cell.
#[pyfunction]
#[pyo3(signature = (
    model="2-2-2", study="state", p_values=vec![0.0], tau_values=vec![1.0, 10.0],
    deltas=vec![0.0, 0.05, 0.1, 0.25, 0.5, 1.0], n_runs=1000, seed=0, restarts=16, additive=false,
))]
#[allow(clippy::too_many_arguments)]
fn robustness_study(
    py: Python<'_>,
    model: &str,
    study: &str,
    p_values: Vec<f64>,
    tau_values: Vec<f64>,
    deltas: Vec<f64>,
    n_runs: usize,
    seed: u64,
    restarts: usize,
    additive: bool,
) -> PyResult<Vec<CellRow>> {
    let topology = PyTopology::new(model)?.0;
    let config = McConfig {
        n_runs,
        deltas,
        seed,
        p_values,
        tau_values,
        nominal: NominalPair::default(),
        noise: if additive {
            NoiseKind::Additive
        } else {
            NoiseKind::Multiplicative
        },
        shared_draw: false,
    };
    let opt = OptimizerConfig {
        restarts,
        seed,
        ..Default::default()
    };
    let disorder = match study {
        "state" => false,
        "disorder" => true,
        other => return Err(PyValueError::new_err(format!("unknown study `{other}`"))),
    };
    let summary = py
        .detach(|| {
            let nets = robustness::optimize_cells(&topology, &config, &opt)?;
            if disorder {
                robustness::run_disorder_study(&topology, &nets, &config)
            } else {
                robustness::run_state_noise_study(&topology, &nets, &config)
            }
        })
        .map_err(err)?;
    Ok(summary
        .cells
        .iter()
        .map(|c| {
            (
                c.p,
                c.tau,
                c.delta,
                c.nominal_pc,
                c.mean,
                c.min,
                c.max,
                c.std,
            )
        })
        .collect())
}

#[pymodule]
fn qswd(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTopology>()?;
    m.add_class::<PyEnsemble>()?;
    m.add_class::<PyOptimizationResult>()?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add_function(wrap_pyfunction!(network_pc, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(sink_populations, m)?)?;
    m.add_function(wrap_pyfunction!(pc_p0_closed, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_h_p0, m)?)?;
    m.add_function(wrap_pyfunction!(p0_ansatz_hamiltonian, m)?)?;
    m.add_function(wrap_pyfunction!(pc_p1_closed, m)?)?;
    m.add_function(wrap_pyfunction!(trapped_directions, m)?)?;
    m.add_function(wrap_pyfunction!(robustness_study, m)?)?;
    Ok(())
}
