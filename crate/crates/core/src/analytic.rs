//! Closed-form results for the `2r-2r-2` network: the `p = 0` probability
//! under the two-parameter hopping ansatz, the `p = 1` classical walk under
//! the four-parameter transition family, and invariant-subspace detection.
//!
//! Node indices are 0-based: inputs 0 and 1, sinkers 2 and 3, sinks 4 and 5.

use std::collections::VecDeque;

use nalgebra::{DMatrix, Matrix2, Matrix3};

use crate::error::{Error, Result};
use crate::qdynamics::{
    build_liouvillian, real_block_form, Hamiltonian, RealCoord, TransitionMatrix,
};
use crate::topology::Topology;

/// Hopping ansatz `H = [[0, B], [B, 0]]` with `B = [[h, h], [h, -h]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P0Ansatz {
    pub h: f64,
    pub theta: f64,
}

impl P0Ansatz {
    pub fn new(h: f64, theta: f64) -> Self {
        P0Ansatz { h, theta }
    }

    pub fn network_matrix(&self) -> DMatrix<f64> {
        let h = self.h;
        DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, 0.0, h, h, 0.0, 0.0, h, -h, h, h, 0.0, 0.0, h, -h, 0.0, 0.0,
            ],
        )
    }

    pub fn hamiltonian(&self, topology: &Topology) -> Result<Hamiltonian> {
        check_2r2r2(topology)?;
        Hamiltonian::new(topology, self.network_matrix())
    }

    pub fn pc(&self, tau: f64) -> f64 {
        pc_p0_closed(self.theta, self.h, tau)
    }
}

fn check_2r2r2(topology: &Topology) -> Result<()> {
    let spec = topology.spec();
    if spec.layer_sizes() != [2, 2, 2] || !spec.reduced().iter().all(|&r| r) {
        return Err(Error::InvalidParameter(format!(
            "closed forms exist only for 2r-2r-2, not {spec}"
        )));
    }
    Ok(())
}

/// `e^{-τ} f` with `f = sinh(zτ)/z + (cosh(zτ) − 1)/z²` and `z² = w`.
///
/// Both terms are entire in `w`; the three branches agree to roundoff where
/// they meet.
pub fn p0_f_term(w: f64, tau: f64) -> f64 {
    let x = w * tau * tau;
    if x.abs() <= 1.0 {
        let mut sum = 0.0;
        let mut odd = tau; // τ^{2k+1}/(2k+1)!
        let mut even = tau * tau / 2.0; // τ^{2k+2}/(2k+2)!
        let mut wk = 1.0;
        for k in 0..40 {
            let term = wk * (odd + even);
            sum += term;
            if term.abs() <= 1e-17 * sum.abs() {
                break;
            }
            let a = (2 * k + 2) as f64;
            let b = (2 * k + 3) as f64;
            let c = (2 * k + 4) as f64;
            odd *= tau * tau / (a * b);
            even *= tau * tau / (b * c);
            wk *= w;
        }
        return (-tau).exp() * sum;
    }
    if w > 0.0 {
        let z = w.sqrt();
        let up = ((z - 1.0) * tau).exp();
        let down = (-(z + 1.0) * tau).exp();
        (up - down) / (2.0 * z) + (0.5 * (up + down) - (-tau).exp()) / w
    } else {
        let zeta = (-w).sqrt();
        let s = zeta * tau;
        (-tau).exp() * (s.sin() / zeta + (1.0 - s.cos()) / (zeta * zeta))
    }
}

/// Probability of correct decision at `p = 0` for the pair
/// `cosθ|1⟩ ± sinθ|2⟩` under the ansatz with hopping `h`.
pub fn pc_p0_closed(theta: f64, h: f64, tau: f64) -> f64 {
    let w = 1.0 - 8.0 * h * h;
    let bound = 0.5 * (1.0 + (2.0 * theta).sin());
    bound * (1.0 - (-tau).exp() - p0_f_term(w, tau))
}

/// `f(ξ) = τ sin ξ/ξ + τ² (1 − cos ξ)/ξ²`, the `8h² > 1` branch with
/// `8h² = 1 + ξ²/τ²`.
fn f_xi(xi: f64, tau: f64) -> f64 {
    if xi.abs() < 1e-4 {
        let x2 = xi * xi;
        return tau * (1.0 - x2 / 6.0) + tau * tau * (0.5 - x2 / 24.0);
    }
    tau * xi.sin() / xi + tau * tau * (1.0 - xi.cos()) / (xi * xi)
}

pub fn h_from_xi(xi: f64, tau: f64) -> f64 {
    ((1.0 + (xi / tau).powi(2)) / 8.0).sqrt()
}

/// `ξ` at the first local minimum of `f(ξ)`; it always lies in `(π, 2π]`.
pub fn optimal_xi_p0(tau: f64) -> f64 {
    let grid = 2000;
    let (lo, hi) = (1e-3, 2.5 * std::f64::consts::PI);
    let step = (hi - lo) / grid as f64;
    let vals: Vec<f64> = (0..=grid)
        .map(|k| f_xi(lo + step * k as f64, tau))
        .collect();
    let k = (1..grid)
        .find(|&k| vals[k] <= vals[k - 1] && vals[k] <= vals[k + 1])
        .unwrap_or(grid - 1);
    let (mut a, mut b) = (lo + step * (k - 1) as f64, lo + step * (k + 1) as f64);
    let g = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f_xi(c, tau), f_xi(d, tau));
    while b - a > 1e-12 * (1.0 + a.abs()) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f_xi(c, tau);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f_xi(d, tau);
        }
    }
    0.5 * (a + b)
}

/// Hopping rate maximizing the ansatz probability at `τ`. The probability
/// does not depend on `θ` beyond a constant factor.
pub fn optimal_h_p0(_theta: f64, tau: f64) -> f64 {
    h_from_xi(optimal_xi_p0(tau), tau)
}

/// Fundamental solutions of the sinker-population system at `p = 0`; the
/// columns solve `ẇ = M w` with `M` from [`p0_system_matrix`].
pub fn fundamental_matrix_p0(h: f64, t: f64) -> Matrix3<f64> {
    let z = (1.0 - 8.0 * h * h).sqrt();
    let e = (-t).exp();
    let em = (-z * t).exp();
    let ep = (z * t).exp();
    let a = 1.0 - 4.0 * h * h;
    Matrix3::new(
        2.0 * h,
        (a + z) * em,
        (a - z) * ep,
        1.0,
        2.0 * h * (1.0 + z) * em,
        2.0 * h * (1.0 - z) * ep,
        4.0 * h,
        8.0 * h * h * em,
        8.0 * h * h * ep,
    ) * e
}

pub fn p0_system_matrix(h: f64) -> Matrix3<f64> {
    Matrix3::new(-2.0, 2.0 * h, 0.0, -2.0 * h, -1.0, h, 0.0, -4.0 * h, 0.0)
}

/// Rotation taking `cos α|1⟩ + sin α|2⟩`, `cos β|1⟩ + sin β|2⟩` to
/// `cos θ|1⟩ ± sin θ|2⟩`; returns `(U, θ)`.
pub fn rotation_u(alpha: f64, beta: f64) -> (Matrix2<f64>, f64) {
    let s = 0.5 * (alpha + beta);
    (
        Matrix2::new(s.cos(), s.sin(), -s.sin(), s.cos()),
        0.5 * (alpha - beta),
    )
}

/// Transition family at `p = 1`: sinkers return to the inputs with weights
/// `(½ ± d1)`, `(½ ∓ d2)` and inputs feed the sinkers with `(½ ± d3)`,
/// `(½ ∓ d4)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P1Params {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
}

impl P1Params {
    pub fn new(d1: f64, d2: f64, d3: f64, d4: f64) -> Result<Self> {
        for (k, d) in [d1, d2, d3, d4].into_iter().enumerate() {
            if !(d.abs() <= 0.5) {
                return Err(Error::InvalidParameter(format!(
                    "d{} = {d} is outside [-1/2, 1/2]",
                    k + 1
                )));
            }
        }
        Ok(P1Params { d1, d2, d3, d4 })
    }

    pub fn uniform(d: f64) -> Result<Self> {
        Self::new(d, d, d, d)
    }

    pub fn s12(&self) -> f64 {
        self.d1 + self.d2
    }

    pub fn s34(&self) -> f64 {
        self.d3 + self.d4
    }

    pub fn network_matrix(&self) -> DMatrix<f64> {
        let P1Params { d1, d2, d3, d4 } = *self;
        let mut t = DMatrix::zeros(4, 4);
        t[(0, 2)] = 0.5 + d1;
        t[(1, 2)] = 0.5 - d1;
        t[(0, 3)] = 0.5 - d2;
        t[(1, 3)] = 0.5 + d2;
        t[(2, 0)] = 0.5 + d3;
        t[(3, 0)] = 0.5 - d3;
        t[(2, 1)] = 0.5 - d4;
        t[(3, 1)] = 0.5 + d4;
        t
    }

    pub fn transition(&self, topology: &Topology) -> Result<TransitionMatrix> {
        check_2r2r2(topology)?;
        TransitionMatrix::new(topology, self.network_matrix())
    }
}

/// `Δρ = (ρ₂₂ − ρ₁₁)/2` of a state on the two input nodes.
pub fn population_imbalance(rho: &crate::qdynamics::DensityMatrix) -> f64 {
    let m = rho.matrix();
    0.5 * (m[(1, 1)].re - m[(0, 0)].re)
}

/// Probability of correct decision at `p = 1` for two equiprobable states
/// with population imbalances `Δρ₁`, `Δρ₂`.
pub fn pc_p1_closed(delta_rho_1: f64, delta_rho_2: f64, params: &P1Params, tau: f64) -> f64 {
    let s2 = std::f64::consts::SQRT_2;
    let q = params.s12() * params.s34();
    let r = (1.0 + q).max(0.0).sqrt();
    let dd = delta_rho_2 - delta_rho_1;
    let k = params.s34() * dd;
    let free =
        ((s2 - 1.0) * (-(2.0 + s2) * tau).exp() - (s2 + 1.0) * (-(2.0 - s2) * tau).exp()) / 4.0;
    // φ(r)/(2r) with φ(r) = e^{-(2+r)τ}/(r+2) + e^{-(2-r)τ}/(r-2), odd in r
    let transient = if r < 1e-5 {
        -(-2.0 * tau).exp() * (0.5 * tau + 0.25)
    } else {
        ((-(2.0 + r) * tau).exp() / (r + 2.0) + (-(2.0 - r) * tau).exp() / (r - 2.0)) / (2.0 * r)
    };
    0.5 + free + k / (3.0 - q) + k * transient
}

/// `sinh(c t)/c`, continuous at `c = 0`.
fn sinhc(c: f64, t: f64) -> f64 {
    let x = c * t;
    if x.abs() < 1e-4 {
        t * (1.0 + x * x / 6.0)
    } else {
        x.sinh() / c
    }
}

/// Sinker population difference term `(G(2) − G(1+q))/(1 − q)` with
/// `G(w) = sinh(√w t)/√w`, by its derivative when `q → 1`.
fn divided_difference(q: f64, t: f64) -> f64 {
    let big_g = |w: f64| sinhc(w.max(0.0).sqrt(), t);
    if (1.0 - q).abs() < 1e-6 {
        let w = 0.5 * (3.0 + q);
        let sw = w.sqrt();
        -(t * (sw * t).cosh() / (2.0 * w) - (sw * t).sinh() / (2.0 * w * sw))
    } else {
        (big_g(2.0) - big_g(1.0 + q)) / (1.0 - q)
    }
}

fn sinker_terms(delta_rho: f64, params: &P1Params, t: f64) -> (f64, f64) {
    let s12 = params.s12();
    let s34 = params.s34();
    let q = s12 * s34;
    let r = (1.0 + q).max(0.0).sqrt();
    let a = s34 * (params.d1 - params.d2 + s12 * (params.d3 - params.d4));
    let common = 0.5 * sinhc(std::f64::consts::SQRT_2, t);
    let split = 0.5 * (params.d3 - params.d4) * sinhc(std::f64::consts::SQRT_2, t)
        + 0.5 * a * divided_difference(q, t)
        - delta_rho * s34 * sinhc(r, t);
    let e = (-2.0 * t).exp();
    (e * (common + split), e * (common - split))
}

/// Population of the first sinker at time `t`, starting from a state with
/// population imbalance `Δρ`.
pub fn rho33_p1(delta_rho: f64, params: &P1Params, t: f64) -> f64 {
    sinker_terms(delta_rho, params, t).0
}

pub fn rho44_p1(delta_rho: f64, params: &P1Params, t: f64) -> f64 {
    sinker_terms(delta_rho, params, t).1
}

/// Optimal `p = 1` transitions: every `d_k = ½ sgn(Δρ₂ − Δρ₁)`, a permutation.
pub fn optimal_params_p1(delta_rho_1: f64, delta_rho_2: f64) -> Result<P1Params> {
    let dd = delta_rho_2 - delta_rho_1;
    if dd == 0.0 || !dd.is_finite() {
        return Err(Error::Degenerate(
            "equal population imbalances make every T optimal".into(),
        ));
    }
    P1Params::uniform(0.5 * dd.signum())
}

pub fn optimal_t_p1(
    topology: &Topology,
    delta_rho_1: f64,
    delta_rho_2: f64,
) -> Result<TransitionMatrix> {
    optimal_params_p1(delta_rho_1, delta_rho_2)?.transition(topology)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantReport {
    /// Coordinates whose evolution never reaches a sink population.
    pub trapped: Vec<RealCoord>,
    /// Coordinates with a coupling path to some sink population.
    pub sink_reachable: Vec<RealCoord>,
    n_inputs: usize,
}

impl InvariantReport {
    /// Trapped coordinates supported on the input nodes, i.e. directions of
    /// an input state that are invisible to the measurement.
    pub fn trapped_input_directions(&self) -> Vec<RealCoord> {
        let k = self.n_inputs;
        self.trapped
            .iter()
            .copied()
            .filter(|c| match *c {
                RealCoord::Diag(m) => m < k,
                RealCoord::Re(a, b) | RealCoord::Im(a, b) => a < k && b < k,
            })
            .collect()
    }
}

/// Graph reachability on the nonzero pattern (`|x| > 1e-12`) of the real
/// block form, from each coordinate to the sink diagonals.
pub fn invariant_subspace_report(
    topology: &Topology,
    ham: &Hamiltonian,
    trans: &TransitionMatrix,
    p: f64,
) -> Result<InvariantReport> {
    let l = build_liouvillian(topology, ham, trans, p, 1.0)?;
    let form = real_block_form(&l);
    let dim = form.coords.len();
    let mut seen = vec![false; dim];
    let mut queue = VecDeque::new();
    for (k, c) in form.coords.iter().enumerate() {
        if let RealCoord::Diag(m) = *c {
            if topology.is_sink(m) {
                seen[k] = true;
                queue.push_back(k);
            }
        }
    }
    // x_b depends on x_a when M[b, a] ≠ 0; walk those edges backwards
    while let Some(b) = queue.pop_front() {
        for (a, s) in seen.iter_mut().enumerate() {
            if !*s && form.matrix[(b, a)].abs() > 1e-12 {
                *s = true;
                queue.push_back(a);
            }
        }
    }
    let (reach, trapped): (Vec<_>, Vec<_>) = form.coords.iter().zip(&seen).partition(|(_, &s)| s);
    Ok(InvariantReport {
        trapped: trapped.into_iter().map(|(c, _)| *c).collect(),
        sink_reachable: reach.into_iter().map(|(c, _)| *c).collect(),
        n_inputs: topology.spec().n_inputs(),
    })
}
