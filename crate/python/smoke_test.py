"""Smoke test for the qswd extension module.

Build and install first, e.g.

    maturin build --release -m crates/py/Cargo.toml -o dist
    pip install dist/qswd-*.whl
    python python/smoke_test.py
"""

import math

import qswd


def close(a, b, tol):
    assert abs(a - b) < tol, f"{a} vs {b}"


def main():
    topo = qswd.Topology("2r-2r-2")
    assert (topo.n_total, topo.n_network, topo.n_sinks) == (6, 4, 2)
    assert len(topo.links) == 4
    print(repr(topo), topo.links)

    pair = qswd.Ensemble.preset("a")
    close(pair.helstrom(), 0.5 * (1 + math.sqrt(0.5)), 1e-12)
    close(qswd.Ensemble.mub_mixture(0.0, 4).bound(), 0.25, 1e-12)

    res = qswd.optimize(topo, 0.0, 100.0, pair, restarts=4, seed=1)
    close(res.pc, pair.helstrom(), 1e-4)
    print(res, "restarts:", [round(x, 4) for x in res.restart_pcs])

    again = qswd.network_pc(topo, res.h, res.t, 0.0, 100.0, pair)
    close(again, res.pc, 1e-9)

    theta, tau = math.pi / 8, 5.0
    h = qswd.optimal_h_p0(theta, tau)
    ham = qswd.p0_ansatz_hamiltonian(topo, h, theta)
    sym = qswd.Ensemble.symmetric_pair(theta, 0.0)
    numeric = qswd.network_pc(topo, ham, topo.classical_transition(), 0.0, tau, sym)
    close(numeric, qswd.pc_p0_closed(theta, h, tau), 1e-10)

    rho = qswd.evolve(topo, ham, topo.classical_transition(), 0.0, pair.states[0], tau)
    trace = sum(rho[i][i] for i in range(len(rho)))
    close(trace.real, 1.0, 1e-10)
    print("sink populations:", qswd.sink_populations(topo, rho))

    print("trapped:", qswd.trapped_directions(topo, ham, topo.classical_transition(), 0.5))
    close(qswd.pc_p1_closed(-0.25, 0.25, 1e6), 0.75, 1e-9)

    cells = qswd.robustness_study(
        p_values=[0.0], tau_values=[1.0], deltas=[0.0, 0.5], n_runs=20, restarts=2
    )
    assert len(cells) == 2
    p, t, delta, nominal, mean, lo, hi, std = cells[0]
    close(mean, nominal, 1e-9)
    print("robustness:", [tuple(round(v, 4) for v in c) for c in cells])

    try:
        qswd.Topology("2-x-2")
    except ValueError as e:
        print("rejected bad model:", e)
    else:
        raise AssertionError("bad model accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
