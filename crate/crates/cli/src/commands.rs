use std::time::Instant;

use qswd_core::analytic::{optimal_params_p1, pc_p0_closed, pc_p1_closed, P0Ansatz, P1Params};
use qswd_core::optimizer::{maximize, OptimizerConfig};
use qswd_core::qdynamics::{DensityMatrix, Hamiltonian, TransitionMatrix};
use qswd_core::robustness::{
    depth_model, optimize_cells, run_depth_study, run_disorder_study, run_state_noise_study,
    McConfig, NoiseKind, NominalPair,
};
use qswd_core::states::{
    classical_helstrom, equiphase_states, helstrom_ensemble, mub_mixture, network_pc, preset_pair,
    pure_mixed_pair, ry_zeroed, square_root_measurement_pc, symmetric_mary_bound,
    symmetric_pure_pair, StateEnsemble,
};
use qswd_core::topology::{build_topology, ModelSpec, Topology};
use rayon::prelude::*;

use crate::config::{Noise, Resolved, Study};
use crate::error::CliError;
use crate::output::{num, Table};

/// Headroom for roundoff when checking optimized values against bounds.
const BOUND_SLACK: f64 = 1e-6;

pub fn topology(model: &str) -> Result<Topology, CliError> {
    let spec: ModelSpec = model.parse()?;
    Ok(build_topology(&spec))
}

pub fn ensemble(c: &Resolved) -> Result<StateEnsemble, CliError> {
    let name = c.ensemble.as_str();
    if let Some(label) = name.strip_prefix("pair-") {
        let mut chars = label.chars();
        if let (Some(l), None) = (chars.next(), chars.next()) {
            return Ok(preset_pair(l)?);
        }
    }
    Ok(match name {
        "symmetric_pair" => symmetric_pure_pair(c.theta, c.xi),
        "pure_mixed_pair" => pure_mixed_pair(c.theta, c.xi, c.radius)?,
        "equiphase" => equiphase_states(c.states)?,
        "mub_mixture" => {
            if !(0.0..=1.0).contains(&c.alpha) {
                return Err(CliError::Config(format!("alpha = {} is outside [0, 1]", c.alpha)));
            }
            mub_mixture(c.alpha, c.states)?
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown ensemble `{other}` (pair-a..pair-f, symmetric_pair, pure_mixed_pair, equiphase, mub_mixture)"
            )))
        }
    })
}

fn optimizer(c: &Resolved) -> OptimizerConfig {
    OptimizerConfig {
        restarts: c.restarts,
        max_iters: c.max_iters,
        seed: c.seed,
        ..Default::default()
    }
}

fn check_grid(c: &Resolved) -> Result<(), CliError> {
    if let Some(p) = c.p.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(CliError::Config(format!("p = {p} is outside [0, 1]")));
    }
    if let Some(t) = c.tau.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        return Err(CliError::Config(format!(
            "tau = {t} must be finite and non-negative"
        )));
    }
    Ok(())
}

fn is_qubit_pair(e: &StateEnsemble) -> bool {
    e.len() == 2 && e.dim() == 2
}

fn ry_zeroed_bound(e: &StateEnsemble) -> Result<Option<f64>, CliError> {
    if !is_qubit_pair(e) {
        return Ok(None);
    }
    Ok(Some(helstrom_ensemble(&e.map_states(ry_zeroed)?)?))
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn timing(timings: bool, secs: f64) -> String {
    if timings {
        format!("{secs:.3}")
    } else {
        String::new()
    }
}

pub fn sweep(c: &Resolved, timings: bool) -> Result<Table, CliError> {
    check_grid(c)?;
    let topo = topology(&c.model)?;
    let e = ensemble(c)?;
    qswd_core::states::check_fits(&topo, &e)?;
    let bound = symmetric_mary_bound(&e)?;
    let kind = if e.len() == 2 {
        "helstrom"
    } else {
        "symmetric_mary"
    };
    let helstrom = if e.len() == 2 {
        Some(helstrom_ensemble(&e)?)
    } else {
        None
    };
    let zeroed = ry_zeroed_bound(&e)?;
    let cells: Vec<(f64, f64)> =
        c.p.iter()
            .flat_map(|&p| c.tau.iter().map(move |&t| (p, t)))
            .collect();
    let opt = optimizer(c);
    let results = cells
        .par_iter()
        .map(|&(p, tau)| {
            let start = Instant::now();
            let r = maximize(&topo, p, tau, &e, &opt)?;
            eprintln!("sweep: p = {p}, tau = {tau}: P_c = {:.6}", r.best_pc);
            Ok((r, start.elapsed().as_secs_f64()))
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let mut table = Table::new(vec![
        "model",
        "p",
        "tau",
        "pc_optimized",
        "bound",
        "bound_kind",
        "helstrom",
        "ry_zeroed_helstrom",
        "restarts",
        "converged",
        "runtime_s",
    ]);
    for (&(p, tau), (r, secs)) in cells.iter().zip(results) {
        if r.best_pc > bound + BOUND_SLACK {
            return Err(CliError::Numerical(format!(
                "p = {p}, tau = {tau}: P_c {} exceeds the bound {bound}",
                r.best_pc
            )));
        }
        table.push(vec![
            c.model.clone(),
            p.to_string(),
            tau.to_string(),
            num(r.best_pc),
            num(bound),
            kind.into(),
            opt_num(helstrom),
            opt_num(zeroed),
            r.restarts_used.to_string(),
            r.converged.to_string(),
            timing(timings, secs),
        ]);
    }
    Ok(table)
}

pub fn bounds(c: &Resolved) -> Result<Table, CliError> {
    let e = ensemble(c)?;
    let mut table = Table::new(vec!["ensemble", "quantity", "value"]);
    let mut row = |q: &str, v: f64| table.push(vec![c.ensemble.clone(), q.into(), num(v)]);
    if e.len() == 2 {
        let (s, p) = (e.states(), e.priors());
        row("helstrom", helstrom_ensemble(&e)?);
        row(
            "classical_helstrom",
            classical_helstrom(&s[0], &s[1], p[0], p[1])?,
        );
        if let Some(z) = ry_zeroed_bound(&e)? {
            row("ry_zeroed_helstrom", z);
        }
    } else {
        row("symmetric_mary", symmetric_mary_bound(&e)?);
        row("square_root_measurement", square_root_measurement_pc(&e)?);
    }
    Ok(table)
}

fn deviation_table() -> Table {
    Table::new(vec!["tau", "closed_form", "numeric", "abs_deviation"])
}

pub fn analytic_p0(c: &Resolved) -> Result<(Table, f64), CliError> {
    check_grid(c)?;
    let topo = topology("2r-2r-2")?;
    let ham = P0Ansatz::new(c.h, c.theta).hamiltonian(&topo)?;
    let e = symmetric_pure_pair(c.theta, 0.0);
    let trans = TransitionMatrix::classical(&topo);
    let mut table = deviation_table();
    let mut worst: f64 = 0.0;
    for &tau in &c.tau {
        let closed = pc_p0_closed(c.theta, c.h, tau);
        let numeric = network_pc(&topo, &ham, &trans, 0.0, tau, &e)?;
        worst = worst.max((closed - numeric).abs());
        table.push(vec![
            tau.to_string(),
            num(closed),
            num(numeric),
            format!("{:.3e}", (closed - numeric).abs()),
        ]);
    }
    Ok((table, worst))
}

fn imbalanced_state(delta: f64) -> Result<DensityMatrix, CliError> {
    if delta.is_nan() || delta.abs() > 0.5 {
        return Err(CliError::Config(format!(
            "population imbalance {delta} is outside [-1/2, 1/2]"
        )));
    }
    Ok(qswd_core::states::BlochVector::new(0.0, 0.0, -2.0 * delta)?.to_density()?)
}

pub fn analytic_p1(c: &Resolved) -> Result<(Table, f64), CliError> {
    check_grid(c)?;
    let topo = topology("2r-2r-2")?;
    let params = match &c.d {
        Some(d) => P1Params::new(d[0], d[1], d[2], d[3])?,
        None => optimal_params_p1(c.delta1, c.delta2)?,
    };
    let e = StateEnsemble::new(
        vec![imbalanced_state(c.delta1)?, imbalanced_state(c.delta2)?],
        vec![0.5, 0.5],
    )?;
    let trans = params.transition(&topo)?;
    let ham = Hamiltonian::zeros(&topo);
    let mut table = deviation_table();
    let mut worst: f64 = 0.0;
    for &tau in &c.tau {
        let closed = pc_p1_closed(c.delta1, c.delta2, &params, tau);
        let numeric = network_pc(&topo, &ham, &trans, 1.0, tau, &e)?;
        worst = worst.max((closed - numeric).abs());
        table.push(vec![
            tau.to_string(),
            num(closed),
            num(numeric),
            format!("{:.3e}", (closed - numeric).abs()),
        ]);
    }
    Ok((table, worst))
}

pub fn robustness(c: &Resolved) -> Result<Table, CliError> {
    check_grid(c)?;
    let topo = topology(&c.model)?;
    if let Some(x) = c.error_pct.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
        return Err(CliError::Config(format!(
            "error-pct {x} must be non-negative"
        )));
    }
    let config = McConfig {
        n_runs: c.runs,
        deltas: c.error_pct.iter().map(|x| x / 100.0).collect(),
        seed: c.seed,
        p_values: c.p.clone(),
        tau_values: c.tau.clone(),
        nominal: NominalPair {
            theta: c.theta,
            xi: c.xi,
            r: c.radius,
        },
        noise: match c.noise {
            Noise::Multiplicative => NoiseKind::Multiplicative,
            Noise::Additive => NoiseKind::Additive,
        },
        shared_draw: c.shared_draw,
    };
    let nets = optimize_cells(&topo, &config, &optimizer(c))?;
    eprintln!("robustness: optimized {} cells", nets.len());
    let (name, summary) = match c.study {
        Study::State => ("state", run_state_noise_study(&topo, &nets, &config)?),
        Study::Disorder => ("disorder", run_disorder_study(&topo, &nets, &config)?),
    };
    let mut table = Table::new(vec![
        "study",
        "p",
        "tau",
        "error_pct",
        "nominal_pc",
        "mean",
        "min",
        "max",
        "std",
        "runs",
    ]);
    for cell in &summary.cells {
        table.push(vec![
            name.into(),
            cell.p.to_string(),
            cell.tau.to_string(),
            (cell.delta * 100.0).to_string(),
            num(cell.nominal_pc),
            num(cell.mean),
            num(cell.min),
            num(cell.max),
            num(cell.std),
            c.runs.to_string(),
        ]);
    }
    Ok(table)
}

pub fn depth(c: &Resolved, timings: bool) -> Result<Table, CliError> {
    check_grid(c)?;
    let e = ensemble(c)?;
    if e.len() != 2 {
        return Err(CliError::Config(
            "the depth study needs a binary ensemble".into(),
        ));
    }
    let mut table = Table::new(vec![
        "depth",
        "model",
        "tau",
        "pc_optimized",
        "helstrom",
        "gap",
        "runtime_s",
    ]);
    for &d in &c.depths {
        let model = depth_model(d)?.to_string();
        for &tau in &c.tau {
            let start = Instant::now();
            let row = run_depth_study(&[d], &[tau], &e, &optimizer(c))?[0];
            eprintln!("depth: {d} layers, tau = {tau}: P_c = {:.6}", row.pc);
            if row.pc > row.helstrom + BOUND_SLACK {
                return Err(CliError::Numerical(format!(
                    "depth {d}: P_c {} exceeds Helstrom",
                    row.pc
                )));
            }
            table.push(vec![
                d.to_string(),
                model.clone(),
                tau.to_string(),
                num(row.pc),
                num(row.helstrom),
                num(row.helstrom - row.pc),
                timing(timings, start.elapsed().as_secs_f64()),
            ]);
        }
    }
    Ok(table)
}

pub fn topo_summary(c: &Resolved) -> Result<String, CliError> {
    let t = topology(&c.model)?;
    Ok(format!("{t}\nincoherent arcs {}\n", t.arcs().len()))
}
