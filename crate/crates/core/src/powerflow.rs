//! Lossless steady state at fixed voltage magnitudes.
//!
//! The balance equations are
//! `w_i = sum_j |V_i||V_j| (1/x_ij) sin(d_i - d_j)`. Their Jacobian with
//! respect to the angles is the Laplacian of the dynamic graph at the
//! current iterate, which is singular along the all-ones vector; Newton
//! steps therefore solve the system with the reference row and column
//! removed.

use serde::Serialize;

use crate::dyngraph::{build_dynamic_graph, security_margin};
use crate::error::{Error, Result};
use crate::netmodel::{Network, OperatingPoint};

/// Largest tolerated `|sum_i w_i|` for a lossless solve, p.u.
pub const BALANCE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct PowerFlowOptions {
    /// Reference bus id; defaults to the lowest-id generation bus.
    pub reference: Option<usize>,
    pub tolerance: f64,
    pub max_iter: usize,
    /// Initial angles in bus order, radians. Flat start when absent.
    pub warm_start: Option<Vec<f64>>,
}

impl Default for PowerFlowOptions {
    fn default() -> Self {
        PowerFlowOptions {
            reference: None,
            tolerance: 1e-10,
            max_iter: 50,
            warm_start: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerFlowReport {
    pub operating_point: OperatingPoint,
    pub iterations: usize,
    pub final_residual_inf_norm: f64,
    pub converged: bool,
    /// Every line angle strictly below pi/2 at the returned point.
    pub secure: bool,
    pub max_line_angle: f64,
    /// Residual infinity norm at each iterate, starting with the initial one.
    pub residual_history: Vec<f64>,
}

/// Per-bus mismatch `r_i = w_i - sum_j |V_i||V_j| (1/x_ij) sin(d_i - d_j)`.
pub fn power_flow_residual(network: &Network, op: &OperatingPoint) -> Vec<f64> {
    let mut r = network.injections();
    for br in network.indexed_branches() {
        let flow = op.v_mag[br.from] * op.v_mag[br.to] * br.susceptance * (op.v_ang[br.from] - op.v_ang[br.to]).sin();
        r[br.from] -= flow;
        r[br.to] += flow;
    }
    r
}

/// Synchronous frequency offset `sum w_i / sum D_i`.
pub fn omega_sync(network: &Network) -> f64 {
    let w: f64 = network.buses.iter().map(|b| b.p_inject).sum();
    let d: f64 = network.buses.iter().map(|b| b.damping).sum();
    w / d
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn solve_angles(network: &Network, options: &PowerFlowOptions) -> Result<PowerFlowReport> {
    let n = network.n();
    let total: f64 = network.injections().iter().sum();
    if total.abs() > BALANCE_TOLERANCE {
        return Err(Error::Imbalance(total));
    }
    if !(options.tolerance > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be > 0 (got {})",
            options.tolerance
        )));
    }
    let ref_id = match options.reference {
        Some(id) => id,
        None => network
            .default_reference()
            .ok_or_else(|| Error::InvalidArgument("network has no buses".into()))?,
    };
    let reference = network
        .index_of(ref_id)
        .ok_or_else(|| Error::InvalidArgument(format!("reference bus {ref_id} does not exist")))?;

    let mut op = OperatingPoint::flat(network, reference);
    if let Some(start) = &options.warm_start {
        if start.len() != n {
            return Err(Error::InvalidArgument(format!(
                "warm start has {} angles for {n} buses",
                start.len()
            )));
        }
        let shift = start[reference];
        op.v_ang = start.iter().map(|a| a - shift).collect();
    }

    // Positions of the non-reference buses in the reduced system.
    let free: Vec<usize> = (0..n).filter(|&i| i != reference).collect();
    let mut residual = power_flow_residual(network, &op);
    let mut history = vec![inf_norm(&residual)];
    let mut iterations = 0;
    let mut converged = history[0] <= options.tolerance;

    while !converged && iterations < options.max_iter {
        let lap = build_dynamic_graph(network, &op).laplacian();
        let jac = lap.matrix().select_rows(&free).select_columns(&free);
        let rhs = nalgebra::DVector::from_iterator(free.len(), free.iter().map(|&i| residual[i]));
        let Some(step) = jac.lu().solve(&rhs) else {
            log::debug!("singular power flow Jacobian at iteration {iterations}");
            break;
        };
        for (s, &i) in step.iter().zip(&free) {
            op.v_ang[i] += s;
        }
        iterations += 1;
        residual = power_flow_residual(network, &op);
        let norm = inf_norm(&residual);
        history.push(norm);
        if !norm.is_finite() {
            break;
        }
        converged = norm <= options.tolerance;
    }

    let margin = security_margin(network, &op);
    Ok(PowerFlowReport {
        final_residual_inf_norm: *history.last().expect("history starts non-empty"),
        operating_point: op,
        iterations,
        converged,
        secure: margin.inside,
        max_line_angle: margin.max_abs_line_angle,
        residual_history: history,
    })
}

/// Replace the injections of the listed non-generation buses, then scale all
/// generation injections by a common factor so the total is zero.
///
/// The factor is `-(sum of non-generation injections) / (sum of generation
/// injections)`.
pub fn rebalance_injections(network: &Network, perturbed_loads: &[(usize, f64)]) -> Result<Network> {
    let mut out = network.clone();
    for &(id, p) in perturbed_loads {
        let i = out
            .index_of(id)
            .ok_or_else(|| Error::InvalidArgument(format!("bus {id} does not exist")))?;
        if out.buses[i].kind.is_generation() {
            return Err(Error::InvalidArgument(format!(
                "bus {id} is a generation bus, not a load"
            )));
        }
        out.buses[i].p_inject = p;
    }
    let (gen, load): (Vec<_>, Vec<_>) = out.buses.iter().partition(|b| b.kind.is_generation());
    let gen_total: f64 = gen.iter().map(|b| b.p_inject).sum();
    let load_total: f64 = load.iter().map(|b| b.p_inject).sum();
    if gen.is_empty() || gen_total == 0.0 {
        return Err(Error::InvalidArgument(
            "total generation is zero; cannot rebalance".into(),
        ));
    }
    let factor = -load_total / gen_total;
    for b in out.buses.iter_mut().filter(|b| b.kind.is_generation()) {
        b.p_inject *= factor;
    }
    Ok(out)
}

/// Rebalance the network as given, solve for its angles and store them on
/// the bus table. Non-convergence is a numerical error.
pub fn balance_and_solve(network: &Network, options: &PowerFlowOptions) -> Result<(Network, PowerFlowReport)> {
    let balanced = rebalance_injections(network, &[])?;
    let report = solve_angles(&balanced, options)?;
    if !report.converged {
        return Err(Error::Numerical(format!(
            "power flow did not converge in {} iterations (residual {:e})",
            report.iterations, report.final_residual_inf_norm
        )));
    }
    let solved = balanced.with_operating_point(&report.operating_point);
    Ok((solved, report))
}
