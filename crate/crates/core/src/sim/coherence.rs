//! Coherence of frequency deviations: the cosine of the angle between two
//! signals in L2, with inner products by trapezoidal quadrature.

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::{frequency_deviation, simulate, Disturbance, DisturbanceKind, SimConfig};
use crate::cluster::Partition;
use crate::error::{Error, Result};
use crate::netmodel::{Network, OperatingPoint};

/// Signals with a smaller L2 norm are treated as quiescent.
pub const QUIESCENT_NORM: f64 = 1e-10;

/// In a coherence matrix, a response smaller than this fraction of the
/// disturbed bus's own deviation counts as quiescent.
pub const RELATIVE_QUIESCENCE: f64 = 1e-9;

fn trapezoid_dot(a: &[f64], b: &[f64], dt: f64) -> f64 {
    let n = a.len();
    let inner: f64 = (1..n - 1).map(|s| a[s] * b[s]).sum();
    dt * (inner + 0.5 * (a[0] * b[0] + a[n - 1] * b[n - 1]))
}

/// `<e_i, e_j> / (||e_i|| ||e_j||)` for signals sampled every `dt`.
pub fn coherence(e_i: &[f64], e_j: &[f64], dt: f64) -> Result<f64> {
    if e_i.len() != e_j.len() || e_i.len() < 2 {
        return Err(Error::InvalidArgument(
            "coherence needs two equal-length signals of 2+ samples".into(),
        ));
    }
    let ni = trapezoid_dot(e_i, e_i, dt).sqrt();
    let nj = trapezoid_dot(e_j, e_j, dt).sqrt();
    if ni < QUIESCENT_NORM || nj < QUIESCENT_NORM {
        return Err(Error::Numerical(format!(
            "coherence undefined for a quiescent signal (norms {ni:e}, {nj:e})"
        )));
    }
    Ok((trapezoid_dot(e_i, e_j, dt) / (ni * nj)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceConfig {
    pub sim: SimConfig,
    pub onset: f64,
    pub duration: f64,
    pub amplitude: f64,
    pub kind: DisturbanceKind,
    /// The disturbance at bus `id` uses seed `base_seed + id`.
    pub base_seed: u64,
}

impl Default for CoherenceConfig {
    fn default() -> Self {
        CoherenceConfig {
            sim: SimConfig::default(),
            onset: 3.0,
            duration: 0.5,
            amplitude: 0.5,
            kind: DisturbanceKind::Step,
            base_seed: 42,
        }
    }
}

/// Row `i` holds the coherence of every bus with bus `i` after a disturbance
/// at bus `i`. Entries for buses that stay quiescent are 0.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceMatrix {
    pub bus_ids: Vec<usize>,
    pub labels: Vec<usize>,
    pub matrix: DMatrix<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoherenceRow {
    pub index: usize,
    pub bus: usize,
    pub cluster: usize,
}

impl CoherenceMatrix {
    /// Bus positions sorted by cluster label, then by position.
    pub fn order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.bus_ids.len()).collect();
        order.sort_by_key(|&i| (self.labels[i], i));
        order
    }

    pub fn permuted(&self) -> DMatrix<f64> {
        let order = self.order();
        self.matrix.select_rows(&order).select_columns(&order)
    }

    /// Mean off-diagonal coherence within clusters and between clusters.
    pub fn block_means(&self) -> (f64, f64) {
        let n = self.bus_ids.len();
        let (mut intra, mut ni, mut inter, mut ne) = (0.0, 0usize, 0.0, 0usize);
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                if self.labels[i] == self.labels[j] {
                    intra += self.matrix[(i, j)];
                    ni += 1;
                } else {
                    inter += self.matrix[(i, j)];
                    ne += 1;
                }
            }
        }
        (intra / ni.max(1) as f64, inter / ne.max(1) as f64)
    }

    pub fn sidecar(&self) -> Vec<CoherenceRow> {
        self.order()
            .into_iter()
            .enumerate()
            .map(|(index, i)| CoherenceRow {
                index,
                bus: self.bus_ids[i],
                cluster: self.labels[i],
            })
            .collect()
    }

    /// Cluster-permuted matrix with bus ids as row and column headers.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let order = self.order();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["bus".to_string()];
        header.extend(order.iter().map(|&i| self.bus_ids[i].to_string()));
        w.write_record(&header)?;
        for &i in &order {
            let mut rec = vec![self.bus_ids[i].to_string()];
            rec.extend(order.iter().map(|&j| crate::io::fmt_f64(self.matrix[(i, j)])));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn coherence_row(network: &Network, op: &OperatingPoint, config: &CoherenceConfig, i: usize) -> Result<Vec<f64>> {
    let id = network.buses[i].id;
    let disturbance = Disturbance {
        bus: id,
        start_time: config.onset,
        duration: config.duration,
        amplitude: config.amplitude,
        seed: config.base_seed.wrapping_add(id as u64),
        kind: config.kind,
    };
    let traj = simulate(network, op, &[disturbance], &config.sim)?;
    let dev = frequency_deviation(&traj, network, (config.onset, *traj.times.last().expect("non-empty")))?;
    let dt = traj.dt();
    let source: Vec<f64> = dev.values.column(i).iter().copied().collect();
    let floor = QUIESCENT_NORM.max(RELATIVE_QUIESCENCE * trapezoid_dot(&source, &source, dt).sqrt());
    (0..network.n())
        .map(|j| {
            let other: Vec<f64> = dev.values.column(j).iter().copied().collect();
            if trapezoid_dot(&other, &other, dt).sqrt() < floor {
                return Ok(0.0);
            }
            match coherence(&source, &other, dt) {
                Ok(c) => Ok(c),
                Err(Error::Numerical(_)) => Ok(0.0),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// One simulation per bus, run in parallel; the result does not depend on
/// scheduling since each bus has its own seed.
pub fn coherence_matrix(
    network: &Network,
    op: &OperatingPoint,
    partition: &Partition,
    config: &CoherenceConfig,
) -> Result<CoherenceMatrix> {
    let n = network.n();
    if partition.n() != n {
        return Err(Error::InvalidArgument(format!(
            "partition covers {} buses, network has {n}",
            partition.n()
        )));
    }
    if !(config.onset < config.sim.t_end) {
        return Err(Error::InvalidArgument(format!(
            "disturbance onset {} s is not before t_end = {} s",
            config.onset, config.sim.t_end
        )));
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| coherence_row(network, op, config, i))
        .collect::<Result<_>>()?;
    Ok(CoherenceMatrix {
        bus_ids: network.bus_ids(),
        labels: partition.assignment.clone(),
        matrix: DMatrix::from_fn(n, n, |i, j| rows[i][j]),
    })
}
