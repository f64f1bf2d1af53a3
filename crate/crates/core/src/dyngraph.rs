//! The dynamic graph of a network at an operating point.
//!
//! Edge weights are the synchronizing coefficients
//! `w_ij = |V_i||V_j| (1/x_ij) cos(d_i - d_j)`, the sensitivity of the line
//! flow to its angle. Node weights are the bus dampings. Together they give
//! the pencil `(L, D)` whose spectrum drives the linearized angle dynamics
//! `D d(dd)/dt = -L dd`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use nalgebra::DMatrix;

use crate::error::Result;
use crate::netmodel::{Network, OperatingPoint};
use crate::topology;

/// Weights smaller than this in magnitude are stored as exactly zero.
pub const WEIGHT_CLAMP: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedEdge {
    /// Bus positions (not ids); `from -> to` keeps the branch orientation.
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicGraph {
    pub n: usize,
    pub edges: Vec<WeightedEdge>,
    pub node_weights: Vec<f64>,
}

/// Dense weighted Laplacian.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianMatrix(pub DMatrix<f64>);

impl LaplacianMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }
}

/// Signed node-by-edge incidence matrix: `+1` at the sink (`to`) bus and
/// `-1` at the source (`from`) bus, so `(B^T d)_l = d_to - d_from`.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceMatrix(pub DMatrix<f64>);

impl IncidenceMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

fn clamp(w: f64) -> f64 {
    if w.abs() < WEIGHT_CLAMP {
        0.0
    } else {
        w
    }
}

/// Wrap an angle difference into `(-pi, pi]`.
fn wrap(angle: f64) -> f64 {
    let mut a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

pub fn build_dynamic_graph(network: &Network, op: &OperatingPoint) -> DynamicGraph {
    debug_assert_eq!(op.n(), network.n());
    let edges = network
        .indexed_branches()
        .into_iter()
        .map(|br| WeightedEdge {
            from: br.from,
            to: br.to,
            weight: clamp(
                op.v_mag[br.from] * op.v_mag[br.to] * br.susceptance * (op.v_ang[br.from] - op.v_ang[br.to]).cos(),
            ),
        })
        .collect();
    DynamicGraph {
        n: network.n(),
        edges,
        node_weights: network.dampings(),
    }
}

impl DynamicGraph {
    /// Graph with explicit edge weights, mainly for synthetic tests.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)], node_weights: Vec<f64>) -> DynamicGraph {
        DynamicGraph {
            n,
            edges: edges
                .iter()
                .map(|&(from, to, weight)| WeightedEdge { from, to, weight })
                .collect(),
            node_weights,
        }
    }

    pub fn laplacian(&self) -> LaplacianMatrix {
        let mut l = DMatrix::zeros(self.n, self.n);
        for e in &self.edges {
            l[(e.from, e.from)] += e.weight;
            l[(e.to, e.to)] += e.weight;
            l[(e.from, e.to)] -= e.weight;
            l[(e.to, e.from)] -= e.weight;
        }
        LaplacianMatrix(l)
    }

    pub fn incidence(&self) -> IncidenceMatrix {
        let mut b = DMatrix::zeros(self.n, self.edges.len());
        for (l, e) in self.edges.iter().enumerate() {
            b[(e.from, l)] = -1.0;
            b[(e.to, l)] = 1.0;
        }
        IncidenceMatrix(b)
    }

    pub fn weights(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.weight).collect()
    }

    pub fn edge_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().map(|e| (e.from, e.to))
    }

    /// Component labels over edges whose weight exceeds `threshold`.
    pub fn connected_components(&self, threshold: f64) -> Vec<usize> {
        topology::component_labels(
            self.n,
            self.edges
                .iter()
                .filter(|e| e.weight > threshold)
                .map(|e| (e.from, e.to)),
        )
    }

    /// Write `(from_bus, to_bus, weight)` rows, using bus ids.
    pub fn write_edges_csv<W: Write>(&self, bus_ids: &[usize], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["from_bus", "to_bus", "weight"])?;
        for e in &self.edges {
            w.write_record([
                bus_ids[e.from].to_string(),
                bus_ids[e.to].to_string(),
                crate::io::fmt_f64(e.weight),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Write `(bus, damping)` rows.
    pub fn write_nodes_csv<W: Write>(&self, bus_ids: &[usize], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["bus", "damping"])?;
        for (id, d) in bus_ids.iter().zip(&self.node_weights) {
            w.write_record([id.to_string(), crate::io::fmt_f64(*d)])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn incidence_matrix(network: &Network) -> IncidenceMatrix {
    let mut b = DMatrix::zeros(network.n(), network.m());
    for (l, br) in network.indexed_branches().iter().enumerate() {
        b[(br.from, l)] = -1.0;
        b[(br.to, l)] = 1.0;
    }
    IncidenceMatrix(b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecurityMargin {
    /// Largest absolute line angle, radians, wrapped to `(-pi, pi]`.
    pub max_abs_line_angle: f64,
    /// Whether every line angle is strictly below `pi/2`.
    pub inside: bool,
}

pub fn security_margin(network: &Network, op: &OperatingPoint) -> SecurityMargin {
    let max_abs_line_angle = network
        .indexed_branches()
        .iter()
        .map(|br| wrap(op.v_ang[br.from] - op.v_ang[br.to]).abs())
        .fold(0.0, f64::max);
    SecurityMargin {
        max_abs_line_angle,
        inside: max_abs_line_angle < FRAC_PI_2,
    }
}

/// Threshold below which an eigenvalue of a spectrum topped by `lambda_max`
/// counts as zero.
pub fn zero_eigenvalue_threshold(lambda_max: f64) -> f64 {
    1e-9 * lambda_max.abs().max(1.0)
}
