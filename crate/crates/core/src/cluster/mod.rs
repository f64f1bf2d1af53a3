//! Generalized spectral clustering.
//!
//! The leading `k` generalized eigenvectors of `(L, D)` are normalized in the
//! D-norm, each bus row is projected onto the unit sphere, and k-means groups
//! the rows. The number of clusters can be chosen from the largest relative
//! spectral gap `(lambda_{k+1} - lambda_k) / lambda_k`.

mod kmeans;
mod metrics;
mod oracle;

use std::io::Write;

use nalgebra::DMatrix;
use serde::Serialize;

pub use kmeans::{kmeans, KMeansResult};
pub use metrics::{boundary, phi, phi_from_edges, rho_hat, total_damping, ClusterQuality, PartitionQuality};
pub use oracle::{brute_force_partition, MAX_BRUTE_FORCE_NODES};

use crate::dyngraph::{build_dynamic_graph, zero_eigenvalue_threshold, DynamicGraph};
use crate::error::{Error, Result};
use crate::geig::{generalized_eig, EigenSolution};
use crate::netmodel::{Network, OperatingPoint};

/// Assignment of nodes to `k` labelled clusters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Partition {
    pub k: usize,
    pub assignment: Vec<usize>,
}

impl Partition {
    /// Relabel so that clusters are numbered in order of their lowest
    /// member. Labels not present in `assignment` are dropped from the count
    /// only if `k` overstates it; callers pass the intended `k`.
    pub fn canonical(assignment: Vec<usize>, k: usize) -> Partition {
        let mut map = vec![usize::MAX; assignment.iter().max().map_or(0, |m| m + 1).max(k)];
        let mut next = 0;
        let assignment = assignment
            .into_iter()
            .map(|l| {
                if map[l] == usize::MAX {
                    map[l] = next;
                    next += 1;
                }
                map[l]
            })
            .collect();
        Partition { k, assignment }
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    /// Member lists per label, ascending.
    pub fn sets(&self) -> Vec<Vec<usize>> {
        let mut sets = vec![Vec::new(); self.k];
        for (i, &l) in self.assignment.iter().enumerate() {
            sets[l].push(i);
        }
        sets
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.sets().iter().map(Vec::len).collect()
    }
}

/// Bus coordinates on the unit sphere, one row per bus.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub coords: DMatrix<f64>,
}

impl Embedding {
    pub fn write_csv<W: Write>(&self, bus_ids: &[usize], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["bus".to_string()];
        header.extend((1..=self.coords.ncols()).map(|c| format!("coord_{c}")));
        w.write_record(&header)?;
        for (id, row) in bus_ids.iter().zip(self.coords.row_iter()) {
            let mut rec = vec![id.to_string()];
            rec.extend(row.iter().map(|x| crate::io::fmt_f64(*x)));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Rows with a smaller norm before projection make the embedding degenerate.
pub const DEGENERATE_ROW_NORM: f64 = 1e-12;

pub fn spectral_embedding(sol: &EigenSolution, damping: &[f64], k: usize) -> Result<Embedding> {
    let n = sol.n();
    if k < 2 || k > n {
        return Err(Error::InvalidArgument(format!(
            "k must satisfy 2 <= k <= n (k = {k}, n = {n})"
        )));
    }
    let mut x = sol.leading(k);
    for mut col in x.column_iter_mut() {
        let norm = col.iter().zip(damping).map(|(v, d)| d * v * v).sum::<f64>().sqrt();
        col /= norm;
    }
    for (row, mut r) in x.row_iter_mut().enumerate() {
        let norm = r.norm();
        if norm < DEGENERATE_ROW_NORM {
            return Err(Error::DegenerateEmbedding { row, norm });
        }
        r /= norm;
    }
    Ok(Embedding { coords: x })
}

/// `(k, gap)` for `k = 2..=k_max` with `gap = (lambda_{k+1} - lambda_k) / lambda_k`
/// (eigenvalues indexed from 1).
pub fn relative_spectral_gaps(eigenvalues: &[f64], k_max: usize) -> Result<Vec<(usize, f64)>> {
    let n = eigenvalues.len();
    if n < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 eigenvalues (got {n})")));
    }
    if k_max < 2 || k_max > n - 1 {
        return Err(Error::InvalidArgument(format!(
            "k_max must satisfy 2 <= k_max <= n - 1 (k_max = {k_max}, n = {n})"
        )));
    }
    let lambda_max = eigenvalues[n - 1];
    if eigenvalues[1] <= zero_eigenvalue_threshold(lambda_max) {
        return Err(Error::Disconnected(eigenvalues[1]));
    }
    Ok((2..=k_max)
        .map(|k| (k, (eigenvalues[k] - eigenvalues[k - 1]) / eigenvalues[k - 1]))
        .collect())
}

/// The `k` with the largest gap; ties go to the smallest `k`.
pub fn select_k(gaps: &[(usize, f64)]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &(k, g) in gaps {
        if best.is_none_or(|(_, b)| g > b) {
            best = Some((k, g));
        }
    }
    best.map(|(k, _)| k)
}

pub fn default_k_max(n: usize) -> usize {
    n.saturating_sub(1).min(10)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterOptions {
    pub seed: u64,
    pub restarts: usize,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        ClusterOptions { seed: 42, restarts: 20 }
    }
}

#[derive(Debug, Clone)]
pub struct ClusterOutcome {
    pub partition: Partition,
    pub quality: PartitionQuality,
    pub embedding: Embedding,
    pub eigen: EigenSolution,
    pub wcss: f64,
}

/// Cluster a dynamic graph into `k` groups.
pub fn cluster_graph(graph: &DynamicGraph, k: usize, options: &ClusterOptions) -> Result<ClusterOutcome> {
    if k < 2 || k > graph.n {
        return Err(Error::InvalidArgument(format!(
            "k must satisfy 2 <= k <= n (k = {k}, n = {})",
            graph.n
        )));
    }
    let eigen = generalized_eig(graph.laplacian().matrix(), &graph.node_weights)?;
    cluster_with_eigen(graph, eigen, k, options)
}

/// Cluster using an already computed generalized eigensolution of `graph`.
pub fn cluster_with_eigen(
    graph: &DynamicGraph,
    eigen: EigenSolution,
    k: usize,
    options: &ClusterOptions,
) -> Result<ClusterOutcome> {
    let embedding = spectral_embedding(&eigen, &graph.node_weights, k)?;
    let km = kmeans(&embedding.coords, k, options.seed, options.restarts)?;
    let quality = PartitionQuality::compute(&km.partition, graph);
    if !quality.all_connected() {
        log::warn!("partition with k = {k} has clusters that are not connected");
    }
    Ok(ClusterOutcome {
        partition: km.partition,
        quality,
        embedding,
        eigen,
        wcss: km.wcss,
    })
}

pub fn cluster_network(
    network: &Network,
    op: &OperatingPoint,
    k: usize,
    options: &ClusterOptions,
) -> Result<ClusterOutcome> {
    cluster_graph(&build_dynamic_graph(network, op), k, options)
}

#[derive(Debug, Clone, Serialize)]
pub struct GapEntry {
    pub k: usize,
    pub gap: f64,
}

/// Serializable clustering result keyed by bus id.
#[derive(Debug, Clone, Serialize)]
pub struct PartitionReport {
    pub k: usize,
    pub bus_ids: Vec<usize>,
    pub assignment: Vec<usize>,
    pub quality: Vec<ClusterQuality>,
    pub rho_hat: f64,
    pub auto_k: bool,
    pub selected_k_gaps: Vec<GapEntry>,
}

impl PartitionReport {
    pub fn new(bus_ids: Vec<usize>, outcome: &ClusterOutcome, auto_k: bool, gaps: &[(usize, f64)]) -> PartitionReport {
        PartitionReport {
            k: outcome.partition.k,
            bus_ids,
            assignment: outcome.partition.assignment.clone(),
            quality: outcome.quality.clusters.clone(),
            rho_hat: outcome.quality.rho_hat,
            auto_k,
            selected_k_gaps: gaps.iter().map(|&(k, gap)| GapEntry { k, gap }).collect(),
        }
    }
}

pub fn write_gaps_csv<W: Write>(gaps: &[(usize, f64)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "relative_gap"])?;
    for &(k, g) in gaps {
        w.write_record([k.to_string(), crate::io::fmt_f64(g)])?;
    }
    w.flush()?;
    Ok(())
}
