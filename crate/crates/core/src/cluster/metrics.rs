//! Cluster badness `phi(S) = cut(S) / damping(S)` and related measures.

use nalgebra::DMatrix;
use serde::Serialize;

use super::Partition;
use crate::dyngraph::DynamicGraph;
use crate::topology;

/// Sum of edge weights with exactly one endpoint in `set`.
pub fn boundary(set: &[usize], graph: &DynamicGraph) -> f64 {
    let member = membership(graph.n, set);
    graph
        .edges
        .iter()
        .filter(|e| member[e.from] != member[e.to])
        .map(|e| e.weight)
        .sum()
}

pub fn total_damping(set: &[usize], damping: &[f64]) -> f64 {
    set.iter().map(|&i| damping[i]).sum()
}

/// `chi^T L chi / chi^T D chi` for the indicator vector `chi` of `set`.
pub fn phi(set: &[usize], laplacian: &DMatrix<f64>, damping: &[f64]) -> f64 {
    let mut quad = 0.0;
    for &i in set {
        for &j in set {
            quad += laplacian[(i, j)];
        }
    }
    quad / total_damping(set, damping)
}

/// `phi` computed as boundary over damping directly from the edge list.
pub fn phi_from_edges(set: &[usize], graph: &DynamicGraph) -> f64 {
    boundary(set, graph) / total_damping(set, &graph.node_weights)
}

/// Largest cluster badness of a partition.
pub fn rho_hat(partition: &Partition, laplacian: &DMatrix<f64>, damping: &[f64]) -> f64 {
    partition
        .sets()
        .iter()
        .map(|s| phi(s, laplacian, damping))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn membership(n: usize, set: &[usize]) -> Vec<bool> {
    let mut m = vec![false; n];
    for &i in set {
        m[i] = true;
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterQuality {
    pub label: usize,
    pub size: usize,
    pub phi: f64,
    pub boundary: f64,
    pub total_damping: f64,
    /// The cluster induces a connected subgraph over positive-weight edges.
    pub connected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionQuality {
    pub clusters: Vec<ClusterQuality>,
    pub rho_hat: f64,
}

impl PartitionQuality {
    pub fn compute(partition: &Partition, graph: &DynamicGraph) -> PartitionQuality {
        let clusters: Vec<ClusterQuality> = partition
            .sets()
            .into_iter()
            .enumerate()
            .map(|(label, set)| {
                let boundary = boundary(&set, graph);
                let total_damping = total_damping(&set, &graph.node_weights);
                let connected = topology::is_induced_connected(
                    graph.n,
                    graph.edges.iter().filter(|e| e.weight > 0.0).map(|e| (e.from, e.to)),
                    &set,
                );
                ClusterQuality {
                    label,
                    size: set.len(),
                    phi: boundary / total_damping,
                    boundary,
                    total_damping,
                    connected,
                }
            })
            .collect();
        let rho_hat = clusters.iter().map(|c| c.phi).fold(f64::NEG_INFINITY, f64::max);
        PartitionQuality { clusters, rho_hat }
    }

    pub fn all_connected(&self) -> bool {
        self.clusters.iter().all(|c| c.connected)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn path3() -> DynamicGraph {
        DynamicGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0)], vec![1.0; 3])
    }

    #[test]
    fn path_examples() {
        let g = path3();
        let l = g.laplacian().0;
        assert_eq!(phi(&[0], &l, &g.node_weights), 1.0);
        assert_eq!(phi_from_edges(&[0], &g), 1.0);
        assert_eq!(phi(&[0, 1, 2], &l, &g.node_weights), 0.0);
        assert_eq!(boundary(&[0, 1, 2], &g), 0.0);
        assert_eq!(total_damping(&[0, 2], &g.node_weights), 2.0);
    }

    #[test]
    fn quality_flags_disconnected_cluster() {
        let g = path3();
        let p = Partition::canonical(vec![0, 1, 0], 2);
        let q = PartitionQuality::compute(&p, &g);
        assert!(!q.clusters[0].connected && q.clusters[1].connected);
        assert_eq!(q.rho_hat, 2.0);
        assert!(!q.all_connected());
    }

    fn random_case() -> impl Strategy<Value = (DynamicGraph, Vec<usize>)> {
        (3usize..10).prop_flat_map(|n| {
            let m = n * (n - 1) / 2;
            (
                prop::collection::vec(prop::option::weighted(0.5, 0.01f64..5.0), m),
                prop::collection::vec(0.5f64..30.0, n),
                prop::collection::vec(any::<bool>(), n),
            )
                .prop_map(move |(w, d, inside)| {
                    let mut edges = Vec::new();
                    let mut idx = 0;
                    for i in 0..n {
                        for j in i + 1..n {
                            if let Some(w) = w[idx] {
                                edges.push((i, j, w));
                            }
                            idx += 1;
                        }
                    }
                    let mut set: Vec<usize> = (0..n).filter(|&i| inside[i]).collect();
                    if set.is_empty() {
                        set.push(0);
                    }
                    (DynamicGraph::from_edges(n, &edges, d), set)
                })
        })
    }

    proptest! {
        #[test]
        fn quadratic_form_matches_edge_sum((g, set) in random_case()) {
            let l = g.laplacian().0;
            let a = phi(&set, &l, &g.node_weights);
            let b = phi_from_edges(&set, &g);
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }

        #[test]
        fn boundary_is_complement_symmetric((g, set) in random_case()) {
            let comp: Vec<usize> = (0..g.n).filter(|i| !set.contains(i)).collect();
            prop_assert!((boundary(&set, &g) - boundary(&comp, &g)).abs() <= 1e-12);
        }
    }
}
