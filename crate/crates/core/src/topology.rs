//! Connected-component labelling shared by the network validator and the
//! dynamic graph.

use std::collections::VecDeque;

/// Label the components of an undirected graph on `n` nodes.
///
/// Labels are assigned in order of the lowest node index of each component,
/// so node 0 always carries label 0.
pub fn component_labels<I>(n: usize, edges: I) -> Vec<usize>
where
    I: IntoIterator<Item = (usize, usize)>,
{
    let mut adjacency = vec![Vec::new(); n];
    for (a, b) in edges {
        adjacency[a].push(b);
        adjacency[b].push(a);
    }
    let mut labels = vec![usize::MAX; n];
    let mut next = 0;
    let mut queue = VecDeque::new();
    for start in 0..n {
        if labels[start] != usize::MAX {
            continue;
        }
        labels[start] = next;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            for &v in &adjacency[u] {
                if labels[v] == usize::MAX {
                    labels[v] = next;
                    queue.push_back(v);
                }
            }
        }
        next += 1;
    }
    labels
}

pub fn component_count(labels: &[usize]) -> usize {
    labels.iter().max().map_or(0, |m| m + 1)
}

/// Whether the node subset `members` induces a connected subgraph.
pub fn is_induced_connected<I>(n: usize, edges: I, members: &[usize]) -> bool
where
    I: IntoIterator<Item = (usize, usize)>,
{
    if members.is_empty() {
        return false;
    }
    let mut local = vec![usize::MAX; n];
    for (pos, &m) in members.iter().enumerate() {
        local[m] = pos;
    }
    let inner = edges.into_iter().filter_map(|(a, b)| {
        let (la, lb) = (local[a], local[b]);
        (la != usize::MAX && lb != usize::MAX).then_some((la, lb))
    });
    component_count(&component_labels(members.len(), inner)) == 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_follow_lowest_index() {
        let labels = component_labels(5, [(3, 4), (0, 2)]);
        assert_eq!(labels, vec![0, 1, 0, 2, 2]);
        assert_eq!(component_count(&labels), 3);
    }

    #[test]
    fn induced_subgraph_connectivity() {
        let edges = [(0, 1), (1, 2), (2, 3)];
        assert!(is_induced_connected(4, edges, &[1, 2]));
        assert!(!is_induced_connected(4, edges, &[0, 2]));
        assert!(!is_induced_connected(4, edges, &[]));
    }
}
