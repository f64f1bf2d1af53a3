//! Exhaustive minimization of the k-way badness `min max_i phi(S_i)`.

use nalgebra::DMatrix;

use super::Partition;
use crate::error::{Error, Result};

/// Largest problem size accepted by [`brute_force_partition`].
pub const MAX_BRUTE_FORCE_NODES: usize = 14;

struct Search<'a> {
    n: usize,
    k: usize,
    /// Weighted neighbours with smaller index, per node.
    earlier: Vec<Vec<(usize, f64)>>,
    damping: &'a [f64],
    labels: Vec<usize>,
    cut: Vec<f64>,
    mass: Vec<f64>,
    best_value: f64,
    best: Vec<usize>,
}

impl Search<'_> {
    fn descend(&mut self, node: usize, used: usize) {
        if node == self.n {
            if used == self.k {
                let value = (0..self.k)
                    .map(|c| self.cut[c] / self.mass[c])
                    .fold(f64::NEG_INFINITY, f64::max);
                if value < self.best_value {
                    self.best_value = value;
                    self.best.clone_from(&self.labels);
                }
            }
            return;
        }
        // Enough nodes must remain to open every unused label.
        if self.k - used > self.n - node {
            return;
        }
        let top = if used < self.k { used + 1 } else { self.k };
        for c in 0..top {
            self.labels[node] = c;
            self.mass[c] += self.damping[node];
            for &(j, w) in &self.earlier[node] {
                let lj = self.labels[j];
                if lj != c {
                    self.cut[c] += w;
                    self.cut[lj] += w;
                }
            }
            self.descend(node + 1, used.max(c + 1));
            for &(j, w) in &self.earlier[node] {
                let lj = self.labels[j];
                if lj != c {
                    self.cut[c] -= w;
                    self.cut[lj] -= w;
                }
            }
            self.mass[c] -= self.damping[node];
        }
    }
}

/// Exact optimum of the k-way partition problem by enumeration.
///
/// Assignments are enumerated as restricted growth strings, which visits
/// every partition into exactly `k` non-empty sets once. Returns the first
/// optimal partition in that order together with `rho*(k)`.
pub fn brute_force_partition(laplacian: &DMatrix<f64>, damping: &[f64], k: usize) -> Result<(Partition, f64)> {
    let n = damping.len();
    if laplacian.nrows() != n || laplacian.ncols() != n {
        return Err(Error::InvalidArgument("Laplacian and damping dimensions differ".into()));
    }
    if n > MAX_BRUTE_FORCE_NODES {
        return Err(Error::InvalidArgument(format!(
            "brute-force partitioning is limited to n <= {MAX_BRUTE_FORCE_NODES} (n = {n})"
        )));
    }
    if k < 1 || k > n {
        return Err(Error::InvalidArgument(format!("need 1 <= k <= n (k = {k}, n = {n})")));
    }
    let earlier = (0..n)
        .map(|i| {
            (0..i)
                .filter(|&j| laplacian[(i, j)] != 0.0)
                .map(|j| (j, -laplacian[(i, j)]))
                .collect()
        })
        .collect();
    let mut search = Search {
        n,
        k,
        earlier,
        damping,
        labels: vec![0; n],
        cut: vec![0.0; k],
        mass: vec![0.0; k],
        best_value: f64::INFINITY,
        best: Vec::new(),
    };
    search.descend(0, 0);
    Ok((Partition::canonical(search.best, k), search.best_value))
}
