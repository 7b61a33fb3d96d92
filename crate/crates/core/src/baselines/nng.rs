//! Deterministic initial labels from a mutual nearest-neighbor graph.

use nalgebra::DMatrix;

use crate::error::{MfpcError, Result};
use crate::linalg::{column_mean, scatter_matrix};
use crate::types::ClusterState;

pub const DEFAULT_NEIGHBORS: usize = 5;

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] != a {
            self.parent[a] = self.parent[self.parent[a]];
            a = self.parent[a];
        }
        a
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Indices of the `count` nearest other samples of each sample, ties broken
/// by index.
fn nearest_neighbors(x: &DMatrix<f64>, count: usize) -> Vec<Vec<usize>> {
    let m = x.ncols();
    (0..m)
        .map(|a| {
            let mut others: Vec<(f64, usize)> = (0..m)
                .filter(|&b| b != a)
                .map(|b| ((x.column(a) - x.column(b)).norm_squared(), b))
                .collect();
            others.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)));
            others.truncate(count);
            others.into_iter().map(|(_, b)| b).collect()
        })
        .collect()
}

/// Connected components of the mutual `neighbors`-nearest-neighbor graph,
/// merged (closest centroids first) or split (largest component, at the
/// median of its principal direction) until exactly `k` remain. Clusters are
/// numbered by their smallest sample index.
pub fn nng_init(x: &DMatrix<f64>, k: usize, neighbors: usize) -> Result<ClusterState> {
    let m = x.ncols();
    if k == 0 || k > m {
        return Err(MfpcError::InvalidConfig(format!(
            "k = {k} must lie in 1..={m}"
        )));
    }
    let count = neighbors.min(m.saturating_sub(1));
    let knn = nearest_neighbors(x, count);
    let mut sets = DisjointSet::new(m);
    for (a, list) in knn.iter().enumerate() {
        for &b in list {
            if knn[b].contains(&a) {
                sets.union(a, b);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_group = vec![usize::MAX; m];
    for j in 0..m {
        let r = sets.find(j);
        if root_group[r] == usize::MAX {
            root_group[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[root_group[r]].push(j);
    }

    while groups.len() > k {
        let centroids: Vec<_> = groups
            .iter()
            .map(|g| column_mean(x, g))
            .collect::<Result<_>>()?;
        let mut best = (0, 1, f64::INFINITY);
        for a in 0..groups.len() {
            for b in a + 1..groups.len() {
                let d = (&centroids[a] - &centroids[b]).norm_squared();
                if d < best.2 {
                    best = (a, b, d);
                }
            }
        }
        let absorbed = groups.remove(best.1);
        groups[best.0].extend(absorbed);
        groups[best.0].sort_unstable();
    }

    while groups.len() < k {
        let largest = (0..groups.len())
            .max_by(|&a, &b| groups[a].len().cmp(&groups[b].len()).then(b.cmp(&a)))
            .expect("at least one group");
        let group = groups.remove(largest);
        let (left, right) = split_by_principal_direction(x, &group)?;
        groups.push(left);
        groups.push(right);
        groups.sort_by_key(|g| g[0]);
    }

    groups.sort_by_key(|g| g[0]);
    let mut labels = vec![0; m];
    for (i, g) in groups.iter().enumerate() {
        for &j in g {
            labels[j] = i;
        }
    }
    ClusterState::new(labels, k)
}

fn split_by_principal_direction(x: &DMatrix<f64>, group: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
    let mean = column_mean(x, group)?;
    let s = scatter_matrix(x, group, &mean)?;
    let eig = nalgebra::SymmetricEigen::new(s.into_inner());
    let top = eig.eigenvalues.imax();
    let mut dir = eig.eigenvectors.column(top).into_owned();
    crate::linalg::fix_sign(&mut dir);
    let mut order: Vec<(f64, usize)> = group.iter().map(|&j| (dir.dot(&(x.column(j) - &mean)), j)).collect();
    order.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)));
    let half = order.len() / 2;
    let mut left: Vec<usize> = order[..half].iter().map(|p| p.1).collect();
    let mut right: Vec<usize> = order[half..].iter().map(|p| p.1).collect();
    left.sort_unstable();
    right.sort_unstable();
    Ok((left, right))
}
