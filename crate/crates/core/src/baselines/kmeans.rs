//! Lloyd's k-means with k-means++ seeding.

use nalgebra::{DMatrix, DVector};
use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{MfpcError, Result};
use crate::types::ClusterState;

pub const KMEANS_MAX_ITERS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub state: ClusterState,
    /// `n x k`, one center per column.
    pub centers: DMatrix<f64>,
    /// Sum of squared distances to the assigned centers.
    pub inertia: f64,
    pub iterations: usize,
}

fn sq_dist(x: &DMatrix<f64>, j: usize, center: &DVector<f64>) -> f64 {
    (x.column(j) - center).norm_squared()
}

fn plus_plus(x: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let m = x.ncols();
    let mut centers = DMatrix::zeros(x.nrows(), k);
    let first = rng.random_range(0..m);
    centers.set_column(0, &x.column(first));
    let mut nearest: Vec<f64> = (0..m)
        .map(|j| sq_dist(x, j, &centers.column(0).into_owned()))
        .collect();
    for c in 1..k {
        let pick = match WeightedIndex::new(&nearest) {
            Ok(dist) => dist.sample(rng),
            // Every sample already coincides with a center.
            Err(_) => rng.random_range(0..m),
        };
        let center = x.column(pick).into_owned();
        centers.set_column(c, &center);
        for (j, d) in nearest.iter_mut().enumerate() {
            *d = d.min(sq_dist(x, j, &center));
        }
    }
    centers
}

fn assign(x: &DMatrix<f64>, centers: &DMatrix<f64>) -> (Vec<usize>, Vec<f64>) {
    let cols: Vec<DVector<f64>> = centers.column_iter().map(|c| c.into_owned()).collect();
    (0..x.ncols())
        .map(|j| {
            let mut best = (0, sq_dist(x, j, &cols[0]));
            for (i, c) in cols.iter().enumerate().skip(1) {
                let d = sq_dist(x, j, c);
                if d < best.1 {
                    best = (i, d);
                }
            }
            best
        })
        .unzip()
}

/// Lloyd iterations from k-means++ seeds until the labels repeat or
/// [`KMEANS_MAX_ITERS`] is reached. A center that loses all its samples is
/// moved onto the sample farthest from its own center.
pub fn kmeans_fit(x: &DMatrix<f64>, k: usize, seed: u64) -> Result<KMeansFit> {
    let m = x.ncols();
    if k == 0 || k > m {
        return Err(MfpcError::InvalidConfig(format!(
            "k = {k} must lie in 1..={m}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = plus_plus(x, k, &mut rng);
    let (mut labels, mut dists) = assign(x, &centers);
    let mut iterations = 0;
    for _ in 0..KMEANS_MAX_ITERS {
        iterations += 1;
        let mut sums = DMatrix::zeros(x.nrows(), k);
        let mut counts = vec![0usize; k];
        for (j, &l) in labels.iter().enumerate() {
            let mut col = sums.column_mut(l);
            col += x.column(j);
            counts[l] += 1;
        }
        let mut taken = vec![false; m];
        for (i, &count) in counts.iter().enumerate() {
            if count > 0 {
                centers.set_column(i, &(sums.column(i) / count as f64));
            } else {
                let far = (0..m)
                    .filter(|&j| !taken[j])
                    .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
                    .expect("k <= m leaves a sample to move");
                taken[far] = true;
                centers.set_column(i, &x.column(far));
            }
        }
        let (next, next_dists) = assign(x, &centers);
        dists = next_dists;
        if next == labels {
            break;
        }
        labels = next;
    }
    let inertia = dists.iter().sum();
    Ok(KMeansFit {
        state: ClusterState::new(labels, k)?,
        centers,
        inertia,
        iterations,
    })
}
