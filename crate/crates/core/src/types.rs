//! Domain types shared by the estimators.
//!
//! Samples are stored column-major: a `Dataset` with `n` features and `m`
//! samples holds an `n x m` matrix whose columns are the samples. Cluster
//! labels are 0-based everywhere inside the crate; the 1-based convention of
//! label files is handled by [`validate_dataset`] and the `io` module.

use nalgebra::{DMatrix, DVector};

use crate::error::{MfpcError, Result};

/// A validated sample matrix with optional ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: DMatrix<f64>,
    labels: Option<Vec<usize>>,
    feature_names: Option<Vec<String>>,
}

impl Dataset {
    /// Builds a dataset from an `n x m` feature matrix and optional 0-based
    /// labels. Every entry must be finite and, when labels are given, every
    /// class in `0..k` must occur at least once.
    pub fn new(features: DMatrix<f64>, labels: Option<Vec<usize>>) -> Result<Self> {
        if features.nrows() == 0 || features.ncols() == 0 {
            return Err(MfpcError::EmptyMatrix);
        }
        for sample in 0..features.ncols() {
            for feature in 0..features.nrows() {
                if !features[(feature, sample)].is_finite() {
                    return Err(MfpcError::NonFiniteEntry { feature, sample });
                }
            }
        }
        if let Some(labels) = &labels {
            if labels.len() != features.ncols() {
                return Err(MfpcError::LengthMismatch {
                    expected: features.ncols(),
                    found: labels.len(),
                });
            }
            check_classes_present(labels)?;
        }
        Ok(Self {
            features,
            labels,
            feature_names: None,
        })
    }

    /// Builds a dataset from one row per sample.
    pub fn from_rows(rows: &[Vec<f64>], labels: Option<Vec<usize>>) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if m == 0 || n == 0 {
            return Err(MfpcError::EmptyMatrix);
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(MfpcError::LengthMismatch {
                expected: n,
                found: bad.len(),
            });
        }
        let features = DMatrix::from_fn(n, m, |i, j| rows[j][i]);
        Self::new(features, labels)
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_features() {
            return Err(MfpcError::LengthMismatch {
                expected: self.n_features(),
                found: names.len(),
            });
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    /// 0-based ground-truth labels, if present.
    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn n_features(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.features.ncols()
    }

    /// Number of ground-truth classes (0 when unlabeled).
    pub fn n_classes(&self) -> usize {
        self.labels
            .as_ref()
            .map_or(0, |l| l.iter().max().map_or(0, |&c| c + 1))
    }

    pub fn sample(&self, j: usize) -> DVector<f64> {
        self.features.column(j).into_owned()
    }

    /// Drops the labels, keeping the features.
    pub fn without_labels(&self) -> Self {
        Self {
            features: self.features.clone(),
            labels: None,
            feature_names: self.feature_names.clone(),
        }
    }
}

fn check_classes_present(labels: &[usize]) -> Result<()> {
    let k = labels.iter().max().map_or(0, |&c| c + 1);
    let mut seen = vec![false; k];
    for &l in labels {
        seen[l] = true;
    }
    match seen.iter().position(|s| !s) {
        Some(missing) => Err(MfpcError::MissingClass { class: missing + 1 }),
        None => Ok(()),
    }
}

/// Converts 1-based external labels (as found in files) to the internal
/// representation and validates the whole dataset.
pub fn validate_dataset(features: DMatrix<f64>, labels: Option<&[i64]>) -> Result<Dataset> {
    let labels = match labels {
        None => None,
        Some(raw) => {
            let k = raw.iter().copied().max().unwrap_or(0).max(1) as usize;
            let mut out = Vec::with_capacity(raw.len());
            for (sample, &label) in raw.iter().enumerate() {
                if label < 1 {
                    return Err(MfpcError::LabelOutOfRange { sample, label, k });
                }
                out.push((label - 1) as usize);
            }
            Some(out)
        }
    };
    Dataset::new(features, labels)
}

/// A hard assignment of `m` samples to `k` clusters.
///
/// Empty clusters are representable; the estimators decide how to repair
/// them.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClusterState {
    labels: Vec<usize>,
    k: usize,
}

impl ClusterState {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(MfpcError::InvalidConfig("k must be at least 1".into()));
        }
        if let Some((sample, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= k) {
            return Err(MfpcError::LabelOutOfRange {
                sample,
                label: label as i64 + 1,
                k,
            });
        }
        Ok(Self { labels, k })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Index set `N_i` of cluster `i`, ascending.
    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(j, &l)| (l == cluster).then_some(j))
            .collect()
    }

    /// Complement `N \ N_i`, ascending.
    pub fn non_members(&self, cluster: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(j, &l)| (l != cluster).then_some(j))
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    pub fn empty_clusters(&self) -> Vec<usize> {
        self.sizes()
            .iter()
            .enumerate()
            .filter_map(|(i, &s)| (s == 0).then_some(i))
            .collect()
    }

    /// Column means of each cluster in `features`; `None` for empty clusters.
    pub fn centers(&self, features: &DMatrix<f64>) -> Vec<Option<DVector<f64>>> {
        let mut sums = vec![DVector::zeros(features.nrows()); self.k];
        let sizes = self.sizes();
        for (j, &l) in self.labels.iter().enumerate() {
            sums[l] += features.column(j);
        }
        sums.into_iter()
            .zip(sizes)
            .map(|(s, n)| (n > 0).then(|| s / n as f64))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    Linear,
    Gaussian { mu: f64 },
}

/// Kernel choice for the nonlinear formulation, with an optional
/// reduced-basis size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub reduced_size: Option<usize>,
}

/// Basis size used when a Gaussian kernel is requested without one.
pub const DEFAULT_REDUCED_SIZE: usize = 200;

impl KernelSpec {
    pub const fn linear() -> Self {
        Self {
            kind: KernelKind::Linear,
            reduced_size: None,
        }
    }

    pub const fn gaussian(mu: f64) -> Self {
        Self {
            kind: KernelKind::Gaussian { mu },
            reduced_size: None,
        }
    }

    pub fn with_reduced_size(mut self, size: usize) -> Self {
        self.reduced_size = Some(size);
        self
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.kind, KernelKind::Linear)
    }

    pub fn mu(&self) -> Option<f64> {
        match self.kind {
            KernelKind::Linear => None,
            KernelKind::Gaussian { mu } => Some(mu),
        }
    }

    /// Basis size for `m` samples.
    pub fn basis_size(&self, m: usize) -> usize {
        self.reduced_size.unwrap_or(DEFAULT_REDUCED_SIZE).min(m)
    }

    pub fn validate(&self, m: Option<usize>) -> Result<()> {
        if let KernelKind::Gaussian { mu } = self.kind {
            if !(mu > 0.0 && mu.is_finite()) {
                return Err(MfpcError::InvalidConfig(format!(
                    "gaussian kernel width must be positive, got {mu}"
                )));
            }
        }
        match (self.reduced_size, m) {
            (Some(0), _) => Err(MfpcError::InvalidConfig(
                "reduced basis size must be positive".into(),
            )),
            (Some(r), Some(m)) if r > m => Err(MfpcError::InvalidConfig(format!(
                "reduced basis size {r} exceeds the {m} available samples"
            ))),
            _ => Ok(()),
        }
    }
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self::linear()
    }
}

/// Parameters of one MFPC fit.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub c1: f64,
    pub c2: f64,
    /// Weight of the unit-ball penalty.
    pub sigma: f64,
    /// Number of projection columns per cluster.
    pub p: usize,
    pub tol_cccp: f64,
    pub tol_qp: f64,
    pub tol_orth: f64,
    pub max_cccp_iters: usize,
    pub max_outer_iters: usize,
    pub seed: u64,
    pub kernel: KernelSpec,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            c1: 1.0,
            c2: 1.0,
            sigma: 100.0,
            p: 1,
            tol_cccp: 1e-3,
            tol_qp: 1e-6,
            tol_orth: 1e-6,
            max_cccp_iters: 200,
            max_outer_iters: 50,
            seed: 0,
            kernel: KernelSpec::linear(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("c1", self.c1),
            ("c2", self.c2),
            ("sigma", self.sigma),
            ("tol_cccp", self.tol_cccp),
            ("tol_qp", self.tol_qp),
            ("tol_orth", self.tol_orth),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(MfpcError::InvalidConfig(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        if self.p == 0 {
            return Err(MfpcError::InvalidConfig("p must be at least 1".into()));
        }
        if self.max_cccp_iters == 0 || self.max_outer_iters == 0 {
            return Err(MfpcError::InvalidConfig(
                "iteration caps must be at least 1".into(),
            ));
        }
        self.kernel.validate(None)
    }
}

/// Projection learned for one cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterProjection {
    /// `W_i`, `d x p`. Columns are mutually orthogonal; a zero column marks a
    /// direction the recursive solver could not extend.
    pub projection: DMatrix<f64>,
    /// `W_i^T` applied to the cluster center in effective feature space.
    pub center_projection: DVector<f64>,
}

/// The fitted MFPC model: one projection per cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatModel {
    pub clusters: Vec<ClusterProjection>,
    pub kernel: KernelSpec,
    /// Input-space basis `X~` (`n x r`) for kernel models.
    pub reduced_basis: Option<DMatrix<f64>>,
}

impl FlatModel {
    pub fn k(&self) -> usize {
        self.clusters.len()
    }

    /// Effective feature dimension `d`.
    pub fn dim(&self) -> usize {
        self.clusters.first().map_or(0, |c| c.projection.nrows())
    }

    pub fn p(&self) -> usize {
        self.clusters.first().map_or(0, |c| c.projection.ncols())
    }

    /// Checks shape agreement and the column-orthogonality contract.
    pub fn validate(&self, tol_orth: f64) -> Result<()> {
        let (d, p) = (self.dim(), self.p());
        if p == 0 {
            return Err(MfpcError::InvalidConfig("model has no columns".into()));
        }
        for (i, c) in self.clusters.iter().enumerate() {
            if c.projection.nrows() != d || c.projection.ncols() != p {
                return Err(MfpcError::InvalidConfig(format!(
                    "cluster {} has a {}x{} projection, expected {d}x{p}",
                    i + 1,
                    c.projection.nrows(),
                    c.projection.ncols()
                )));
            }
            if c.center_projection.len() != p {
                return Err(MfpcError::LengthMismatch {
                    expected: p,
                    found: c.center_projection.len(),
                });
            }
            let defect = crate::linalg::orthogonality_defect(&c.projection);
            if defect > tol_orth {
                return Err(MfpcError::InvalidConfig(format!(
                    "cluster {} columns are not orthogonal (defect {defect:e})",
                    i + 1
                )));
            }
        }
        if !self.kernel.is_linear() && self.reduced_basis.is_none() {
            return Err(MfpcError::InvalidConfig(
                "kernel model without a reduced basis".into(),
            ));
        }
        Ok(())
    }
}
