//! The MFPC estimator: recursive column construction, the label rule and the
//! alternating fit loop, for linear and Gaussian-kernel feature maps.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cccp::{solve_column, CccpTrace, SubproblemInstance};
use crate::error::{MfpcError, Result};
use crate::linalg::{column_mean, deflate, kernel_map, orthogonality_defect, scatter_matrix};
use crate::types::{ClusterProjection, ClusterState, Dataset, FlatModel, KernelSpec, SolverConfig};

/// Columns with a norm below this are treated as collapsed.
pub const ZERO_COLUMN_NORM: f64 = 1e-12;

/// Samples in the space the projections act on, together with the map that
/// sends input-space cluster means there.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveData {
    /// `d x m`: the samples themselves, or their kernel rows against the basis.
    pub features: DMatrix<f64>,
    /// Input-space samples, kept to form kernel centers.
    inputs: DMatrix<f64>,
    pub kernel: KernelSpec,
    pub basis: Option<DMatrix<f64>>,
}

impl EffectiveData {
    pub fn linear(data: &Dataset) -> Self {
        Self {
            features: data.features().clone(),
            inputs: data.features().clone(),
            kernel: KernelSpec::linear(),
            basis: None,
        }
    }

    /// Effective data for `spec`; Gaussian kernels draw their basis with
    /// `seed`.
    pub fn new(data: &Dataset, spec: &KernelSpec, seed: u64) -> Result<Self> {
        if spec.is_linear() {
            return Ok(Self::linear(data));
        }
        let (features, basis) = build_kernel_instance(data, spec, seed)?;
        Ok(Self {
            features,
            inputs: data.features().clone(),
            kernel: *spec,
            basis: Some(basis),
        })
    }

    /// Effective data for new samples under a fitted model.
    pub fn for_model(data: &Dataset, model: &FlatModel) -> Result<Self> {
        match &model.reduced_basis {
            None => Ok(Self::linear(data)),
            Some(basis) => Ok(Self {
                features: kernel_map(data.features(), basis, &model.kernel)?,
                inputs: data.features().clone(),
                kernel: model.kernel,
                basis: Some(basis.clone()),
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.features.ncols()
    }

    /// Cluster center in effective space: the member mean for linear data,
    /// the kernel row of the input-space member mean otherwise.
    pub fn center(&self, members: &[usize]) -> Result<DVector<f64>> {
        match &self.basis {
            None => column_mean(&self.features, members),
            Some(basis) => {
                let mean = column_mean(&self.inputs, members)?;
                let mean = DMatrix::from_column_slice(mean.len(), 1, mean.as_slice());
                Ok(kernel_map(&mean, basis, &self.kernel)?.column(0).into_owned())
            }
        }
    }
}

/// Effective features `K(x_j, X~)` (`r x m`) and the basis `X~` (`n x r`).
///
/// The basis is all samples when the requested size covers them, otherwise
/// a uniform draw without replacement, kept in sample order.
pub fn build_kernel_instance(
    data: &Dataset,
    spec: &KernelSpec,
    seed: u64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if spec.is_linear() {
        return Err(MfpcError::InvalidConfig(
            "a kernel instance needs a gaussian kernel".into(),
        ));
    }
    let m = data.n_samples();
    spec.validate(Some(m))?;
    let size = spec.basis_size(m);
    let x = data.features();
    let basis = if size >= m {
        x.clone()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked = sample(&mut rng, m, size).into_vec();
        picked.sort_unstable();
        x.select_columns(picked.iter())
    };
    let features = kernel_map(x, &basis, spec)?;
    Ok((features, basis))
}

/// Result of the recursive column construction for one cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatSolution {
    /// `d x p`; columns after a collapsed one are zero.
    pub projection: DMatrix<f64>,
    pub traces: Vec<CccpTrace>,
    /// `|sum_j (w_l' x_{j,l})^2 - 1|` for every solved column.
    pub column_ball_defects: Vec<f64>,
    /// 1-based index of the first column that collapsed, if any.
    pub zero_column: Option<usize>,
}

/// Builds up to `config.p` projection columns for the cluster `members`,
/// each solved on data deflated by the previous columns. Stops early, padding
/// with zeros, if a column collapses.
pub fn solve_flat_padded(
    x: &DMatrix<f64>,
    members: &[usize],
    center: &DVector<f64>,
    config: &SolverConfig,
) -> Result<FlatSolution> {
    if members.is_empty() {
        return Err(MfpcError::EmptyMemberSet);
    }
    let d = x.nrows();
    let m = x.ncols();
    let p = config.p;
    if p > d {
        return Err(MfpcError::InvalidConfig(format!(
            "p = {p} exceeds the feature dimension {d}"
        )));
    }
    let mut in_cluster = vec![false; m];
    for &j in members {
        in_cluster[j] = true;
    }
    let others: Vec<usize> = (0..m).filter(|&j| !in_cluster[j]).collect();

    let mut projection = DMatrix::zeros(d, p);
    let mut traces = Vec::with_capacity(p);
    let mut column_ball_defects = Vec::with_capacity(p);
    let mut directions: Vec<DVector<f64>> = Vec::with_capacity(p);
    let mut deflated = x.clone();
    let mut deflated_center = center.clone();

    for l in 0..p {
        let a = DMatrix::from_fn(d, others.len(), |i, c| deflated[(i, others[c])] - deflated_center[i]);
        let s = scatter_matrix(&deflated, members, &deflated_center)?;
        let gram = &deflated * deflated.transpose();
        let inst = SubproblemInstance::new(a, gram, s, config)?.with_excluded(directions.clone());
        let (mut w, trace) = solve_column(&inst)?;
        for v in &directions {
            let overlap = v.dot(&w);
            w.axpy(-overlap, v, 1.0);
        }
        traces.push(trace);
        let norm = w.norm();
        if norm < ZERO_COLUMN_NORM {
            return Ok(FlatSolution {
                projection,
                traces,
                column_ball_defects,
                zero_column: Some(l + 1),
            });
        }
        column_ball_defects.push(inst.ball_defect(&w));
        projection.set_column(l, &w);
        let unit = &w / norm;
        if l + 1 < p {
            deflated = deflate(&deflated, &unit)?;
            let along = unit.dot(&deflated_center);
            deflated_center.axpy(-along, &unit, 1.0);
        }
        directions.push(unit);
    }
    Ok(FlatSolution {
        projection,
        traces,
        column_ball_defects,
        zero_column: None,
    })
}

/// Recursive column construction; fails with `ZeroColumn` if any column
/// collapses.
pub fn solve_flat(
    x: &DMatrix<f64>,
    members: &[usize],
    center: &DVector<f64>,
    config: &SolverConfig,
) -> Result<(DMatrix<f64>, Vec<CccpTrace>)> {
    let solution = solve_flat_padded(x, members, center, config)?;
    match solution.zero_column {
        Some(column) => Err(MfpcError::ZeroColumn { column }),
        None => Ok((solution.projection, solution.traces)),
    }
}

/// `|W_i' x_j - W_i' c_i|` for every cluster (rows) and sample (columns).
pub fn decision_values(x: &DMatrix<f64>, model: &FlatModel) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(model.k(), x.ncols());
    for (i, cluster) in model.clusters.iter().enumerate() {
        let projected = cluster.projection.tr_mul(x);
        for j in 0..x.ncols() {
            let dist = (projected.column(j) - &cluster.center_projection).norm();
            out[(i, j)] = dist;
        }
    }
    out
}

/// Labels minimising the decision value, ties to the smaller cluster index.
pub fn assign_effective(x: &DMatrix<f64>, model: &FlatModel) -> Vec<usize> {
    let values = decision_values(x, model);
    (0..x.ncols())
        .map(|j| {
            let mut best = 0;
            for i in 1..model.k() {
                if values[(i, j)] < values[(best, j)] {
                    best = i;
                }
            }
            best
        })
        .collect()
}

/// Assigns every sample of `data` to its nearest projected center.
pub fn assign_labels(data: &Dataset, model: &FlatModel) -> Result<ClusterState> {
    let eff = EffectiveData::for_model(data, model)?;
    if eff.dim() != model.dim() {
        return Err(MfpcError::LengthMismatch {
            expected: model.dim(),
            found: eff.dim(),
        });
    }
    ClusterState::new(assign_effective(&eff.features, model), model.k())
}

/// Sum over clusters of the flat objective with optimal slacks:
/// `1/2 |W_i|_F^2 + c1/2 sum_{N_i} |W_i'(x_j - c_i)|^2
///  + c2 sum_{not N_i} (1 - |W_i'(x_j - c_i)|)_+`, with centers taken from
/// `state`. Empty clusters contribute only their regulariser.
pub fn overall_objective_effective(
    eff: &EffectiveData,
    state: &ClusterState,
    model: &FlatModel,
    config: &SolverConfig,
) -> Result<f64> {
    let x = &eff.features;
    let mut total = 0.0;
    for (i, cluster) in model.clusters.iter().enumerate() {
        let w = &cluster.projection;
        total += 0.5 * w.norm_squared();
        let members = state.members(i);
        if members.is_empty() {
            continue;
        }
        let center = eff.center(&members)?;
        let projected_center = w.tr_mul(&center);
        let projected = w.tr_mul(x);
        for (j, &label) in state.labels().iter().enumerate() {
            let dist = (projected.column(j) - &projected_center).norm();
            if label == i {
                total += 0.5 * config.c1 * dist * dist;
            } else {
                total += config.c2 * (1.0 - dist).max(0.0);
            }
        }
    }
    Ok(total)
}

pub fn overall_objective(
    data: &Dataset,
    state: &ClusterState,
    model: &FlatModel,
    config: &SolverConfig,
) -> Result<f64> {
    let eff = EffectiveData::for_model(data, model)?;
    overall_objective_effective(&eff, state, model, config)
}

/// Per-cluster health of a fitted model.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterDiagnostics {
    /// Largest normalised off-diagonal entry of `W_i' W_i`.
    pub orthogonality_defect: f64,
    /// Unit-ball defect of each solved column on its deflated data.
    pub column_ball_defects: Vec<f64>,
    /// `|sum_j |W_i' x_j|^2 - p|`.
    pub matrix_ball_defect: f64,
    pub zero_column: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: FlatModel,
    pub state: ClusterState,
    pub outer_iterations: usize,
    pub overall_objective_history: Vec<f64>,
    /// Traces of the final model, per cluster then per column.
    pub per_column_traces: Vec<Vec<CccpTrace>>,
    pub diagnostics: Vec<ClusterDiagnostics>,
    /// True when the loop stopped on a repeated assignment or a rise in the
    /// objective rather than the iteration cap.
    pub converged: bool,
}

struct Update {
    model: FlatModel,
    traces: Vec<Vec<CccpTrace>>,
    diagnostics: Vec<ClusterDiagnostics>,
}

fn update_model(eff: &EffectiveData, state: &ClusterState, config: &SolverConfig) -> Result<Update> {
    let x = &eff.features;
    let mut clusters = Vec::with_capacity(state.k());
    let mut traces = Vec::with_capacity(state.k());
    let mut diagnostics = Vec::with_capacity(state.k());
    for i in 0..state.k() {
        let members = state.members(i);
        let center = eff.center(&members)?;
        let solution = solve_flat_padded(x, &members, &center, config)?;
        let w = solution.projection;
        let projected = w.tr_mul(x);
        diagnostics.push(ClusterDiagnostics {
            orthogonality_defect: orthogonality_defect(&w),
            column_ball_defects: solution.column_ball_defects,
            matrix_ball_defect: (projected.norm_squared() - config.p as f64).abs(),
            zero_column: solution.zero_column,
        });
        clusters.push(ClusterProjection {
            center_projection: w.tr_mul(&center),
            projection: w,
        });
        traces.push(solution.traces);
    }
    Ok(Update {
        model: FlatModel {
            clusters,
            kernel: eff.kernel,
            reduced_basis: eff.basis.clone(),
        },
        traces,
        diagnostics,
    })
}

/// Refills empty clusters: each empty cluster receives the sample, from a
/// cluster with at least two members, whose decision value for it exceeds its
/// current one by the least.
fn repair_empty(labels: &mut [usize], values: &DMatrix<f64>, k: usize) -> Vec<usize> {
    let mut sizes = vec![0usize; k];
    for &l in labels.iter() {
        sizes[l] += 1;
    }
    let empty: Vec<usize> = (0..k).filter(|&i| sizes[i] == 0).collect();
    for &e in &empty {
        let mut best: Option<(usize, f64)> = None;
        for (j, &l) in labels.iter().enumerate() {
            if sizes[l] < 2 {
                continue;
            }
            let gap = values[(e, j)] - values[(l, j)];
            if best.is_none_or(|(_, g)| gap < g) {
                best = Some((j, gap));
            }
        }
        if let Some((j, _)) = best {
            sizes[labels[j]] -= 1;
            labels[j] = e;
            sizes[e] += 1;
        }
    }
    empty
}

/// Alternates projection updates and reassignment from `init`.
///
/// Stops when the assignment repeats, when the objective (after its first
/// value) would rise, in which case the previous model is kept, or after
/// `max_outer_iters` updates. The returned state is the assignment of the
/// returned model.
pub fn fit(data: &Dataset, k: usize, config: &SolverConfig, init: &ClusterState) -> Result<FitResult> {
    config.validate()?;
    let eff = EffectiveData::new(data, &config.kernel, config.seed)?;
    fit_effective(&eff, k, config, init)
}

pub fn fit_effective(
    eff: &EffectiveData,
    k: usize,
    config: &SolverConfig,
    init: &ClusterState,
) -> Result<FitResult> {
    config.validate()?;
    if k < 2 {
        return Err(MfpcError::InvalidConfig("k must be at least 2".into()));
    }
    if init.k() != k || init.len() != eff.n_samples() {
        return Err(MfpcError::InvalidConfig(format!(
            "initial state has {} labels in {} clusters, expected {} in {k}",
            init.len(),
            init.k(),
            eff.n_samples()
        )));
    }
    if let Some(&cluster) = init.empty_clusters().first() {
        return Err(MfpcError::InvalidConfig(format!(
            "initial cluster {} is empty",
            cluster + 1
        )));
    }
    if eff.kernel.is_linear() && config.p >= eff.dim() {
        return Err(MfpcError::InvalidConfig(format!(
            "p = {} must be below the feature dimension {}",
            config.p,
            eff.dim()
        )));
    }

    let mut state = init.clone();
    let mut history: Vec<f64> = Vec::new();
    let mut current: Option<Update> = None;
    let mut previously_empty: Vec<usize> = Vec::new();
    let mut converged = false;
    let mut outer_iterations = 0;

    for _ in 0..config.max_outer_iters {
        let update = update_model(eff, &state, config)?;
        let objective = overall_objective_effective(eff, &state, &update.model, config)?;
        if history.len() >= 2 {
            let last = history[history.len() - 1];
            if objective > last + 1e-8 * last.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        history.push(objective);
        outer_iterations += 1;
        let values = decision_values(&eff.features, &update.model);
        let mut labels = assign_effective(&eff.features, &update.model);
        current = Some(update);
        if labels == state.labels() {
            converged = true;
            break;
        }
        let emptied = repair_empty(&mut labels, &values, k);
        if labels == state.labels() {
            converged = true;
            break;
        }
        if let Some(&cluster) = emptied.iter().find(|c| previously_empty.contains(c)) {
            return Err(MfpcError::EmptyClusterUnrecoverable { cluster: cluster + 1 });
        }
        previously_empty = emptied;
        state = ClusterState::new(labels, k)?;
    }

    let update = current.expect("at least one outer iteration runs");
    let final_state = ClusterState::new(assign_effective(&eff.features, &update.model), k)?;
    Ok(FitResult {
        model: update.model,
        state: final_state,
        outer_iterations,
        overall_objective_history: history,
        per_column_traces: update.traces,
        diagnostics: update.diagnostics,
        converged,
    })
}
