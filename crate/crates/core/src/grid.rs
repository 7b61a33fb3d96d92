//! Single runs and parameter grids over every method.
//!
//! In Gaussian mode every method sees the same effective features
//! `K(x_j, X~)`; in linear mode they see the raw features.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::baselines::{fit_baseline, kmeans_fit, nng_init, BaselineParams, Method, DEFAULT_NEIGHBORS};
use crate::error::{MfpcError, Result};
use crate::io::{baseline_model_text, flat_model_text, ModelText};
use crate::metrics::{ari, nmi};
use crate::mfpc::{fit_effective, EffectiveData, FitResult};
use crate::types::{ClusterState, Dataset, KernelSpec, SolverConfig};

/// How the initial assignment of the iterative methods is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum InitStrategy {
    Nng,
    /// Uniformly shuffled balanced labels drawn from the run seed.
    Random,
    Given(ClusterState),
}

/// Balanced labels `0, 1, .., k-1, 0, ..` shuffled with `seed`.
pub fn random_init(m: usize, k: usize, seed: u64) -> Result<ClusterState> {
    if k == 0 || k > m {
        return Err(MfpcError::InvalidConfig(format!("k = {k} must lie in 1..={m}")));
    }
    let mut labels: Vec<usize> = (0..m).map(|j| j % k).collect();
    labels.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    ClusterState::new(labels, k)
}

pub fn resolve_init(x: &DMatrix<f64>, k: usize, init: &InitStrategy, seed: u64) -> Result<ClusterState> {
    match init {
        InitStrategy::Nng => nng_init(x, k, DEFAULT_NEIGHBORS),
        InitStrategy::Random => random_init(x.ncols(), k, seed),
        InitStrategy::Given(state) => {
            if state.len() != x.ncols() {
                return Err(MfpcError::LengthMismatch {
                    expected: x.ncols(),
                    found: state.len(),
                });
            }
            ClusterState::new(state.labels().to_vec(), k)
        }
    }
}

/// Everything one run needs besides the data.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub method: Method,
    pub k: usize,
    pub c1: f64,
    pub c2: f64,
    pub p: usize,
    pub sigma: f64,
    pub kernel: KernelSpec,
    pub seed: u64,
}

impl RunSpec {
    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            c1: self.c1,
            c2: self.c2,
            sigma: self.sigma,
            p: self.p,
            seed: self.seed,
            kernel: self.kernel,
            ..SolverConfig::default()
        }
    }

    fn baseline_params(&self) -> BaselineParams {
        BaselineParams {
            c1: self.c1,
            c2: self.c2,
            p: self.p,
        }
    }
}

/// Result of one run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub labels: Vec<usize>,
    /// Serialised model; `None` for k-means, whose centers are reported
    /// through `inertia`.
    pub model: Option<ModelText>,
    pub inertia: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// The MFPC fit, kept for diagnostics.
    pub mfpc: Option<FitResult>,
    pub runtime_seconds: f64,
}

/// Fits `spec.method` on `data`. The initial state is computed from the raw
/// features, so all methods and kernels start from the same partition.
pub fn run_method(data: &Dataset, spec: &RunSpec, init: &InitStrategy) -> Result<RunOutcome> {
    let start = Instant::now();
    let eff = if spec.kernel.is_linear() {
        EffectiveData::linear(data)
    } else {
        EffectiveData::new(data, &spec.kernel, spec.seed)?
    };
    let mut outcome = match spec.method {
        Method::Kmeans => {
            let fit = kmeans_fit(&eff.features, spec.k, spec.seed)?;
            RunOutcome {
                labels: fit.state.labels().to_vec(),
                model: None,
                inertia: Some(fit.inertia),
                iterations: fit.iterations,
                converged: true,
                mfpc: None,
                runtime_seconds: 0.0,
            }
        }
        Method::Mfpc => {
            let state = resolve_init(data.features(), spec.k, init, spec.seed)?;
            let config = spec.solver_config();
            let fit = fit_effective(&eff, spec.k, &config, &state)?;
            let echo = vec![
                ("c1".to_string(), format!("{:.16e}", spec.c1)),
                ("c2".to_string(), format!("{:.16e}", spec.c2)),
                ("sigma".to_string(), format!("{:.16e}", spec.sigma)),
                ("seed".to_string(), spec.seed.to_string()),
            ];
            RunOutcome {
                labels: fit.state.labels().to_vec(),
                model: Some(flat_model_text(&fit.model, &echo)),
                inertia: None,
                iterations: fit.outer_iterations,
                converged: fit.converged,
                mfpc: Some(fit),
                runtime_seconds: 0.0,
            }
        }
        method => {
            let state = resolve_init(data.features(), spec.k, init, spec.seed)?;
            let fit = fit_baseline(&eff.features, method, &spec.baseline_params(), &state)?;
            RunOutcome {
                labels: fit.state.labels().to_vec(),
                model: Some(baseline_model_text(&fit.model)),
                inertia: None,
                iterations: fit.iterations,
                converged: fit.converged,
                mfpc: None,
                runtime_seconds: 0.0,
            }
        }
    };
    outcome.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(outcome)
}

/// `{2^lo, .., 2^hi}`.
pub fn power_grid(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|e| 2f64.powi(e)).collect()
}

/// Parameter ranges of a grid search.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub methods: Vec<Method>,
    pub c1_grid: Vec<f64>,
    pub c2_grid: Vec<f64>,
    /// Gaussian widths; empty for a linear grid.
    pub mu_grid: Vec<f64>,
    pub p_grid: Vec<usize>,
    pub seeds: Vec<u64>,
    pub sigma: f64,
    pub reduced_size: Option<usize>,
}

impl GridSpec {
    /// Linear grid: `c1, c2` over `2^-8..2^7` and `p` over `1..n` (at most 10
    /// values).
    pub fn linear(n_features: usize) -> Self {
        Self {
            methods: vec![Method::Mfpc],
            c1_grid: power_grid(-8, 7),
            c2_grid: power_grid(-8, 7),
            mu_grid: Vec::new(),
            p_grid: (1..n_features.clamp(2, 11)).collect(),
            seeds: vec![0],
            sigma: SolverConfig::default().sigma,
            reduced_size: None,
        }
    }

    /// Gaussian grid: the linear ranges plus `mu` over `2^-10..2^5` and
    /// `p` in `{1, 2}`.
    pub fn gaussian() -> Self {
        Self {
            mu_grid: power_grid(-10, 5),
            p_grid: vec![1, 2],
            ..Self::linear(3)
        }
    }

    pub fn is_gaussian(&self) -> bool {
        !self.mu_grid.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let lists = [
            ("methods", self.methods.len()),
            ("c1 grid", self.c1_grid.len()),
            ("c2 grid", self.c2_grid.len()),
            ("p grid", self.p_grid.len()),
            ("seeds", self.seeds.len()),
        ];
        if let Some((name, _)) = lists.iter().find(|(_, len)| *len == 0) {
            return Err(MfpcError::InvalidConfig(format!("{name} is empty")));
        }
        let values = self.c1_grid.iter().chain(&self.c2_grid).chain(&self.mu_grid);
        if let Some(v) = values.into_iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(MfpcError::InvalidConfig(format!("grid value {v} is not positive")));
        }
        if self.p_grid.contains(&0) {
            return Err(MfpcError::InvalidConfig("p grid contains 0".into()));
        }
        Ok(())
    }

    /// Every combination, in row order: method, then `c1`, `c2`, `mu`, `p`,
    /// seed. Parameters a method ignores are left out rather than repeated.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        let mus: Vec<Option<f64>> = if self.is_gaussian() {
            self.mu_grid.iter().copied().map(Some).collect()
        } else {
            vec![None]
        };
        for &method in &self.methods {
            let pick = |used: bool, grid: &[f64]| -> Vec<Option<f64>> {
                if used {
                    grid.iter().copied().map(Some).collect()
                } else {
                    vec![None]
                }
            };
            let c1s = pick(method.uses_c1(), &self.c1_grid);
            let c2s = pick(method.uses_c2(), &self.c2_grid);
            let ps: Vec<Option<usize>> = if method.uses_p() {
                self.p_grid.iter().copied().map(Some).collect()
            } else {
                vec![None]
            };
            for &c1 in &c1s {
                for &c2 in &c2s {
                    for &mu in &mus {
                        for &p in &ps {
                            for &seed in &self.seeds {
                                out.push(GridPoint {
                                    method,
                                    c1,
                                    c2,
                                    mu,
                                    p,
                                    seed,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// One combination of a grid; `None` marks a parameter the method ignores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub method: Method,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub mu: Option<f64>,
    pub p: Option<usize>,
    pub seed: u64,
}

impl GridPoint {
    pub fn run_spec(&self, k: usize, sigma: f64, reduced_size: Option<usize>) -> RunSpec {
        let defaults = BaselineParams::default();
        let kernel = match self.mu {
            None => KernelSpec::linear(),
            Some(mu) => {
                let spec = KernelSpec::gaussian(mu);
                match reduced_size {
                    Some(r) => spec.with_reduced_size(r),
                    None => spec,
                }
            }
        };
        RunSpec {
            method: self.method,
            k,
            c1: self.c1.unwrap_or(defaults.c1),
            c2: self.c2.unwrap_or(defaults.c2),
            p: self.p.unwrap_or(defaults.p),
            sigma,
            kernel,
            seed: self.seed,
        }
    }
}

/// One line of a results table.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub point: GridPoint,
    pub dataset: String,
    pub ari: Option<f64>,
    pub nmi: Option<f64>,
    pub runtime_seconds: f64,
    /// `ok`, or `failed: <reason>`.
    pub status: String,
}

impl GridRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Column names of the results table.
pub const RESULTS_HEADER: [&str; 11] = [
    "method",
    "dataset",
    "c1",
    "c2",
    "mu",
    "p",
    "seed",
    "ari",
    "nmi",
    "runtime_seconds",
    "status",
];

fn run_point(data: &Dataset, dataset: &str, k: usize, spec: &GridSpec, point: &GridPoint, init: &InitStrategy) -> GridRow {
    let run = point.run_spec(k, spec.sigma, spec.reduced_size);
    let start = Instant::now();
    let result = run_method(data, &run, init).and_then(|outcome| match data.labels() {
        Some(truth) => Ok((Some(ari(truth, &outcome.labels)?), Some(nmi(truth, &outcome.labels)?))),
        None => Ok((None, None)),
    });
    let runtime_seconds = start.elapsed().as_secs_f64();
    let (scores, status) = match result {
        Ok(scores) => (scores, "ok".to_string()),
        Err(e) => ((None, None), format!("failed: {e}")),
    };
    GridRow {
        point: *point,
        dataset: dataset.to_owned(),
        ari: scores.0,
        nmi: scores.1,
        runtime_seconds,
        status,
    }
}

/// Runs every grid point with at most `workers` concurrent fits. Rows come
/// back in [`GridSpec::points`] order; failures are recorded, not raised.
pub fn run_grid(data: &Dataset, dataset: &str, k: usize, spec: &GridSpec, init: &InitStrategy, workers: usize) -> Result<Vec<GridRow>> {
    spec.validate()?;
    let init = match init {
        InitStrategy::Nng => InitStrategy::Given(nng_init(data.features(), k, DEFAULT_NEIGHBORS)?),
        other => other.clone(),
    };
    let points = spec.points();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| MfpcError::InvalidConfig(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        points
            .par_iter()
            .map(|point| run_point(data, dataset, k, spec, point, &init))
            .collect()
    }))
}

/// The successful row with the highest NMI, earliest on ties.
pub fn best_row(rows: &[GridRow]) -> Option<&GridRow> {
    rows.iter()
        .filter(|r| r.is_ok() && r.nmi.is_some())
        .fold(None, |best: Option<&GridRow>, r| match best {
            Some(b) if b.nmi >= r.nmi => Some(b),
            _ => Some(r),
        })
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

/// Field values of a row in [`RESULTS_HEADER`] order. The runtime is left
/// blank unless `with_runtime` is set, so that repeated runs produce
/// identical tables.
pub fn row_fields(row: &GridRow, with_runtime: bool) -> Vec<String> {
    vec![
        row.point.method.to_string(),
        row.dataset.clone(),
        opt(row.point.c1),
        opt(row.point.c2),
        opt(row.point.mu),
        opt(row.point.p),
        row.point.seed.to_string(),
        opt(row.ari),
        opt(row.nmi),
        if with_runtime {
            row.runtime_seconds.to_string()
        } else {
            String::new()
        },
        row.status.clone(),
    ]
}

/// Renders rows as a CSV table with a [`RESULTS_HEADER`] header.
pub fn results_csv(rows: &[GridRow], with_runtime: bool) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let write = |w: &mut csv::Writer<Vec<u8>>, fields: &[String]| {
        w.write_record(fields)
            .map_err(|e| MfpcError::Io(std::io::Error::other(e)))
    };
    let header: Vec<String> = RESULTS_HEADER.iter().map(|s| s.to_string()).collect();
    write(&mut writer, &header)?;
    for row in rows {
        write(&mut writer, &row_fields(row, with_runtime))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| MfpcError::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}
