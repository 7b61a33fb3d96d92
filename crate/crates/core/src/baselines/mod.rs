//! Eigenvalue-based comparison methods and k-means, sharing one
//! update-then-assign loop.

pub mod flats;
pub mod kmeans;
pub mod nng;
pub mod planes;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{MfpcError, Result};
use crate::types::ClusterState;

pub use flats::{kfc_update, lkfc_update, Flat};
pub use kmeans::{kmeans_fit, KMeansFit};
pub use nng::{nng_init, DEFAULT_NEIGHBORS};
pub use planes::{kpc_update, kppc_update, lkppc_update, Plane};

/// Outer iterations of the plane and flat loops.
pub const BASELINE_MAX_ITERS: usize = 100;

/// Every clustering method the crate implements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Mfpc,
    Kpc,
    Kppc,
    Lkppc,
    Kfc,
    Lkfc,
    Kmeans,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Mfpc,
        Method::Kpc,
        Method::Kppc,
        Method::Lkppc,
        Method::Kfc,
        Method::Lkfc,
        Method::Kmeans,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Method::Mfpc => "mfpc",
            Method::Kpc => "kpc",
            Method::Kppc => "kppc",
            Method::Lkppc => "lkppc",
            Method::Kfc => "kfc",
            Method::Lkfc => "lkfc",
            Method::Kmeans => "kmeans",
        }
    }

    /// Whether the method reads `c1`.
    pub fn uses_c1(self) -> bool {
        matches!(self, Method::Mfpc | Method::Kppc | Method::Lkppc | Method::Lkfc)
    }

    /// Whether the method reads `c2`.
    pub fn uses_c2(self) -> bool {
        matches!(self, Method::Mfpc | Method::Lkppc)
    }

    /// Whether the method reads `p`.
    pub fn uses_p(self) -> bool {
        matches!(self, Method::Mfpc | Method::Kfc | Method::Lkfc)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = MfpcError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| MfpcError::InvalidConfig(format!("unknown method `{s}`")))
    }
}

/// Trade-off parameters of the plane and flat methods. `c1` is kPPC's and
/// LkFC's `c` and LkPPC's first weight; `c2` is LkPPC's center weight; `p`
/// is the flat codimension of kFC and LkFC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineParams {
    pub c1: f64,
    pub c2: f64,
    pub p: usize,
}

impl Default for BaselineParams {
    fn default() -> Self {
        Self { c1: 1.0, c2: 1.0, p: 1 }
    }
}

/// Per-cluster prototypes of a fitted plane or flat method.
#[derive(Debug, Clone, PartialEq)]
pub enum Prototypes {
    Planes(Vec<Plane>),
    Flats(Vec<Flat>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineModel {
    pub method: Method,
    pub params: BaselineParams,
    pub prototypes: Prototypes,
}

impl BaselineModel {
    pub fn k(&self) -> usize {
        match &self.prototypes {
            Prototypes::Planes(p) => p.len(),
            Prototypes::Flats(f) => f.len(),
        }
    }

    /// Decision value of sample `x` for cluster `i`; smaller is closer.
    pub fn score(&self, i: usize, x: &DVector<f64>) -> f64 {
        match (&self.prototypes, self.method) {
            (Prototypes::Planes(p), Method::Lkppc) => planes::lkppc_score(&p[i], x, self.params.c2),
            (Prototypes::Planes(p), _) => p[i].residual(x).abs(),
            (Prototypes::Flats(f), Method::Lkfc) => flats::lkfc_score(&f[i], x, self.params.c1),
            (Prototypes::Flats(f), _) => flats::kfc_score(&f[i], x),
        }
    }

    /// Labels minimising the decision value, ties to the smaller index.
    pub fn assign(&self, x: &DMatrix<f64>) -> Vec<usize> {
        (0..x.ncols())
            .map(|j| {
                let col = x.column(j).into_owned();
                let mut best = (0, self.score(0, &col));
                for i in 1..self.k() {
                    let s = self.score(i, &col);
                    if s < best.1 {
                        best = (i, s);
                    }
                }
                best.0
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineFit {
    pub model: BaselineModel,
    pub state: ClusterState,
    pub iterations: usize,
    pub converged: bool,
}

fn update_cluster(x: &DMatrix<f64>, method: Method, params: &BaselineParams, members: &[usize], others: &[usize]) -> Result<PrototypeUpdate> {
    if others.is_empty() && matches!(method, Method::Kppc | Method::Lkppc) {
        // Every sample sits in this cluster; there is nothing to push away.
        let mut plane = kpc_update(x, members)?;
        if method == Method::Lkppc {
            plane.center = Some(crate::linalg::column_mean(x, members)?);
        }
        return Ok(PrototypeUpdate::Plane(plane));
    }
    Ok(match method {
        Method::Kpc => PrototypeUpdate::Plane(kpc_update(x, members)?),
        Method::Kppc => PrototypeUpdate::Plane(kppc_update(x, members, others, params.c1)?),
        Method::Lkppc => PrototypeUpdate::Plane(lkppc_update(x, members, others, params.c1)?),
        Method::Kfc => PrototypeUpdate::Flat(kfc_update(x, members, params.p)?),
        Method::Lkfc => PrototypeUpdate::Flat(lkfc_update(x, members, params.p)?),
        Method::Mfpc | Method::Kmeans => {
            return Err(MfpcError::InvalidConfig(format!(
                "{method} is not a plane or flat baseline"
            )))
        }
    })
}

enum PrototypeUpdate {
    Plane(Plane),
    Flat(Flat),
}

/// Runs a plane or flat method on the columns of `x` from `init`: update
/// every prototype, reassign, and stop when the labels repeat or after
/// [`BASELINE_MAX_ITERS`] rounds. A cluster left empty keeps its previous
/// prototype.
pub fn fit_baseline(x: &DMatrix<f64>, method: Method, params: &BaselineParams, init: &ClusterState) -> Result<BaselineFit> {
    let k = init.k();
    if init.len() != x.ncols() {
        return Err(MfpcError::LengthMismatch {
            expected: x.ncols(),
            found: init.len(),
        });
    }
    if let Some(&cluster) = init.empty_clusters().first() {
        return Err(MfpcError::InvalidConfig(format!(
            "initial cluster {} is empty",
            cluster + 1
        )));
    }
    let mut state = init.clone();
    let mut current: Vec<Option<PrototypeUpdate>> = (0..k).map(|_| None).collect();
    let mut iterations = 0;
    let mut converged = false;
    let mut model = None;
    for _ in 0..BASELINE_MAX_ITERS {
        iterations += 1;
        for (i, slot) in current.iter_mut().enumerate() {
            let members = state.members(i);
            if members.is_empty() {
                continue;
            }
            let others = state.non_members(i);
            *slot = Some(update_cluster(x, method, params, &members, &others)?);
        }
        let prototypes = if matches!(method, Method::Kfc | Method::Lkfc) {
            Prototypes::Flats(
                current
                    .iter()
                    .map(|u| match u {
                        Some(PrototypeUpdate::Flat(f)) => f.clone(),
                        _ => unreachable!("flat methods produce flats for every cluster"),
                    })
                    .collect(),
            )
        } else {
            Prototypes::Planes(
                current
                    .iter()
                    .map(|u| match u {
                        Some(PrototypeUpdate::Plane(p)) => p.clone(),
                        _ => unreachable!("plane methods produce planes for every cluster"),
                    })
                    .collect(),
            )
        };
        let fitted = BaselineModel {
            method,
            params: *params,
            prototypes,
        };
        let labels = fitted.assign(x);
        model = Some(fitted);
        if labels == state.labels() {
            converged = true;
            break;
        }
        state = ClusterState::new(labels, k)?;
    }
    Ok(BaselineFit {
        model: model.expect("at least one iteration runs"),
        state,
        iterations,
        converged,
    })
}
