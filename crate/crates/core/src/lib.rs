//! Multiple flat projections clustering (MFPC) and flat-type clustering
//! baselines.
//!
//! Each cluster is described by a projection matrix `W_i`; a sample belongs
//! to the cluster whose projection maps it closest to the projected cluster
//! center. Projections are learned column by column with a concave-convex
//! procedure on a penalised hinge objective.

pub mod baselines;
pub mod cccp;
pub mod datasets;
pub mod error;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod mfpc;
pub mod types;

pub use error::{MfpcError, Result};
pub use types::{ClusterState, Dataset, FlatModel, KernelKind, KernelSpec, SolverConfig};
