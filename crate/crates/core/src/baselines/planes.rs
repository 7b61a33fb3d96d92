//! Plane prototypes `w'x + b = 0` with `|w| = 1`.

use nalgebra::{DMatrix, DVector};

use crate::error::{MfpcError, Result};
use crate::linalg::{column_mean, scatter_matrix, smallest_eigenvector, smallest_eigenvectors};

/// A cluster plane, optionally with a center point.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub w: DVector<f64>,
    pub b: f64,
    pub center: Option<DVector<f64>>,
}

impl Plane {
    /// `w'x + b`.
    pub fn residual(&self, x: &DVector<f64>) -> f64 {
        self.w.dot(x) + self.b
    }
}

/// `sum_{members} (w'x_j + b)^2 - c sum_{others} (w'x_j + b)^2`.
pub fn proximal_objective(x: &DMatrix<f64>, members: &[usize], others: &[usize], c: f64, w: &DVector<f64>, b: f64) -> f64 {
    let r = |j: usize| {
        let t = x.column(j).dot(w) + b;
        t * t
    };
    members.iter().map(|&j| r(j)).sum::<f64>() - c * others.iter().map(|&j| r(j)).sum::<f64>()
}

/// Plane fitting the members best in squared distance: the smallest
/// eigenvector of their scatter, through their mean.
pub fn kpc_update(x: &DMatrix<f64>, members: &[usize]) -> Result<Plane> {
    let mean = column_mean(x, members)?;
    let s = scatter_matrix(x, members, &mean)?;
    let w = smallest_eigenvector(&s)?;
    let b = -w.dot(&mean);
    Ok(Plane { w, b, center: None })
}

fn augmented_moment(x: &DMatrix<f64>, indices: &[usize]) -> DMatrix<f64> {
    let n = x.nrows();
    let mut aug = DMatrix::from_element(n + 1, indices.len(), 1.0);
    for (c, &j) in indices.iter().enumerate() {
        aug.view_mut((0, c), (n, 1)).copy_from(&x.column(j));
    }
    &aug * aug.transpose()
}

/// Plane close to the members and far from the other samples.
///
/// With `v = (w; b)` the objective is `v'Mv` for
/// `M = sum_{members} (x;1)(x;1)' - c sum_{others} (x;1)(x;1)'`. When the
/// offset curvature `M_bb` is positive the offset is eliminated and `w` is the
/// smallest eigenvector of the Schur complement, which solves the problem
/// under `|w| = 1` exactly. Otherwise the objective is unbounded in `b`, and
/// the smallest eigenvector of `M` under `|(w, b)| = 1` is rescaled to
/// `|w| = 1`.
pub fn kppc_update(x: &DMatrix<f64>, members: &[usize], others: &[usize], c: f64) -> Result<Plane> {
    if members.is_empty() || others.is_empty() {
        return Err(MfpcError::EmptyMemberSet);
    }
    let n = x.nrows();
    let m = augmented_moment(x, members) - augmented_moment(x, others) * c;
    let m = (&m + m.transpose()) * 0.5;
    let m_ww = m.view((0, 0), (n, n)).into_owned();
    let m_wb = m.view((0, n), (n, 1)).column(0).into_owned();
    let m_bb = m[(n, n)];
    let scale = m.amax().max(1.0);
    if m_bb > 1e-12 * scale {
        let schur = &m_ww - &m_wb * m_wb.transpose() / m_bb;
        let w = smallest_eigenvectors(&schur, 1)?.column(0).into_owned();
        let b = -m_wb.dot(&w) / m_bb;
        return Ok(Plane { w, b, center: None });
    }
    let v = smallest_eigenvectors(&m, 1)?.column(0).into_owned();
    let w = v.rows(0, n).into_owned();
    let norm = w.norm();
    if norm < 1e-12 {
        return kpc_update(x, members);
    }
    Ok(Plane {
        w: w / norm,
        b: v[n] / norm,
        center: None,
    })
}

/// The proximal plane together with the member mean as center point.
pub fn lkppc_update(x: &DMatrix<f64>, members: &[usize], others: &[usize], c1: f64) -> Result<Plane> {
    let mut plane = kppc_update(x, members, others, c1)?;
    plane.center = Some(column_mean(x, members)?);
    Ok(plane)
}

/// `|w'x + b|^2 + c2 |x - nu|^2`.
pub fn lkppc_score(plane: &Plane, x: &DVector<f64>, c2: f64) -> f64 {
    let r = plane.residual(x);
    let d = plane.center.as_ref().map_or(0.0, |nu| (x - nu).norm_squared());
    r * r + c2 * d
}
