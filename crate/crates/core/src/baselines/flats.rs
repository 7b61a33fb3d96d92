//! Flat prototypes `W'x = gamma` with orthonormal `W`.

use nalgebra::{DMatrix, DVector};

use crate::error::{MfpcError, Result};
use crate::linalg::{column_mean, scatter_matrix, smallest_eigenvectors};

/// A cluster flat. For the localised variant `gamma` is the member mean in
/// input space; otherwise it is the projected mean `W' mean`.
#[derive(Debug, Clone, PartialEq)]
pub struct Flat {
    pub w: DMatrix<f64>,
    pub gamma: DVector<f64>,
    pub local: bool,
}

fn orthonormal_basis(x: &DMatrix<f64>, members: &[usize], p_flat: usize) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if p_flat == 0 || p_flat >= x.nrows() {
        return Err(MfpcError::InvalidConfig(format!(
            "flat codimension {p_flat} must lie in 1..{}",
            x.nrows()
        )));
    }
    let mean = column_mean(x, members)?;
    let s = scatter_matrix(x, members, &mean)?;
    let w = smallest_eigenvectors(s.matrix(), p_flat)?;
    Ok((w, mean))
}

/// `p_flat` smallest eigenvectors of the member scatter and `gamma = W' mean`.
pub fn kfc_update(x: &DMatrix<f64>, members: &[usize], p_flat: usize) -> Result<Flat> {
    let (w, mean) = orthonormal_basis(x, members, p_flat)?;
    Ok(Flat {
        gamma: w.tr_mul(&mean),
        w,
        local: false,
    })
}

/// `|W'x - gamma|`.
pub fn kfc_score(flat: &Flat, x: &DVector<f64>) -> f64 {
    (flat.w.tr_mul(x) - &flat.gamma).norm()
}

/// `sum_{members} |W'x_j - gamma|^2`.
pub fn kfc_objective(x: &DMatrix<f64>, members: &[usize], w: &DMatrix<f64>, gamma: &DVector<f64>) -> f64 {
    members
        .iter()
        .map(|&j| (w.tr_mul(&x.column(j)) - gamma).norm_squared())
        .sum()
}

/// Member mean as `gamma` and the `p_flat` smallest eigenvectors of the
/// scatter about it. The `c`-weighted distance term does not depend on `W`.
pub fn lkfc_update(x: &DMatrix<f64>, members: &[usize], p_flat: usize) -> Result<Flat> {
    let (w, mean) = orthonormal_basis(x, members, p_flat)?;
    Ok(Flat {
        w,
        gamma: mean,
        local: true,
    })
}

/// `|W'(x - gamma)|^2 + c |x - gamma|^2`.
pub fn lkfc_score(flat: &Flat, x: &DVector<f64>, c: f64) -> f64 {
    let diff = x - &flat.gamma;
    flat.w.tr_mul(&diff).norm_squared() + c * diff.norm_squared()
}

/// `sum_{members} |W'(x_j - gamma)|^2 + c |x_j - gamma|^2`.
pub fn lkfc_objective(x: &DMatrix<f64>, members: &[usize], w: &DMatrix<f64>, gamma: &DVector<f64>, c: f64) -> f64 {
    members
        .iter()
        .map(|&j| {
            let diff = x.column(j) - gamma;
            w.tr_mul(&diff).norm_squared() + c * diff.norm_squared()
        })
        .sum()
}
