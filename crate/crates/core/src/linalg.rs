//! Dense linear-algebra primitives: scatter matrices, smallest eigenvectors,
//! deflation and kernel maps.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{MfpcError, Result};
use crate::types::{KernelKind, KernelSpec};

/// Dimension above which eigenvectors are found by inverse iteration instead
/// of a full decomposition.
pub const DENSE_EIGEN_LIMIT: usize = 512;

const INVERSE_ITERATION_CAP: usize = 1000;

/// A symmetric positive semidefinite scatter matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterMatrix(DMatrix<f64>);

impl ScatterMatrix {
    /// Wraps `matrix`, symmetrising away rounding noise. Callers are
    /// responsible for positive semidefiniteness.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Self {
        let sym = (&matrix + matrix.transpose()) * 0.5;
        Self(sym)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }
}

/// Columns `members` of `x`, each shifted by `-center`.
pub fn centered_columns(x: &DMatrix<f64>, members: &[usize], center: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), members.len(), |i, c| x[(i, members[c])] - center[i])
}

/// `sum_{j in members} (x_j - center)(x_j - center)^T`.
pub fn scatter_matrix(
    x: &DMatrix<f64>,
    members: &[usize],
    center: &DVector<f64>,
) -> Result<ScatterMatrix> {
    if members.is_empty() {
        return Err(MfpcError::EmptyMemberSet);
    }
    if center.len() != x.nrows() {
        return Err(MfpcError::LengthMismatch {
            expected: x.nrows(),
            found: center.len(),
        });
    }
    let c = centered_columns(x, members, center);
    Ok(ScatterMatrix::from_matrix(&c * c.transpose()))
}

/// Mean of the columns `members` of `x`.
pub fn column_mean(x: &DMatrix<f64>, members: &[usize]) -> Result<DVector<f64>> {
    if members.is_empty() {
        return Err(MfpcError::EmptyMemberSet);
    }
    let mut sum = DVector::zeros(x.nrows());
    for &j in members {
        sum += x.column(j);
    }
    Ok(sum / members.len() as f64)
}

/// Flips `v` so its first entry that is nonzero (beyond rounding) is positive.
pub fn fix_sign(v: &mut DVector<f64>) {
    let scale = v.amax();
    if scale == 0.0 {
        return;
    }
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12 * scale) {
        if *first < 0.0 {
            v.neg_mut();
        }
    }
}

/// Unit vector minimising `v^T S v`, sign-normalised.
pub fn smallest_eigenvector(s: &ScatterMatrix) -> Result<DVector<f64>> {
    let v = smallest_eigenvectors(s.matrix(), 1)?;
    Ok(v.column(0).into_owned())
}

/// The `count` eigenvectors of the symmetric matrix `a` with the smallest
/// eigenvalues, as columns in ascending eigenvalue order, each
/// sign-normalised.
///
/// `a` need not be definite; the baselines pass indefinite matrices here.
pub fn smallest_eigenvectors(a: &DMatrix<f64>, count: usize) -> Result<DMatrix<f64>> {
    let d = a.nrows();
    if count == 0 || count > d {
        return Err(MfpcError::InvalidConfig(format!(
            "cannot take {count} eigenvectors of a {d}x{d} matrix"
        )));
    }
    let mut vectors = if d <= DENSE_EIGEN_LIMIT {
        dense_smallest(a, count)
    } else {
        inverse_iteration_smallest(a, count)?
    };
    for mut col in vectors.column_iter_mut() {
        let mut v = col.clone_owned();
        fix_sign(&mut v);
        col.copy_from(&v);
    }
    Ok(vectors)
}

fn dense_smallest(a: &DMatrix<f64>, count: usize) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..a.nrows()).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]).then(x.cmp(&y)));
    DMatrix::from_fn(a.nrows(), count, |i, c| eig.eigenvectors[(i, order[c])])
}

/// Inverse iteration around zero, regularised by a tiny ridge. Matrices that
/// are not positive semidefinite are shifted by a Gershgorin lower bound of
/// their spectrum instead. Each further vector is found after lifting the
/// previous ones out of the way.
fn inverse_iteration_smallest(a: &DMatrix<f64>, count: usize) -> Result<DMatrix<f64>> {
    let d = a.nrows();
    let scale = a.iter().fold(0.0_f64, |m, x| m.max(x.abs())).max(1.0);
    let ridge = 1e-10 * scale * d as f64;
    let shift = if (a + DMatrix::identity(d, d) * ridge).cholesky().is_some() {
        -ridge
    } else {
        let lower = (0..d)
            .map(|i| {
                let off: f64 = (0..d).filter(|&j| j != i).map(|j| a[(i, j)].abs()).sum();
                a[(i, i)] - off
            })
            .fold(f64::INFINITY, f64::min);
        lower - ridge
    };
    let lift = d as f64 * scale * 2.0 + shift.abs();
    let mut found = DMatrix::zeros(d, count);
    let mut work = a.clone();
    for c in 0..count {
        if c > 0 {
            let v = found.column(c - 1).into_owned();
            work += &v * v.transpose() * lift;
        }
        let shifted = &work - DMatrix::identity(d, d) * shift;
        let chol = shifted
            .cholesky()
            .ok_or(MfpcError::ConvergenceFailure { iterations: 0 })?;
        let mut v = DVector::from_fn(d, |i, _| 1.0 + (i as f64 * 0.618_033_988_75).fract());
        v /= v.norm();
        let mut converged = false;
        for _ in 0..INVERSE_ITERATION_CAP {
            let mut next = chol.solve(&v);
            next /= next.norm();
            if next.dot(&v) < 0.0 {
                next.neg_mut();
            }
            let rayleigh = next.dot(&(&work * &next));
            let residual = (&work * &next - &next * rayleigh).norm();
            v = next;
            if residual <= 1e-10 * scale * d as f64 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(MfpcError::ConvergenceFailure {
                iterations: INVERSE_ITERATION_CAP,
            });
        }
        found.set_column(c, &v);
    }
    Ok(found)
}

/// Removes from every column of `x` its component along `w`.
pub fn deflate(x: &DMatrix<f64>, w: &DVector<f64>) -> Result<DMatrix<f64>> {
    if w.len() != x.nrows() {
        return Err(MfpcError::LengthMismatch {
            expected: x.nrows(),
            found: w.len(),
        });
    }
    let norm = w.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(MfpcError::ZeroDirection);
    }
    let unit = w / norm;
    let coeffs = x.tr_mul(&unit);
    Ok(x - &unit * coeffs.transpose())
}

/// Kernel values between every basis column and every query column, as a
/// `basis.ncols() x queries.ncols()` matrix.
pub fn kernel_map(queries: &DMatrix<f64>, basis: &DMatrix<f64>, spec: &KernelSpec) -> Result<DMatrix<f64>> {
    if queries.nrows() != basis.nrows() {
        return Err(MfpcError::LengthMismatch {
            expected: basis.nrows(),
            found: queries.nrows(),
        });
    }
    spec.validate(None)?;
    match spec.kind {
        KernelKind::Linear => Ok(basis.tr_mul(queries)),
        KernelKind::Gaussian { mu } => Ok(DMatrix::from_fn(basis.ncols(), queries.ncols(), |a, b| {
            let sq: f64 = basis
                .column(a)
                .iter()
                .zip(queries.column(b).iter())
                .map(|(u, v)| (u - v) * (u - v))
                .sum();
            (-mu * sq).exp()
        })),
    }
}

/// Largest `|w_a^T w_b| / (|w_a| |w_b|)` over distinct nonzero columns.
pub fn orthogonality_defect(w: &DMatrix<f64>) -> f64 {
    let norms: Vec<f64> = w.column_iter().map(|c| c.norm()).collect();
    let mut worst = 0.0_f64;
    for a in 0..w.ncols() {
        for b in a + 1..w.ncols() {
            if norms[a] < 1e-12 || norms[b] < 1e-12 {
                continue;
            }
            let cos = w.column(a).dot(&w.column(b)).abs() / (norms[a] * norms[b]);
            worst = worst.max(cos);
        }
    }
    worst
}
