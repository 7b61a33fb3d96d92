//! Per-column subproblem: penalised objective, its difference-of-convex split
//! and the concave-convex iteration that minimises it.
//!
//! For one projection column `w` the objective is
//!
//! ```text
//! f(w) = 1/2 |w|^2 + c1/2 w'Sw + c2 sum_j (1 - |w'a_j|)_+ + sigma/2 |w'Gw - 1|
//! ```
//!
//! and splits as `f = F_vex + F_cav + c2 r + sigma/2` with
//!
//! ```text
//! F_vex(w) = 1/2 |w|^2 + c1/2 w'Sw + c2 sum_j (|w'a_j| - 1)_+ + sigma (w'Gw - 1)_+
//! F_cav(w) = -c2 sum_j |w'a_j| - sigma/2 w'Gw
//! ```
//!
//! where `r` is the number of columns `a_j`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{MfpcError, Result};
use crate::linalg::{smallest_eigenvectors, ScatterMatrix};
use crate::types::SolverConfig;

/// Sweeps of the inner dual solver before it gives up.
pub const INNER_SWEEP_CAP: usize = 20_000;

/// Data of one column subproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemInstance {
    /// Difference vectors `a_j = x_j - center`, one column per non-member.
    pub others: DMatrix<f64>,
    /// Unit-ball quadratic `G = sum_j x_j x_j^T` over all samples.
    pub gram: DMatrix<f64>,
    pub scatter: ScatterMatrix,
    pub c1: f64,
    pub c2: f64,
    pub sigma: f64,
    pub tol_cccp: f64,
    pub tol_qp: f64,
    pub max_cccp_iters: usize,
    /// Unit directions already used by earlier columns; the starting point
    /// is taken from their orthogonal complement.
    pub excluded: Vec<DVector<f64>>,
}

impl SubproblemInstance {
    pub fn new(
        others: DMatrix<f64>,
        gram: DMatrix<f64>,
        scatter: ScatterMatrix,
        config: &SolverConfig,
    ) -> Result<Self> {
        let d = scatter.dim();
        if others.nrows() != d || gram.nrows() != d || gram.ncols() != d {
            return Err(MfpcError::LengthMismatch {
                expected: d,
                found: if others.nrows() != d { others.nrows() } else { gram.nrows() },
            });
        }
        if others.ncols() == 0 {
            return Err(MfpcError::EmptyMemberSet);
        }
        let gram = (&gram + gram.transpose()) * 0.5;
        Ok(Self {
            others,
            gram,
            scatter,
            c1: config.c1,
            c2: config.c2,
            sigma: config.sigma,
            tol_cccp: config.tol_cccp,
            tol_qp: config.tol_qp,
            max_cccp_iters: config.max_cccp_iters,
            excluded: Vec::new(),
        })
    }

    pub fn with_excluded(mut self, directions: Vec<DVector<f64>>) -> Self {
        self.excluded = directions;
        self
    }

    pub fn dim(&self) -> usize {
        self.scatter.dim()
    }

    /// `w'Gw`.
    pub fn ball_value(&self, w: &DVector<f64>) -> f64 {
        w.dot(&(&self.gram * w))
    }

    /// `|w'Gw - 1|`, the unit-ball constraint violation.
    pub fn ball_defect(&self, w: &DVector<f64>) -> f64 {
        (self.ball_value(w) - 1.0).abs()
    }

    fn smooth_part(&self, w: &DVector<f64>) -> f64 {
        0.5 * w.norm_squared() + 0.5 * self.c1 * w.dot(&(self.scatter.matrix() * w))
    }

    /// `f(w) - (F_vex(w) + F_cav(w))`.
    pub fn split_constant(&self) -> f64 {
        self.c2 * self.others.ncols() as f64 + 0.5 * self.sigma
    }
}

/// Penalised column objective `f(w)`.
pub fn penalty_objective(w: &DVector<f64>, inst: &SubproblemInstance) -> f64 {
    let margins = inst.others.tr_mul(w);
    let hinge: f64 = margins.iter().map(|t| (1.0 - t.abs()).max(0.0)).sum();
    inst.smooth_part(w) + inst.c2 * hinge + 0.5 * inst.sigma * (inst.ball_value(w) - 1.0).abs()
}

/// Convex part `F_vex(w)`.
pub fn convex_part(w: &DVector<f64>, inst: &SubproblemInstance) -> f64 {
    let margins = inst.others.tr_mul(w);
    let hinge: f64 = margins.iter().map(|t| (t.abs() - 1.0).max(0.0)).sum();
    inst.smooth_part(w) + inst.c2 * hinge + inst.sigma * (inst.ball_value(w) - 1.0).max(0.0)
}

/// Concave part `F_cav(w)`.
pub fn concave_part(w: &DVector<f64>, inst: &SubproblemInstance) -> f64 {
    let margins = inst.others.tr_mul(w);
    let abs_sum: f64 = margins.iter().map(|t| t.abs()).sum();
    -inst.c2 * abs_sum - 0.5 * inst.sigma * inst.ball_value(w)
}

/// A subgradient of `F_cav` at `w`, using `sign(0) = 0`.
pub fn concave_subgradient(w: &DVector<f64>, inst: &SubproblemInstance) -> DVector<f64> {
    let margins = inst.others.tr_mul(w);
    let signs = margins.map(sign);
    -(&inst.others * signs) * inst.c2 - (&inst.gram * w) * inst.sigma
}

fn sign(t: f64) -> f64 {
    if t > 0.0 {
        1.0
    } else if t < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `F_vex(w) + g'w`, the objective of the convex surrogate.
pub fn surrogate_objective(w: &DVector<f64>, g: &DVector<f64>, inst: &SubproblemInstance) -> f64 {
    convex_part(w, inst) + g.dot(w)
}

/// Minimises `F_vex(w) + g'w`. The result is never worse than `warm`.
pub fn solve_convex_subproblem(
    g: &DVector<f64>,
    warm: &DVector<f64>,
    inst: &SubproblemInstance,
) -> Result<DVector<f64>> {
    let solver = ConvexSolver::new(inst)?;
    let mut dual = DualState::cold(inst.others.ncols());
    Ok(solver.solve(g, warm, &mut dual)?.0)
}

/// Outcome of one inner solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerStats {
    pub sweeps: usize,
    pub gap: f64,
}

/// Dual variables of the surrogate, kept between calls for warm starts:
/// `beta_j` in `[-c2, c2]` for each hinge and `lambda` in `[0, 1]` for the
/// ball term.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    beta: DVector<f64>,
    lambda: f64,
}

impl DualState {
    pub fn cold(hinges: usize) -> Self {
        Self {
            beta: DVector::zeros(hinges),
            lambda: 0.0,
        }
    }
}

/// Coordinates in which the smooth quadratic is the identity and the ball
/// quadratic is diagonal: `w = V z` with `V'(I + c1 S)V = I` and
/// `V'GV = diag(theta)`.
///
/// In these coordinates the surrogate is
/// `1/2|z|^2 + h'z + c2 sum (|b_j'z| - 1)_+ + sigma (z' diag(theta) z - 1)_+`
/// with `h = V'g` and `b_j = V'a_j`, and its dual is maximised by coordinate
/// ascent.
#[derive(Debug, Clone)]
pub struct ConvexSolver<'a> {
    inst: &'a SubproblemInstance,
    basis: DMatrix<f64>,
    theta: DVector<f64>,
    /// `V' A`, one column per hinge.
    hinges: DMatrix<f64>,
    /// `V^{-1} = U' L'`, used to map warm starts into `z` coordinates.
    inverse_basis: DMatrix<f64>,
}

impl<'a> ConvexSolver<'a> {
    pub fn new(inst: &'a SubproblemInstance) -> Result<Self> {
        let d = inst.dim();
        let smooth = DMatrix::identity(d, d) + inst.scatter.matrix() * inst.c1;
        let chol = smooth
            .cholesky()
            .ok_or_else(|| MfpcError::InvalidConfig("smooth quadratic is not positive definite".into()))?;
        let l = chol.l();
        let l_inv = l
            .clone()
            .try_inverse()
            .ok_or_else(|| MfpcError::InvalidConfig("singular Cholesky factor".into()))?;
        let whitened = &l_inv * &inst.gram * l_inv.transpose();
        let whitened = (&whitened + whitened.transpose()) * 0.5;
        let eig = SymmetricEigen::new(whitened);
        let theta = eig.eigenvalues.map(|t| t.max(0.0));
        let u = eig.eigenvectors;
        let basis = l_inv.transpose() * &u;
        let inverse_basis = u.transpose() * l.transpose();
        let hinges = basis.tr_mul(&inst.others);
        Ok(Self {
            inst,
            basis,
            theta,
            hinges,
            inverse_basis,
        })
    }

    fn primal(&self, z: &DVector<f64>, h: &DVector<f64>) -> f64 {
        let margins = self.hinges.tr_mul(z);
        let hinge: f64 = margins.iter().map(|t| (t.abs() - 1.0).max(0.0)).sum();
        let ball: f64 = z.iter().zip(self.theta.iter()).map(|(v, t)| t * v * v).sum();
        0.5 * z.norm_squared()
            + h.dot(z)
            + self.inst.c2 * hinge
            + self.inst.sigma * (ball - 1.0).max(0.0)
    }

    fn denominators(&self, lambda: f64) -> DVector<f64> {
        self.theta.map(|t| 1.0 + 2.0 * lambda * self.inst.sigma * t)
    }

    /// Maximises the dual over `lambda` with `u` fixed.
    fn best_lambda(&self, u: &DVector<f64>) -> f64 {
        if self.inst.sigma == 0.0 {
            return 0.0;
        }
        let q = |lambda: f64| -> f64 {
            u.iter()
                .zip(self.theta.iter())
                .map(|(ur, t)| {
                    let den = 1.0 + 2.0 * lambda * self.inst.sigma * t;
                    t * ur * ur / (den * den)
                })
                .sum()
        };
        if q(0.0) <= 1.0 {
            return 0.0;
        }
        if q(1.0) >= 1.0 {
            return 1.0;
        }
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if q(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Minimises `F_vex(w) + g'w`, updating `dual` in place for the next call.
    /// Returns the better of the solver's point and `warm`.
    pub fn solve(
        &self,
        g: &DVector<f64>,
        warm: &DVector<f64>,
        dual: &mut DualState,
    ) -> Result<(DVector<f64>, InnerStats)> {
        let inst = self.inst;
        let r = self.hinges.ncols();
        if dual.beta.len() != r {
            *dual = DualState::cold(r);
        }
        let h = self.basis.tr_mul(g);
        let c2 = inst.c2;
        let beta = &mut dual.beta;
        let mut lambda = dual.lambda;
        let mut u = &h + &self.hinges * &*beta;
        let mut den = self.denominators(lambda);
        let mut diag = DVector::zeros(r);

        let warm_z = &self.inverse_basis * warm;
        let mut best_z = warm_z.clone();
        let mut best_primal = self.primal(&warm_z, &h);
        let mut sweeps = 0;
        let mut gap;

        loop {
            let z = -u.component_div(&den);
            let primal = self.primal(&z, &h);
            let dual_value = -0.5 * u.iter().zip(den.iter()).map(|(a, b)| a * a / b).sum::<f64>()
                - beta.iter().map(|b| b.abs()).sum::<f64>()
                - lambda * inst.sigma;
            if primal < best_primal {
                best_primal = primal;
                best_z = z;
            }
            gap = best_primal - dual_value;
            if gap <= inst.tol_qp * best_primal.abs().max(1.0) || sweeps >= INNER_SWEEP_CAP {
                break;
            }
            sweeps += 1;

            lambda = self.best_lambda(&u);
            den = self.denominators(lambda);
            for j in 0..r {
                let col = self.hinges.column(j);
                diag[j] = col.iter().zip(den.iter()).map(|(a, b)| a * a / b).sum::<f64>();
            }
            if c2 == 0.0 {
                continue;
            }
            for j in 0..r {
                let q = diag[j];
                if q <= 0.0 {
                    continue;
                }
                let col = self.hinges.column(j);
                let slope: f64 = -col
                    .iter()
                    .zip(u.iter().zip(den.iter()))
                    .map(|(a, (ur, dr))| a * ur / dr)
                    .sum::<f64>();
                let target = beta[j] + slope / q;
                let shrunk = target.signum() * (target.abs() - 1.0 / q).max(0.0);
                let next = shrunk.clamp(-c2, c2);
                let delta = next - beta[j];
                if delta != 0.0 {
                    u.axpy(delta, &col, 1.0);
                    beta[j] = next;
                }
            }
        }
        dual.lambda = lambda;

        let stats = InnerStats { sweeps, gap };
        let warm_value = surrogate_objective(warm, g, inst);
        let candidate = &self.basis * &best_z;
        let candidate_value = surrogate_objective(&candidate, g, inst);
        let converged = gap <= inst.tol_qp * best_primal.abs().max(1.0);
        if candidate_value <= warm_value {
            Ok((candidate, stats))
        } else if converged {
            Ok((warm.clone(), stats))
        } else {
            Err(MfpcError::InnerSolverStall { sweeps, gap })
        }
    }
}

/// Record of one concave-convex run.
#[derive(Debug, Clone, PartialEq)]
pub struct CccpTrace {
    /// `(w^t, f(w^t))` for every accepted iterate, starting with `w^0`.
    pub iterates: Vec<(DVector<f64>, f64)>,
    pub converged: bool,
    /// Number of surrogate solves performed.
    pub iterations: usize,
    /// Set when the iteration cap stopped the run.
    pub max_iters_reached: bool,
}

impl CccpTrace {
    pub fn objectives(&self) -> Vec<f64> {
        self.iterates.iter().map(|(_, f)| *f).collect()
    }

    /// `iteration,objective,constraint_violation` lines, one per iterate.
    pub fn csv_lines(&self, inst: &SubproblemInstance) -> Vec<String> {
        self.iterates
            .iter()
            .enumerate()
            .map(|(t, (w, f))| format!("{t},{f},{}", inst.ball_defect(w)))
            .collect()
    }
}

/// Starting point: the smallest eigenvector of `S`, restricted to the
/// orthogonal complement of the excluded directions.
pub fn initial_point(inst: &SubproblemInstance) -> Result<DVector<f64>> {
    let mut s = inst.scatter.matrix().clone();
    if !inst.excluded.is_empty() {
        let lift = s.trace().abs() + 1.0;
        for v in &inst.excluded {
            s += v * v.transpose() * lift;
        }
    }
    Ok(smallest_eigenvectors(&s, 1)?.column(0).into_owned())
}

/// Runs the concave-convex iteration from [`initial_point`].
pub fn solve_column(inst: &SubproblemInstance) -> Result<(DVector<f64>, CccpTrace)> {
    let start = initial_point(inst)?;
    solve_column_from(inst, start)
}

/// Runs the concave-convex iteration from `start`.
///
/// A step that would raise the objective (possible only through rounding or
/// an inexact surrogate solve) is rejected and ends the run.
pub fn solve_column_from(
    inst: &SubproblemInstance,
    start: DVector<f64>,
) -> Result<(DVector<f64>, CccpTrace)> {
    let solver = ConvexSolver::new(inst)?;
    let mut dual = DualState::cold(inst.others.ncols());
    let mut w = start;
    let mut f = penalty_objective(&w, inst);
    let mut trace = CccpTrace {
        iterates: vec![(w.clone(), f)],
        converged: false,
        iterations: 0,
        max_iters_reached: false,
    };
    for _ in 0..inst.max_cccp_iters {
        let g = concave_subgradient(&w, inst);
        let (next, _) = solver.solve(&g, &w, &mut dual)?;
        trace.iterations += 1;
        let f_next = penalty_objective(&next, inst);
        if f_next > f {
            trace.converged = true;
            break;
        }
        let step = (&next - &w).norm();
        w = next;
        f = f_next;
        trace.iterates.push((w.clone(), f));
        if step <= inst.tol_cccp {
            trace.converged = true;
            break;
        }
    }
    trace.max_iters_reached = !trace.converged;
    Ok((w, trace))
}
