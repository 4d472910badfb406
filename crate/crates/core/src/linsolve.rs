//! Solves the restricted system `(X_A'X_A + alpha I) beta_A = rhs`.
//!
//! Small active sets are factorized directly. Larger ones go through
//! conjugate gradients, warm-started from the previous coefficients, with an
//! iteration cap that keeps the cost of one SNA iteration at `O(np)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SnapError};
use crate::problem::ProblemData;

/// Upper bound on CG iterations per restricted solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgCap {
    /// `max(1, floor(p / (2 |A|)))`.
    Auto,
    Fixed(usize),
    /// Up to `|A|` iterations (exact arithmetic would terminate by then), plus slack.
    Unlimited,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgPolicy {
    /// Relative residual target `||r|| <= tol * ||rhs||`.
    pub tol: f64,
    pub cap: CgCap,
    /// Active sets up to this size are solved by Cholesky instead of CG.
    pub direct_threshold: usize,
}

impl Default for CgPolicy {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            cap: CgCap::Auto,
            direct_threshold: 32,
        }
    }
}

impl CgPolicy {
    pub fn max_iterations(&self, p: usize, active: usize) -> usize {
        match self.cap {
            CgCap::Auto => (p / (2 * active.max(1))).max(1),
            CgCap::Fixed(k) => k.max(1),
            CgCap::Unlimited => 2 * active + 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RestrictedSolve {
    pub solution: DVector<f64>,
    pub cg_iterations: usize,
    pub direct: bool,
}

/// Copies the listed columns into a dense `n x |cols|` block.
pub fn gather_columns(prob: &ProblemData, cols: &[usize]) -> DMatrix<f64> {
    prob.x().select_columns(cols)
}

pub fn solve_restricted(
    prob: &ProblemData,
    active: &[usize],
    rhs: &DVector<f64>,
    warm: DVector<f64>,
    policy: &CgPolicy,
) -> Result<RestrictedSolve> {
    if active.is_empty() {
        return Ok(RestrictedSolve {
            solution: DVector::zeros(0),
            cg_iterations: 0,
            direct: true,
        });
    }
    let xa = gather_columns(prob, active);
    if active.len() <= policy.direct_threshold {
        let solution = solve_direct(&xa, prob.alpha(), rhs)?;
        return Ok(RestrictedSolve {
            solution,
            cg_iterations: 0,
            direct: true,
        });
    }
    let cap = policy.max_iterations(prob.p(), active.len());
    let (solution, cg_iterations) = conjugate_gradient(&xa, prob.alpha(), rhs, warm, policy.tol, cap)?;
    Ok(RestrictedSolve {
        solution,
        cg_iterations,
        direct: false,
    })
}

/// Cholesky factors whose squared pivot ratio falls below this are rejected.
const PIVOT_RATIO_TOL: f64 = 1e-13;

fn solve_direct(xa: &DMatrix<f64>, alpha: f64, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let mut gram = xa.tr_mul(xa);
    for i in 0..gram.nrows() {
        gram[(i, i)] += alpha;
    }
    let sol = match gram.clone().cholesky() {
        Some(ch) => {
            let diag = ch.l_dirty().diagonal();
            let (lo, hi) = (diag.min(), diag.max());
            // squared pivot ratio approximates the reciprocal condition number
            if (lo / hi).powi(2) < PIVOT_RATIO_TOL {
                return Err(SnapError::SingularSystem);
            }
            ch.solve(rhs)
        }
        None => gram.lu().solve(rhs).ok_or(SnapError::SingularSystem)?,
    };
    if sol.iter().all(|v| v.is_finite()) {
        Ok(sol)
    } else {
        Err(SnapError::SingularSystem)
    }
}

/// CG on `v -> X_A'(X_A v) + alpha v`. Returns the iterate and the iteration count.
pub fn conjugate_gradient(
    xa: &DMatrix<f64>,
    alpha: f64,
    rhs: &DVector<f64>,
    mut x: DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<(DVector<f64>, usize)> {
    let n = xa.nrows() as f64;
    let apply = |v: &DVector<f64>| -> DVector<f64> {
        let mut out = xa.tr_mul(&(xa * v));
        if alpha != 0.0 {
            out.axpy(alpha, v, 1.0);
        }
        out
    };
    let target = tol * rhs.norm();
    let mut r = rhs - apply(&x);
    let mut rr = r.norm_squared();
    if rr.sqrt() <= target {
        return Ok((x, 0));
    }
    let mut dir = r.clone();
    for it in 1..=max_iter {
        let ad = apply(&dir);
        let curvature = dir.dot(&ad);
        // the diagonal of X_A'X_A is ~n for a normalized design
        if !curvature.is_finite() || curvature <= 1e-14 * n * dir.norm_squared() {
            return Err(SnapError::CgBreakdown {
                iterations: it - 1,
                curvature,
            });
        }
        let step = rr / curvature;
        x.axpy(step, &dir, 1.0);
        r.axpy(-step, &ad, 1.0);
        let rr_next = r.norm_squared();
        if rr_next.sqrt() <= target {
            return Ok((x, it));
        }
        dir = &r + &dir * (rr_next / rr);
        rr = rr_next;
    }
    Ok((x, max_iter))
}
