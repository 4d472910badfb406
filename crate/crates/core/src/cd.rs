//! Cyclic coordinate descent for the elastic-net objective. Used as the
//! correctness oracle for SNA and as the speed baseline.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SnapError};
use crate::kkt::{sign, soft_threshold};
use crate::path::{lambda_grid, KnotRecord, PathConfig, PathResult};
use crate::problem::{ProblemData, SparseVec};
use crate::sna::StopReason;

/// Entries with `|beta_j| <= SUPPORT_THRESHOLD` are treated as zero in CD paths.
pub const SUPPORT_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct CdOutcome {
    pub beta: DVector<f64>,
    pub sweeps: usize,
    /// False when `max_sweeps` ran out before the tolerance was met.
    pub converged: bool,
    /// Objective after each sweep (only filled by [`cd_solve_traced`]).
    pub objective_trace: Vec<f64>,
}

/// Coordinate descent from `init` until the largest coordinate change in a
/// sweep is `<= tol`.
///
/// The update is the exact coordinate minimizer
/// `beta_j <- T_lambda(c_j beta_j + X_j'r/n) / (c_j + alpha/n)` with
/// `c_j = ||X_j||^2 / n` (equal to 1 on a normalized design). The residual
/// `r = y - X beta` is kept up to date with rank-one corrections.
pub fn cd_solve(prob: &ProblemData, lambda: f64, init: &DVector<f64>, tol: f64, max_sweeps: usize) -> CdOutcome {
    run(prob, lambda, init, tol, max_sweeps, false)
}

/// As [`cd_solve`], recording the objective after every sweep.
pub fn cd_solve_traced(
    prob: &ProblemData,
    lambda: f64,
    init: &DVector<f64>,
    tol: f64,
    max_sweeps: usize,
) -> CdOutcome {
    run(prob, lambda, init, tol, max_sweeps, true)
}

fn run(prob: &ProblemData, lambda: f64, init: &DVector<f64>, tol: f64, max_sweeps: usize, trace: bool) -> CdOutcome {
    let x = prob.x();
    let n = prob.n() as f64;
    let alpha = prob.alpha();
    let curvature: Vec<f64> = x.column_iter().map(|c| c.norm_squared() / n).collect();

    let mut beta = init.clone();
    let mut r = prob.residual(&beta);
    let mut objective_trace = Vec::new();
    let mut sweeps = 0;
    let mut converged = false;

    while sweeps < max_sweeps {
        sweeps += 1;
        let mut max_change = 0.0f64;
        for j in 0..prob.p() {
            let c = curvature[j];
            if c == 0.0 && alpha == 0.0 {
                continue;
            }
            let col = x.column(j);
            let old = beta[j];
            let z = c * old + col.dot(&r) / n;
            let new = soft_threshold(z, lambda) / (c + alpha / n);
            if new != old {
                r.axpy(old - new, &col, 1.0);
                beta[j] = new;
                max_change = max_change.max((new - old).abs());
            }
        }
        if trace {
            objective_trace.push(prob.objective(&beta, lambda));
        }
        if max_change <= tol {
            converged = true;
            break;
        }
    }

    CdOutcome {
        beta,
        sweeps,
        converged,
        objective_trace,
    }
}

/// Tolerance and sweep limit for CD paths.
#[derive(Debug, Clone, Copy)]
pub struct CdSettings {
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for CdSettings {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_sweeps: 10_000,
        }
    }
}

/// Coordinate descent over the same grid and warm-start chain as
/// [`crate::path::snap_run`]. Shift schedules do not apply here.
pub fn cd_path(prob: &ProblemData, config: &PathConfig, cd: &CdSettings) -> Result<PathResult> {
    let start = Instant::now();
    let lambda0 = config.resolve_lambda0(prob)?;
    config.validate(lambda0)?;
    let cap = config.effective_cap(prob.n());
    let mut beta = DVector::zeros(prob.p());
    let mut records = Vec::new();
    let mut terminated_at = None;
    for (t, lambda) in lambda_grid(lambda0, config.gamma, config.num_knots).into_iter().enumerate() {
        let out = cd_solve(prob, lambda, &beta, cd.tol, cd.max_sweeps);
        let sparse = SparseVec::from_dense(&out.beta, SUPPORT_THRESHOLD);
        if sparse.nnz() > cap {
            terminated_at = Some(t);
            break;
        }
        records.push(KnotRecord {
            knot: t,
            lambda,
            shift: 0.0,
            active_size: sparse.nnz(),
            beta: sparse,
            dual: config.retain_duals.then(|| crate::kkt::refresh_dual(prob, &out.beta)),
            inner_iterations: out.sweeps,
            stop_reason: if out.converged {
                StopReason::ActiveSetRepeated
            } else {
                StopReason::MaxIter
            },
        });
        beta = out.beta;
    }
    Ok(PathResult {
        records,
        lambda0,
        wall_time: start.elapsed(),
        terminated_at,
    })
}

/// Tolerance used by [`min_norm_lasso_probe`].
pub const PROBE_TOL: f64 = 1e-14;

/// Elastic-net solutions at a fixed `lambda` for a decreasing list of ridge
/// weights, to watch them approach the minimum-norm LASSO solution.
///
/// Each solve is CD at [`PROBE_TOL`] warm-started from the previous one,
/// followed by an exact solve on the CD support with the CD signs, kept only
/// if it satisfies the KKT conditions. The polish matters when columns are
/// nearly collinear, where CD contracts at a rate close to `1 - alpha/n`.
pub fn min_norm_lasso_probe(prob: &ProblemData, lambda: f64, alphas: &[f64]) -> Result<Vec<DVector<f64>>> {
    if alphas.iter().any(|a| !(*a > 0.0)) {
        return Err(SnapError::InvalidConfig("ridge weights must be > 0".into()));
    }
    if alphas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(SnapError::InvalidConfig("ridge weights must be strictly decreasing".into()));
    }
    let mut out = Vec::with_capacity(alphas.len());
    let mut warm = DVector::zeros(prob.p());
    for &alpha in alphas {
        let enet = prob.clone().with_alpha(alpha)?;
        let cd = cd_solve(&enet, lambda, &warm, PROBE_TOL, 1_000_000);
        let beta = polish_on_support(&enet, lambda, &cd.beta).unwrap_or(cd.beta);
        warm = beta.clone();
        out.push(beta);
    }
    Ok(out)
}

/// Solves `(X_S'X_S + alpha I) beta_S = X_S'y - n lambda s` on the support of
/// `beta` and returns it if the result passes the KKT check.
pub fn polish_on_support(prob: &ProblemData, lambda: f64, beta: &DVector<f64>) -> Option<DVector<f64>> {
    let support: Vec<usize> = (0..beta.len()).filter(|&j| beta[j] != 0.0).collect();
    if support.is_empty() {
        return None;
    }
    let n = prob.n() as f64;
    let xs: DMatrix<f64> = prob.x().select_columns(&support);
    let mut gram = xs.tr_mul(&xs);
    for i in 0..support.len() {
        gram[(i, i)] += prob.alpha();
    }
    let rhs = DVector::from_iterator(
        support.len(),
        support.iter().map(|&j| prob.xty()[j] - n * lambda * sign(beta[j])),
    );
    let sol = gram.cholesky()?.solve(&rhs);
    if support.iter().zip(sol.iter()).any(|(&j, v)| sign(*v) != sign(beta[j])) {
        return None;
    }
    let mut polished = DVector::zeros(beta.len());
    for (&j, v) in support.iter().zip(sol.iter()) {
        polished[j] = *v;
    }
    let dual = crate::kkt::refresh_dual(prob, &polished);
    let feasible = (0..beta.len())
        .filter(|j| polished[*j] == 0.0)
        .all(|j| dual[j].abs() <= lambda * (1.0 + 1e-9));
    feasible.then_some(polished)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kkt::soft_threshold_vec;

    fn orthogonal(y: &[f64], alpha: f64) -> ProblemData {
        let n = y.len();
        let x = DMatrix::identity(n, n) * (n as f64).sqrt();
        ProblemData::new(x, DVector::from_column_slice(y), alpha).unwrap()
    }

    #[test]
    fn orthogonal_design_one_sweep() {
        let y = [3.0, -1.0, 0.2, 2.5];
        for alpha in [0.0, 0.5] {
            let prob = orthogonal(&y, alpha);
            let lambda = 0.4;
            let out = cd_solve(&prob, lambda, &DVector::zeros(4), 1e-14, 100);
            let scale = 4.0 / (4.0 + alpha);
            let expect = soft_threshold_vec(&(prob.xty() / 4.0), lambda) * scale;
            assert!((&out.beta - &expect).amax() <= 1e-14);
            // second sweep only confirms
            assert!(out.sweeps <= 2);
        }
    }

    #[test]
    fn null_model_above_lambda_max() {
        let prob = orthogonal(&[3.0, -1.0, 0.2], 0.0);
        let lmax = prob.xty().amax() / 3.0;
        let out = cd_solve(&prob, lmax, &DVector::zeros(3), 1e-12, 10);
        assert_eq!(out.sweeps, 1);
        assert!(out.beta.iter().all(|b| *b == 0.0));
    }

    #[test]
    fn reports_non_convergence() {
        let x = DMatrix::from_fn(10, 6, |i, j| ((i + 1) as f64 * (j + 2) as f64).sin());
        let prob = ProblemData::new(x, DVector::from_fn(10, |i, _| i as f64), 0.0).unwrap();
        let out = cd_solve(&prob, 1e-4, &DVector::zeros(6), 1e-15, 2);
        assert!(!out.converged);
        assert_eq!(out.sweeps, 2);
    }

    #[test]
    fn probe_rejects_bad_alphas() {
        let prob = orthogonal(&[1.0, 2.0], 0.0);
        assert!(min_norm_lasso_probe(&prob, 0.1, &[1e-2, 1e-2]).is_err());
        assert!(min_norm_lasso_probe(&prob, 0.1, &[1e-2, -1.0]).is_err());
    }

    #[test]
    fn probe_null_model() {
        let prob = orthogonal(&[1.0, -2.0, 0.5], 0.0);
        let out = min_norm_lasso_probe(&prob, 10.0, &[1e-2, 1e-4, 1e-6]).unwrap();
        assert!(out.iter().all(|b| b.iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn probe_splits_duplicated_columns() {
        let base = DMatrix::from_fn(12, 3, |i, j| ((i * 5 + j * 7) % 11) as f64 - 5.0 + 0.3 * j as f64);
        let mut x = DMatrix::zeros(12, 4);
        x.column_mut(0).copy_from(&base.column(0));
        x.column_mut(1).copy_from(&base.column(0));
        x.column_mut(2).copy_from(&base.column(1));
        x.column_mut(3).copy_from(&base.column(2));
        let y = &base.column(0) * 2.0 - &base.column(2) + DVector::from_fn(12, |i, _| 0.1 * (i as f64).cos());
        let prob = ProblemData::normalize(x, y).unwrap();
        let lambda = 0.1 * crate::path::default_lambda0(&prob).unwrap();
        let sols = min_norm_lasso_probe(&prob, lambda, &[1e-2, 1e-4, 1e-6]).unwrap();
        for b in &sols {
            assert!(b[0] != 0.0);
            assert!((b[0] - b[1]).abs() <= 1e-8 * b[0].abs(), "{} vs {}", b[0], b[1]);
        }
    }
}
