//! Semismooth Newton solve at a fixed `(lambda, shift, alpha)`.
//!
//! Each iteration estimates the active set from the primal and dual together,
//! `A_k = { j : |beta_j + d_j| > lambda }`, then
//!
//! ```text
//! beta_B = 0
//! d_A    = (lambda - shift) * sgn(beta_A + d_A)       (signs of the current iterate)
//! beta_A = G_AA^{-1} (X_A'y - n d_A)
//! d_B    = (X_B'y - G_BA beta_A) / n
//! ```
//!
//! With `shift = 0` this is exactly a semismooth Newton step on the KKT
//! residual (see [`crate::kkt::newton_step_dense`] for the dense form).

use nalgebra::DVector;

use crate::error::{Result, SnapError};
use crate::kkt::{kkt_residual, partition, refresh_dual, sign};
use crate::linsolve::{solve_restricted, CgPolicy};
use crate::problem::{ActivePartition, PrimalDualState, ProblemData};

/// Relative tolerance of the warm-start fixed-point test.
const FIXED_POINT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SnaConfig {
    pub lambda: f64,
    /// The shift `0 <= shift < lambda` applied to `d_A`.
    pub shift: f64,
    /// Iteration safeguard `K`.
    pub max_iter: usize,
    pub cg: CgPolicy,
    pub sparsity_cap: usize,
    /// Stop once `||F(z)||_inf <= residual_tol`; `0` disables the check.
    pub residual_tol: f64,
}

impl SnaConfig {
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            shift: 0.0,
            max_iter: 5,
            cg: CgPolicy::default(),
            sparsity_cap: usize::MAX,
            residual_tol: 0.0,
        }
    }

    pub fn with_shift(mut self, shift: f64) -> Self {
        self.shift = shift;
        self
    }

    pub fn with_max_iter(mut self, k: usize) -> Self {
        self.max_iter = k;
        self
    }

    pub fn with_sparsity_cap(mut self, cap: usize) -> Self {
        self.sparsity_cap = cap;
        self
    }

    pub fn with_cg(mut self, cg: CgPolicy) -> Self {
        self.cg = cg;
        self
    }

    pub fn with_residual_tol(mut self, tol: f64) -> Self {
        self.residual_tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(SnapError::InvalidConfig(format!("lambda must be > 0, got {}", self.lambda)));
        }
        if !(self.shift >= 0.0 && self.shift < self.lambda) {
            return Err(SnapError::InvalidConfig(format!(
                "shift must lie in [0, lambda), got {} with lambda {}",
                self.shift, self.lambda
            )));
        }
        if self.max_iter == 0 {
            return Err(SnapError::InvalidConfig("max_iter must be >= 1".into()));
        }
        if self.sparsity_cap == 0 {
            return Err(SnapError::InvalidConfig("sparsity cap must be >= 1".into()));
        }
        if !(self.cg.tol > 0.0) {
            return Err(SnapError::InvalidConfig("cg tolerance must be > 0".into()));
        }
        if !(self.residual_tol >= 0.0) {
            return Err(SnapError::InvalidConfig("residual tolerance must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum StopReason {
    ActiveSetRepeated,
    MaxIter,
    SparsityCapExceeded,
    ResidualBelowTol,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::ActiveSetRepeated => "active_set_repeated",
            StopReason::MaxIter => "max_iter",
            StopReason::SparsityCapExceeded => "sparsity_cap_exceeded",
            StopReason::ResidualBelowTol => "residual_below_tol",
        }
    }
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct SnaOutcome {
    pub state: PrimalDualState,
    /// Number of updates performed.
    pub iterations: usize,
    pub stop_reason: StopReason,
    /// Partition computed at the stopping iterate.
    pub active: ActivePartition,
    pub cg_iterations: usize,
}

fn active_signs(state: &PrimalDualState, active: &[usize]) -> Vec<f64> {
    active
        .iter()
        .map(|&j| sign(state.beta[j] + state.dual[j]))
        .collect()
}

/// One active-set update. Returns the new state and the CG iteration count.
pub fn sna_update_counted(
    prob: &ProblemData,
    state: &PrimalDualState,
    part: &ActivePartition,
    lambda: f64,
    shift: f64,
    cg: &CgPolicy,
    sparsity_cap: usize,
) -> Result<(PrimalDualState, usize)> {
    let active = &part.active;
    if active.len() > sparsity_cap {
        return Err(SnapError::ActiveSetTooLarge {
            size: active.len(),
            cap: sparsity_cap,
        });
    }
    let n = prob.n() as f64;
    let xty = prob.xty();
    let p = prob.p();

    let signs = active_signs(state, active);
    let d_active: Vec<f64> = signs.iter().map(|s| (lambda - shift) * s).collect();
    let rhs = DVector::from_iterator(
        active.len(),
        active.iter().zip(&d_active).map(|(&j, d)| xty[j] - n * d),
    );
    let warm = DVector::from_iterator(active.len(), active.iter().map(|&j| state.beta[j]));
    let solved = solve_restricted(prob, active, &rhs, warm, cg)?;

    let mut beta = DVector::zeros(p);
    for (&j, &b) in active.iter().zip(solved.solution.iter()) {
        beta[j] = b;
    }
    // G_BA beta_A = X_B'(X_A beta_A): the ridge term only touches A.
    let fitted = prob.x_cols_mul(active, solved.solution.as_slice());
    let xt_fitted = prob.xt_mul(&fitted);
    let mut dual = (xty - xt_fitted) / n;
    for (&j, d) in active.iter().zip(d_active) {
        dual[j] = d;
    }
    Ok((PrimalDualState { beta, dual }, solved.cg_iterations))
}

/// One active-set update from `state` using the partition `part`.
pub fn sna_update(
    prob: &ProblemData,
    state: &PrimalDualState,
    part: &ActivePartition,
    lambda: f64,
    shift: f64,
    cg: &CgPolicy,
    sparsity_cap: usize,
) -> Result<PrimalDualState> {
    sna_update_counted(prob, state, part, lambda, shift, cg, sparsity_cap).map(|(s, _)| s)
}

/// True when one more update from `state` would not move it.
fn is_fixed_point(
    prob: &ProblemData,
    state: &PrimalDualState,
    part: &ActivePartition,
    signs: &[f64],
    lambda: f64,
    shift: f64,
) -> bool {
    let target = lambda - shift;
    let tol = FIXED_POINT_TOL * lambda.max(1.0);
    let duals_pinned = part
        .active
        .iter()
        .zip(signs)
        .all(|(&j, s)| (state.dual[j] - target * s).abs() <= tol);
    if !duals_pinned || part.inactive.iter().any(|&j| state.beta[j] != 0.0) {
        return false;
    }
    let fresh = refresh_dual(prob, &state.beta);
    let scale = fresh.amax().max(1.0);
    (&state.dual - fresh).amax() <= FIXED_POINT_TOL * 100.0 * scale
}

/// Iterates partition and update until the active set (with its signs)
/// repeats, `K` updates have been made, the sparsity cap trips, or the KKT
/// residual falls below `residual_tol`.
///
/// The support of `init` plays the role of `A_{-1}`: if it equals `A_0` and
/// `init` is already a fixed point, no update is made.
pub fn sna_solve(prob: &ProblemData, init: &PrimalDualState, config: &SnaConfig) -> Result<SnaOutcome> {
    config.validate()?;
    if init.beta.len() != prob.p() || init.dual.len() != prob.p() {
        return Err(SnapError::DimensionMismatch(format!(
            "initial state must have length p = {}",
            prob.p()
        )));
    }
    if init.beta.iter().chain(init.dual.iter()).any(|v| !v.is_finite()) {
        return Err(SnapError::NonFinite("initial state"));
    }
    let lambda = config.lambda;
    let shift = config.shift;

    let mut state = init.clone();
    let mut prev_active = init.support();
    let mut prev_signs: Option<Vec<f64>> = None;
    let mut iterations = 0;
    let mut cg_iterations = 0;

    loop {
        let part = partition(&state, lambda);
        let signs = active_signs(&state, &part.active);

        let repeated = part.active == prev_active
            && match &prev_signs {
                Some(prev) => *prev == signs,
                None => is_fixed_point(prob, &state, &part, &signs, lambda, shift),
            };
        let stop = if repeated {
            Some(StopReason::ActiveSetRepeated)
        } else if iterations >= config.max_iter {
            Some(StopReason::MaxIter)
        } else if config.residual_tol > 0.0
            && kkt_residual(prob, &state, lambda).norm_inf <= config.residual_tol
        {
            Some(StopReason::ResidualBelowTol)
        } else if part.active.len() > config.sparsity_cap {
            Some(StopReason::SparsityCapExceeded)
        } else {
            None
        };
        if let Some(stop_reason) = stop {
            return Ok(SnaOutcome {
                state,
                iterations,
                stop_reason,
                active: part,
                cg_iterations,
            });
        }

        let (next, cg) = sna_update_counted(prob, &state, &part, lambda, shift, &config.cg, config.sparsity_cap)
            .map_err(|e| SnapError::Sna {
                iteration: iterations,
                state: Box::new(state.clone()),
                source: Box::new(e),
            })?;
        state = next;
        iterations += 1;
        cg_iterations += cg;
        prev_active = part.active;
        prev_signs = Some(signs);
    }
}
