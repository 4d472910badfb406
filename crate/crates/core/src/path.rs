//! Pathwise continuation: SNA run over a geometric grid
//! `lambda_t = lambda_0 * gamma^t`, `t = 0..=N`, each knot warm-started from
//! the previous one.

use std::time::{Duration, Instant};

use nalgebra::DVector;

use crate::error::{Result, SnapError};
use crate::linsolve::CgPolicy;
use crate::problem::{PrimalDualState, ProblemData, SparseVec};
use crate::sna::{sna_solve, SnaConfig, SnaOutcome, StopReason};

/// Grid ratio fixed by the sign-consistency schedule.
pub const SIGN_CONSISTENT_GAMMA: f64 = 8.0 / 13.0;

/// Default inner-iteration cap for the sign-consistency schedule when `T` is unknown.
pub const SIGN_CONSISTENT_DEFAULT_K: usize = 10;

/// Per-knot shift `lambda_bar_t`.
#[derive(Debug, Clone, PartialEq)]
pub enum ShiftSchedule {
    Zero,
    /// `lambda_bar_t = 0.9 lambda_t + delta_u`.
    SignConsistent { delta_u: f64 },
    /// `lambda_bar_t = frac * lambda_t`.
    Proportional(f64),
    /// One value per knot.
    Custom(Vec<f64>),
}

impl ShiftSchedule {
    pub fn shift_at(&self, knot: usize, lambda: f64) -> f64 {
        match self {
            ShiftSchedule::Zero => 0.0,
            ShiftSchedule::SignConsistent { delta_u } => 0.9 * lambda + delta_u,
            ShiftSchedule::Proportional(frac) => frac * lambda,
            ShiftSchedule::Custom(v) => v[knot],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathConfig {
    /// `None` uses `||X'y/n||_inf`.
    pub lambda0: Option<f64>,
    pub gamma: f64,
    /// Last knot index `N`; the grid has `N + 1` points.
    pub num_knots: usize,
    /// Inner iteration safeguard `K`.
    pub max_inner: usize,
    pub shift: ShiftSchedule,
    /// `None` uses `ceil(0.5 n)`.
    pub sparsity_cap: Option<usize>,
    pub cg: CgPolicy,
    pub residual_tol: f64,
    /// Keep the dense dual vector of every knot.
    pub retain_duals: bool,
}

impl Default for PathConfig {
    /// 100 knots down to `1e-3 lambda_0`, one inner iteration per knot.
    fn default() -> Self {
        Self::with_ratio(100, 1e-3)
    }
}

impl PathConfig {
    pub fn new(gamma: f64, num_knots: usize) -> Self {
        Self {
            lambda0: None,
            gamma,
            num_knots,
            max_inner: 1,
            shift: ShiftSchedule::Zero,
            sparsity_cap: None,
            cg: CgPolicy::default(),
            residual_tol: 0.0,
            retain_duals: false,
        }
    }

    /// Chooses `gamma` so that `lambda_N / lambda_0 = ratio`.
    pub fn with_ratio(num_knots: usize, ratio: f64) -> Self {
        let gamma = ratio.powf(1.0 / num_knots.max(1) as f64);
        Self::new(gamma, num_knots)
    }

    pub fn max_inner(mut self, k: usize) -> Self {
        self.max_inner = k;
        self
    }

    pub fn lambda0(mut self, lambda0: f64) -> Self {
        self.lambda0 = Some(lambda0);
        self
    }

    pub fn shift(mut self, shift: ShiftSchedule) -> Self {
        self.shift = shift;
        self
    }

    pub fn sparsity_cap(mut self, cap: usize) -> Self {
        self.sparsity_cap = Some(cap);
        self
    }

    pub fn cg(mut self, cg: CgPolicy) -> Self {
        self.cg = cg;
        self
    }

    pub fn retain_duals(mut self, keep: bool) -> Self {
        self.retain_duals = keep;
        self
    }

    pub fn residual_tol(mut self, tol: f64) -> Self {
        self.residual_tol = tol;
        self
    }

    pub fn effective_cap(&self, n: usize) -> usize {
        self.sparsity_cap.unwrap_or_else(|| n.div_ceil(2)).max(1)
    }

    pub fn resolve_lambda0(&self, prob: &ProblemData) -> Result<f64> {
        match self.lambda0 {
            Some(l) => Ok(l),
            None => default_lambda0(prob),
        }
    }

    /// Checks the configuration against a resolved `lambda_0`.
    pub fn validate(&self, lambda0: f64) -> Result<()> {
        if !(lambda0.is_finite() && lambda0 > 0.0) {
            return Err(SnapError::InvalidConfig(format!("lambda0 must be > 0, got {lambda0}")));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(SnapError::InvalidConfig(format!(
                "gamma must lie in (0, 1), got {}",
                self.gamma
            )));
        }
        if self.max_inner == 0 {
            return Err(SnapError::InvalidConfig("max_inner must be >= 1".into()));
        }
        if let ShiftSchedule::Custom(v) = &self.shift {
            if v.len() != self.num_knots + 1 {
                return Err(SnapError::InvalidConfig(format!(
                    "custom shift schedule needs {} entries, got {}",
                    self.num_knots + 1,
                    v.len()
                )));
            }
        }
        for (t, lambda) in lambda_grid(lambda0, self.gamma, self.num_knots).into_iter().enumerate() {
            let shift = self.shift.shift_at(t, lambda);
            if !(shift >= 0.0 && shift < lambda) {
                return Err(SnapError::InvalidConfig(format!(
                    "shift {shift} at knot {t} is outside [0, lambda_t = {lambda})"
                )));
            }
        }
        Ok(())
    }
}

/// `lambda_0, lambda_0 gamma, ..., lambda_0 gamma^N`.
pub fn lambda_grid(lambda0: f64, gamma: f64, num_knots: usize) -> Vec<f64> {
    std::iter::successors(Some(lambda0), |l| Some(l * gamma))
        .take(num_knots + 1)
        .collect()
}

/// `||X'y / n||_inf`, the smallest `lambda` with a zero solution.
pub fn default_lambda0(prob: &ProblemData) -> Result<f64> {
    let l = prob.xty().amax() / prob.n() as f64;
    if l == 0.0 {
        return Err(SnapError::DegenerateResponse);
    }
    Ok(l)
}

/// The knot count `N` with `lambda_N > 10 delta_u >= lambda_{N+1}`.
pub fn sign_consistent_knots(lambda0: f64, gamma: f64, delta_u: f64) -> Result<usize> {
    if !(delta_u > 0.0 && delta_u.is_finite()) {
        return Err(SnapError::InvalidConfig(format!("delta_u must be > 0, got {delta_u}")));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(SnapError::InvalidConfig(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    let threshold = 10.0 * delta_u;
    let lambda1 = lambda0 * gamma;
    if threshold >= lambda1 {
        return Err(SnapError::NoiseTooLarge { threshold, lambda1 });
    }
    let mut n = 1;
    let mut next = lambda1 * gamma;
    while next > threshold {
        n += 1;
        next *= gamma;
    }
    Ok(n)
}

/// Grid and shift schedule for finite-step sign consistency:
/// `lambda_u = sigma sqrt(2 log p / n)`, `delta_u = 3 lambda_u`, `gamma = 8/13`,
/// `lambda_bar_t = 0.9 lambda_t + delta_u`, and `K >= T` (defaults to 10).
pub fn sign_consistent_schedule(prob: &ProblemData, sigma: f64, max_inner: Option<usize>) -> Result<PathConfig> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(SnapError::InvalidConfig(format!("sigma must be > 0, got {sigma}")));
    }
    let lambda0 = default_lambda0(prob)?;
    let delta_u = 3.0 * universal_threshold(sigma, prob.n(), prob.p());
    let num_knots = sign_consistent_knots(lambda0, SIGN_CONSISTENT_GAMMA, delta_u)?;
    let cfg = PathConfig::new(SIGN_CONSISTENT_GAMMA, num_knots)
        .lambda0(lambda0)
        .max_inner(max_inner.unwrap_or(SIGN_CONSISTENT_DEFAULT_K))
        .shift(ShiftSchedule::SignConsistent { delta_u });
    cfg.validate(lambda0)?;
    Ok(cfg)
}

/// `sigma sqrt(2 log p / n)`.
pub fn universal_threshold(sigma: f64, n: usize, p: usize) -> f64 {
    sigma * (2.0 * (p as f64).ln() / n as f64).sqrt()
}

#[derive(Debug, Clone)]
pub struct KnotRecord {
    pub knot: usize,
    pub lambda: f64,
    pub shift: f64,
    pub beta: SparseVec,
    pub dual: Option<DVector<f64>>,
    pub inner_iterations: usize,
    /// `|supp(beta)|`.
    pub active_size: usize,
    pub stop_reason: StopReason,
}

#[derive(Debug, Clone)]
pub struct PathResult {
    pub records: Vec<KnotRecord>,
    pub lambda0: f64,
    pub wall_time: Duration,
    /// Knot whose active set exceeded the sparsity cap; it is not among `records`.
    pub terminated_at: Option<usize>,
}

impl PathResult {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.lambda).collect()
    }

    pub fn last(&self) -> Option<&KnotRecord> {
        self.records.last()
    }
}

/// Runs SNA at every knot of the grid with warm starts.
pub fn snap_run(prob: &ProblemData, config: &PathConfig) -> Result<PathResult> {
    let start = Instant::now();
    let lambda0 = config.resolve_lambda0(prob)?;
    config.validate(lambda0)?;
    let cap = config.effective_cap(prob.n());

    let mut state = PrimalDualState::cold(prob);
    let mut records = Vec::with_capacity(config.num_knots + 1);
    let mut terminated_at = None;

    for (t, lambda) in lambda_grid(lambda0, config.gamma, config.num_knots).into_iter().enumerate() {
        let sna = SnaConfig {
            lambda,
            shift: config.shift.shift_at(t, lambda),
            max_iter: config.max_inner,
            cg: config.cg,
            sparsity_cap: cap,
            residual_tol: config.residual_tol,
        };
        let out = sna_solve(prob, &state, &sna).map_err(|e| SnapError::Knot {
            knot: t,
            source: Box::new(e),
        })?;
        if out.stop_reason == StopReason::SparsityCapExceeded {
            terminated_at = Some(t);
            break;
        }
        records.push(record(t, &sna, &out, config.retain_duals));
        state = out.state;
    }

    Ok(PathResult {
        records,
        lambda0,
        wall_time: start.elapsed(),
        terminated_at,
    })
}

fn record(knot: usize, sna: &SnaConfig, out: &SnaOutcome, keep_dual: bool) -> KnotRecord {
    let beta = SparseVec::from_dense(&out.state.beta, 0.0);
    KnotRecord {
        knot,
        lambda: sna.lambda,
        shift: sna.shift,
        active_size: beta.nnz(),
        beta,
        dual: keep_dual.then(|| out.state.dual.clone()),
        inner_iterations: out.iterations,
        stop_reason: out.stop_reason,
    }
}

/// Options for [`solve_lambda`].
#[derive(Debug, Clone)]
pub struct SingleSolveOptions {
    /// Number of continuation knots from `lambda_max` down to the target.
    pub knots: usize,
    pub max_inner: usize,
    pub sparsity_cap: Option<usize>,
    pub cg: CgPolicy,
}

impl Default for SingleSolveOptions {
    fn default() -> Self {
        Self {
            knots: 20,
            max_inner: 20,
            sparsity_cap: None,
            cg: CgPolicy::default(),
        }
    }
}

/// Solves at a single `lambda` by continuation from `lambda_max`.
///
/// Returns the outcome at the target; if the path stops early on the
/// sparsity cap, the error reports the knot.
pub fn solve_lambda(prob: &ProblemData, lambda: f64, opts: &SingleSolveOptions) -> Result<SnaOutcome> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(SnapError::InvalidConfig(format!("lambda must be > 0, got {lambda}")));
    }
    let lambda_max = default_lambda0(prob)?;
    let cap = opts.sparsity_cap.unwrap_or_else(|| prob.n().div_ceil(2)).max(1);
    let mut state = PrimalDualState::cold(prob);
    let grid: Vec<f64> = if lambda >= lambda_max {
        vec![lambda]
    } else {
        let knots = opts.knots.max(1);
        let gamma = (lambda / lambda_max).powf(1.0 / knots as f64);
        let mut g = lambda_grid(lambda_max, gamma, knots);
        *g.last_mut().unwrap() = lambda;
        g
    };
    let last = grid.len() - 1;
    for (t, l) in grid.into_iter().enumerate() {
        let cfg = SnaConfig::new(l)
            .with_max_iter(opts.max_inner)
            .with_sparsity_cap(cap)
            .with_cg(opts.cg);
        let out = sna_solve(prob, &state, &cfg).map_err(|e| SnapError::Knot {
            knot: t,
            source: Box::new(e),
        })?;
        if out.stop_reason == StopReason::SparsityCapExceeded {
            return Err(SnapError::Knot {
                knot: t,
                source: Box::new(SnapError::ActiveSetTooLarge {
                    size: out.active.active_size(),
                    cap,
                }),
            });
        }
        if t == last {
            return Ok(out);
        }
        state = out.state;
    }
    unreachable!("grid is non-empty")
}
