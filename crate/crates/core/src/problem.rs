//! Problem instances, primal/dual states and the other shared data types.
//!
//! A [`ProblemData`] holds the design `X` (n × p, column-major), the response
//! `y`, the ridge weight `alpha` and the cached correlation vector `X'y`. It is
//! immutable once built, so one instance can back any number of concurrent
//! solves.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SnapError};

/// Tolerance on `| ||X_j||_2 - sqrt(n) |` for a normalized design.
pub const NORMALIZATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct ProblemData {
    x: DMatrix<f64>,
    y: DVector<f64>,
    alpha: f64,
    xty: DVector<f64>,
    normalized: bool,
}

impl ProblemData {
    /// Builds an instance from data that is used as-is (no centering).
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, alpha: f64) -> Result<Self> {
        let (n, p) = x.shape();
        if n == 0 || p == 0 {
            return Err(SnapError::DimensionMismatch(format!(
                "design must be non-empty, got {n}x{p}"
            )));
        }
        if y.len() != n {
            return Err(SnapError::DimensionMismatch(format!(
                "X has {n} rows but y has {} entries",
                y.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SnapError::NonFinite("X"));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(SnapError::NonFinite("y"));
        }
        check_alpha(alpha)?;
        let xty = x.tr_mul(&y);
        Ok(Self {
            x,
            y,
            alpha,
            xty,
            normalized: false,
        })
    }

    /// Centers `y` and every column of `X`, then rescales each column to
    /// Euclidean norm `sqrt(n)`. The result has `alpha = 0`.
    pub fn normalize(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        let (n, _) = x.shape();
        if y.len() != n {
            return Err(SnapError::DimensionMismatch(format!(
                "X has {n} rows but y has {} entries",
                y.len()
            )));
        }
        if n < 2 {
            return Err(SnapError::DimensionMismatch(
                "normalization needs at least two rows".into(),
            ));
        }
        let x = normalize_design(x)?;
        let mean = y.mean();
        let y = y.map(|v| v - mean);
        let mut prob = Self::new(x, y, 0.0)?;
        prob.normalized = true;
        Ok(prob)
    }

    /// Wraps an already normalized design with a response, centering `y`.
    pub(crate) fn from_normalized_design(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        let mean = y.mean();
        let y = y.map(|v| v - mean);
        let mut prob = Self::new(x, y, 0.0)?;
        prob.normalized = prob.columns_normalized();
        Ok(prob)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        self.alpha = alpha;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Cached `X'y`.
    pub fn xty(&self) -> &DVector<f64> {
        &self.xty
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// `X'v`.
    pub fn xt_mul(&self, v: &DVector<f64>) -> DVector<f64> {
        self.x.tr_mul(v)
    }

    /// `X_J v` for the columns listed in `cols`.
    pub fn x_cols_mul(&self, cols: &[usize], v: &[f64]) -> DVector<f64> {
        debug_assert_eq!(cols.len(), v.len());
        let mut out = DVector::zeros(self.n());
        for (&j, &c) in cols.iter().zip(v) {
            if c != 0.0 {
                out.axpy(c, &self.x.column(j), 1.0);
            }
        }
        out
    }

    /// `y - X beta`.
    pub fn residual(&self, beta: &DVector<f64>) -> DVector<f64> {
        let (cols, vals): (Vec<usize>, Vec<f64>) = beta
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(j, v)| (j, *v))
            .unzip();
        &self.y - self.x_cols_mul(&cols, &vals)
    }

    /// `(1/2n)||X beta - y||^2 + lambda ||beta||_1 + (alpha/2n)||beta||^2`.
    pub fn objective(&self, beta: &DVector<f64>, lambda: f64) -> f64 {
        let n = self.n() as f64;
        let r = self.residual(beta);
        r.norm_squared() / (2.0 * n) + lambda * beta.lp_norm(1) + self.alpha / (2.0 * n) * beta.norm_squared()
    }

    fn columns_normalized(&self) -> bool {
        let target = (self.n() as f64).sqrt();
        self.x
            .column_iter()
            .all(|c| (c.norm() - target).abs() <= NORMALIZATION_TOL)
    }

    /// Re-verifies the stored invariants: finite data, cached `X'y`, and the
    /// column norms when the normalized flag is set.
    pub fn check_invariants(&self) -> bool {
        let fresh = self.x.tr_mul(&self.y);
        let scale = fresh.amax().max(1.0);
        let xty_ok = (&fresh - &self.xty).amax() <= 1e-12 * scale;
        let norm_ok = !self.normalized || self.columns_normalized();
        xty_ok && norm_ok && self.alpha >= 0.0
    }
}

/// Free-function form of [`ProblemData::objective`].
pub fn objective(prob: &ProblemData, beta: &DVector<f64>, lambda: f64) -> f64 {
    prob.objective(beta, lambda)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(SnapError::InvalidConfig(format!("alpha must be >= 0, got {alpha}")));
    }
    Ok(())
}

/// Centers each column and rescales it to norm `sqrt(n)`.
pub fn normalize_design(mut x: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(SnapError::NonFinite("X"));
    }
    let target = (n as f64).sqrt();
    for (j, mut col) in x.column_iter_mut().enumerate() {
        let raw_norm = col.norm();
        let mean = col.mean();
        col.add_scalar_mut(-mean);
        let norm = col.norm();
        if norm == 0.0 || norm <= 1e-10 * raw_norm {
            return Err(SnapError::ZeroVarianceColumn(j));
        }
        col *= target / norm;
    }
    Ok(x)
}

/// The pair `z = (beta, d)` iterated by the semismooth Newton solver.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDualState {
    pub beta: DVector<f64>,
    pub dual: DVector<f64>,
}

impl PrimalDualState {
    pub fn new(beta: DVector<f64>, dual: DVector<f64>) -> Self {
        Self { beta, dual }
    }

    /// `beta = 0`, `d = X'y / n`: the exact solution at `lambda >= ||X'y/n||_inf`.
    pub fn cold(prob: &ProblemData) -> Self {
        Self {
            beta: DVector::zeros(prob.p()),
            dual: prob.xty() / prob.n() as f64,
        }
    }

    pub fn support(&self) -> Vec<usize> {
        support_of(&self.beta)
    }
}

/// Sorted active/inactive index sets.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ActivePartition {
    pub active: Vec<usize>,
    pub inactive: Vec<usize>,
}

impl ActivePartition {
    /// Builds a partition of `0..p` from a membership mask.
    pub fn from_mask(mask: impl IntoIterator<Item = bool>) -> Self {
        let mut part = Self::default();
        for (j, on) in mask.into_iter().enumerate() {
            if on {
                part.active.push(j);
            } else {
                part.inactive.push(j);
            }
        }
        part
    }

    pub fn len(&self) -> usize {
        self.active.len() + self.inactive.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn active_size(&self) -> usize {
        self.active.len()
    }
}

/// Indices of the exact nonzeros of `v`, ascending.
pub fn support_of(v: &DVector<f64>) -> Vec<usize> {
    v.iter()
        .enumerate()
        .filter(|(_, x)| **x != 0.0)
        .map(|(j, _)| j)
        .collect()
}

/// Sparse coefficient vector in (index, value) form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVec {
    pub len: usize,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseVec {
    /// Keeps entries with `|v_j| > threshold` (`threshold = 0` keeps exact nonzeros).
    pub fn from_dense(v: &DVector<f64>, threshold: f64) -> Self {
        let (indices, values) = v
            .iter()
            .enumerate()
            .filter(|(_, x)| x.abs() > threshold)
            .map(|(j, x)| (j, *x))
            .unzip();
        Self {
            len: v.len(),
            indices,
            values,
        }
    }

    pub fn to_dense(&self) -> DVector<f64> {
        let mut out = DVector::zeros(self.len);
        for (&j, &v) in self.indices.iter().zip(&self.values) {
            out[j] = v;
        }
        out
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }
}

/// Ground truth for simulated instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthModel {
    pub beta_true: Vec<f64>,
    pub support: Vec<usize>,
    pub sigma: f64,
}

impl TruthModel {
    pub fn new(beta_true: Vec<f64>, sigma: f64) -> Self {
        let support = beta_true
            .iter()
            .enumerate()
            .filter(|(_, b)| **b != 0.0)
            .map(|(j, _)| j)
            .collect();
        Self {
            beta_true,
            support,
            sigma,
        }
    }

    /// Sparsity `T = |A†|`.
    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    /// `max |beta_A| / min |beta_A|`, or `None` for an empty support.
    pub fn range(&self) -> Option<f64> {
        let mags = self.support.iter().map(|&j| self.beta_true[j].abs());
        let (lo, hi) = mags.fold((f64::INFINITY, 0.0f64), |(lo, hi), m| (lo.min(m), hi.max(m)));
        (!self.support.is_empty()).then(|| hi / lo)
    }

    /// `|beta†|_min`, or `None` for an empty support.
    pub fn beta_min(&self) -> Option<f64> {
        self.support
            .iter()
            .map(|&j| self.beta_true[j].abs())
            .reduce(f64::min)
    }

    pub fn beta_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.beta_true)
    }
}
