//! Synthetic instances and design-condition checks.
//!
//! # Random streams
//!
//! Every generator draws from `ChaCha20Rng::seed_from_u64(seed)` with a
//! dedicated stream id (`set_stream`): [`STREAM_DESIGN`] for `X`,
//! [`STREAM_BETA`] for the true coefficients, [`STREAM_NOISE`] for the noise.
//! Normal variates come from the Ziggurat sampler of `rand_distr`
//! (`StandardNormal`). Outputs are a pure function of `(config, seed)`.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SnapError};
use crate::path::{default_lambda0, sign_consistent_knots, universal_threshold, SIGN_CONSISTENT_GAMMA};
use crate::problem::{normalize_design, ProblemData, TruthModel};

pub const STREAM_DESIGN: u64 = 0;
pub const STREAM_BETA: u64 = 1;
pub const STREAM_NOISE: u64 = 2;

/// Largest `p` accepted by [`mutual_coherence`] without forcing.
pub const COHERENCE_MAX_P: usize = 5000;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Design {
    /// Rows i.i.d. `N(0, Sigma)` with `Sigma_jk = rho^|j-k|`.
    Classical { rho: f64 },
    /// `X_j = Z_j + nu (Z_{j-1} + Z_{j+1})` for interior columns of an i.i.d. `Z`.
    AutoCorr { nu: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub p: usize,
    pub design: Design,
    pub sigma: f64,
    /// Number of nonzero true coefficients.
    pub sparsity: usize,
    pub seed: u64,
    #[serde(default = "default_true")]
    pub normalize_after: bool,
}

fn default_true() -> bool {
    true
}

impl SimConfig {
    pub fn classical(n: usize, p: usize, rho: f64, sigma: f64, sparsity: usize) -> Self {
        Self {
            n,
            p,
            design: Design::Classical { rho },
            sigma,
            sparsity,
            seed: 0,
            normalize_after: true,
        }
    }

    pub fn autocorr(n: usize, p: usize, nu: f64, sigma: f64, sparsity: usize) -> Self {
        Self {
            design: Design::AutoCorr { nu },
            ..Self::classical(n, p, 0.5, sigma, sparsity)
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.p < 1 {
            return Err(SnapError::InvalidConfig(format!(
                "need n >= 2 and p >= 1, got n = {}, p = {}",
                self.n, self.p
            )));
        }
        if self.sparsity > self.p {
            return Err(SnapError::InvalidConfig(format!(
                "sparsity {} exceeds p = {}",
                self.sparsity, self.p
            )));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(SnapError::InvalidConfig(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        match self.design {
            Design::Classical { rho } if !(rho > 0.0 && rho < 1.0) => Err(SnapError::InvalidConfig(
                format!("rho must lie in (0, 1), got {rho}"),
            )),
            Design::AutoCorr { nu } if !(nu >= 0.0 && nu.is_finite()) => {
                Err(SnapError::InvalidConfig(format!("nu must be >= 0, got {nu}")))
            }
            _ => Ok(()),
        }
    }

    /// Short label such as `n=600,p=3000,rho=0.3,sigma=0.2,T=40`.
    pub fn label(&self) -> String {
        let design = match self.design {
            Design::Classical { rho } => format!("rho={rho}"),
            Design::AutoCorr { nu } => format!("nu={nu}"),
        };
        format!(
            "n={},p={},{},sigma={},T={}",
            self.n, self.p, design, self.sigma, self.sparsity
        )
    }
}

/// Raw classical design via the AR(1) recursion
/// `x_1 ~ N(0,1)`, `x_j = rho x_{j-1} + sqrt(1 - rho^2) e_j`.
pub fn classical_design_raw(n: usize, p: usize, rho: f64, seed: u64) -> DMatrix<f64> {
    let mut rng = stream_rng(seed, STREAM_DESIGN);
    let scale = (1.0 - rho * rho).sqrt();
    let mut x = DMatrix::zeros(n, p);
    for i in 0..n {
        let mut prev: f64 = rng.sample(StandardNormal);
        x[(i, 0)] = prev;
        for j in 1..p {
            let e: f64 = rng.sample(StandardNormal);
            prev = rho * prev + scale * e;
            x[(i, j)] = prev;
        }
    }
    x
}

/// Raw auto-correlated design; boundary columns are left untouched.
pub fn autocorr_design_raw(n: usize, p: usize, nu: f64, seed: u64) -> DMatrix<f64> {
    let mut rng = stream_rng(seed, STREAM_DESIGN);
    let z = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut x = z.clone();
    for j in 1..p.saturating_sub(1) {
        let neighbours = z.column(j - 1) + z.column(j + 1);
        x.column_mut(j).axpy(nu, &neighbours, 1.0);
    }
    x
}

fn finish_design(x: DMatrix<f64>, config: &SimConfig) -> Result<DMatrix<f64>> {
    if config.normalize_after {
        normalize_design(x)
    } else {
        Ok(x)
    }
}

pub fn gen_classical(config: &SimConfig) -> Result<DMatrix<f64>> {
    config.validate()?;
    let Design::Classical { rho } = config.design else {
        return Err(SnapError::InvalidConfig("expected a classical design".into()));
    };
    finish_design(classical_design_raw(config.n, config.p, rho, config.seed), config)
}

pub fn gen_autocorr(config: &SimConfig) -> Result<DMatrix<f64>> {
    config.validate()?;
    let Design::AutoCorr { nu } = config.design else {
        return Err(SnapError::InvalidConfig("expected an auto-correlated design".into()));
    };
    finish_design(autocorr_design_raw(config.n, config.p, nu, config.seed), config)
}

pub fn gen_design(config: &SimConfig) -> Result<DMatrix<f64>> {
    match config.design {
        Design::Classical { .. } => gen_classical(config),
        Design::AutoCorr { .. } => gen_autocorr(config),
    }
}

/// Random `T`-subset support with entries `±10^u`, `u ~ U[0, 1]`.
pub fn gen_beta(p: usize, sparsity: usize, seed: u64) -> Result<Vec<f64>> {
    if sparsity > p {
        return Err(SnapError::InvalidConfig(format!("sparsity {sparsity} exceeds p = {p}")));
    }
    let mut rng = stream_rng(seed, STREAM_BETA);
    let mut support = sample(&mut rng, p, sparsity).into_vec();
    support.sort_unstable();
    let mut beta = vec![0.0; p];
    for j in support {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let exponent: f64 = rng.random();
        beta[j] = sign * 10f64.powf(exponent);
    }
    Ok(beta)
}

/// `y = X beta + eta`, `eta_i ~ N(0, sigma^2)`.
pub fn gen_response(x: &DMatrix<f64>, beta_true: &[f64], sigma: f64, seed: u64) -> Result<DVector<f64>> {
    if beta_true.len() != x.ncols() {
        return Err(SnapError::DimensionMismatch(format!(
            "beta has {} entries, X has {} columns",
            beta_true.len(),
            x.ncols()
        )));
    }
    let mut rng = stream_rng(seed, STREAM_NOISE);
    let signal = x * DVector::from_column_slice(beta_true);
    Ok(signal.map(|s| s + sigma * rng.sample::<f64, _>(StandardNormal)))
}

/// A generated problem together with its ground truth.
#[derive(Debug, Clone)]
pub struct SimInstance {
    pub config: SimConfig,
    pub problem: ProblemData,
    pub truth: TruthModel,
}

/// Design, coefficients and response for one seed. The design is normalized
/// before the response is formed, so `truth` refers to the columns the
/// solver sees; `y` is centered afterwards.
pub fn simulate(config: &SimConfig) -> Result<SimInstance> {
    config.validate()?;
    let x = gen_design(config)?;
    let beta = gen_beta(config.p, config.sparsity, config.seed)?;
    let y = gen_response(&x, &beta, config.sigma, config.seed)?;
    let problem = if config.normalize_after {
        ProblemData::from_normalized_design(x, y)?
    } else {
        ProblemData::new(x, y, 0.0)?
    };
    Ok(SimInstance {
        config: config.clone(),
        problem,
        truth: TruthModel::new(beta, config.sigma),
    })
}

/// `max_{i != j} |X_i'X_j| / n`, refusing `p > COHERENCE_MAX_P`.
pub fn mutual_coherence(prob: &ProblemData) -> Result<f64> {
    if prob.p() > COHERENCE_MAX_P {
        return Err(SnapError::MatrixTooLarge {
            dim: prob.p(),
            limit: COHERENCE_MAX_P,
        });
    }
    Ok(mutual_coherence_forced(prob))
}

/// [`mutual_coherence`] without the size guard. Works in column blocks so
/// memory stays at `O(block * p)`.
pub fn mutual_coherence_forced(prob: &ProblemData) -> f64 {
    const BLOCK: usize = 256;
    let x = prob.x();
    let p = prob.p();
    let n = prob.n() as f64;
    let mut best = 0.0f64;
    let mut start = 0;
    while start < p {
        let width = BLOCK.min(p - start);
        let block = x.columns(start, width);
        // only columns at or after the block start are needed
        let rest = x.columns(start, p - start);
        let gram = block.tr_mul(&rest);
        for bi in 0..width {
            for rj in (bi + 1)..(p - start) {
                best = best.max(gram[(bi, rj)].abs());
            }
        }
        start += width;
    }
    best / n
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub n: usize,
    pub p: usize,
    pub sparsity: usize,
    pub coherence: f64,
    /// `T * nu`.
    pub t_nu: f64,
    /// `T nu <= 1/4`.
    pub a1_holds: bool,
    pub lambda_u: f64,
    pub delta_u: f64,
    pub beta_min: Option<f64>,
    /// `|beta†|_min >= 78 lambda_u`.
    pub a2_holds: bool,
    pub lambda0: Option<f64>,
    /// Knot count of the sign-consistency schedule, when it exists.
    pub n_sign_consistent: Option<usize>,
}

impl TheoryReport {
    pub fn qualifies(&self) -> bool {
        self.a1_holds && self.a2_holds && self.n_sign_consistent.is_some()
    }
}

pub fn theory_check(prob: &ProblemData, truth: &TruthModel) -> Result<TheoryReport> {
    if truth.beta_true.len() != prob.p() {
        return Err(SnapError::DimensionMismatch(format!(
            "truth has {} coefficients, problem has p = {}",
            truth.beta_true.len(),
            prob.p()
        )));
    }
    let coherence = mutual_coherence_forced(prob);
    Ok(theory_report(prob, truth, coherence))
}

/// Report for a precomputed coherence value.
pub fn theory_report(prob: &ProblemData, truth: &TruthModel, coherence: f64) -> TheoryReport {
    let t = truth.sparsity();
    let t_nu = t as f64 * coherence;
    let lambda_u = universal_threshold(truth.sigma, prob.n(), prob.p());
    let delta_u = 3.0 * lambda_u;
    let beta_min = truth.beta_min();
    let a2_holds = beta_min.is_some_and(|b| b >= 78.0 * lambda_u);
    let lambda0 = default_lambda0(prob).ok();
    let n_sign_consistent = lambda0.and_then(|l0| sign_consistent_knots(l0, SIGN_CONSISTENT_GAMMA, delta_u).ok());
    TheoryReport {
        n: prob.n(),
        p: prob.p(),
        sparsity: t,
        coherence,
        t_nu,
        a1_holds: t_nu <= 0.25,
        lambda_u,
        delta_u,
        beta_min,
        a2_holds,
        lambda0,
        n_sign_consistent,
    }
}
