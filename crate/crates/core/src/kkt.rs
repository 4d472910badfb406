//! KKT machinery: the soft-threshold operator, the dual refresh
//! `d = (X'y - G beta)/n`, the residual `F(z)` whose roots are the solutions,
//! the active/inactive partition, and a dense Newton matrix used only to
//! verify the active-set update at small scale.
//!
//! `G = X'X + alpha I` is never formed on the production path; all products
//! with it go through two matrix-vector multiplications with `X`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SnapError};
use crate::problem::{ActivePartition, PrimalDualState, ProblemData};

/// Largest `2p` accepted by the dense Newton routines.
pub const DENSE_NEWTON_LIMIT: usize = 2000;

/// `sign(x) * max(|x| - lambda, 0)`.
#[inline]
pub fn soft_threshold(x: f64, lambda: f64) -> f64 {
    if x > lambda {
        x - lambda
    } else if x < -lambda {
        x + lambda
    } else {
        0.0
    }
}

pub fn soft_threshold_vec(x: &DVector<f64>, lambda: f64) -> DVector<f64> {
    x.map(|v| soft_threshold(v, lambda))
}

/// `sgn` with `sgn(0) = 0`.
#[inline]
pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `(X'y - (X'X + alpha I) beta) / n`, computed as `(X'(y - X beta) - alpha beta) / n`.
pub fn refresh_dual(prob: &ProblemData, beta: &DVector<f64>) -> DVector<f64> {
    let n = prob.n() as f64;
    let r = prob.residual(beta);
    let mut d = prob.xt_mul(&r);
    if prob.alpha() != 0.0 {
        d.axpy(-prob.alpha(), beta, 1.0);
    }
    d / n
}

/// `A = { j : |beta_j + d_j| > lambda }`. Ties go to the inactive set.
pub fn partition(state: &PrimalDualState, lambda: f64) -> ActivePartition {
    ActivePartition::from_mask(
        state
            .beta
            .iter()
            .zip(state.dual.iter())
            .map(|(b, d)| (b + d).abs() > lambda),
    )
}

/// Residual blocks of the KKT equations.
///
/// `f1 = beta - T_lambda(beta + d)`; `f2 = (G beta + n d - X'y) / n`. The
/// second block is divided by `n` so that both blocks live on the scale of
/// `lambda`.
#[derive(Debug, Clone)]
pub struct KktResidual {
    pub f1: DVector<f64>,
    pub f2: DVector<f64>,
    pub norm_inf: f64,
}

impl KktResidual {
    /// The second block without the `1/n` scaling.
    pub fn unscaled_f2(&self, n: usize) -> DVector<f64> {
        &self.f2 * n as f64
    }
}

pub fn kkt_residual(prob: &ProblemData, state: &PrimalDualState, lambda: f64) -> KktResidual {
    let f1 = &state.beta - soft_threshold_vec(&(&state.beta + &state.dual), lambda);
    let f2 = &state.dual - refresh_dual(prob, &state.beta);
    let norm_inf = f1.amax().max(f2.amax());
    KktResidual { f1, f2, norm_inf }
}

/// One coordinate of the reordered unknown `z = (d_A, beta_B, beta_A, d_B)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coord {
    Beta(usize),
    Dual(usize),
}

/// Dense element of the Newton derivative of `F` at a partition.
///
/// Rows follow `(F1_A, F1_B, F2_A, F2_B)` and columns follow `order`, i.e.
/// `(d_A, beta_B, beta_A, d_B)`:
///
/// ```text
/// [ -I_AA      0         0        0     ]
/// [   0       I_BB       0        0     ]
/// [ n I_AA   X_A'X_B    G_AA      0     ]
/// [   0       G_BB     X_B'X_A  n I_BB  ]
/// ```
#[derive(Debug, Clone)]
pub struct NewtonMatrix {
    pub matrix: DMatrix<f64>,
    pub order: Vec<Coord>,
    pub partition: ActivePartition,
}

impl NewtonMatrix {
    /// Gathers `z` into the reordered layout.
    pub fn gather(&self, state: &PrimalDualState) -> DVector<f64> {
        DVector::from_iterator(
            self.order.len(),
            self.order.iter().map(|c| match *c {
                Coord::Beta(j) => state.beta[j],
                Coord::Dual(j) => state.dual[j],
            }),
        )
    }

    /// Scatters a reordered vector back into `(beta, d)`.
    pub fn scatter(&self, z: &DVector<f64>) -> PrimalDualState {
        let p = self.order.len() / 2;
        let mut beta = DVector::zeros(p);
        let mut dual = DVector::zeros(p);
        for (c, v) in self.order.iter().zip(z.iter()) {
            match *c {
                Coord::Beta(j) => beta[j] = *v,
                Coord::Dual(j) => dual[j] = *v,
            }
        }
        PrimalDualState { beta, dual }
    }
}

fn guard_dense(p: usize) -> Result<()> {
    if 2 * p > DENSE_NEWTON_LIMIT {
        return Err(SnapError::MatrixTooLarge {
            dim: 2 * p,
            limit: DENSE_NEWTON_LIMIT,
        });
    }
    Ok(())
}

pub fn assemble_newton_matrix(prob: &ProblemData, part: &ActivePartition) -> Result<NewtonMatrix> {
    let p = prob.p();
    guard_dense(p)?;
    let n = prob.n() as f64;
    let a = &part.active;
    let b = &part.inactive;
    let (na, nb) = (a.len(), b.len());

    let mut order = Vec::with_capacity(2 * p);
    order.extend(a.iter().map(|&j| Coord::Dual(j)));
    order.extend(b.iter().map(|&j| Coord::Beta(j)));
    order.extend(a.iter().map(|&j| Coord::Beta(j)));
    order.extend(b.iter().map(|&j| Coord::Dual(j)));

    let x = prob.x();
    let gram = |i: usize, j: usize| -> f64 { x.column(i).dot(&x.column(j)) };
    let alpha = prob.alpha();

    // block offsets: rows/cols [0, na) [na, na+nb) [p, p+na) [p+na, 2p)
    let mut h = DMatrix::zeros(2 * p, 2 * p);
    for r in 0..na {
        h[(r, r)] = -1.0;
    }
    for r in 0..nb {
        h[(na + r, na + r)] = 1.0;
    }
    for (r, &i) in a.iter().enumerate() {
        let row = p + r;
        h[(row, r)] = n;
        for (c, &j) in b.iter().enumerate() {
            h[(row, na + c)] = gram(i, j);
        }
        for (c, &j) in a.iter().enumerate() {
            h[(row, p + c)] = gram(i, j) + if i == j { alpha } else { 0.0 };
        }
    }
    for (r, &i) in b.iter().enumerate() {
        let row = p + na + r;
        for (c, &j) in b.iter().enumerate() {
            h[(row, na + c)] = gram(i, j) + if i == j { alpha } else { 0.0 };
        }
        for (c, &j) in a.iter().enumerate() {
            h[(row, p + c)] = gram(i, j);
        }
        h[(row, p + na + r)] = n;
    }

    Ok(NewtonMatrix {
        matrix: h,
        order,
        partition: part.clone(),
    })
}

/// `F(z)` in the reordered layout of `h`, with the unscaled second block.
fn reordered_residual(
    prob: &ProblemData,
    state: &PrimalDualState,
    h: &NewtonMatrix,
    lambda: f64,
) -> DVector<f64> {
    let res = kkt_residual(prob, state, lambda);
    let f2 = res.unscaled_f2(prob.n());
    let part = &h.partition;
    DVector::from_iterator(
        2 * prob.p(),
        part.active
            .iter()
            .map(|&j| res.f1[j])
            .chain(part.inactive.iter().map(|&j| res.f1[j]))
            .chain(part.active.iter().map(|&j| f2[j]))
            .chain(part.inactive.iter().map(|&j| f2[j])),
    )
}

/// One semismooth Newton step `z + D` with `H D = -F(z)`, solved densely.
pub fn newton_step_dense(
    prob: &ProblemData,
    state: &PrimalDualState,
    part: &ActivePartition,
    lambda: f64,
) -> Result<PrimalDualState> {
    let h = assemble_newton_matrix(prob, part)?;
    let rhs = -reordered_residual(prob, state, &h, lambda);
    let step = h
        .matrix
        .clone()
        .lu()
        .solve(&rhs)
        .filter(|d| d.iter().all(|v| v.is_finite()))
        .ok_or(SnapError::SingularSystem)?;
    let z = h.gather(state) + step;
    Ok(h.scatter(&z))
}
