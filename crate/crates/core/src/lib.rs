//! Semismooth Newton solver for the LASSO and elastic net.
//!
//! The solver works on the primal-dual optimality system
//! `beta = T_lambda(beta + d)`, `d = (X'y - (X'X + alpha I) beta) / n`
//! where `T_lambda` is soft thresholding. Each Newton step fixes the active
//! set `{j : |beta_j + d_j| > lambda}` and solves a linear system restricted to
//! it, so one iteration costs about as much as a coordinate-descent sweep.
//! [`snap_run`] drives the solver along a decreasing `lambda` grid with warm
//! starts, which keeps the active sets small and the iteration counts low.
//!
//! ```
//! use nalgebra::{DMatrix, DVector};
//! use snapreg::{select, snap_run, Criterion, PathConfig, ProblemData};
//!
//! let x = DMatrix::from_fn(30, 8, |i, j| ((i * 7 + j * 13) % 11) as f64 - 5.0 + 0.1 * j as f64);
//! let y = 2.0 * x.column(1) - x.column(4) + DVector::from_fn(30, |i, _| 0.01 * (i as f64).sin());
//! let prob = ProblemData::normalize(x, y)?;
//! let path = snap_run(&prob, &PathConfig::with_ratio(50, 1e-3))?;
//! let best = select(&prob, &path, Criterion::Mbic)?;
//! assert!(best.chosen_lambda <= path.lambda0);
//! # Ok::<(), snapreg::SnapError>(())
//! ```

pub mod bench;
pub mod cd;
pub mod cli;
pub mod datagen;
pub mod error;
pub mod io;
pub mod kkt;
pub mod linsolve;
pub mod path;
pub mod problem;
pub mod select;
pub mod sna;

pub use bench::{metrics, run_benchmark, BenchOptions, Metrics, MetricsRecord, Preset, Solver};
pub use cd::{cd_path, cd_solve, CdOutcome, CdSettings};
pub use datagen::{mutual_coherence, simulate, theory_check, Design, SimConfig, SimInstance, TheoryReport};
pub use error::{Result, SnapError};
pub use kkt::{kkt_residual, soft_threshold, KktResidual};
pub use linsolve::{CgCap, CgPolicy};
pub use path::{
    lambda_grid, snap_run, solve_lambda, sign_consistent_schedule, KnotRecord, PathConfig, PathResult, ShiftSchedule,
    SingleSolveOptions,
};
pub use problem::{ActivePartition, PrimalDualState, ProblemData, SparseVec, TruthModel};
pub use select::{select, Criterion, SelectorResult};
pub use sna::{sna_solve, sna_update, SnaConfig, SnaOutcome, StopReason};
