//! Replicated simulation benchmark: generate, solve the path, select a knot,
//! score it against the truth, and aggregate per grid cell.

use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cd::{cd_path, CdSettings};
use crate::datagen::{simulate, SimConfig};
use crate::error::{Result, SnapError};
use crate::path::{snap_run, PathConfig};
use crate::problem::TruthModel;
use crate::select::{select, Criterion};

/// Scores of one estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// `|supp(beta_hat)|`.
    pub ms: usize,
    /// `supp(beta_hat) == supp(beta_true)`.
    pub correct: bool,
    /// `supp(beta_true) ⊆ supp(beta_hat)`.
    pub contains: bool,
    /// `||beta_hat - beta_true||_inf`.
    pub ae: f64,
    /// `||beta_hat - beta_true||_2 / ||beta_true||_2`.
    pub re: f64,
}

pub fn metrics(beta_hat: &DVector<f64>, truth: &TruthModel) -> Result<Metrics> {
    if beta_hat.len() != truth.beta_true.len() {
        return Err(SnapError::DimensionMismatch(format!(
            "estimate has {} entries, truth has {}",
            beta_hat.len(),
            truth.beta_true.len()
        )));
    }
    let true_norm = truth.beta_true.iter().map(|b| b * b).sum::<f64>().sqrt();
    if true_norm == 0.0 {
        return Err(SnapError::ZeroTruth);
    }
    let support: Vec<usize> = (0..beta_hat.len()).filter(|&j| beta_hat[j] != 0.0).collect();
    let contains = truth.support.iter().all(|j| beta_hat[*j] != 0.0);
    let diff = beta_hat - truth.beta_vector();
    Ok(Metrics {
        ms: support.len(),
        correct: support == truth.support,
        contains,
        ae: diff.amax(),
        re: diff.norm() / true_norm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Snap,
    CdPath,
}

impl Solver {
    pub fn as_str(&self) -> &'static str {
        match self {
            Solver::Snap => "snap",
            Solver::CdPath => "cdpath",
        }
    }
}

/// Solver settings shared by every replication.
#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub path: PathConfig,
    pub cd: CdSettings,
    /// Run replications on the rayon pool.
    pub parallel: bool,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            path: PathConfig::default(),
            cd: CdSettings::default(),
            parallel: true,
        }
    }
}

/// One replication; `metrics` is `None` when the run failed.
#[derive(Debug, Clone, Serialize)]
pub struct Replication {
    pub seed: u64,
    pub time_s: f64,
    pub chosen_lambda: f64,
    pub metrics: Option<Metrics>,
    pub error: Option<String>,
}

/// Aggregates over the successful replications of one grid cell. The `*_sd`
/// fields are sample standard deviations (denominator `M - 1`, zero when
/// `M = 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub label: String,
    pub solver: Solver,
    pub criterion: Criterion,
    /// Successful replications `M`.
    pub reps: usize,
    pub failures: usize,
    pub time_s: f64,
    pub time_sd: f64,
    pub ms: f64,
    pub ms_sd: f64,
    pub cm: f64,
    pub cm_sd: f64,
    pub ae: f64,
    pub ae_sd: f64,
    pub re: f64,
    pub re_sd: f64,
    /// Fraction of replications whose support contains the true one.
    pub containment: f64,
}

/// Compensated sum, fed in replication order.
#[derive(Default)]
struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    fn add(&mut self, v: f64) {
        let y = v - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }
}

/// Mean and sample standard deviation.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = values.len() as f64;
    let mut s = Kahan::default();
    values.iter().for_each(|v| s.add(*v));
    let mean = s.sum / m;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let mut q = Kahan::default();
    values.iter().for_each(|v| q.add((v - mean) * (v - mean)));
    (mean, (q.sum / (m - 1.0)).sqrt())
}

pub fn aggregate(label: &str, solver: Solver, criterion: Criterion, reps: &[Replication]) -> MetricsRecord {
    let ok: Vec<(&Replication, &Metrics)> = reps.iter().filter_map(|r| r.metrics.as_ref().map(|m| (r, m))).collect();
    let col = |f: &dyn Fn(&Replication, &Metrics) -> f64| -> (f64, f64) {
        mean_sd(&ok.iter().map(|(r, m)| f(r, m)).collect::<Vec<_>>())
    };
    let (time_s, time_sd) = col(&|r, _| r.time_s);
    let (ms, ms_sd) = col(&|_, m| m.ms as f64);
    let (cm, cm_sd) = col(&|_, m| f64::from(u8::from(m.correct)));
    let (ae, ae_sd) = col(&|_, m| m.ae);
    let (re, re_sd) = col(&|_, m| m.re);
    let (containment, _) = col(&|_, m| f64::from(u8::from(m.contains)));
    assert!(
        ok.is_empty() || cm <= containment,
        "correct-model rate {cm} exceeds containment rate {containment}"
    );
    MetricsRecord {
        label: label.to_string(),
        solver,
        criterion,
        reps: ok.len(),
        failures: reps.len() - ok.len(),
        time_s,
        time_sd,
        ms,
        ms_sd,
        cm,
        cm_sd,
        ae,
        ae_sd,
        re,
        re_sd,
        containment,
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `rep` in grid cell `cell`.
pub fn derive_seed(base_seed: u64, cell: usize, rep: usize) -> u64 {
    splitmix64(splitmix64(base_seed ^ splitmix64(cell as u64)) ^ rep as u64)
}

/// Generates the instance for `seed`, then times path plus selection.
pub fn run_replication(
    config: &SimConfig,
    seed: u64,
    solver: Solver,
    criterion: Criterion,
    opts: &BenchOptions,
) -> Replication {
    let attempt = || -> Result<(f64, f64, Metrics)> {
        let inst = simulate(&config.clone().with_seed(seed))?;
        let start = Instant::now();
        let path = match solver {
            Solver::Snap => snap_run(&inst.problem, &opts.path)?,
            Solver::CdPath => cd_path(&inst.problem, &opts.path, &opts.cd)?,
        };
        let sel = select(&inst.problem, &path, criterion)?;
        let time_s = start.elapsed().as_secs_f64();
        let beta = path.records[sel.chosen_index].beta.to_dense();
        Ok((time_s, sel.chosen_lambda, metrics(&beta, &inst.truth)?))
    };
    match attempt() {
        Ok((time_s, chosen_lambda, m)) => Replication {
            seed,
            time_s,
            chosen_lambda,
            metrics: Some(m),
            error: None,
        },
        Err(e) => Replication {
            seed,
            time_s: f64::NAN,
            chosen_lambda: f64::NAN,
            metrics: None,
            error: Some(e.to_string()),
        },
    }
}

/// Runs `reps` replications per grid cell. The seed of each replication
/// comes from [`derive_seed`], so the table (apart from timings) depends only
/// on the arguments.
pub fn run_benchmark(
    grid: &[SimConfig],
    solver: Solver,
    criterion: Criterion,
    reps: usize,
    base_seed: u64,
    opts: &BenchOptions,
) -> Result<Vec<(MetricsRecord, Vec<Replication>)>> {
    if reps == 0 {
        return Err(SnapError::InvalidConfig("need at least one replication".into()));
    }
    grid.iter().try_for_each(SimConfig::validate)?;
    let mut out = Vec::with_capacity(grid.len());
    for (cell, config) in grid.iter().enumerate() {
        let seeds: Vec<u64> = (0..reps).map(|m| derive_seed(base_seed, cell, m)).collect();
        let runs: Vec<Replication> = if opts.parallel {
            seeds
                .par_iter()
                .map(|s| run_replication(config, *s, solver, criterion, opts))
                .collect()
        } else {
            seeds
                .iter()
                .map(|s| run_replication(config, *s, solver, criterion, opts))
                .collect()
        };
        out.push((aggregate(&config.label(), solver, criterion, &runs), runs));
    }
    Ok(out)
}

/// Named benchmark grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// `n=600, p=3000, rho=0.3, sigma=0.2, T=40`.
    Recovery,
    /// Classical design, `rho` in {0.3, 0.5, 0.7}, `sigma` in {0.2, 0.4}.
    ClassicalGrid,
    /// Auto-correlated design `n=1000, p=10000, T=50` over the same `nu`, `sigma` values.
    AutocorrGrid,
    /// `n=200, p=1000, rho=0.1, sigma=0.01, T=5`.
    Fallback,
    /// `n=400, p=2000, rho=0.5, sigma=0.1, T=10`.
    Convergence,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Recovery,
        Preset::ClassicalGrid,
        Preset::AutocorrGrid,
        Preset::Fallback,
        Preset::Convergence,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Recovery => "recovery",
            Preset::ClassicalGrid => "classical-grid",
            Preset::AutocorrGrid => "autocorr-grid",
            Preset::Fallback => "fallback",
            Preset::Convergence => "convergence",
        }
    }

    pub fn from_name(name: &str) -> Option<Preset> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn grid(&self) -> Vec<SimConfig> {
        let levels = [0.3, 0.5, 0.7];
        let sigmas = [0.2, 0.4];
        match self {
            Preset::Recovery => vec![SimConfig::classical(600, 3000, 0.3, 0.2, 40)],
            Preset::ClassicalGrid => levels
                .iter()
                .flat_map(|&rho| sigmas.iter().map(move |&s| SimConfig::classical(600, 3000, rho, s, 40)))
                .collect(),
            Preset::AutocorrGrid => levels
                .iter()
                .flat_map(|&nu| sigmas.iter().map(move |&s| SimConfig::autocorr(1000, 10000, nu, s, 50)))
                .collect(),
            Preset::Fallback => vec![SimConfig::classical(200, 1000, 0.1, 0.01, 5)],
            Preset::Convergence => vec![SimConfig::classical(400, 2000, 0.5, 0.1, 10)],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_and_null_estimates() {
        let truth = TruthModel::new(vec![0.0, 3.0, 0.0, -4.0], 0.0);
        let m = metrics(&truth.beta_vector(), &truth).unwrap();
        assert_eq!(m.ms, 2);
        assert!(m.correct && m.contains);
        assert_eq!((m.ae, m.re), (0.0, 0.0));

        let m = metrics(&DVector::zeros(4), &truth).unwrap();
        assert!(!m.correct && !m.contains);
        assert_eq!(m.ae, 4.0);
        assert_eq!(m.re, 1.0);
    }

    #[test]
    fn zero_truth_is_an_error() {
        let truth = TruthModel::new(vec![0.0; 3], 0.0);
        assert!(matches!(metrics(&DVector::zeros(3), &truth), Err(SnapError::ZeroTruth)));
    }

    #[test]
    fn norms_agree_with_loops() {
        let truth = TruthModel::new(vec![1.5, 0.0, -2.0, 0.25, 0.0], 0.0);
        let hat = DVector::from_column_slice(&[1.25, 0.5, -2.5, 0.0, 0.0]);
        let m = metrics(&hat, &truth).unwrap();
        let mut worst = 0.0f64;
        let (mut num, mut den) = (0.0, 0.0);
        for j in 0..5 {
            let d = hat[j] - truth.beta_true[j];
            worst = worst.max(d.abs());
            num += d * d;
            den += truth.beta_true[j] * truth.beta_true[j];
        }
        assert!((m.ae - worst).abs() < 1e-14);
        assert!((m.re - (num / den as f64).sqrt()).abs() < 1e-14);
        assert!(!m.correct && !m.contains);
        assert_eq!(m.ms, 3);
    }

    #[test]
    fn sample_sd_of_a_proportion() {
        // 94 ones and 6 zeros
        let v: Vec<f64> = (0..100).map(|i| if i < 94 { 1.0 } else { 0.0 }).collect();
        let (mean, sd) = mean_sd(&v);
        assert!((mean - 0.94).abs() < 1e-15);
        assert!((sd - 0.238_683_8).abs() < 1e-6, "{sd}");
        assert_eq!(mean_sd(&[2.0]), (2.0, 0.0));
    }

    #[test]
    fn seeds_are_distinct_and_stable() {
        let a: Vec<u64> = (0..50).map(|m| derive_seed(1, 0, m)).collect();
        let mut b = a.clone();
        b.sort_unstable();
        b.dedup();
        assert_eq!(b.len(), 50);
        assert_ne!(derive_seed(1, 0, 0), derive_seed(1, 1, 0));
        assert_eq!(derive_seed(9, 2, 3), derive_seed(9, 2, 3));
    }

    #[test]
    fn small_benchmark_is_deterministic() {
        let grid = vec![SimConfig::classical(40, 60, 0.2, 0.01, 2)];
        let opts = BenchOptions {
            path: PathConfig::with_ratio(30, 1e-2),
            ..Default::default()
        };
        let a = run_benchmark(&grid, Solver::Snap, Criterion::Mbic, 3, 5, &opts).unwrap();
        let b = run_benchmark(&grid, Solver::Snap, Criterion::Mbic, 3, 5, &opts).unwrap();
        let strip = |r: &MetricsRecord| MetricsRecord {
            time_s: 0.0,
            time_sd: 0.0,
            ..r.clone()
        };
        assert_eq!(strip(&a[0].0), strip(&b[0].0));
        assert_eq!(a[0].0.reps + a[0].0.failures, 3);
        assert!(run_benchmark(&grid, Solver::Snap, Criterion::Mbic, 0, 5, &opts).is_err());
    }

    #[test]
    fn preset_names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(Preset::from_name(p.name()), Some(p));
        }
        assert_eq!(Preset::ClassicalGrid.grid().len(), 6);
        assert!(Preset::from_name("nope").is_none());
    }
}
