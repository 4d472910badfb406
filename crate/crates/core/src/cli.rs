//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage, input or configuration errors,
//! 2 when a numerical routine fails.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{run_benchmark, BenchOptions, Preset, Solver};
use crate::datagen::{simulate, theory_check, Design, SimConfig};
use crate::error::{Result, SnapError};
use crate::io::{
    read_matrix, read_vector, write_coefficients, write_matrix, write_metrics, write_path_report, write_sidecar,
    write_vector, InstanceSidecar,
};
use crate::path::{snap_run, solve_lambda, PathConfig, ShiftSchedule, SingleSolveOptions};
use crate::problem::ProblemData;
use crate::select::{select, Criterion};
use crate::cd::{cd_path, CdSettings};

#[derive(Debug, Parser)]
#[command(name = "snapreg", version, about = "Semismooth Newton LASSO / elastic-net paths")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve at a single lambda (continuation from lambda_max).
    Solve(SolveArgs),
    /// Compute a regularization path.
    Path(PathArgs),
    /// Generate a synthetic instance (X.csv, y.csv, instance.json).
    Simulate(SimulateArgs),
    /// Run a replicated benchmark preset.
    Bench(BenchArgs),
    /// Report mutual coherence and the design conditions for a simulated instance.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Design matrix, header-less CSV.
    #[arg(long)]
    x: PathBuf,
    /// Response, single-column CSV.
    #[arg(long)]
    y: PathBuf,
    /// Ridge weight.
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    /// Use X and y as given instead of centering and scaling them.
    #[arg(long)]
    raw: bool,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    lambda: f64,
    /// Continuation knots from lambda_max.
    #[arg(long, default_value_t = 20)]
    knots: usize,
    /// Inner iterations per knot.
    #[arg(long, default_value_t = 20)]
    k: usize,
    #[arg(long)]
    cap: Option<usize>,
    /// Coefficients CSV (index,value); stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SelectorArg {
    Mbic,
    Hbic,
    None,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SolverArg {
    Snap,
    Cdpath,
}

#[derive(Debug, Args)]
struct PathArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Grid ratio; defaults to lambda_last / lambda_0 = 1e-3.
    #[arg(long)]
    gamma: Option<f64>,
    /// Number of grid points, including lambda_0.
    #[arg(long, default_value_t = 100)]
    knots: usize,
    /// Inner iterations per knot.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Sparsity cap; defaults to ceil(n/2).
    #[arg(long)]
    cap: Option<usize>,
    #[arg(long, value_enum, default_value = "snap")]
    solver: SolverArg,
    #[arg(long, value_enum, default_value = "mbic")]
    selector: SelectorArg,
    /// Path report CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Sparse coefficients CSV (knot,index,value).
    #[arg(long)]
    coef: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// For example `n=200,p=1000,rho=0.1,sigma=0.01,T=5` (use `nu=` for the auto-correlated design).
    #[arg(long)]
    sim: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// recovery, classical-grid, autocorr-grid, fallback or convergence.
    #[arg(long)]
    preset: String,
    #[arg(long, default_value_t = 20)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value = "snap")]
    solver: SolverArg,
    #[arg(long, value_enum, default_value = "mbic")]
    selector: SelectorArg,
    /// Grid points per path.
    #[arg(long, default_value_t = 101)]
    knots: usize,
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Shift each knot's active-set dual by `frac * lambda_t` (0 solves the plain LASSO).
    #[arg(long, default_value_t = 0.0)]
    shift_frac: f64,
    /// Run replications one at a time.
    #[arg(long)]
    serial: bool,
    /// Metrics CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long)]
    sim: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Parses `key=value` pairs: `n`, `p`, `rho` or `nu`, `sigma`, `T`.
pub fn parse_sim_spec(spec: &str) -> Result<SimConfig> {
    let (mut n, mut p, mut sigma, mut t) = (None, None, None, None);
    let mut design = None;
    for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| SnapError::Parse(format!("expected key=value, got `{part}`")))?;
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| SnapError::Parse(format!("bad value in `{part}`")));
        let int = |v: &str| v.trim().parse::<usize>().map_err(|_| SnapError::Parse(format!("bad value in `{part}`")));
        match key.trim() {
            "n" => n = Some(int(value)?),
            "p" => p = Some(int(value)?),
            "T" | "t" => t = Some(int(value)?),
            "sigma" => sigma = Some(num(value)?),
            "rho" => design = Some(Design::Classical { rho: num(value)? }),
            "nu" => design = Some(Design::AutoCorr { nu: num(value)? }),
            other => return Err(SnapError::Parse(format!("unknown key `{other}`"))),
        }
    }
    let missing = |k: &str| SnapError::Parse(format!("missing `{k}`"));
    let cfg = SimConfig {
        n: n.ok_or_else(|| missing("n"))?,
        p: p.ok_or_else(|| missing("p"))?,
        design: design.ok_or_else(|| missing("rho or nu"))?,
        sigma: sigma.ok_or_else(|| missing("sigma"))?,
        sparsity: t.ok_or_else(|| missing("T"))?,
        seed: 0,
        normalize_after: true,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn load(data: &DataArgs) -> Result<ProblemData> {
    let x = read_matrix(&data.x)?;
    let y = read_vector(&data.y)?;
    if data.raw {
        ProblemData::new(x, y, data.alpha)
    } else {
        ProblemData::normalize(x, y)?.with_alpha(data.alpha)
    }
}

fn sink(out: &Option<PathBuf>, stdout: &mut dyn Write, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match out {
        Some(file) => {
            let mut w = BufWriter::new(File::create(file)?);
            body(&mut w)?;
            w.flush()?;
            Ok(())
        }
        None => body(stdout),
    }
}

fn criterion(arg: SelectorArg) -> Option<Criterion> {
    match arg {
        SelectorArg::Mbic => Some(Criterion::Mbic),
        SelectorArg::Hbic => Some(Criterion::Hbic),
        SelectorArg::None => None,
    }
}

fn run_solve(args: &SolveArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let prob = load(&args.data)?;
    let opts = SingleSolveOptions {
        knots: args.knots,
        max_inner: args.k,
        sparsity_cap: args.cap,
        ..Default::default()
    };
    let out = solve_lambda(&prob, args.lambda, &opts)?;
    writeln!(
        stderr,
        "lambda={} nnz={} iterations={} stop={}",
        args.lambda,
        out.state.support().len(),
        out.iterations,
        out.stop_reason
    )?;
    sink(&args.out, stdout, |w| {
        writeln!(w, "index,value")?;
        for j in out.state.support() {
            writeln!(w, "{},{}", j, out.state.beta[j])?;
        }
        Ok(())
    })
}

fn run_path(args: &PathArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    if args.knots == 0 {
        return Err(SnapError::InvalidConfig("--knots must be at least 1".into()));
    }
    let prob = load(&args.data)?;
    let last = args.knots - 1;
    let mut config = match args.gamma {
        Some(g) => PathConfig::new(g, last),
        None => PathConfig::with_ratio(last, 1e-3),
    }
    .max_inner(args.k);
    if let Some(cap) = args.cap {
        config = config.sparsity_cap(cap);
    }
    let path = match args.solver {
        SolverArg::Snap => snap_run(&prob, &config)?,
        SolverArg::Cdpath => cd_path(&prob, &config, &CdSettings::default())?,
    };
    let selection = match criterion(args.selector) {
        Some(c) if !path.is_empty() => Some(select(&prob, &path, c)?),
        _ => None,
    };
    writeln!(
        stderr,
        "knots={} lambda0={} time={:.3}s{}",
        path.len(),
        path.lambda0,
        path.wall_time.as_secs_f64(),
        path.terminated_at
            .map(|t| format!(" (sparsity cap reached at knot {t})"))
            .unwrap_or_default()
    )?;
    sink(&args.out, stdout, |w| write_path_report(w, &path, selection.as_ref()))?;
    if let Some(file) = &args.coef {
        let mut w = BufWriter::new(File::create(file)?);
        write_coefficients(&mut w, &path)?;
        w.flush()?;
    }
    Ok(())
}

fn run_simulate(args: &SimulateArgs, stderr: &mut dyn Write) -> Result<()> {
    let config = parse_sim_spec(&args.sim)?.with_seed(args.seed);
    let inst = simulate(&config)?;
    fs::create_dir_all(&args.out_dir)?;
    write_matrix(&args.out_dir.join("X.csv"), inst.problem.x())?;
    write_vector(&args.out_dir.join("y.csv"), inst.problem.y())?;
    write_sidecar(
        &args.out_dir.join("instance.json"),
        &InstanceSidecar {
            config,
            truth: inst.truth,
        },
    )?;
    writeln!(stderr, "wrote X.csv, y.csv, instance.json to {}", args.out_dir.display())?;
    Ok(())
}

fn run_bench(args: &BenchArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let preset = Preset::from_name(&args.preset)
        .ok_or_else(|| SnapError::InvalidConfig(format!("unknown preset `{}`", args.preset)))?;
    if args.knots < 2 {
        return Err(SnapError::InvalidConfig("--knots must be at least 2".into()));
    }
    let crit = criterion(args.selector)
        .ok_or_else(|| SnapError::InvalidConfig("bench needs a selector".into()))?;
    let solver = match args.solver {
        SolverArg::Snap => Solver::Snap,
        SolverArg::Cdpath => Solver::CdPath,
    };
    let opts = BenchOptions {
        path: PathConfig::with_ratio(args.knots - 1, 1e-3)
            .max_inner(args.k)
            .shift(ShiftSchedule::Proportional(args.shift_frac)),
        parallel: !args.serial,
        ..Default::default()
    };
    let table = run_benchmark(&preset.grid(), solver, crit, args.reps, args.seed, &opts)?;
    for (rec, _) in &table {
        writeln!(
            stderr,
            "{}: MS {:.2} CM {:.0}% AE {:.4} RE {:.4} time {:.3}s failures {}",
            rec.label,
            rec.ms,
            100.0 * rec.cm,
            rec.ae,
            rec.re,
            rec.time_s,
            rec.failures
        )?;
    }
    let records: Vec<_> = table.into_iter().map(|(r, _)| r).collect();
    sink(&args.out, stdout, |w| write_metrics(w, &records))
}

fn run_check(args: &CheckArgs, stdout: &mut dyn Write) -> Result<()> {
    let config = parse_sim_spec(&args.sim)?.with_seed(args.seed);
    let inst = simulate(&config)?;
    let report = theory_check(&inst.problem, &inst.truth)?;
    serde_json::to_writer_pretty(&mut *stdout, &report)?;
    writeln!(stdout)?;
    Ok(())
}

/// Exit code for a failed command.
pub fn exit_code(err: &SnapError) -> i32 {
    match err.root() {
        SnapError::Io(_)
        | SnapError::Csv(_)
        | SnapError::Json(_)
        | SnapError::Parse(_)
        | SnapError::InvalidConfig(_)
        | SnapError::DimensionMismatch(_)
        | SnapError::MatrixTooLarge { .. } => 1,
        _ => 2,
    }
}

/// Runs the CLI with explicit output streams.
pub fn cli_main_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                write!(stdout, "{rendered}")
            } else {
                write!(stderr, "{rendered}")
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => run_solve(a, stdout, stderr),
        Command::Path(a) => run_path(a, stdout, stderr),
        Command::Simulate(a) => run_simulate(a, stderr),
        Command::Bench(a) => run_bench(a, stdout, stderr),
        Command::Check(a) => run_check(a, stdout),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    cli_main_with(argv, &mut io::stdout().lock(), &mut io::stderr().lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sim_spec_parsing() {
        let c = parse_sim_spec("n=200,p=1000,rho=0.1,sigma=0.01,T=5").unwrap();
        assert_eq!((c.n, c.p, c.sparsity), (200, 1000, 5));
        assert_eq!(c.design, Design::Classical { rho: 0.1 });
        let c = parse_sim_spec("n=20, p=30, nu=0.3, sigma=1, T=2").unwrap();
        assert_eq!(c.design, Design::AutoCorr { nu: 0.3 });
        assert!(parse_sim_spec("n=20,p=30,sigma=1,T=2").is_err());
        assert!(parse_sim_spec("n=20,p=30,rho=0.2,sigma=1,T=2,q=1").is_err());
        assert!(parse_sim_spec("n=20,p=30,rho=1.2,sigma=1,T=2").is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(cli_main_with(["snapreg", "path", "--bogus"], &mut o, &mut e), 1);
        assert!(String::from_utf8_lossy(&e).contains("--bogus"));
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(cli_main_with(["snapreg", "--help"], &mut o, &mut e), 0);
    }

    #[test]
    fn numerical_errors_exit_two() {
        assert_eq!(exit_code(&SnapError::SingularSystem), 2);
        let wrapped = SnapError::Knot {
            knot: 3,
            source: Box::new(SnapError::CgBreakdown {
                iterations: 1,
                curvature: 0.0,
            }),
        };
        assert_eq!(exit_code(&wrapped), 2);
        assert_eq!(exit_code(&SnapError::Parse("x".into())), 1);
    }
}
