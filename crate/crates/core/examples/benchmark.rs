//! Replicated benchmark on a preset grid.
//!
//! cargo run --release --example benchmark -- fallback 20

use snapreg::io::write_metrics;
use snapreg::{run_benchmark, BenchOptions, Criterion, Preset, Solver};

fn main() -> snapreg::Result<()> {
    let mut args = std::env::args().skip(1);
    let preset = args.next().unwrap_or_else(|| "fallback".into());
    let reps: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(10);
    let preset = Preset::from_name(&preset).expect("unknown preset");

    let opts = BenchOptions::default();
    for solver in [Solver::Snap, Solver::CdPath] {
        let table = run_benchmark(&preset.grid(), solver, Criterion::Mbic, reps, 1, &opts)?;
        let records: Vec<_> = table.into_iter().map(|(r, _)| r).collect();
        write_metrics(&mut std::io::stdout().lock(), &records)?;
    }
    Ok(())
}
