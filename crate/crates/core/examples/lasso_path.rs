//! Compute a LASSO path with warm starts and export it as CSV.
//!
//! cargo run --release --example lasso_path -- [out_dir]

use std::path::PathBuf;

use snapreg::io::{write_coefficients_csv, write_path_csv};
use snapreg::{select, simulate, snap_run, Criterion, PathConfig, SimConfig};

fn main() -> snapreg::Result<()> {
    let out_dir = std::env::args().nth(1).map(PathBuf::from);
    let inst = simulate(&SimConfig::classical(300, 1500, 0.5, 0.1, 10).with_seed(11))?;

    // 101 knots from lambda_max down to 1e-3 lambda_max, one Newton step per knot
    let config = PathConfig::with_ratio(100, 1e-3).max_inner(1);
    let path = snap_run(&inst.problem, &config)?;
    println!("{} knots in {:.3}s (lambda_0 = {:.4})", path.len(), path.wall_time.as_secs_f64(), path.lambda0);
    if let Some(t) = path.terminated_at {
        println!("stopped at knot {t}: active set larger than n/2");
    }
    for r in path.records.iter().step_by(10) {
        println!("knot {:3}  lambda {:9.5}  nnz {:3}  stop {}", r.knot, r.lambda, r.active_size, r.stop_reason);
    }

    if let Some(dir) = out_dir {
        std::fs::create_dir_all(&dir)?;
        let sel = select(&inst.problem, &path, Criterion::Mbic)?;
        write_path_csv(&dir.join("path.csv"), &path, Some(&sel))?;
        write_coefficients_csv(&dir.join("coef.csv"), &path)?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}
