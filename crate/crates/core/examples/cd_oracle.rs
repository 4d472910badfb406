//! Compare a SNAP path with a coordinate-descent path on the same grid.

use snapreg::{cd_path, simulate, snap_run, CdSettings, PathConfig, SimConfig};

fn main() -> snapreg::Result<()> {
    let inst = simulate(&SimConfig::classical(300, 1500, 0.3, 0.2, 15).with_seed(8))?;
    let config = PathConfig::with_ratio(50, 1e-2).max_inner(5);
    let snap = snap_run(&inst.problem, &config)?;
    let cd = cd_path(&inst.problem, &config, &CdSettings { tol: 1e-10, max_sweeps: 100_000 })?;

    let knots = snap.len().min(cd.len());
    let worst = (0..knots)
        .map(|t| (snap.records[t].beta.to_dense() - cd.records[t].beta.to_dense()).amax())
        .fold(0.0, f64::max);
    let sweeps: usize = cd.records.iter().map(|r| r.inner_iterations).sum();
    let steps: usize = snap.records.iter().map(|r| r.inner_iterations).sum();
    println!("SNAP: {:.3}s, {steps} Newton steps", snap.wall_time.as_secs_f64());
    println!("CD:   {:.3}s, {sweeps} sweeps", cd.wall_time.as_secs_f64());
    println!("largest coefficient gap over {knots} knots: {worst:.2e}");
    Ok(())
}
