//! Elastic net: the ridge weight alpha keeps the restricted systems well
//! conditioned when columns are strongly correlated.

use snapreg::{simulate, snap_run, PathConfig, SimConfig};

fn main() -> snapreg::Result<()> {
    let inst = simulate(&SimConfig::autocorr(150, 600, 0.7, 0.2, 6).with_seed(5))?;
    for alpha in [0.0, 1.0, 10.0] {
        let prob = inst.problem.clone().with_alpha(alpha)?;
        let path = snap_run(&prob, &PathConfig::with_ratio(60, 1e-2).max_inner(5))?;
        let last = path.last().expect("non-empty path");
        let iters: usize = path.records.iter().map(|r| r.inner_iterations).sum();
        println!(
            "alpha {alpha:5.1}: {} knots, final nnz {}, {} Newton steps in total",
            path.len(),
            last.active_size,
            iters
        );
    }
    Ok(())
}
