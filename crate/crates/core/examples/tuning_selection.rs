//! Choose lambda along the path with MBIC and HBIC, then score the choice.

use snapreg::{metrics, select, simulate, snap_run, Criterion, PathConfig, SimConfig};

fn main() -> snapreg::Result<()> {
    let inst = simulate(&SimConfig::classical(400, 2000, 0.5, 0.1, 10).with_seed(2))?;
    let path = snap_run(&inst.problem, &PathConfig::with_ratio(100, 1e-3))?;
    for criterion in [Criterion::Mbic, Criterion::Hbic] {
        let sel = select(&inst.problem, &path, criterion)?;
        let beta = path.records[sel.chosen_index].beta.to_dense();
        let m = metrics(&beta, &inst.truth)?;
        println!(
            "{criterion}: knot {} (lambda {:.4}), |A| = {}, exact support: {}, AE {:.4}, RE {:.4}",
            sel.chosen_knot, sel.chosen_lambda, m.ms, m.correct, m.ae, m.re
        );
    }
    Ok(())
}
