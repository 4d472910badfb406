//! As alpha shrinks, the elastic-net solution approaches the LASSO solution.

use nalgebra::DVector;
use snapreg::cd::{min_norm_lasso_probe, polish_on_support};
use snapreg::path::default_lambda0;
use snapreg::{cd_solve, simulate, SimConfig};

fn main() -> snapreg::Result<()> {
    let inst = simulate(&SimConfig::classical(30, 60, 0.2, 0.3, 4).with_seed(6))?;
    let prob = &inst.problem;
    let lambda = 0.3 * default_lambda0(prob)?;
    let cd = cd_solve(prob, lambda, &DVector::zeros(prob.p()), 1e-14, 1_000_000);
    let lasso = polish_on_support(prob, lambda, &cd.beta).unwrap_or(cd.beta);

    let alphas = [1e-1, 1e-2, 1e-4, 1e-6];
    for (alpha, beta) in alphas.iter().zip(min_norm_lasso_probe(prob, lambda, &alphas)?) {
        println!("alpha {alpha:7.0e}: distance to LASSO {:.3e}", (beta - &lasso).norm());
    }
    Ok(())
}
