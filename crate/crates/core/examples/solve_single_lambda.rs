//! Solve the LASSO at one lambda and compare with coordinate descent.
//!
//! cargo run --release --example solve_single_lambda

use nalgebra::DVector;
use snapreg::{cd_solve, simulate, solve_lambda, SimConfig, SingleSolveOptions};

fn main() -> snapreg::Result<()> {
    let inst = simulate(&SimConfig::classical(200, 1000, 0.3, 0.1, 8).with_seed(3))?;
    let prob = &inst.problem;
    let lambda = 0.05;

    let out = solve_lambda(prob, lambda, &SingleSolveOptions::default())?;
    println!(
        "SNA: {} nonzeros, {} iterations at the target, stop = {}",
        out.state.support().len(),
        out.iterations,
        out.stop_reason
    );

    let cd = cd_solve(prob, lambda, &DVector::zeros(prob.p()), 1e-12, 100_000);
    println!("CD:  {} sweeps", cd.sweeps);
    println!(
        "objective gap {:.2e}, coefficient gap {:.2e}",
        (prob.objective(&out.state.beta, lambda) - prob.objective(&cd.beta, lambda)).abs(),
        (&out.state.beta - &cd.beta).amax()
    );
    Ok(())
}
