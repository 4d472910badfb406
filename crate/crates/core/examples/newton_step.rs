//! One active-set update next to the full semismooth Newton step on the
//! stacked primal-dual system; the two agree to rounding.

use snapreg::kkt::{newton_step_dense, partition, refresh_dual};
use snapreg::path::default_lambda0;
use snapreg::{simulate, sna_update, CgPolicy, PrimalDualState, SimConfig};

fn main() -> snapreg::Result<()> {
    let inst = simulate(&SimConfig::classical(40, 60, 0.3, 0.5, 5).with_seed(4))?;
    let prob = &inst.problem;
    let lambda = 0.3 * default_lambda0(prob)?;

    let beta = inst.truth.beta_vector() * 0.5;
    let state = PrimalDualState::new(beta.clone(), refresh_dual(prob, &beta));
    let part = partition(&state, lambda);

    let fast = sna_update(prob, &state, &part, lambda, 0.0, &CgPolicy::default(), usize::MAX)?;
    let dense = newton_step_dense(prob, &state, &part, lambda)?;
    println!("|A| = {}", part.active.len());
    println!("primal gap {:.2e}", (&fast.beta - &dense.beta).amax());
    println!("dual gap   {:.2e}", (&fast.dual - &dense.dual).amax());
    Ok(())
}
