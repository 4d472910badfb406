//! Generate a synthetic instance and write X.csv, y.csv and instance.json.
//!
//! cargo run --release --example simulate_instance -- out/

use std::path::PathBuf;

use snapreg::io::{write_matrix, write_sidecar, write_vector, InstanceSidecar};
use snapreg::{simulate, SimConfig};

fn main() -> snapreg::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "sim-out".into()));
    let config = SimConfig::classical(200, 1000, 0.1, 0.01, 5).with_seed(42);
    let inst = simulate(&config)?;
    std::fs::create_dir_all(&dir)?;
    write_matrix(&dir.join("X.csv"), inst.problem.x())?;
    write_vector(&dir.join("y.csv"), inst.problem.y())?;
    write_sidecar(
        &dir.join("instance.json"),
        &InstanceSidecar {
            config,
            truth: inst.truth.clone(),
        },
    )?;
    println!("true support {:?}", inst.truth.support);
    println!("wrote {}", dir.display());
    Ok(())
}
