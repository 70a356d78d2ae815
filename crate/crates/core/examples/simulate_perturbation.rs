//! Kick a rotor angle and watch the storage function fall.
//!
//! cargo run --release --example simulate_perturbation

use gridcert::config::SystemConfig;
use gridcert::simlab::{deviation, perturbed_start, simulate};

fn main() -> gridcert::Result<()> {
    let cfg = SystemConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/three_bus.json"))?;
    let (sys, eq) = cfg.build()?;
    let start = perturbed_start(&sys, &eq, &[(0, 0.05)])?;
    let traj = simulate(&sys, &eq, start, 1e-3, 12.0, 1000)?;

    println!("{:>6} {:>12} {:>12} {:>10}", "t", "deviation", "W", "omega_1");
    for s in &traj.samples {
        let states = sys.unpack_states(&s.state.x)?;
        println!(
            "{:>6.1} {:>12.3e} {:>12.3e} {:>10.2e}",
            s.state.t,
            deviation(&sys, &eq, &s.state),
            s.storage,
            states[0].omega().unwrap_or(0.0)
        );
    }
    if let Some(diag) = &traj.diagnostic {
        println!("{diag}");
    }
    Ok(())
}
