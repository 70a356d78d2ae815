//! Stability map over the synchronous reactances of bus 3, drawn as text
//! for both load modes at bus 2. `#` stable, `.` unstable.
//!
//! cargo run --release --example reactance_sweep

use gridcert::config::{GridRange, LoadMode, SweepConfig, SystemConfig};
use gridcert::sweep::{run_sweep, PointVerdict};

fn main() -> gridcert::Result<()> {
    let cfg = SystemConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/three_bus.json"))?;
    let steps = 30;
    for mode in [LoadMode::Forming, LoadMode::Following] {
        let sweep = SweepConfig {
            bus: 3,
            x_d: GridRange { start: 0.05, end: 3.0, steps },
            x_q: GridRange { start: 0.05, end: 3.0, steps },
            load_mode: mode,
            load_buses: None,
        };
        let rows = run_sweep(&cfg, &sweep)?;
        println!("load mode {mode:?}: rows X_q (top = 3.0), columns X_d (left = 0.05)");
        for j in (0..steps).rev() {
            let line: String = (0..steps)
                .map(|i| match rows[i * steps + j].certificate {
                    PointVerdict::Stable => '#',
                    PointVerdict::Unstable => '.',
                    _ => '?',
                })
                .collect();
            println!("  {line}");
        }
        let stable = rows.iter().filter(|r| r.certificate == PointVerdict::Stable).count();
        let agree = rows.iter().filter(|r| r.certificate == r.eigen).count();
        println!("  {stable}/{} stable, eigenvalue route agrees on {agree}\n", rows.len());
    }
    Ok(())
}
