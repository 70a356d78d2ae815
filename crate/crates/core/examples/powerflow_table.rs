//! Solve the three-bus example network from code and print the table.
//!
//! cargo run --example powerflow_table

use gridcert::{output, solve_power_flow, BusSpec, Line, Network};
use gridcert::netmodel::NewtonOptions;

fn main() -> gridcert::Result<()> {
    let net = Network::new(3, vec![Line::new(0, 1, 40.0), Line::new(1, 2, 45.0)])?;
    let specs = [
        BusSpec::Pv { p: 1.0, v: 1.0 },
        BusSpec::Pq { p: -3.5, q: -0.5 },
        BusSpec::Slack { theta: 0.0, v: 1.0 },
    ];
    let flow = solve_power_flow(&net, &specs, None, NewtonOptions::default())?;
    print!("{}", output::powerflow_table(&flow, &[1, 2, 3]));
    println!("mismatch after solve: {:.1e}", flow.residual(&net));
    println!("total active injection: {:.1e}", flow.p.iter().sum::<f64>());
    Ok(())
}
