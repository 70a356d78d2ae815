use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gridcert::config::{GridRange, LoadMode, SweepConfig, SystemConfig};
use gridcert::{certify, eig_verdict, output, simlab, sweep, Error, Result};

/// Small-signal stability of power systems with mixed generation.
#[derive(Parser)]
#[command(name = "gridcert", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// System description (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Write the result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Omit the timestamp comment line from CSV output.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the power flow and print theta, V, P, Q per bus.
    Powerflow(Common),
    /// Evaluate the stability certificate; JSON report.
    Certify(Common),
    /// Spectrum of the linearized dynamics as CSV.
    Eigen(Common),
    /// Integrate the perturbed dynamics; trajectory CSV.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Rotor-angle kick `BUS=RAD` (bus id); repeatable.
        #[arg(long, value_parser = parse_perturb)]
        perturb: Vec<(i64, f64)>,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 10.0)]
        t_end: f64,
        /// Record every n-th step.
        #[arg(long, default_value_t = 1)]
        sample_every: usize,
    },
    /// Verdicts over a grid of synchronous reactances at one bus.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        sweep_bus: i64,
        #[arg(long)]
        xd_range: GridRange,
        #[arg(long)]
        xq_range: GridRange,
        #[arg(long, default_value = "forming")]
        load_mode: LoadMode,
        /// Buses the load mode applies to (default: all PQ buses).
        #[arg(long, value_delimiter = ',')]
        load_bus: Option<Vec<i64>>,
    },
}

fn parse_perturb(s: &str) -> std::result::Result<(i64, f64), String> {
    let (bus, rad) = s.split_once('=').ok_or_else(|| format!("expected BUS=RAD, got {s:?}"))?;
    Ok((
        bus.trim().parse().map_err(|_| format!("bad bus id {bus:?}"))?,
        rad.trim().parse().map_err(|_| format!("bad angle {rad:?}"))?,
    ))
}

fn emit(common: &Common, text: &str, csv: bool) -> Result<()> {
    let mut body = String::new();
    if csv && !common.no_timestamp {
        body.push_str(&output::timestamp_line());
    }
    body.push_str(text);
    match &common.out {
        Some(path) => std::fs::write(path, body)?,
        None => print!("{body}"),
    }
    Ok(())
}

fn load(path: &Path) -> Result<SystemConfig> {
    SystemConfig::load(path)
}

/// Replace bus indices in capability errors with configuration ids.
fn describe(err: &Error, cfg: Option<&SystemConfig>) -> String {
    match (err, cfg) {
        (Error::OutsideCapability { bus: Some(i), denominator }, Some(cfg)) => format!(
            "operating point outside generator capability at bus {} (Q + V^2/X_q = {denominator:.6e})",
            cfg.bus_id(*i)
        ),
        _ => err.to_string(),
    }
}

fn run(cli: Cli) -> std::result::Result<i32, (Error, Option<SystemConfig>)> {
    let with = |cfg: &SystemConfig| {
        let cfg = cfg.clone();
        move |e: Error| (e, Some(cfg))
    };
    match cli.command {
        Command::Powerflow(common) => {
            let cfg = load(&common.config).map_err(|e| (e, None))?;
            let flow = cfg.solve_flow().map_err(with(&cfg))?;
            let ids: Vec<i64> = cfg.buses.iter().map(|b| b.id).collect();
            emit(&common, &output::powerflow_table(&flow, &ids), false).map_err(with(&cfg))?;
            Ok(0)
        }
        Command::Certify(common) => {
            let cfg = load(&common.config).map_err(|e| (e, None))?;
            let flow = cfg.solve_flow().map_err(with(&cfg))?;
            let report = certify(&flow, &cfg.devices(&flow), &cfg.network().map_err(with(&cfg))?)
                .map_err(with(&cfg))?;
            let ids: Vec<i64> = cfg.buses.iter().map(|b| b.id).collect();
            let json = output::certify_json(&report, &ids).map_err(with(&cfg))?;
            emit(&common, &json, false).map_err(with(&cfg))?;
            Ok(report.verdict.exit_code())
        }
        Command::Eigen(common) => {
            let cfg = load(&common.config).map_err(|e| (e, None))?;
            let (sys, eq) = cfg.build().map_err(with(&cfg))?;
            let an = eig_verdict(&sys, &eq).map_err(with(&cfg))?;
            emit(&common, &output::spectrum_csv(&an.spectrum), true).map_err(with(&cfg))?;
            eprintln!("verdict: {}", an.verdict);
            Ok(an.verdict.exit_code())
        }
        Command::Simulate {
            common,
            perturb,
            dt,
            t_end,
            sample_every,
        } => {
            let cfg = load(&common.config).map_err(|e| (e, None))?;
            let (sys, eq) = cfg.build().map_err(with(&cfg))?;
            let kicks = perturb
                .iter()
                .map(|&(id, rad)| Ok((cfg.bus_index(id)?, rad)))
                .collect::<Result<Vec<_>>>()
                .map_err(with(&cfg))?;
            let start = simlab::perturbed_start(&sys, &eq, &kicks).map_err(with(&cfg))?;
            let traj = simlab::simulate(&sys, &eq, start, dt, t_end, sample_every).map_err(with(&cfg))?;
            let ids: Vec<i64> = cfg.buses.iter().map(|b| b.id).collect();
            let csv = output::trajectory_csv(&sys, &traj, &ids).map_err(with(&cfg))?;
            emit(&common, &csv, true).map_err(with(&cfg))?;
            if let Some(diag) = &traj.diagnostic {
                eprintln!("{diag}");
                return Ok(2);
            }
            Ok(0)
        }
        Command::Sweep {
            common,
            sweep_bus,
            xd_range,
            xq_range,
            load_mode,
            load_bus,
        } => {
            let cfg = load(&common.config).map_err(|e| (e, None))?;
            let sweep_cfg = SweepConfig {
                bus: sweep_bus,
                x_d: xd_range,
                x_q: xq_range,
                load_mode,
                load_buses: load_bus,
            };
            let rows = sweep::run_sweep(&cfg, &sweep_cfg).map_err(with(&cfg))?;
            emit(&common, &output::sweep_csv(&rows), true).map_err(with(&cfg))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err((err, cfg)) => {
            eprintln!("error: {}", describe(&err, cfg.as_ref()));
            ExitCode::from(2)
        }
    }
}
