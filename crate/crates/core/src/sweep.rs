//! Certificate and linearization verdicts over a grid of `(X_d, X_q)` at one bus.

use serde::Serialize;

use rayon::prelude::*;

use crate::certificate::{certify, Verdict};
use crate::config::{LoadMode, SweepConfig, SystemConfig};
use crate::devices::{Device, LoadParams};
use crate::error::{Error, Result};
use crate::lindyn::eig_verdict;
use crate::netmodel::PowerFlowSolution;
use crate::system::PowerSystem;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "GRIDCERT_THREADS";

/// Outcome at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PointVerdict {
    Stable,
    Unstable,
    Marginal,
    /// Operating point outside the device capability.
    Infeasible,
    /// Linearization has no isolated rotational mode or is ill-conditioned.
    Degenerate,
}

impl PointVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            PointVerdict::Stable => "stable",
            PointVerdict::Unstable => "unstable",
            PointVerdict::Marginal => "marginal",
            PointVerdict::Infeasible => "infeasible",
            PointVerdict::Degenerate => "degenerate",
        }
    }
}

impl From<Verdict> for PointVerdict {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Stable => PointVerdict::Stable,
            Verdict::Unstable => PointVerdict::Unstable,
            Verdict::Marginal => PointVerdict::Marginal,
        }
    }
}

impl std::fmt::Display for PointVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub x_d: f64,
    pub x_q: f64,
    pub certificate: PointVerdict,
    pub eigen: PointVerdict,
    /// Certificate's projected minimum eigenvalue, when it got that far.
    pub min_eig: Option<f64>,
    /// Largest non-rotational real part of the state matrix.
    pub max_real: Option<f64>,
}

/// Device layout used at every grid point, before the swept reactances are set.
pub fn sweep_devices(cfg: &SystemConfig, sweep: &SweepConfig, flow: &PowerFlowSolution) -> Result<Vec<Device>> {
    let target = cfg.bus_index(sweep.bus)?;
    let mut devices = cfg.devices(flow);
    if devices[target].is_load() {
        return Err(Error::Config(format!("sweep bus {} carries a load", sweep.bus)));
    }
    for i in sweep.load_bus_indices(cfg)? {
        match sweep.load_mode {
            LoadMode::Following => {
                if i == target {
                    return Err(Error::Config(format!(
                        "sweep bus {} cannot be grid-following",
                        sweep.bus
                    )));
                }
                devices[i] = Device::Load(LoadParams {
                    p_ref: flow.p[i],
                    q_ref: flow.q[i],
                });
            }
            LoadMode::Forming => {
                if devices[i].is_load() {
                    return Err(Error::Config(format!(
                        "bus {} needs a grid-forming device for load mode forming",
                        cfg.bus_id(i)
                    )));
                }
            }
        }
    }
    Ok(devices)
}

/// Evaluate both verdicts at one device assignment.
pub fn evaluate_point(
    cfg: &SystemConfig,
    flow: &PowerFlowSolution,
    devices: &[Device],
) -> Result<(PointVerdict, PointVerdict, Option<f64>, Option<f64>)> {
    let net = cfg.network()?;
    let (cert, min_eig) = match certify(flow, devices, &net) {
        Ok(r) => (r.verdict.into(), r.min_eig),
        Err(Error::OutsideCapability { .. }) => (PointVerdict::Infeasible, None),
        Err(e) => return Err(e),
    };
    let (eigen, max_real) = match PowerSystem::at_power_flow(net, devices, flow, cfg.omega0) {
        Ok((sys, eq)) => match eig_verdict(&sys, &eq) {
            Ok(an) => (an.verdict.into(), Some(an.max_real)),
            Err(Error::DegenerateEquilibrium { .. } | Error::IllConditioned { .. }) => {
                (PointVerdict::Degenerate, None)
            }
            Err(e) => return Err(e),
        },
        Err(Error::OutsideCapability { .. }) => (PointVerdict::Infeasible, None),
        Err(e) => return Err(e),
    };
    Ok((cert, eigen, min_eig, max_real))
}

fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Row-major sweep (`X_d` outer, `X_q` inner). The power flow is solved once;
/// rows come back in grid order regardless of scheduling.
pub fn run_sweep(cfg: &SystemConfig, sweep: &SweepConfig) -> Result<Vec<SweepRow>> {
    sweep.validate()?;
    let flow = cfg.solve_flow()?;
    let base = sweep_devices(cfg, sweep, &flow)?;
    let target = cfg.bus_index(sweep.bus)?;
    let xd = sweep.x_d.values();
    let xq = sweep.x_q.values();
    let points: Vec<(f64, f64)> = xd.iter().flat_map(|&d| xq.iter().map(move |&q| (d, q))).collect();

    let work = || {
        points
            .par_iter()
            .map(|&(x_d, x_q)| {
                let mut devices = base.clone();
                devices[target] = devices[target].with_reactances(x_d, x_q);
                if devices[target].validate().is_err() {
                    return Ok(SweepRow {
                        x_d,
                        x_q,
                        certificate: PointVerdict::Infeasible,
                        eigen: PointVerdict::Infeasible,
                        min_eig: None,
                        max_real: None,
                    });
                }
                let (certificate, eigen, min_eig, max_real) = evaluate_point(cfg, &flow, &devices)?;
                Ok(SweepRow {
                    x_d,
                    x_q,
                    certificate,
                    eigen,
                    min_eig,
                    max_real,
                })
            })
            .collect::<Result<Vec<_>>>()
    };
    match thread_cap() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}
