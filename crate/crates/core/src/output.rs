//! Text, CSV and JSON emitters shared by the binary and the examples.

use std::fmt::Write as _;

use nalgebra::Complex;
use serde::Serialize;

use crate::certificate::{StabilityReport, Verdict};
use crate::devices::DeviceState;
use crate::error::Result;
use crate::netmodel::PowerFlowSolution;
use crate::simlab::Trajectory;
use crate::sweep::SweepRow;
use crate::system::PowerSystem;

/// A value rounded to 12 significant digits, printed in its shortest form.
pub fn sig12(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    // normalize negative zero
    let rounded = if rounded == 0.0 { 0.0 } else { rounded };
    let mag = rounded.abs();
    if mag != 0.0 && !(1e-4..1e15).contains(&mag) {
        format!("{rounded:e}")
    } else {
        format!("{rounded}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(sig12).unwrap_or_default()
}

/// Comment line placed above CSV output unless suppressed.
pub fn timestamp_line() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("# generated by gridcert {} at unix time {secs}\n", env!("CARGO_PKG_VERSION"))
}

/// Per-bus table with four decimals.
pub fn powerflow_table(flow: &PowerFlowSolution, bus_ids: &[i64]) -> String {
    let mut out = format!("{:>5} {:>10} {:>10} {:>10} {:>10}\n", "bus", "theta", "V", "P", "Q");
    for i in 0..flow.n_bus() {
        let _ = writeln!(
            out,
            "{:>5} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            bus_ids[i],
            flow.theta[i] + 0.0,
            flow.v[i],
            flow.p[i] + 0.0,
            flow.q[i] + 0.0
        );
    }
    out
}

#[derive(Debug, Serialize)]
struct CertifyJson<'a> {
    gammas: Vec<Option<f64>>,
    min_eig: Option<f64>,
    verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    violating_bus: Option<i64>,
}

/// JSON report `{gammas, min_eig, verdict, witness?}`; bus references use
/// configuration ids.
pub fn certify_json(report: &StabilityReport, bus_ids: &[i64]) -> Result<String> {
    let doc = CertifyJson {
        gammas: report.gammas.clone(),
        min_eig: report.min_eig,
        verdict: report.verdict,
        witness: report.witness.as_deref(),
        violating_bus: report.violating_bus.map(|i| bus_ids[i]),
    };
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

pub fn spectrum_csv(spectrum: &[Complex<f64>]) -> String {
    let mut sorted = spectrum.to_vec();
    sorted.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    let mut out = String::from("re,im\n");
    for l in sorted {
        let _ = writeln!(out, "{},{}", sig12(l.re), sig12(l.im));
    }
    out
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("X_d,X_q,verdict_certificate,verdict_eigen,min_eig\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            sig12(r.x_d),
            sig12(r.x_q),
            r.certificate,
            r.eigen,
            opt(r.min_eig)
        );
    }
    out
}

/// One row per (sample, bus). `P, Q` are the device outputs; `W` is the
/// system storage and repeats across the buses of a sample.
pub fn trajectory_csv(sys: &PowerSystem, traj: &Trajectory, bus_ids: &[i64]) -> Result<String> {
    let mut out = String::from("t,bus,theta,V,P,Q,delta,omega,E_q,E_d,W\n");
    for sample in &traj.samples {
        let st = &sample.state;
        let states = sys.unpack_states(&st.x)?;
        let (p, q) = sys.device_injections(&states, &st.theta, &st.v);
        for (i, s) in states.iter().enumerate() {
            let (delta, omega, e_q, e_d) = match *s {
                DeviceState::TwoAxis { delta, omega, e_q, e_d } => (Some(delta), Some(omega), Some(e_q), Some(e_d)),
                DeviceState::Vsg { delta, omega } => (Some(delta), Some(omega), None, None),
                DeviceState::Fdc { delta } => (Some(delta), None, None, None),
                DeviceState::Load => (None, None, None, None),
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                sig12(st.t),
                bus_ids[i],
                sig12(st.theta[i]),
                sig12(st.v[i]),
                sig12(p[i]),
                sig12(q[i]),
                opt(delta),
                opt(omega),
                opt(e_q),
                opt(e_d),
                sig12(sample.storage)
            );
        }
    }
    Ok(out)
}
