//! JSON system description and sweep settings.
//!
//! ```json
//! {
//!   "omega0": 376.99111843077515,
//!   "buses": [
//!     { "id": 1,
//!       "device": { "kind": "two_axis", "M": 0.2, "D": 1.0, "tau_d": 5.0, "tau_q": 1.0,
//!                   "X_d": 0.10, "X_q": 0.069, "X_d_prime": 0.05, "X_q_prime": 0.03 },
//!       "spec": { "type": "pv", "P": 1.0, "V": 1.0 } },
//!     { "id": 2, "device": { "kind": "load" }, "spec": { "type": "pq", "P": -3.5, "Q": -0.5 } },
//!     { "id": 3, "device": { "kind": "vsg", "M": 0.2, "D": 1.0, "X_d": 0.10, "X_q": 0.069 },
//!       "spec": { "type": "slack", "theta": 0.0, "V": 1.0 } }
//!   ],
//!   "lines": [ { "from": 1, "to": 2, "b": 40.0 }, { "from": 2, "to": 3, "b": 45.0 } ]
//! }
//! ```
//!
//! Values are per-unit, angles in radians. A `load` consumes whatever the
//! power flow assigns to its bus.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::devices::{Device, FdcParams, LoadParams, TwoAxisParams, VsgParams, DEFAULT_OMEGA0};
use crate::error::{Error, Result};
use crate::netmodel::{solve_power_flow, BusSpec, Line, Network, NewtonOptions, PowerFlowSolution};
use crate::system::{Equilibrium, PowerSystem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    #[serde(default = "default_omega0")]
    pub omega0: f64,
    pub buses: Vec<BusConfig>,
    #[serde(default)]
    pub lines: Vec<LineConfig>,
}

fn default_omega0() -> f64 {
    DEFAULT_OMEGA0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusConfig {
    pub id: i64,
    pub device: DeviceConfig,
    pub spec: SpecConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeviceConfig {
    TwoAxis(TwoAxisParams),
    Vsg(VsgParams),
    Fdc(FdcParams),
    Load,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum SpecConfig {
    Slack {
        #[serde(default)]
        theta: f64,
        #[serde(rename = "V")]
        v: f64,
    },
    Pv {
        #[serde(rename = "P")]
        p: f64,
        #[serde(rename = "V")]
        v: f64,
    },
    Pq {
        #[serde(rename = "P")]
        p: f64,
        #[serde(rename = "Q")]
        q: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineConfig {
    pub from: i64,
    pub to: i64,
    pub b: f64,
}

impl SystemConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SystemConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.buses.is_empty() {
            return Err(Error::Config("no buses".into()));
        }
        if !(self.omega0 > 0.0 && self.omega0.is_finite()) {
            return Err(Error::Config(format!("omega0 must be positive, got {}", self.omega0)));
        }
        let mut seen = HashMap::new();
        for (k, bus) in self.buses.iter().enumerate() {
            if seen.insert(bus.id, k).is_some() {
                return Err(Error::Config(format!("duplicate bus id {}", bus.id)));
            }
            if let Some(dev) = bus.device.template() {
                dev.validate()
                    .map_err(|e| Error::Config(format!("bus {}: {e}", bus.id)))?;
            }
        }
        let slacks = self
            .buses
            .iter()
            .filter(|b| matches!(b.spec, SpecConfig::Slack { .. }))
            .count();
        if slacks != 1 {
            return Err(Error::Config(format!("exactly one slack bus required, found {slacks}")));
        }
        for line in &self.lines {
            for id in [line.from, line.to] {
                if !seen.contains_key(&id) {
                    return Err(Error::Config(format!("line references unknown bus id {id}")));
                }
            }
        }
        Ok(())
    }

    /// Position of a bus id in `buses`.
    pub fn bus_index(&self, id: i64) -> Result<usize> {
        self.buses
            .iter()
            .position(|b| b.id == id)
            .ok_or_else(|| Error::Config(format!("unknown bus id {id}")))
    }

    pub fn bus_id(&self, index: usize) -> i64 {
        self.buses[index].id
    }

    pub fn network(&self) -> Result<Network> {
        let lines = self
            .lines
            .iter()
            .map(|l| Ok(Line::new(self.bus_index(l.from)?, self.bus_index(l.to)?, l.b)))
            .collect::<Result<Vec<_>>>()?;
        Network::new(self.buses.len(), lines)
    }

    pub fn bus_specs(&self) -> Vec<BusSpec> {
        self.buses
            .iter()
            .map(|b| match b.spec {
                SpecConfig::Slack { theta, v } => BusSpec::Slack { theta, v },
                SpecConfig::Pv { p, v } => BusSpec::Pv { p, v },
                SpecConfig::Pq { p, q } => BusSpec::Pq { p, q },
            })
            .collect()
    }

    pub fn solve_flow(&self) -> Result<PowerFlowSolution> {
        solve_power_flow(&self.network()?, &self.bus_specs(), None, NewtonOptions::default())
    }

    /// Devices at each bus; loads take their references from `flow`.
    pub fn devices(&self, flow: &PowerFlowSolution) -> Vec<Device> {
        self.buses
            .iter()
            .enumerate()
            .map(|(i, b)| b.device.instantiate(flow.p[i], flow.q[i]))
            .collect()
    }

    /// Solve the power flow and attach all devices at it.
    pub fn build(&self) -> Result<(PowerSystem, Equilibrium)> {
        let flow = self.solve_flow()?;
        self.build_at(&flow)
    }

    pub fn build_at(&self, flow: &PowerFlowSolution) -> Result<(PowerSystem, Equilibrium)> {
        PowerSystem::at_power_flow(self.network()?, &self.devices(flow), flow, self.omega0)
    }
}

impl DeviceConfig {
    /// Device parameters for non-load buses.
    pub fn template(&self) -> Option<Device> {
        match *self {
            DeviceConfig::TwoAxis(p) => Some(Device::TwoAxis(p)),
            DeviceConfig::Vsg(p) => Some(Device::Vsg(p)),
            DeviceConfig::Fdc(p) => Some(Device::Fdc(p)),
            DeviceConfig::Load => None,
        }
    }

    pub fn instantiate(&self, p: f64, q: f64) -> Device {
        self.template()
            .unwrap_or(Device::Load(LoadParams { p_ref: p, q_ref: q }))
    }
}

/// What occupies the consuming buses during a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadMode {
    /// Keep the configured grid-forming device.
    Forming,
    /// Replace it with a constant-power load.
    Following,
}

impl std::str::FromStr for LoadMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forming" | "grid_forming" => Ok(LoadMode::Forming),
            "following" | "grid_following" => Ok(LoadMode::Following),
            other => Err(Error::Config(format!("unknown load mode {other:?}"))),
        }
    }
}

/// `start:end:steps`, inclusive of both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRange {
    pub start: f64,
    pub end: f64,
    pub steps: usize,
}

impl GridRange {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        (0..self.steps)
            .map(|k| self.start + (self.end - self.start) * k as f64 / (self.steps - 1) as f64)
            .collect()
    }

    pub fn validate(&self, allow_single: bool) -> Result<()> {
        let min_steps = if allow_single { 1 } else { 2 };
        if !(self.start > 0.0 && self.end > 0.0 && self.start.is_finite() && self.end.is_finite()) {
            return Err(Error::Config("sweep ranges must be positive".into()));
        }
        if self.steps < min_steps {
            return Err(Error::Config(format!("sweep needs at least {min_steps} steps")));
        }
        Ok(())
    }
}

impl std::str::FromStr for GridRange {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::Config(format!("expected a:b:n, got {s:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        Ok(GridRange {
            start: parts[0].trim().parse().map_err(|_| bad())?,
            end: parts[1].trim().parse().map_err(|_| bad())?,
            steps: parts[2].trim().parse().map_err(|_| bad())?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Bus id whose `(X_d, X_q)` is varied.
    pub bus: i64,
    pub x_d: GridRange,
    pub x_q: GridRange,
    pub load_mode: LoadMode,
    /// Buses the load mode applies to; defaults to every PQ bus.
    #[serde(default)]
    pub load_buses: Option<Vec<i64>>,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        // a 1x1 grid is allowed as a degenerate single-point check
        let single = self.x_d.steps == 1 && self.x_q.steps == 1;
        self.x_d.validate(single)?;
        self.x_q.validate(single)
    }

    pub fn load_bus_indices(&self, cfg: &SystemConfig) -> Result<Vec<usize>> {
        match &self.load_buses {
            Some(ids) => ids.iter().map(|&id| cfg.bus_index(id)).collect(),
            None => Ok(cfg
                .buses
                .iter()
                .enumerate()
                .filter(|(_, b)| matches!(b.spec, SpecConfig::Pq { .. }))
                .map(|(i, _)| i)
                .collect()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "buses": [
            {"id": 7, "device": {"kind": "vsg", "M": 0.2, "D": 1.0, "X_d": 0.1, "X_q": 0.069},
             "spec": {"type": "slack", "V": 1.0}},
            {"id": 9, "device": {"kind": "load"}, "spec": {"type": "pq", "P": -0.5, "Q": -0.1}}
        ],
        "lines": [{"from": 7, "to": 9, "b": 10.0}]
    }"#;

    #[test]
    fn parses_and_builds() {
        let cfg = SystemConfig::from_json(SAMPLE).unwrap();
        assert_eq!(cfg.omega0, DEFAULT_OMEGA0);
        assert_eq!(cfg.bus_index(9).unwrap(), 1);
        let (sys, eq) = cfg.build().unwrap();
        assert!(matches!(sys.components[1].device, Device::Load(p) if (p.p_ref + 0.5).abs() < 1e-9));
        sys.check_equilibrium(&eq).unwrap();
    }

    #[test]
    fn rejects_two_slacks() {
        let text = SAMPLE.replace(r#""type": "pq", "P": -0.5, "Q": -0.1"#, r#""type": "slack", "V": 1.0"#);
        assert!(matches!(SystemConfig::from_json(&text), Err(Error::Config(_))));
    }

    #[test]
    fn rejects_unknown_line_bus() {
        let text = SAMPLE.replace(r#""to": 9"#, r#""to": 4"#);
        assert!(SystemConfig::from_json(&text).is_err());
    }

    #[test]
    fn range_parsing() {
        let r: GridRange = "0.05:0.5:10".parse().unwrap();
        assert_eq!(r.steps, 10);
        let v = r.values();
        assert_eq!(v.len(), 10);
        assert!((v[9] - 0.5).abs() < 1e-15 && v[0] == 0.05);
        assert!("1:2".parse::<GridRange>().is_err());
        assert!(GridRange { start: -1.0, end: 1.0, steps: 3 }.validate(false).is_err());
        assert!(GridRange { start: 1.0, end: 1.0, steps: 1 }.validate(false).is_err());
    }
}
