//! Bus component models: the two-axis synchronous generator, the virtual
//! synchronous generator (VSG), frequency droop control (FDC) and the
//! constant-power (grid-following) load.
//!
//! Every model connects to its bus through `(theta, V)` and supplies `(P, Q)`
//! to the network. Generator-like models see the bus voltage in their own
//! rotor frame:
//!
//! ```text
//! V_q = V cos(delta - theta),   V_d = V sin(delta - theta)
//! ```

mod energy;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use energy::{energy, energy_gradient, energy_hessian, local_layout, LocalLayout};

/// Nominal angular frequency used when none is configured (60 Hz system).
pub const DEFAULT_OMEGA0: f64 = 2.0 * PI * 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoAxisParams {
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub tau_d: f64,
    pub tau_q: f64,
    #[serde(rename = "X_d")]
    pub x_d: f64,
    #[serde(rename = "X_q")]
    pub x_q: f64,
    #[serde(rename = "X_d_prime")]
    pub x_d_prime: f64,
    #[serde(rename = "X_q_prime")]
    pub x_q_prime: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VsgParams {
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "X_d")]
    pub x_d: f64,
    #[serde(rename = "X_q")]
    pub x_q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdcParams {
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "X_d")]
    pub x_d: f64,
    #[serde(rename = "X_q")]
    pub x_q: f64,
}

/// Constant consumed powers; negative values mean consumption.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadParams {
    #[serde(rename = "P_ref")]
    pub p_ref: f64,
    #[serde(rename = "Q_ref")]
    pub q_ref: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Device {
    TwoAxis(TwoAxisParams),
    Vsg(VsgParams),
    Fdc(FdcParams),
    Load(LoadParams),
}

fn positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("{name} must be positive, got {value}")))
    }
}

impl Device {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Device::TwoAxis(p) => {
                for (name, value) in [
                    ("M", p.m),
                    ("D", p.d),
                    ("tau_d", p.tau_d),
                    ("tau_q", p.tau_q),
                    ("X_d", p.x_d),
                    ("X_q", p.x_q),
                    ("X_d_prime", p.x_d_prime),
                    ("X_q_prime", p.x_q_prime),
                ] {
                    positive(name, value)?;
                }
                if !(p.x_d_prime < p.x_d && p.x_q_prime < p.x_q) {
                    return Err(Error::InvalidParams(format!(
                        "transient reactances must be below synchronous ones \
                         (X_d'={}, X_d={}, X_q'={}, X_q={})",
                        p.x_d_prime, p.x_d, p.x_q_prime, p.x_q
                    )));
                }
                Ok(())
            }
            Device::Vsg(p) => {
                positive("M", p.m)?;
                positive("D", p.d)?;
                positive("X_d", p.x_d)?;
                positive("X_q", p.x_q)
            }
            Device::Fdc(p) => {
                positive("D", p.d)?;
                positive("X_d", p.x_d)?;
                positive("X_q", p.x_q)
            }
            Device::Load(p) => {
                if p.p_ref.is_finite() && p.q_ref.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParams("load powers must be finite".into()))
                }
            }
        }
    }

    /// Number of dynamic states: 4, 2, 1 or 0.
    pub fn state_dim(&self) -> usize {
        match self {
            Device::TwoAxis(_) => 4,
            Device::Vsg(_) => 2,
            Device::Fdc(_) => 1,
            Device::Load(_) => 0,
        }
    }

    /// Synchronous reactances `(X_d, X_q)`; `None` for loads.
    pub fn reactances(&self) -> Option<(f64, f64)> {
        match *self {
            Device::TwoAxis(p) => Some((p.x_d, p.x_q)),
            Device::Vsg(p) => Some((p.x_d, p.x_q)),
            Device::Fdc(p) => Some((p.x_d, p.x_q)),
            Device::Load(_) => None,
        }
    }

    /// Reactances seen directly from the bus: transient ones for the
    /// two-axis model, synchronous ones for the inverter models.
    pub fn connection_reactances(&self) -> Option<(f64, f64)> {
        match *self {
            Device::TwoAxis(p) => Some((p.x_d_prime, p.x_q_prime)),
            other => other.reactances(),
        }
    }

    pub fn is_load(&self) -> bool {
        matches!(self, Device::Load(_))
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Device::TwoAxis(_) => "two_axis",
            Device::Vsg(_) => "vsg",
            Device::Fdc(_) => "fdc",
            Device::Load(_) => "load",
        }
    }

    /// Copy with the synchronous reactances replaced. Transient reactances of
    /// a two-axis model keep their ratio to the synchronous ones.
    pub fn with_reactances(&self, x_d: f64, x_q: f64) -> Device {
        match *self {
            Device::TwoAxis(p) => Device::TwoAxis(TwoAxisParams {
                x_d,
                x_q,
                x_d_prime: p.x_d_prime * x_d / p.x_d,
                x_q_prime: p.x_q_prime * x_q / p.x_q,
                ..p
            }),
            Device::Vsg(p) => Device::Vsg(VsgParams { x_d, x_q, ..p }),
            Device::Fdc(p) => Device::Fdc(FdcParams { x_d, x_q, ..p }),
            load => load,
        }
    }
}

/// Dynamic state of one component. `omega` is the per-unit deviation from
/// the nominal frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DeviceState {
    TwoAxis { delta: f64, omega: f64, e_q: f64, e_d: f64 },
    Vsg { delta: f64, omega: f64 },
    Fdc { delta: f64 },
    Load,
}

impl DeviceState {
    /// Flat layout `[delta, omega, E_q, E_d]` truncated to the model's states.
    pub fn to_vec(&self) -> Vec<f64> {
        match *self {
            DeviceState::TwoAxis { delta, omega, e_q, e_d } => vec![delta, omega, e_q, e_d],
            DeviceState::Vsg { delta, omega } => vec![delta, omega],
            DeviceState::Fdc { delta } => vec![delta],
            DeviceState::Load => vec![],
        }
    }

    pub fn from_slice(device: &Device, x: &[f64]) -> Result<Self> {
        if x.len() != device.state_dim() {
            return Err(Error::Dimension(format!(
                "{} state has {} entries, got {}",
                device.kind_name(),
                device.state_dim(),
                x.len()
            )));
        }
        Ok(match device {
            Device::TwoAxis(_) => DeviceState::TwoAxis {
                delta: x[0],
                omega: x[1],
                e_q: x[2],
                e_d: x[3],
            },
            Device::Vsg(_) => DeviceState::Vsg {
                delta: x[0],
                omega: x[1],
            },
            Device::Fdc(_) => DeviceState::Fdc { delta: x[0] },
            Device::Load(_) => DeviceState::Load,
        })
    }

    pub fn delta(&self) -> Option<f64> {
        match *self {
            DeviceState::TwoAxis { delta, .. }
            | DeviceState::Vsg { delta, .. }
            | DeviceState::Fdc { delta } => Some(delta),
            DeviceState::Load => None,
        }
    }

    pub fn omega(&self) -> Option<f64> {
        match *self {
            DeviceState::TwoAxis { omega, .. } | DeviceState::Vsg { omega, .. } => Some(omega),
            _ => None,
        }
    }
}

/// Constant mechanical power and field voltage references.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Setpoint {
    pub p_m: f64,
    pub v_fd: f64,
}

/// Stationary `(V, P, Q)` of one bus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BusOperatingPoint {
    pub v: f64,
    pub p: f64,
    pub q: f64,
}

impl BusOperatingPoint {
    pub fn new(v: f64, p: f64, q: f64) -> Self {
        Self { v, p, q }
    }
}

/// Stationary phase difference `delta - theta` between a generator-like
/// device and its bus.
pub fn internal_phase(rho: &BusOperatingPoint, x_q: f64) -> Result<f64> {
    let denominator = rho.q + rho.v * rho.v / x_q;
    if !(denominator > 0.0) {
        return Err(Error::OutsideCapability {
            bus: None,
            denominator,
        });
    }
    Ok((rho.p / denominator).atan())
}

/// `(P_m, V_fd)` that make `rho` stationary. Independent of the bus angle.
pub fn stationary_setpoint(rho: &BusOperatingPoint, x_d: f64, x_q: f64) -> Result<Setpoint> {
    let phi = internal_phase(rho, x_q)?;
    let (s, c) = phi.sin_cos();
    Ok(Setpoint {
        p_m: rho.p,
        v_fd: x_d * rho.p / rho.v * s + (x_d * rho.q / rho.v + rho.v) * c,
    })
}

/// A device together with the references that hold it at its operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub device: Device,
    pub setpoint: Setpoint,
}

impl Component {
    /// Validate the device and derive its setpoint from `rho`. A load keeps
    /// its own references; its setpoint only mirrors `P_ref`.
    pub fn at_operating_point(device: Device, rho: &BusOperatingPoint) -> Result<Self> {
        device.validate()?;
        let setpoint = match device {
            Device::Load(p) => Setpoint {
                p_m: p.p_ref,
                v_fd: 0.0,
            },
            other => {
                let (x_d, x_q) = other.reactances().expect("generator-like device");
                stationary_setpoint(rho, x_d, x_q)?
            }
        };
        Ok(Self { device, setpoint })
    }
}

/// Equilibrium state for a stationary bus angle `theta` and operating point `rho`.
pub fn stationary_state(theta: f64, rho: &BusOperatingPoint, component: &Component) -> Result<DeviceState> {
    let device = &component.device;
    let Some((_, x_q)) = device.reactances() else {
        return Ok(DeviceState::Load);
    };
    let phi = internal_phase(rho, x_q)?;
    let delta = theta + phi;
    Ok(match *device {
        Device::TwoAxis(p) => {
            let (s, c) = phi.sin_cos();
            let (v_d, v_q) = (rho.v * s, rho.v * c);
            DeviceState::TwoAxis {
                delta,
                omega: 0.0,
                e_q: (p.x_d_prime * component.setpoint.v_fd + (p.x_d - p.x_d_prime) * v_q) / p.x_d,
                e_d: (1.0 - p.x_q_prime / p.x_q) * v_d,
            }
        }
        Device::Vsg(_) => DeviceState::Vsg { delta, omega: 0.0 },
        Device::Fdc(_) => DeviceState::Fdc { delta },
        Device::Load(_) => unreachable!(),
    })
}

/// `(V_d, V_q)`: bus voltage in the device frame.
pub fn frame_voltages(delta: f64, theta: f64, v: f64) -> (f64, f64) {
    let (s, c) = (delta - theta).sin_cos();
    (v * s, v * c)
}

/// Active and reactive power supplied to the bus.
pub fn output_power(component: &Component, state: &DeviceState, theta: f64, v: f64) -> (f64, f64) {
    match (component.device, *state) {
        (Device::Load(p), _) => (p.p_ref, p.q_ref),
        (Device::TwoAxis(p), DeviceState::TwoAxis { delta, e_q, e_d, .. }) => {
            let (v_d, v_q) = frame_voltages(delta, theta, v);
            let (xd, xq) = (p.x_d_prime, p.x_q_prime);
            (
                e_q * v_d / xd - e_d * v_q / xq + (1.0 / xq - 1.0 / xd) * v_d * v_q,
                e_q * v_q / xd + e_d * v_d / xq - (v_d * v_d / xq + v_q * v_q / xd),
            )
        }
        (device, state) => {
            let (x_d, x_q) = device.reactances().expect("generator-like device");
            let delta = state.delta().expect("state matches device");
            let (v_d, v_q) = frame_voltages(delta, theta, v);
            let v_fd = component.setpoint.v_fd;
            (
                v_fd * v_d / x_d + (1.0 / x_q - 1.0 / x_d) * v_d * v_q,
                v_fd * v_q / x_d - (v_d * v_d / x_q + v_q * v_q / x_d),
            )
        }
    }
}

/// Right-hand side of the component dynamics, in the `to_vec` layout.
pub fn state_derivative(
    component: &Component,
    state: &DeviceState,
    theta: f64,
    v: f64,
    omega0: f64,
) -> Vec<f64> {
    let (p_out, _) = output_power(component, state, theta, v);
    let sp = component.setpoint;
    match (component.device, *state) {
        (Device::TwoAxis(p), DeviceState::TwoAxis { delta, omega, e_q, e_d }) => {
            let (v_d, v_q) = frame_voltages(delta, theta, v);
            let i_d = (e_q - v_q) / p.x_d_prime;
            let i_q = (v_d - e_d) / p.x_q_prime;
            vec![
                omega0 * omega,
                (-p.d * omega - p_out + sp.p_m) / p.m,
                (-e_q - (p.x_d - p.x_d_prime) * i_d + sp.v_fd) / p.tau_d,
                (-e_d + (p.x_q - p.x_q_prime) * i_q) / p.tau_q,
            ]
        }
        (Device::Vsg(p), DeviceState::Vsg { omega, .. }) => {
            vec![omega0 * omega, (-p.d * omega - p_out + sp.p_m) / p.m]
        }
        (Device::Fdc(p), DeviceState::Fdc { .. }) => vec![omega0 * (sp.p_m - p_out) / p.d],
        (Device::Load(_), _) => vec![],
        (device, state) => panic!("state {state:?} does not match device {}", device.kind_name()),
    }
}

/// Closed-form Hessian blocks of a VSG/FDC energy at a stationary point,
/// over `(delta, theta, V)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedHessian {
    pub delta_delta: f64,
    pub delta_v: [f64; 2],
    pub v_v: [[f64; 2]; 2],
}

impl ReducedHessian {
    /// The full symmetric 3x3 matrix over `(delta, theta, V)`.
    pub fn to_matrix(&self) -> nalgebra::Matrix3<f64> {
        nalgebra::Matrix3::new(
            self.delta_delta,
            self.delta_v[0],
            self.delta_v[1],
            self.delta_v[0],
            self.v_v[0][0],
            self.v_v[0][1],
            self.delta_v[1],
            self.v_v[1][0],
            self.v_v[1][1],
        )
    }
}

pub fn reduced_hessian_blocks(rho: &BusOperatingPoint, x_d: f64, x_q: f64) -> Result<ReducedHessian> {
    let phi = internal_phase(rho, x_q)?;
    let (s, c) = phi.sin_cos();
    let (v_d, v_q) = (rho.v * s, rho.v * c);
    let h = v_q * v_q / x_q + v_d * v_d / x_d + rho.q;
    let k = (rho.p + (1.0 / x_q - 1.0 / x_d) * v_d * v_q) / rho.v;
    let m = (v_d * v_d / x_q + v_q * v_q / x_d) / (rho.v * rho.v);
    Ok(ReducedHessian {
        delta_delta: h,
        delta_v: [-h, k],
        v_v: [[h, -k], [-k, m]],
    })
}
