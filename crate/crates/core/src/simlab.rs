//! Time-domain simulation of the full differential-algebraic model with
//! fixed-step RK4 on the device states and a Newton solve of the bus
//! voltages at every stage.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::devices::{Device, DeviceState};
use crate::error::{Error, Result};
use crate::system::{Equilibrium, PowerSystem};

/// Tolerance on the power balance mismatch after an algebraic solve.
pub const ALGEBRAIC_TOL: f64 = 1e-10;
const ALGEBRAIC_MAX_ITER: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemState {
    pub t: f64,
    /// Concatenated device states.
    pub x: Vec<f64>,
    pub theta: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Sample {
    pub state: SystemState,
    /// Total storage `W` at this sample.
    pub storage: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    /// Set when the run stopped before `t_end`.
    pub diagnostic: Option<String>,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory holds the initial sample")
    }

    pub fn completed(&self) -> bool {
        self.diagnostic.is_none()
    }
}

/// Solve the bus voltages for fixed device states.
///
/// Newton on `grad_v U(x, v) = 0`, which is the power balance with the
/// reactive rows divided by `V`; its Jacobian is the algebraic Hessian block.
pub fn algebraic_solve(
    sys: &PowerSystem,
    x: &[f64],
    theta_guess: &[f64],
    v_guess: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let states = sys.unpack_states(x)?;
    let n = sys.n_bus();
    let mut theta = theta_guess.to_vec();
    let mut v = v_guess.to_vec();
    let anchored = sys.components.iter().any(|c| !c.device.is_load());
    for _ in 0..=ALGEBRAIC_MAX_ITER {
        let mismatch = sys.balance_mismatch(&states, &theta, &v);
        let residual = mismatch.iter().fold(0.0_f64, |a, r| a.max(r.abs()));
        if !residual.is_finite() {
            break;
        }
        if residual <= ALGEBRAIC_TOL {
            return Ok((theta, v));
        }
        let rhs = DVector::from_fn(2 * n, |k, _| if k % 2 == 0 { mismatch[k] } else { mismatch[k] / v[k / 2] });
        let jac = algebraic_hessian(sys, &states, &theta, &v);
        let step = if anchored {
            jac.lu().solve(&rhs)
        } else {
            None
        };
        let Some(step) = step else { break };
        for i in 0..n {
            theta[i] -= step[2 * i];
            v[i] -= step[2 * i + 1];
        }
        if v.iter().any(|&m| !(m > 0.0)) {
            break;
        }
    }
    let residual = sys
        .balance_mismatch(&states, &theta, &v)
        .iter()
        .fold(0.0_f64, |a, r| a.max(r.abs()));
    Err(Error::AlgebraicDivergence { residual })
}

/// Hessian block of the total energy over the bus variables only.
fn algebraic_hessian(sys: &PowerSystem, states: &[DeviceState], theta: &[f64], v: &[f64]) -> DMatrix<f64> {
    let mut h = crate::certificate::network_matrix(theta, v, sys.net.susceptance());
    for (i, (c, s)) in sys.components.iter().zip(states).enumerate() {
        let local = crate::devices::energy_hessian(c, s, theta[i], v[i], sys.omega0);
        let k = local.nrows() - 2;
        for a in 0..2 {
            for b in 0..2 {
                h[(2 * i + a, 2 * i + b)] += local[(k + a, k + b)];
            }
        }
    }
    h
}

/// Bregman storage of the total energy about a fixed equilibrium.
#[derive(Debug, Clone)]
pub struct StorageFunction {
    z_star: DVector<f64>,
    u_star: f64,
    grad_star: DVector<f64>,
}

impl StorageFunction {
    pub fn new(sys: &PowerSystem, eq: &Equilibrium) -> Self {
        let z_star = global_vector(sys, &sys.pack_states(&eq.states), &eq.flow.theta, &eq.flow.v);
        Self {
            z_star,
            u_star: sys.total_energy(&eq.states, &eq.flow.theta, &eq.flow.v),
            grad_star: sys.total_gradient(&eq.states, &eq.flow.theta, &eq.flow.v),
        }
    }

    pub fn value(&self, sys: &PowerSystem, x: &[f64], theta: &[f64], v: &[f64]) -> Result<f64> {
        let states = sys.unpack_states(x)?;
        let z = global_vector(sys, x, theta, v);
        Ok(sys.total_energy(&states, theta, v) - self.u_star - self.grad_star.dot(&(z - &self.z_star)))
    }
}

/// `W(x, v)` about `eq`.
pub fn storage_value(sys: &PowerSystem, eq: &Equilibrium, state: &SystemState) -> Result<f64> {
    StorageFunction::new(sys, eq).value(sys, &state.x, &state.theta, &state.v)
}

fn global_vector(sys: &PowerSystem, x: &[f64], theta: &[f64], v: &[f64]) -> DVector<f64> {
    let mut z = Vec::with_capacity(x.len() + 2 * sys.n_bus());
    z.extend_from_slice(x);
    for i in 0..sys.n_bus() {
        z.push(theta[i]);
        z.push(v[i]);
    }
    DVector::from_vec(z)
}

/// The equilibrium with `rad` added to the rotor angle at each listed bus,
/// bus voltages re-solved.
pub fn perturbed_start(sys: &PowerSystem, eq: &Equilibrium, perturbation: &[(usize, f64)]) -> Result<SystemState> {
    let layout = sys.layout();
    let mut x = sys.pack_states(&eq.states);
    for &(bus, rad) in perturbation {
        if bus >= sys.n_bus() || layout.state_dims[bus] == 0 {
            return Err(Error::InvalidParams(format!("bus {bus} has no rotor angle to perturb")));
        }
        x[layout.state_offsets[bus]] += rad;
    }
    let (theta, v) = algebraic_solve(sys, &x, &eq.flow.theta, &eq.flow.v)?;
    Ok(SystemState { t: 0.0, x, theta, v })
}

/// Distance from `state` to the equilibrium set through `eq`, i.e. after
/// removing the best uniform shift of all angles.
pub fn deviation(sys: &PowerSystem, eq: &Equilibrium, state: &SystemState) -> f64 {
    let layout = sys.layout();
    let x_star = sys.pack_states(&eq.states);
    let mut diff: Vec<f64> = state.x.iter().zip(&x_star).map(|(a, b)| a - b).collect();
    let mut angle_slots: Vec<usize> = sys
        .components
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.device.is_load())
        .map(|(i, _)| layout.state_offsets[i])
        .collect();
    for i in 0..sys.n_bus() {
        diff.push(state.theta[i] - eq.flow.theta[i]);
        diff.push(state.v[i] - eq.flow.v[i]);
        angle_slots.push(layout.n_states + 2 * i);
    }
    let shift = angle_slots.iter().map(|&k| diff[k]).sum::<f64>() / angle_slots.len() as f64;
    for &k in &angle_slots {
        diff[k] -= shift;
    }
    diff.iter().map(|d| d * d).sum::<f64>().sqrt()
}

/// Analytic storage rate: `-sum D delta'^2 / omega0 - sum tau E'^2 / (X - X')`.
pub fn dissipation_rate(sys: &PowerSystem, state: &SystemState) -> Result<f64> {
    let states = sys.unpack_states(&state.x)?;
    let layout = sys.layout();
    let dx = sys.state_derivative(&states, &state.theta, &state.v);
    let w0 = sys.omega0;
    let mut rate = 0.0;
    for (i, c) in sys.components.iter().enumerate() {
        let o = layout.state_offsets[i];
        match c.device {
            Device::TwoAxis(p) => {
                rate -= p.d * dx[o] * dx[o] / w0;
                rate -= p.tau_d * dx[o + 2] * dx[o + 2] / (p.x_d - p.x_d_prime);
                rate -= p.tau_q * dx[o + 3] * dx[o + 3] / (p.x_q - p.x_q_prime);
            }
            Device::Vsg(p) => rate -= p.d * dx[o] * dx[o] / w0,
            Device::Fdc(p) => rate -= p.d * dx[o] * dx[o] / w0,
            Device::Load(_) => {}
        }
    }
    Ok(rate)
}

/// One classical RK4 step of length `dt` (negative steps integrate backwards).
pub fn rk4_step(sys: &PowerSystem, state: &SystemState, dt: f64) -> Result<SystemState> {
    let eval = |x: &[f64], theta: &[f64], v: &[f64]| -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let (theta, v) = algebraic_solve(sys, x, theta, v)?;
        let states = sys.unpack_states(x)?;
        Ok((sys.state_derivative(&states, &theta, &v), theta, v))
    };
    let axpy = |x: &[f64], k: &[f64], h: f64| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + h * b).collect() };

    let (k1, th1, v1) = eval(&state.x, &state.theta, &state.v)?;
    let (k2, th2, v2) = eval(&axpy(&state.x, &k1, dt / 2.0), &th1, &v1)?;
    let (k3, th3, v3) = eval(&axpy(&state.x, &k2, dt / 2.0), &th2, &v2)?;
    let (k4, th4, v4) = eval(&axpy(&state.x, &k3, dt), &th3, &v3)?;
    let x: Vec<f64> = (0..state.x.len())
        .map(|k| state.x[k] + dt / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]))
        .collect();
    let (theta, v) = algebraic_solve(sys, &x, &th4, &v4)?;
    Ok(SystemState {
        t: state.t + dt,
        x,
        theta,
        v,
    })
}

/// Integrate from `start` to `t_end`, recording every `sample_every`-th step.
/// An algebraic failure truncates the trajectory and sets `diagnostic`.
pub fn simulate(
    sys: &PowerSystem,
    eq: &Equilibrium,
    start: SystemState,
    dt: f64,
    t_end: f64,
    sample_every: usize,
) -> Result<Trajectory> {
    if !(dt > 0.0 && dt.is_finite()) || !(t_end >= start.t) {
        return Err(Error::InvalidParams(format!("need dt > 0 and t_end >= t0 (dt={dt}, t_end={t_end})")));
    }
    let sample_every = sample_every.max(1);
    let storage = StorageFunction::new(sys, eq);
    let (theta, v) = algebraic_solve(sys, &start.x, &start.theta, &start.v)?;
    let mut state = SystemState { theta, v, ..start };
    let mut samples = vec![Sample {
        storage: storage.value(sys, &state.x, &state.theta, &state.v)?,
        state: state.clone(),
    }];
    let t0 = state.t;
    let steps = ((t_end - t0) / dt).round() as usize;
    for k in 1..=steps {
        state = match rk4_step(sys, &state, dt) {
            Ok(mut next) => {
                // avoid drift from repeated addition
                next.t = t0 + k as f64 * dt;
                next
            }
            Err(err) => {
                return Ok(Trajectory {
                    samples,
                    diagnostic: Some(format!("stopped at t = {:.6}: {err}", state.t)),
                })
            }
        };
        if k.is_multiple_of(sample_every) || k == steps {
            samples.push(Sample {
                storage: storage.value(sys, &state.x, &state.theta, &state.v)?,
                state: state.clone(),
            });
        }
    }
    Ok(Trajectory {
        samples,
        diagnostic: None,
    })
}
