//! A network with one component per bus, and the global variable layout
//! `z = (x_0, x_1, ..., x_{N-1}, theta_0, V_0, ..., theta_{N-1}, V_{N-1})`
//! shared by the linearization and the simulator.

use nalgebra::{DMatrix, DVector};

use crate::certificate::network_matrix;
use crate::devices::{
    self, local_layout, output_power, stationary_state, state_derivative, BusOperatingPoint, Component,
    Device, DeviceState,
};
use crate::error::{Error, Result};
use crate::netmodel::{power_balance, Network, PowerFlowSolution};

/// Tolerance on equilibrium consistency checks.
pub const EQUILIBRIUM_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct PowerSystem {
    pub net: Network,
    pub components: Vec<Component>,
    pub omega0: f64,
}

/// A stationary power flow together with the matching device states.
#[derive(Debug, Clone)]
pub struct Equilibrium {
    pub flow: PowerFlowSolution,
    pub states: Vec<DeviceState>,
}

impl Equilibrium {
    /// Phase-shifted member of the same equilibrium set.
    pub fn shifted(&self, c: f64) -> Self {
        let states = self
            .states
            .iter()
            .map(|s| match *s {
                DeviceState::TwoAxis { delta, omega, e_q, e_d } => DeviceState::TwoAxis {
                    delta: delta + c,
                    omega,
                    e_q,
                    e_d,
                },
                DeviceState::Vsg { delta, omega } => DeviceState::Vsg { delta: delta + c, omega },
                DeviceState::Fdc { delta } => DeviceState::Fdc { delta: delta + c },
                DeviceState::Load => DeviceState::Load,
            })
            .collect();
        Self {
            flow: self.flow.shifted(c),
            states,
        }
    }
}

/// Offsets of each bus's variables in the global vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableLayout {
    pub state_offsets: Vec<usize>,
    pub state_dims: Vec<usize>,
    pub n_states: usize,
    pub n_bus: usize,
}

impl VariableLayout {
    pub fn new(components: &[Component]) -> Self {
        let state_dims: Vec<usize> = components.iter().map(|c| c.device.state_dim()).collect();
        let mut state_offsets = Vec::with_capacity(state_dims.len());
        let mut acc = 0;
        for d in &state_dims {
            state_offsets.push(acc);
            acc += d;
        }
        Self {
            state_offsets,
            state_dims,
            n_states: acc,
            n_bus: components.len(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n_states + 2 * self.n_bus
    }

    pub fn theta(&self, bus: usize) -> usize {
        self.n_states + 2 * bus
    }

    pub fn v(&self, bus: usize) -> usize {
        self.n_states + 2 * bus + 1
    }

    pub fn state_range(&self, bus: usize) -> std::ops::Range<usize> {
        self.state_offsets[bus]..self.state_offsets[bus] + self.state_dims[bus]
    }

    /// Global indices of a component's local variables `(state..., theta, V)`.
    pub fn local_to_global(&self, bus: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = self.state_range(bus).collect();
        idx.push(self.theta(bus));
        idx.push(self.v(bus));
        idx
    }

    pub fn algebraic_indices(&self) -> Vec<usize> {
        (self.n_states..self.dim()).collect()
    }

    pub fn state_indices(&self) -> Vec<usize> {
        (0..self.n_states).collect()
    }
}

impl PowerSystem {
    /// Attach devices to the buses of a solved power flow and derive their
    /// setpoints and equilibrium states.
    ///
    /// Load references must reproduce the flow's `(P, Q)` at their bus.
    pub fn at_power_flow(
        net: Network,
        devices: &[Device],
        flow: &PowerFlowSolution,
        omega0: f64,
    ) -> Result<(Self, Equilibrium)> {
        let n = net.n_bus();
        if devices.len() != n || flow.n_bus() != n {
            return Err(Error::Dimension(format!(
                "{} devices / {} flow buses for {} network buses",
                devices.len(),
                flow.n_bus(),
                n
            )));
        }
        if !(omega0 > 0.0 && omega0.is_finite()) {
            return Err(Error::InvalidParams(format!("omega0 must be positive, got {omega0}")));
        }
        if devices.iter().all(Device::is_load) {
            return Err(Error::InvalidParams(
                "at least one bus needs a generator or grid-forming device".into(),
            ));
        }
        let mut components = Vec::with_capacity(n);
        let mut states = Vec::with_capacity(n);
        for (i, device) in devices.iter().enumerate() {
            let rho = BusOperatingPoint::new(flow.v[i], flow.p[i], flow.q[i]);
            if let Device::Load(p) = device {
                let mismatch = (p.p_ref - rho.p).abs().max((p.q_ref - rho.q).abs());
                if mismatch > EQUILIBRIUM_TOL {
                    return Err(Error::InconsistentEquilibrium {
                        derivative: 0.0,
                        balance: mismatch,
                    });
                }
            }
            let comp = Component::at_operating_point(*device, &rho).map_err(|e| e.at_bus(i))?;
            states.push(stationary_state(flow.theta[i], &rho, &comp).map_err(|e| e.at_bus(i))?);
            components.push(comp);
        }
        Ok((
            Self {
                net,
                components,
                omega0,
            },
            Equilibrium {
                flow: flow.clone(),
                states,
            },
        ))
    }

    pub fn n_bus(&self) -> usize {
        self.net.n_bus()
    }

    pub fn devices(&self) -> Vec<Device> {
        self.components.iter().map(|c| c.device).collect()
    }

    pub fn layout(&self) -> VariableLayout {
        VariableLayout::new(&self.components)
    }

    pub fn pack_states(&self, states: &[DeviceState]) -> Vec<f64> {
        states.iter().flat_map(|s| s.to_vec()).collect()
    }

    pub fn unpack_states(&self, x: &[f64]) -> Result<Vec<DeviceState>> {
        let layout = self.layout();
        if x.len() != layout.n_states {
            return Err(Error::Dimension(format!(
                "state vector has {} entries, expected {}",
                x.len(),
                layout.n_states
            )));
        }
        self.components
            .iter()
            .enumerate()
            .map(|(i, c)| DeviceState::from_slice(&c.device, &x[layout.state_range(i)]))
            .collect()
    }

    /// Power supplied by each device at the given bus voltages.
    pub fn device_injections(&self, states: &[DeviceState], theta: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        self.components
            .iter()
            .zip(states)
            .enumerate()
            .map(|(i, (c, s))| output_power(c, s, theta[i], v[i]))
            .unzip()
    }

    /// Network injection minus device supply, interleaved `(P_0, Q_0, ...)`.
    pub fn balance_mismatch(&self, states: &[DeviceState], theta: &[f64], v: &[f64]) -> Vec<f64> {
        let (p_net, q_net) = power_balance(theta, v, &self.net);
        let (p_dev, q_dev) = self.device_injections(states, theta, v);
        (0..self.n_bus())
            .flat_map(|i| [p_net[i] - p_dev[i], q_net[i] - q_dev[i]])
            .collect()
    }

    /// Concatenated state derivative.
    pub fn state_derivative(&self, states: &[DeviceState], theta: &[f64], v: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .zip(states)
            .enumerate()
            .flat_map(|(i, (c, s))| state_derivative(c, s, theta[i], v[i], self.omega0))
            .collect()
    }

    /// `(max |dx/dt|, max |power mismatch|)` at an equilibrium candidate.
    pub fn equilibrium_residuals(&self, eq: &Equilibrium) -> (f64, f64) {
        let theta = &eq.flow.theta;
        let v = &eq.flow.v;
        let deriv = self
            .state_derivative(&eq.states, theta, v)
            .into_iter()
            .fold(0.0, |a: f64, d| a.max(d.abs()));
        let bal = self
            .balance_mismatch(&eq.states, theta, v)
            .into_iter()
            .fold(0.0, |a: f64, d| a.max(d.abs()));
        (deriv, bal)
    }

    pub fn check_equilibrium(&self, eq: &Equilibrium) -> Result<()> {
        let (derivative, balance) = self.equilibrium_residuals(eq);
        if derivative > EQUILIBRIUM_TOL || balance > EQUILIBRIUM_TOL {
            return Err(Error::InconsistentEquilibrium { derivative, balance });
        }
        Ok(())
    }

    /// Total energy `U_0(v) + sum_i U_i(x_i, v_i)`.
    pub fn total_energy(&self, states: &[DeviceState], theta: &[f64], v: &[f64]) -> f64 {
        let b = self.net.susceptance();
        let n = self.n_bus();
        let mut u0 = 0.0;
        for i in 0..n {
            for j in 0..n {
                u0 -= 0.5 * b[(i, j)] * v[i] * v[j] * (theta[i] - theta[j]).cos();
            }
        }
        u0 + self
            .components
            .iter()
            .zip(states)
            .enumerate()
            .map(|(i, (c, s))| devices::energy(c, s, theta[i], v[i], self.omega0))
            .sum::<f64>()
    }

    /// Gradient of the total energy over the global layout.
    pub fn total_gradient(&self, states: &[DeviceState], theta: &[f64], v: &[f64]) -> DVector<f64> {
        let layout = self.layout();
        let mut g = DVector::zeros(layout.dim());
        let (p, q) = power_balance(theta, v, &self.net);
        for i in 0..self.n_bus() {
            g[layout.theta(i)] += p[i];
            g[layout.v(i)] += q[i] / v[i];
        }
        for (i, (c, s)) in self.components.iter().zip(states).enumerate() {
            let local = devices::energy_gradient(c, s, theta[i], v[i], self.omega0);
            for (k, &gi) in layout.local_to_global(i).iter().enumerate() {
                g[gi] += local[k];
            }
        }
        g
    }

    /// Hessian of the total energy over the global layout.
    pub fn total_hessian(&self, states: &[DeviceState], theta: &[f64], v: &[f64]) -> DMatrix<f64> {
        let layout = self.layout();
        let mut h = DMatrix::zeros(layout.dim(), layout.dim());
        let l = network_matrix(theta, v, self.net.susceptance());
        let off = layout.n_states;
        h.view_mut((off, off), (l.nrows(), l.ncols())).copy_from(&l);
        for (i, (c, s)) in self.components.iter().zip(states).enumerate() {
            let local = devices::energy_hessian(c, s, theta[i], v[i], self.omega0);
            let idx = layout.local_to_global(i);
            debug_assert_eq!(idx.len(), local_layout(&c.device).dim);
            for (a, &ga) in idx.iter().enumerate() {
                for (b, &gb) in idx.iter().enumerate() {
                    h[(ga, gb)] += local[(a, b)];
                }
            }
        }
        h
    }
}
