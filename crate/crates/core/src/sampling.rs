//! Random small systems at random stationary operating points, for
//! property checks and the examples.
//!
//! Voltages are drawn first and the injections follow from the power
//! balance, so every case is an exact stationary power flow.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::devices::{Device, FdcParams, LoadParams, TwoAxisParams, VsgParams};
use crate::error::Result;
use crate::netmodel::{Line, Network, PowerFlowSolution};
use crate::system::{Equilibrium, PowerSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeviceKind {
    TwoAxis,
    Vsg,
    Fdc,
    Load,
}

impl DeviceKind {
    pub const ALL: [DeviceKind; 4] = [DeviceKind::TwoAxis, DeviceKind::Vsg, DeviceKind::Fdc, DeviceKind::Load];
    pub const GENERATORS: [DeviceKind; 3] = [DeviceKind::TwoAxis, DeviceKind::Vsg, DeviceKind::Fdc];
}

#[derive(Debug, Clone)]
pub struct SampleOptions {
    pub min_bus: usize,
    pub max_bus: usize,
    pub kinds: Vec<DeviceKind>,
    /// Half-width of the bus angle distribution (rad).
    pub angle_spread: f64,
    pub v_range: (f64, f64),
    pub b_range: (f64, f64),
    pub x_range: (f64, f64),
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self {
            min_bus: 2,
            max_bus: 4,
            kinds: DeviceKind::ALL.to_vec(),
            angle_spread: 0.3,
            v_range: (0.9, 1.1),
            b_range: (5.0, 50.0),
            x_range: (0.03, 0.6),
        }
    }
}

impl SampleOptions {
    pub fn generators_only() -> Self {
        Self {
            kinds: DeviceKind::GENERATORS.to_vec(),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct RandomCase {
    pub net: Network,
    pub flow: PowerFlowSolution,
    pub devices: Vec<Device>,
}

impl RandomCase {
    pub fn build(&self, omega0: f64) -> Result<(PowerSystem, Equilibrium)> {
        PowerSystem::at_power_flow(self.net.clone(), &self.devices, &self.flow, omega0)
    }
}

/// Random connected network: a random spanning tree plus a few chords.
pub fn random_network<R: Rng>(rng: &mut R, n: usize, b_range: (f64, f64)) -> Network {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut lines = Vec::new();
    for k in 1..n {
        let parent = order[rng.gen_range(0..k)];
        lines.push(Line::new(parent, order[k], rng.gen_range(b_range.0..b_range.1)));
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(0.25) && !lines.iter().any(|l| (l.from, l.to) == (i, j) || (l.from, l.to) == (j, i)) {
                lines.push(Line::new(i, j, rng.gen_range(b_range.0..b_range.1)));
            }
        }
    }
    Network::new(n, lines).expect("spanning tree keeps the network connected")
}

pub fn random_device<R: Rng>(rng: &mut R, kind: DeviceKind, x_range: (f64, f64)) -> Device {
    let mut x = || rng.gen_range(x_range.0..x_range.1);
    let (x_d, x_q) = (x(), x());
    match kind {
        DeviceKind::TwoAxis => Device::TwoAxis(TwoAxisParams {
            m: rng.gen_range(0.05..1.0),
            d: rng.gen_range(0.5..5.0),
            tau_d: rng.gen_range(1.0..10.0),
            tau_q: rng.gen_range(0.2..2.0),
            x_d,
            x_q,
            x_d_prime: x_d * rng.gen_range(0.2..0.8),
            x_q_prime: x_q * rng.gen_range(0.2..0.8),
        }),
        DeviceKind::Vsg => Device::Vsg(VsgParams {
            m: rng.gen_range(0.05..1.0),
            d: rng.gen_range(0.5..5.0),
            x_d,
            x_q,
        }),
        DeviceKind::Fdc => Device::Fdc(FdcParams {
            d: rng.gen_range(0.5..5.0),
            x_d,
            x_q,
        }),
        DeviceKind::Load => Device::Load(LoadParams { p_ref: 0.0, q_ref: 0.0 }),
    }
}

/// Draw one case. Capability-infeasible draws are rejected and redrawn.
pub fn random_case<R: Rng>(rng: &mut R, opts: &SampleOptions) -> RandomCase {
    loop {
        let n = rng.gen_range(opts.min_bus..=opts.max_bus);
        let net = random_network(rng, n, opts.b_range);
        let theta: Vec<f64> = (0..n)
            .map(|_| rng.gen_range(-opts.angle_spread..=opts.angle_spread))
            .collect();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(opts.v_range.0..opts.v_range.1)).collect();
        let flow = PowerFlowSolution::from_voltages(theta, v, &net);
        let mut kinds: Vec<DeviceKind> = (0..n).map(|_| *opts.kinds.choose(rng).unwrap()).collect();
        if kinds.iter().all(|&k| k == DeviceKind::Load) {
            kinds[rng.gen_range(0..n)] = *DeviceKind::GENERATORS.choose(rng).unwrap();
        }
        let devices: Vec<Device> = kinds
            .iter()
            .enumerate()
            .map(|(i, &k)| match random_device(rng, k, opts.x_range) {
                Device::Load(_) => Device::Load(LoadParams {
                    p_ref: flow.p[i],
                    q_ref: flow.q[i],
                }),
                d => d,
            })
            .collect();
        let case = RandomCase { net, flow, devices };
        if case.build(crate::devices::DEFAULT_OMEGA0).is_ok() {
            return case;
        }
    }
}
