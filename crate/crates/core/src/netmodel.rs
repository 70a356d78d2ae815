//! Lossless transmission network: susceptance matrix, bus power balance and
//! a Newton solver for stationary power flows.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub from: usize,
    pub to: usize,
    /// Series susceptance in per-unit, strictly positive.
    pub b: f64,
}

impl Line {
    pub fn new(from: usize, to: usize, b: f64) -> Self {
        Self { from, to, b }
    }
}

/// A connected lossless network of `n_bus` buses.
///
/// `susceptance` is `B` with `B_ij = b_ij` off the diagonal and
/// `B_ii = -sum_j b_ij`, so `-B` is a weighted graph Laplacian.
#[derive(Debug, Clone)]
pub struct Network {
    n_bus: usize,
    lines: Vec<Line>,
    susceptance: DMatrix<f64>,
}

impl Network {
    pub fn new(n_bus: usize, lines: Vec<Line>) -> Result<Self> {
        let susceptance = build_susceptance(n_bus, &lines)?;
        Ok(Self {
            n_bus,
            lines,
            susceptance,
        })
    }

    pub fn n_bus(&self) -> usize {
        self.n_bus
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn susceptance(&self) -> &DMatrix<f64> {
        &self.susceptance
    }
}

/// Build the susceptance matrix. Parallel lines between the same pair add up.
pub fn build_susceptance(n_bus: usize, lines: &[Line]) -> Result<DMatrix<f64>> {
    if n_bus == 0 {
        return Err(Error::InvalidNetwork("network needs at least one bus".into()));
    }
    let mut b = DMatrix::zeros(n_bus, n_bus);
    for (k, line) in lines.iter().enumerate() {
        if line.from >= n_bus || line.to >= n_bus {
            return Err(Error::InvalidNetwork(format!(
                "line {k} references bus outside 0..{n_bus}"
            )));
        }
        if line.from == line.to {
            return Err(Error::InvalidNetwork(format!("line {k} is a self-loop")));
        }
        if !(line.b > 0.0 && line.b.is_finite()) {
            return Err(Error::InvalidNetwork(format!(
                "line {k} susceptance must be finite and positive, got {}",
                line.b
            )));
        }
        let (i, j) = (line.from, line.to);
        b[(i, j)] += line.b;
        b[(j, i)] += line.b;
        b[(i, i)] -= line.b;
        b[(j, j)] -= line.b;
    }
    let components = count_components(n_bus, lines);
    if components > 1 {
        return Err(Error::Disconnected { components });
    }
    Ok(b)
}

fn count_components(n_bus: usize, lines: &[Line]) -> usize {
    let mut parent: Vec<usize> = (0..n_bus).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for line in lines {
        let a = find(&mut parent, line.from);
        let b = find(&mut parent, line.to);
        if a != b {
            parent[a] = b;
        }
    }
    (0..n_bus).filter(|&i| find(&mut parent, i) == i).count()
}

/// Active and reactive power injected into the network at each bus.
pub fn power_balance(theta: &[f64], v: &[f64], net: &Network) -> (Vec<f64>, Vec<f64>) {
    let n = net.n_bus();
    let b = net.susceptance();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            let bij = b[(i, j)];
            if bij == 0.0 {
                continue;
            }
            let (s, c) = (theta[i] - theta[j]).sin_cos();
            p[i] += bij * v[i] * v[j] * s;
            q[i] -= bij * v[i] * v[j] * c;
        }
    }
    (p, q)
}

/// Jacobian of `(P, Q)` with respect to `(theta, V)`.
///
/// Rows are interleaved `(P_0, Q_0, P_1, Q_1, ...)`, columns
/// `(theta_0, V_0, theta_1, V_1, ...)`.
pub fn power_balance_jacobian(theta: &[f64], v: &[f64], net: &Network) -> DMatrix<f64> {
    let n = net.n_bus();
    let b = net.susceptance();
    let mut jac = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        let (rp, rq) = (2 * i, 2 * i + 1);
        for j in 0..n {
            let bij = b[(i, j)];
            if bij == 0.0 {
                continue;
            }
            let (s, c) = (theta[i] - theta[j]).sin_cos();
            if i == j {
                jac[(rq, 2 * i + 1)] -= 2.0 * bij * v[i];
                continue;
            }
            // P_i
            jac[(rp, 2 * i)] += bij * v[i] * v[j] * c;
            jac[(rp, 2 * j)] -= bij * v[i] * v[j] * c;
            jac[(rp, 2 * i + 1)] += bij * v[j] * s;
            jac[(rp, 2 * j + 1)] += bij * v[i] * s;
            // Q_i
            jac[(rq, 2 * i)] += bij * v[i] * v[j] * s;
            jac[(rq, 2 * j)] -= bij * v[i] * v[j] * s;
            jac[(rq, 2 * i + 1)] -= bij * v[j] * c;
            jac[(rq, 2 * j + 1)] -= bij * v[i] * c;
        }
    }
    jac
}

/// Bus type used to pose the power flow problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BusSpec {
    Slack { theta: f64, v: f64 },
    Pv { p: f64, v: f64 },
    Pq { p: f64, q: f64 },
}

/// A stationary power flow distribution: one representative of the set
/// `{(theta + c 1, V, P, Q)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerFlowSolution {
    pub theta: Vec<f64>,
    pub v: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl PowerFlowSolution {
    /// Fill `P, Q` from the balance equations at `(theta, V)`.
    pub fn from_voltages(theta: Vec<f64>, v: Vec<f64>, net: &Network) -> Self {
        let (p, q) = power_balance(&theta, &v, net);
        Self { theta, v, p, q }
    }

    pub fn n_bus(&self) -> usize {
        self.theta.len()
    }

    /// Another member of the same stationary set.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            theta: self.theta.iter().map(|t| t + c).collect(),
            ..self.clone()
        }
    }

    /// Angles wrapped into `(-pi, pi]`.
    pub fn normalized_theta(&self) -> Vec<f64> {
        self.theta.iter().map(|&t| wrap_angle(t)).collect()
    }

    /// Infinity norm of the power balance mismatch.
    pub fn residual(&self, net: &Network) -> f64 {
        let (p, q) = power_balance(&self.theta, &self.v, net);
        p.iter()
            .zip(&self.p)
            .chain(q.iter().zip(&self.q))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub fn wrap_angle(t: f64) -> f64 {
    let mut w = t.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 50,
        }
    }
}

/// Solve the power balance for the unknown angles and magnitudes.
///
/// Full Newton steps from a flat start unless `initial` supplies `(theta, V)`.
pub fn solve_power_flow(
    net: &Network,
    specs: &[BusSpec],
    initial: Option<(&[f64], &[f64])>,
    options: NewtonOptions,
) -> Result<PowerFlowSolution> {
    let n = net.n_bus();
    if specs.len() != n {
        return Err(Error::InvalidBusSpec(format!(
            "{} bus specs for {} buses",
            specs.len(),
            n
        )));
    }
    let slack_count = specs
        .iter()
        .filter(|s| matches!(s, BusSpec::Slack { .. }))
        .count();
    if slack_count != 1 {
        return Err(Error::InvalidBusSpec(format!(
            "exactly one slack bus required, found {slack_count}"
        )));
    }

    let (mut theta, mut v) = match initial {
        Some((t, m)) if t.len() == n && m.len() == n => (t.to_vec(), m.to_vec()),
        Some(_) => return Err(Error::Dimension("initial guess length".into())),
        None => (vec![0.0; n], vec![1.0; n]),
    };

    // unknown columns and residual rows, in the interleaved layout
    let mut unknowns = Vec::new();
    let mut equations = Vec::new();
    let mut target = Vec::new();
    for (i, spec) in specs.iter().enumerate() {
        match *spec {
            BusSpec::Slack { theta: t, v: m } => {
                check_magnitude(i, m)?;
                theta[i] = t;
                v[i] = m;
            }
            BusSpec::Pv { p, v: m } => {
                check_magnitude(i, m)?;
                v[i] = m;
                unknowns.push(2 * i);
                equations.push(2 * i);
                target.push(p);
            }
            BusSpec::Pq { p, q } => {
                unknowns.extend([2 * i, 2 * i + 1]);
                equations.extend([2 * i, 2 * i + 1]);
                target.extend([p, q]);
            }
        }
    }

    let mismatch = |theta: &[f64], v: &[f64]| -> DVector<f64> {
        let (p, q) = power_balance(theta, v, net);
        DVector::from_iterator(
            equations.len(),
            equations.iter().zip(&target).map(|(&row, &t)| {
                let value = if row % 2 == 0 { p[row / 2] } else { q[row / 2] };
                value - t
            }),
        )
    };

    let mut residual = mismatch(&theta, &v);
    let mut iteration = 0;
    while residual.amax() > options.tolerance {
        if iteration >= options.max_iterations || !residual.amax().is_finite() {
            return Err(Error::PowerFlowDiverged {
                iterations: iteration,
                residual: residual.amax(),
            });
        }
        let full = power_balance_jacobian(&theta, &v, net);
        let jac = crate::linalg::select(&full, &equations, &unknowns);
        let step = jac
            .lu()
            .solve(&residual)
            .filter(|s| s.iter().all(|x| x.is_finite()))
            .ok_or(Error::SingularJacobian { iteration })?;
        for (k, &col) in unknowns.iter().enumerate() {
            if col % 2 == 0 {
                theta[col / 2] -= step[k];
            } else {
                v[col / 2] -= step[k];
            }
        }
        iteration += 1;
        residual = mismatch(&theta, &v);
        if v.iter().any(|&m| !(m > 0.0)) {
            return Err(Error::PowerFlowDiverged {
                iterations: iteration,
                residual: residual.amax(),
            });
        }
    }
    Ok(PowerFlowSolution::from_voltages(theta, v, net))
}

fn check_magnitude(bus: usize, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidBusSpec(format!(
            "bus {bus}: voltage magnitude must be positive, got {v}"
        )))
    }
}
