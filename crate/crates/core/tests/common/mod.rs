//! Shared helpers for the integration tests: fixture paths, the published
//! power flow table, finite differences, and energy functions written out
//! independently of the library.

#![allow(dead_code)]

use std::path::PathBuf;

use gridcert::devices::{BusOperatingPoint, Component, Device, FdcParams, LoadParams, TwoAxisParams, VsgParams};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

/// Published power flow of the 3-bus example: (theta, V, P, Q) per bus.
pub const TABLE1: [[f64; 4]; 3] = [
    [-0.0308, 1.0000, 1.0000, 0.2886],
    [-0.0560, 0.9931, -3.5000, -0.5000],
    [0.0000, 1.0000, 2.5000, 0.3805],
];

pub const OMEGA0: f64 = 2.0 * std::f64::consts::PI * 60.0;

pub fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

/// Deviation measured against the larger of the two norms and one.
pub fn scaled_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / a.amax().max(b.amax()).max(1.0)
}

pub fn fd_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> DVector<f64> {
    let n = x.len();
    DVector::from_fn(n, |i, _| {
        let d = |s: f64| {
            let mut y = x.to_vec();
            y[i] += s;
            f(&y)
        };
        let d1 = (d(h) - d(-h)) / (2.0 * h);
        let d2 = (d(h / 2.0) - d(-h / 2.0)) / h;
        (4.0 * d2 - d1) / 3.0
    })
}

/// Central second differences with one Richardson step.
pub fn fd_hessian(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> DMatrix<f64> {
    let n = x.len();
    let at = |i: usize, j: usize, si: f64, sj: f64| {
        let mut y = x.to_vec();
        y[i] += si;
        y[j] += sj;
        f(&y)
    };
    let mixed = |i: usize, j: usize, h: f64| {
        (at(i, j, h, h) - at(i, j, h, -h) - at(i, j, -h, h) + at(i, j, -h, -h)) / (4.0 * h * h)
    };
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = (4.0 * mixed(i, j, h / 2.0) - mixed(i, j, h)) / 3.0;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

fn frame(delta: f64, theta: f64, v: f64) -> (f64, f64) {
    (v * (delta - theta).sin(), v * (delta - theta).cos())
}

/// Two-axis energy, local variables `(delta, omega, E_q, E_d, theta, V)`.
pub fn two_axis_energy(p: &TwoAxisParams, z: &[f64], omega0: f64) -> f64 {
    let (delta, omega, e_q, e_d, theta, v) = (z[0], z[1], z[2], z[3], z[4], z[5]);
    let (v_d, v_q) = frame(delta, theta, v);
    omega0 * p.m * omega * omega / 2.0
        + e_q * e_q / (2.0 * (p.x_d - p.x_d_prime))
        + e_d * e_d / (2.0 * (p.x_q - p.x_q_prime))
        + (v_d - e_d).powi(2) / (2.0 * p.x_q_prime)
        + (e_q - v_q).powi(2) / (2.0 * p.x_d_prime)
}

/// VSG energy, local variables `(delta, omega, theta, V)`.
pub fn vsg_energy(p: &VsgParams, v_fd: f64, z: &[f64], omega0: f64) -> f64 {
    let (delta, omega, theta, v) = (z[0], z[1], z[2], z[3]);
    let (v_d, v_q) = frame(delta, theta, v);
    omega0 * p.m * omega * omega / 2.0 + v_d * v_d / (2.0 * p.x_q) + (v_fd - v_q).powi(2) / (2.0 * p.x_d)
}

/// FDC energy, local variables `(delta, theta, V)`.
pub fn fdc_energy(p: &FdcParams, v_fd: f64, z: &[f64]) -> f64 {
    let (delta, theta, v) = (z[0], z[1], z[2]);
    let (v_d, v_q) = frame(delta, theta, v);
    v_d * v_d / (2.0 * p.x_q) + (v_fd - v_q).powi(2) / (2.0 * p.x_d)
}

/// Load energy, local variables `(theta, V)`.
pub fn load_energy(p_ref: f64, q_ref: f64, z: &[f64]) -> f64 {
    -p_ref * z[0] - q_ref * z[1].ln()
}

/// Network energy over interleaved `(theta_0, V_0, theta_1, V_1, ...)`.
pub fn network_energy(b: &DMatrix<f64>, z: &[f64]) -> f64 {
    let n = b.nrows();
    let mut u = 0.0;
    for i in 0..n {
        for j in 0..n {
            u -= 0.5 * b[(i, j)] * z[2 * i + 1] * z[2 * j + 1] * (z[2 * i] - z[2 * j]).cos();
        }
    }
    u
}

/// A bus operating point inside the capability region for `x_q`.
pub fn random_rho<R: Rng>(rng: &mut R, x_q: f64) -> BusOperatingPoint {
    loop {
        let v = rng.gen_range(0.85..1.15);
        let p = rng.gen_range(-3.0..3.0);
        let q = rng.gen_range(-2.0..2.0);
        if q + v * v / x_q > 0.5 {
            return BusOperatingPoint::new(v, p, q);
        }
    }
}

pub fn random_two_axis<R: Rng>(rng: &mut R) -> TwoAxisParams {
    let x_d = rng.gen_range(0.05..0.8);
    let x_q = rng.gen_range(0.05..0.8);
    TwoAxisParams {
        m: rng.gen_range(0.05..1.0),
        d: rng.gen_range(0.5..5.0),
        tau_d: rng.gen_range(1.0..10.0),
        tau_q: rng.gen_range(0.2..2.0),
        x_d,
        x_q,
        x_d_prime: x_d * rng.gen_range(0.2..0.8),
        x_q_prime: x_q * rng.gen_range(0.2..0.8),
    }
}

pub fn vsg_like(p: &TwoAxisParams) -> Device {
    Device::Vsg(VsgParams {
        m: p.m,
        d: p.d,
        x_d: p.x_d,
        x_q: p.x_q,
    })
}

pub fn random_point<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Random local point `(state..., theta, V)` near the device's natural scale.
pub fn random_local<R: Rng>(rng: &mut R, device: &Device) -> Vec<f64> {
    let mut z = random_point(rng, device.state_dim());
    match device {
        Device::TwoAxis(_) => {
            z[1] *= 0.05;
            z[2] = rng.gen_range(0.6..1.4);
            z[3] = rng.gen_range(-0.4..0.4);
        }
        Device::Vsg(_) => z[1] *= 0.05,
        _ => {}
    }
    z.push(rng.gen_range(-1.0..1.0));
    z.push(rng.gen_range(0.8..1.2));
    z
}

pub fn oracle_energy(comp: &Component, z: &[f64]) -> f64 {
    match comp.device {
        Device::TwoAxis(p) => two_axis_energy(&p, z, OMEGA0),
        Device::Vsg(p) => vsg_energy(&p, comp.setpoint.v_fd, z, OMEGA0),
        Device::Fdc(p) => fdc_energy(&p, comp.setpoint.v_fd, z),
        Device::Load(p) => load_energy(p.p_ref, p.q_ref, z),
    }
}

pub fn random_component<R: Rng>(rng: &mut R, kind: usize) -> Component {
    let p = random_two_axis(rng);
    let device = match kind {
        0 => Device::TwoAxis(p),
        1 => vsg_like(&p),
        2 => Device::Fdc(FdcParams { d: p.d, x_d: p.x_d, x_q: p.x_q }),
        _ => Device::Load(LoadParams {
            p_ref: rng.gen_range(-3.0..3.0),
            q_ref: rng.gen_range(-2.0..2.0),
        }),
    };
    let rho = match device {
        Device::Load(l) => BusOperatingPoint::new(1.0, l.p_ref, l.q_ref),
        _ => random_rho(rng, p.x_q),
    };
    Component::at_operating_point(device, &rho).unwrap()
}

/// Print a single acceptance-style status line.
pub fn report(label: &str, ok: bool, detail: &str) {
    println!("[{}] {label}: {detail}", if ok { "PASS" } else { "FAIL" });
}

/// Start state displaced by `eps` along the real eigenvector of the most
/// unstable mode of `A`, with the bus voltages re-solved.
pub fn start_along_unstable_mode(
    sys: &gridcert::system::PowerSystem,
    eq: &gridcert::system::Equilibrium,
    eps: f64,
) -> gridcert::simlab::SystemState {
    let a = gridcert::lindyn::linear_model(sys, eq).unwrap().a;
    let n = a.nrows();
    let lambda = a
        .complex_eigenvalues()
        .iter()
        .filter(|l| l.im.abs() < 1e-9)
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(lambda > 0.0, "no real unstable mode");
    let shifted = &a - DMatrix::identity(n, n) * lambda;
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.unwrap();
    let k = (0..n)
        .min_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]))
        .unwrap();
    let dir = v_t.row(k).transpose().normalize();
    let mut x = sys.pack_states(&eq.states);
    for i in 0..n {
        x[i] += eps * dir[i];
    }
    let (theta, v) = gridcert::simlab::algebraic_solve(sys, &x, &eq.flow.theta, &eq.flow.v).unwrap();
    gridcert::simlab::SystemState { t: 0.0, x, theta, v }
}
