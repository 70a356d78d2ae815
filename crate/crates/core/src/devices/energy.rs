//! Component energy functions with analytic gradients and Hessians.
//!
//! Each energy is a quadratic form in the frame voltages `(V_d, V_q)` (plus
//! the internal voltages for the two-axis model) and a kinetic term in
//! `omega`. Derivatives in local coordinates `(state..., theta, V)` follow
//! from the chain rule through `V_d = V sin(delta - theta)`,
//! `V_q = V cos(delta - theta)`.

use nalgebra::{DMatrix, DVector};

use super::{Component, Device, DeviceState};

/// Position of each physical variable in a component's local vector
/// `state.to_vec() ++ [theta, V]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalLayout {
    pub dim: usize,
    pub delta: Option<usize>,
    pub omega: Option<usize>,
    pub e_q: Option<usize>,
    pub e_d: Option<usize>,
    pub theta: usize,
    pub v: usize,
}

pub fn local_layout(device: &Device) -> LocalLayout {
    let n = device.state_dim();
    LocalLayout {
        dim: n + 2,
        delta: (n >= 1).then_some(0),
        omega: (n >= 2).then_some(1),
        e_q: (n == 4).then_some(2),
        e_d: (n == 4).then_some(3),
        theta: n,
        v: n + 1,
    }
}

pub fn energy(component: &Component, state: &DeviceState, theta: f64, v: f64, omega0: f64) -> f64 {
    evaluate(component, state, theta, v, omega0).0
}

/// Gradient in the local layout.
pub fn energy_gradient(
    component: &Component,
    state: &DeviceState,
    theta: f64,
    v: f64,
    omega0: f64,
) -> DVector<f64> {
    evaluate(component, state, theta, v, omega0).1
}

/// Hessian in the local layout.
pub fn energy_hessian(
    component: &Component,
    state: &DeviceState,
    theta: f64,
    v: f64,
    omega0: f64,
) -> DMatrix<f64> {
    evaluate(component, state, theta, v, omega0).2
}

/// Inner quadratic `f(y)` with its derivatives, `y = [V_d, V_q, E_q, E_d]`
/// (the last two only for the two-axis model).
struct Inner {
    value: f64,
    grad: Vec<f64>,
    hess: DMatrix<f64>,
}

fn evaluate(
    component: &Component,
    state: &DeviceState,
    theta: f64,
    v: f64,
    omega0: f64,
) -> (f64, DVector<f64>, DMatrix<f64>) {
    let layout = local_layout(&component.device);
    let mut grad = DVector::zeros(layout.dim);
    let mut hess = DMatrix::zeros(layout.dim, layout.dim);

    if let Device::Load(p) = component.device {
        grad[layout.theta] = -p.p_ref;
        grad[layout.v] = -p.q_ref / v;
        hess[(layout.v, layout.v)] = p.q_ref / (v * v);
        return (-p.p_ref * theta - p.q_ref * v.ln(), grad, hess);
    }

    let delta = state.delta().expect("generator-like state");
    let (s, c) = (delta - theta).sin_cos();
    let (v_d, v_q) = (v * s, v * c);

    let inner = match (component.device, *state) {
        (Device::TwoAxis(p), DeviceState::TwoAxis { e_q, e_d, .. }) => {
            let a = p.x_d - p.x_d_prime;
            let b = p.x_q - p.x_q_prime;
            let (xd, xq) = (p.x_d_prime, p.x_q_prime);
            let value = e_q * e_q / (2.0 * a)
                + e_d * e_d / (2.0 * b)
                + (v_d - e_d).powi(2) / (2.0 * xq)
                + (e_q - v_q).powi(2) / (2.0 * xd);
            let grad = vec![
                (v_d - e_d) / xq,
                -(e_q - v_q) / xd,
                e_q / a + (e_q - v_q) / xd,
                e_d / b - (v_d - e_d) / xq,
            ];
            #[rustfmt::skip]
            let hess = DMatrix::from_row_slice(4, 4, &[
                1.0 / xq, 0.0,      0.0,                -1.0 / xq,
                0.0,      1.0 / xd, -1.0 / xd,          0.0,
                0.0,      -1.0 / xd, 1.0 / a + 1.0 / xd, 0.0,
                -1.0 / xq, 0.0,     0.0,                1.0 / b + 1.0 / xq,
            ]);
            Inner { value, grad, hess }
        }
        (device, _) => {
            let (x_d, x_q) = device.reactances().expect("generator-like device");
            let v_fd = component.setpoint.v_fd;
            Inner {
                value: v_d * v_d / (2.0 * x_q) + (v_fd - v_q).powi(2) / (2.0 * x_d),
                grad: vec![v_d / x_q, -(v_fd - v_q) / x_d],
                hess: DMatrix::from_row_slice(2, 2, &[1.0 / x_q, 0.0, 0.0, 1.0 / x_d]),
            }
        }
    };

    // Jacobian of y w.r.t. the local vector
    let ny = inner.grad.len();
    let angle_cols = [layout.delta.unwrap(), layout.theta, layout.v];
    let mut jac = DMatrix::zeros(ny, layout.dim);
    let d_vd = [v_q, -v_q, s];
    let d_vq = [-v_d, v_d, c];
    for k in 0..3 {
        jac[(0, angle_cols[k])] = d_vd[k];
        jac[(1, angle_cols[k])] = d_vq[k];
    }
    if let (Some(eq), Some(ed)) = (layout.e_q, layout.e_d) {
        jac[(2, eq)] = 1.0;
        jac[(3, ed)] = 1.0;
    }
    // second derivatives of V_d and V_q over (delta, theta, V)
    #[rustfmt::skip]
    let h_vd = [
        [-v_d, v_d, c],
        [v_d, -v_d, -c],
        [c, -c, 0.0],
    ];
    #[rustfmt::skip]
    let h_vq = [
        [-v_q, v_q, -s],
        [v_q, -v_q, s],
        [-s, s, 0.0],
    ];

    let inner_grad = DVector::from_vec(inner.grad.clone());
    grad += jac.transpose() * &inner_grad;
    hess += jac.transpose() * &inner.hess * &jac;
    for a in 0..3 {
        for b in 0..3 {
            hess[(angle_cols[a], angle_cols[b])] += inner.grad[0] * h_vd[a][b] + inner.grad[1] * h_vq[a][b];
        }
    }

    let mut value = inner.value;
    if let (Some(w), Some(m)) = (layout.omega, inertia(&component.device)) {
        let omega = state.omega().unwrap();
        value += omega0 * m * omega * omega / 2.0;
        grad[w] = omega0 * m * omega;
        hess[(w, w)] = omega0 * m;
    }
    (value, grad, hess)
}

fn inertia(device: &Device) -> Option<f64> {
    match device {
        Device::TwoAxis(p) => Some(p.m),
        Device::Vsg(p) => Some(p.m),
        _ => None,
    }
}
