//! Linearization oracle.
//!
//! The component dynamics are a gradient system of the total storage
//! function `W` (Bregman distance of the total energy):
//!
//! ```text
//! dx/dt = -R grad_x W(x, v),     0 = grad_v W(x, v)
//! ```
//!
//! so the linearization at an equilibrium is `diag(I, 0) dz = -diag(R, I) H z`
//! with `H` the Hessian of the total energy. Eliminating `v` (Kron reduction)
//! gives `A = -R (H / H_vv)`, whose spectrum decides stability directly.

use nalgebra::{Complex, DMatrix, Matrix2};
use serde::Serialize;

use crate::certificate::Verdict;
use crate::devices::{internal_phase, BusOperatingPoint, Device};
use crate::error::{Error, Result};
use crate::linalg;
use crate::system::{Equilibrium, PowerSystem, VariableLayout};

/// Absolute tolerance on real parts of state-matrix eigenvalues.
pub const EIG_TOL: f64 = 1e-7;

/// Hessian of the total energy over `(x, theta, V)` at an equilibrium.
#[derive(Debug, Clone)]
pub struct FullHessian {
    pub matrix: DMatrix<f64>,
    pub layout: VariableLayout,
}

impl FullHessian {
    pub fn state_block(&self) -> DMatrix<f64> {
        let idx = self.layout.state_indices();
        linalg::select(&self.matrix, &idx, &idx)
    }

    pub fn algebraic_block(&self) -> DMatrix<f64> {
        let idx = self.layout.algebraic_indices();
        linalg::select(&self.matrix, &idx, &idx)
    }
}

pub fn assemble_full_hessian(sys: &PowerSystem, eq: &Equilibrium) -> Result<FullHessian> {
    sys.check_equilibrium(eq)?;
    let matrix = linalg::symmetrize(&sys.total_hessian(&eq.states, &eq.flow.theta, &eq.flow.v));
    Ok(FullHessian {
        matrix,
        layout: sys.layout(),
    })
}

/// The algebraic block rebuilt from its bus-wise factorization
///
/// ```text
/// H_vv = diag(Phi_i^T diag(1/X_q, 1/X_d) Phi_i) + diag(Theta_i^T) (-B (x) I_2) diag(Theta_i)
/// ```
///
/// with the reactances seen from the bus (transient ones for the two-axis
/// model). A load bus contributes `[[-Q, P/V], [P/V, Q/V^2]]` in place of
/// the `Phi` term.
pub fn factorized_algebraic_block(sys: &PowerSystem, eq: &Equilibrium) -> Result<DMatrix<f64>> {
    let n = sys.n_bus();
    let flow = &eq.flow;
    let b = sys.net.susceptance();
    let thetas: Vec<Matrix2<f64>> = (0..n)
        .map(|i| {
            let (s, c) = flow.theta[i].sin_cos();
            let v = flow.v[i];
            Matrix2::new(-v * s, c, v * c, s)
        })
        .collect();

    let mut h = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        let rho = BusOperatingPoint::new(flow.v[i], flow.p[i], flow.q[i]);
        let local = match sys.components[i].device {
            Device::Load(_) => Matrix2::new(-rho.q, rho.p / rho.v, rho.p / rho.v, rho.q / (rho.v * rho.v)),
            device => {
                let (_, x_q) = device.reactances().unwrap();
                let (xd_c, xq_c) = device.connection_reactances().unwrap();
                let phi = internal_phase(&rho, x_q).map_err(|e| e.at_bus(i))?;
                let (s, c) = phi.sin_cos();
                let phi_m = Matrix2::new(rho.v * c, -s, rho.v * s, c);
                phi_m.transpose() * Matrix2::new(1.0 / xq_c, 0.0, 0.0, 1.0 / xd_c) * phi_m
            }
        };
        let mut view = h.view_mut((2 * i, 2 * i), (2, 2));
        view += local;
        for j in 0..n {
            if b[(i, j)] == 0.0 {
                continue;
            }
            let block = thetas[i].transpose() * thetas[j] * (-b[(i, j)]);
            let mut view = h.view_mut((2 * i, 2 * j), (2, 2));
            view += block;
        }
    }
    Ok(h)
}

/// Dissipation/interconnection matrix `R` over the device states, assembled
/// per component in the `[delta, omega, E_q, E_d]` layout.
pub fn interconnection_matrix(sys: &PowerSystem) -> DMatrix<f64> {
    let layout = sys.layout();
    let mut r = DMatrix::zeros(layout.n_states, layout.n_states);
    let w0 = sys.omega0;
    for (i, comp) in sys.components.iter().enumerate() {
        let o = layout.state_offsets[i];
        match comp.device {
            Device::TwoAxis(p) => {
                swing_block(&mut r, o, p.m, p.d, w0);
                r[(o + 2, o + 2)] = (p.x_d - p.x_d_prime) / p.tau_d;
                r[(o + 3, o + 3)] = (p.x_q - p.x_q_prime) / p.tau_q;
            }
            Device::Vsg(p) => swing_block(&mut r, o, p.m, p.d, w0),
            Device::Fdc(p) => r[(o, o)] = w0 / p.d,
            Device::Load(_) => {}
        }
    }
    r
}

fn swing_block(r: &mut DMatrix<f64>, o: usize, m: f64, d: f64, w0: f64) {
    r[(o, o + 1)] = -1.0 / m;
    r[(o + 1, o)] = 1.0 / m;
    r[(o + 1, o + 1)] = d / (w0 * m * m);
}

/// Schur complement `H / H_vv`, eliminating all bus variables.
pub fn kron_reduce(h: &FullHessian) -> Result<DMatrix<f64>> {
    linalg::schur_complement(
        &h.matrix,
        &h.layout.state_indices(),
        &h.layout.algebraic_indices(),
    )
}

#[derive(Debug, Clone)]
pub struct LinearModel {
    pub hessian: FullHessian,
    pub r: DMatrix<f64>,
    pub reduced_hessian: DMatrix<f64>,
    /// `A = -R (H / H_vv)`.
    pub a: DMatrix<f64>,
}

pub fn linear_model(sys: &PowerSystem, eq: &Equilibrium) -> Result<LinearModel> {
    let hessian = assemble_full_hessian(sys, eq)?;
    let reduced_hessian = kron_reduce(&hessian)?;
    let r = interconnection_matrix(sys);
    let a = -(&r * &reduced_hessian);
    Ok(LinearModel {
        hessian,
        r,
        reduced_hessian,
        a,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenAnalysis {
    #[serde(skip)]
    pub spectrum: Vec<Complex<f64>>,
    /// Index in `spectrum` of the rotational zero mode.
    pub zero_mode: usize,
    /// Largest real part among the remaining eigenvalues.
    pub max_real: f64,
    /// Smallest eigenvalue of the algebraic block `H_vv`.
    pub algebraic_min_eig: f64,
    /// `H_vv` positive definite: the algebraic constraints are attracting.
    pub regular: bool,
    pub verdict: Verdict,
}

impl EigenAnalysis {
    /// Distance of the deciding quantity from the marginal band.
    pub fn margin(&self) -> f64 {
        if self.regular {
            self.max_real.abs()
        } else {
            self.algebraic_min_eig.abs()
        }
    }
}

/// Spectrum of the Kron-reduced state matrix and the resulting verdict.
///
/// An equilibrium whose algebraic block is indefinite is reported unstable:
/// the constraint manifold is not attracting under any fast regularization
/// of the bus dynamics.
pub fn eig_verdict(sys: &PowerSystem, eq: &Equilibrium) -> Result<EigenAnalysis> {
    let model = linear_model(sys, eq)?;
    let hvv = model.hessian.algebraic_block();
    let algebraic_min_eig = linalg::sym_eigen(&hvv).0[0];
    let regular = algebraic_min_eig > 0.0;
    analyze_spectrum(&model.a, algebraic_min_eig, regular)
}

fn analyze_spectrum(a: &DMatrix<f64>, algebraic_min_eig: f64, regular: bool) -> Result<EigenAnalysis> {
    let spectrum: Vec<Complex<f64>> = a.complex_eigenvalues().iter().copied().collect();
    let near_zero: Vec<usize> = (0..spectrum.len())
        .filter(|&k| spectrum[k].norm() <= EIG_TOL)
        .collect();
    if near_zero.len() != 1 {
        return Err(Error::DegenerateEquilibrium {
            zero_modes: near_zero.len(),
        });
    }
    let zero_mode = near_zero[0];
    let max_real = spectrum
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != zero_mode)
        .map(|(_, l)| l.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let verdict = if !regular || max_real > EIG_TOL {
        Verdict::Unstable
    } else if max_real < -EIG_TOL {
        Verdict::Stable
    } else {
        Verdict::Marginal
    };
    Ok(EigenAnalysis {
        spectrum,
        zero_mode,
        max_real,
        algebraic_min_eig,
        regular,
        verdict,
    })
}
