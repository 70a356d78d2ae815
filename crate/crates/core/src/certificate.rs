//! Closed-form small-signal stability certificate.
//!
//! A stationary power flow is small-signal stable iff every generator-like
//! bus has `gamma_i > 0` and
//!
//! ```text
//! diag(Gamma_i) + L(theta, V; B)  is positive semidefinite.
//! ```
//!
//! `gamma_i` and `Gamma_i` depend only on the bus operating point and the
//! synchronous reactances, and `L` is the Hessian of the network energy.
//! Nothing here depends on inertia, damping or time constants.

use nalgebra::{DMatrix, DVector, Matrix2};
use serde::{Deserialize, Serialize};

use crate::devices::{internal_phase, BusOperatingPoint, Device};
use crate::error::{Error, Result};
use crate::linalg;
use crate::netmodel::{Network, PowerFlowSolution};

/// Absolute tolerance on certificate eigenvalues and on `gamma`.
pub const CERT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Stable,
    Unstable,
    Marginal,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
            Verdict::Marginal => "marginal",
        }
    }

    /// Process exit code used by the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::Stable => 0,
            Verdict::Unstable => 1,
            Verdict::Marginal => 3,
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn gamma(rho: &BusOperatingPoint, x_d: f64, x_q: f64) -> Result<f64> {
    let phi = internal_phase(rho, x_q)?;
    let (s, c) = phi.sin_cos();
    let v2 = rho.v * rho.v;
    Ok(rho.q + v2 * c * c / x_q + v2 * s * s / x_d)
}

/// Local 2x2 block of a generator-like bus, over `(theta, V)`.
pub fn gamma_block(rho: &BusOperatingPoint, x_d: f64, x_q: f64) -> Result<Matrix2<f64>> {
    let g = gamma(rho, x_d, x_q)?;
    if !(g > 0.0) {
        return Err(Error::GammaNonPositive { gamma: g });
    }
    let phi = internal_phase(rho, x_q)?;
    let (s, c) = phi.sin_cos();
    let (v, p, q) = (rho.v, rho.p, rho.q);
    let v2 = v * v;
    let numerator = v2 * v2 / (x_q * x_d) - p * p + (v2 * c * c / x_d + v2 * s * s / x_q) * q
        - 2.0 * (1.0 / x_q - 1.0 / x_d) * p * v2 * c * s;
    Ok(Matrix2::new(0.0, 0.0, 0.0, numerator / (v2 * g)))
}

/// Local block of a constant-power load.
pub fn load_gamma_block(q_ref: f64, v: f64) -> Matrix2<f64> {
    Matrix2::new(0.0, 0.0, 0.0, q_ref / (v * v))
}

/// Network matrix `L` (Hessian of the network energy) in the interleaved
/// `(theta_0, V_0, theta_1, V_1, ...)` ordering.
pub fn network_matrix(theta: &[f64], v: &[f64], b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = b.nrows();
    let mut l = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        let (ti, vi) = (2 * i, 2 * i + 1);
        l[(vi, vi)] = -b[(i, i)];
        for j in 0..n {
            let bij = b[(i, j)];
            if j == i || bij == 0.0 {
                continue;
            }
            let (tj, vj) = (2 * j, 2 * j + 1);
            let (s, c) = (theta[i] - theta[j]).sin_cos();
            l[(ti, ti)] += bij * v[i] * v[j] * c;
            l[(ti, vi)] += bij * v[j] * s;
            l[(vi, ti)] += bij * v[j] * s;
            l[(ti, tj)] = -bij * v[i] * v[j] * c;
            l[(ti, vj)] = bij * v[i] * s;
            l[(vi, tj)] = -bij * v[j] * s;
            l[(vi, vj)] = -bij * c;
        }
    }
    l
}

/// Rotational mode: one on every angle slot, zero on every magnitude slot.
pub fn rotation_vector(n_bus: usize) -> DVector<f64> {
    DVector::from_fn(2 * n_bus, |k, _| if k % 2 == 0 { 1.0 } else { 0.0 })
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    /// `gamma_i` per bus; `None` on load buses.
    pub gammas: Vec<Option<f64>>,
    /// `Gamma_i` per bus; `None` where `gamma_i <= 0` leaves it undefined.
    pub gamma_blocks: Vec<Option<[[f64; 2]; 2]>>,
    #[serde(skip)]
    pub l_matrix: DMatrix<f64>,
    #[serde(skip)]
    pub m_cond: Option<DMatrix<f64>>,
    /// Smallest eigenvalue of `diag(Gamma) + L` on the complement of the
    /// rotational mode.
    pub min_eig: Option<f64>,
    pub verdict: Verdict,
    /// Unit eigenvector (interleaved `(theta, V)`) of `min_eig` when unstable.
    pub witness: Option<Vec<f64>>,
    /// First bus whose `gamma` fails the local condition.
    pub violating_bus: Option<usize>,
    /// `|(diag(Gamma) + L) n|_inf` for the rotational vector `n`.
    pub null_residual: Option<f64>,
}

impl StabilityReport {
    /// Distance of the deciding quantity from the stable/unstable boundary.
    pub fn margin(&self) -> f64 {
        let gamma_min = self
            .gammas
            .iter()
            .flatten()
            .fold(f64::INFINITY, |a, &g| a.min(g));
        match (self.violating_bus, self.min_eig) {
            (Some(_), _) => gamma_min.abs(),
            (None, Some(lambda)) => gamma_min.min(lambda.abs()),
            (None, None) => gamma_min.abs(),
        }
    }
}

/// Evaluate the certificate at a stationary power flow.
///
/// `devices[i]` sits at bus `i`; only its kind and `(X_d, X_q)` matter.
pub fn certify(flow: &PowerFlowSolution, devices: &[Device], net: &Network) -> Result<StabilityReport> {
    let n = net.n_bus();
    if devices.len() != n || flow.n_bus() != n {
        return Err(Error::Dimension(format!(
            "{} devices / {} flow buses for {} network buses",
            devices.len(),
            flow.n_bus(),
            n
        )));
    }
    let l_matrix = network_matrix(&flow.theta, &flow.v, net.susceptance());

    let mut gammas = Vec::with_capacity(n);
    for (i, device) in devices.iter().enumerate() {
        let rho = BusOperatingPoint::new(flow.v[i], flow.p[i], flow.q[i]);
        gammas.push(match device.reactances() {
            Some((x_d, x_q)) => Some(gamma(&rho, x_d, x_q).map_err(|e| e.at_bus(i))?),
            None => None,
        });
    }

    let worst = gammas
        .iter()
        .enumerate()
        .filter_map(|(i, g)| g.map(|g| (i, g)))
        .min_by(|a, b| a.1.total_cmp(&b.1));
    if let Some((bus, g)) = worst {
        if g <= CERT_TOL {
            return Ok(StabilityReport {
                gamma_blocks: vec![None; n],
                gammas,
                l_matrix,
                m_cond: None,
                min_eig: None,
                verdict: if g < -CERT_TOL {
                    Verdict::Unstable
                } else {
                    Verdict::Marginal
                },
                witness: None,
                violating_bus: Some(bus),
                null_residual: None,
            });
        }
    }

    let mut m_cond = l_matrix.clone();
    let mut gamma_blocks = Vec::with_capacity(n);
    for (i, device) in devices.iter().enumerate() {
        let rho = BusOperatingPoint::new(flow.v[i], flow.p[i], flow.q[i]);
        let block = match device.reactances() {
            Some((x_d, x_q)) => gamma_block(&rho, x_d, x_q).map_err(|e| e.at_bus(i))?,
            None => load_gamma_block(rho.q, rho.v),
        };
        let mut view = m_cond.view_mut((2 * i, 2 * i), (2, 2));
        view += block;
        gamma_blocks.push(Some([[block[(0, 0)], block[(0, 1)]], [block[(1, 0)], block[(1, 1)]]]));
    }
    let m_cond = linalg::symmetrize(&m_cond);

    let null = rotation_vector(n);
    let null_residual = (&m_cond * &null).amax();
    let basis = linalg::complement_basis(&null);
    let projected = linalg::symmetrize(&(basis.transpose() * &m_cond * &basis));
    let (values, vectors) = linalg::sym_eigen(&projected);
    let min_eig = values[0];
    let verdict = if min_eig > CERT_TOL {
        Verdict::Stable
    } else if min_eig < -CERT_TOL {
        Verdict::Unstable
    } else {
        Verdict::Marginal
    };
    let witness = (verdict == Verdict::Unstable).then(|| {
        let w = &basis * vectors.column(0);
        w.iter().copied().collect()
    });

    Ok(StabilityReport {
        gammas,
        gamma_blocks,
        l_matrix,
        m_cond: Some(m_cond),
        min_eig: Some(min_eig),
        verdict,
        witness,
        violating_bus: None,
        null_residual: Some(null_residual),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::devices::{FdcParams, VsgParams};
    use crate::netmodel::Line;

    const XD: f64 = 0.10;
    const XQ: f64 = 0.069;

    #[test]
    fn gamma_zero_power() {
        let g = gamma(&BusOperatingPoint::new(1.0, 0.0, 0.0), XD, XQ).unwrap();
        assert!((g - 1.0 / 0.069).abs() < 1e-12);
        assert!((g - 14.4928).abs() < 1e-4);
    }

    #[test]
    fn gamma_affine_in_q() {
        let a = gamma(&BusOperatingPoint::new(1.0, 0.8, 0.3), XD, XQ).unwrap();
        let b = gamma(&BusOperatingPoint::new(1.0, 0.8, 0.1), XD, XQ).unwrap();
        assert!(b < a);
    }

    #[test]
    fn gamma_block_zero_power() {
        let blk = gamma_block(&BusOperatingPoint::new(1.0, 0.0, 0.0), XD, XQ).unwrap();
        assert!((blk[(1, 1)] - 1.0 / XD).abs() < 1e-12);
        assert_eq!((blk[(0, 0)], blk[(0, 1)], blk[(1, 0)]), (0.0, 0.0, 0.0));
    }

    #[test]
    fn gamma_block_bus1() {
        let blk = gamma_block(&BusOperatingPoint::new(1.0, 1.0, 0.2886), XD, XQ).unwrap();
        assert!((blk[(1, 1)] - 9.91).abs() < 5e-3, "{}", blk[(1, 1)]);
    }

    #[test]
    fn gamma_block_rejects_nonpositive_gamma() {
        // gamma = Q + ... can be negative while Q + V^2/X_q stays positive
        // when X_d << X_q and phi is large.
        let rho = BusOperatingPoint::new(1.0, 40.0, -5.0);
        let g = gamma(&rho, 1.0, 0.1).unwrap();
        assert!(g < 0.0, "{g}");
        assert!(matches!(gamma_block(&rho, 1.0, 0.1), Err(Error::GammaNonPositive { .. })));
    }

    #[test]
    fn load_blocks() {
        let blk = load_gamma_block(-0.5, 0.9931);
        assert!((blk[(1, 1)] + 0.5070).abs() < 1e-4);
        assert_eq!(load_gamma_block(0.0, 1.1), Matrix2::zeros());
        assert!(load_gamma_block(0.3, 1.0)[(1, 1)] > 0.0);
    }

    #[test]
    fn flat_two_bus_network_matrix() {
        let b = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0]);
        let l = network_matrix(&[0.0, 0.0], &[1.0, 1.0], &b);
        #[rustfmt::skip]
        let expected = DMatrix::from_row_slice(4, 4, &[
            1.0, 0.0, -1.0, 0.0,
            0.0, 1.0, 0.0, -1.0,
            -1.0, 0.0, 1.0, 0.0,
            0.0, -1.0, 0.0, 1.0,
        ]);
        assert!((l - expected).amax() < 1e-15);
    }

    #[test]
    fn network_matrix_annihilates_rotation() {
        let b = DMatrix::from_row_slice(3, 3, &[-5.0, 2.0, 3.0, 2.0, -6.0, 4.0, 3.0, 4.0, -7.0]);
        let l = network_matrix(&[0.2, -0.3, 0.05], &[1.05, 0.93, 1.0], &b);
        assert!((&l * rotation_vector(3)).amax() < 1e-12);
        assert!(linalg::asymmetry(&l) < 1e-12);
    }

    #[test]
    fn single_generator_is_stable() {
        let net = Network::new(1, vec![]).unwrap();
        let flow = PowerFlowSolution::from_voltages(vec![0.0], vec![1.0], &net);
        let dev = [Device::Vsg(VsgParams { m: 0.2, d: 1.0, x_d: XD, x_q: XQ })];
        let rep = certify(&flow, &dev, &net).unwrap();
        assert_eq!(rep.verdict, Verdict::Stable);
        assert!((rep.min_eig.unwrap() - 1.0 / XD).abs() < 1e-10);
    }

    #[test]
    fn unstable_report_has_witness() {
        // heavily loaded two-bus line with a large-reactance droop inverter
        let net = Network::new(2, vec![Line::new(0, 1, 2.0)]).unwrap();
        let flow = PowerFlowSolution::from_voltages(vec![0.9, 0.0], vec![1.0, 1.0], &net);
        let dev = [
            Device::Fdc(FdcParams { d: 1.0, x_d: 1.5, x_q: 1.2 }),
            Device::Fdc(FdcParams { d: 1.0, x_d: 1.5, x_q: 1.2 }),
        ];
        let rep = certify(&flow, &dev, &net).unwrap();
        assert_eq!(rep.verdict, Verdict::Unstable);
        let w = rep.witness.unwrap();
        let w = DVector::from_vec(w);
        let m = rep.m_cond.unwrap();
        let rayleigh = w.dot(&(&m * &w));
        assert!((rayleigh - rep.min_eig.unwrap()).abs() < 1e-9);
    }
}
