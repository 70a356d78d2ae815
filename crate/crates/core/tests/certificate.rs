mod common;

use gridcert::certificate::{
    certify, gamma, gamma_block, load_gamma_block, network_matrix, rotation_vector, Verdict, CERT_TOL,
};
use gridcert::config::SystemConfig;
use gridcert::devices::{reduced_hessian_blocks, BusOperatingPoint, Device, FdcParams, VsgParams};
use gridcert::lindyn::eig_verdict;
use gridcert::netmodel::{Line, Network, PowerFlowSolution};
use gridcert::sampling::{random_case, SampleOptions};
use gridcert::{linalg, Error};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{fixture, random_rho};

const XD: f64 = 0.10;
const XQ: f64 = 0.069;

/// gamma and Gamma(2,2) written directly from their closed forms.
fn oracle_gamma(v: f64, p: f64, q: f64, x_d: f64, x_q: f64) -> (f64, f64) {
    let phi = (p / (q + v * v / x_q)).atan();
    let (s, c) = phi.sin_cos();
    let g = q + v * v * c * c / x_q + v * v * s * s / x_d;
    let num = v.powi(4) / (x_q * x_d) - p * p + (v * v * c * c / x_d + v * v * s * s / x_q) * q
        - 2.0 * (1.0 / x_q - 1.0 / x_d) * p * v * v * c * s;
    (g, num / (v * v * g))
}

#[test]
fn gamma_examples() {
    let g = gamma(&BusOperatingPoint::new(1.0, 0.0, 0.0), XD, XQ).unwrap();
    assert!((g - 14.4928).abs() < 1e-4);
    let g = gamma(&BusOperatingPoint::new(1.0, 1.0, 0.2886), XD, XQ).unwrap();
    assert!((g - 14.76).abs() < 5e-3, "{g}");
    let (g_oracle, _) = oracle_gamma(1.0, 1.0, 0.2886, XD, XQ);
    assert!((g - g_oracle).abs() < 1e-12);
}

#[test]
fn gamma_decreases_with_q() {
    let mut prev = f64::INFINITY;
    for k in 0..20 {
        let q = 1.0 - 0.1 * k as f64;
        let g = gamma(&BusOperatingPoint::new(1.0, 0.7, q), XD, XQ).unwrap();
        assert!(g < prev);
        prev = g;
    }
}

#[test]
fn gamma_block_examples() {
    let blk = gamma_block(&BusOperatingPoint::new(1.0, 0.0, 0.0), XD, XQ).unwrap();
    assert!((blk[(1, 1)] - 1.0 / XD).abs() < 1e-12);
    let blk = gamma_block(&BusOperatingPoint::new(1.0, 1.0, 0.2886), XD, XQ).unwrap();
    assert!((blk[(1, 1)] - 9.91).abs() < 5e-3);
    assert_eq!((blk[(0, 0)], blk[(0, 1)], blk[(1, 0)]), (0.0, 0.0, 0.0));
}

#[test]
fn load_block_examples() {
    let blk = load_gamma_block(-0.5, 0.9931);
    assert!((blk[(1, 1)] + 0.5070).abs() < 1e-4);
    assert_eq!(blk[(0, 0)], 0.0);
    assert_eq!(load_gamma_block(0.0, 0.97).norm(), 0.0);
    assert!(load_gamma_block(0.25, 1.02).symmetric_eigenvalues().min() >= 0.0);
}

#[test]
fn gamma_and_block_match_oracle_and_schur() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut checked = 0;
    while checked < 100 {
        let x_d = rng.gen_range(0.03..1.0);
        let x_q = rng.gen_range(0.03..1.0);
        let rho = random_rho(&mut rng, x_q);
        let (g_oracle, g22_oracle) = oracle_gamma(rho.v, rho.p, rho.q, x_d, x_q);
        let g = gamma(&rho, x_d, x_q).unwrap();
        assert!((g - g_oracle).abs() <= 1e-10 * g_oracle.abs().max(1.0));
        if g <= CERT_TOL {
            assert!(matches!(gamma_block(&rho, x_d, x_q), Err(Error::GammaNonPositive { .. })));
            continue;
        }
        let blk = gamma_block(&rho, x_d, x_q).unwrap();
        let scale = g22_oracle.abs().max(1.0);
        assert!((blk[(1, 1)] - g22_oracle).abs() <= 1e-10 * scale);

        // Gamma = H_vv - H_dv^T H_dd^-1 H_dv
        let h = reduced_hessian_blocks(&rho, x_d, x_q).unwrap();
        let m = h.to_matrix();
        let m = DMatrix::from_iterator(3, 3, m.iter().copied());
        let schur = linalg::schur_complement(&m, &[1, 2], &[0]).unwrap();
        let blk_d = DMatrix::from_iterator(2, 2, blk.iter().copied());
        assert!(common::scaled_err(&schur, &blk_d) <= 1e-10);
        assert!((h.delta_delta - g).abs() <= 1e-10 * g.abs().max(1.0));
        checked += 1;
    }
}

#[test]
fn network_matrix_is_energy_hessian() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..50 {
        let case = random_case(&mut rng, &SampleOptions::default());
        let b = case.net.susceptance();
        let n = case.net.n_bus();
        let theta: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.8..1.2)).collect();
        let l = network_matrix(&theta, &v, b);
        let z: Vec<f64> = (0..n).flat_map(|i| [theta[i], v[i]]).collect();
        let fd = common::fd_hessian(&|y: &[f64]| common::network_energy(b, y), &z, 1e-3);
        assert!(common::rel_err(&l, &fd) < 1e-8, "{}", common::rel_err(&l, &fd));
        assert!(linalg::asymmetry(&l) <= 1e-12);
        assert!((&l * rotation_vector(n)).amax() <= 1e-10);
    }
}

#[test]
fn single_generator_stable() {
    let cfg = SystemConfig::load(fixture("single_generator.json")).unwrap();
    let flow = cfg.solve_flow().unwrap();
    let rep = certify(&flow, &cfg.devices(&flow), &cfg.network().unwrap()).unwrap();
    assert_eq!(rep.verdict, Verdict::Stable);
}

#[test]
fn three_bus_agrees_with_eigen_oracle() {
    for name in ["three_bus.json", "three_bus_following.json"] {
        let cfg = SystemConfig::load(fixture(name)).unwrap();
        let (sys, eq) = cfg.build().unwrap();
        let rep = certify(&eq.flow, &sys.devices(), &sys.net).unwrap();
        let an = eig_verdict(&sys, &eq).unwrap();
        assert_eq!(rep.verdict, an.verdict, "{name}");
        assert!(rep.null_residual.unwrap() <= 1e-10);
        let m = rep.m_cond.as_ref().unwrap();
        assert!(linalg::asymmetry(m) <= 1e-12);
    }
}

#[test]
fn large_reactance_with_following_load_is_unstable() {
    let cfg = SystemConfig::load(fixture("three_bus_following.json")).unwrap();
    let flow = cfg.solve_flow().unwrap();
    let mut devices = cfg.devices(&flow);
    devices[2] = devices[2].with_reactances(2.0, 2.0);
    let rep = certify(&flow, &devices, &cfg.network().unwrap()).unwrap();
    assert_eq!(rep.verdict, Verdict::Unstable);
    let w = DVector::from_vec(rep.witness.clone().unwrap());
    assert!((w.norm() - 1.0).abs() < 1e-12);
    assert!(w.dot(&rotation_vector(3)).abs() < 1e-10);
    let m = rep.m_cond.unwrap();
    assert!(w.dot(&(&m * &w)) < -CERT_TOL);
}

#[test]
fn negative_gamma_names_the_bus() {
    // P = 10*0.8*1.2*sin(0.5), Q = 10*0.64 - 10*0.96*cos(0.5) at bus 0
    let net = Network::new(2, vec![Line::new(0, 1, 10.0)]).unwrap();
    let flow = PowerFlowSolution::from_voltages(vec![0.5, 0.0], vec![0.8, 1.2], &net);
    let (p, q) = (9.6 * 0.5f64.sin(), 6.4 - 9.6 * 0.5f64.cos());
    assert!((flow.p[0] - p).abs() < 1e-12 && (flow.q[0] - q).abs() < 1e-12);
    let (g, _) = oracle_gamma(0.8, p, q, 2.0, 0.2);
    assert!(g < -1.0, "{g}");
    let devices = [
        Device::Fdc(FdcParams { d: 1.0, x_d: 2.0, x_q: 0.2 }),
        Device::Vsg(VsgParams { m: 0.2, d: 1.0, x_d: XD, x_q: XQ }),
    ];
    let rep = certify(&flow, &devices, &net).unwrap();
    assert_eq!(rep.verdict, Verdict::Unstable);
    assert_eq!(rep.violating_bus, Some(0));
    assert!((rep.gammas[0].unwrap() - g).abs() < 1e-10);
}

#[test]
fn capability_error_carries_bus() {
    let net = Network::new(2, vec![Line::new(0, 1, 10.0)]).unwrap();
    let flow = PowerFlowSolution::from_voltages(vec![0.5, 0.0], vec![0.8, 1.2], &net);
    // Q + V^2/X_q < 0 at bus 0 once X_q is large
    let devices = [
        Device::Fdc(FdcParams { d: 1.0, x_d: 2.0, x_q: 1.0 }),
        Device::Vsg(VsgParams { m: 0.2, d: 1.0, x_d: XD, x_q: XQ }),
    ];
    let err = certify(&flow, &devices, &net).unwrap_err();
    assert!(matches!(err, Error::OutsideCapability { bus: Some(0), .. }), "{err}");
}

fn swap_dynamics<R: Rng>(rng: &mut R, d: &Device) -> Device {
    let (x_d, x_q) = match d.reactances() {
        Some(x) => x,
        None => return *d,
    };
    match rng.gen_range(0..3) {
        0 => Device::Fdc(FdcParams { d: rng.gen_range(0.1..10.0), x_d, x_q }),
        1 => Device::Vsg(VsgParams {
            m: rng.gen_range(0.01..3.0),
            d: rng.gen_range(0.1..10.0),
            x_d,
            x_q,
        }),
        _ => Device::TwoAxis(gridcert::devices::TwoAxisParams {
            m: rng.gen_range(0.01..3.0),
            d: rng.gen_range(0.1..10.0),
            tau_d: rng.gen_range(0.5..20.0),
            tau_q: rng.gen_range(0.1..5.0),
            x_d,
            x_q,
            x_d_prime: x_d * rng.gen_range(0.1..0.9),
            x_q_prime: x_q * rng.gen_range(0.1..0.9),
        }),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shift_invariance(seed in any::<u64>(), c in -4.0..4.0f64) {
        let case = random_case(&mut ChaCha8Rng::seed_from_u64(seed), &SampleOptions::default());
        let a = certify(&case.flow, &case.devices, &case.net).unwrap();
        let b = certify(&case.flow.shifted(c), &case.devices, &case.net).unwrap();
        prop_assert_eq!(a.verdict, b.verdict);
        if let (Some(x), Some(y)) = (a.min_eig, b.min_eig) {
            prop_assert!((x - y).abs() < 1e-9 * x.abs().max(1.0));
        }
    }

    #[test]
    fn dynamics_independence(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let case = random_case(&mut rng, &SampleOptions::default());
        let base = certify(&case.flow, &case.devices, &case.net).unwrap();
        let swapped: Vec<Device> = case.devices.iter().map(|d| swap_dynamics(&mut rng, d)).collect();
        let other = certify(&case.flow, &swapped, &case.net).unwrap();
        prop_assert_eq!(base.verdict, other.verdict);
    }

    #[test]
    fn certificate_matrices_symmetric(seed in any::<u64>()) {
        let case = random_case(&mut ChaCha8Rng::seed_from_u64(seed), &SampleOptions::default());
        let rep = certify(&case.flow, &case.devices, &case.net).unwrap();
        prop_assert!(linalg::asymmetry(&rep.l_matrix) <= 1e-12);
        if let Some(m) = &rep.m_cond {
            prop_assert!(linalg::asymmetry(m) <= 1e-12);
            prop_assert!(rep.null_residual.unwrap() <= 1e-10);
        }
    }
}
