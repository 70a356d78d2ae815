//! Energy Hessians of the device models at one operating point, and the
//! Schur complements that connect them.
//!
//! cargo run --example energy_hessians

use gridcert::certificate::{gamma, gamma_block};
use gridcert::devices::{energy_hessian, stationary_state, BusOperatingPoint, Component};
use gridcert::{linalg, Device, FdcParams, TwoAxisParams, VsgParams};
use nalgebra::DMatrix;

const OMEGA0: f64 = 2.0 * std::f64::consts::PI * 60.0;

fn show(label: &str, m: &DMatrix<f64>) {
    println!("{label}");
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| format!("{:>10.4}", m[(r, c)])).collect();
        println!("  {}", row.join(" "));
    }
}

fn main() -> gridcert::Result<()> {
    let rho = BusOperatingPoint::new(1.0, 1.0, 0.2886);
    let theta = -0.0308;
    let two_axis = TwoAxisParams {
        m: 0.2,
        d: 1.0,
        tau_d: 5.0,
        tau_q: 1.0,
        x_d: 0.1,
        x_q: 0.069,
        x_d_prime: 0.05,
        x_q_prime: 0.03,
    };
    let vsg = VsgParams { m: 0.2, d: 1.0, x_d: 0.1, x_q: 0.069 };

    let hessian = |device: Device| -> gridcert::Result<DMatrix<f64>> {
        let comp = Component::at_operating_point(device, &rho)?;
        let state = stationary_state(theta, &rho, &comp)?;
        Ok(energy_hessian(&comp, &state, theta, rho.v, OMEGA0))
    };

    let h2 = hessian(Device::TwoAxis(two_axis))?;
    show("two-axis, order (delta, omega, E_q, E_d, theta, V)", &h2);
    let h2r = linalg::schur_complement(&h2, &[0, 1, 4, 5], &[2, 3])?;
    show("two-axis with (E_q, E_d) eliminated", &h2r);
    let hv = hessian(Device::Vsg(vsg))?;
    show("VSG, order (delta, omega, theta, V)", &hv);
    let hf = hessian(Device::Fdc(FdcParams { d: 1.0, x_d: 0.1, x_q: 0.069 }))?;
    show("FDC, order (delta, theta, V)", &hf);

    let g = gamma(&rho, vsg.x_d, vsg.x_q)?;
    let blk = gamma_block(&rho, vsg.x_d, vsg.x_q)?;
    let schur = linalg::schur_complement(&hf, &[1, 2], &[0])?;
    println!("gamma = {g:.6}  (FDC delta-delta entry {:.6})", hf[(0, 0)]);
    println!(
        "Gamma = [[{:.6}, {:.6}], [{:.6}, {:.6}]]",
        blk[(0, 0)],
        blk[(0, 1)],
        blk[(1, 0)],
        blk[(1, 1)]
    );
    show("FDC with delta eliminated", &schur);
    Ok(())
}
