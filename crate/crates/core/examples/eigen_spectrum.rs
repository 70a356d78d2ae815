//! Compare the certificate with the spectrum of the Kron-reduced
//! linearization, for both load modes of the three-bus system.
//!
//! cargo run --example eigen_spectrum

use gridcert::config::SystemConfig;
use gridcert::{certify, eig_verdict};

fn main() -> gridcert::Result<()> {
    for name in ["three_bus.json", "three_bus_following.json"] {
        let path = format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
        let cfg = SystemConfig::load(path)?;
        let (sys, eq) = cfg.build()?;
        let an = eig_verdict(&sys, &eq)?;
        let report = certify(&eq.flow, &sys.devices(), &sys.net)?;

        println!("{name}");
        let mut spectrum = an.spectrum.clone();
        spectrum.sort_by(|a, b| b.re.total_cmp(&a.re));
        for l in &spectrum {
            println!("  {:>12.6} {:+12.6}i", l.re, l.im);
        }
        println!(
            "  rotational mode {:.1e}, max real part otherwise {:.4}",
            an.spectrum[an.zero_mode].norm(),
            an.max_real
        );
        println!("  eigen verdict {}, certificate verdict {}\n", an.verdict, report.verdict);
    }
    Ok(())
}
