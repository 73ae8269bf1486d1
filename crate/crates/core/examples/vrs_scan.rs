//! Scan a probe across the vacuum Rabi doublet and compare the splitting
//! with 2 g0 sqrt(N_c).
//!
//! cargo run --release --example vrs_scan -- [N_c]

use cavity_detect::analytics::peaks::DEFAULT_PROMINENCE;
use cavity_detect::analytics::{find_peaks, loss_fraction, vrs_splitting};
use cavity_detect::constants::TWO_PI;
use cavity_detect::dynamics::{run_vrs_scan, ScanSpec, Tolerances};
use cavity_detect::io::load_config;
use cavity_detect::model::validate;

fn main() -> cavity_detect::Result<()> {
    let n_c: f64 = std::env::args().nth(1).map_or(5e4, |s| s.parse().expect("N_c must be a number"));
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/vrs_baseline.toml");
    let mut config = load_config(&path)?;
    config.ensemble.n_c = Some(n_c);
    let model = validate(&config)?;

    let scan = ScanSpec::vrs_default(&model);
    let result = run_vrs_scan(&model, &scan, &Tolerances::default())?;
    let peaks = find_peaks(&result.detunings(), &result.powers(), DEFAULT_PROMINENCE)?;

    println!("N_c = {n_c:e}, input {:.3e} W, {} steps of {:.1e} s", model.drive.p_in, scan.steps, scan.dwell);
    for p in &peaks {
        println!("  peak at {:+9.3} MHz, {:.3e} W", p.position / TWO_PI / 1e6, p.height);
    }
    if let [a, b] = peaks[..] {
        let formula = vrs_splitting(model.cavity.g0, n_c);
        println!("  splitting {:.3} MHz, formula {:.3} MHz", (b.position - a.position) / TWO_PI / 1e6, formula / TWO_PI / 1e6);
    }
    println!("  loss per scan {:.4}%", loss_fraction(&result).headline * 100.0);
    Ok(())
}
