//! Photon bookkeeping for the detection operating point: input power, drive
//! rate, intracavity photon number and output flux.

use cavity_detect::analytics::formulas::{transmission_peak, LockedDetuning};
use cavity_detect::io::load_config;
use cavity_detect::model::validate;
use cavity_detect::physparams::{input_power_from_eta, photon_energy, photon_flux};

fn main() -> cavity_detect::Result<()> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/vrs_baseline.toml");
    let m = validate(&load_config(&path)?)?;
    let lambda = m.wavelength();
    println!("photon energy at {:.0} nm: {:.4e} J", lambda * 1e9, photon_energy(lambda));
    println!("10 pW = {:.3e} photons/s", photon_flux(10e-12, lambda));

    let peak = transmission_peak(&m, LockedDetuning::from_model(&m));
    let n_bar = peak.n_bar_per_eta2 * m.drive.eta * m.drive.eta;
    println!("drive eta = {:.4e}/s from {:.3e} W input", m.drive.eta, m.drive.p_in);
    println!(
        "  input recovered from eta: {:.3e} W",
        input_power_from_eta(m.drive.eta, m.cavity.kappa_r1, lambda, m.drive.flux_convention)
    );
    println!("weak-probe peak: n_bar = {n_bar:.3}, output {:.3e} W", m.output_power_for(n_bar));
    println!("output photons/s at the peak: {:.3e}", photon_flux(m.output_power_for(n_bar), lambda));
    Ok(())
}
