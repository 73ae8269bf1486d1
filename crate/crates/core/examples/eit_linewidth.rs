//! EIT line narrowing: fitted width of the simulated scan against the exact
//! and large-control width formulas, for a few molecule numbers.

use cavity_detect::analytics::{eit_fwhm, fit_lorentzian, loss_fraction, FwhmForm};
use cavity_detect::constants::TWO_PI;
use cavity_detect::dynamics::{run_eit_scan, ScanSpec, Tolerances};
use cavity_detect::io::load_config;
use cavity_detect::model::validate;

fn main() -> cavity_detect::Result<()> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/eit_baseline.toml");
    let base = load_config(&path)?;
    println!("{:>8} {:>12} {:>12} {:>12} {:>10}", "N_c", "fit kHz", "exact kHz", "simple kHz", "loss %");
    for n_c in [0.0, 1e3, 1e4, 5e4] {
        let mut c = base.clone();
        c.ensemble.n_c = Some(n_c);
        let m = validate(&c)?;
        let r = run_eit_scan(&m, &ScanSpec::eit_default(&m), &Tolerances::default())?;
        let fit = fit_lorentzian(&r.detunings(), &r.powers())?;
        let width = |form| eit_fwhm(m.cavity.g0, n_c, m.drive.omega_control, m.cavity.kappa_t, m.levels.gamma_t, form).width;
        let khz = |w: f64| w / TWO_PI / 1e3;
        println!(
            "{n_c:>8.0e} {:>12.2} {:>12.2} {:>12.2} {:>10.4}",
            khz(fit.params.fwhm()),
            khz(width(FwhmForm::Exact)),
            khz(width(FwhmForm::Simplified)),
            loss_fraction(&r).headline * 100.0
        );
    }
    Ok(())
}
