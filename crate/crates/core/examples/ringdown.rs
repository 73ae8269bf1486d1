//! Repeated ring-down measurements: settle, switch the probe off, fit the
//! decay, and accumulate the dark-state loss over the cycles.

use cavity_detect::analytics::{eit_fwhm, fit_exponential, loss_fraction, FwhmForm};
use cavity_detect::dynamics::{run_ringdown, RingdownSpec, Tolerances};
use cavity_detect::io::load_config;
use cavity_detect::model::validate;

fn main() -> cavity_detect::Result<()> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/ringdown_baseline.toml");
    let base = load_config(&path)?;
    for n_c in [0.0, 1e3, 5e4] {
        let mut c = base.clone();
        c.ensemble.n_c = Some(n_c);
        let m = validate(&c)?;
        let spec = RingdownSpec::from_run(&m, &c.run)?;
        let r = run_ringdown(&m, &spec, &Tolerances::default())?;
        let first = &r.cycles[0];
        let fit = fit_exponential(&first.times, &first.p_out)?;
        let two_d = eit_fwhm(m.cavity.g0, n_c, m.drive.omega_control, m.cavity.kappa_t, m.levels.gamma_t, FwhmForm::Simplified);
        let loss = loss_fraction(&r);
        println!(
            "N_c {n_c:>6.0e}: rate {:.4e}/s (2d {:.4e}/s), settle {:.2e} s, loss after {} cycles {:.4e}%",
            fit.params.rate,
            two_d.width,
            first.settle_time,
            spec.cycles,
            loss.cumulative * 100.0
        );
    }
    Ok(())
}
