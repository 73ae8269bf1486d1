//! Effective number of molecules coupled to the cavity mode for Gaussian
//! clouds of different size and placement.

use cavity_detect::physparams::{effective_atom_number, ModeGeometry};

fn main() -> cavity_detect::Result<()> {
    let mode = ModeGeometry::symmetric(11.8e-3, 10e-3, 675e-9)?;
    println!(
        "waist {:.2} um, Rayleigh range {:.2} mm, mode volume {:.3e} m^3",
        mode.waist * 1e6,
        mode.rayleigh_range * 1e3,
        mode.mode_volume
    );
    let n_total = 1e6;
    println!("{:>10} {:>10} {:>12} {:>8} {:>12}", "sigma_r um", "sigma_z um", "offset_x um", "<f^2>", "N_c");
    for (sr, sz, x) in [(5.0, 5.0, 0.0), (10.0, 50.0, 0.0), (30.0, 30.0, 0.0), (30.0, 30.0, 30.0), (100.0, 1000.0, 0.0)] {
        let q = effective_atom_number(n_total, [sr * 1e-6, sr * 1e-6, sz * 1e-6], [x * 1e-6, 0.0, 0.0], &mode)?;
        println!("{sr:>10.0} {sz:>10.0} {x:>12.0} {:>8.4} {:>12.4e}", q.mean_f2, q.n_c);
    }
    Ok(())
}
