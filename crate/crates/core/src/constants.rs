//! CODATA values used for photon and coupling bookkeeping (SI).

pub const PLANCK: f64 = 6.626_070_15e-34;
pub const HBAR: f64 = PLANCK / (2.0 * std::f64::consts::PI);
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_8188e-12;
pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Converts an ordinary frequency (Hz) to angular frequency (rad/s).
#[inline]
pub fn angular(hz: f64) -> f64 {
    hz * TWO_PI
}

/// Converts an angular frequency (rad/s) to ordinary frequency (Hz).
#[inline]
pub fn ordinary(rad_per_s: f64) -> f64 {
    rad_per_s / TWO_PI
}
