//! Physical inputs to model rates: resonator mode geometry, the single-molecule
//! coupling, photon-flux bookkeeping and the effective coupled molecule number.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{HBAR, PLANCK, SPEED_OF_LIGHT, VACUUM_PERMITTIVITY};
use crate::error::{Error, Result};

/// How cavity amplitude, photon number and in/out fluxes are related.
///
/// With `Field` the decay constants are field (amplitude) rates: photon number
/// decays at `2 kappa_t`, the output flux is `2 kappa_r2 n` and the injection
/// amplitude obeys `eta^2 = 2 kappa_r1 Phi_in`. `Energy` drops both factors of
/// two, which doubles the intracavity photon number needed for a given output.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FluxConvention {
    #[default]
    Field,
    Energy,
}

impl FluxConvention {
    /// Factor between a mirror's decay constant and the photon flux it carries per photon.
    pub fn mirror_factor(self) -> f64 {
        match self {
            FluxConvention::Field => 2.0,
            FluxConvention::Energy => 1.0,
        }
    }
}

/// Fundamental Gaussian mode of a symmetric two-mirror resonator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeGeometry {
    pub waist: f64,
    pub rayleigh_range: f64,
    pub mode_volume: f64,
    pub wavelength: f64,
    pub length: f64,
}

impl ModeGeometry {
    /// Mode of a symmetric resonator with mirror separation `length` and
    /// radius of curvature `roc`.
    pub fn symmetric(length: f64, roc: f64, wavelength: f64) -> Result<Self> {
        let waist = cavity_waist(length, roc, wavelength)?;
        Ok(Self::from_waist(waist, length, wavelength))
    }

    /// Mode with an explicitly given waist; the Rayleigh range follows from it.
    pub fn from_waist(waist: f64, length: f64, wavelength: f64) -> Self {
        Self {
            waist,
            rayleigh_range: PI * waist * waist / wavelength,
            mode_volume: mode_volume(waist, length),
            wavelength,
            length,
        }
    }

    /// Beam radius at axial position `z` from the waist.
    pub fn beam_radius(&self, z: f64) -> f64 {
        let r = z / self.rayleigh_range;
        self.waist * (1.0 + r * r).sqrt()
    }

    /// Standing-wave mode function `cos(kz) exp(-(x^2+y^2)/w(z)^2)`.
    pub fn mode_function(&self, x: f64, y: f64, z: f64) -> f64 {
        let w = self.beam_radius(z);
        let k = 2.0 * PI / self.wavelength;
        (k * z).cos() * (-(x * x + y * y) / (w * w)).exp()
    }
}

/// Rayleigh range of a symmetric resonator, `z_R = sqrt(L (2R - L)) / 2`.
pub fn rayleigh_range(length: f64, roc: f64) -> Result<f64> {
    if !(length > 0.0 && length < 2.0 * roc) {
        return Err(Error::Domain(format!(
            "unstable resonator: length {length} m must lie in (0, 2*roc = {} m)",
            2.0 * roc
        )));
    }
    Ok(0.5 * (length * (2.0 * roc - length)).sqrt())
}

/// Waist radius `w0` of the fundamental mode of a symmetric resonator.
pub fn cavity_waist(length: f64, roc: f64, wavelength: f64) -> Result<f64> {
    if !(wavelength > 0.0) {
        return Err(Error::Domain(format!("wavelength must be positive, got {wavelength}")));
    }
    let z_r = rayleigh_range(length, roc)?;
    Ok((wavelength * z_r / PI).sqrt())
}

/// Standing-wave Gaussian mode volume `(pi/4) w0^2 L`.
pub fn mode_volume(waist: f64, length: f64) -> f64 {
    0.25 * PI * waist * waist * length
}

/// Peak single-molecule coupling `mu sqrt(omega / (2 hbar eps0 V))` in rad/s.
///
/// The sign of the dipole matrix element is dropped; only `g0^2` and
/// `g0 sqrt(N_c)` enter observables.
pub fn coupling_g0(mu_ge: f64, omega_cv: f64, mode_volume: f64) -> Result<f64> {
    if !(omega_cv > 0.0 && mode_volume > 0.0) || mu_ge < 0.0 {
        return Err(Error::Domain(format!(
            "coupling needs mu >= 0, omega > 0, V > 0 (got {mu_ge}, {omega_cv}, {mode_volume})"
        )));
    }
    Ok(mu_ge * (omega_cv / (2.0 * HBAR * VACUUM_PERMITTIVITY * mode_volume)).sqrt())
}

pub fn photon_energy(wavelength: f64) -> f64 {
    PLANCK * SPEED_OF_LIGHT / wavelength
}

/// Photons per second carried by a beam of `power` watts.
pub fn photon_flux(power: f64, wavelength: f64) -> f64 {
    power * wavelength / (PLANCK * SPEED_OF_LIGHT)
}

/// Inverse of [`photon_flux`].
pub fn power_from_flux(flux: f64, wavelength: f64) -> f64 {
    flux * PLANCK * SPEED_OF_LIGHT / wavelength
}

/// Classical injection amplitude `eta` for an incident power `p_in`.
///
/// With the field convention an empty resonant cavity settles at
/// `n = eta^2 / kappa_t^2` and emits `2 kappa_r2 n` photons per second.
pub fn eta_from_input(p_in: f64, kappa_r1: f64, wavelength: f64, convention: FluxConvention) -> f64 {
    (convention.mirror_factor() * kappa_r1 * photon_flux(p_in, wavelength)).sqrt()
}

/// Inverse of [`eta_from_input`].
pub fn input_power_from_eta(eta: f64, kappa_r1: f64, wavelength: f64, convention: FluxConvention) -> f64 {
    if eta == 0.0 {
        return 0.0;
    }
    power_from_flux(eta * eta / (convention.mirror_factor() * kappa_r1), wavelength)
}

/// Photons per second leaving through the output mirror.
pub fn output_flux(n_bar: f64, kappa_r2: f64, convention: FluxConvention) -> f64 {
    convention.mirror_factor() * kappa_r2 * n_bar
}

/// Power transmitted through the output mirror for cavity amplitude `alpha`.
pub fn output_power(alpha: Complex64, kappa_r2: f64, wavelength: f64, convention: FluxConvention) -> f64 {
    photon_energy(wavelength) * output_flux(alpha.norm_sqr(), kappa_r2, convention)
}

/// Result of the mode/cloud overlap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeOverlap {
    /// `<f^2>` averaged over the cloud density.
    pub mean_f2: f64,
    pub n_c: f64,
    /// Set when the cloud barely touches the mode (`<f^2> < 1e-9`).
    pub far_from_mode: bool,
}

const FAR_FROM_MODE: f64 = 1e-9;

/// Effective coupled number `N_c = N <f^2>` for a Gaussian cloud.
///
/// Transverse averages are done in closed form; the axial average is
/// Simpson quadrature, split into the slowly varying envelope and the
/// `cos(2kz)` standing-wave term so that long clouds do not need to resolve
/// every fringe.
pub fn effective_atom_number(
    n_total: f64,
    sigmas: [f64; 3],
    center: [f64; 3],
    mode: &ModeGeometry,
) -> Result<ModeOverlap> {
    if sigmas.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::Domain(format!("cloud sigmas must be positive, got {sigmas:?}")));
    }
    let [sx, sy, sz] = sigmas;
    let [cx, cy, cz] = center;

    let transverse = |z: f64| {
        let w2 = mode.beam_radius(z).powi(2);
        let axis = |s: f64, c: f64| {
            let denom = w2 + 4.0 * s * s;
            (w2 / denom).sqrt() * (-2.0 * c * c / denom).exp()
        };
        axis(sx, cx) * axis(sy, cy)
    };
    let density = |z: f64| {
        let u = (z - cz) / sz;
        (-0.5 * u * u).exp() / (sz * (2.0 * PI).sqrt())
    };

    let lo = cz - 8.0 * sz;
    let hi = cz + 8.0 * sz;
    let envelope = simpson(|z| density(z) * transverse(z), lo, hi, 2048);

    let k = 2.0 * PI / mode.wavelength;
    // Fringe contrast of the cloud is exp(-2 k^2 sz^2); below e^-700 it is exactly zero in f64.
    let fringe = if 2.0 * k * k * sz * sz > 700.0 {
        0.0
    } else {
        let step = mode.wavelength / 64.0;
        let intervals = ((hi - lo) / step).ceil().max(2048.0) as usize;
        simpson(|z| density(z) * transverse(z) * (2.0 * k * z).cos(), lo, hi, intervals)
    };

    let mean_f2 = 0.5 * (envelope + fringe);
    let far_from_mode = mean_f2 < FAR_FROM_MODE;
    if far_from_mode {
        log::warn!("cloud overlap with cavity mode is {mean_f2:e}; N_c is negligible");
    }
    Ok(ModeOverlap {
        mean_f2,
        n_c: n_total * mean_f2,
        far_from_mode,
    })
}

fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (hi - lo) / n as f64;
    let mut acc = f(lo) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + i as f64 * h);
    }
    acc * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{angular, TWO_PI};

    const LAMBDA: f64 = 675e-9;

    #[test]
    fn reference_geometry_waist_is_near_thirty_microns() {
        let w0 = cavity_waist(11.8e-3, 10e-3, LAMBDA).unwrap();
        assert!((w0 - 32.5e-6).abs() < 0.1e-6, "w0 = {w0}");
        assert!((w0 - 30e-6).abs() / 30e-6 < 0.1);
    }

    #[test]
    fn confocal_waist_closed_form() {
        let w0 = cavity_waist(10e-3, 10e-3, LAMBDA).unwrap();
        let expected = (LAMBDA * 10e-3 / TWO_PI).sqrt();
        assert!((w0 - expected).abs() / expected < 1e-14);
    }

    #[test]
    fn waist_scales_with_sqrt_wavelength() {
        let a = cavity_waist(11.8e-3, 10e-3, LAMBDA).unwrap();
        let b = cavity_waist(11.8e-3, 10e-3, 2.0 * LAMBDA).unwrap();
        assert!((b / a - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn unstable_geometry_rejected() {
        assert!(cavity_waist(25e-3, 10e-3, LAMBDA).is_err());
        assert!(cavity_waist(0.0, 10e-3, LAMBDA).is_err());
    }

    #[test]
    fn g0_vanishes_without_dipole_and_halves_with_quadruple_volume() {
        assert_eq!(coupling_g0(0.0, 2.8e15, 1e-11).unwrap(), 0.0);
        let g = coupling_g0(4.8e-29, 2.8e15, 1e-11).unwrap();
        let g4 = coupling_g0(4.8e-29, 2.8e15, 4e-11).unwrap();
        assert_eq!(g4, g / 2.0);
        assert!(coupling_g0(1e-29, 2.8e15, 0.0).is_err());
    }

    #[test]
    fn g0_from_table_dipole_matches_hand_evaluation() {
        // Hand evaluation in SI: w0^2 = lambda z_R / pi with z_R = 0.5 sqrt(11.8e-3 * 8.2e-3),
        // V = pi/4 w0^2 L, omega = 2 pi c / lambda.
        let z_r = 0.5 * (11.8e-3f64 * 8.2e-3).sqrt();
        let w0_sq = 675e-9 * z_r / std::f64::consts::PI;
        let v = 0.25 * std::f64::consts::PI * w0_sq * 11.8e-3;
        assert!((v - 9.793e-12).abs() / 9.793e-12 < 1e-3, "V = {v}");
        let omega = TWO_PI * 299_792_458.0 / 675e-9;
        let hbar = 1.054_571_817e-34;
        let eps0 = 8.854_187_8128e-12;
        let hand = 4.8e-29 * (omega / (2.0 * hbar * eps0 * v)).sqrt();
        // about 2.98 MHz (ordinary), an order of magnitude above the quoted 219.2 kHz
        assert!((hand / TWO_PI - 2.98e6).abs() < 0.01e6, "g0/2pi = {}", hand / TWO_PI);

        let mode = ModeGeometry::symmetric(11.8e-3, 10e-3, 675e-9).unwrap();
        let g0 = coupling_g0(4.8e-29, omega, mode.mode_volume).unwrap();
        assert!((g0 - hand).abs() / hand < 1e-9);
    }

    #[test]
    fn photon_flux_arithmetic() {
        // P / (h nu) with nu = c / lambda
        let nu = 299_792_458.0 / 794e-9;
        let expected = 10e-12 / (6.626_070_15e-34 * nu);
        let flux = photon_flux(10e-12, 794e-9);
        assert!((flux - expected).abs() / expected < 1e-12);
        assert!((flux - 4.0e7).abs() / 4.0e7 < 0.01);

        let flux675 = photon_flux(10e-12, 675e-9);
        assert!((flux675 - 3.4e7).abs() / 3.4e7 < 0.01);
        assert_eq!(photon_flux(0.0, 675e-9), 0.0);
    }

    #[test]
    fn empty_cavity_transmission_ratio() {
        let kappa_t = angular(2.5e6);
        let (k1, k2) = (0.1 * kappa_t, 0.8 * kappa_t);
        let p_in = 1e-10;
        let eta = eta_from_input(p_in, k1, LAMBDA, FluxConvention::Field);
        // resonant empty cavity: alpha = -eta / kappa_t
        let alpha = Complex64::new(-eta / kappa_t, 0.0);
        let p_out = output_power(alpha, k2, LAMBDA, FluxConvention::Field);
        assert!((p_out / p_in - 0.32).abs() < 1e-12);
        assert_eq!(eta_from_input(0.0, k1, LAMBDA, FluxConvention::Field), 0.0);
    }

    #[test]
    fn one_photon_output_power() {
        let k2 = 0.8 * angular(2.5e6);
        let p = output_power(Complex64::new(1.0, 0.0), k2, LAMBDA, FluxConvention::Field);
        let expected = 6.626_070_15e-34 * 299_792_458.0 / LAMBDA * 2.0 * k2;
        assert!((p - expected).abs() / expected < 1e-12);
        assert!((p - 7.4e-12).abs() < 0.05e-12, "p = {p}");
        assert_eq!(output_power(Complex64::new(0.0, 0.0), k2, LAMBDA, FluxConvention::Field), 0.0);
    }

    #[test]
    fn eta_round_trip() {
        for conv in [FluxConvention::Field, FluxConvention::Energy] {
            let k1 = angular(0.25e6);
            let eta = eta_from_input(2.3e-10, k1, LAMBDA, conv);
            let back = input_power_from_eta(eta, k1, LAMBDA, conv);
            assert!((back - 2.3e-10).abs() / 2.3e-10 < 1e-13);
        }
    }

    #[test]
    fn point_cloud_at_antinode_couples_fully() {
        let mode = ModeGeometry::symmetric(11.8e-3, 10e-3, LAMBDA).unwrap();
        let o = effective_atom_number(1e5, [1e-12; 3], [0.0; 3], &mode).unwrap();
        assert!((o.n_c - 1e5).abs() / 1e5 < 1e-9, "n_c = {}", o.n_c);
    }

    #[test]
    fn axially_long_cloud_averages_to_half() {
        let mode = ModeGeometry::symmetric(11.8e-3, 10e-3, LAMBDA).unwrap();
        let (sx, sy, sz) = (10e-6, 15e-6, 50e-6);
        let o = effective_atom_number(1.0, [sx, sy, sz], [0.0; 3], &mode).unwrap();
        let w2 = mode.waist * mode.waist;
        let transverse = (w2 / (w2 + 4.0 * sx * sx)).sqrt() * (w2 / (w2 + 4.0 * sy * sy)).sqrt();
        let closed = 0.5 * transverse;
        assert!((o.mean_f2 - closed).abs() / closed < 1e-3, "{} vs {closed}", o.mean_f2);
    }

    #[test]
    fn far_cloud_flagged() {
        let mode = ModeGeometry::symmetric(11.8e-3, 10e-3, LAMBDA).unwrap();
        let o = effective_atom_number(1e6, [5e-6; 3], [1e-3, 0.0, 0.0], &mode).unwrap();
        assert!(o.far_from_mode);
        assert!(effective_atom_number(1e6, [0.0, 1e-6, 1e-6], [0.0; 3], &mode).is_err());
    }
}
