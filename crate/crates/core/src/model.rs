//! Domain types shared by every module, the on-disk configuration schema and
//! its validation into an immutable [`Model`].
//!
//! Configuration values are ordinary frequencies in Hz, lengths in metres and
//! powers in watts. [`validate`] converts every frequency to rad/s exactly once
//! and materialises derived quantities (`gamma_t`, `g0`, `N_c`, `eta`).

use serde::{Deserialize, Serialize};

use crate::analytics::formulas::{transmission_peak, LockedDetuning};
use crate::constants::{angular, ordinary, SPEED_OF_LIGHT, TWO_PI};
use crate::error::{Error, FieldError, Result};
use crate::physparams::{
    coupling_g0, effective_atom_number, eta_from_input, input_power_from_eta, photon_energy,
    output_flux, FluxConvention, ModeGeometry,
};

pub const DEFAULT_WAVELENGTH: f64 = 675e-9;

// ---------------------------------------------------------------------------
// Configuration schema (ordinary Hz, SI)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub levels: LevelsConfig,
    pub cavity: CavityConfig,
    pub drive: DriveConfig,
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub run: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelsConfig {
    pub gamma1_hz: f64,
    pub gamma2_hz: f64,
    #[serde(default)]
    pub gamma3_hz: f64,
    #[serde(default)]
    pub gamma_gg_prime_hz: f64,
    /// Dipole of the cavity transition, C m.
    pub mu_ge: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_gprime_e: Option<f64>,
    #[serde(default = "default_wavelength")]
    pub lambda_transition_m: f64,
}

fn default_wavelength() -> f64 {
    DEFAULT_WAVELENGTH
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityConfig {
    pub kappa_t_hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_r1_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_r1_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_r2_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_r2_fraction: Option<f64>,
    pub length_m: f64,
    pub roc_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub waist_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode_volume_m3: Option<f64>,
    /// Overrides the dipole-derived coupling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g0_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resonance_hz: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OmegaConvention {
    /// `omega_control_hz` is an ordinary frequency and is multiplied by 2 pi.
    #[default]
    Ordinary,
    /// `omega_control_hz` is already in rad/s.
    Angular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_in_w: Option<f64>,
    /// Calibrate the drive so that the weak-probe transmission maximum emits this power.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_peak_p_out_w: Option<f64>,
    #[serde(default)]
    pub delta_pc_hz: f64,
    /// Defaults to `delta_pc_hz` (cavity resonant with the molecular transition).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_pa_hz: Option<f64>,
    #[serde(default)]
    pub delta_ra_hz: f64,
    #[serde(default)]
    pub omega_control_hz: f64,
    #[serde(default)]
    pub omega_convention: OmegaConvention,
    #[serde(default)]
    pub flux_convention: FluxConvention,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_total: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cloud_sigma_m: Option<[f64; 3]>,
    #[serde(default = "zero3")]
    pub cloud_center_m: [f64; 3],
}

fn zero3() -> [f64; 3] {
    [0.0; 3]
}

/// Run-control knobs; every field has a scheme-dependent default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dwell_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_hz: Option<f64>,
    /// Scan half-span in units of the feature width (splitting or EIT linewidth).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span_factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rtol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub settle_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_settle_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observe_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycles: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
}

// ---------------------------------------------------------------------------
// Validated model (rad/s, SI)
// ---------------------------------------------------------------------------

/// Decay rates and dipoles of the effective 3- or 4-level molecule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelScheme {
    pub gamma1: f64,
    pub gamma2: f64,
    /// Decay into the aggregate dark level `|g''>`; zero for the 3-level scheme.
    pub gamma3: f64,
    pub gamma_t: f64,
    pub gamma_gg_prime: f64,
    pub mu_ge: f64,
    pub mu_gprime_e: Option<f64>,
    pub lambda_transition: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    pub kappa_t: f64,
    pub kappa_r1: f64,
    pub kappa_r2: f64,
    pub length: f64,
    pub roc: f64,
    pub waist: f64,
    pub mode_volume: f64,
    pub g0: f64,
    /// `g0` evaluated from the dipole and mode volume, kept for comparison
    /// when `g0` is overridden.
    pub g0_from_dipole: f64,
    pub omega_cv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    pub p_in: f64,
    pub eta: f64,
    pub delta_pc: f64,
    pub delta_pa: f64,
    pub delta_ra: f64,
    pub omega_control: f64,
    pub omega_convention: OmegaConvention,
    pub flux_convention: FluxConvention,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleParams {
    pub n_total: f64,
    pub n_c: f64,
    pub cloud_sigmas: Option<[f64; 3]>,
    pub cloud_center: [f64; 3],
}

/// A fully validated model; immutable and shareable across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub levels: LevelScheme,
    pub cavity: CavityParams,
    pub drive: DriveParams,
    pub ensemble: EnsembleParams,
}

impl Model {
    pub fn wavelength(&self) -> f64 {
        self.levels.lambda_transition
    }

    /// Collective coupling `g0 sqrt(N_c)`.
    pub fn collective_coupling(&self) -> f64 {
        self.cavity.g0 * self.ensemble.n_c.sqrt()
    }

    /// Output power for a given intracavity photon number.
    pub fn output_power_for(&self, n_bar: f64) -> f64 {
        photon_energy(self.wavelength())
            * output_flux(n_bar, self.cavity.kappa_r2, self.drive.flux_convention)
    }

    /// Offset between probe-atom and probe-cavity detuning, held fixed in scans.
    pub fn atom_cavity_offset(&self) -> f64 {
        self.drive.delta_pa - self.drive.delta_pc
    }

    pub fn with_detunings(&self, delta_pc: f64, delta_pa: f64, delta_ra: f64) -> Model {
        let mut m = self.clone();
        m.drive.delta_pc = delta_pc;
        m.drive.delta_pa = delta_pa;
        m.drive.delta_ra = delta_ra;
        m
    }

    pub fn with_eta(&self, eta: f64) -> Model {
        let mut m = self.clone();
        m.drive.eta = eta;
        m
    }

    /// Re-check every invariant of an already validated model.
    pub fn check(&self) -> Result<()> {
        let mut errs = Vec::new();
        let l = &self.levels;
        for (p, v) in [
            ("levels.gamma1_hz", l.gamma1),
            ("levels.gamma2_hz", l.gamma2),
            ("levels.gamma3_hz", l.gamma3),
            ("levels.gamma_gg_prime_hz", l.gamma_gg_prime),
        ] {
            if !(v >= 0.0) {
                errs.push(FieldError::new(p, "rate must be >= 0"));
            }
        }
        if !(l.gamma_t > 0.0) {
            errs.push(FieldError::new("levels", "total decay rate must be > 0"));
        }
        let c = &self.cavity;
        if c.kappa_r1 + c.kappa_r2 > c.kappa_t * (1.0 + 1e-12) {
            errs.push(FieldError::new("cavity", "mirror losses exceed total"));
        }
        if !(c.length > 0.0 && c.length < 2.0 * c.roc) {
            errs.push(FieldError::new("cavity.length_m", "unstable resonator"));
        }
        if !(c.g0 > 0.0) || !(c.mode_volume > 0.0) {
            errs.push(FieldError::new("cavity", "g0 and mode volume must be positive"));
        }
        let e = &self.ensemble;
        if !(e.n_c >= 0.0 && e.n_c <= e.n_total * (1.0 + 1e-12)) {
            errs.push(FieldError::new("ensemble.n_c", "must satisfy 0 <= n_c <= n_total"));
        }
        if !(self.drive.p_in >= 0.0 && self.drive.eta >= 0.0) {
            errs.push(FieldError::new("drive", "input power and eta must be >= 0"));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }

    /// Explicit configuration reproducing this model: every derived quantity is
    /// written as an override and the inputs it was derived from are dropped.
    pub fn to_config(&self) -> Config {
        let l = &self.levels;
        let c = &self.cavity;
        let d = &self.drive;
        let e = &self.ensemble;
        let omega_control_hz = match d.omega_convention {
            OmegaConvention::Ordinary => ordinary(d.omega_control),
            OmegaConvention::Angular => d.omega_control,
        };
        Config {
            levels: LevelsConfig {
                gamma1_hz: ordinary(l.gamma1),
                gamma2_hz: ordinary(l.gamma2),
                gamma3_hz: ordinary(l.gamma3),
                gamma_gg_prime_hz: ordinary(l.gamma_gg_prime),
                mu_ge: l.mu_ge,
                mu_gprime_e: l.mu_gprime_e,
                lambda_transition_m: l.lambda_transition,
            },
            cavity: CavityConfig {
                kappa_t_hz: ordinary(c.kappa_t),
                kappa_r1_hz: Some(ordinary(c.kappa_r1)),
                kappa_r1_fraction: None,
                kappa_r2_hz: Some(ordinary(c.kappa_r2)),
                kappa_r2_fraction: None,
                length_m: c.length,
                roc_m: c.roc,
                waist_m: Some(c.waist),
                mode_volume_m3: None,
                g0_hz: Some(ordinary(c.g0)),
                resonance_hz: Some(ordinary(c.omega_cv)),
            },
            drive: DriveConfig {
                p_in_w: Some(d.p_in),
                target_peak_p_out_w: None,
                delta_pc_hz: ordinary(d.delta_pc),
                delta_pa_hz: Some(ordinary(d.delta_pa)),
                delta_ra_hz: ordinary(d.delta_ra),
                omega_control_hz,
                omega_convention: d.omega_convention,
                flux_convention: d.flux_convention,
            },
            ensemble: EnsembleConfig {
                n_total: Some(e.n_total),
                n_c: Some(e.n_c),
                cloud_sigma_m: None,
                cloud_center_m: e.cloud_center,
            },
            run: RunConfig::default(),
        }
    }
}

fn require_positive(errs: &mut Vec<FieldError>, path: &str, v: f64) {
    if !(v > 0.0 && v.is_finite()) {
        errs.push(FieldError::new(path, format!("must be positive and finite, got {v}")));
    }
}

fn require_non_negative(errs: &mut Vec<FieldError>, path: &str, v: f64) {
    if !(v >= 0.0 && v.is_finite()) {
        errs.push(FieldError::new(path, format!("must be >= 0 and finite, got {v}")));
    }
}

fn one_of(
    errs: &mut Vec<FieldError>,
    path: &str,
    absolute: Option<f64>,
    fraction: Option<f64>,
    total: f64,
) -> f64 {
    match (absolute, fraction) {
        (Some(_), Some(_)) => {
            errs.push(FieldError::new(
                path,
                "give either the absolute rate or the fraction of kappa_t, not both",
            ));
            f64::NAN
        }
        (Some(hz), None) => {
            require_non_negative(errs, &format!("{path}_hz"), hz);
            angular(hz)
        }
        (None, Some(f)) => {
            if !(0.0..=1.0).contains(&f) {
                errs.push(FieldError::new(format!("{path}_fraction"), "must lie in [0, 1]"));
            }
            f * total
        }
        (None, None) => {
            errs.push(FieldError::new(path, "missing: set `_hz` or `_fraction`"));
            f64::NAN
        }
    }
}

/// Check every invariant of `config` and derive the rad/s model.
///
/// All violations are collected and reported together, each with its path.
pub fn validate(config: &Config) -> Result<Model> {
    let mut errs = Vec::new();

    let lc = &config.levels;
    for (p, v) in [
        ("levels.gamma1_hz", lc.gamma1_hz),
        ("levels.gamma2_hz", lc.gamma2_hz),
        ("levels.gamma3_hz", lc.gamma3_hz),
        ("levels.gamma_gg_prime_hz", lc.gamma_gg_prime_hz),
    ] {
        require_non_negative(&mut errs, p, v);
    }
    let gamma_t_hz = lc.gamma1_hz + lc.gamma2_hz + lc.gamma3_hz;
    if !(gamma_t_hz > 0.0) {
        errs.push(FieldError::new("levels", "total decay rate gamma1+gamma2+gamma3 must be > 0"));
    }
    require_positive(&mut errs, "levels.lambda_transition_m", lc.lambda_transition_m);
    require_non_negative(&mut errs, "levels.mu_ge", lc.mu_ge);
    let levels = LevelScheme {
        gamma1: angular(lc.gamma1_hz),
        gamma2: angular(lc.gamma2_hz),
        gamma3: angular(lc.gamma3_hz),
        gamma_t: angular(gamma_t_hz),
        gamma_gg_prime: angular(lc.gamma_gg_prime_hz),
        mu_ge: lc.mu_ge,
        mu_gprime_e: lc.mu_gprime_e,
        lambda_transition: lc.lambda_transition_m,
    };

    // cavity
    let cc = &config.cavity;
    require_positive(&mut errs, "cavity.kappa_t_hz", cc.kappa_t_hz);
    let kappa_t = angular(cc.kappa_t_hz);
    let kappa_r1 = one_of(&mut errs, "cavity.kappa_r1", cc.kappa_r1_hz, cc.kappa_r1_fraction, kappa_t);
    let kappa_r2 = one_of(&mut errs, "cavity.kappa_r2", cc.kappa_r2_hz, cc.kappa_r2_fraction, kappa_t);
    if kappa_r1 + kappa_r2 > kappa_t * (1.0 + 1e-12) {
        errs.push(FieldError::new("cavity.kappa_r2", "mirror losses exceed total"));
    }
    require_positive(&mut errs, "cavity.length_m", cc.length_m);
    require_positive(&mut errs, "cavity.roc_m", cc.roc_m);
    let stable = cc.length_m > 0.0 && cc.length_m < 2.0 * cc.roc_m;
    if cc.length_m > 0.0 && cc.roc_m > 0.0 && !stable {
        errs.push(FieldError::new(
            "cavity.length_m",
            format!("unstable resonator: length {} m >= 2 * roc", cc.length_m),
        ));
    }
    if cc.g0_hz.is_some() && cc.mode_volume_m3.is_some() {
        errs.push(FieldError::new(
            "cavity.g0_hz",
            "derivation conflict: g0 override given together with mode_volume_m3",
        ));
    }

    let wavelength = lc.lambda_transition_m;
    let mode = if stable && wavelength > 0.0 {
        match cc.waist_m {
            Some(w) if !(w > 0.0) => {
                errs.push(FieldError::new("cavity.waist_m", "must be positive"));
                None
            }
            Some(w) => Some(ModeGeometry::from_waist(w, cc.length_m, wavelength)),
            None => ModeGeometry::symmetric(cc.length_m, cc.roc_m, wavelength).ok(),
        }
    } else {
        None
    };
    let mode_volume = match (cc.mode_volume_m3, &mode) {
        (Some(v), _) => {
            require_positive(&mut errs, "cavity.mode_volume_m3", v);
            v
        }
        (None, Some(m)) => m.mode_volume,
        (None, None) => f64::NAN,
    };
    let omega_cv = match cc.resonance_hz {
        Some(f) => {
            require_positive(&mut errs, "cavity.resonance_hz", f);
            angular(f)
        }
        None => TWO_PI * SPEED_OF_LIGHT / wavelength,
    };
    let g0_from_dipole = coupling_g0(lc.mu_ge, omega_cv, mode_volume).unwrap_or(f64::NAN);
    let g0 = match cc.g0_hz {
        Some(hz) => {
            require_positive(&mut errs, "cavity.g0_hz", hz);
            let g0 = angular(hz);
            if g0_from_dipole.is_finite() {
                log::info!(
                    "using g0/2pi = {:.4e} Hz; dipole and mode volume give {:.4e} Hz",
                    hz,
                    ordinary(g0_from_dipole)
                );
            }
            g0
        }
        None => {
            if !(g0_from_dipole > 0.0) {
                errs.push(FieldError::new(
                    "levels.mu_ge",
                    "must be > 0 when the coupling is derived from it",
                ));
            }
            g0_from_dipole
        }
    };
    let cavity = CavityParams {
        kappa_t,
        kappa_r1,
        kappa_r2,
        length: cc.length_m,
        roc: cc.roc_m,
        waist: mode.map_or(f64::NAN, |m| m.waist),
        mode_volume,
        g0,
        g0_from_dipole,
        omega_cv,
    };

    // ensemble
    let ec = &config.ensemble;
    let (n_total, n_c) = match (ec.n_c, ec.cloud_sigma_m, ec.n_total) {
        (Some(_), Some(_), _) => {
            errs.push(FieldError::new(
                "ensemble.n_c",
                "derivation conflict: n_c override given together with cloud_sigma_m",
            ));
            (f64::NAN, f64::NAN)
        }
        (Some(n_c), None, total) => {
            require_non_negative(&mut errs, "ensemble.n_c", n_c);
            let total = total.unwrap_or(n_c);
            if n_c > total {
                errs.push(FieldError::new("ensemble.n_c", "must not exceed n_total"));
            }
            (total, n_c)
        }
        (None, Some(sigmas), Some(total)) => {
            require_non_negative(&mut errs, "ensemble.n_total", total);
            match &mode {
                Some(m) => match effective_atom_number(total, sigmas, ec.cloud_center_m, m) {
                    Ok(o) => (total, o.n_c),
                    Err(e) => {
                        errs.push(FieldError::new("ensemble.cloud_sigma_m", e.to_string()));
                        (total, f64::NAN)
                    }
                },
                None => (total, f64::NAN),
            }
        }
        (None, Some(_), None) => {
            errs.push(FieldError::new("ensemble.n_total", "missing: required with cloud_sigma_m"));
            (f64::NAN, f64::NAN)
        }
        (None, None, _) => {
            errs.push(FieldError::new("ensemble.n_c", "missing: set n_c or n_total + cloud_sigma_m"));
            (f64::NAN, f64::NAN)
        }
    };
    let ensemble = EnsembleParams {
        n_total,
        n_c,
        cloud_sigmas: ec.cloud_sigma_m,
        cloud_center: ec.cloud_center_m,
    };

    // drive
    let dc = &config.drive;
    let omega_control = match dc.omega_convention {
        OmegaConvention::Ordinary => angular(dc.omega_control_hz),
        OmegaConvention::Angular => dc.omega_control_hz,
    };
    require_non_negative(&mut errs, "drive.omega_control_hz", dc.omega_control_hz);
    let delta_pc = angular(dc.delta_pc_hz);
    let delta_pa = angular(dc.delta_pa_hz.unwrap_or(dc.delta_pc_hz));
    let delta_ra = angular(dc.delta_ra_hz);
    let mut drive = DriveParams {
        p_in: f64::NAN,
        eta: f64::NAN,
        delta_pc,
        delta_pa,
        delta_ra,
        omega_control,
        omega_convention: dc.omega_convention,
        flux_convention: dc.flux_convention,
    };

    if !errs.is_empty() {
        return Err(Error::Validation(errs));
    }

    match (dc.p_in_w, dc.target_peak_p_out_w) {
        (Some(_), Some(_)) => errs.push(FieldError::new(
            "drive.p_in_w",
            "derivation conflict: p_in_w given together with target_peak_p_out_w",
        )),
        (None, None) => errs.push(FieldError::new(
            "drive.p_in_w",
            "missing: set p_in_w or target_peak_p_out_w",
        )),
        (Some(p), None) => {
            require_non_negative(&mut errs, "drive.p_in_w", p);
            drive.p_in = p;
            drive.eta = eta_from_input(p, kappa_r1, wavelength, dc.flux_convention);
        }
        (None, Some(target)) => {
            require_non_negative(&mut errs, "drive.target_peak_p_out_w", target);
            let mut model = Model {
                levels: levels.clone(),
                cavity: cavity.clone(),
                drive: drive.clone(),
                ensemble: ensemble.clone(),
            };
            model.drive.eta = 1.0;
            let peak = transmission_peak(&model, LockedDetuning::from_model(&model));
            let per_eta2 = model.output_power_for(peak.n_bar_per_eta2);
            if per_eta2 > 0.0 && kappa_r1 > 0.0 {
                drive.eta = (target / per_eta2).sqrt();
                drive.p_in = input_power_from_eta(drive.eta, kappa_r1, wavelength, dc.flux_convention);
            } else if target == 0.0 {
                drive.eta = 0.0;
                drive.p_in = 0.0;
            } else {
                errs.push(FieldError::new(
                    "drive.target_peak_p_out_w",
                    "cannot reach a nonzero output with a lossless input or output mirror",
                ));
            }
        }
    }
    if !errs.is_empty() {
        return Err(Error::Validation(errs));
    }

    let model = Model {
        levels,
        cavity,
        drive,
        ensemble,
    };
    model.check()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn baseline_config() -> Config {
        toml::from_str(include_str!("../configs/vrs_baseline.toml")).unwrap()
    }

    fn messages(e: Error) -> Vec<FieldError> {
        match e {
            Error::Validation(v) => v,
            other => panic!("expected validation error, got {other}"),
        }
    }

    #[test]
    fn baseline_defaults_validate() {
        let m = validate(&baseline_config()).unwrap();
        let expected = TWO_PI * 6.44e6;
        assert!((m.levels.gamma_t - expected).abs() / expected < 1e-12);
        assert!((m.cavity.g0 - TWO_PI * 219.2e3).abs() < 1e-6);
        assert_eq!(m.ensemble.n_c, 5e4);
        assert!(m.drive.eta > 0.0);
    }

    #[test]
    fn mirror_losses_exceeding_total_rejected() {
        let mut c = baseline_config();
        c.cavity.kappa_r1_fraction = Some(0.5);
        c.cavity.kappa_r2_fraction = Some(0.8);
        let errs = messages(validate(&c).unwrap_err());
        assert!(errs.iter().any(|e| e.message.contains("mirror losses exceed total")));
    }

    #[test]
    fn long_resonator_rejected() {
        let mut c = baseline_config();
        c.cavity.length_m = 25e-3;
        let errs = messages(validate(&c).unwrap_err());
        assert!(errs.iter().any(|e| e.message.contains("unstable resonator")));
    }

    #[test]
    fn all_errors_reported_with_paths() {
        let mut c = baseline_config();
        c.levels.gamma1_hz = -1.0;
        c.cavity.length_m = 25e-3;
        c.ensemble.cloud_sigma_m = Some([1e-5; 3]);
        let errs = messages(validate(&c).unwrap_err());
        let paths: Vec<_> = errs.iter().map(|e| e.path.as_str()).collect();
        assert!(paths.contains(&"levels.gamma1_hz"));
        assert!(paths.contains(&"cavity.length_m"));
        assert!(paths.contains(&"ensemble.n_c"), "{paths:?}");
    }

    #[test]
    fn derivation_conflicts_rejected() {
        let mut c = baseline_config();
        c.drive.p_in_w = Some(1e-10);
        let errs = messages(validate(&c).unwrap_err());
        assert!(errs[0].message.contains("derivation conflict"));

        let mut c = baseline_config();
        c.cavity.mode_volume_m3 = Some(1e-11);
        assert!(validate(&c).is_err());
    }

    #[test]
    fn g0_derived_from_dipole_when_not_overridden() {
        let mut c = baseline_config();
        c.cavity.g0_hz = None;
        let m = validate(&c).unwrap();
        assert!((ordinary(m.cavity.g0) - 2.98e6).abs() < 0.02e6);
        assert_eq!(m.cavity.g0, m.cavity.g0_from_dipole);
    }

    #[test]
    fn n_c_from_cloud() {
        let mut c = baseline_config();
        c.ensemble.n_c = None;
        c.ensemble.n_total = Some(1e5);
        c.ensemble.cloud_sigma_m = Some([1e-12; 3]);
        let m = validate(&c).unwrap();
        assert!((m.ensemble.n_c - 1e5).abs() < 1e-3);
    }

    #[test]
    fn target_output_reproduced_by_linear_response() {
        let m = validate(&baseline_config()).unwrap();
        let peak = transmission_peak(&m, LockedDetuning::from_model(&m));
        let p = m.output_power_for(peak.n_bar_per_eta2 * m.drive.eta * m.drive.eta);
        assert!((p - 10e-12).abs() / 10e-12 < 1e-9);
    }

    #[test]
    fn omega_convention_flag() {
        let mut c = baseline_config();
        c.drive.omega_control_hz = 10e6;
        let ordinary_model = validate(&c).unwrap();
        c.drive.omega_convention = OmegaConvention::Angular;
        let angular_model = validate(&c).unwrap();
        assert!((ordinary_model.drive.omega_control - TWO_PI * 1e7).abs() < 1e-3);
        assert_eq!(angular_model.drive.omega_control, 1e7);
    }

    #[test]
    fn validate_is_idempotent() {
        let m = validate(&baseline_config()).unwrap();
        m.check().unwrap();
        let again = validate(&m.to_config()).unwrap();
        let rel = |a: f64, b: f64| if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) };
        assert!(rel(again.cavity.g0, m.cavity.g0) < 1e-15);
        assert!(rel(again.drive.eta, m.drive.eta) < 1e-14);
        assert!(rel(again.levels.gamma_t, m.levels.gamma_t) < 1e-15);
        assert_eq!(again.ensemble.n_c, m.ensemble.n_c);
    }

    #[test]
    fn hz_round_trip_within_precision() {
        let c = baseline_config();
        let back = validate(&c).unwrap().to_config();
        let rel = (back.cavity.kappa_t_hz - c.cavity.kappa_t_hz).abs() / c.cavity.kappa_t_hz;
        assert!(rel < 1e-15);
        assert!((back.levels.gamma1_hz - c.levels.gamma1_hz).abs() / c.levels.gamma1_hz < 1e-15);
    }
}
