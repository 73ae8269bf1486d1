use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Model;

/// Ratio `|Omega|^2 / (Gamma_t kappa_t)` below which the simplified EIT width is flagged.
pub const SIMPLIFIED_FWHM_MIN_RATIO: f64 = 10.0;

/// Separation of the two normal-mode peaks, `2 g0 sqrt(N_c)`.
pub fn vrs_splitting(g0: f64, n_c: f64) -> f64 {
    2.0 * g0 * n_c.sqrt()
}

/// Linear susceptibility of the ensemble seen by the cavity field, in rad/s.
///
/// `chi1` shifts the cavity resonance, `chi2` (never positive) adds to its loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Susceptibility {
    pub chi: Complex64,
    pub chi1: f64,
    pub chi2: f64,
}

impl Susceptibility {
    pub const ZERO: Susceptibility = Susceptibility {
        chi: Complex64::new(0.0, 0.0),
        chi1: 0.0,
        chi2: 0.0,
    };
}

/// Weak-probe susceptibility of `N_c` lambda systems:
/// `chi = 2 g0^2 N_c D / (2|Omega|^2 + (2 Delta_pa + i Gamma_t) D)` with
/// `D = Delta_ra - Delta_pa`.
///
/// Real and imaginary parts are evaluated from their expanded forms,
/// `chi1 = 4 g0^2 N_c D (|Omega|^2 + Delta_pa D) / M` and
/// `chi2 = -2 Gamma_t g0^2 N_c D^2 / M` with
/// `M = Gamma_t^2 D^2 + 4 (|Omega|^2 + Delta_pa D)^2`.
/// Without a control field the expression reduces to the two-level response
/// `2 g0^2 N_c / (2 Delta_pa + i Gamma_t)`.
pub fn susceptibility(
    delta_pa: f64,
    delta_ra: f64,
    omega_control: f64,
    g0: f64,
    n_c: f64,
    gamma_t: f64,
) -> Result<Susceptibility> {
    let g2n = g0 * g0 * n_c;
    let omega2 = omega_control * omega_control;
    let (chi1, chi2) = if omega_control == 0.0 {
        let m = 4.0 * delta_pa * delta_pa + gamma_t * gamma_t;
        if m == 0.0 {
            return Err(Error::Domain(
                "susceptibility pole: resonant probe on a non-decaying transition".into(),
            ));
        }
        (4.0 * g2n * delta_pa / m, -2.0 * g2n * gamma_t / m)
    } else {
        let d = delta_ra - delta_pa;
        let real = omega2 + delta_pa * d;
        let m = gamma_t * gamma_t * d * d + 4.0 * real * real;
        if m == 0.0 {
            return Err(Error::Domain(format!(
                "susceptibility pole at delta_pa = {delta_pa}, delta_ra = {delta_ra}"
            )));
        }
        (4.0 * g2n * d * real / m, -2.0 * gamma_t * g2n * d * d / m)
    };
    Ok(Susceptibility {
        chi: Complex64::new(chi1, chi2),
        chi1,
        chi2,
    })
}

/// Intracavity photon number `eta^2 / ((Delta_pc - chi1)^2 + (kappa_t - chi2)^2)`.
pub fn steady_photon_number(eta: f64, delta_pc: f64, kappa_t: f64, chi: &Susceptibility) -> f64 {
    let a = delta_pc - chi.chi1;
    let b = kappa_t - chi.chi2;
    eta * eta / (a * a + b * b)
}

/// Weak-probe steady cavity amplitude, `alpha = -eta / (kappa_t - i Delta_pc + i chi)`.
pub fn steady_alpha(eta: f64, delta_pc: f64, kappa_t: f64, chi: &Susceptibility) -> Complex64 {
    let i = Complex64::i();
    -eta / (kappa_t - i * delta_pc + i * chi.chi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FwhmForm {
    /// `2|Omega|^2 kappa_t / sqrt(Gamma_t g0^2 kappa_t N_c + (g0^2 N_c + |Omega|^2)^2)`
    Exact,
    /// `2 kappa_t / (g0^2 N_c / |Omega|^2 + 1)`, valid for `|Omega|^2 >> Gamma_t kappa_t`.
    Simplified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FwhmEstimate {
    /// Full width at half maximum `2d` of the transmitted photon number, rad/s.
    pub width: f64,
    pub form: FwhmForm,
    /// `|Omega|^2 / (Gamma_t kappa_t)`.
    pub validity_ratio: f64,
    pub warning: Option<String>,
}

/// Width `2d` of the cavity-EIT transmission Lorentzian.
pub fn eit_fwhm(
    g0: f64,
    n_c: f64,
    omega_control: f64,
    kappa_t: f64,
    gamma_t: f64,
    form: FwhmForm,
) -> FwhmEstimate {
    let g2n = g0 * g0 * n_c;
    let omega2 = omega_control * omega_control;
    let validity_ratio = omega2 / (gamma_t * kappa_t);
    let width = match form {
        FwhmForm::Exact => {
            2.0 * omega2 * kappa_t / (gamma_t * g2n * kappa_t + (g2n + omega2).powi(2)).sqrt()
        }
        FwhmForm::Simplified => {
            if n_c == 0.0 {
                2.0 * kappa_t
            } else {
                2.0 * kappa_t / (g2n / omega2 + 1.0)
            }
        }
    };
    let warning = (form == FwhmForm::Simplified && validity_ratio < SIMPLIFIED_FWHM_MIN_RATIO)
        .then(|| {
            format!(
                "simplified width used with |Omega|^2/(Gamma_t kappa_t) = {validity_ratio:.3}, \
                 below {SIMPLIFIED_FWHM_MIN_RATIO}"
            )
        });
    FwhmEstimate {
        width,
        form,
        validity_ratio,
        warning,
    }
}

/// Scan geometry used by cavity-locked scans: the probe-cavity detuning is the
/// scan variable, the probe-atom detuning follows it at a fixed offset and the
/// control detuning stays put.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LockedDetuning {
    pub offset_pa_pc: f64,
    pub delta_ra: f64,
}

impl LockedDetuning {
    pub fn from_model(model: &Model) -> Self {
        Self {
            offset_pa_pc: model.atom_cavity_offset(),
            delta_ra: model.drive.delta_ra,
        }
    }

    pub fn delta_pa(&self, delta_pc: f64) -> f64 {
        delta_pc + self.offset_pa_pc
    }
}

/// Susceptibility of `model`'s ensemble at probe-cavity detuning `delta_pc`.
pub fn model_susceptibility(model: &Model, lock: LockedDetuning, delta_pc: f64) -> Result<Susceptibility> {
    susceptibility(
        lock.delta_pa(delta_pc),
        lock.delta_ra,
        model.drive.omega_control,
        model.cavity.g0,
        model.ensemble.n_c,
        model.levels.gamma_t,
    )
}

/// Weak-probe photon number per unit `eta^2` at `delta_pc`.
pub fn transmission(model: &Model, lock: LockedDetuning, delta_pc: f64) -> f64 {
    match model_susceptibility(model, lock, delta_pc) {
        Ok(chi) => steady_photon_number(1.0, delta_pc, model.cavity.kappa_t, &chi),
        Err(_) => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmissionPeak {
    pub delta_pc: f64,
    pub n_bar_per_eta2: f64,
}

/// Global maximum of the weak-probe transmission over the probe detuning.
pub fn transmission_peak(model: &Model, lock: LockedDetuning) -> TransmissionPeak {
    let kappa = model.cavity.kappa_t;
    let reach = 3.0
        * (model.collective_coupling()
            + model.drive.omega_control
            + kappa
            + model.levels.gamma_t)
        + lock.offset_pa_pc.abs()
        + lock.delta_ra.abs();
    let n = 40_000;
    let spacing = 2.0 * reach / n as f64;
    let f = |x: f64| transmission(model, lock, x);

    let mut candidates: Vec<f64> = (0..=n).map(|i| -reach + i as f64 * spacing).collect();
    // two-photon resonance hosts the narrow EIT line
    candidates.push(lock.delta_ra - lock.offset_pa_pc);
    candidates.push(0.0);
    let mut scored: Vec<(f64, f64)> = candidates.into_iter().map(|x| (x, f(x))).collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));

    let mut best = scored[0];
    for &(x, _) in scored.iter().take(4) {
        let (xr, yr) = golden_max(&f, x - spacing, x + spacing, 200);
        if yr > best.1 {
            best = (xr, yr);
        }
    }
    TransmissionPeak {
        delta_pc: best.0,
        n_bar_per_eta2: best.1,
    }
}

fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
        if (b - a).abs() <= 1e-12 * (a.abs() + b.abs()).max(1.0) {
            break;
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}
