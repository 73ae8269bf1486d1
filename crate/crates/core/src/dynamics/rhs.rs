//! Mean-field equations of motion in the frame rotating at the probe frequency.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::state::{idx, DIM};
use crate::model::Model;

/// Which set of equations drives the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LevelSystem {
    /// `|g>`, `|e>` and one aggregate dark level; no control field.
    ThreeLevel,
    /// Lambda system `|g>`, `|g'>`, `|e>` plus the dark level `|g''>`.
    FourLevel,
}

/// Rates entering the right-hand side, all in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Couplings {
    pub kappa_t: f64,
    /// Single-molecule coupling used in the molecular equations. Zero when no
    /// molecule is coupled (`N_c = 0`), so an empty cavity pumps nothing.
    pub g0: f64,
    /// `g0 N_c`, the collective back-action on the cavity field.
    pub g0_n_c: f64,
    pub eta: f64,
    pub delta_pc: f64,
    pub delta_pa: f64,
    pub delta_ra: f64,
    pub omega: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub gamma_t: f64,
    pub gamma_gg_prime: f64,
}

impl Couplings {
    pub fn from_model(model: &Model) -> Self {
        let l = &model.levels;
        let n_c = model.ensemble.n_c;
        let g0 = if n_c > 0.0 { model.cavity.g0 } else { 0.0 };
        Self {
            kappa_t: model.cavity.kappa_t,
            g0,
            g0_n_c: g0 * n_c,
            eta: model.drive.eta,
            delta_pc: model.drive.delta_pc,
            delta_pa: model.drive.delta_pa,
            delta_ra: model.drive.delta_ra,
            omega: model.drive.omega_control,
            gamma1: l.gamma1,
            gamma2: l.gamma2,
            gamma3: l.gamma3,
            gamma_t: l.gamma1 + l.gamma2 + l.gamma3,
            gamma_gg_prime: l.gamma_gg_prime,
        }
    }

    /// Fastest rate in the problem; sets the integrator's step ceiling.
    pub fn fastest_rate(&self) -> (&'static str, f64) {
        let collective = (self.g0 * self.g0_n_c).sqrt();
        [
            ("kappa_t", self.kappa_t),
            ("gamma_t", self.gamma_t),
            ("omega_control", self.omega),
            ("g0*sqrt(N_c)", collective),
            ("|delta_pc|", self.delta_pc.abs()),
            ("|delta_pa|", self.delta_pa.abs()),
            ("|delta_ra|", self.delta_ra.abs()),
        ]
        .into_iter()
        .fold(("kappa_t", 0.0), |best, cur| if cur.1 > best.1 { cur } else { best })
    }
}

#[inline]
fn c(y: &[f64; DIM], i: usize) -> Complex64 {
    Complex64::new(y[i], y[i + 1])
}

#[inline]
fn put(dy: &mut [f64; DIM], i: usize, v: Complex64) {
    dy[i] = v.re;
    dy[i + 1] = v.im;
}

/// 3-level VRS equations. Every decay channel other than `|e> -> |g>` feeds
/// the aggregate dark level stored in the `rho_gpgp` slot.
pub fn rhs_vrs(_t: f64, y: &[f64; DIM], p: &Couplings, dy: &mut [f64; DIM]) {
    let i = Complex64::i();
    let alpha = c(y, idx::ALPHA);
    let rho_ge = c(y, idx::GE);
    let (rho_g, rho_e) = (y[idx::G], y[idx::E]);

    let d_alpha = -(p.kappa_t - i * p.delta_pc) * alpha - i * p.g0_n_c * rho_ge - p.eta;
    let d_ge = -(0.5 * p.gamma_t - i * p.delta_pa) * rho_ge + i * p.g0 * alpha * (rho_e - rho_g);
    // i g (a* r - a r*) = -2 g Im(a* r), real by construction
    let pump = -2.0 * p.g0 * (alpha.conj() * rho_ge).im;

    put(dy, idx::ALPHA, d_alpha);
    put(dy, idx::GE, d_ge);
    put(dy, idx::GGP, Complex64::new(0.0, 0.0));
    put(dy, idx::GPE, Complex64::new(0.0, 0.0));
    dy[idx::G] = p.gamma1 * rho_e - pump;
    dy[idx::E] = -p.gamma_t * rho_e + pump;
    dy[idx::GP] = (p.gamma2 + p.gamma3) * rho_e;
    dy[idx::GPP] = 0.0;
}

/// Leaky 4-level lambda equations with a real control amplitude `omega`.
pub fn rhs_eit(_t: f64, y: &[f64; DIM], p: &Couplings, dy: &mut [f64; DIM]) {
    let i = Complex64::i();
    let alpha = c(y, idx::ALPHA);
    let rho_ge = c(y, idx::GE);
    let rho_ggp = c(y, idx::GGP);
    let rho_gpe = c(y, idx::GPE);
    let (rho_g, rho_e, rho_gp) = (y[idx::G], y[idx::E], y[idx::GP]);
    let omega = p.omega;

    let d_alpha = -(p.kappa_t - i * p.delta_pc) * alpha - i * p.g0_n_c * rho_ge - p.eta;
    let d_ge = -(0.5 * p.gamma_t - i * p.delta_pa) * rho_ge + i * p.g0 * alpha * (rho_e - rho_g)
        - i * omega * rho_ggp;
    let d_ggp = (-p.gamma_gg_prime + i * (p.delta_pa - p.delta_ra)) * rho_ggp
        + i * p.g0 * alpha * rho_gpe.conj()
        - i * omega * rho_ge;
    let d_gpe = -(0.5 * p.gamma_t - i * p.delta_ra) * rho_gpe - i * p.g0 * alpha * rho_ggp.conj()
        - i * omega * (rho_gp - rho_e);

    let pump = -2.0 * p.g0 * (alpha.conj() * rho_ge).im;
    // i Omega (rho_eg' - rho_g'e) = 2 Omega Im(rho_g'e)
    let control = 2.0 * omega * rho_gpe.im;

    put(dy, idx::ALPHA, d_alpha);
    put(dy, idx::GE, d_ge);
    put(dy, idx::GGP, d_ggp);
    put(dy, idx::GPE, d_gpe);
    dy[idx::G] = p.gamma1 * rho_e - pump;
    dy[idx::E] = -p.gamma_t * rho_e + pump - control;
    dy[idx::GP] = p.gamma2 * rho_e + control;
    dy[idx::GPP] = p.gamma3 * rho_e;
}
