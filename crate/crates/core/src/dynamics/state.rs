use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Number of real components in the packed state vector.
pub const DIM: usize = 12;

pub(crate) mod idx {
    pub const ALPHA: usize = 0;
    pub const GE: usize = 2;
    pub const GGP: usize = 4;
    pub const GPE: usize = 6;
    pub const G: usize = 8;
    pub const E: usize = 9;
    pub const GP: usize = 10;
    pub const GPP: usize = 11;
}

/// Mean-field state: cavity amplitude plus one-molecule density-matrix elements.
///
/// `alpha` is normalised so that `|alpha|^2` is the intracavity photon number.
/// In the 3-level scheme `rho_ggp`, `rho_gpe` and `rho_gpp` stay zero and
/// `rho_gpgp` is the aggregate dark level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldState {
    pub alpha: Complex64,
    pub rho_ge: Complex64,
    pub rho_ggp: Complex64,
    pub rho_gpe: Complex64,
    pub rho_gg: f64,
    pub rho_ee: f64,
    pub rho_gpgp: f64,
    pub rho_gpp: f64,
}

impl MeanFieldState {
    /// Empty cavity, every molecule in `|g>`.
    pub fn ground() -> Self {
        Self {
            alpha: Complex64::new(0.0, 0.0),
            rho_ge: Complex64::new(0.0, 0.0),
            rho_ggp: Complex64::new(0.0, 0.0),
            rho_gpe: Complex64::new(0.0, 0.0),
            rho_gg: 1.0,
            rho_ee: 0.0,
            rho_gpgp: 0.0,
            rho_gpp: 0.0,
        }
    }

    pub fn n_bar(&self) -> f64 {
        self.alpha.norm_sqr()
    }

    pub fn trace(&self) -> f64 {
        self.rho_gg + self.rho_ee + self.rho_gpgp + self.rho_gpp
    }

    /// Largest violation of `|rho_mn|^2 <= rho_mm rho_nn` over the three coherences.
    pub fn coherence_excess(&self) -> f64 {
        [
            self.rho_ge.norm_sqr() - self.rho_gg * self.rho_ee,
            self.rho_ggp.norm_sqr() - self.rho_gg * self.rho_gpgp,
            self.rho_gpe.norm_sqr() - self.rho_gpgp * self.rho_ee,
        ]
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_array(&self) -> [f64; DIM] {
        [
            self.alpha.re,
            self.alpha.im,
            self.rho_ge.re,
            self.rho_ge.im,
            self.rho_ggp.re,
            self.rho_ggp.im,
            self.rho_gpe.re,
            self.rho_gpe.im,
            self.rho_gg,
            self.rho_ee,
            self.rho_gpgp,
            self.rho_gpp,
        ]
    }

    pub fn from_array(y: &[f64; DIM]) -> Self {
        Self {
            alpha: Complex64::new(y[0], y[1]),
            rho_ge: Complex64::new(y[2], y[3]),
            rho_ggp: Complex64::new(y[4], y[5]),
            rho_gpe: Complex64::new(y[6], y[7]),
            rho_gg: y[idx::G],
            rho_ee: y[idx::E],
            rho_gpgp: y[idx::GP],
            rho_gpp: y[idx::GPP],
        }
    }
}
