//! Closed-form observables and the signal-extraction toolkit that reduces
//! simulated series to them.

pub mod fit;
pub mod formulas;
pub mod loss;
pub mod peaks;

pub use fit::{fit_exponential, fit_lorentzian, ExponentialParams, FitReport, LorentzianParams};
pub use formulas::{
    eit_fwhm, steady_alpha, steady_photon_number, susceptibility, vrs_splitting, FwhmEstimate,
    FwhmForm, Susceptibility,
};
pub use loss::{loss_fraction, Endpoints, LossReport, LossSource};
pub use peaks::{find_peaks, Peak};
