//! Time-domain engine: mean-field right-hand sides, the adaptive integrator
//! and the experiment drivers (VRS scan, EIT scan, ring-down).

pub mod drivers;
pub mod integrator;
pub mod rhs;
pub mod state;

pub use drivers::{
    expected_decay_rate, run_eit_scan, run_ringdown, run_vrs_scan, settle_from, settle_to_steady,
    RingdownCycle, RingdownResult, RingdownSpec, ScanPoint, ScanResult, ScanSpec, SettledState,
    SteadyStateCriterion,
};
pub use integrator::{Dopri5, Stats, Tolerances};
pub use rhs::{rhs_eit, rhs_vrs, Couplings, LevelSystem};
pub use state::MeanFieldState;
