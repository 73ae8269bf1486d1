//! Experiment drivers: frequency scans with piecewise-constant detuning,
//! steady-state preparation and probe switch-off ring-down.

use log::{debug, info};
use serde::{Deserialize, Serialize};

use super::integrator::{Dopri5, Stats, Tolerances};
use super::rhs::{rhs_eit, rhs_vrs, Couplings, LevelSystem};
use super::state::{idx, MeanFieldState, DIM};
use crate::analytics::formulas::{eit_fwhm, FwhmForm, LockedDetuning};
use crate::constants::{angular, TWO_PI};
use crate::error::{Error, Result};
use crate::model::{Model, RunConfig};

pub const DEFAULT_VRS_STEPS: usize = 200;
pub const DEFAULT_VRS_DWELL: f64 = 0.5e-6;
pub const DEFAULT_EIT_STEPS: usize = 200;
pub const DEFAULT_EIT_DWELL: f64 = 5e-6;
pub const DEFAULT_SPAN_FACTOR: f64 = 4.0;
pub const DEFAULT_RINGDOWN_SAMPLES: usize = 200;

impl LevelSystem {
    /// 4-level whenever a control field or a separate `|g''>` channel exists.
    pub fn for_model(model: &Model) -> Self {
        if model.drive.omega_control != 0.0 || model.levels.gamma3 != 0.0 {
            LevelSystem::FourLevel
        } else {
            LevelSystem::ThreeLevel
        }
    }

    fn rhs(self) -> fn(f64, &[f64; DIM], &Couplings, &mut [f64; DIM]) {
        match self {
            LevelSystem::ThreeLevel => rhs_vrs,
            LevelSystem::FourLevel => rhs_eit,
        }
    }
}

/// Linear probe scan. Detunings are angular; the probe-atom detuning follows
/// the probe-cavity one at the offset stored in `lock`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
    pub dwell: f64,
    pub lock: LockedDetuning,
}

impl ScanSpec {
    /// Symmetric window of half-width `span_factor * max(g0 sqrt(N_c), kappa_t)`
    /// around the cavity resonance.
    pub fn vrs_default(model: &Model) -> Self {
        Self::vrs_with_factor(model, DEFAULT_SPAN_FACTOR)
    }

    fn vrs_with_factor(model: &Model, factor: f64) -> Self {
        let half = factor * model.collective_coupling().max(model.cavity.kappa_t);
        Self {
            start: -half,
            stop: half,
            steps: DEFAULT_VRS_STEPS,
            dwell: DEFAULT_VRS_DWELL,
            lock: LockedDetuning::from_model(model),
        }
    }

    /// Window of half-width `span_factor` times the EIT linewidth, centred on
    /// two-photon resonance.
    pub fn eit_default(model: &Model) -> Self {
        Self::eit_with_factor(model, DEFAULT_SPAN_FACTOR)
    }

    fn eit_with_factor(model: &Model, factor: f64) -> Self {
        let lock = LockedDetuning::from_model(model);
        let width = eit_fwhm(
            model.cavity.g0,
            model.ensemble.n_c,
            model.drive.omega_control,
            model.cavity.kappa_t,
            model.levels.gamma_t,
            FwhmForm::Exact,
        )
        .width;
        let width = if width.is_finite() && width > 0.0 { width } else { 2.0 * model.cavity.kappa_t };
        let center = lock.delta_ra - lock.offset_pa_pc;
        Self {
            start: center - factor * width,
            stop: center + factor * width,
            steps: DEFAULT_EIT_STEPS,
            dwell: DEFAULT_EIT_DWELL,
            lock,
        }
    }

    /// Scheme default, then the `[run]` table on top.
    pub fn from_run(model: &Model, system: LevelSystem, run: &RunConfig) -> Result<Self> {
        let factor = run.span_factor.unwrap_or(DEFAULT_SPAN_FACTOR);
        let mut spec = match system {
            LevelSystem::ThreeLevel => Self::vrs_with_factor(model, factor),
            LevelSystem::FourLevel => Self::eit_with_factor(model, factor),
        };
        match (run.start_hz, run.stop_hz) {
            (Some(a), Some(b)) => {
                spec.start = angular(a);
                spec.stop = angular(b);
            }
            (None, None) => {}
            _ => {
                return Err(Error::Config(
                    "run.start_hz and run.stop_hz must be given together".into(),
                ))
            }
        }
        if let Some(s) = run.steps {
            spec.steps = s;
        }
        if let Some(d) = run.dwell_s {
            spec.dwell = d;
        }
        spec.check()?;
        Ok(spec)
    }

    pub fn check(&self) -> Result<()> {
        if self.steps < 2 {
            return Err(Error::Config(format!("scan needs >= 2 steps, got {}", self.steps)));
        }
        if !(self.dwell > 0.0 && self.dwell.is_finite()) {
            return Err(Error::Config(format!("dwell must be positive, got {}", self.dwell)));
        }
        if !(self.stop > self.start) || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(Error::Config(format!(
                "scan bounds must satisfy start < stop, got [{}, {}]",
                self.start, self.stop
            )));
        }
        Ok(())
    }

    pub fn detuning(&self, k: usize) -> f64 {
        self.start + (self.stop - self.start) * k as f64 / (self.steps - 1) as f64
    }

    pub fn duration(&self) -> f64 {
        self.steps as f64 * self.dwell
    }

    /// Scan rate in Hz of probe detuning per second.
    pub fn rate_hz_per_s(&self) -> f64 {
        (self.stop - self.start) / TWO_PI / self.duration()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    /// Probe-cavity detuning, rad/s.
    pub delta_pc: f64,
    pub p_out: f64,
    pub n_bar: f64,
    pub rho_g: f64,
    pub rho_e: f64,
    pub rho_gp: f64,
    pub rho_gpp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub system: LevelSystem,
    pub spec: ScanSpec,
    pub scan_rate_hz_per_s: f64,
    pub n_c: f64,
    pub points: Vec<ScanPoint>,
    pub final_state: MeanFieldState,
    /// Largest `|trace - 1|` over the recorded points.
    pub max_trace_error: f64,
    /// Largest positivity violation of a coherence over the recorded points.
    pub max_coherence_excess: f64,
    pub stats: Stats,
}

impl ScanResult {
    pub fn detunings(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.delta_pc).collect()
    }

    pub fn powers(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.p_out).collect()
    }
}

/// 3-level scan. Refuses models with a control field.
pub fn run_vrs_scan(model: &Model, scan: &ScanSpec, tol: &Tolerances) -> Result<ScanResult> {
    if model.drive.omega_control != 0.0 {
        return Err(Error::Config(
            "vrs scan uses the 3-level scheme; drive.omega_control_hz must be 0".into(),
        ));
    }
    run_scan(model, LevelSystem::ThreeLevel, scan, tol)
}

/// 4-level scan over the EIT window.
pub fn run_eit_scan(model: &Model, scan: &ScanSpec, tol: &Tolerances) -> Result<ScanResult> {
    run_scan(model, LevelSystem::FourLevel, scan, tol)
}

fn run_scan(model: &Model, system: LevelSystem, scan: &ScanSpec, tol: &Tolerances) -> Result<ScanResult> {
    scan.check()?;
    let rhs = system.rhs();
    let mut p = Couplings::from_model(model);
    let mut y = MeanFieldState::ground().to_array();
    let mut stepper = Dopri5::new(*tol, p.fastest_rate());
    let mut points = Vec::with_capacity(scan.steps);
    let mut max_trace_error: f64 = 0.0;
    let mut max_coherence_excess = f64::NEG_INFINITY;

    for k in 0..scan.steps {
        let x = scan.detuning(k);
        p.delta_pc = x;
        p.delta_pa = scan.lock.delta_pa(x);
        p.delta_ra = scan.lock.delta_ra;
        stepper.set_fastest_rate(p.fastest_rate());
        let t0 = k as f64 * scan.dwell;
        stepper.integrate(&mut |t, y, dy| rhs(t, y, &p, dy), t0, &mut y, t0 + scan.dwell, &[], |_, _| {})?;

        let s = MeanFieldState::from_array(&y);
        max_trace_error = max_trace_error.max((s.trace() - 1.0).abs());
        max_coherence_excess = max_coherence_excess.max(s.coherence_excess());
        points.push(ScanPoint {
            delta_pc: x,
            p_out: model.output_power_for(s.n_bar()),
            n_bar: s.n_bar(),
            rho_g: s.rho_gg,
            rho_e: s.rho_ee,
            rho_gp: s.rho_gpgp,
            rho_gpp: s.rho_gpp,
        });
    }
    debug!(
        "scan finished: {} accepted, {} rejected steps",
        stepper.stats.accepted, stepper.stats.rejected
    );
    Ok(ScanResult {
        system,
        spec: *scan,
        scan_rate_hz_per_s: scan.rate_hz_per_s(),
        n_c: model.ensemble.n_c,
        points,
        final_state: MeanFieldState::from_array(&y),
        max_trace_error,
        max_coherence_excess,
        stats: stepper.stats,
    })
}

/// Steadiness test applied every `1/kappa_t`: `|dalpha/dt| / (kappa_t |alpha|)`
/// and `|drho/dt| / kappa_t` must both fall below `tolerance`.
///
/// The dark sink and `rho_gg` are excluded because they keep drifting while
/// the fast variables sit still; that drift is the loss being measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateCriterion {
    pub tolerance: f64,
    pub max_settle: f64,
}

impl Default for SteadyStateCriterion {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_settle: 20e-3,
        }
    }
}

impl SteadyStateCriterion {
    pub fn from_run(run: &RunConfig) -> Result<Self> {
        let d = Self::default();
        let c = Self {
            tolerance: run.settle_tolerance.unwrap_or(d.tolerance),
            max_settle: run.max_settle_s.unwrap_or(d.max_settle),
        };
        if !(c.tolerance > 0.0) {
            return Err(Error::Config(format!("run.settle_tolerance must be > 0, got {}", c.tolerance)));
        }
        if !(c.max_settle > 0.0) {
            return Err(Error::Config(format!("run.max_settle_s must be > 0, got {}", c.max_settle)));
        }
        Ok(c)
    }

    fn residual(&self, system: LevelSystem, p: &Couplings, y: &[f64; DIM]) -> f64 {
        let mut dy = [0.0; DIM];
        system.rhs()(0.0, y, p, &mut dy);
        let tau = 1.0 / p.kappa_t;
        let alpha = y[idx::ALPHA].hypot(y[idx::ALPHA + 1]);
        let d_alpha = dy[idx::ALPHA].hypot(dy[idx::ALPHA + 1]);
        let r_alpha = if d_alpha == 0.0 { 0.0 } else { d_alpha * tau / alpha };
        let mut watched = vec![idx::GE, idx::GE + 1, idx::E];
        if system == LevelSystem::FourLevel {
            watched.extend([idx::GGP, idx::GGP + 1, idx::GPE, idx::GPE + 1, idx::GP]);
        }
        let r_rho = watched.into_iter().map(|i| dy[i].abs() * tau).fold(0.0, f64::max);
        r_alpha.max(r_rho)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SettledState {
    pub state: MeanFieldState,
    /// Time spent reaching the criterion, s.
    pub settle_time: f64,
    pub residual: f64,
}

/// Drive the model at its fixed detunings from the all-ground state until
/// the criterion holds.
pub fn settle_to_steady(model: &Model, criterion: &SteadyStateCriterion, tol: &Tolerances) -> Result<SettledState> {
    settle_from(model, LevelSystem::for_model(model), criterion, &MeanFieldState::ground(), tol)
}

/// As [`settle_to_steady`] but from an arbitrary starting state.
pub fn settle_from(
    model: &Model,
    system: LevelSystem,
    criterion: &SteadyStateCriterion,
    initial: &MeanFieldState,
    tol: &Tolerances,
) -> Result<SettledState> {
    if !(criterion.tolerance > 0.0) {
        return Err(Error::Config("steady-state tolerance must be > 0".into()));
    }
    let p = Couplings::from_model(model);
    let rhs = system.rhs();
    let mut y = initial.to_array();
    let mut stepper = Dopri5::new(*tol, p.fastest_rate());
    let chunk = 1.0 / p.kappa_t;
    let mut t = 0.0;
    let mut residual = criterion.residual(system, &p, &y);
    while residual > criterion.tolerance {
        if t >= criterion.max_settle {
            return Err(Error::Numerical(format!(
                "steady state not reached within {:.3e} s (residual {residual:.3e}, tolerance {:.1e})",
                criterion.max_settle, criterion.tolerance
            )));
        }
        stepper.integrate(&mut |t, y, dy| rhs(t, y, &p, dy), t, &mut y, t + chunk, &[], |_, _| {})?;
        t += chunk;
        residual = criterion.residual(system, &p, &y);
    }
    debug!("settled after {t:.4e} s, residual {residual:.3e}");
    Ok(SettledState {
        state: MeanFieldState::from_array(&y),
        settle_time: t,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingdownSpec {
    pub criterion: SteadyStateCriterion,
    /// Observation window after switch-off, s.
    pub observe: f64,
    pub samples: usize,
    pub cycles: usize,
}

impl RingdownSpec {
    /// Observe for ten expected decay times of the EIT line (or of the bare
    /// cavity when there is no narrowing).
    pub fn default_for(model: &Model) -> Self {
        let rate = expected_decay_rate(model);
        Self {
            criterion: SteadyStateCriterion::default(),
            observe: 10.0 / rate,
            samples: DEFAULT_RINGDOWN_SAMPLES,
            cycles: 1,
        }
    }

    pub fn from_run(model: &Model, run: &RunConfig) -> Result<Self> {
        let mut s = Self::default_for(model);
        s.criterion = SteadyStateCriterion::from_run(run)?;
        if let Some(o) = run.observe_s {
            s.observe = o;
        }
        if let Some(n) = run.samples {
            s.samples = n;
        }
        if let Some(c) = run.cycles {
            s.cycles = c;
        }
        s.check()?;
        Ok(s)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.observe > 0.0) {
            return Err(Error::Config(format!("observe window must be > 0, got {}", self.observe)));
        }
        if self.samples < 2 {
            return Err(Error::Config(format!("ring-down needs >= 2 samples, got {}", self.samples)));
        }
        if self.cycles == 0 {
            return Err(Error::Config("ring-down needs >= 1 cycle".into()));
        }
        Ok(())
    }

    pub fn sample_times(&self) -> Vec<f64> {
        (0..self.samples)
            .map(|k| self.observe * k as f64 / (self.samples - 1) as f64)
            .collect()
    }
}

/// Exact EIT width `2d`, falling back to `2 kappa_t` when it vanishes.
pub fn expected_decay_rate(model: &Model) -> f64 {
    let w = eit_fwhm(
        model.cavity.g0,
        model.ensemble.n_c,
        model.drive.omega_control,
        model.cavity.kappa_t,
        model.levels.gamma_t,
        FwhmForm::Exact,
    )
    .width;
    if model.ensemble.n_c == 0.0 || !(w > 0.0) || !w.is_finite() {
        2.0 * model.cavity.kappa_t
    } else {
        w
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingdownCycle {
    pub settle_time: f64,
    pub steady_state: MeanFieldState,
    pub steady_p_out: f64,
    /// Time since switch-off, s.
    pub times: Vec<f64>,
    pub p_out: Vec<f64>,
    pub end_state: MeanFieldState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingdownResult {
    pub system: LevelSystem,
    pub spec: RingdownSpec,
    pub n_c: f64,
    pub initial_state: MeanFieldState,
    pub cycles: Vec<RingdownCycle>,
    pub max_trace_error: f64,
}

/// Settle with the probe on, switch the probe off instantly and record the
/// output decay; repeat `cycles` times carrying the molecular state forward.
pub fn run_ringdown(model: &Model, spec: &RingdownSpec, tol: &Tolerances) -> Result<RingdownResult> {
    spec.check()?;
    let d = &model.drive;
    if d.delta_pc != 0.0 || d.delta_pa != 0.0 || d.delta_ra != 0.0 {
        return Err(Error::Config(
            "ring-down runs on resonance; all detunings must be zero".into(),
        ));
    }
    let system = LevelSystem::FourLevel;
    let dark = model.with_eta(0.0);
    let p_dark = Couplings::from_model(&dark);
    let rhs = system.rhs();
    let samples = spec.sample_times();

    let initial = MeanFieldState::ground();
    let mut state = initial;
    let mut cycles = Vec::with_capacity(spec.cycles);
    let mut max_trace_error: f64 = 0.0;
    for c in 0..spec.cycles {
        let settled = settle_from(model, system, &spec.criterion, &state, tol)?;
        let mut y = settled.state.to_array();
        let mut p_out = Vec::with_capacity(samples.len());
        let mut stepper = Dopri5::new(*tol, p_dark.fastest_rate());
        stepper.integrate(
            &mut |t, y, dy| rhs(t, y, &p_dark, dy),
            0.0,
            &mut y,
            spec.observe,
            &samples,
            |_, y| {
                let n = y[idx::ALPHA].powi(2) + y[idx::ALPHA + 1].powi(2);
                p_out.push(model.output_power_for(n));
            },
        )?;
        state = MeanFieldState::from_array(&y);
        max_trace_error = max_trace_error
            .max((settled.state.trace() - 1.0).abs())
            .max((state.trace() - 1.0).abs());
        info!(
            "ring-down cycle {}: settled in {:.3e} s, dark g'' = {:.3e}",
            c + 1,
            settled.settle_time,
            state.rho_gpp
        );
        cycles.push(RingdownCycle {
            settle_time: settled.settle_time,
            steady_state: settled.state,
            steady_p_out: model.output_power_for(settled.state.n_bar()),
            times: samples.clone(),
            p_out,
            end_state: state,
        });
    }
    Ok(RingdownResult {
        system,
        spec: *spec,
        n_c: model.ensemble.n_c,
        initial_state: initial,
        cycles,
        max_trace_error,
    })
}
