//! The run commands: resolve a config, simulate, reduce, write a run directory.

use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::config::{apply_overrides, load_config, resolve};
use super::output::{
    ensure_dir, run_id, write_csv, write_json, RunManifest, MANIFEST_FILE, RINGDOWN_FILE, SCAN_FILE,
    SUMMARY_FILE,
};
use crate::analytics::peaks::DEFAULT_PROMINENCE;
use crate::analytics::formulas::{eit_fwhm, transmission_peak, vrs_splitting, FwhmForm, LockedDetuning};
use crate::analytics::{
    find_peaks, fit_exponential, fit_lorentzian, loss_fraction, LossReport,
};
use crate::constants::ordinary;
use crate::dynamics::{
    expected_decay_rate, run_eit_scan, run_ringdown, run_vrs_scan, LevelSystem, RingdownResult,
    RingdownSpec, ScanResult, ScanSpec, Tolerances,
};
use crate::error::{Error, Result};
use crate::model::{Config, Model, RunConfig};
use crate::physparams::{output_flux, FluxConvention};

pub const DEFAULT_OUTPUT_DIR: &str = "runs";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    VrsScan,
    EitScan,
    Ringdown,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::VrsScan => "vrs-scan",
            Command::EitScan => "eit-scan",
            Command::Ringdown => "ringdown",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "vrs-scan" => Ok(Command::VrsScan),
            "eit-scan" => Ok(Command::EitScan),
            "ringdown" => Ok(Command::Ringdown),
            _ => Err(Error::Config(format!(
                "unknown run kind `{s}` (expected vrs-scan, eit-scan or ringdown)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub overrides: Vec<(String, String)>,
    /// Root under which `<run id>/` is created. Falls back to `run.output_dir`,
    /// then `runs`.
    pub output_dir: Option<PathBuf>,
    pub cycles: Option<usize>,
}

/// Parameters echoed into every summary, in ordinary units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub n_c: f64,
    pub g0_hz: f64,
    pub kappa_t_hz: f64,
    pub kappa_r1_hz: f64,
    pub kappa_r2_hz: f64,
    pub gamma_t_hz: f64,
    pub gamma3_hz: f64,
    /// Control amplitude converted to ordinary Hz (`Omega / 2 pi`).
    pub omega_control_hz: f64,
    pub p_in_w: f64,
    pub eta_per_s: f64,
    pub wavelength_m: f64,
    pub flux_convention: FluxConvention,
}

impl ModelSummary {
    pub fn of(m: &Model) -> Self {
        Self {
            n_c: m.ensemble.n_c,
            g0_hz: ordinary(m.cavity.g0),
            kappa_t_hz: ordinary(m.cavity.kappa_t),
            kappa_r1_hz: ordinary(m.cavity.kappa_r1),
            kappa_r2_hz: ordinary(m.cavity.kappa_r2),
            gamma_t_hz: ordinary(m.levels.gamma_t),
            gamma3_hz: ordinary(m.levels.gamma3),
            omega_control_hz: ordinary(m.drive.omega_control),
            p_in_w: m.drive.p_in,
            eta_per_s: m.drive.eta,
            wavelength_m: m.wavelength(),
            flux_convention: m.drive.flux_convention,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanWindow {
    pub start_hz: f64,
    pub stop_hz: f64,
    pub steps: usize,
    pub dwell_s: f64,
    pub scan_rate_hz_per_s: f64,
}

impl ScanWindow {
    fn of(s: &ScanSpec) -> Self {
        Self {
            start_hz: ordinary(s.start),
            stop_hz: ordinary(s.stop),
            steps: s.steps,
            dwell_s: s.dwell,
            scan_rate_hz_per_s: s.rate_hz_per_s(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakSummary {
    pub detuning_hz: f64,
    pub p_out_w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VrsSummary {
    pub model: ModelSummary,
    pub window: ScanWindow,
    pub peaks: Vec<PeakSummary>,
    pub splitting_hz: Option<f64>,
    pub formula_splitting_hz: f64,
    pub peak_p_out_w: f64,
    pub peak_n_bar: f64,
    pub peak_output_photons_per_s: f64,
    pub loss_fraction: f64,
    pub loss: LossReport,
    pub max_trace_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub center_hz: f64,
    pub fwhm_hz: f64,
    pub amplitude_w: f64,
    pub relative_residual: f64,
    pub large_residual: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EitSummary {
    pub model: ModelSummary,
    pub window: ScanWindow,
    pub fit: Option<LineFit>,
    pub fit_error: Option<String>,
    pub fwhm_exact_hz: f64,
    pub fwhm_simplified_hz: f64,
    /// `|Omega|^2 / (Gamma_t kappa_t)`; the simplified width needs this >> 1.
    pub validity_ratio: f64,
    pub fwhm_warning: Option<String>,
    pub peak_p_out_w: f64,
    pub peak_n_bar: f64,
    pub loss_fraction: f64,
    pub loss: LossReport,
    pub max_trace_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingdownSummary {
    pub model: ModelSummary,
    pub cycles: usize,
    pub observe_s: f64,
    pub samples: usize,
    pub settle_times_s: Vec<f64>,
    pub steady_p_out_w: Vec<f64>,
    pub fitted_rate_per_s: Option<f64>,
    pub fit_relative_residual: Option<f64>,
    pub large_residual: Option<bool>,
    pub fit_error: Option<String>,
    /// `2d` from the simplified linewidth, 1/s.
    pub rate_simplified_per_s: f64,
    pub rate_exact_per_s: f64,
    pub loss_per_cycle: Vec<f64>,
    pub cumulative_loss: f64,
    pub loss: LossReport,
    pub max_trace_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Summary {
    VrsScan(VrsSummary),
    EitScan(EitSummary),
    Ringdown(RingdownSummary),
}

impl Summary {
    pub fn loss_fraction(&self) -> f64 {
        match self {
            Summary::VrsScan(s) => s.loss_fraction,
            Summary::EitScan(s) => s.loss_fraction,
            Summary::Ringdown(s) => s.cumulative_loss,
        }
    }

    /// Fixed-order headline numbers used for sweep tables. Missing values are NaN.
    pub fn key_observables(&self) -> Vec<(&'static str, f64)> {
        let nan = f64::NAN;
        match self {
            Summary::VrsScan(s) => vec![
                ("n_c", s.model.n_c),
                ("loss_fraction", s.loss_fraction),
                ("peak_count", s.peaks.len() as f64),
                ("splitting_hz", s.splitting_hz.unwrap_or(nan)),
                ("formula_splitting_hz", s.formula_splitting_hz),
                ("peak_p_out_w", s.peak_p_out_w),
                ("p_in_w", s.model.p_in_w),
            ],
            Summary::EitScan(s) => vec![
                ("n_c", s.model.n_c),
                ("loss_fraction", s.loss_fraction),
                ("fwhm_fit_hz", s.fit.as_ref().map_or(nan, |f| f.fwhm_hz)),
                ("fwhm_exact_hz", s.fwhm_exact_hz),
                ("fwhm_simplified_hz", s.fwhm_simplified_hz),
                ("peak_p_out_w", s.peak_p_out_w),
                ("p_in_w", s.model.p_in_w),
            ],
            Summary::Ringdown(s) => vec![
                ("n_c", s.model.n_c),
                ("loss_fraction", s.cumulative_loss),
                ("fitted_rate_per_s", s.fitted_rate_per_s.unwrap_or(nan)),
                ("rate_simplified_per_s", s.rate_simplified_per_s),
                ("rate_exact_per_s", s.rate_exact_per_s),
                ("steady_p_out_w", s.steady_p_out_w.first().copied().unwrap_or(nan)),
                ("p_in_w", s.model.p_in_w),
            ],
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub run_id: String,
    pub dir: PathBuf,
    pub manifest: RunManifest,
    pub summary: Summary,
}

pub fn tolerances(run: &RunConfig) -> Result<Tolerances> {
    let mut t = Tolerances::default();
    if let Some(r) = run.rtol {
        t.rtol = r;
    }
    if let Some(a) = run.atol {
        t.atol = a;
    }
    if !(t.rtol > 0.0) || !(t.atol > 0.0) {
        return Err(Error::Config(format!(
            "run.rtol and run.atol must be > 0, got {} and {}",
            t.rtol, t.atol
        )));
    }
    Ok(t)
}

fn output_root(opts: &RunOptions, config: &Config) -> PathBuf {
    opts.output_dir
        .clone()
        .or_else(|| config.run.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

pub fn cmd_vrs_scan(config: &Path, opts: &RunOptions) -> Result<RunOutput> {
    run_from_file(Command::VrsScan, config, opts)
}

pub fn cmd_eit_scan(config: &Path, opts: &RunOptions) -> Result<RunOutput> {
    run_from_file(Command::EitScan, config, opts)
}

pub fn cmd_ringdown(config: &Path, opts: &RunOptions) -> Result<RunOutput> {
    run_from_file(Command::Ringdown, config, opts)
}

fn run_from_file(command: Command, path: &Path, opts: &RunOptions) -> Result<RunOutput> {
    let mut config = apply_overrides(&load_config(path)?, &opts.overrides)?;
    if let Some(c) = opts.cycles {
        config.run.cycles = Some(c);
    }
    let root = output_root(opts, &config);
    execute(command, &config, &root)
}

/// Resolve, simulate and write `root/<run id>/`.
pub fn execute(command: Command, config: &Config, root: &Path) -> Result<RunOutput> {
    let (model, mut snapshot) = resolve(config)?;
    snapshot.run.output_dir = None;
    let tol = tolerances(&snapshot.run)?;
    let id = run_id(command.name(), &snapshot)?;
    let dir = ensure_dir(&root.join(&id))?;
    info!("{} -> {}", command.name(), dir.display());

    let (summary, data_file) = match command {
        Command::VrsScan => {
            let spec = ScanSpec::from_run(&model, LevelSystem::ThreeLevel, &snapshot.run)?;
            let result = run_vrs_scan(&model, &spec, &tol)?;
            write_scan_csv(&dir.join(SCAN_FILE), &result, false)?;
            (Summary::VrsScan(summarize_vrs(&model, &result)?), SCAN_FILE)
        }
        Command::EitScan => {
            let spec = ScanSpec::from_run(&model, LevelSystem::FourLevel, &snapshot.run)?;
            let result = run_eit_scan(&model, &spec, &tol)?;
            write_scan_csv(&dir.join(SCAN_FILE), &result, true)?;
            (Summary::EitScan(summarize_eit(&model, &result)), SCAN_FILE)
        }
        Command::Ringdown => {
            let spec = RingdownSpec::from_run(&model, &snapshot.run)?;
            let result = run_ringdown(&model, &spec, &tol)?;
            let c0 = &result.cycles[0];
            let rows: Vec<Vec<f64>> = c0.times.iter().zip(&c0.p_out).map(|(t, p)| vec![*t, *p]).collect();
            write_csv(&dir.join(RINGDOWN_FILE), &["t_s", "p_out_w"], &rows)?;
            (Summary::Ringdown(summarize_ringdown(&model, &result)), RINGDOWN_FILE)
        }
    };

    write_json(&dir.join(SUMMARY_FILE), &summary)?;
    let manifest = RunManifest::new(
        command.name(),
        &snapshot,
        vec![MANIFEST_FILE.into(), data_file.into(), SUMMARY_FILE.into()],
    )?;
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(RunOutput {
        run_id: id,
        dir,
        manifest,
        summary,
    })
}

fn write_scan_csv(path: &Path, r: &ScanResult, eit: bool) -> Result<()> {
    let mut header = vec!["detuning_hz", "p_out_w", "n_bar", "rho_g", "rho_e", "rho_gp"];
    if eit {
        header.push("rho_gpp");
    }
    let rows: Vec<Vec<f64>> = r
        .points
        .iter()
        .map(|p| {
            let mut row = vec![ordinary(p.delta_pc), p.p_out, p.n_bar, p.rho_g, p.rho_e, p.rho_gp];
            if eit {
                row.push(p.rho_gpp);
            }
            row
        })
        .collect();
    write_csv(path, &header, &rows)
}

fn max_of(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(0.0, f64::max)
}

pub fn summarize_vrs(model: &Model, r: &ScanResult) -> Result<VrsSummary> {
    let x: Vec<f64> = r.points.iter().map(|p| ordinary(p.delta_pc)).collect();
    let peaks = find_peaks(&x, &r.powers(), DEFAULT_PROMINENCE)?;
    let splitting_hz = (peaks.len() == 2).then(|| peaks[1].position - peaks[0].position);
    if peaks.len() > 2 {
        warn!("{} transmission peaks found; splitting not reported", peaks.len());
    }
    let loss = loss_fraction(r);
    let peak_n_bar = max_of(r.points.iter().map(|p| p.n_bar));
    Ok(VrsSummary {
        model: ModelSummary::of(model),
        window: ScanWindow::of(&r.spec),
        peaks: peaks
            .iter()
            .map(|p| PeakSummary {
                detuning_hz: p.position,
                p_out_w: p.height,
            })
            .collect(),
        splitting_hz,
        formula_splitting_hz: ordinary(vrs_splitting(model.cavity.g0, model.ensemble.n_c)),
        peak_p_out_w: max_of(r.points.iter().map(|p| p.p_out)),
        peak_n_bar,
        peak_output_photons_per_s: output_flux(peak_n_bar, model.cavity.kappa_r2, model.drive.flux_convention),
        loss_fraction: loss.headline,
        loss,
        max_trace_error: r.max_trace_error,
    })
}

pub fn summarize_eit(model: &Model, r: &ScanResult) -> EitSummary {
    let widths = |form| {
        eit_fwhm(
            model.cavity.g0,
            model.ensemble.n_c,
            model.drive.omega_control,
            model.cavity.kappa_t,
            model.levels.gamma_t,
            form,
        )
    };
    let exact = widths(FwhmForm::Exact);
    let simplified = widths(FwhmForm::Simplified);
    let x: Vec<f64> = r.points.iter().map(|p| ordinary(p.delta_pc)).collect();
    let (fit, fit_error) = match fit_lorentzian(&x, &r.powers()) {
        Ok(f) => (
            Some(LineFit {
                center_hz: f.params.center,
                fwhm_hz: f.params.fwhm(),
                amplitude_w: f.params.amplitude,
                relative_residual: f.relative_residual,
                large_residual: f.large_residual,
            }),
            None,
        ),
        Err(e) => {
            warn!("Lorentzian fit failed: {e}");
            (None, Some(e.to_string()))
        }
    };
    let loss = loss_fraction(r);
    EitSummary {
        model: ModelSummary::of(model),
        window: ScanWindow::of(&r.spec),
        fit,
        fit_error,
        fwhm_exact_hz: ordinary(exact.width),
        fwhm_simplified_hz: ordinary(simplified.width),
        validity_ratio: simplified.validity_ratio,
        fwhm_warning: simplified.warning,
        peak_p_out_w: max_of(r.points.iter().map(|p| p.p_out)),
        peak_n_bar: max_of(r.points.iter().map(|p| p.n_bar)),
        loss_fraction: loss.headline,
        loss,
        max_trace_error: r.max_trace_error,
    }
}

pub fn summarize_ringdown(model: &Model, r: &RingdownResult) -> RingdownSummary {
    let c0 = &r.cycles[0];
    let fit = fit_exponential(&c0.times, &c0.p_out);
    let (rate, resid, flag, fit_error) = match &fit {
        Ok(f) => (Some(f.params.rate), Some(f.relative_residual), Some(f.large_residual), None),
        Err(e) => {
            warn!("exponential fit failed: {e}");
            (None, None, None, Some(e.to_string()))
        }
    };
    let simplified = if model.ensemble.n_c == 0.0 {
        2.0 * model.cavity.kappa_t
    } else {
        eit_fwhm(
            model.cavity.g0,
            model.ensemble.n_c,
            model.drive.omega_control,
            model.cavity.kappa_t,
            model.levels.gamma_t,
            FwhmForm::Simplified,
        )
        .width
    };
    let loss = loss_fraction(r);
    RingdownSummary {
        model: ModelSummary::of(model),
        cycles: r.cycles.len(),
        observe_s: r.spec.observe,
        samples: r.spec.samples,
        settle_times_s: r.cycles.iter().map(|c| c.settle_time).collect(),
        steady_p_out_w: r.cycles.iter().map(|c| c.steady_p_out).collect(),
        fitted_rate_per_s: rate,
        fit_relative_residual: resid,
        large_residual: flag,
        fit_error,
        rate_simplified_per_s: simplified,
        rate_exact_per_s: expected_decay_rate(model),
        loss_per_cycle: loss.per_cycle.clone(),
        cumulative_loss: loss.cumulative,
        loss,
        max_trace_error: r.max_trace_error,
    }
}

/// Derived quantities of a configuration, as printed by `validate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub model: ModelSummary,
    pub waist_m: f64,
    pub mode_volume_m3: f64,
    pub g0_from_dipole_hz: f64,
    pub vrs_splitting_hz: f64,
    pub eit_fwhm_exact_hz: f64,
    /// Weak-probe transmission maximum at the configured drive.
    pub linear_peak_p_out_w: f64,
    pub linear_peak_detuning_hz: f64,
    pub resolved: Config,
}

pub fn cmd_validate(config: &Path, overrides: &[(String, String)]) -> Result<ValidationReport> {
    let config = apply_overrides(&load_config(config)?, overrides)?;
    let (model, resolved) = resolve(&config)?;
    // the run table is checked here too so that `validate` catches run errors
    tolerances(&resolved.run)?;
    ScanSpec::from_run(&model, LevelSystem::for_model(&model), &resolved.run)?;
    let peak = transmission_peak(&model, LockedDetuning::from_model(&model));
    let eta2 = model.drive.eta * model.drive.eta;
    Ok(ValidationReport {
        model: ModelSummary::of(&model),
        waist_m: model.cavity.waist,
        mode_volume_m3: model.cavity.mode_volume,
        g0_from_dipole_hz: ordinary(model.cavity.g0_from_dipole),
        vrs_splitting_hz: ordinary(vrs_splitting(model.cavity.g0, model.ensemble.n_c)),
        eit_fwhm_exact_hz: ordinary(
            eit_fwhm(
                model.cavity.g0,
                model.ensemble.n_c,
                model.drive.omega_control,
                model.cavity.kappa_t,
                model.levels.gamma_t,
                FwhmForm::Exact,
            )
            .width,
        ),
        linear_peak_p_out_w: model.output_power_for(peak.n_bar_per_eta2 * eta2),
        linear_peak_detuning_hz: ordinary(peak.delta_pc),
        resolved,
    })
}
