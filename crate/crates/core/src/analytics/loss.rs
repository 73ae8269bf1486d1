use serde::{Deserialize, Serialize};

use crate::dynamics::{LevelSystem, MeanFieldState, RingdownResult, ScanResult};

/// Population moved to dark levels by a run.
///
/// `headline` is the fraction counted as lost: the aggregate dark level in the
/// 3-level scheme, `|g''>` in the 4-level scheme (where `|g'>` is still coupled
/// by the control field and is only reported).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub system: LevelSystem,
    pub dark_gp: f64,
    pub dark_gpp: f64,
    pub headline: f64,
    pub molecules_lost: f64,
    /// Headline loss of each cycle (one entry for a scan).
    pub per_cycle: Vec<f64>,
    pub cumulative: f64,
}

/// Anything whose dark-state bookkeeping can be summarised.
pub trait LossSource {
    fn loss_report(&self) -> LossReport;
}

/// Start and end of an arbitrary trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Endpoints {
    pub system: LevelSystem,
    pub n_c: f64,
    pub initial: MeanFieldState,
    pub last: MeanFieldState,
}

fn headline(system: LevelSystem, s: &MeanFieldState) -> f64 {
    match system {
        LevelSystem::ThreeLevel => s.rho_gpgp,
        LevelSystem::FourLevel => s.rho_gpp,
    }
}

fn report(system: LevelSystem, n_c: f64, initial: &MeanFieldState, ends: &[MeanFieldState]) -> LossReport {
    let last = ends.last().copied().unwrap_or(*initial);
    let mut prev = headline(system, initial);
    let per_cycle = ends
        .iter()
        .map(|s| {
            let h = headline(system, s);
            let d = h - prev;
            prev = h;
            d
        })
        .collect();
    let cumulative = headline(system, &last) - headline(system, initial);
    LossReport {
        system,
        dark_gp: last.rho_gpgp - initial.rho_gpgp,
        dark_gpp: last.rho_gpp - initial.rho_gpp,
        headline: cumulative,
        molecules_lost: n_c * cumulative,
        per_cycle,
        cumulative,
    }
}

impl LossSource for Endpoints {
    fn loss_report(&self) -> LossReport {
        report(self.system, self.n_c, &self.initial, &[self.last])
    }
}

impl LossSource for ScanResult {
    fn loss_report(&self) -> LossReport {
        report(self.system, self.n_c, &MeanFieldState::ground(), &[self.final_state])
    }
}

impl LossSource for RingdownResult {
    fn loss_report(&self) -> LossReport {
        let ends: Vec<_> = self.cycles.iter().map(|c| c.end_state).collect();
        report(self.system, self.n_c, &self.initial_state, &ends)
    }
}

pub fn loss_fraction<S: LossSource + ?Sized>(source: &S) -> LossReport {
    source.loss_report()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_dark(gp: f64, gpp: f64) -> MeanFieldState {
        let mut s = MeanFieldState::ground();
        s.rho_gpgp = gp;
        s.rho_gpp = gpp;
        s.rho_gg = 1.0 - gp - gpp;
        s
    }

    #[test]
    fn untouched_state_loses_nothing() {
        let e = Endpoints {
            system: LevelSystem::FourLevel,
            n_c: 1e3,
            initial: MeanFieldState::ground(),
            last: MeanFieldState::ground(),
        };
        let r = loss_fraction(&e);
        assert_eq!(r.headline, 0.0);
        assert_eq!(r.molecules_lost, 0.0);
    }

    #[test]
    fn headline_level_depends_on_scheme() {
        let last = with_dark(0.01, 0.002);
        let mk = |system| Endpoints {
            system,
            n_c: 5e4,
            initial: MeanFieldState::ground(),
            last,
        };
        assert_eq!(loss_fraction(&mk(LevelSystem::ThreeLevel)).headline, 0.01);
        let r = loss_fraction(&mk(LevelSystem::FourLevel));
        assert_eq!(r.headline, 0.002);
        assert_eq!(r.dark_gp, 0.01);
        assert!((r.molecules_lost - 100.0).abs() < 1e-9);
    }

    #[test]
    fn cycles_sum_to_cumulative() {
        let ends = [with_dark(0.0, 1e-4), with_dark(0.0, 3e-4), with_dark(0.0, 3.5e-4)];
        let r = report(LevelSystem::FourLevel, 1e3, &MeanFieldState::ground(), &ends);
        assert_eq!(r.per_cycle.len(), 3);
        let s: f64 = r.per_cycle.iter().sum();
        assert!((s - r.cumulative).abs() < 1e-18);
        assert!((r.per_cycle[1] - 2e-4).abs() < 1e-15);
    }
}
