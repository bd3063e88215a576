//! Flat experiment configuration, read from TOML and overridden by flags.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::initial::{InitialDataSpec, InitialKind};
use crate::solver::SolverConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Cccf,
    VacuumPlateau,
    PositiveControl,
    SmoothMonotone,
}

impl Preset {
    pub fn kind(self) -> InitialKind {
        match self {
            Self::Cccf => InitialKind::Cccf,
            Self::VacuumPlateau => InitialKind::VacuumPlateau,
            Self::PositiveControl => InitialKind::PositiveControl,
            Self::SmoothMonotone => InitialKind::SmoothMonotone,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObserverKind {
    /// Per-snapshot diagnostics time series.
    Diagnostics,
    /// Field values at every snapshot.
    Snapshots,
    /// SVG charts of the density snapshots and the C¹ norm.
    Plots,
}

/// Every knob of an experiment. Unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub alpha: f64,
    pub n_points: usize,
    pub t_end: f64,
    pub cfl: f64,
    pub dealias_fraction: f64,
    pub tail_threshold: f64,
    /// Defaults to `t_end / 100`.
    pub snapshot_interval: Option<f64>,
    pub max_steps: u64,
    pub preset: Preset,
    pub rho_max: f64,
    pub x0: f64,
    pub transition_width: f64,
    pub offset: f64,
    pub observers: Vec<ObserverKind>,
    pub out_dir: PathBuf,
    /// Exit with code 3 when the run stops before `t_end`.
    pub require_t_end: bool,
    /// Leaves wall-clock data out of the metadata so reruns are byte-identical.
    pub deterministic: bool,
    /// Starting points of tracked characteristics.
    pub paths: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let solver = SolverConfig::new(1.0, 2048, 1.0);
        let data = InitialDataSpec::new(InitialKind::Cccf);
        Self {
            alpha: solver.alpha,
            n_points: solver.n_points,
            t_end: solver.t_end,
            cfl: solver.cfl,
            dealias_fraction: solver.dealias_fraction,
            tail_threshold: solver.tail_threshold,
            snapshot_interval: None,
            max_steps: solver.max_steps,
            preset: Preset::Cccf,
            rho_max: data.rho_max,
            x0: data.x0,
            transition_width: data.transition_width,
            offset: data.offset,
            observers: vec![ObserverKind::Diagnostics, ObserverKind::Snapshots, ObserverKind::Plots],
            out_dir: PathBuf::from("out"),
            require_t_end: false,
            deterministic: true,
            paths: vec![0.05, 0.15, 0.25],
        }
    }
}

impl ExperimentConfig {
    /// Parses TOML text; errors name the offending line and key.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let cfg = SolverConfig {
            alpha: self.alpha,
            n_points: self.n_points,
            cfl: self.cfl,
            dealias_fraction: self.dealias_fraction,
            t_end: self.t_end,
            tail_threshold: self.tail_threshold,
            snapshot_interval: self.snapshot_interval.unwrap_or(self.t_end / 100.0),
            max_steps: self.max_steps,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn initial_spec(&self) -> InitialDataSpec {
        InitialDataSpec {
            kind: self.preset.kind(),
            rho_max: self.rho_max,
            x0: self.x0,
            transition_width: self.transition_width,
            offset: self.offset,
        }
    }

    pub fn wants(&self, kind: ObserverKind) -> bool {
        self.observers.contains(&kind)
    }

    /// Sets a numeric field by name, for sweeps.
    pub fn set_axis(&mut self, axis: SweepAxis, value: f64) -> Result<()> {
        match axis {
            SweepAxis::Alpha => self.alpha = value,
            SweepAxis::NPoints => {
                if !(value >= 0.0 && value.fract() == 0.0) {
                    return Err(Error::Config(format!("n_points must be a whole number, got {value}")));
                }
                self.n_points = value as usize;
            }
            SweepAxis::X0 => self.x0 = value,
            SweepAxis::Offset => self.offset = value,
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum SweepAxis {
    Alpha,
    NPoints,
    X0,
    Offset,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            Self::Alpha => "alpha",
            Self::NPoints => "n_points",
            Self::X0 => "x0",
            Self::Offset => "offset",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let c = ExperimentConfig::from_toml("alpha = 0.5\npreset = \"vacuum-plateau\"\n").unwrap();
        assert_eq!(c.alpha, 0.5);
        assert_eq!(c.preset, Preset::VacuumPlateau);
        assert_eq!(c.n_points, 2048);
        assert_eq!(c.solver_config().unwrap().snapshot_interval, 0.01);
    }

    #[test]
    fn unknown_key_names_line_and_field() {
        let err = ExperimentConfig::from_toml("alpha = 1.0\nalhpa = 2.0\n").unwrap_err().to_string();
        assert!(err.contains("alhpa") && err.contains("line 2"), "{err}");
        let err = ExperimentConfig::from_toml("n_points = \"big\"\n").unwrap_err().to_string();
        assert!(err.contains("n_points") || err.contains("line 1"), "{err}");
    }
}
