//! Command-line front end. Every subcommand writes its artifacts under the
//! output directory and prints a JSON summary on stdout.
//!
//! Exit codes: 0 success, 1 bad arguments, config or runtime error, 2 an
//! applicable invariant failed (`verify`), 3 the run stopped before `t_end`
//! while `require_t_end` is set.

pub mod config;
pub mod output;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::characteristics::{
    advect_paths, check_decay_bound, check_mass_transport, min_path_gap, path_table, PATH_COLUMNS,
};
use crate::diagnostics::{
    check_invariants, classify_run, run_with_diagnostics, Classification, DiagnosedRun, DiagnosticsRecord,
    InvariantCheck, TheoremConstants, Tolerances, INVARIANT_NAMES,
};
use crate::error::Result;
use crate::extensions::{run_alignment, slab_check_2d};
use crate::grid::{DensityField, PeriodicGrid};
use crate::nonlocal::{c_alpha_closed_form, compute_a, compute_c, compute_delta, velocity_spectral, OperatorParams};
use crate::solver::{SimulationState, SnapshotRecorder, Solver, StopReason};

pub use config::{ExperimentConfig, ObserverKind, Preset, SweepAxis};
use output::{format_value, line_chart, write_csv, write_json, write_text_csv, Series};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_INVARIANT: u8 = 2;
pub const EXIT_UNDER_RESOLVED: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "fracpm", version, about = "Fractional porous medium flow: simulation and estimate checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Grid points.
    #[arg(long = "n", global = true)]
    pub n_points: Option<usize>,
    #[arg(long, global = true)]
    pub t_end: Option<f64>,
    #[arg(long, global = true)]
    pub cfl: Option<f64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub preset: Option<Preset>,
    /// TOML experiment file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Default)]
pub struct RunArgs {
    #[arg(long)]
    pub snapshot_interval: Option<f64>,
    /// Exit with code 3 if the run stops before t_end.
    #[arg(long)]
    pub require_t_end: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Evolve the density and record diagnostics.
    Simulate(RunArgs),
    /// Simulate, then check every applicable invariant.
    Verify(RunArgs),
    /// Track particle paths and check mass transport and decay.
    Characteristics {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated starting points.
        #[arg(long, value_delimiter = ',')]
        paths: Option<Vec<f64>>,
    },
    /// Evolve the Euler-Alignment form with the induced initial velocity.
    Align(RunArgs),
    /// Slab reduction on the 2D torus.
    Reduce,
    /// Print the constants of the velocity estimates.
    Constants {
        #[arg(long, default_value_t = 1.0)]
        m: f64,
        #[arg(long, default_value_t = 2.0)]
        rho_max: f64,
    },
    /// Repeat `verify` along one parameter axis.
    Sweep {
        #[arg(long, value_enum)]
        axis: SweepAxis,
        /// Comma-separated values; may be empty.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<f64>,
    },
}

impl Cli {
    /// The configuration after applying the file and then the flags.
    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.n_points {
            cfg.n_points = v;
        }
        if let Some(v) = self.t_end {
            cfg.t_end = v;
        }
        if let Some(v) = self.cfl {
            cfg.cfl = v;
        }
        if let Some(v) = &self.out {
            cfg.out_dir = v.clone();
        }
        if let Some(v) = self.preset {
            cfg.preset = v;
        }
        let run = match &self.command {
            Command::Simulate(r) | Command::Verify(r) | Command::Align(r) => Some(r),
            Command::Characteristics { run, paths } => {
                if let Some(p) = paths {
                    cfg.paths = p.clone();
                }
                Some(run)
            }
            _ => None,
        };
        if let Some(r) = run {
            if r.snapshot_interval.is_some() {
                cfg.snapshot_interval = r.snapshot_interval;
            }
            cfg.require_t_end |= r.require_t_end;
        }
        Ok(cfg)
    }
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    let result = cli.experiment().and_then(|cfg| run_experiment(&cli.command, &cfg));
    match result {
        Ok(outcome) => {
            println!("{}", serde_json::to_string_pretty(&outcome.summary).unwrap_or_default());
            outcome.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub code: u8,
    pub summary: Value,
}

pub fn run_experiment(command: &Command, cfg: &ExperimentConfig) -> Result<Outcome> {
    match command {
        Command::Simulate(_) => simulate(cfg, "simulate"),
        Command::Verify(_) => simulate(cfg, "verify"),
        Command::Characteristics { .. } => characteristics(cfg),
        Command::Align(_) => align(cfg),
        Command::Reduce => reduce(cfg),
        Command::Constants { m, rho_max } => constants(cfg.alpha, *m, *rho_max),
        Command::Sweep { axis, values } => sweep(cfg, *axis, values),
    }
}

fn metadata(cfg: &ExperimentConfig, subcommand: &str, extra: Value) -> Value {
    let mut meta = json!({
        "tool": "fracpm",
        "version": env!("CARGO_PKG_VERSION"),
        "subcommand": subcommand,
        "config": cfg,
    });
    if !cfg.deterministic {
        let now = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        meta["created_unix"] = json!(now);
    }
    if let (Value::Object(m), Value::Object(e)) = (&mut meta, extra) {
        m.extend(e);
    }
    meta
}

fn prepare(cfg: &ExperimentConfig) -> Result<(Solver, DensityField)> {
    let solver = Solver::new(cfg.solver_config()?)?;
    let rho0 = cfg.initial_spec().generate(solver.grid())?;
    fs::create_dir_all(&cfg.out_dir)?;
    Ok((solver, rho0))
}

fn stop_code(cfg: &ExperimentConfig, stop: StopReason) -> u8 {
    if cfg.require_t_end && stop != StopReason::TEnd {
        EXIT_UNDER_RESOLVED
    } else {
        EXIT_OK
    }
}

fn write_snapshots(dir: &Path, states: &[SimulationState]) -> Result<()> {
    let dir = dir.join("snapshots");
    fs::create_dir_all(&dir)?;
    for (i, s) in states.iter().enumerate() {
        let grid = s.rho.grid();
        let rows = (0..grid.n_points()).map(|j| [grid.node(j), s.rho.values()[j], s.u.values()[j]]);
        write_csv(&dir.join(format!("snapshot_{i:04}.csv")), &["x", "rho", "u"], rows)?;
    }
    let times = states.iter().enumerate().map(|(i, s)| [i as f64, s.t]);
    write_csv(&dir.join("index.csv"), &["index", "t"], times)
}

fn write_plots(dir: &Path, states: &[SimulationState], records: &[DiagnosticsRecord]) -> Result<()> {
    if !states.is_empty() {
        let picks = 8.min(states.len());
        let series: Vec<Series> = (0..picks)
            .map(|i| {
                let s = &states[if picks == 1 { 0 } else { i * (states.len() - 1) / (picks - 1) }];
                let grid = s.rho.grid();
                Series {
                    label: format!("t = {:.4}", s.t),
                    points: (0..grid.n_points()).map(|j| (grid.node(j), s.rho.values()[j])).collect(),
                }
            })
            .collect();
        fs::write(dir.join("rho_snapshots.svg"), line_chart("density snapshots", "x", "rho", &series))?;
    }
    let c1 = Series {
        label: "max |d rho/dx|".into(),
        points: records.iter().map(|r| (r.t, r.c1_norm)).collect(),
    };
    fs::write(dir.join("c1_norm.svg"), line_chart("C1 norm", "t", "c1_norm", &[c1]))?;
    Ok(())
}

struct Simulated {
    run: DiagnosedRun,
    checks: Vec<InvariantCheck>,
    classification: Option<Classification>,
}

fn simulate_into(cfg: &ExperimentConfig) -> Result<Simulated> {
    let (solver, rho0) = prepare(cfg)?;
    let keep = cfg.wants(ObserverKind::Snapshots) || cfg.wants(ObserverKind::Plots);
    let mut recorder = SnapshotRecorder::default();
    let run = if keep {
        run_with_diagnostics(&solver, &rho0, &mut [&mut recorder])?
    } else {
        run_with_diagnostics(&solver, &rho0, &mut [])?
    };
    let dir = &cfg.out_dir;
    if cfg.wants(ObserverKind::Diagnostics) {
        write_csv(&dir.join("timeseries.csv"), &DiagnosticsRecord::COLUMNS, run.records.iter().map(|r| r.values()))?;
    }
    if cfg.wants(ObserverKind::Snapshots) {
        write_snapshots(dir, &recorder.states)?;
    }
    if cfg.wants(ObserverKind::Plots) {
        write_plots(dir, &recorder.states, &run.records)?;
    }
    let checks = check_invariants(&run, &Tolerances::default());
    let classification = classify_run(&run.records, run.output.stop_reason).ok();
    Ok(Simulated {
        run,
        checks,
        classification,
    })
}

fn run_summary(sim: &Simulated) -> Value {
    let out = &sim.run.output;
    json!({
        "stop_reason": out.stop_reason.as_str(),
        "t_final": out.final_state.t,
        "steps": out.final_state.step_count,
        "rejected_at": out.rejected_at,
        "constants": sim.run.constants,
        "hypotheses_hold": sim.run.hypotheses_hold,
        "classification": sim.classification.map(|c| json!({
            "verdict": c.verdict.as_str(),
            "growth_factor": c.growth_factor,
        })),
        "invariants": sim.checks,
    })
}

fn simulate(cfg: &ExperimentConfig, name: &str) -> Result<Outcome> {
    let sim = simulate_into(cfg)?;
    let summary = run_summary(&sim);
    write_json(&cfg.out_dir.join("metadata.json"), &metadata(cfg, name, summary.clone()))?;
    let mut code = stop_code(cfg, sim.run.output.stop_reason);
    if name == "verify" {
        write_json(&cfg.out_dir.join("invariants.json"), &sim.checks)?;
        if sim.checks.iter().any(|c| !c.passed) {
            code = EXIT_INVARIANT;
        }
    }
    Ok(Outcome { code, summary })
}

fn characteristics(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (solver, rho0) = prepare(cfg)?;
    let mut recorder = SnapshotRecorder::default();
    let out = solver.run(&rho0, &mut [&mut recorder])?;
    let states = &recorder.states;
    let constants = TheoremConstants::for_density(cfg.alpha, &rho0)?;
    let mut starts = cfg.paths.clone();
    starts.sort_by(f64::total_cmp);
    let paths = advect_paths(states, &starts)?;
    let mut reports = Vec::new();
    for (i, p) in paths.iter().enumerate() {
        write_csv(
            &cfg.out_dir.join(format!("path_{i:02}.csv")),
            &PATH_COLUMNS,
            path_table(p, constants.a, states)?,
        )?;
        let decay = (p.x_start >= 0.0 && p.x_start <= constants.delta)
            .then(|| check_decay_bound(p, constants.a, states))
            .transpose()?;
        reports.push(json!({
            "x_start": p.x_start,
            "mass0": p.mass0,
            "x_final": p.positions.last(),
            "path_error": p.path_error,
            "starved": p.starved,
            "decay": decay,
        }));
    }
    let mut drifts = Vec::new();
    for w in paths.windows(2) {
        drifts.push(json!({
            "between": [w[0].x_start, w[1].x_start],
            "drift": check_mass_transport(&w[0], &w[1], states)?,
        }));
    }
    let summary = json!({
        "stop_reason": out.stop_reason.as_str(),
        "t_final": out.final_state.t,
        "constants": constants,
        "paths": reports,
        "mass_drift": drifts,
        "min_gap": if paths.len() > 1 { Some(min_path_gap(&paths)) } else { None },
    });
    write_json(&cfg.out_dir.join("metadata.json"), &metadata(cfg, "characteristics", summary.clone()))?;
    Ok(Outcome {
        code: stop_code(cfg, out.stop_reason),
        summary,
    })
}

fn align(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (solver, rho0) = prepare(cfg)?;
    let u0 = velocity_spectral(&rho0, cfg.alpha)?;
    let run = run_alignment(&rho0, &u0, solver.config())?;
    let header = ["t", "mass", "rho_min", "rho_max", "c1_norm", "g_max", "dxu_max", "tail_fraction", "dt"];
    let rows = run.states.iter().zip(&run.records).map(|(s, r)| {
        [r.t, s.rho.mean(), s.rho.min(), s.rho.max(), s.rho.derivative().max_abs(), r.g_max, r.dxu_max, r.tail_fraction, r.dt]
    });
    write_csv(&cfg.out_dir.join("timeseries.csv"), &header, rows)?;
    if cfg.wants(ObserverKind::Snapshots) {
        let dir = cfg.out_dir.join("snapshots");
        fs::create_dir_all(&dir)?;
        for (i, s) in run.states.iter().enumerate() {
            let grid = s.rho.grid();
            let rows = (0..grid.n_points()).map(|j| [grid.node(j), s.rho.values()[j], s.u.values()[j], s.g.values()[j]]);
            write_csv(&dir.join(format!("snapshot_{i:04}.csv")), &["x", "rho", "u", "G"], rows)?;
        }
    }
    let worst = run
        .records
        .iter()
        .map(|r| if r.dxu_max > 0.0 { r.g_max / r.dxu_max } else { r.g_max })
        .fold(0.0, f64::max);
    let summary = json!({
        "stop_reason": run.stop_reason.as_str(),
        "t_final": run.states.last().map(|s| s.t),
        "rejected_at": run.rejected_at,
        "max_g_ratio": worst,
    });
    write_json(&cfg.out_dir.join("metadata.json"), &metadata(cfg, "align", summary.clone()))?;
    Ok(Outcome {
        code: stop_code(cfg, run.stop_reason),
        summary,
    })
}

fn reduce(cfg: &ExperimentConfig) -> Result<Outcome> {
    let grid = PeriodicGrid::new(cfg.n_points)?;
    let rho0 = cfg.initial_spec().generate(&grid)?;
    fs::create_dir_all(&cfg.out_dir)?;
    let report = slab_check_2d(&rho0, cfg.alpha)?;
    let summary = serde_json::to_value(&report)?;
    write_json(&cfg.out_dir.join("slab.json"), &report)?;
    write_json(&cfg.out_dir.join("metadata.json"), &metadata(cfg, "reduce", summary.clone()))?;
    Ok(Outcome { code: EXIT_OK, summary })
}

fn constants(alpha: f64, m: f64, rho_max: f64) -> Result<Outcome> {
    let params = OperatorParams::new(alpha)?;
    let summary = json!({
        "alpha": alpha,
        "m": m,
        "rho_max": rho_max,
        "c_alpha": params.c_alpha,
        "c_alpha_closed_form": c_alpha_closed_form(alpha),
        "C": compute_c(alpha),
        "delta": compute_delta(alpha),
        "A": compute_a(alpha, m, rho_max)?,
    });
    Ok(Outcome { code: EXIT_OK, summary })
}

fn value_label(v: f64) -> String {
    let s = format!("{v}");
    s.replace('-', "m")
}

pub fn sweep_header() -> Vec<String> {
    let mut h: Vec<String> = ["axis", "value", "status", "stop_reason", "t_final", "verdict", "growth_factor"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for name in INVARIANT_NAMES {
        h.push(format!("{name}_worst"));
        h.push(format!("{name}_passed"));
    }
    h
}

fn sweep(base: &ExperimentConfig, axis: SweepAxis, values: &[f64]) -> Result<Outcome> {
    fs::create_dir_all(&base.out_dir)?;
    let mut rows = Vec::new();
    let mut verdicts = Vec::new();
    for &v in values {
        let mut cfg = base.clone();
        cfg.out_dir = base.out_dir.join(format!("{}_{}", axis.name(), value_label(v)));
        let result = cfg.set_axis(axis, v).and_then(|_| simulate_into(&cfg));
        let mut row = vec![axis.name().to_string(), format_value(v)];
        match result {
            Ok(sim) => {
                let summary = run_summary(&sim);
                write_json(&cfg.out_dir.join("metadata.json"), &metadata(&cfg, "verify", summary))?;
                let out = &sim.run.output;
                let verdict = sim.classification.map_or("none", |c| c.verdict.as_str());
                verdicts.push(json!({ "value": v, "verdict": verdict }));
                row.push("ok".into());
                row.push(out.stop_reason.as_str().into());
                row.push(format_value(out.final_state.t));
                row.push(verdict.into());
                row.push(sim.classification.map_or(String::new(), |c| format_value(c.growth_factor)));
                for name in INVARIANT_NAMES {
                    match sim.checks.iter().find(|c| c.name == name) {
                        Some(c) => {
                            row.push(format_value(c.worst));
                            row.push(if !c.applicable { "n/a" } else if c.passed { "true" } else { "false" }.into());
                        }
                        None => row.extend([String::new(), String::new()]),
                    }
                }
            }
            Err(e) => {
                verdicts.push(json!({ "value": v, "error": e.to_string() }));
                let msg = e.to_string().replace([',', '\n'], ";");
                row.push(format!("error: {msg}"));
                row.resize(sweep_header().len(), String::new());
            }
        }
        rows.push(row);
    }
    write_text_csv(&base.out_dir.join("summary.csv"), &sweep_header(), &rows)?;
    Ok(Outcome {
        code: EXIT_OK,
        summary: json!({ "axis": axis.name(), "rows": verdicts }),
    })
}
