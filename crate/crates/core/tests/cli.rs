use std::fs;
use std::path::Path;

use fracpm::cli::{main_with_args, sweep_header, EXIT_ERROR, EXIT_OK, EXIT_UNDER_RESOLVED};
use fracpm::diagnostics::{check_invariants, run_with_diagnostics, Tolerances, INVARIANT_NAMES};
use fracpm::initial::gen_positive_control;
use fracpm::solver::{Solver, SolverConfig};

fn run(args: &[&str]) -> u8 {
    main_with_args(std::iter::once("fracpm").chain(args.iter().copied()))
}

fn out(dir: &Path) -> String {
    dir.to_string_lossy().into_owned()
}

#[test]
fn unknown_flag_and_bad_value_exit_one() {
    assert_eq!(run(&["simulate", "--bogus"]), EXIT_ERROR);
    assert_eq!(run(&["--alpha", "abc", "simulate"]), EXIT_ERROR);
    assert_eq!(run(&["nonsense"]), EXIT_ERROR);
}

#[test]
fn out_of_range_parameters_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = out(dir.path());
    assert_eq!(run(&["--alpha", "2.5", "--n", "64", "--out", &o, "simulate"]), EXIT_ERROR);
    assert_eq!(run(&["--n", "63", "--out", &o, "simulate"]), EXIT_ERROR);
}

#[test]
fn malformed_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "alpha = 1.0\nn_pionts = 64\n").unwrap();
    let c = out(&cfg);
    assert_eq!(run(&["--config", &c, "simulate"]), EXIT_ERROR);
    fs::write(&cfg, "alpha = [1.0\n").unwrap();
    assert_eq!(run(&["--config", &c, "simulate"]), EXIT_ERROR);
    assert_eq!(run(&["--config", &out(&dir.path().join("missing.toml")), "simulate"]), EXIT_ERROR);
}

#[test]
fn simulate_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = out(dir.path());
    let code = run(&["--alpha", "1", "--n", "128", "--t-end", "0.02", "--out", &o, "simulate"]);
    assert_eq!(code, EXIT_OK);
    for f in ["timeseries.csv", "metadata.json", "rho_snapshots.svg", "c1_norm.svg", "snapshots/index.csv"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let ts = fs::read_to_string(dir.path().join("timeseries.csv")).unwrap();
    assert!(ts.lines().count() > 2);
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["subcommand"], "simulate");
    assert!(meta.get("created_unix").is_none());
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "alpha = 0.5\nn_points = 4096\nt_end = 0.01\nobservers = [\"diagnostics\"]\n").unwrap();
    let o = out(&dir.path().join("o"));
    assert_eq!(run(&["--config", &out(&cfg), "--n", "64", "--out", &o, "simulate"]), EXIT_OK);
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o/metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["n_points"], 64);
    assert_eq!(meta["config"]["alpha"], 0.5);
}

#[test]
fn require_t_end_reports_early_stop() {
    let dir = tempfile::tempdir().unwrap();
    let o = out(dir.path());
    let args = ["--alpha", "1", "--n", "64", "--t-end", "1", "--out", &o, "simulate"];
    assert_eq!(run(&args), EXIT_OK);
    let mut strict = args.to_vec();
    strict.push("--require-t-end");
    assert_eq!(run(&strict), EXIT_UNDER_RESOLVED);
}

#[test]
fn verify_passes_on_positive_control() {
    let dir = tempfile::tempdir().unwrap();
    let o = out(dir.path());
    let code = run(&["--preset", "positive-control", "--n", "64", "--t-end", "0.05", "--out", &o, "verify"]);
    assert_eq!(code, EXIT_OK);
    assert!(dir.path().join("invariants.json").exists());
}

#[test]
fn characteristics_align_reduce_constants_run() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["--n", "128", "--t-end", "0.01"];
    for (sub, file) in [("characteristics", "path_00.csv"), ("align", "timeseries.csv"), ("reduce", "slab.json")] {
        let o = out(&dir.path().join(sub));
        let mut args = base.to_vec();
        args.extend(["--out", &o, sub]);
        assert_eq!(run(&args), EXIT_OK, "{sub}");
        assert!(dir.path().join(sub).join(file).exists(), "{sub}: {file}");
    }
    assert_eq!(run(&["--alpha", "1", "constants", "--m", "1", "--rho-max", "2"]), EXIT_OK);
    assert_eq!(run(&["constants", "--m", "3", "--rho-max", "2"]), EXIT_ERROR);
}

#[test]
fn sweep_writes_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let o = out(dir.path());
    let code = run(&["--n", "64", "--t-end", "0.01", "--out", &o, "sweep", "--axis", "alpha", "--values", "0.5,1.0,2.5"]);
    assert_eq!(code, EXIT_OK);
    let csv = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], sweep_header().join(","));
    assert_eq!(lines.len(), 4);
    assert!(lines[3].contains("error"));
    assert!(dir.path().join("alpha_0.5").join("timeseries.csv").exists());

    let empty = tempfile::tempdir().unwrap();
    assert_eq!(run(&["--out", &out(empty.path()), "sweep", "--axis", "x0", "--values"]), EXIT_OK);
    assert_eq!(fs::read_to_string(empty.path().join("summary.csv")).unwrap().lines().count(), 1);
}

#[test]
fn invariant_names_match_checks() {
    let solver = Solver::new(SolverConfig::new(1.0, 64, 0.01)).unwrap();
    let rho0 = gen_positive_control(solver.grid(), 1.5).unwrap();
    let run = run_with_diagnostics(&solver, &rho0, &mut []).unwrap();
    let names: Vec<&str> = check_invariants(&run, &Tolerances::default()).iter().map(|c| c.name).collect();
    assert_eq!(names, INVARIANT_NAMES);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_fracpm");
    let status = std::process::Command::new(bin).arg("--help").output().unwrap().status;
    assert_eq!(status.code(), Some(0));
    let out = std::process::Command::new(bin).args(["constants", "--m", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(doc.is_object());
    let status = std::process::Command::new(bin).arg("--wat").output().unwrap().status;
    assert_eq!(status.code(), Some(1));
}
