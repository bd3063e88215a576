//! Evolves `1 - cos(2πx)` until the spectrum is no longer resolved, printing
//! the steepening gradient at the vacuum and the invariant checks.
//!
//!     cargo run --release --example blowup_cccf -- 1.0 1024

use fracpm::diagnostics::{check_invariants, classify_run, run_with_diagnostics, Tolerances};
use fracpm::initial::gen_cccf;
use fracpm::solver::{Solver, SolverConfig};

fn main() -> fracpm::Result<()> {
    let mut args = std::env::args().skip(1);
    let alpha: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(1024);
    let mut cfg = SolverConfig::new(alpha, n, 2.0);
    cfg.snapshot_interval = 0.005;
    let solver = Solver::new(cfg)?;
    let rho0 = gen_cccf(solver.grid());
    let run = run_with_diagnostics(&solver, &rho0, &mut [])?;

    for r in run.records.iter().step_by(4) {
        println!("t = {:.4}  c1 = {:>10.4}  min rho = {:+.2e}  tail = {:.1e}", r.t, r.c1_norm, r.rho_min, r.tail_fraction);
    }
    println!("stopped: {} at t = {:.5}", run.output.stop_reason.as_str(), run.output.final_state.t);
    let class = classify_run(&run.records, run.output.stop_reason)?;
    println!("verdict: {} (growth x{:.2})", class.verdict.as_str(), class.growth_factor);
    for c in check_invariants(&run, &Tolerances::default()) {
        println!("{:<16} worst {:+.3e}  limit {:.0e}  {}", c.name, c.worst, c.limit, if c.passed { "ok" } else { "FAIL" });
    }
    Ok(())
}
