//! Density bounded away from vacuum: the gradient stays bounded.
//!
//!     cargo run --release --example positive_control -- 1.5 1.0

use fracpm::diagnostics::{classify_run, run_with_diagnostics};
use fracpm::initial::gen_positive_control;
use fracpm::solver::{Solver, SolverConfig};

fn main() -> fracpm::Result<()> {
    let mut args = std::env::args().skip(1);
    let offset: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1.5);
    let alpha: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let cfg = SolverConfig::new(alpha, 256, 2.0);
    let solver = Solver::new(cfg)?;
    let rho0 = gen_positive_control(solver.grid(), offset)?;
    let run = run_with_diagnostics(&solver, &rho0, &mut [])?;
    let c0 = run.records[0].c1_norm;
    for r in run.records.iter().step_by(10) {
        println!("t = {:.2}  c1/c1(0) = {:.4}  range [{:.4}, {:.4}]", r.t, r.c1_norm / c0, r.rho_min, r.rho_max);
    }
    let class = classify_run(&run.records, run.output.stop_reason)?;
    println!("{} after t = {}", class.verdict.as_str(), run.output.final_state.t);
    Ok(())
}
