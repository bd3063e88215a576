//! Particle paths from a vacuum-plateau run: decay inside the vacuum and
//! conserved mass between paths.
//!
//!     cargo run --release --example characteristics

use fracpm::characteristics::{advect_paths, check_decay_bound, check_local_mass_bound, check_mass_transport};
use fracpm::diagnostics::TheoremConstants;
use fracpm::initial::gen_vacuum_plateau;
use fracpm::solver::{SnapshotRecorder, Solver, SolverConfig};

fn main() -> fracpm::Result<()> {
    let alpha = 1.0;
    let mut cfg = SolverConfig::new(alpha, 1024, 0.2);
    cfg.snapshot_interval = 2.5e-4;
    let solver = Solver::new(cfg)?;
    let rho0 = gen_vacuum_plateau(solver.grid(), 0.15, 0.1, 2.0)?;
    let k = TheoremConstants::for_density(alpha, &rho0)?;
    let mut rec = SnapshotRecorder::default();
    let out = solver.run(&rho0, &mut [&mut rec])?;
    let states = &rec.states;
    println!("run stopped ({}) at t = {:.4}, {} snapshots", out.stop_reason.as_str(), out.final_state.t, states.len());

    let paths = advect_paths(states, &[0.0, 0.05, 0.15, 0.25])?;
    for p in &paths {
        println!(
            "x = {:.2}: X(end) = {:.6}, mass0 = {:.6}, path error {:.1e}{}",
            p.x_start,
            p.positions.last().unwrap(),
            p.mass0,
            p.path_error,
            if p.starved { " (starved)" } else { "" }
        );
    }
    let decay = check_decay_bound(&paths[2], k.a, states)?;
    println!("decay from x0 = 0.15 with A = {}: holds = {}, margin = {:.3e}", k.a, decay.holds, decay.margin);
    println!("mass drift between 0.05 and 0.25: {:.3e}", check_mass_transport(&paths[1], &paths[3], states)?);
    println!("max of m(X) - X rho(X) along 0.15: {:.3e}", check_local_mass_bound(&paths[2], states)?);
    Ok(())
}
