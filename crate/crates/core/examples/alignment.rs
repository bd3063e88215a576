//! Euler-Alignment run started from the induced velocity, compared with the
//! density solver.

use fracpm::extensions::run_alignment;
use fracpm::initial::gen_cccf;
use fracpm::nonlocal::velocity_spectral;
use fracpm::solver::{SnapshotRecorder, Solver, SolverConfig};

fn main() -> fracpm::Result<()> {
    let alpha = 1.0;
    let mut cfg = SolverConfig::new(alpha, 1024, 0.1);
    cfg.snapshot_interval = 0.01;
    let solver = Solver::new(cfg.clone())?;
    let rho0 = gen_cccf(solver.grid());
    let u0 = velocity_spectral(&rho0, alpha)?;
    let align = run_alignment(&rho0, &u0, &cfg)?;
    let mut rec = SnapshotRecorder::default();
    solver.run(&rho0, &mut [&mut rec])?;

    for (a, (s, r)) in align.records.iter().zip(align.states.iter().zip(&rec.states)) {
        let diff = s.rho.values().iter().zip(r.rho.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        println!("t = {:.3}  |G|/|u_x| = {:.2e}  |rho_align - rho| = {:.2e}", a.t, a.g_max / a.dxu_max, diff);
    }
    Ok(())
}
