//! Spectral and real-space evaluations of `Λ^α ρ` and `u = HΛ^{α-1}ρ` for
//! `ρ = 1 - cos(2πx)`.
//!
//!     cargo run --example operators -- 0.7

use fracpm::initial::gen_cccf;
use fracpm::nonlocal::{fractional_laplacian_spectral, velocity_spectral, KernelEvaluator};
use fracpm::{OperatorParams, PeriodicGrid};

fn main() -> fracpm::Result<()> {
    let alpha: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.5);
    let grid = PeriodicGrid::new(256)?;
    let rho = gen_cccf(&grid);
    let params = OperatorParams::new(alpha)?;
    let lap = fractional_laplacian_spectral(&rho, alpha)?;
    let u = velocity_spectral(&rho, alpha)?;
    let kernel = KernelEvaluator::new(&rho, &params);

    println!("alpha = {alpha}, c_alpha = {:.12}, c_velocity = {:.12}", params.c_alpha, params.c_velocity);
    println!("{:>8} {:>16} {:>16} {:>16} {:>16}", "x", "lap spectral", "lap kernel", "u spectral", "u kernel");
    let mut worst = 0.0f64;
    for j in (0..grid.n_points()).step_by(16) {
        let x = grid.node(j);
        let l = kernel.fractional_laplacian(x);
        let v = kernel.velocity(x);
        worst = worst.max((l.value - lap.values()[j]).abs()).max((v.value - u.values()[j]).abs());
        println!("{x:>8.4} {:>16.10} {:>16.10} {:>16.10} {:>16.10}", lap.values()[j], l.value, u.values()[j], v.value);
    }
    println!("largest difference on the printed nodes: {worst:.3e}");
    Ok(())
}
