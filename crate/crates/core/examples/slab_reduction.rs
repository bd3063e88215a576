//! Slab data on the 2D torus and the transverse constant `c'`.

use fracpm::extensions::{c_prime, slab_check_2d};
use fracpm::initial::gen_cccf;
use fracpm::PeriodicGrid;

fn main() -> fracpm::Result<()> {
    let grid = PeriodicGrid::new(128)?;
    let rho = gen_cccf(&grid);
    for alpha in [0.5, 1.0, 1.5] {
        let r = slab_check_2d(&rho, alpha)?;
        println!(
            "alpha {alpha}: c' = {:.10}  |u2| = {:.1e}  u1 mismatch = {:.1e}  gap = {:.1e}  real-space c' error = {:.1e}",
            r.c_prime, r.u2_max, r.u1_mismatch, r.spectral_gap, r.c_prime_rel_error
        );
    }
    println!("c'(3, 1) = {:.10}", c_prime(3, 1.0)?);
    Ok(())
}
