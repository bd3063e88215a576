//! Constants of the velocity estimates for a few orders.

use fracpm::diagnostics::TheoremConstants;
use fracpm::nonlocal::{c_alpha_closed_form, compute_c, OperatorParams};

fn main() -> fracpm::Result<()> {
    println!("{:>5} {:>14} {:>14} {:>10} {:>12} {:>10}", "alpha", "c_alpha", "closed form", "C", "delta", "A");
    for alpha in [0.3, 0.5, 1.0, 1.5, 1.9] {
        let params = OperatorParams::new(alpha)?;
        // CCCF data: m = 1, max = 2
        let k = TheoremConstants::new(alpha, 1.0, 2.0)?;
        println!(
            "{alpha:>5} {:>14.10} {:>14.10} {:>10.4} {:>12.8} {:>10.5}",
            params.c_alpha,
            c_alpha_closed_form(alpha),
            compute_c(alpha),
            k.delta,
            k.a
        );
    }
    Ok(())
}
