//! Exact bathtub minimum against a cell-wise greedy fill.

use fracpm::diagnostics::{aligned_weight, bathtub_brute, bathtub_min};

fn main() -> fracpm::Result<()> {
    let (a, b) = (0.1, 0.5);
    let samples: Vec<f64> = (0..=2000).map(|i| aligned_weight(0.8, 0.05, a + (b - a) * i as f64 / 2000.0)).collect();
    let (m, lambda) = (2.0, 0.3);
    let exact = bathtub_min(&samples, a, b, m, lambda)?;
    println!("plateau value: {exact:.12}");
    for cells in [100, 1_000, 10_000, 100_000] {
        let brute = bathtub_brute(&samples, a, b, m, lambda, cells)?;
        println!("{cells:>7} cells: {brute:.12}  (diff {:.2e})", (brute - exact).abs());
    }
    Ok(())
}
