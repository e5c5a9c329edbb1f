//! Scaling representations x -> c x between N(θ, 1) and N(θ, 4): invariance only
//! arrives together with lost fidelity.

use lecam::gaussian::{default_collapse_grid, invariance_collapse_sweep};

fn main() -> lecam::Result<()> {
    let (grid, thetas) = default_collapse_grid();
    let cs: Vec<f64> = (-4..=4).map(|k| k as f64 * 0.25).collect();
    println!("{:>6} {:>10} {:>10} {:>10}", "c", "invariance", "source", "target");
    for r in invariance_collapse_sweep(2.0, &cs, grid, &thetas)? {
        println!(
            "{:>6.2} {:>10.4} {:>10.4} {:>10.4}",
            r.c, r.invariance_error, r.source_fidelity, r.target_fidelity
        );
    }
    Ok(())
}
