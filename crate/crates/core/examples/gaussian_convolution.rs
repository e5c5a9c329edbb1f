//! Adding N(0, 0.99) noise turns N(θ, 0.01) into N(θ, 1): the binned convolution kernel
//! nearly achieves it, while the reverse direction stays costly.

use lecam::gaussian::{counterexample3_simulation, default_deficiency_grids, wide_to_tight_deficiency, Grid};

fn main() -> lecam::Result<()> {
    for step in [0.04, 0.02, 0.01] {
        let r = counterexample3_simulation(Grid::new(-6.0, 6.12, step)?, &[0.0, 0.1])?;
        println!(
            "step {step}: simulation error {:.2e}, TV tight {:.4}, wide {:.4}",
            r.simulation_error, r.tight_tvs[0].tv, r.wide_tvs[0].tv
        );
    }
    let (tight, wide) = default_deficiency_grids();
    let d = wide_to_tight_deficiency(0.0, 0.1, tight, wide)?;
    println!(
        "δ(wide, tight) = {:.4}, contraction bound {:.4}",
        d.value, d.contraction_lower_bound
    );
    Ok(())
}
