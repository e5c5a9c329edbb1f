//! A reduction between two point-mass experiments: instances of A are mapped to
//! instances of B and B's answers are translated back, so B simulates A exactly.

use lecam::deficiency::{deficiency, kernel_simulation_error};
use lecam::experiment::{point_mass_experiment, DeterministicMap};

fn main() -> lecam::Result<()> {
    // A: is the number even? B: the number mod 4, which determines parity.
    let numbers = ["3", "6", "8", "13", "14"];
    let parity: Vec<&str> = ["odd", "even", "even", "odd", "even"].to_vec();
    let mod4: Vec<&str> = ["3", "2", "0", "1", "2"].to_vec();
    let a = point_mass_experiment("parity", &numbers, &parity)?;
    let b = point_mass_experiment("mod 4", &numbers, &mod4)?;
    let back = DeterministicMap::from_pairs(
        b.outcomes().clone(),
        a.outcomes().clone(),
        &[("3", "odd"), ("2", "even"), ("0", "even"), ("1", "odd")],
    )?;
    println!("δ(mod 4, parity) = {:.2e}", deficiency(&b, &a)?.value);
    println!("answer translation error = {:.2e}", kernel_simulation_error(&b, &a, &back.to_kernel())?);
    println!("δ(parity, mod 4) = {:.4}", deficiency(&a, &b)?.value);
    Ok(())
}
