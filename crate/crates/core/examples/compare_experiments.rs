//! Deficiency in both directions between a noiseless and a noisy binary experiment,
//! with the LP witness and a grid-search cross-check.

use lecam::deficiency::{deficiency_bruteforce, lecam_distance};
use lecam::fixtures;

fn main() -> lecam::Result<()> {
    let sharp = fixtures::sharp();
    let noisy = fixtures::garbled();
    let d = lecam_distance(&sharp, &noisy)?;
    println!("δ(sharp, garbled) = {:.6}", d.forward.value);
    println!("δ(garbled, sharp) = {:.6}", d.backward.value);
    println!("Δ = {:.6}", d.distance);
    println!("witness for the hard direction:");
    for (x, row) in d.backward.witness.matrix().iter().enumerate() {
        println!("  {x} -> {row:?}");
    }
    let grid = deficiency_bruteforce(&noisy, &sharp, 0.01)?;
    println!("grid search at 0.01: {grid:.6}");
    Ok(())
}
