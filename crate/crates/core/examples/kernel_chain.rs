//! Error accumulation along a random chain of approximate kernels, plus a seeded run of
//! the same check over many chains.

use lecam::composition::{composition_trials, random_chain, verify_composition_bound};
use lecam::random;

fn main() -> lecam::Result<()> {
    let mut rng = random::rng(3);
    let chain = loop {
        let c = random_chain(&mut rng);
        if c.len() == 3 {
            break c;
        }
    };
    let r = verify_composition_bound(&chain)?;
    for (i, s) in r.steps.iter().enumerate() {
        println!("step {i}: ε = {:.4} (prefix-only {:.4})", s.hybrid_deficiency, s.prefix_deficiency);
    }
    println!("δ_total = {:.4} ≤ Σε = {:.4}: {}", r.delta_total, r.eps_sum, r.holds);

    let s = composition_trials(42, 200)?;
    println!("{} chains, {} violations, mean tightness {:?}", s.trials, s.violations, s.mean_tightness);
    Ok(())
}
