//! The fidelity/invariance transfer inequality on one hand-made pair and on 500 random
//! triples.

use lecam::composition::{nft_terms, nft_trials, Representation};
use lecam::experiment::Experiment;
use lecam::fixtures;

fn main() -> lecam::Result<()> {
    let source = fixtures::ce2_source();
    let target = Experiment::from_rows(
        "shifted",
        &["0", "1"],
        &["a", "b", "c"],
        vec![vec![0.3, 0.6, 0.1], vec![0.1, 0.2, 0.7]],
    )?;
    let r = nft_terms(&source, &target, &Representation::Map(fixtures::ce2_map()))?;
    println!(
        "source {:.4} + target {:.4} + invariance {:.4} >= gap {:.4}: {}",
        r.source_fidelity, r.target_fidelity, r.invariance_error, r.task_gap, r.holds
    );
    let s = nft_trials(42, 500)?;
    println!("{} random triples, {} violations", s.trials, s.violations);
    Ok(())
}
