//! Classifies two maps: the number of heads (sufficient for coin tosses) and a lossy
//! merge that keeps pairwise testing power but distorts likelihood ratios.

use lecam::fixtures;
use lecam::hierarchy::classify_hierarchy;

fn main() -> lecam::Result<()> {
    for (name, e, t) in [
        ("heads count", fixtures::two_coins(), fixtures::bit_sum()),
        ("merge a,b", fixtures::ce2_source(), fixtures::ce2_map()),
    ] {
        let r = classify_hierarchy(&e, &t, 0.01)?;
        println!("{name}:");
        println!("  sufficient            {}", r.levels.sufficiency);
        println!("  distortion {:>8.4}   {}", r.likelihood_distortion, r.levels.likelihood_distortion);
        println!(
            "  pairwise δ {:>8.4}   {}",
            r.testing_equivalence.max_pairwise_deficiency, r.levels.testing_equivalence
        );
        println!("  Δ          {:>8.4}   {}", r.lecam_equivalence.delta, r.levels.lecam_equivalence);
    }
    Ok(())
}
