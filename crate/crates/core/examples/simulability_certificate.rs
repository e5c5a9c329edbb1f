//! Empirical deficiency gap between held-out frequency tables over all deterministic
//! 0-1 rules, before and after perturbing the target counts.

use lecam::experiment::Labels;
use lecam::fixtures;
use lecam::risk::{empirical_deficiency_gap, exhaustive_class, DecisionProblem, FrequencyTable};

fn main() -> lecam::Result<()> {
    let source = FrequencyTable {
        parameters: Labels::new(["0", "1"])?,
        outcomes: Labels::new(["a", "b", "c"])?,
        counts: vec![vec![500.0, 400.0, 100.0], vec![100.0, 400.0, 500.0]],
    };
    let exact_target = FrequencyTable::from_experiment(&fixtures::ce2_target());
    let noisy_target = FrequencyTable {
        counts: vec![vec![880.0, 120.0], vec![520.0, 480.0]],
        ..exact_target.clone()
    };
    let dp = DecisionProblem::zero_one(&source.parameters);
    let class = exhaustive_class(&source.outcomes, &exact_target.outcomes, &[dp])?;
    for (name, target) in [("exact", &exact_target), ("noisy", &noisy_target)] {
        let r = empirical_deficiency_gap(&source, target, &class, Some(0.05))?;
        println!(
            "{name}: δ̂ = {:.4} over {} rules, 0.05-simulable: {:?}",
            r.delta_hat, r.decision_class_size, r.epsilon_simulable
        );
    }
    Ok(())
}
