//! Transfers every 0-1 decision rule from a sharp experiment to a garbled one through
//! the deficiency witness and checks the risk gap against δ.

use lecam::fixtures;
use lecam::risk::{enumerate_deterministic_rules, risk, transfer_rule, verify_hinge, DecisionProblem, DecisionRule};

fn main() -> lecam::Result<()> {
    let sharp = fixtures::sharp();
    let garbled = fixtures::garbled();
    let dp = DecisionProblem::zero_one(sharp.parameters());
    let rules: Vec<DecisionRule> = enumerate_deterministic_rules(sharp.outcomes(), dp.actions())?
        .map(DecisionRule::Deterministic)
        .collect();

    let report = verify_hinge(&garbled, &sharp, std::slice::from_ref(&dp), &rules)?;
    println!("δ = {:.4}, worst gap = {:.4}, bound = {:.4}", report.deficiency, report.max_gap, report.bound);

    let witness = lecam::deficiency::deficiency(&garbled, &sharp)?.witness;
    for rule in &rules {
        let moved = transfer_rule(rule, &witness)?;
        println!(
            "risk on sharp {:?} -> on garbled {:?}",
            risk(&sharp, rule, &dp)?,
            risk(&garbled, &moved, &dp)?
        );
    }
    Ok(())
}
