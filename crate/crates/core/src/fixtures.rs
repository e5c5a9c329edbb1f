//! Small embedded instances used by the regression suite, the examples and the tests.

use crate::experiment::{apply_kernel, DeterministicMap, Experiment, Labels};

/// Three-outcome experiment whose two rows share a common middle mass.
pub fn ce2_source() -> Experiment {
    Experiment::from_rows(
        "P",
        &["0", "1"],
        &["a", "b", "c"],
        vec![vec![0.5, 0.4, 0.1], vec![0.1, 0.4, 0.5]],
    )
    .expect("fixture")
}

/// Merges `a` and `b` into `0`, sends `c` to `1`.
pub fn ce2_map() -> DeterministicMap {
    DeterministicMap::from_pairs(
        Labels::new(["a", "b", "c"]).expect("labels"),
        Labels::new(["0", "1"]).expect("labels"),
        &[("a", "0"), ("b", "0"), ("c", "1")],
    )
    .expect("fixture")
}

/// Pushforward of [`ce2_source`] through [`ce2_map`]: rows (0.9, 0.1) and (0.5, 0.5).
pub fn ce2_target() -> Experiment {
    apply_kernel(&ce2_source(), &ce2_map().to_kernel())
        .expect("fixture")
        .with_name("Q")
}

/// Noiseless binary experiment.
pub fn sharp() -> Experiment {
    Experiment::from_rows(
        "sharp",
        &["0", "1"],
        &["0", "1"],
        vec![vec![1.0, 0.0], vec![0.0, 1.0]],
    )
    .expect("fixture")
}

/// [`sharp`] observed through a 10% bit flip.
pub fn garbled() -> Experiment {
    Experiment::from_rows(
        "garbled",
        &["0", "1"],
        &["0", "1"],
        vec![vec![0.9, 0.1], vec![0.1, 0.9]],
    )
    .expect("fixture")
}

/// Two independent coin flips, heads probability 0.3 or 0.7.
pub fn two_coins() -> Experiment {
    let rows = [0.3f64, 0.7]
        .iter()
        .map(|&p| {
            let q = 1.0 - p;
            vec![q * q, q * p, p * q, p * p]
        })
        .collect();
    Experiment::from_rows("coins", &["0.3", "0.7"], &["00", "01", "10", "11"], rows)
        .expect("fixture")
}

/// Number of heads in [`two_coins`].
pub fn bit_sum() -> DeterministicMap {
    DeterministicMap::from_pairs(
        Labels::new(["00", "01", "10", "11"]).expect("labels"),
        Labels::new(["0", "1", "2"]).expect("labels"),
        &[("00", "0"), ("01", "1"), ("10", "1"), ("11", "2")],
    )
    .expect("fixture")
}
