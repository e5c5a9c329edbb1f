//! Seeded generators for random finite instances.
//!
//! All randomized suites draw from [`rng`] so a seed fully determines the instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::experiment::{Experiment, Kernel, Labels};

pub type SuiteRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SuiteRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A uniform draw from the probability simplex, with occasional exact zeros.
pub fn distribution<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let mut w: Vec<f64> = (0..n)
            .map(|_| {
                if n > 1 && rng.random_bool(0.1) {
                    0.0
                } else {
                    -(1.0 - rng.random::<f64>()).ln()
                }
            })
            .collect();
        let s: f64 = w.iter().sum();
        if s > 0.0 {
            w.iter_mut().for_each(|v| *v /= s);
            return w;
        }
    }
}

pub fn experiment<R: Rng>(
    rng: &mut R,
    name: &str,
    parameters: &Labels,
    outcomes: &Labels,
) -> Experiment {
    let rows = (0..parameters.len())
        .map(|_| distribution(rng, outcomes.len()))
        .collect();
    Experiment::new(name, parameters.clone(), outcomes.clone(), rows).expect("random experiment")
}

pub fn kernel<R: Rng>(rng: &mut R, from: &Labels, to: &Labels) -> Kernel {
    let matrix = (0..from.len()).map(|_| distribution(rng, to.len())).collect();
    Kernel::new(from.clone(), to.clone(), matrix).expect("random kernel")
}

/// Outcome count drawn uniformly from `lo..=hi`.
pub fn size<R: Rng>(rng: &mut R, lo: usize, hi: usize) -> usize {
    rng.random_range(lo..=hi)
}

/// Two experiments on a shared two-point parameter set, each over two or three outcomes.
pub fn binary_pair<R: Rng>(rng: &mut R) -> (Experiment, Experiment) {
    let params = Labels::numbered("t", 2);
    let n = size(rng, 2, 3);
    let m = size(rng, 2, 3);
    let e = experiment(rng, "E", &params, &Labels::numbered("x", n));
    let f = experiment(rng, "F", &params, &Labels::numbered("y", m));
    (e, f)
}

/// The seeded pairs used by the oracle and hinge suites.
pub fn binary_pairs(seed: u64, count: usize) -> Vec<(Experiment, Experiment)> {
    let mut rng = rng(seed);
    (0..count).map(|_| binary_pair(&mut rng)).collect()
}
