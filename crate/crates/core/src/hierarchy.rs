//! The four representation-equivalence checks and the consistency of their nesting.

use rayon::prelude::*;
use serde::Serialize;

use crate::deficiency::{deficiency, lecam_distance, WITNESS_TOL};
use crate::error::{Error, Result};
use crate::experiment::{apply_kernel, ensure_same_parameters, DeterministicMap, Experiment};

/// Deviation below which conditionals count as parameter-free.
pub const SUFFICIENCY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct Sufficiency {
    pub holds: bool,
    pub max_conditional_deviation: f64,
    /// Images with zero mass under some, but not all, parameters. Their conditionals are
    /// compared only among the parameters that reach them.
    pub partially_supported: Vec<String>,
}

fn aligned(e: &Experiment, t: &DeterministicMap) -> Result<DeterministicMap> {
    t.reindexed_from(e.outcomes()).map_err(|err| match err {
        Error::UnknownLabel(l) | Error::PartialMap(l) => Error::PartialMap(l),
        Error::Dimension(_) => Error::PartialMap(format!(
            "map covers {} outcomes, experiment `{}` has {}",
            t.from_outcomes().len(),
            e.name(),
            e.num_outcomes()
        )),
        other => other,
    })
}

/// Whether `P_θ(x | T(x) = z)` is the same for every parameter reaching `z`.
pub fn check_sufficiency(e: &Experiment, t: &DeterministicMap) -> Result<Sufficiency> {
    let t = aligned(e, t)?;
    let nz = t.to_outcomes().len();
    let mut mass = vec![vec![0.0; nz]; e.num_parameters()];
    for (th, row) in e.rows().iter().enumerate() {
        for (x, p) in row.iter().enumerate() {
            mass[th][t.apply(x)] += p;
        }
    }
    let mut deviation = 0.0f64;
    let mut partial = Vec::new();
    for z in 0..nz {
        let supported: Vec<usize> = (0..e.num_parameters()).filter(|&th| mass[th][z] > 0.0).collect();
        if supported.is_empty() {
            continue;
        }
        if supported.len() < e.num_parameters() {
            partial.push(t.to_outcomes().get(z).to_string());
        }
        for x in (0..e.num_outcomes()).filter(|&x| t.apply(x) == z) {
            let cond: Vec<f64> = supported.iter().map(|&th| e.row(th)[x] / mass[th][z]).collect();
            let lo = cond.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = cond.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            deviation = deviation.max(hi - lo);
        }
    }
    Ok(Sufficiency {
        holds: deviation <= SUFFICIENCY_TOL,
        max_conditional_deviation: deviation,
        partially_supported: partial,
    })
}

/// One outcome's log-likelihood-ratio discrepancy for a parameter pair.
#[derive(Clone, Debug, Serialize)]
pub struct DistortionTerm {
    pub theta0: String,
    pub theta1: String,
    pub outcome: String,
    #[serde(serialize_with = "crate::json::extended_real")]
    pub value: f64,
}

/// Every pointwise term `|log(Q_θ(Tx)/Q_θ′(Tx)) − log(P_θ(x)/P_θ′(x))|`, parameters in
/// increasing index order.
///
/// Outcomes where both `P_θ(x)` and `P_θ′(x)` vanish are skipped. When exactly one
/// vanishes the term is zero if the images show the same zero pattern and `+∞` otherwise.
pub fn distortion_terms(e: &Experiment, t: &DeterministicMap) -> Result<Vec<DistortionTerm>> {
    let t = aligned(e, t)?;
    let f = apply_kernel(e, &t.to_kernel())?;
    let mut out = Vec::new();
    for a in 0..e.num_parameters() {
        for b in a + 1..e.num_parameters() {
            for x in 0..e.num_outcomes() {
                let (p0, p1) = (e.row(a)[x], e.row(b)[x]);
                if p0 == 0.0 && p1 == 0.0 {
                    continue;
                }
                let z = t.apply(x);
                let (q0, q1) = (f.row(a)[z], f.row(b)[z]);
                let value = if p0 > 0.0 && p1 > 0.0 {
                    ((q0 / q1).ln() - (p0 / p1).ln()).abs()
                } else if (q0 == 0.0) == (p0 == 0.0) && (q1 == 0.0) == (p1 == 0.0) {
                    0.0
                } else {
                    f64::INFINITY
                };
                out.push(DistortionTerm {
                    theta0: e.parameters().get(a).to_string(),
                    theta1: e.parameters().get(b).to_string(),
                    outcome: e.outcomes().get(x).to_string(),
                    value,
                });
            }
        }
    }
    Ok(out)
}

/// Supremum of [`distortion_terms`]; zero when there are none.
pub fn likelihood_distortion(e: &Experiment, t: &DeterministicMap) -> Result<f64> {
    Ok(distortion_terms(e, t)?
        .iter()
        .map(|d| d.value)
        .fold(0.0, f64::max))
}

#[derive(Clone, Debug, Serialize)]
pub struct TestingEquivalence {
    pub max_pairwise_deficiency: f64,
    pub argmax_pair: (String, String),
}

/// Largest two-parameter deficiency `δ(e|{θ,θ′}, f|{θ,θ′})` over unordered pairs.
pub fn testing_equivalence(e: &Experiment, f: &Experiment) -> Result<TestingEquivalence> {
    ensure_same_parameters(e, f)?;
    let n = e.num_parameters();
    if n < 2 {
        return Err(Error::Invalid("testing equivalence needs at least two parameters".into()));
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let values = pairs
        .par_iter()
        .map(|&(a, b)| Ok(deficiency(&e.restrict(&[a, b])?, &f.restrict(&[a, b])?)?.value))
        .collect::<Result<Vec<f64>>>()?;
    let (best, value) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let (a, b) = pairs[best];
    Ok(TestingEquivalence {
        max_pairwise_deficiency: value,
        argmax_pair: (
            e.parameters().get(a).to_string(),
            e.parameters().get(b).to_string(),
        ),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LeCamEquivalence {
    pub delta_forward: f64,
    pub delta_backward: f64,
    #[serde(rename = "Delta")]
    pub delta: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelFlags {
    pub sufficiency: bool,
    pub likelihood_distortion: bool,
    pub testing_equivalence: bool,
    pub lecam_equivalence: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct HierarchyReport {
    pub eps: f64,
    pub sufficiency: Sufficiency,
    #[serde(serialize_with = "crate::json::extended_real")]
    pub likelihood_distortion: f64,
    /// Term attaining the distortion supremum, if any term exists.
    pub distortion_witness: Option<DistortionTerm>,
    pub testing_equivalence: TestingEquivalence,
    pub lecam_equivalence: LeCamEquivalence,
    pub levels: LevelFlags,
}

/// Runs every check on `e` against `f = e∘t` and verifies that the levels nest.
///
/// Checked implications, each with its own tolerance:
/// sufficiency ⟹ distortion ≤ 1e-9 and Δ ≤ 1e-7, and
/// distortion ≤ eps ⟹ pairwise deficiency ≤ e^eps − 1 + 1e-7.
/// A broken implication is an [`Error::NestingViolation`].
pub fn classify_hierarchy(e: &Experiment, t: &DeterministicMap, eps: f64) -> Result<HierarchyReport> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::Invalid(format!("eps {eps} must be finite and non-negative")));
    }
    if e.num_parameters() < 2 {
        return Err(Error::Invalid("hierarchy checks need at least two parameters".into()));
    }
    let suff = check_sufficiency(e, t)?;
    let terms = distortion_terms(e, t)?;
    let witness = terms
        .iter()
        .fold(None::<&DistortionTerm>, |best, d| match best {
            Some(b) if b.value >= d.value => Some(b),
            _ => Some(d),
        })
        .cloned();
    let distortion = witness.as_ref().map_or(0.0, |d| d.value);
    let f = apply_kernel(e, &aligned(e, t)?.to_kernel())?;
    let testing = testing_equivalence(e, &f)?;
    let lc = lecam_distance(e, &f)?;

    if suff.holds && distortion > SUFFICIENCY_TOL {
        return Err(Error::NestingViolation(format!(
            "sufficient map with likelihood distortion {distortion}"
        )));
    }
    if suff.holds && lc.distance > WITNESS_TOL {
        return Err(Error::NestingViolation(format!(
            "sufficient map with Le Cam distance {}",
            lc.distance
        )));
    }
    if distortion <= eps && testing.max_pairwise_deficiency > eps.exp_m1() + WITNESS_TOL {
        return Err(Error::NestingViolation(format!(
            "distortion {distortion} ≤ {eps} but pairwise deficiency {}",
            testing.max_pairwise_deficiency
        )));
    }
    Ok(HierarchyReport {
        eps,
        levels: LevelFlags {
            sufficiency: suff.max_conditional_deviation <= eps.max(SUFFICIENCY_TOL),
            likelihood_distortion: distortion <= eps,
            testing_equivalence: testing.max_pairwise_deficiency <= eps,
            lecam_equivalence: lc.distance <= eps,
        },
        sufficiency: suff,
        likelihood_distortion: distortion,
        distortion_witness: witness,
        testing_equivalence: testing,
        lecam_equivalence: LeCamEquivalence {
            delta_forward: lc.forward.value,
            delta_backward: lc.backward.value,
            delta: lc.distance,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::Labels;
    use crate::fixtures;

    fn relabel(e: &Experiment) -> DeterministicMap {
        let to = Labels::new(e.outcomes().iter().map(|o| format!("{o}'"))).unwrap();
        DeterministicMap::new(e.outcomes().clone(), to, (0..e.num_outcomes()).collect()).unwrap()
    }

    #[test]
    fn sufficiency_examples() {
        let p = fixtures::ce2_source();
        let s = check_sufficiency(&p, &relabel(&p)).unwrap();
        assert!(s.holds && s.max_conditional_deviation == 0.0);

        let coins = fixtures::two_coins();
        let s = check_sufficiency(&coins, &fixtures::bit_sum()).unwrap();
        assert!(s.holds && s.max_conditional_deviation <= 1e-12, "{s:?}");

        let s = check_sufficiency(&p, &fixtures::ce2_map()).unwrap();
        assert!(!s.holds);
        assert!((s.max_conditional_deviation - (5.0 / 9.0 - 0.2)).abs() < 1e-12);
    }

    #[test]
    fn partial_maps_are_rejected() {
        let p = fixtures::ce2_source();
        let short = DeterministicMap::from_pairs(
            Labels::new(["a", "b"]).unwrap(),
            Labels::new(["0"]).unwrap(),
            &[("a", "0"), ("b", "0")],
        )
        .unwrap();
        assert!(matches!(check_sufficiency(&p, &short), Err(Error::PartialMap(_))));
    }

    #[test]
    fn distortion_examples() {
        let p = fixtures::ce2_source();
        assert_eq!(likelihood_distortion(&p, &relabel(&p)).unwrap(), 0.0);
        assert!(likelihood_distortion(&fixtures::two_coins(), &fixtures::bit_sum()).unwrap() < 1e-12);
        let terms = distortion_terms(&p, &fixtures::ce2_map()).unwrap();
        let at = |o: &str| terms.iter().find(|d| d.outcome == o).unwrap().value;
        assert!((at("a") - (5.0f64.ln() - 1.8f64.ln())).abs() < 1e-12);
        assert!((at("a") - 1.0217).abs() < 1e-4);
        assert!((at("b") - 1.8f64.ln()).abs() < 1e-12);
        assert!(likelihood_distortion(&p, &fixtures::ce2_map()).unwrap() >= 1.0);
    }

    #[test]
    fn one_sided_zeros() {
        let e = Experiment::from_rows(
            "z",
            &["0", "1"],
            &["x", "y", "w"],
            vec![vec![0.0, 0.5, 0.5], vec![0.5, 0.5, 0.0]],
        )
        .unwrap();
        assert_eq!(likelihood_distortion(&e, &relabel(&e)).unwrap(), 0.0);
        let merge = DeterministicMap::from_pairs(
            e.outcomes().clone(),
            Labels::new(["u", "v"]).unwrap(),
            &[("x", "u"), ("y", "u"), ("w", "v")],
        )
        .unwrap();
        assert_eq!(likelihood_distortion(&e, &merge).unwrap(), f64::INFINITY);
    }

    #[test]
    fn testing_examples() {
        let p = fixtures::ce2_source();
        assert!(testing_equivalence(&p, &p).unwrap().max_pairwise_deficiency < 1e-9);
        let t = testing_equivalence(&p, &fixtures::ce2_target()).unwrap();
        assert!(t.max_pairwise_deficiency < 1e-9);
        assert_eq!(t.argmax_pair, ("0".to_string(), "1".to_string()));
        assert!(testing_equivalence(&p.restrict(&[0]).unwrap(), &p.restrict(&[0]).unwrap()).is_err());
    }

    #[test]
    fn classification_examples() {
        let p = fixtures::ce2_source();
        let r = classify_hierarchy(&p, &relabel(&p), 1e-9).unwrap();
        assert!(r.levels.sufficiency && r.levels.likelihood_distortion);
        assert!(r.levels.testing_equivalence && r.levels.lecam_equivalence);

        let r = classify_hierarchy(&p, &fixtures::ce2_map(), 0.01).unwrap();
        assert!(r.levels.testing_equivalence);
        assert!(!r.levels.likelihood_distortion && !r.levels.sufficiency);
        assert!(r.likelihood_distortion >= 1.0);
        assert_eq!(r.distortion_witness.as_ref().unwrap().outcome, "a");

        let r = classify_hierarchy(&fixtures::two_coins(), &fixtures::bit_sum(), 1e-6).unwrap();
        assert!(r.levels.sufficiency && r.levels.likelihood_distortion);
        assert!(r.levels.testing_equivalence && r.levels.lecam_equivalence);
    }

    #[test]
    fn restriction_never_increases_deficiency() {
        let mut rng = crate::random::rng(3);
        let params = Labels::numbered("t", 4);
        for _ in 0..30 {
            let e = crate::random::experiment(&mut rng, "e", &params, &Labels::numbered("x", 3));
            let f = crate::random::experiment(&mut rng, "f", &params, &Labels::numbered("y", 3));
            let full = deficiency(&e, &f).unwrap().value;
            let subsets: [&[usize]; 3] = [&[0, 1], &[1, 3], &[0, 2, 3]];
            for subset in subsets {
                let part = deficiency(&e.restrict(subset).unwrap(), &f.restrict(subset).unwrap())
                    .unwrap()
                    .value;
                assert!(part <= full + 1e-7, "{part} > {full}");
            }
        }
    }
}
