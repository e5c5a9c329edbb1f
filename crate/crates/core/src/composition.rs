//! Deficiency accumulation along kernel chains, and the fidelity/invariance transfer bound.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deficiency::{deficiency, kernel_simulation_error, WITNESS_TOL};
use crate::error::{Error, Result};
use crate::experiment::{
    apply_kernel, ensure_same_parameters, tv_slices, DeterministicMap, Experiment, Kernel, Labels,
};
use crate::random;

/// A base experiment and two equally shaped sequences of oracle kernels.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainSpec {
    pub base: Experiment,
    pub ideal: Vec<Kernel>,
    pub approx: Vec<Kernel>,
}

impl ChainSpec {
    pub fn validate(&self) -> Result<()> {
        if self.ideal.len() != self.approx.len() {
            return Err(Error::Dimension(format!(
                "{} ideal kernels but {} approximate ones",
                self.ideal.len(),
                self.approx.len()
            )));
        }
        let mut at = self.base.outcomes().clone();
        for (i, (a, b)) in self.ideal.iter().zip(&self.approx).enumerate() {
            if a.from_outcomes() != &at {
                return Err(Error::Dimension(format!("ideal kernel {i} does not accept the previous outputs")));
            }
            if b.from_outcomes() != a.from_outcomes() || b.to_outcomes() != a.to_outcomes() {
                return Err(Error::Dimension(format!("approximate kernel {i} is shaped differently from the ideal one")));
            }
            at = a.to_outcomes().clone();
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.ideal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ideal.is_empty()
    }

    /// Base pushed through ideal steps `0..switch` and approximate steps `switch..k`.
    fn hybrid(&self, switch: usize) -> Result<Experiment> {
        let mut e = self.base.clone();
        for (i, (a, b)) in self.ideal.iter().zip(&self.approx).enumerate() {
            e = apply_kernel(&e, if i < switch { a } else { b })?;
        }
        Ok(e)
    }
}

/// The base experiment pushed through every ideal, or every approximate, kernel.
pub fn compose_chain(spec: &ChainSpec, use_approx: bool) -> Result<Experiment> {
    spec.validate()?;
    spec.hybrid(if use_approx { 0 } else { spec.len() })
}

#[derive(Clone, Debug, Serialize)]
pub struct StepEpsilon {
    /// `δ(H_i, H_{i−1})`, where `H_j` runs ideal steps up to `j` and approximate ones after.
    pub hybrid_deficiency: f64,
    /// `δ(G∘I_i, G∘A_i)` for the ideal prefix `G`, ignoring the later steps.
    pub prefix_deficiency: f64,
    /// `max_θ TV(G∘I_i, G∘A_i)`, an upper bound on `hybrid_deficiency`.
    pub prefix_tv: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompositionReport {
    pub steps: Vec<StepEpsilon>,
    /// `δ(ideal chain, approximate chain)`.
    pub delta_total: f64,
    /// Sum of the hybrid step deficiencies.
    pub eps_sum: f64,
    pub holds: bool,
    /// `delta_total / eps_sum`, absent when `eps_sum` is zero.
    pub tightness: Option<f64>,
}

/// Measures each step's deficiency and checks `δ_total ≤ Σ ε_i + 1e-7`.
///
/// The per-step `ε_i` is the hybrid deficiency: both arguments share the ideal prefix
/// and the approximate suffix, and differ only in step `i`. The prefix-only deficiency is
/// reported beside it but is not summed, because a common post-processing can raise a
/// deficiency.
pub fn verify_composition_bound(spec: &ChainSpec) -> Result<CompositionReport> {
    spec.validate()?;
    let k = spec.len();
    let hybrids = (0..=k).map(|j| spec.hybrid(j)).collect::<Result<Vec<_>>>()?;
    let mut prefix = spec.base.clone();
    let mut steps = Vec::with_capacity(k);
    for i in 0..k {
        let with_ideal = apply_kernel(&prefix, &spec.ideal[i])?;
        let with_approx = apply_kernel(&prefix, &spec.approx[i])?;
        steps.push(StepEpsilon {
            hybrid_deficiency: deficiency(&hybrids[i + 1], &hybrids[i])?.value,
            prefix_deficiency: deficiency(&with_ideal, &with_approx)?.value,
            prefix_tv: kernel_simulation_error(
                &with_ideal,
                &with_approx,
                &Kernel::identity(with_ideal.outcomes()),
            )?,
        });
        prefix = with_ideal;
    }
    let delta_total = deficiency(&hybrids[k], &hybrids[0])?.value;
    let eps_sum: f64 = steps.iter().map(|s| s.hybrid_deficiency).sum();
    Ok(CompositionReport {
        steps,
        delta_total,
        eps_sum,
        holds: delta_total <= eps_sum + WITNESS_TOL,
        tightness: (eps_sum > 0.0).then(|| delta_total / eps_sum),
    })
}

/// A representation: a kernel, or a deterministic map given as one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Representation {
    Kernel(Kernel),
    Map(DeterministicMap),
}

impl Representation {
    pub fn kernel(&self) -> Kernel {
        match self {
            Representation::Kernel(k) => k.clone(),
            Representation::Map(m) => m.to_kernel(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NftReport {
    /// `δ(E_S∘T, E_S)`.
    pub source_fidelity: f64,
    /// `δ(E_T∘T, E_T)`.
    pub target_fidelity: f64,
    /// `max_θ TV(Q^S_θ, Q^T_θ)` between the two represented experiments.
    pub invariance_error: f64,
    /// `δ(E_T, E_S)`.
    pub task_gap: f64,
    /// Constant in front of the right-hand side.
    pub constant: f64,
    pub holds: bool,
}

/// The four terms of `δ(E_T, E_S) ≤ δ(E_T∘T, E_T) + max_θ TV(Q^S_θ, Q^T_θ) + δ(E_S∘T, E_S)`.
///
/// Both experiments must live on the outcome space `T` accepts.
pub fn nft_terms(e_s: &Experiment, e_t: &Experiment, t: &Representation) -> Result<NftReport> {
    ensure_same_parameters(e_s, e_t)?;
    let k = t.kernel().reindexed_from(e_s.outcomes()).map_err(|_| {
        Error::Dimension(format!(
            "representation inputs do not match the outcomes of `{}`",
            e_s.name()
        ))
    })?;
    let kt = k.reindexed_from(e_t.outcomes()).map_err(|_| {
        Error::Dimension(format!(
            "representation inputs do not match the outcomes of `{}`",
            e_t.name()
        ))
    })?;
    let qs = apply_kernel(e_s, &k)?;
    let qt = apply_kernel(e_t, &kt)?;
    let invariance_error = qs
        .rows()
        .iter()
        .zip(qt.rows())
        .map(|(a, b)| tv_slices(a, b))
        .fold(0.0, f64::max);
    let source_fidelity = deficiency(&qs, e_s)?.value;
    let target_fidelity = deficiency(&qt, e_t)?.value;
    let task_gap = deficiency(e_t, e_s)?.value;
    Ok(NftReport {
        source_fidelity,
        target_fidelity,
        invariance_error,
        task_gap,
        constant: 1.0,
        holds: source_fidelity + target_fidelity + invariance_error >= task_gap - WITNESS_TOL,
    })
}

/// A random chain with one to three steps over spaces of two or three outcomes.
pub fn random_chain<R: Rng>(rng: &mut R) -> ChainSpec {
    let k = random::size(rng, 1, 3);
    let params = Labels::numbered("t", random::size(rng, 2, 3));
    let spaces: Vec<Labels> = (0..=k)
        .map(|j| Labels::numbered(&format!("s{j}_"), random::size(rng, 2, 3)))
        .collect();
    let base = random::experiment(rng, "base", &params, &spaces[0]);
    let ideal = (0..k).map(|j| random::kernel(rng, &spaces[j], &spaces[j + 1])).collect();
    let approx = (0..k).map(|j| random::kernel(rng, &spaces[j], &spaces[j + 1])).collect();
    ChainSpec { base, ideal, approx }
}

/// Random source and target experiments on a shared space, with a random representation.
pub fn random_nft_instance<R: Rng>(rng: &mut R) -> (Experiment, Experiment, Representation) {
    let params = Labels::numbered("t", random::size(rng, 2, 3));
    let space = Labels::numbered("x", random::size(rng, 2, 4));
    let rep = Labels::numbered("z", random::size(rng, 2, 3));
    let e_s = random::experiment(rng, "source", &params, &space);
    let e_t = random::experiment(rng, "target", &params, &space);
    let t = if rng.random_bool(0.3) {
        let image = (0..space.len()).map(|_| rng.random_range(0..rep.len())).collect();
        Representation::Map(DeterministicMap::new(space, rep, image).expect("map"))
    } else {
        Representation::Kernel(random::kernel(rng, &space, &rep))
    };
    (e_s, e_t, t)
}

#[derive(Clone, Debug, Serialize)]
pub struct TrialSummary {
    pub trials: usize,
    pub violations: usize,
    /// Largest `lhs − rhs` seen; negative when every trial holds with room to spare.
    pub worst_margin: f64,
    pub mean_tightness: Option<f64>,
}

/// Seeded Monte Carlo run of [`verify_composition_bound`].
pub fn composition_trials(seed: u64, trials: usize) -> Result<TrialSummary> {
    let mut rng = random::rng(seed);
    let specs: Vec<ChainSpec> = (0..trials).map(|_| random_chain(&mut rng)).collect();
    let reports = specs
        .par_iter()
        .map(verify_composition_bound)
        .collect::<Result<Vec<_>>>()?;
    let ratios: Vec<f64> = reports.iter().filter_map(|r| r.tightness).collect();
    Ok(TrialSummary {
        trials,
        violations: reports.iter().filter(|r| !r.holds).count(),
        worst_margin: reports
            .iter()
            .map(|r| r.delta_total - r.eps_sum)
            .fold(f64::NEG_INFINITY, f64::max),
        mean_tightness: (!ratios.is_empty())
            .then(|| ratios.iter().sum::<f64>() / ratios.len() as f64),
    })
}

/// Seeded Monte Carlo run of [`nft_terms`].
pub fn nft_trials(seed: u64, trials: usize) -> Result<TrialSummary> {
    let mut rng = random::rng(seed);
    let cases: Vec<_> = (0..trials).map(|_| random_nft_instance(&mut rng)).collect();
    let reports = cases
        .par_iter()
        .map(|(s, t, rep)| nft_terms(s, t, rep))
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialSummary {
        trials,
        violations: reports.iter().filter(|r| !r.holds).count(),
        worst_margin: reports
            .iter()
            .map(|r| r.task_gap - r.source_fidelity - r.target_fidelity - r.invariance_error)
            .fold(f64::NEG_INFINITY, f64::max),
        mean_tightness: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::gaussian::{self, GaussianFamily};

    #[test]
    fn empty_chain_is_the_base() {
        let spec = ChainSpec {
            base: fixtures::ce2_source(),
            ideal: vec![],
            approx: vec![],
        };
        assert_eq!(compose_chain(&spec, true).unwrap().rows(), spec.base.rows());
        let r = verify_composition_bound(&spec).unwrap();
        assert_eq!(r.delta_total, 0.0);
        assert!(r.holds && r.tightness.is_none());
    }

    #[test]
    fn identical_oracles_give_zero() {
        let mut rng = random::rng(5);
        let mut spec = random_chain(&mut rng);
        spec.approx = spec.ideal.clone();
        let a = compose_chain(&spec, true).unwrap();
        let b = compose_chain(&spec, false).unwrap();
        assert_eq!(a.rows(), b.rows());
        let r = verify_composition_bound(&spec).unwrap();
        assert!(r.delta_total < 1e-9 && r.eps_sum < 1e-9 && r.holds);
    }

    #[test]
    fn random_two_step_chain_is_stochastic() {
        let mut rng = random::rng(9);
        let p = Labels::numbered("t", 2);
        let s: Vec<Labels> = (0..3).map(|j| Labels::numbered(&format!("s{j}_"), 3)).collect();
        let spec = ChainSpec {
            base: random::experiment(&mut rng, "b", &p, &s[0]),
            ideal: vec![random::kernel(&mut rng, &s[0], &s[1]), random::kernel(&mut rng, &s[1], &s[2])],
            approx: vec![random::kernel(&mut rng, &s[0], &s[1]), random::kernel(&mut rng, &s[1], &s[2])],
        };
        for e in [compose_chain(&spec, true).unwrap(), compose_chain(&spec, false).unwrap()] {
            for row in e.rows() {
                assert!(row.iter().all(|&v| v >= 0.0));
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_step_total_is_the_step() {
        let mut rng = random::rng(21);
        for _ in 0..10 {
            let mut spec = random_chain(&mut rng);
            spec.ideal.truncate(1);
            spec.approx.truncate(1);
            let r = verify_composition_bound(&spec).unwrap();
            assert!((r.delta_total - r.eps_sum).abs() < 1e-12);
            assert!((r.delta_total - r.steps[0].prefix_deficiency).abs() < 1e-12);
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut rng = random::rng(2);
        let mut spec = random_chain(&mut rng);
        spec.approx.pop();
        assert!(matches!(verify_composition_bound(&spec), Err(Error::Dimension(_))));
    }

    #[test]
    fn few_random_chains_hold() {
        let s = composition_trials(7, 20).unwrap();
        assert_eq!(s.violations, 0, "{s:?}");
    }

    #[test]
    fn nft_examples() {
        let p = fixtures::ce2_source();
        let r = nft_terms(&p, &p, &Representation::Map(fixtures::ce2_map())).unwrap();
        assert!(r.task_gap < 1e-9 && r.holds);

        let (grid, thetas) = gaussian::default_collapse_grid();
        let fam = |v: f64| {
            gaussian::binned_gaussian_experiment(&GaussianFamily {
                thetas: thetas.clone(),
                variance: v,
                grid,
            })
            .unwrap()
        };
        let t = Representation::Map(gaussian::scaling_map(&grid, 0.0).unwrap());
        let r = nft_terms(&fam(1.0), &fam(4.0), &t).unwrap();
        assert!(r.invariance_error < 1e-9);
        assert!(r.source_fidelity > 0.3 && r.task_gap > 0.0 && r.holds);
        let rhs = r.source_fidelity + r.target_fidelity + r.invariance_error;
        assert!(rhs > r.task_gap + 0.1);
    }

    #[test]
    fn representation_json_accepts_either_form() {
        let m: Representation =
            crate::json::from_str(r#"{"mapping": {"a": "0", "b": "0", "c": "1"}}"#).unwrap();
        assert!(matches!(m, Representation::Map(_)));
        let k: Representation = crate::json::from_str(
            r#"{"from_outcomes": ["a"], "to_outcomes": ["z"], "matrix": [[1.0]]}"#,
        )
        .unwrap();
        assert!(matches!(k, Representation::Kernel(_)));
    }
}
