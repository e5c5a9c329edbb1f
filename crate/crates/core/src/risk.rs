//! Decision problems, risks, rule transfer through kernels, and the empirical deficiency gap.

use serde::{Deserialize, Serialize};

use crate::deficiency::deficiency;
use crate::error::{Error, Result};
use crate::experiment::{
    compose_kernels, ensure_same_parameters, DeterministicMap, Experiment, Kernel, Labels,
};

/// Largest number of deterministic rules [`enumerate_deterministic_rules`] will produce.
pub const RULE_GUARD: usize = 1_000_000;

/// Slack added to every hinge bound.
pub const HINGE_TOL: f64 = 1e-7;

/// Loss `ℓ(θ, a)` over a finite action set, bounded in `[a, b]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProblemFile", into = "ProblemFile")]
pub struct DecisionProblem {
    actions: Labels,
    loss: Vec<Vec<f64>>,
    bounds: (f64, f64),
}

#[derive(Serialize, Deserialize)]
struct ProblemFile {
    actions: Labels,
    loss: Vec<Vec<f64>>,
    #[serde(default = "unit_bounds")]
    bounds: [f64; 2],
}

fn unit_bounds() -> [f64; 2] {
    [0.0, 1.0]
}

impl TryFrom<ProblemFile> for DecisionProblem {
    type Error = Error;
    fn try_from(f: ProblemFile) -> Result<Self> {
        DecisionProblem::with_bounds(f.actions, f.loss, (f.bounds[0], f.bounds[1]))
    }
}

impl From<DecisionProblem> for ProblemFile {
    fn from(p: DecisionProblem) -> Self {
        ProblemFile {
            actions: p.actions,
            loss: p.loss,
            bounds: [p.bounds.0, p.bounds.1],
        }
    }
}

impl DecisionProblem {
    /// A loss with values in `[0, 1]`.
    pub fn new(actions: Labels, loss: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_bounds(actions, loss, (0.0, 1.0))
    }

    pub fn with_bounds(actions: Labels, loss: Vec<Vec<f64>>, bounds: (f64, f64)) -> Result<Self> {
        let (lo, hi) = bounds;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Invalid(format!("loss bounds [{lo}, {hi}] are not a finite interval")));
        }
        for (i, row) in loss.iter().enumerate() {
            if row.len() != actions.len() {
                return Err(Error::Dimension(format!(
                    "loss row {i} has {} entries for {} actions",
                    row.len(),
                    actions.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !(lo..=hi).contains(*v)) {
                return Err(Error::Invalid(format!("loss value {v} outside [{lo}, {hi}]")));
            }
        }
        Ok(DecisionProblem {
            actions,
            loss,
            bounds,
        })
    }

    /// 0-1 loss for identifying the parameter: the actions are the parameters themselves.
    pub fn zero_one(parameters: &Labels) -> Self {
        let n = parameters.len();
        let loss = (0..n)
            .map(|t| (0..n).map(|a| if a == t { 0.0 } else { 1.0 }).collect())
            .collect();
        DecisionProblem {
            actions: parameters.clone(),
            loss,
            bounds: (0.0, 1.0),
        }
    }

    pub fn actions(&self) -> &Labels {
        &self.actions
    }

    pub fn loss(&self) -> &[Vec<f64>] {
        &self.loss
    }

    pub fn bounds(&self) -> (f64, f64) {
        self.bounds
    }

    /// Width `b − a` of the declared loss range.
    pub fn oscillation(&self) -> f64 {
        self.bounds.1 - self.bounds.0
    }

    fn check_rows(&self, n_params: usize) -> Result<()> {
        if self.loss.len() != n_params {
            return Err(Error::Dimension(format!(
                "loss has {} rows for {} parameters",
                self.loss.len(),
                n_params
            )));
        }
        Ok(())
    }
}

/// Every 0-1 valued loss matrix of the given shape.
pub fn zero_one_problems(n_params: usize, actions: &Labels) -> Result<Vec<DecisionProblem>> {
    let cells = n_params * actions.len();
    if cells > 20 {
        return Err(Error::Guard(format!("2^{cells} loss matrices")));
    }
    (0u32..1 << cells)
        .map(|bits| {
            let loss = (0..n_params)
                .map(|t| {
                    (0..actions.len())
                        .map(|a| f64::from((bits >> (t * actions.len() + a)) & 1))
                        .collect()
                })
                .collect();
            DecisionProblem::new(actions.clone(), loss)
        })
        .collect()
}

/// A map from outcomes to actions, possibly randomized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DecisionRule {
    Deterministic(DeterministicMap),
    Randomized(Kernel),
}

impl DecisionRule {
    pub fn outcomes(&self) -> &Labels {
        match self {
            DecisionRule::Deterministic(m) => m.from_outcomes(),
            DecisionRule::Randomized(k) => k.from_outcomes(),
        }
    }

    pub fn actions(&self) -> &Labels {
        match self {
            DecisionRule::Deterministic(m) => m.to_outcomes(),
            DecisionRule::Randomized(k) => k.to_outcomes(),
        }
    }

    /// The action kernel `ρ(a | x)`.
    pub fn as_kernel(&self) -> Kernel {
        match self {
            DecisionRule::Deterministic(m) => m.to_kernel(),
            DecisionRule::Randomized(k) => k.clone(),
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, DecisionRule::Deterministic(_))
    }
}

/// Per-parameter risk `R(θ) = Σ_x P_θ(x) Σ_a ρ(a|x) ℓ(θ,a)`.
pub fn risk(e: &Experiment, rule: &DecisionRule, dp: &DecisionProblem) -> Result<Vec<f64>> {
    if rule.outcomes() != e.outcomes() {
        return Err(Error::Dimension(format!(
            "rule is not defined on the outcomes of `{}`",
            e.name()
        )));
    }
    if rule.actions() != dp.actions() {
        return Err(Error::Dimension("rule actions differ from the problem's actions".into()));
    }
    dp.check_rows(e.num_parameters())?;
    Ok(match rule {
        DecisionRule::Deterministic(m) => e
            .rows()
            .iter()
            .zip(dp.loss())
            .map(|(p, l)| p.iter().zip(m.image()).map(|(px, &a)| px * l[a]).sum())
            .collect(),
        DecisionRule::Randomized(k) => e
            .rows()
            .iter()
            .zip(dp.loss())
            .map(|(p, l)| {
                p.iter()
                    .zip(k.matrix())
                    .map(|(px, row)| px * row.iter().zip(l).map(|(r, v)| r * v).sum::<f64>())
                    .sum()
            })
            .collect(),
    })
}

/// The rule `ρ ∘ T` on the input space of `t`: simulate with `t`, then decide with `rule`.
pub fn transfer_rule(rule: &DecisionRule, t: &Kernel) -> Result<DecisionRule> {
    let composite = compose_kernels(t, &rule.as_kernel())?;
    if rule.is_deterministic() {
        if let Some(m) = composite.as_deterministic() {
            return Ok(DecisionRule::Deterministic(m));
        }
    }
    Ok(DecisionRule::Randomized(composite))
}

/// Lazily enumerates every total map from `outcomes` to `actions`.
///
/// The last outcome varies fastest.
pub fn enumerate_deterministic_rules(outcomes: &Labels, actions: &Labels) -> Result<RuleStream> {
    let count = (actions.len() as u128).checked_pow(outcomes.len() as u32);
    match count {
        Some(c) if c <= RULE_GUARD as u128 && !actions.is_empty() => Ok(RuleStream {
            outcomes: outcomes.clone(),
            actions: actions.clone(),
            next: Some(vec![0; outcomes.len()]),
            remaining: c as usize,
        }),
        _ if actions.is_empty() => Err(Error::Invalid("no actions".into())),
        _ => Err(Error::Guard(format!(
            "{}^{} deterministic rules exceed {RULE_GUARD}",
            actions.len(),
            outcomes.len()
        ))),
    }
}

/// Iterator returned by [`enumerate_deterministic_rules`].
pub struct RuleStream {
    outcomes: Labels,
    actions: Labels,
    next: Option<Vec<usize>>,
    remaining: usize,
}

impl Iterator for RuleStream {
    type Item = DeterministicMap;

    fn next(&mut self) -> Option<DeterministicMap> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut carried = true;
        for slot in succ.iter_mut().rev() {
            *slot += 1;
            if *slot < self.actions.len() {
                carried = false;
                break;
            }
            *slot = 0;
        }
        if !carried {
            self.next = Some(succ);
        }
        self.remaining -= 1;
        Some(
            DeterministicMap::new(self.outcomes.clone(), self.actions.clone(), current)
                .expect("indices in range"),
        )
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

impl ExactSizeIterator for RuleStream {}

/// Outcome of checking the risk-transfer bound on a family of rules.
#[derive(Clone, Debug, Serialize)]
pub struct HingeReport {
    pub deficiency: f64,
    /// Largest `|R_E(ρ∘T)(θ) − R_F(ρ)(θ)|` over problems, rules and parameters.
    pub max_gap: f64,
    /// Largest `osc(ℓ)·δ` over the problems checked.
    pub bound: f64,
    pub checked: usize,
}

/// Transfers every rule on `f` to `e` through the LP witness of `δ(e, f)` and checks
/// `|R_E(ρ∘T) − R_F(ρ)| ≤ osc(ℓ)·δ + 1e-7` pointwise in `θ`.
///
/// A violation is returned as [`Error::Falsified`].
pub fn verify_hinge(
    e: &Experiment,
    f: &Experiment,
    dps: &[DecisionProblem],
    rules_on_f: &[DecisionRule],
) -> Result<HingeReport> {
    ensure_same_parameters(e, f)?;
    let report = deficiency(e, f)?;
    let delta = report.value;
    let mut out = HingeReport {
        deficiency: delta,
        max_gap: 0.0,
        bound: 0.0,
        checked: 0,
    };
    for rule in rules_on_f {
        let transferred = transfer_rule(rule, &report.witness)?;
        for dp in dps {
            if dp.actions() != rule.actions() {
                continue;
            }
            let on_f = risk(f, rule, dp)?;
            let on_e = risk(e, &transferred, dp)?;
            let bound = dp.oscillation() * delta;
            out.bound = out.bound.max(bound);
            for (th, (a, b)) in on_e.iter().zip(&on_f).enumerate() {
                let gap = (a - b).abs();
                out.max_gap = out.max_gap.max(gap);
                if gap > bound + HINGE_TOL {
                    return Err(Error::Falsified(format!(
                        "risk gap {gap} at parameter `{}` exceeds osc·δ = {bound}",
                        e.parameters().get(th)
                    )));
                }
            }
            out.checked += 1;
        }
    }
    Ok(out)
}

/// Observed outcome counts, one row per parameter.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrequencyTable {
    pub parameters: Labels,
    pub outcomes: Labels,
    pub counts: Vec<Vec<f64>>,
}

impl FrequencyTable {
    /// Normalizes each row into an empirical distribution.
    pub fn to_experiment(&self, name: &str) -> Result<Experiment> {
        if self.counts.len() != self.parameters.len() {
            return Err(Error::Dimension(format!(
                "{} count rows for {} parameters",
                self.counts.len(),
                self.parameters.len()
            )));
        }
        let rows = self
            .counts
            .iter()
            .zip(self.parameters.iter())
            .map(|(row, th)| {
                if let Some(v) = row.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                    return Err(Error::InvalidDistribution(format!(
                        "count {v} for parameter `{th}`"
                    )));
                }
                let total: f64 = row.iter().sum();
                if total <= 0.0 {
                    return Err(Error::InvalidDistribution(format!(
                        "no observations for parameter `{th}`"
                    )));
                }
                Ok(row.iter().map(|v| v / total).collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Experiment::new(name, self.parameters.clone(), self.outcomes.clone(), rows)
    }

    /// Frequencies equal to the exact probabilities of `e`.
    pub fn from_experiment(e: &Experiment) -> Self {
        FrequencyTable {
            parameters: e.parameters().clone(),
            outcomes: e.outcomes().clone(),
            counts: e.rows().to_vec(),
        }
    }
}

/// One decision problem with the rules allowed on each side.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassEntry {
    pub problem: DecisionProblem,
    pub source_rules: Vec<DecisionRule>,
    pub target_rules: Vec<DecisionRule>,
}

/// Every deterministic rule on each side for each problem.
pub fn exhaustive_class(
    source_outcomes: &Labels,
    target_outcomes: &Labels,
    problems: &[DecisionProblem],
) -> Result<Vec<ClassEntry>> {
    problems
        .iter()
        .map(|dp| {
            let rules = |o: &Labels| -> Result<Vec<DecisionRule>> {
                Ok(enumerate_deterministic_rules(o, dp.actions())?
                    .map(DecisionRule::Deterministic)
                    .collect())
            };
            Ok(ClassEntry {
                problem: dp.clone(),
                source_rules: rules(source_outcomes)?,
                target_rules: rules(target_outcomes)?,
            })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ProblemGap {
    pub problem: usize,
    pub gap: f64,
    /// Target rule whose risk profile the source matches worst.
    pub worst_target_rule: usize,
    /// Best-matching source rule for that target rule.
    pub best_source_rule: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateReport {
    /// Number of target rules over all problems: the size of the supremum.
    pub decision_class_size: usize,
    pub source_rule_count: usize,
    pub delta_hat: f64,
    pub worst_loss_id: usize,
    pub per_problem: Vec<ProblemGap>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_simulable: Option<bool>,
}

/// Empirical deficiency gap over a finite decision class.
///
/// For each problem and each target rule, the source is credited with its best
/// matching rule: the gap is `min_S max_θ |R_source(S)(θ) − R_target(T)(θ)|`. The
/// problem's gap is the worst target rule, and `δ̂` the worst problem.
pub fn empirical_deficiency_gap(
    source: &FrequencyTable,
    target: &FrequencyTable,
    class: &[ClassEntry],
    epsilon: Option<f64>,
) -> Result<CertificateReport> {
    let es = source.to_experiment("source")?;
    let et = target.to_experiment("target")?;
    ensure_same_parameters(&es, &et)?;
    if class.is_empty() {
        return Err(Error::Invalid("empty decision class".into()));
    }
    let mut per_problem = Vec::with_capacity(class.len());
    let mut size = 0;
    let mut source_count = 0;
    for (i, entry) in class.iter().enumerate() {
        if entry.source_rules.is_empty() || entry.target_rules.is_empty() {
            return Err(Error::Invalid(format!("problem {i} has no rules on one side")));
        }
        let rs = entry
            .source_rules
            .iter()
            .map(|r| risk(&es, r, &entry.problem))
            .collect::<Result<Vec<_>>>()?;
        let mut worst = ProblemGap {
            problem: i,
            gap: 0.0,
            worst_target_rule: 0,
            best_source_rule: 0,
        };
        for (j, rule) in entry.target_rules.iter().enumerate() {
            let rt = risk(&et, rule, &entry.problem)?;
            let (best_s, gap) = rs
                .iter()
                .map(|r| r.iter().zip(&rt).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("non-empty");
            if gap > worst.gap {
                worst = ProblemGap {
                    problem: i,
                    gap,
                    worst_target_rule: j,
                    best_source_rule: best_s,
                };
            }
        }
        size += entry.target_rules.len();
        source_count += entry.source_rules.len();
        per_problem.push(worst);
    }
    let (worst_loss_id, delta_hat) = per_problem
        .iter()
        .map(|g| g.gap)
        .enumerate()
        .fold((0, 0.0), |acc, (i, g)| if g > acc.1 { (i, g) } else { acc });
    Ok(CertificateReport {
        decision_class_size: size,
        source_rule_count: source_count,
        delta_hat,
        worst_loss_id,
        per_problem,
        epsilon,
        epsilon_simulable: epsilon.map(|eps| delta_hat <= eps),
    })
}
