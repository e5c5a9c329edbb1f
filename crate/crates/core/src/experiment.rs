//! Finite experiments, distributions, Markov kernels and deterministic maps.
//!
//! Everything here is immutable once built. Constructors validate their inputs:
//! probabilities must be non-negative and each row must sum to one within
//! [`PROB_TOL`]. Rows that miss by more than that are rejected, never silently
//! renormalized. Zero-probability outcomes are kept.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-sum tolerance applied when validating probability vectors.
pub const PROB_TOL: f64 = 1e-9;

/// An ordered list of unique labels, cheap to clone and share between rows.
#[derive(Clone, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Labels(Arc<[String]>);

impl Labels {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let mut seen = std::collections::HashSet::with_capacity(labels.len());
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::DuplicateLabel(l.clone()));
            }
        }
        Ok(Labels(labels.into()))
    }

    /// Labels `prefix0, prefix1, ...`.
    pub fn numbered(prefix: &str, n: usize) -> Self {
        Labels((0..n).map(|i| format!("{prefix}{i}")).collect::<Vec<_>>().into())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[String] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn get(&self, i: usize) -> &str {
        &self.0[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.0.iter().position(|l| l == label)
    }

    pub fn index_map(&self) -> HashMap<&str, usize> {
        self.iter().enumerate().map(|(i, l)| (l, i)).collect()
    }

    /// Sub-list at the given positions.
    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        Labels::new(idx.iter().map(|&i| self.0[i].clone()))
    }
}

impl PartialEq for Labels {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl fmt::Debug for Labels {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl TryFrom<Vec<String>> for Labels {
    type Error = Error;
    fn try_from(v: Vec<String>) -> Result<Self> {
        Labels::new(v)
    }
}

impl From<Labels> for Vec<String> {
    fn from(l: Labels) -> Self {
        l.0.to_vec()
    }
}

/// Validates a probability row; rows within tolerance but not at rounding level are rescaled.
pub(crate) fn checked_row(mut row: Vec<f64>, what: &str) -> Result<Vec<f64>> {
    for &p in &row {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidDistribution(format!(
                "{what}: entry {p} is not a non-negative real"
            )));
        }
    }
    let sum: f64 = row.iter().sum();
    let err = (sum - 1.0).abs();
    if err > PROB_TOL {
        return Err(Error::InvalidDistribution(format!(
            "{what}: sums to {sum}, outside 1 ± {PROB_TOL:e}"
        )));
    }
    // Rescale only above rounding noise so already-normalized rows keep their bits.
    if err > 4.0 * f64::EPSILON * row.len().max(1) as f64 {
        for p in &mut row {
            *p /= sum;
        }
    }
    Ok(row)
}

/// ½ Σ |a − b| over two aligned probability vectors.
pub(crate) fn tv_slices(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// A probability vector over a labeled finite outcome set.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    outcomes: Labels,
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(outcomes: Labels, probs: Vec<f64>) -> Result<Self> {
        if outcomes.len() != probs.len() {
            return Err(Error::Dimension(format!(
                "{} outcomes but {} probabilities",
                outcomes.len(),
                probs.len()
            )));
        }
        let probs = checked_row(probs, "distribution")?;
        Ok(Distribution { outcomes, probs })
    }

    pub fn outcomes(&self) -> &Labels {
        &self.outcomes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, outcome: &str) -> Option<f64> {
        self.outcomes.index_of(outcome).map(|i| self.probs[i])
    }
}

/// Total variation distance with the half-L1 normalization, in `[0, 1]`.
pub fn total_variation(p: &Distribution, q: &Distribution) -> Result<f64> {
    if p.outcomes != q.outcomes {
        return Err(Error::Dimension(
            "distributions are defined on different outcome lists".into(),
        ));
    }
    Ok(tv_slices(&p.probs, &q.probs))
}

/// A finite statistical experiment: one distribution per parameter over a shared outcome list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ExperimentFile", into = "ExperimentFile")]
pub struct Experiment {
    name: String,
    parameters: Labels,
    outcomes: Labels,
    rows: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct ExperimentFile {
    name: String,
    parameters: Labels,
    outcomes: Labels,
    rows: Vec<Vec<f64>>,
}

impl TryFrom<ExperimentFile> for Experiment {
    type Error = Error;
    fn try_from(f: ExperimentFile) -> Result<Self> {
        Experiment::new(f.name, f.parameters, f.outcomes, f.rows)
    }
}

impl From<Experiment> for ExperimentFile {
    fn from(e: Experiment) -> Self {
        ExperimentFile {
            name: e.name,
            parameters: e.parameters,
            outcomes: e.outcomes,
            rows: e.rows,
        }
    }
}

impl Experiment {
    pub fn new(
        name: impl Into<String>,
        parameters: Labels,
        outcomes: Labels,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let name = name.into();
        if parameters.is_empty() {
            return Err(Error::Invalid(format!("experiment `{name}` has no parameters")));
        }
        if rows.len() != parameters.len() {
            return Err(Error::Dimension(format!(
                "experiment `{name}`: {} parameters but {} rows",
                parameters.len(),
                rows.len()
            )));
        }
        let mut checked = Vec::with_capacity(rows.len());
        for (theta, row) in parameters.iter().zip(rows) {
            if row.len() != outcomes.len() {
                return Err(Error::Dimension(format!(
                    "experiment `{name}`: row `{theta}` has {} entries for {} outcomes",
                    row.len(),
                    outcomes.len()
                )));
            }
            checked.push(checked_row(row, &format!("experiment `{name}`, row `{theta}`"))?);
        }
        Ok(Experiment {
            name,
            parameters,
            outcomes,
            rows: checked,
        })
    }

    /// Convenience constructor from string slices.
    pub fn from_rows(
        name: &str,
        parameters: &[&str],
        outcomes: &[&str],
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        Experiment::new(
            name,
            Labels::new(parameters.iter().copied())?,
            Labels::new(outcomes.iter().copied())?,
            rows,
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn parameters(&self) -> &Labels {
        &self.parameters
    }

    pub fn outcomes(&self) -> &Labels {
        &self.outcomes
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, theta: usize) -> &[f64] {
        &self.rows[theta]
    }

    pub fn distribution(&self, theta: usize) -> Distribution {
        Distribution {
            outcomes: self.outcomes.clone(),
            probs: self.rows[theta].clone(),
        }
    }

    pub fn num_parameters(&self) -> usize {
        self.parameters.len()
    }

    pub fn num_outcomes(&self) -> usize {
        self.outcomes.len()
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// The sub-experiment on the parameters at the given positions.
    pub fn restrict(&self, idx: &[usize]) -> Result<Experiment> {
        if idx.is_empty() {
            return Err(Error::Invalid("empty parameter subset".into()));
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.num_parameters()) {
            return Err(Error::Dimension(format!("parameter index {bad} out of range")));
        }
        Ok(Experiment {
            name: self.name.clone(),
            parameters: self.parameters.select(idx)?,
            outcomes: self.outcomes.clone(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
        })
    }

    /// Positions of the named parameters.
    pub fn parameter_indices(&self, names: &[&str]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|n| {
                self.parameters
                    .index_of(n)
                    .ok_or_else(|| Error::UnknownLabel((*n).to_string()))
            })
            .collect()
    }
}

/// Checks that two experiments are indexed by the same parameter list.
pub fn ensure_same_parameters(e: &Experiment, f: &Experiment) -> Result<()> {
    if e.parameters != f.parameters {
        return Err(Error::ParameterMismatch(format!(
            "`{}` has {:?}, `{}` has {:?}",
            e.name, e.parameters, f.name, f.parameters
        )));
    }
    Ok(())
}

/// A row-stochastic matrix from one labeled outcome set to another.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelFile", into = "KernelFile")]
pub struct Kernel {
    from: Labels,
    to: Labels,
    matrix: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct KernelFile {
    from_outcomes: Labels,
    to_outcomes: Labels,
    matrix: Vec<Vec<f64>>,
}

impl TryFrom<KernelFile> for Kernel {
    type Error = Error;
    fn try_from(f: KernelFile) -> Result<Self> {
        Kernel::new(f.from_outcomes, f.to_outcomes, f.matrix)
    }
}

impl From<Kernel> for KernelFile {
    fn from(k: Kernel) -> Self {
        KernelFile {
            from_outcomes: k.from,
            to_outcomes: k.to,
            matrix: k.matrix,
        }
    }
}

impl Kernel {
    pub fn new(from: Labels, to: Labels, matrix: Vec<Vec<f64>>) -> Result<Self> {
        if matrix.len() != from.len() {
            return Err(Error::Dimension(format!(
                "kernel has {} rows for {} input outcomes",
                matrix.len(),
                from.len()
            )));
        }
        let mut checked = Vec::with_capacity(matrix.len());
        for (x, row) in from.iter().zip(matrix) {
            if row.len() != to.len() {
                return Err(Error::Dimension(format!(
                    "kernel row `{x}` has {} entries for {} output outcomes",
                    row.len(),
                    to.len()
                )));
            }
            checked.push(
                checked_row(row, &format!("kernel row `{x}`"))
                    .map_err(|e| Error::InvalidKernel(e.to_string()))?,
            );
        }
        Ok(Kernel {
            from,
            to,
            matrix: checked,
        })
    }

    pub fn identity(labels: &Labels) -> Kernel {
        let n = labels.len();
        Kernel {
            from: labels.clone(),
            to: labels.clone(),
            matrix: (0..n)
                .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
        }
    }

    /// Every input outcome is sent to the same distribution.
    pub fn constant(from: &Labels, target: &Distribution) -> Kernel {
        Kernel {
            from: from.clone(),
            to: target.outcomes.clone(),
            matrix: vec![target.probs.clone(); from.len()],
        }
    }

    pub fn from_outcomes(&self) -> &Labels {
        &self.from
    }

    pub fn to_outcomes(&self) -> &Labels {
        &self.to
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.matrix[x]
    }

    /// The deterministic map this kernel encodes, if every row is a 0/1 indicator.
    pub fn as_deterministic(&self) -> Option<DeterministicMap> {
        let image = self
            .matrix
            .iter()
            .map(|row| {
                let ones: Vec<usize> = (0..row.len()).filter(|&j| row[j] == 1.0).collect();
                let rest_zero = row.iter().filter(|&&v| v != 0.0).count() == 1;
                (ones.len() == 1 && rest_zero).then(|| ones[0])
            })
            .collect::<Option<Vec<_>>>()?;
        Some(DeterministicMap {
            from: self.from.clone(),
            to: self.to.clone(),
            image,
        })
    }

    /// The same kernel with rows reordered to follow `order`, which must hold the same labels.
    pub fn reindexed_from(&self, order: &Labels) -> Result<Kernel> {
        if *order == self.from {
            return Ok(self.clone());
        }
        if order.len() != self.from.len() {
            return Err(Error::Dimension("kernel input outcomes do not match".into()));
        }
        let pos = self.from.index_map();
        let matrix = order
            .iter()
            .map(|l| {
                pos.get(l)
                    .map(|&i| self.matrix[i].clone())
                    .ok_or_else(|| Error::UnknownLabel(l.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Kernel {
            from: order.clone(),
            to: self.to.clone(),
            matrix,
        })
    }

    /// Builds a kernel without validation. Callers guarantee stochastic rows.
    pub(crate) fn from_parts_unchecked(from: Labels, to: Labels, matrix: Vec<Vec<f64>>) -> Kernel {
        Kernel { from, to, matrix }
    }
}

/// A total function between labeled outcome sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MapFile", into = "MapFile")]
pub struct DeterministicMap {
    from: Labels,
    to: Labels,
    image: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct MapFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    from_outcomes: Option<Labels>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    to_outcomes: Option<Labels>,
    mapping: BTreeMap<String, String>,
}

impl TryFrom<MapFile> for DeterministicMap {
    type Error = Error;
    fn try_from(f: MapFile) -> Result<Self> {
        let from = match f.from_outcomes {
            Some(l) => l,
            None => Labels::new(f.mapping.keys().cloned())?,
        };
        let to = match f.to_outcomes {
            Some(l) => l,
            None => {
                let mut images: Vec<String> = f.mapping.values().cloned().collect();
                images.sort();
                images.dedup();
                Labels::new(images)?
            }
        };
        if let Some(extra) = f.mapping.keys().find(|k| from.index_of(k).is_none()) {
            return Err(Error::UnknownLabel(extra.clone()));
        }
        let pairs: Vec<(&str, &str)> = f
            .mapping
            .iter()
            .map(|(a, b)| (a.as_str(), b.as_str()))
            .collect();
        DeterministicMap::from_pairs(from, to, &pairs)
    }
}

impl From<DeterministicMap> for MapFile {
    fn from(m: DeterministicMap) -> Self {
        MapFile {
            mapping: m
                .from
                .iter()
                .zip(&m.image)
                .map(|(a, &j)| (a.to_string(), m.to.get(j).to_string()))
                .collect(),
            from_outcomes: Some(m.from),
            to_outcomes: Some(m.to),
        }
    }
}

impl DeterministicMap {
    pub fn new(from: Labels, to: Labels, image: Vec<usize>) -> Result<Self> {
        if image.len() != from.len() {
            return Err(Error::PartialMap(format!(
                "{} images for {} outcomes",
                image.len(),
                from.len()
            )));
        }
        if let Some(&bad) = image.iter().find(|&&j| j >= to.len()) {
            return Err(Error::Dimension(format!("image index {bad} out of range")));
        }
        Ok(DeterministicMap { from, to, image })
    }

    /// Builds a map from `(input, output)` label pairs; every input must appear.
    pub fn from_pairs(from: Labels, to: Labels, pairs: &[(&str, &str)]) -> Result<Self> {
        let mut image = vec![usize::MAX; from.len()];
        for &(a, b) in pairs {
            let i = from.index_of(a).ok_or_else(|| Error::UnknownLabel(a.into()))?;
            let j = to.index_of(b).ok_or_else(|| Error::UnknownLabel(b.into()))?;
            image[i] = j;
        }
        if let Some(i) = image.iter().position(|&j| j == usize::MAX) {
            return Err(Error::PartialMap(from.get(i).to_string()));
        }
        Ok(DeterministicMap { from, to, image })
    }

    pub fn from_outcomes(&self) -> &Labels {
        &self.from
    }

    pub fn to_outcomes(&self) -> &Labels {
        &self.to
    }

    /// Image position of each input position.
    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn apply(&self, x: usize) -> usize {
        self.image[x]
    }

    pub fn to_kernel(&self) -> Kernel {
        let matrix = self
            .image
            .iter()
            .map(|&j| {
                let mut row = vec![0.0; self.to.len()];
                row[j] = 1.0;
                row
            })
            .collect();
        Kernel {
            from: self.from.clone(),
            to: self.to.clone(),
            matrix,
        }
    }

    pub fn is_injective(&self) -> bool {
        let mut seen = vec![false; self.to.len()];
        self.image.iter().all(|&j| !std::mem::replace(&mut seen[j], true))
    }

    /// The inverse of a bijection.
    pub fn inverse(&self) -> Option<DeterministicMap> {
        if self.from.len() != self.to.len() || !self.is_injective() {
            return None;
        }
        let mut inv = vec![0; self.to.len()];
        for (i, &j) in self.image.iter().enumerate() {
            inv[j] = i;
        }
        Some(DeterministicMap {
            from: self.to.clone(),
            to: self.from.clone(),
            image: inv,
        })
    }

    /// Rows reordered to follow `order`, which must hold the same labels.
    pub fn reindexed_from(&self, order: &Labels) -> Result<DeterministicMap> {
        self.to_kernel()
            .reindexed_from(order)?
            .as_deterministic()
            .ok_or_else(|| Error::Invalid("map is not deterministic".into()))
    }
}

/// Pushes every row of `e` through `t`: the induced experiment with rows `P_θ T`.
pub fn apply_kernel(e: &Experiment, t: &Kernel) -> Result<Experiment> {
    if e.outcomes != t.from {
        return Err(Error::Dimension(format!(
            "experiment `{}` outcomes do not match kernel input outcomes",
            e.name
        )));
    }
    let rows = e.rows.iter().map(|p| push_row(p, t)).collect();
    Experiment::new(format!("{}|T", e.name), e.parameters.clone(), t.to.clone(), rows)
}

/// `p T` for a row vector `p`.
pub(crate) fn push_row(p: &[f64], t: &Kernel) -> Vec<f64> {
    let mut out = vec![0.0; t.to.len()];
    for (px, row) in p.iter().zip(&t.matrix) {
        if *px == 0.0 {
            continue;
        }
        for (o, k) in out.iter_mut().zip(row) {
            *o += px * k;
        }
    }
    out
}

/// Matrix product `t1 · t2`: run `t1`, then feed its output to `t2`.
pub fn compose_kernels(t1: &Kernel, t2: &Kernel) -> Result<Kernel> {
    if t1.to != t2.from {
        return Err(Error::Dimension(
            "first kernel's outputs differ from second kernel's inputs".into(),
        ));
    }
    let matrix = t1.matrix.iter().map(|row| push_row(row, t2)).collect();
    Kernel::new(t1.from.clone(), t2.to.clone(), matrix)
}

/// The experiment whose row for each instance is a point mass on that instance's solution.
///
/// Outcomes are the distinct solution labels in first-appearance order.
pub fn point_mass_experiment<S: AsRef<str>, T: AsRef<str>>(
    name: &str,
    instances: &[S],
    solutions: &[T],
) -> Result<Experiment> {
    let mut outcomes: Vec<String> = Vec::new();
    for s in solutions {
        if !outcomes.iter().any(|o| o == s.as_ref()) {
            outcomes.push(s.as_ref().to_string());
        }
    }
    point_mass_experiment_over(name, instances, solutions, &Labels::new(outcomes)?)
}

/// As [`point_mass_experiment`], over a declared outcome list that may include unused outcomes.
pub fn point_mass_experiment_over<S: AsRef<str>, T: AsRef<str>>(
    name: &str,
    instances: &[S],
    solutions: &[T],
    outcomes: &Labels,
) -> Result<Experiment> {
    if instances.len() != solutions.len() {
        return Err(Error::PartialMap(format!(
            "{} instances but {} solutions",
            instances.len(),
            solutions.len()
        )));
    }
    let parameters = Labels::new(instances.iter().map(|s| s.as_ref().to_string()))?;
    let rows = solutions
        .iter()
        .map(|s| {
            let j = outcomes
                .index_of(s.as_ref())
                .ok_or_else(|| Error::UnknownLabel(s.as_ref().into()))?;
            let mut row = vec![0.0; outcomes.len()];
            row[j] = 1.0;
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Experiment::new(name, parameters, outcomes.clone(), rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn ce2() -> Experiment {
        Experiment::from_rows(
            "P",
            &["0", "1"],
            &["a", "b", "c"],
            vec![vec![0.5, 0.4, 0.1], vec![0.1, 0.4, 0.5]],
        )
        .unwrap()
    }

    fn ce2_map() -> DeterministicMap {
        DeterministicMap::from_pairs(
            Labels::new(["a", "b", "c"]).unwrap(),
            Labels::new(["0", "1"]).unwrap(),
            &[("a", "0"), ("b", "0"), ("c", "1")],
        )
        .unwrap()
    }

    #[test]
    fn tv_examples() {
        let e = ce2();
        let p0 = e.distribution(0);
        let p1 = e.distribution(1);
        assert_eq!(total_variation(&p0, &p0).unwrap(), 0.0);
        assert!((total_variation(&p0, &p1).unwrap() - 0.4).abs() < 1e-12);
        let l = Labels::new(["x", "y"]).unwrap();
        let a = Distribution::new(l.clone(), vec![1.0, 0.0]).unwrap();
        let b = Distribution::new(l, vec![0.0, 1.0]).unwrap();
        assert_eq!(total_variation(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn tv_rejects_mismatched_outcomes() {
        let a = Distribution::new(Labels::new(["x", "y"]).unwrap(), vec![0.5, 0.5]).unwrap();
        let b = Distribution::new(Labels::new(["x", "z"]).unwrap(), vec![0.5, 0.5]).unwrap();
        assert!(matches!(total_variation(&a, &b), Err(Error::Dimension(_))));
    }

    #[test]
    fn ce2_pushforward() {
        let q = apply_kernel(&ce2(), &ce2_map().to_kernel()).unwrap();
        assert!((q.row(0)[0] - 0.9).abs() < 1e-15 && (q.row(0)[1] - 0.1).abs() < 1e-15);
        assert!((q.row(1)[0] - 0.5).abs() < 1e-15 && (q.row(1)[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn identity_and_constant_kernels() {
        let e = ce2();
        let same = apply_kernel(&e, &Kernel::identity(e.outcomes())).unwrap();
        assert_eq!(same.rows(), e.rows());

        let u = Distribution::new(Labels::new(["u", "v"]).unwrap(), vec![0.3, 0.7]).unwrap();
        let flat = apply_kernel(&e, &Kernel::constant(e.outcomes(), &u)).unwrap();
        for row in flat.rows() {
            assert!((row[0] - 0.3).abs() < 1e-15 && (row[1] - 0.7).abs() < 1e-15);
        }
    }

    #[test]
    fn apply_kernel_dimension_error() {
        let e = ce2();
        let k = Kernel::identity(&Labels::new(["a", "b"]).unwrap());
        assert!(matches!(apply_kernel(&e, &k), Err(Error::Dimension(_))));
    }

    #[test]
    fn validation_rejects_bad_rows() {
        let bad_sum = Experiment::from_rows("x", &["0"], &["a", "b"], vec![vec![0.5, 0.6]]);
        assert!(matches!(bad_sum, Err(Error::InvalidDistribution(_))));
        let negative = Experiment::from_rows("x", &["0"], &["a", "b"], vec![vec![-0.1, 1.1]]);
        assert!(matches!(negative, Err(Error::InvalidDistribution(_))));
        let dup = Labels::new(["a", "a"]);
        assert!(matches!(dup, Err(Error::DuplicateLabel(_))));
        let none = Experiment::from_rows("x", &[], &["a"], vec![]);
        assert!(none.is_err());
    }

    #[test]
    fn near_one_rows_are_rescaled() {
        let e = Experiment::from_rows("x", &["0"], &["a", "b"], vec![vec![0.5, 0.5 + 5e-10]])
            .unwrap();
        let s: f64 = e.row(0).iter().sum();
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn compose_identity_and_maps() {
        let l3 = Labels::new(["a", "b", "c"]).unwrap();
        let t2 = ce2_map().to_kernel();
        assert_eq!(compose_kernels(&Kernel::identity(&l3), &t2).unwrap(), t2);

        let swap = DeterministicMap::new(
            Labels::new(["0", "1"]).unwrap(),
            Labels::new(["0", "1"]).unwrap(),
            vec![1, 0],
        )
        .unwrap();
        let both = compose_kernels(&t2, &swap.to_kernel()).unwrap();
        let det = both.as_deterministic().expect("deterministic composite");
        assert_eq!(det.image(), &[1, 1, 0]);
    }

    #[test]
    fn compose_random_matches_entrywise_sum() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut stochastic = |r: usize, c: usize| -> Vec<Vec<f64>> {
            (0..r)
                .map(|_| {
                    let w: Vec<f64> = (0..c).map(|_| rng.random::<f64>() + 1e-3).collect();
                    let s: f64 = w.iter().sum();
                    w.into_iter().map(|v| v / s).collect()
                })
                .collect()
        };
        let a = Kernel::new(Labels::numbered("x", 3), Labels::numbered("y", 2), stochastic(3, 2))
            .unwrap();
        let b = Kernel::new(Labels::numbered("y", 2), Labels::numbered("z", 4), stochastic(2, 4))
            .unwrap();
        let ab = compose_kernels(&a, &b).unwrap();
        for i in 0..3 {
            let mut sum = 0.0;
            for j in 0..4 {
                let mut entry = 0.0;
                for k in 0..2 {
                    entry += a.row(i)[k] * b.row(k)[j];
                }
                assert!((ab.row(i)[j] - entry).abs() < 1e-15);
                sum += ab.row(i)[j];
            }
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn point_mass_rows() {
        let e = point_mass_experiment("A", &["i1", "i2"], &["s1", "s2"]).unwrap();
        assert_eq!(e.rows(), &[vec![1.0, 0.0], vec![0.0, 1.0]]);

        let shared = point_mass_experiment("A", &["i1", "i2", "i3"], &["s", "s", "s"]).unwrap();
        assert_eq!(shared.num_outcomes(), 1);
        assert!(shared.rows().iter().all(|r| r == &vec![1.0]));

        let five = point_mass_experiment(
            "A",
            &["i1", "i2", "i3", "i4", "i5"],
            &["y", "n", "y", "m", "n"],
        )
        .unwrap();
        for row in five.rows() {
            assert_eq!(row.iter().filter(|&&p| p == 1.0).count(), 1);
            assert_eq!(row.iter().sum::<f64>(), 1.0);
        }
        assert!(point_mass_experiment("A", &["i", "i"], &["s", "t"]).is_err());
    }

    #[test]
    fn bijection_round_trip() {
        let e = ce2();
        let perm = DeterministicMap::new(
            e.outcomes().clone(),
            Labels::new(["p", "q", "r"]).unwrap(),
            vec![2, 0, 1],
        )
        .unwrap();
        let there = apply_kernel(&e, &perm.to_kernel()).unwrap();
        let back = apply_kernel(&there, &perm.inverse().unwrap().to_kernel()).unwrap();
        assert_eq!(back.rows(), e.rows());
    }

    #[test]
    fn map_file_defaults() {
        let m: DeterministicMap =
            crate::json::from_str(r#"{"mapping": {"a": "0", "b": "0", "c": "1"}}"#).unwrap();
        assert_eq!(m.image(), &[0, 0, 1]);
        let partial: Result<DeterministicMap> = crate::json::from_str(
            r#"{"from_outcomes": ["a", "b"], "mapping": {"a": "0"}}"#,
        );
        assert!(partial.is_err());
    }
}
