//! Gaussian location families binned onto finite grids.
//!
//! The normal distribution function is computed from the error function: the
//! Taylor-type series `erf(x) = 2/√π · e^{−x²} Σ 2ⁿ x^{2n+1} / (1·3···(2n+1))` for
//! `|x| < 3` and the continued fraction
//! `erfc(x) = e^{−x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))` beyond it
//! (Abramowitz and Stegun 7.1.6 and 7.1.14). Both are summed until the next term or
//! update falls below double-precision rounding, so the absolute error of [`std_normal_cdf`]
//! stays at the 1e-15 level, well inside the 1e-7 requirement.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deficiency::{deficiency, kernel_simulation_error};
use crate::error::{Error, Result};
use crate::experiment::{
    apply_kernel, tv_slices, DeterministicMap, Experiment, Kernel, Labels,
};
use crate::hierarchy::{check_sufficiency, likelihood_distortion};

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// Error function for `0 ≤ x < 3`.
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= 2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
    }
    FRAC_2_SQRT_PI * (-x2).exp() * sum
}

/// Complementary error function for `x ≥ 3`, by the modified Lentz method.
fn erfc_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for n in 1..500 {
        let a = n as f64 / 2.0;
        d = x + a * d;
        d = if d.abs() < TINY { TINY } else { d };
        c = x + a / c;
        c = if c.abs() < TINY { TINY } else { c };
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    0.5 * FRAC_2_SQRT_PI * (-x * x).exp() / f
}

/// `erfc(x)` for `x ≥ 0`.
fn erfc_nonneg(x: f64) -> f64 {
    if x < 3.0 {
        1.0 - erf_series(x)
    } else {
        erfc_continued_fraction(x)
    }
}

/// Upper tail `1 − Φ(x)`, accurate far into the right tail.
pub fn std_normal_sf(x: f64) -> f64 {
    std_normal_cdf(-x)
}

/// Standard normal distribution function `Φ(x)`.
pub fn std_normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.is_infinite() {
        return if x > 0.0 { 1.0 } else { 0.0 };
    }
    let z = x.abs() / std::f64::consts::SQRT_2;
    if x >= 0.0 {
        if z < 3.0 {
            0.5 * (1.0 + erf_series(z))
        } else {
            1.0 - 0.5 * erfc_nonneg(z)
        }
    } else if z < 3.0 {
        0.5 * (1.0 - erf_series(z))
    } else {
        0.5 * erfc_nonneg(z)
    }
}

/// Standard normal mass of `[a, b)`, either end possibly infinite.
fn interval_mass(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        std_normal_sf(a) - std_normal_sf(b)
    } else {
        std_normal_cdf(b) - std_normal_cdf(a)
    }
}

/// Closed-form `TV(N(μ₀, σ²), N(μ₁, σ²)) = 2Φ(|μ₀ − μ₁| / 2σ) − 1`.
pub fn equal_variance_tv(mean_gap: f64, sigma: f64) -> f64 {
    2.0 * std_normal_cdf(mean_gap.abs() / (2.0 * sigma)) - 1.0
}

/// Closed-form `TV(N(0, s₀²), N(0, s₁²))` through the two density crossings `±r`.
pub fn equal_mean_tv(s0: f64, s1: f64) -> f64 {
    let (lo, hi) = if s0 < s1 { (s0, s1) } else { (s1, s0) };
    if lo == hi {
        return 0.0;
    }
    let r = (2.0 * (hi / lo).ln() / (1.0 / (lo * lo) - 1.0 / (hi * hi))).sqrt();
    2.0 * (std_normal_cdf(r / lo) - std_normal_cdf(r / hi))
}

/// Bins `[lo + k·step, lo + (k+1)·step)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

pub const MAX_BINS: usize = 1_000_000;

impl Grid {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Grid> {
        let g = Grid { lo, hi, step };
        g.bins()?;
        Ok(g)
    }

    /// Number of bins; fails unless `step` tiles `[lo, hi)`.
    pub fn bins(&self) -> Result<usize> {
        let Grid { lo, hi, step } = *self;
        if !(lo.is_finite() && hi.is_finite() && step.is_finite() && lo < hi && step > 0.0) {
            return Err(Error::Invalid(format!("grid [{lo}, {hi}) with step {step}")));
        }
        let exact = (hi - lo) / step;
        if exact > MAX_BINS as f64 {
            return Err(Error::Guard(format!("{exact:.0} bins exceed {MAX_BINS}")));
        }
        let n = exact.round();
        if n < 1.0 || (n - exact).abs() > 1e-6 {
            return Err(Error::Invalid(format!(
                "step {step} does not tile [{lo}, {hi})"
            )));
        }
        Ok(n as usize)
    }

    fn n(&self) -> usize {
        self.bins().expect("validated grid")
    }

    pub fn edge(&self, k: usize) -> f64 {
        if k == self.n() {
            self.hi
        } else {
            self.lo + k as f64 * self.step
        }
    }

    pub fn center(&self, k: usize) -> f64 {
        self.lo + (k as f64 + 0.5) * self.step
    }

    /// Bin holding `x`, if `x ∈ [lo, hi)`.
    pub fn locate(&self, x: f64) -> Option<usize> {
        let k = ((x - self.lo) / self.step + 1e-9).floor();
        (k >= 0.0 && (k as usize) < self.n()).then_some(k as usize)
    }

    /// Bin labels: left edges, rounded to remove representation noise.
    pub fn labels(&self) -> Labels {
        let n = self.n();
        Labels::new((0..n).map(|k| fmt_num(self.edge(k)))).expect("distinct edges")
    }

    /// Bin masses of `N(mean, sd²)`, tails folded into the boundary bins.
    pub fn masses(&self, mean: f64, sd: f64) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|k| {
                let a = if k == 0 { f64::NEG_INFINITY } else { (self.edge(k) - mean) / sd };
                let b = if k + 1 == n { f64::INFINITY } else { (self.edge(k + 1) - mean) / sd };
                interval_mass(a, b).max(0.0)
            })
            .collect()
    }
}

fn fmt_num(x: f64) -> String {
    let r = (x * 1e9).round() / 1e9;
    let r = if r == 0.0 { 0.0 } else { r };
    format!("{r}")
}

/// `N(θ, variance)` for each `θ`, binned on `grid`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GaussianFamily {
    pub thetas: Vec<f64>,
    pub variance: f64,
    pub grid: Grid,
}

pub fn binned_gaussian_experiment(spec: &GaussianFamily) -> Result<Experiment> {
    if !(spec.variance > 0.0 && spec.variance.is_finite()) {
        return Err(Error::Invalid(format!("variance {} must be positive", spec.variance)));
    }
    if spec.thetas.is_empty() || spec.thetas.iter().any(|t| !t.is_finite()) {
        return Err(Error::Invalid("means must be finite and non-empty".into()));
    }
    spec.grid.bins()?;
    let sd = spec.variance.sqrt();
    let params = Labels::new(spec.thetas.iter().map(|&t| fmt_num(t)))?;
    let rows = spec.thetas.iter().map(|&t| spec.grid.masses(t, sd)).collect();
    Experiment::new(
        format!("N(θ,{})", fmt_num(spec.variance)),
        params,
        spec.grid.labels(),
        rows,
    )
}

/// Total variation between every pair of rows, in index order.
#[derive(Clone, Debug, Serialize)]
pub struct PairTv {
    pub theta0: f64,
    pub theta1: f64,
    pub tv: f64,
}

fn pairwise_tvs(e: &Experiment, thetas: &[f64]) -> Vec<PairTv> {
    let mut out = Vec::new();
    for a in 0..thetas.len() {
        for b in a + 1..thetas.len() {
            out.push(PairTv {
                theta0: thetas[a],
                theta1: thetas[b],
                tv: tv_slices(e.row(a), e.row(b)),
            });
        }
    }
    out
}

/// Two-point location experiments with a tight (`σ² = 0.01`) and a wide (`σ² = 1`) noise.
pub const TIGHT_VARIANCE: f64 = 0.01;
pub const WIDE_VARIANCE: f64 = 1.0;

#[derive(Clone, Debug, Serialize)]
pub struct PairwiseDeficiency {
    pub value: f64,
    /// `½ max(0, TV_P − TV_Q)` on the binned pair used for the LP.
    pub contraction_lower_bound: f64,
    /// Same bound from the closed-form continuous TVs.
    pub continuous_lower_bound: f64,
    pub tight_grid: Grid,
    pub wide_grid: Grid,
}

#[derive(Clone, Debug, Serialize)]
pub struct Ce3Report {
    pub grid: Grid,
    pub thetas: Vec<f64>,
    /// `max_θ TV(P_θ T_W, Q_θ)` for the binned convolution kernel `T_W`.
    pub simulation_error: f64,
    pub discretization_bound: f64,
    pub tight_tvs: Vec<PairTv>,
    pub wide_tvs: Vec<PairTv>,
    /// Closed-form values for the first pair.
    pub tight_tv_closed_form: f64,
    pub wide_tv_closed_form: f64,
    pub convention_note: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairwise_deficiency_wide_to_tight: Option<PairwiseDeficiency>,
}

pub const CONVENTION_NOTE: &str = "total variation is half the L1 distance; under the L1 \
convention every TV figure doubles (tight pair about 0.766, wide pair about 0.080)";

fn check_coverage(grid: &Grid, thetas: &[f64], sd: f64) -> Result<()> {
    let lo = thetas.iter().copied().fold(f64::INFINITY, f64::min) - 6.0 * sd;
    let hi = thetas.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 6.0 * sd;
    if grid.lo > lo + 1e-9 || grid.hi < hi - 1e-9 {
        return Err(Error::InsufficientGrid(format!(
            "[{}, {}) does not contain [{lo}, {hi}]",
            grid.lo, grid.hi
        )));
    }
    Ok(())
}

fn ensure_two(thetas: &[f64]) -> Result<()> {
    if thetas.len() < 2 {
        return Err(Error::Invalid("need at least two means".into()));
    }
    Ok(())
}

/// The kernel adding independent `N(0, variance)` noise to each bin center, re-binned.
pub fn convolution_kernel(grid: &Grid, variance: f64) -> Result<Kernel> {
    let n = grid.bins()?;
    let sd = variance.sqrt();
    let matrix: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|k| grid.masses(grid.center(k), sd))
        .collect();
    let labels = grid.labels();
    Kernel::new(labels.clone(), labels, matrix)
}

/// A tight location family simulating a wide one through added noise.
///
/// The binned kernel `T_W` realizes `Y = X + W`, `W ~ N(0, 0.99)`; in the continuum the
/// simulation is exact, so `simulation_error` measures discretization alone.
pub fn counterexample3_simulation(grid: Grid, thetas: &[f64]) -> Result<Ce3Report> {
    ensure_two(thetas)?;
    check_coverage(&grid, thetas, WIDE_VARIANCE.sqrt())?;
    let tight = binned_gaussian_experiment(&GaussianFamily {
        thetas: thetas.to_vec(),
        variance: TIGHT_VARIANCE,
        grid,
    })?;
    let wide = binned_gaussian_experiment(&GaussianFamily {
        thetas: thetas.to_vec(),
        variance: WIDE_VARIANCE,
        grid,
    })?;
    let kernel = convolution_kernel(&grid, WIDE_VARIANCE - TIGHT_VARIANCE)?;
    let simulation_error = kernel_simulation_error(&tight, &wide, &kernel)?;
    let gap = thetas[1] - thetas[0];
    Ok(Ce3Report {
        grid,
        thetas: thetas.to_vec(),
        simulation_error,
        discretization_bound: 2.0 * grid.step + 1e-3,
        tight_tvs: pairwise_tvs(&tight, thetas),
        wide_tvs: pairwise_tvs(&wide, thetas),
        tight_tv_closed_form: equal_variance_tv(gap, TIGHT_VARIANCE.sqrt()),
        wide_tv_closed_form: equal_variance_tv(gap, WIDE_VARIANCE.sqrt()),
        convention_note: CONVENTION_NOTE.to_string(),
        pairwise_deficiency_wide_to_tight: None,
    })
}

/// `δ(wide → tight)` for two means, on grids coarse enough for the dense LP.
pub fn wide_to_tight_deficiency(
    theta0: f64,
    theta1: f64,
    tight_grid: Grid,
    wide_grid: Grid,
) -> Result<PairwiseDeficiency> {
    let thetas = [theta0, theta1];
    check_coverage(&wide_grid, &thetas, WIDE_VARIANCE.sqrt())?;
    let tight = binned_gaussian_experiment(&GaussianFamily {
        thetas: thetas.to_vec(),
        variance: TIGHT_VARIANCE,
        grid: tight_grid,
    })?;
    let wide = binned_gaussian_experiment(&GaussianFamily {
        thetas: thetas.to_vec(),
        variance: WIDE_VARIANCE,
        grid: wide_grid,
    })?;
    let value = deficiency(&wide, &tight)?.value;
    let gap = theta1 - theta0;
    Ok(PairwiseDeficiency {
        value,
        contraction_lower_bound: 0.5
            * (tv_slices(tight.row(0), tight.row(1)) - tv_slices(wide.row(0), wide.row(1)))
                .max(0.0),
        continuous_lower_bound: 0.5
            * (equal_variance_tv(gap, TIGHT_VARIANCE.sqrt())
                - equal_variance_tv(gap, WIDE_VARIANCE.sqrt()))
            .max(0.0),
        tight_grid,
        wide_grid,
    })
}

/// Default coarse grids for [`wide_to_tight_deficiency`] around the means `0` and `0.1`.
pub fn default_deficiency_grids() -> (Grid, Grid) {
    (
        Grid::new(-0.7, 0.8, 0.025).expect("grid"),
        Grid::new(-6.0, 6.25, 0.25).expect("grid"),
    )
}

/// Mass-preserving rescaling `x ↦ c·x`: each bin goes to the bin holding `c` times its center.
pub fn scaling_map(grid: &Grid, c: f64) -> Result<DeterministicMap> {
    let n = grid.bins()?;
    let image = (0..n)
        .map(|k| {
            let x = c * grid.center(k);
            grid.locate(x).ok_or_else(|| {
                Error::GridOverflow(format!(
                    "c = {c} sends bin center {} to {x}, outside [{}, {})",
                    grid.center(k),
                    grid.lo,
                    grid.hi
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let labels = grid.labels();
    DeterministicMap::new(labels.clone(), labels, image)
}

#[derive(Clone, Debug, Serialize)]
pub struct CollapseRow {
    pub c: f64,
    pub invariance_error: f64,
    pub source_fidelity: f64,
    pub target_fidelity: f64,
}

/// For each `c`, the invariance error between `N(θ,1)` and `N(θ,σ²)` after `x ↦ c·x`,
/// and how much of each family the representation keeps.
///
/// Fidelities are `δ(E∘T_c, E)`: the deficiency of the representation relative to the
/// raw family.
pub fn invariance_collapse_sweep(
    sigma: f64,
    c_values: &[f64],
    grid: Grid,
    thetas: &[f64],
) -> Result<Vec<CollapseRow>> {
    if !(sigma > 1.0 && sigma.is_finite()) {
        return Err(Error::Invalid(format!("sigma {sigma} must exceed 1")));
    }
    if let Some(c) = c_values.iter().find(|c| !c.is_finite()) {
        return Err(Error::Invalid(format!("scale {c} is not finite")));
    }
    let source = binned_gaussian_experiment(&GaussianFamily {
        thetas: thetas.to_vec(),
        variance: 1.0,
        grid,
    })?;
    let target = binned_gaussian_experiment(&GaussianFamily {
        thetas: thetas.to_vec(),
        variance: sigma * sigma,
        grid,
    })?;
    let maps = c_values
        .iter()
        .map(|&c| scaling_map(&grid, c))
        .collect::<Result<Vec<_>>>()?;
    c_values
        .par_iter()
        .zip(maps)
        .map(|(&c, map)| {
            let k = map.to_kernel();
            let s = apply_kernel(&source, &k)?;
            let t = apply_kernel(&target, &k)?;
            let invariance_error = s
                .rows()
                .iter()
                .zip(t.rows())
                .map(|(a, b)| tv_slices(a, b))
                .fold(0.0, f64::max);
            Ok(CollapseRow {
                c,
                invariance_error,
                source_fidelity: deficiency(&s, &source)?.value,
                target_fidelity: deficiency(&t, &target)?.value,
            })
        })
        .collect()
}

/// Default sweep grid: `[−8, 8)` in steps of `0.8`, means `{−1, 0, 1}`.
pub fn default_collapse_grid() -> (Grid, Vec<f64>) {
    (Grid::new(-8.0, 8.0, 0.8).expect("grid"), vec![-1.0, 0.0, 1.0])
}

#[derive(Clone, Debug, Serialize)]
pub struct Ce1Report {
    pub grid: Grid,
    pub thetas: Vec<f64>,
    pub sufficiency_deviation: f64,
    #[serde(serialize_with = "crate::json::extended_real")]
    pub likelihood_distortion: f64,
}

/// Rounding `N(θ, 1)` down to integers, realized on a grid whose step divides 1.
pub fn counterexample1(grid: Grid, thetas: &[f64]) -> Result<Ce1Report> {
    ensure_two(thetas)?;
    let inv = 1.0 / grid.step;
    if (inv - inv.round()).abs() > 1e-9 || (grid.lo - grid.lo.round()).abs() > 1e-9 {
        return Err(Error::Invalid(
            "floor map needs an integer lower edge and a step dividing 1".into(),
        ));
    }
    let e = binned_gaussian_experiment(&GaussianFamily {
        thetas: thetas.to_vec(),
        variance: 1.0,
        grid,
    })?;
    let n = grid.bins()?;
    let floors: Vec<String> = (0..n)
        .map(|k| fmt_num((grid.center(k)).floor()))
        .collect();
    let mut units: Vec<String> = floors.clone();
    units.dedup();
    let units = Labels::new(units)?;
    let image = floors
        .iter()
        .map(|f| units.index_of(f).expect("unit label"))
        .collect();
    let map = DeterministicMap::new(e.outcomes().clone(), units, image)?;
    Ok(Ce1Report {
        grid,
        thetas: thetas.to_vec(),
        sufficiency_deviation: check_sufficiency(&e, &map)?.max_conditional_deviation,
        likelihood_distortion: likelihood_distortion(&e, &map)?,
    })
}
