//! Exact Le Cam deficiency between finite experiments.
//!
//! `δ(E, F) = min_T max_θ TV(P_θ T, Q_θ)` is a finite linear program over the
//! row-stochastic matrices `T`; [`deficiency`] solves it with the dense simplex in
//! [`crate::lp`] and re-checks the returned witness directly. [`deficiency_bruteforce`]
//! is an independent grid search used to cross-validate the LP.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiment::{
    ensure_same_parameters, push_row, tv_slices, Distribution, Experiment, Kernel,
};
use crate::lp::{LinearProgram, LpStatus, Relation};

/// Tolerance for agreement between the LP objective and the witness's measured error.
pub const WITNESS_TOL: f64 = 1e-7;

/// `max_θ TV(P_θ T, Q_θ)`: how well `t` applied to `e` reproduces `f`.
pub fn kernel_simulation_error(e: &Experiment, f: &Experiment, t: &Kernel) -> Result<f64> {
    ensure_same_parameters(e, f)?;
    if t.from_outcomes() != e.outcomes() || t.to_outcomes() != f.outcomes() {
        return Err(Error::Dimension(format!(
            "kernel does not map `{}` outcomes onto `{}` outcomes",
            e.name(),
            f.name()
        )));
    }
    Ok(e.rows()
        .iter()
        .zip(f.rows())
        .map(|(p, q)| tv_slices(&push_row(p, t), q))
        .fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverStatus {
    Optimal,
    ToleranceLimited,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Direction {
    pub source: String,
    pub target: String,
}

/// Result of one directional deficiency computation.
#[derive(Clone, Debug, Serialize)]
pub struct DeficiencyReport {
    /// Optimal LP objective, clamped to `[0, 1]`.
    pub value: f64,
    pub witness: Kernel,
    pub direction: Direction,
    pub solver_status: SolverStatus,
    pub iterations: usize,
    /// `kernel_simulation_error(source, target, witness)`, measured independently of the LP.
    pub witness_error: f64,
    /// Largest negative reduced cost at the final basis.
    pub dual_infeasibility: f64,
}

/// Solves the deficiency LP `δ(e, f)`.
///
/// Variables are the kernel entries `T[x][y] ≥ 0` with unit row sums, slacks
/// `u[θ][y] ≥ |(P_θ T)_y − Q_θ(y)|`, and a bound `t ≥ ½ Σ_y u[θ][y]` for every θ; the
/// program minimizes `t`. Input outcomes that no `P_θ` charges and output outcomes
/// that no `Q_θ` charges are left out of the program: the former do not affect the
/// objective and moving mass off the latter never hurts. The witness sends the
/// omitted input rows to the first kept output outcome.
pub fn deficiency(e: &Experiment, f: &Experiment) -> Result<DeficiencyReport> {
    ensure_same_parameters(e, f)?;
    let n_theta = e.num_parameters();
    let xs: Vec<usize> = (0..e.num_outcomes())
        .filter(|&x| e.rows().iter().any(|r| r[x] > 0.0))
        .collect();
    let ys: Vec<usize> = (0..f.num_outcomes())
        .filter(|&y| f.rows().iter().any(|r| r[y] > 0.0))
        .collect();
    let (nx, ny) = (xs.len(), ys.len());
    let t_var = |i: usize, j: usize| i * ny + j;
    let u_var = |th: usize, j: usize| nx * ny + th * ny + j;
    let bound = nx * ny + n_theta * ny;

    let mut lp = LinearProgram::new(bound + 1);
    lp.set_objective(bound, 1.0);
    for i in 0..nx {
        lp.add_constraint((0..ny).map(|j| (t_var(i, j), 1.0)).collect(), Relation::Eq, 1.0);
    }
    for th in 0..n_theta {
        let p = e.row(th);
        let q = f.row(th);
        for (j, &y) in ys.iter().enumerate() {
            let mut plus: Vec<(usize, f64)> = xs
                .iter()
                .enumerate()
                .filter(|(_, &x)| p[x] > 0.0)
                .map(|(i, &x)| (t_var(i, j), p[x]))
                .collect();
            let mut minus: Vec<(usize, f64)> = plus.iter().map(|&(v, c)| (v, -c)).collect();
            plus.push((u_var(th, j), -1.0));
            minus.push((u_var(th, j), -1.0));
            lp.add_constraint(plus, Relation::Le, q[y]);
            lp.add_constraint(minus, Relation::Le, -q[y]);
        }
        let mut total: Vec<(usize, f64)> = (0..ny).map(|j| (u_var(th, j), 0.5)).collect();
        total.push((bound, -1.0));
        lp.add_constraint(total, Relation::Le, 0.0);
    }
    let sol = lp.solve();

    let direction = Direction {
        source: e.name().to_string(),
        target: f.name().to_string(),
    };
    if sol.status != LpStatus::Optimal {
        // Unreachable for well-formed input; fall back to the always-feasible constant kernel.
        let avg = average_row(f);
        let witness = Kernel::constant(e.outcomes(), &avg);
        let witness_error = kernel_simulation_error(e, f, &witness)?;
        return Ok(DeficiencyReport {
            value: witness_error,
            witness,
            direction,
            solver_status: SolverStatus::ToleranceLimited,
            iterations: sol.iterations,
            witness_error,
            dual_infeasibility: f64::NAN,
        });
    }

    let default_col = ys[0];
    let mut matrix = vec![vec![0.0; f.num_outcomes()]; e.num_outcomes()];
    for row in matrix.iter_mut() {
        row[default_col] = 1.0;
    }
    for (i, &x) in xs.iter().enumerate() {
        let mut row = vec![0.0; f.num_outcomes()];
        for (j, &y) in ys.iter().enumerate() {
            row[y] = sol.x[t_var(i, j)].max(0.0);
        }
        let s: f64 = row.iter().sum();
        for v in row.iter_mut() {
            *v /= s;
        }
        matrix[x] = row;
    }
    let witness =
        Kernel::from_parts_unchecked(e.outcomes().clone(), f.outcomes().clone(), matrix);
    let witness_error = kernel_simulation_error(e, f, &witness)?;
    let value = sol.objective.clamp(0.0, 1.0);
    let optimal = (witness_error - value).abs() <= WITNESS_TOL && sol.dual_infeasibility <= WITNESS_TOL;
    Ok(DeficiencyReport {
        value,
        witness,
        direction,
        solver_status: if optimal {
            SolverStatus::Optimal
        } else {
            SolverStatus::ToleranceLimited
        },
        iterations: sol.iterations,
        witness_error,
        dual_infeasibility: sol.dual_infeasibility,
    })
}

fn average_row(f: &Experiment) -> Distribution {
    let n = f.num_parameters() as f64;
    let mut avg = vec![0.0; f.num_outcomes()];
    for row in f.rows() {
        for (a, v) in avg.iter_mut().zip(row) {
            *a += v / n;
        }
    }
    let s: f64 = avg.iter().sum();
    avg.iter_mut().for_each(|v| *v /= s);
    Distribution::new(f.outcomes().clone(), avg).expect("average of distributions")
}

/// Both directional deficiencies and their maximum.
#[derive(Clone, Debug, Serialize)]
pub struct LeCamDistance {
    pub forward: DeficiencyReport,
    pub backward: DeficiencyReport,
    pub distance: f64,
}

pub fn lecam_distance(e: &Experiment, f: &Experiment) -> Result<LeCamDistance> {
    let forward = deficiency(e, f)?;
    let backward = deficiency(f, e)?;
    let distance = forward.value.max(backward.value);
    Ok(LeCamDistance {
        forward,
        backward,
        distance,
    })
}

/// Largest outcome count on either side accepted by [`deficiency_bruteforce`].
pub const BRUTEFORCE_MAX_OUTCOMES: usize = 3;

/// Grid points evaluated exhaustively before switching to the coarse-to-fine search.
const EXHAUSTIVE_BUDGET: usize = 3_000_000;

/// Result of the grid search: best value found and the kernel achieving it.
#[derive(Clone, Debug)]
pub struct GridSearch {
    pub value: f64,
    pub kernel: Kernel,
    /// Whether every grid kernel was evaluated.
    pub exhaustive: bool,
}

/// Minimum of [`kernel_simulation_error`] over kernels whose entries are multiples of
/// `resolution`, without any linear programming.
///
/// See [`deficiency_bruteforce_search`] for the search strategy.
pub fn deficiency_bruteforce(e: &Experiment, f: &Experiment, resolution: f64) -> Result<f64> {
    Ok(deficiency_bruteforce_search(e, f, resolution)?.value)
}

/// Grid search behind [`deficiency_bruteforce`].
///
/// When the grid has at most a few million kernels they are all enumerated, row by
/// row, and the exact grid minimum is returned. Finer grids are handled by
/// enumerating the finest divisor grid that fits the budget and then running a
/// full-neighbourhood descent (every row moved jointly by up to two grid steps) on
/// successively finer grids down to `resolution`. The objective is convex in `T`,
/// so descent from the coarse optimum does not get trapped away from the global
/// minimum; it can stop within a few grid steps of it.
/// The returned value is always the error of an actual kernel, hence an upper bound on δ.
pub fn deficiency_bruteforce_search(
    e: &Experiment,
    f: &Experiment,
    resolution: f64,
) -> Result<GridSearch> {
    ensure_same_parameters(e, f)?;
    if e.num_outcomes() > BRUTEFORCE_MAX_OUTCOMES || f.num_outcomes() > BRUTEFORCE_MAX_OUTCOMES {
        return Err(Error::Guard(format!(
            "grid oracle supports at most {BRUTEFORCE_MAX_OUTCOMES} outcomes per side, got {} and {}",
            e.num_outcomes(),
            f.num_outcomes()
        )));
    }
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(Error::Invalid(format!("resolution {resolution} not in (0, 1]")));
    }
    let steps = (1.0 / resolution).round() as usize;
    if ((steps as f64) * resolution - 1.0).abs() > 1e-9 {
        return Err(Error::Invalid(format!(
            "resolution {resolution} does not divide 1"
        )));
    }
    let grid = Grid::new(e, f);
    let count = |k: usize| compositions(k, grid.ny).len().saturating_pow(grid.nx as u32);

    let (counts, value, exhaustive) = if count(steps) <= EXHAUSTIVE_BUDGET {
        let (c, v) = grid.exhaustive(steps);
        (c, v, true)
    } else {
        let divisors: Vec<usize> = (1..=steps).filter(|&d| steps.is_multiple_of(d)).collect();
        let coarse = *divisors
            .iter()
            .rev()
            .find(|&&k| count(k) <= EXHAUSTIVE_BUDGET)
            .unwrap_or(&1);
        let (mut c, mut v) = grid.exhaustive(coarse);
        let mut current = coarse;
        // Refine by factors of at most 5 so each level starts within the move radius.
        let mut chain = Vec::new();
        let mut at = coarse;
        while at < steps {
            at = divisors
                .iter()
                .copied()
                .filter(|&k| k > at && k % at == 0 && k / at <= 5)
                .max()
                .unwrap_or(steps);
            chain.push(at);
        }
        for k in chain {
            let factor = k / current;
            for row in c.iter_mut() {
                for v in row.iter_mut() {
                    *v *= factor;
                }
            }
            current = k;
            let (nc, nv) = grid.descend(c, v, k);
            c = nc;
            v = nv;
        }
        // Descent can stall on a kink of the max; a second start near the continuous
        // minimum avoids that.
        let seed = grid.round(&grid.ellipsoid(), steps);
        let seed_value = grid.objective(&seed, steps);
        let (sc, sv) = grid.descend(seed, seed_value, steps);
        if sv < v {
            c = sc;
            v = sv;
        }
        (c, v, false)
    };
    let matrix: Vec<Vec<f64>> = grid.expand(&counts, steps, e.num_outcomes(), f.num_outcomes());
    let kernel = Kernel::new(e.outcomes().clone(), f.outcomes().clone(), matrix)?;
    Ok(GridSearch {
        value,
        kernel,
        exhaustive,
    })
}

/// All vectors of `parts` non-negative integers summing to `total`.
fn push(p: &[f64], t: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; t[0].len()];
    for (px, row) in p.iter().zip(t) {
        for (o, v) in out.iter_mut().zip(row) {
            *o += px * v;
        }
    }
    out
}

fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(total: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=total {
            prefix.push(k);
            rec(total - k, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(total, parts, &mut Vec::new(), &mut out);
    out
}

struct Grid<'a> {
    e: &'a Experiment,
    f: &'a Experiment,
    nx: usize,
    ny: usize,
}

impl<'a> Grid<'a> {
    fn new(e: &'a Experiment, f: &'a Experiment) -> Self {
        Grid {
            e,
            f,
            nx: e.num_outcomes(),
            ny: f.num_outcomes(),
        }
    }

    fn objective(&self, counts: &[Vec<usize>], steps: usize) -> f64 {
        let k = steps as f64;
        let mut worst = 0.0f64;
        for (p, q) in self.e.rows().iter().zip(self.f.rows()) {
            let mut tv = 0.0;
            for (y, qy) in q.iter().enumerate() {
                let pushed: f64 = (0..self.nx).map(|x| p[x] * counts[x][y] as f64 / k).sum();
                tv += (pushed - qy).abs();
            }
            worst = worst.max(0.5 * tv);
        }
        worst
    }

    fn exhaustive(&self, steps: usize) -> (Vec<Vec<usize>>, f64) {
        let rows = compositions(steps, self.ny);
        let n_theta = self.e.num_parameters();
        // contribution[x][g] = P_θ(x) · g / steps, flattened over (θ, y)
        let contribution: Vec<Vec<Vec<f64>>> = (0..self.nx)
            .map(|x| {
                rows.iter()
                    .map(|g| {
                        let mut c = Vec::with_capacity(n_theta * self.ny);
                        for th in 0..n_theta {
                            for &gy in g {
                                c.push(self.e.row(th)[x] * gy as f64 / steps as f64);
                            }
                        }
                        c
                    })
                    .collect()
            })
            .collect();
        let targets: Vec<f64> = self.f.rows().iter().flatten().copied().collect();
        let mut best = (vec![0usize; self.nx], f64::INFINITY);
        let mut choice = vec![0usize; self.nx];
        let mut acc = vec![vec![0.0; n_theta * self.ny]; self.nx + 1];
        self.enumerate(0, &contribution, &targets, &mut acc, &mut choice, &mut best);
        let counts = best.0.iter().map(|&g| rows[g].clone()).collect();
        (counts, best.1)
    }

    fn enumerate(
        &self,
        x: usize,
        contribution: &[Vec<Vec<f64>>],
        targets: &[f64],
        acc: &mut [Vec<f64>],
        choice: &mut [usize],
        best: &mut (Vec<usize>, f64),
    ) {
        if x == self.nx {
            let sums = &acc[x];
            let mut worst = 0.0f64;
            for (s, q) in sums.chunks(self.ny).zip(targets.chunks(self.ny)) {
                let tv: f64 = s.iter().zip(q).map(|(a, b)| (a - b).abs()).sum();
                worst = worst.max(0.5 * tv);
            }
            if worst < best.1 {
                *best = (choice.to_vec(), worst);
            }
            return;
        }
        for (g, c) in contribution[x].iter().enumerate() {
            let (head, tail) = acc.split_at_mut(x + 1);
            for ((dst, src), add) in tail[0].iter_mut().zip(&head[x]).zip(c) {
                *dst = src + add;
            }
            choice[x] = g;
            self.enumerate(x + 1, contribution, targets, acc, choice, best);
        }
    }

    /// Steepest descent over joint moves of every row by at most two grid steps.
    fn descend(
        &self,
        mut counts: Vec<Vec<usize>>,
        mut value: f64,
        steps: usize,
    ) -> (Vec<Vec<usize>>, f64) {
        const RADIUS: i64 = 2;
        let moves = row_moves(self.ny, RADIUS);
        value = value.min(self.objective(&counts, steps));
        loop {
            let mut best: Option<(Vec<Vec<usize>>, f64)> = None;
            let mut idx = vec![0usize; self.nx];
            'outer: loop {
                let candidate: Option<Vec<Vec<usize>>> = counts
                    .iter()
                    .zip(&idx)
                    .map(|(row, &m)| {
                        row.iter()
                            .zip(&moves[m])
                            .map(|(&c, &d)| usize::try_from(c as i64 + d).ok())
                            .collect::<Option<Vec<usize>>>()
                    })
                    .collect();
                if let Some(cand) = candidate {
                    let v = self.objective(&cand, steps);
                    if v < best.as_ref().map_or(value - 1e-15, |b| b.1) {
                        best = Some((cand, v));
                    }
                }
                for slot in idx.iter_mut() {
                    *slot += 1;
                    if *slot < moves.len() {
                        continue 'outer;
                    }
                    *slot = 0;
                }
                break;
            }
            match best {
                Some((c, v)) => {
                    counts = c;
                    value = v;
                }
                None => return (counts, value),
            }
        }
    }

    /// Central-cut ellipsoid minimization over the free kernel entries (all but the
    /// last column). Returns the best feasible kernel seen.
    fn ellipsoid(&self) -> Vec<Vec<f64>> {
        let (nx, ny) = (self.nx, self.ny);
        let d = nx * (ny - 1);
        let kernel = |z: &[f64]| -> Vec<Vec<f64>> {
            (0..nx)
                .map(|x| {
                    let free = &z[x * (ny - 1)..(x + 1) * (ny - 1)];
                    let mut row = free.to_vec();
                    row.push(1.0 - free.iter().sum::<f64>());
                    row
                })
                .collect()
        };
        let mut z = vec![1.0 / ny as f64; d];
        let mut shape: Vec<Vec<f64>> = (0..d)
            .map(|i| (0..d).map(|j| if i == j { d as f64 } else { 0.0 }).collect())
            .collect();
        let mut best = (kernel(&z), f64::INFINITY);
        let dd = d as f64;
        for _ in 0..400 * d * d {
            let mut g = vec![0.0; d];
            let t = kernel(&z);
            if let Some(x) = (0..nx).find(|&x| t[x].iter().any(|&v| v < 0.0)) {
                // Feasibility cut on the most violated entry of row x.
                let (y, _) = t[x]
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.total_cmp(b.1))
                    .expect("row");
                if y + 1 < ny {
                    g[x * (ny - 1) + y] = -1.0;
                } else {
                    g[x * (ny - 1)..(x + 1) * (ny - 1)].fill(1.0);
                }
            } else {
                let (value, theta) = self
                    .e
                    .rows()
                    .iter()
                    .zip(self.f.rows())
                    .enumerate()
                    .map(|(th, (p, q))| (tv_slices(&push(p, &t), q), th))
                    .max_by(|a, b| a.0.total_cmp(&b.0))
                    .expect("parameters");
                if value < best.1 {
                    best = (t.clone(), value);
                }
                let p = self.e.row(theta);
                let pushed = push(p, &t);
                let sign: Vec<f64> = pushed
                    .iter()
                    .zip(self.f.row(theta))
                    .map(|(a, b)| if a > b { 1.0 } else if a < b { -1.0 } else { 0.0 })
                    .collect();
                for x in 0..nx {
                    for y in 0..ny - 1 {
                        g[x * (ny - 1) + y] = 0.5 * p[x] * (sign[y] - sign[ny - 1]);
                    }
                }
            }
            let pg: Vec<f64> = shape
                .iter()
                .map(|r| r.iter().zip(&g).map(|(a, b)| a * b).sum())
                .collect();
            let gpg: f64 = g.iter().zip(&pg).map(|(a, b)| a * b).sum();
            if !(gpg > 1e-30) {
                break;
            }
            let norm = gpg.sqrt();
            for i in 0..d {
                z[i] -= pg[i] / ((dd + 1.0) * norm);
            }
            let scale = dd * dd / (dd * dd - 1.0);
            for i in 0..d {
                for j in 0..d {
                    shape[i][j] = scale * (shape[i][j] - 2.0 / (dd + 1.0) * pg[i] * pg[j] / gpg);
                }
            }
        }
        best.0
    }

    /// Nearest grid kernel by largest-remainder rounding of each row.
    fn round(&self, t: &[Vec<f64>], steps: usize) -> Vec<Vec<usize>> {
        t.iter()
            .map(|row| {
                let scaled: Vec<f64> = row.iter().map(|v| v.max(0.0) * steps as f64).collect();
                let mut counts: Vec<usize> = scaled.iter().map(|v| v.floor() as usize).collect();
                let mut order: Vec<usize> = (0..row.len()).collect();
                order.sort_by(|&a, &b| {
                    (scaled[b] - scaled[b].floor()).total_cmp(&(scaled[a] - scaled[a].floor()))
                });
                let mut total: usize = counts.iter().sum();
                for &y in order.iter().cycle() {
                    if total == steps {
                        break;
                    }
                    if total < steps {
                        counts[y] += 1;
                        total += 1;
                    } else if counts[y] > 0 {
                        counts[y] -= 1;
                        total -= 1;
                    }
                }
                counts
            })
            .collect()
    }

    fn expand(&self, counts: &[Vec<usize>], steps: usize, nx: usize, ny: usize) -> Vec<Vec<f64>> {
        (0..nx)
            .map(|x| (0..ny).map(|y| counts[x][y] as f64 / steps as f64).collect())
            .collect()
    }
}

/// Integer vectors of length `n` summing to zero with entries in `[-r, r]`.
fn row_moves(n: usize, r: i64) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p| {
                (-r..=r).map(move |d| {
                    let mut q = p.clone();
                    q.push(d);
                    q
                })
            })
            .collect();
    }
    out.retain(|v| v.iter().sum::<i64>() == 0);
    out
}

/// Binary (two-parameter) deficiency next to the testing-distance expressions.
#[derive(Clone, Debug, Serialize)]
pub struct BinaryDiagnostic {
    pub theta0: String,
    pub theta1: String,
    /// LP deficiency of the restricted pair, source to target.
    pub lp_value: f64,
    pub tv_source: f64,
    pub tv_target: f64,
    /// `½ |TV_source − TV_target|`, reported for comparison only.
    pub half_tv_gap: f64,
    /// `½ max(0, TV_target − TV_source)`, a valid lower bound on `lp_value`.
    pub contraction_lower_bound: f64,
}

pub fn binary_deficiency_diag(
    e: &Experiment,
    f: &Experiment,
    theta0: &str,
    theta1: &str,
) -> Result<BinaryDiagnostic> {
    ensure_same_parameters(e, f)?;
    let idx = e.parameter_indices(&[theta0, theta1])?;
    let es = e.restrict(&idx)?;
    let fs = f.restrict(&idx)?;
    let lp_value = deficiency(&es, &fs)?.value;
    let tv_source = tv_slices(es.row(0), es.row(1));
    let tv_target = tv_slices(fs.row(0), fs.row(1));
    Ok(BinaryDiagnostic {
        theta0: theta0.to_string(),
        theta1: theta1.to_string(),
        lp_value,
        tv_source,
        tv_target,
        half_tv_gap: 0.5 * (tv_source - tv_target).abs(),
        contraction_lower_bound: 0.5 * (tv_target - tv_source).max(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{apply_kernel, DeterministicMap, Labels};

    fn sharp() -> Experiment {
        Experiment::from_rows("sharp", &["0", "1"], &["0", "1"], vec![vec![1.0, 0.0], vec![0.0, 1.0]])
            .unwrap()
    }

    fn garbled() -> Experiment {
        Experiment::from_rows(
            "garbled",
            &["0", "1"],
            &["0", "1"],
            vec![vec![0.9, 0.1], vec![0.1, 0.9]],
        )
        .unwrap()
    }

    fn ce2() -> (Experiment, Experiment, Kernel) {
        let p = Experiment::from_rows(
            "P",
            &["0", "1"],
            &["a", "b", "c"],
            vec![vec![0.5, 0.4, 0.1], vec![0.1, 0.4, 0.5]],
        )
        .unwrap();
        let t = DeterministicMap::from_pairs(
            p.outcomes().clone(),
            Labels::new(["0", "1"]).unwrap(),
            &[("a", "0"), ("b", "0"), ("c", "1")],
        )
        .unwrap()
        .to_kernel();
        let q = apply_kernel(&p, &t).unwrap().with_name("Q");
        (p, q, t)
    }

    #[test]
    fn simulation_error_examples() {
        let (p, q, t) = ce2();
        assert!(kernel_simulation_error(&p, &q, &t).unwrap() < 1e-15);
        let s = sharp();
        let half = Distribution::new(s.outcomes().clone(), vec![0.5, 0.5]).unwrap();
        let k = Kernel::constant(s.outcomes(), &half);
        assert!((kernel_simulation_error(&s, &s, &k).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn simulation_error_rejects_mismatch() {
        let (p, _, t) = ce2();
        let other = Experiment::from_rows("o", &["x", "y"], &["0", "1"], vec![vec![1.0, 0.0]; 2])
            .unwrap();
        assert!(matches!(
            kernel_simulation_error(&p, &other, &t),
            Err(Error::ParameterMismatch(_))
        ));
        assert!(matches!(
            kernel_simulation_error(&p, &p, &t),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn reflexive_and_ce2_forward() {
        let (p, q, _) = ce2();
        let r = deficiency(&p, &p).unwrap();
        assert!(r.value <= 1e-9);
        assert_eq!(r.solver_status, SolverStatus::Optimal);
        let r = deficiency(&p, &q).unwrap();
        assert!(r.value <= 1e-9, "{}", r.value);
        assert!(r.witness_error <= 1e-9);
    }

    #[test]
    fn garbled_to_sharp_is_one_tenth() {
        // Frozen from the grid oracle at step 0.001 (exhaustive on 2×2 kernels).
        let oracle = deficiency_bruteforce_search(&garbled(), &sharp(), 0.001).unwrap();
        assert!(oracle.exhaustive);
        assert!((oracle.value - 0.1).abs() < 1e-12);
        let r = deficiency(&garbled(), &sharp()).unwrap();
        assert!((r.value - 0.1).abs() < 1e-9);
        assert!((r.witness_error - r.value).abs() < WITNESS_TOL);
    }

    #[test]
    fn lecam_distance_sharp_vs_garbled() {
        let d = lecam_distance(&sharp(), &garbled()).unwrap();
        assert!(d.forward.value < 1e-9);
        assert!((d.backward.value - 0.1).abs() < 1e-9);
        assert!((d.distance - 0.1).abs() < 1e-9);
        let same = lecam_distance(&sharp(), &sharp()).unwrap();
        assert!(same.distance < 1e-9);
    }

    #[test]
    fn ce2_reverse_matches_oracle() {
        let (p, q, _) = ce2();
        let lp = deficiency(&q, &p).unwrap().value;
        let grid = deficiency_bruteforce(&q, &p, 0.001).unwrap();
        assert!(lp > 0.01, "Q cannot reproduce P exactly");
        assert!(grid >= lp - 1e-9 && grid - lp <= 0.005, "lp {lp} grid {grid}");
    }

    #[test]
    fn bruteforce_examples_and_guard() {
        let (p, q, _) = ce2();
        assert_eq!(deficiency_bruteforce(&p, &p, 0.1).unwrap(), 0.0);
        assert!(deficiency_bruteforce(&p, &q, 0.01).unwrap() <= 0.02);
        let big = Experiment::from_rows("b", &["0", "1"], &["a", "b", "c", "d"], vec![vec![0.25; 4]; 2])
            .unwrap();
        assert!(matches!(deficiency_bruteforce(&big, &big, 0.1), Err(Error::Guard(_))));
        assert!(deficiency_bruteforce(&p, &p, 0.3).is_err());
    }

    #[test]
    fn single_parameter_case() {
        let e = Experiment::from_rows("e", &["0"], &["a", "b"], vec![vec![0.2, 0.8]]).unwrap();
        let f = Experiment::from_rows("f", &["0"], &["x", "y", "z"], vec![vec![0.1, 0.3, 0.6]])
            .unwrap();
        assert!(deficiency(&e, &f).unwrap().value < 1e-9);
    }

    #[test]
    fn zero_mass_outcomes_are_kept_in_witness() {
        let e = Experiment::from_rows(
            "e",
            &["0", "1"],
            &["a", "b", "never"],
            vec![vec![0.5, 0.5, 0.0], vec![0.2, 0.8, 0.0]],
        )
        .unwrap();
        let r = deficiency(&e, &e).unwrap();
        assert_eq!(r.witness.matrix().len(), 3);
        assert!(r.value < 1e-9);
    }

    #[test]
    fn binary_diag_examples() {
        let (p, q, _) = ce2();
        let d = binary_deficiency_diag(&p, &q, "0", "1").unwrap();
        assert!(d.lp_value < 1e-9);
        assert!((d.tv_source - 0.4).abs() < 1e-12 && (d.tv_target - 0.4).abs() < 1e-12);
        assert!(d.half_tv_gap < 1e-12 && d.contraction_lower_bound < 1e-12);

        let d = binary_deficiency_diag(&garbled(), &sharp(), "0", "1").unwrap();
        assert!((d.lp_value - 0.1).abs() < 1e-9);
        assert!((d.half_tv_gap - 0.1).abs() < 1e-12);
        assert!((d.contraction_lower_bound - 0.1).abs() < 1e-12);
        assert!(matches!(
            binary_deficiency_diag(&p, &q, "0", "9"),
            Err(Error::UnknownLabel(_))
        ));
    }

    #[test]
    fn compositions_and_moves() {
        assert_eq!(compositions(2, 2), vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
        assert_eq!(compositions(10, 3).len(), 66);
        assert_eq!(row_moves(3, 2).len(), 19);
    }
}
