//! Dense two-phase primal simplex for small linear programs.
//!
//! Solves `minimize c·x subject to A x {≤,=,≥} b, x ≥ 0`. Pivoting uses Dantzig's
//! rule and falls back to Bland's rule after a run of degenerate pivots, which rules
//! out cycling. Once the tableau terminates, the final basis is re-solved from the
//! original data with partial-pivot Gaussian elimination, and the duals are
//! recomputed from the same basis, so the returned point and its optimality
//! certificate do not inherit the rounding accumulated across pivots.

/// Constraint sense.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// One sparse constraint row.
#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// A linear program in `x ≥ 0` form.
#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    num_vars: usize,
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Largest constraint violation of the returned point.
    pub primal_residual: f64,
    /// Largest negative reduced cost under the recomputed duals (0 when dual feasible).
    pub dual_infeasibility: f64,
}

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-10;
const DEGENERATE_RUN: usize = 40;

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            num_vars,
            objective: vec![0.0; num_vars],
            constraints: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn set_objective(&mut self, var: usize, coeff: f64) {
        self.objective[var] = coeff;
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        debug_assert!(coeffs.iter().all(|&(j, _)| j < self.num_vars));
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn solve(&self) -> LpSolution {
        Simplex::build(self).run(self)
    }
}

struct Simplex {
    m: usize,
    /// structural + slack columns; artificials follow.
    n_real: usize,
    n_total: usize,
    width: usize,
    tableau: Vec<f64>,
    basis: Vec<usize>,
    active_row: Vec<bool>,
    /// Sign-normalized dense copy of `[A | slack]`, used for refinement.
    a_dense: Vec<Vec<f64>>,
    b: Vec<f64>,
    iterations: usize,
}

impl Simplex {
    fn build(lp: &LinearProgram) -> Simplex {
        let m = lp.constraints.len();
        let n = lp.num_vars;
        let mut rows: Vec<(Vec<(usize, f64)>, Relation, f64)> = lp
            .constraints
            .iter()
            .map(|c| {
                if c.rhs < 0.0 {
                    let flipped = match c.relation {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (c.coeffs.iter().map(|&(j, v)| (j, -v)).collect(), flipped, -c.rhs)
                } else {
                    (c.coeffs.clone(), c.relation, c.rhs)
                }
            })
            .collect();

        let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let n_real = n + n_slack;
        let n_total = n_real + n_art;
        let width = n_total + 1;
        let mut tableau = vec![0.0; m * width];
        let mut a_dense = vec![vec![0.0; n_real]; m];
        let mut b = vec![0.0; m];
        let mut basis = vec![0; m];
        let (mut next_slack, mut next_art) = (n, n_real);
        for (i, (coeffs, rel, rhs)) in rows.iter_mut().enumerate() {
            let row = &mut tableau[i * width..(i + 1) * width];
            for &(j, v) in coeffs.iter() {
                row[j] += v;
                a_dense[i][j] += v;
            }
            row[n_total] = *rhs;
            b[i] = *rhs;
            match rel {
                Relation::Le => {
                    row[next_slack] = 1.0;
                    a_dense[i][next_slack] = 1.0;
                    basis[i] = next_slack;
                    next_slack += 1;
                }
                Relation::Ge => {
                    row[next_slack] = -1.0;
                    a_dense[i][next_slack] = -1.0;
                    next_slack += 1;
                    row[next_art] = 1.0;
                    basis[i] = next_art;
                    next_art += 1;
                }
                Relation::Eq => {
                    row[next_art] = 1.0;
                    basis[i] = next_art;
                    next_art += 1;
                }
            }
        }
        Simplex {
            m,
            n_real,
            n_total,
            width,
            tableau,
            basis,
            active_row: vec![true; m],
            a_dense,
            b,
            iterations: 0,
        }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.tableau[i * self.width + j]
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        d.push(0.0);
        for i in 0..self.m {
            if !self.active_row[i] {
                continue;
            }
            let cb = cost[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.tableau[i * self.width..(i + 1) * self.width];
            for (dj, &t) in d.iter_mut().zip(row) {
                *dj -= cb * t;
            }
        }
        d
    }

    fn pivot(&mut self, r: usize, c: usize, d: &mut [f64]) {
        let w = self.width;
        let p = self.at(r, c);
        {
            let row = &mut self.tableau[r * w..(r + 1) * w];
            for v in row.iter_mut() {
                *v /= p;
            }
            row[c] = 1.0;
        }
        let pivot_row: Vec<f64> = self.tableau[r * w..(r + 1) * w].to_vec();
        let nz: Vec<usize> = (0..w).filter(|&j| pivot_row[j] != 0.0).collect();
        for i in 0..self.m {
            if i == r || !self.active_row[i] {
                continue;
            }
            let f = self.tableau[i * w + c];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.tableau[i * w..(i + 1) * w];
            for &j in &nz {
                row[j] -= f * pivot_row[j];
            }
            row[c] = 0.0;
        }
        let f = d[c];
        if f != 0.0 {
            for &j in &nz {
                d[j] -= f * pivot_row[j];
            }
            d[c] = 0.0;
        }
        self.basis[r] = c;
        self.iterations += 1;
    }

    /// Runs simplex iterations on the columns `0..limit`. Returns `false` if unbounded.
    ///
    /// Reduced costs are updated incrementally and rebuilt from `cost` every
    /// `REFRESH` pivots and before any unboundedness verdict. With `bounded` set the
    /// objective is known to be bounded, so a column without a pivot row is only
    /// rounding noise and is excluded instead.
    fn optimize(
        &mut self,
        d: &mut Vec<f64>,
        cost: &[f64],
        limit: usize,
        max_iter: usize,
        bounded: bool,
    ) -> Option<bool> {
        const REFRESH: usize = 64;
        let rhs = self.n_total;
        let mut degenerate = 0usize;
        let mut blocked = vec![false; limit];
        let mut fresh = false;
        let mut since_refresh = 0usize;
        loop {
            if self.iterations >= max_iter {
                return None;
            }
            if since_refresh >= REFRESH {
                *d = self.reduced_costs(cost);
                since_refresh = 0;
                fresh = true;
            }
            let bland = degenerate >= DEGENERATE_RUN;
            let mut enter = None;
            let mut best = -COST_TOL;
            for (j, &dj) in d.iter().enumerate().take(limit) {
                if blocked[j] {
                    continue;
                }
                if dj < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = dj;
                }
            }
            let Some(c) = enter else {
                return Some(true);
            };
            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for i in 0..self.m {
                if !self.active_row[i] {
                    continue;
                }
                let a = self.at(i, c);
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.at(i, rhs).max(0.0) / a;
                let better = match leave {
                    None => true,
                    Some(l) => {
                        if ratio < best_ratio - 1e-12 {
                            true
                        } else if ratio <= best_ratio + 1e-12 {
                            if bland {
                                self.basis[i] < self.basis[l]
                            } else {
                                a > self.at(l, c)
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    leave = Some(i);
                    best_ratio = best_ratio.min(ratio);
                }
            }
            let Some(r) = leave else {
                if !fresh {
                    *d = self.reduced_costs(cost);
                    since_refresh = 0;
                    fresh = true;
                    continue;
                }
                if bounded {
                    blocked[c] = true;
                    continue;
                }
                return Some(false);
            };
            if best_ratio <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, c, d);
            fresh = false;
            since_refresh += 1;
            blocked.iter_mut().for_each(|b| *b = false);
        }
    }

    fn run(mut self, lp: &LinearProgram) -> LpSolution {
        let max_iter = 50_000 + 50 * (self.m + self.n_total);
        let n = lp.num_vars;

        // Phase 1: minimize the sum of artificials.
        let mut cost1 = vec![0.0; self.n_total];
        for c in cost1.iter_mut().skip(self.n_real) {
            *c = 1.0;
        }
        let mut d = self.reduced_costs(&cost1);
        let scale = 1.0 + self.b.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        match self.optimize(&mut d, &cost1, self.n_total, max_iter, true) {
            None => return self.failed(LpStatus::IterationLimit, n),
            Some(false) => unreachable!("phase 1 objective is bounded below"),
            Some(true) => {}
        }
        d = self.reduced_costs(&cost1);
        let infeasibility = -d[self.n_total];
        if infeasibility > 1e-8 * scale {
            return self.failed(LpStatus::Infeasible, n);
        }

        // Drive remaining artificials out of the basis or drop redundant rows.
        for i in 0..self.m {
            if self.basis[i] < self.n_real {
                continue;
            }
            let col = (0..self.n_real)
                .filter(|&j| self.at(i, j).abs() > PIVOT_TOL)
                .max_by(|&a, &b| self.at(i, a).abs().total_cmp(&self.at(i, b).abs()));
            match col {
                Some(j) => self.pivot(i, j, &mut d),
                None => self.active_row[i] = false,
            }
        }

        // Phase 2 on the real columns only.
        let mut cost2 = vec![0.0; self.n_total];
        cost2[..n].copy_from_slice(&lp.objective);
        let mut d = self.reduced_costs(&cost2);
        match self.optimize(&mut d, &cost2, self.n_real, max_iter, false) {
            None => return self.failed(LpStatus::IterationLimit, n),
            Some(false) => return self.failed(LpStatus::Unbounded, n),
            Some(true) => {}
        }

        let mut x_real = vec![0.0; self.n_real];
        for i in 0..self.m {
            if self.active_row[i] {
                x_real[self.basis[i]] = self.at(i, self.n_total);
            }
        }
        let mut duals = None;
        if let Some((xb, y)) = self.refine(&cost2) {
            x_real.iter_mut().for_each(|v| *v = 0.0);
            let rows: Vec<usize> = (0..self.m).filter(|&i| self.active_row[i]).collect();
            for (k, &i) in rows.iter().enumerate() {
                x_real[self.basis[i]] = xb[k];
            }
            duals = Some((rows, y));
        }
        for v in x_real.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let x: Vec<f64> = x_real[..n].to_vec();
        let objective: f64 = x.iter().zip(&lp.objective).map(|(a, c)| a * c).sum();
        let primal_residual = lp
            .constraints
            .iter()
            .map(|c| {
                let lhs: f64 = c.coeffs.iter().map(|&(j, v)| v * x[j]).sum();
                match c.relation {
                    Relation::Le => (lhs - c.rhs).max(0.0),
                    Relation::Ge => (c.rhs - lhs).max(0.0),
                    Relation::Eq => (lhs - c.rhs).abs(),
                }
            })
            .fold(0.0, f64::max);
        let dual_infeasibility = match duals {
            Some((rows, y)) => (0..self.n_real)
                .map(|j| {
                    let dj = cost2[j]
                        - rows
                            .iter()
                            .zip(&y)
                            .map(|(&i, yi)| yi * self.a_dense[i][j])
                            .sum::<f64>();
                    (-dj).max(0.0)
                })
                .fold(0.0, f64::max),
            None => d[..self.n_real].iter().map(|&v| (-v).max(0.0)).fold(0.0, f64::max),
        };
        LpSolution {
            status: LpStatus::Optimal,
            x,
            objective,
            iterations: self.iterations,
            primal_residual,
            dual_infeasibility,
        }
    }

    /// Re-solves `B x_B = b` and `Bᵀ y = c_B` from the original data.
    fn refine(&self, cost: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        let rows: Vec<usize> = (0..self.m).filter(|&i| self.active_row[i]).collect();
        let k = rows.len();
        if k == 0 {
            return Some((Vec::new(), Vec::new()));
        }
        let cols: Vec<usize> = rows.iter().map(|&i| self.basis[i]).collect();
        let mut bmat = vec![vec![0.0; k]; k];
        for (r, &i) in rows.iter().enumerate() {
            for (c, &j) in cols.iter().enumerate() {
                bmat[r][c] = self.a_dense[i][j];
            }
        }
        let rhs: Vec<f64> = rows.iter().map(|&i| self.b[i]).collect();
        let xb = solve_dense(bmat.clone(), rhs)?;
        let mut bt = vec![vec![0.0; k]; k];
        for r in 0..k {
            for c in 0..k {
                bt[c][r] = bmat[r][c];
            }
        }
        let cb: Vec<f64> = cols.iter().map(|&j| cost[j]).collect();
        let y = solve_dense(bt, cb)?;
        Some((xb, y))
    }

    fn failed(&self, status: LpStatus, n: usize) -> LpSolution {
        LpSolution {
            status,
            x: vec![0.0; n],
            objective: f64::NAN,
            iterations: self.iterations,
            primal_residual: f64::NAN,
            dual_infeasibility: f64::NAN,
        }
    }
}

/// Gaussian elimination with partial pivoting. `None` if numerically singular.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-13 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let (top, bottom) = a.split_at_mut(col + 1);
        let prow = &top[col];
        for (off, row) in bottom.iter_mut().enumerate() {
            let f = row[col] / prow[col];
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                row[j] -= f * prow[j];
            }
            b[col + 1 + off] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}
