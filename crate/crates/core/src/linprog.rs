//! Dense linear programming via two-phase primal simplex.
//!
//! Bland's rule everywhere: entering column is the lowest index with an
//! improving reduced cost, leaving row breaks ratio ties by lowest basic
//! variable index. That trades speed for guaranteed termination and a
//! deterministic pivot sequence, which the decomposition code relies on
//! for reproducibility. Problem sizes here are desk scale.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// `sense` over `objective . x` subject to `a_ub x <= b_ub`,
/// `a_eq x = b_eq`, and per-variable bounds (entries may be infinite).
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub a_ub: Vec<Vec<f64>>,
    pub b_ub: Vec<f64>,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
    pub bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    /// A minimization problem with all variables free.
    pub fn minimize(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            sense: Sense::Minimize,
            objective,
            a_ub: Vec::new(),
            b_ub: Vec::new(),
            a_eq: Vec::new(),
            b_eq: Vec::new(),
            bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); n],
        }
    }

    pub fn maximize(objective: Vec<f64>) -> Self {
        Self {
            sense: Sense::Maximize,
            ..Self::minimize(objective)
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_ub(&mut self, row: Vec<f64>, rhs: f64) {
        debug_assert_eq!(row.len(), self.num_vars());
        self.a_ub.push(row);
        self.b_ub.push(rhs);
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) {
        debug_assert_eq!(row.len(), self.num_vars());
        self.a_eq.push(row);
        self.b_eq.push(rhs);
    }

    /// Largest absolute constraint violation of `x` (bounds included).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut v: f64 = 0.0;
        for (row, &b) in self.a_ub.iter().zip(&self.b_ub) {
            let lhs: f64 = row.iter().zip(x).map(|(a, xi)| a * xi).sum();
            v = v.max(lhs - b);
        }
        for (row, &b) in self.a_eq.iter().zip(&self.b_eq) {
            let lhs: f64 = row.iter().zip(x).map(|(a, xi)| a * xi).sum();
            v = v.max((lhs - b).abs());
        }
        for (i, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_finite() {
                v = v.max(lo - x[i]);
            }
            if hi.is_finite() {
                v = v.max(x[i] - hi);
            }
        }
        v
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.bounds.len() != n {
            return Err(Error::MalformedLp(format!(
                "{} bounds for {n} variables",
                self.bounds.len()
            )));
        }
        if self.a_ub.len() != self.b_ub.len() || self.a_eq.len() != self.b_eq.len() {
            return Err(Error::MalformedLp("row/rhs count mismatch".into()));
        }
        for row in self.a_ub.iter().chain(&self.a_eq) {
            if row.len() != n {
                return Err(Error::MalformedLp(format!(
                    "row with {} coefficients for {n} variables",
                    row.len()
                )));
            }
            if row.iter().any(|a| !a.is_finite()) {
                return Err(Error::MalformedLp("non-finite coefficient".into()));
            }
        }
        if self.objective.iter().any(|c| !c.is_finite())
            || self.b_ub.iter().any(|b| !b.is_finite())
            || self.b_eq.iter().any(|b| !b.is_finite())
        {
            return Err(Error::MalformedLp("non-finite data".into()));
        }
        for &(lo, hi) in &self.bounds {
            if lo.is_nan() || hi.is_nan() {
                return Err(Error::MalformedLp("NaN bound".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Reduced costs and pivot elements below this are treated as zero.
    pub pivot_tol: f64,
    /// Phase-1 residual above this means infeasible.
    pub feas_tol: f64,
    pub max_pivots: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            pivot_tol: 1e-9,
            feas_tol: 1e-7,
            max_pivots: 2_000_000,
        }
    }
}

pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    solve_with(lp, SimplexOptions::default())
}

/// How an original variable maps onto the standard-form columns.
#[derive(Clone, Copy)]
enum VarMap {
    /// x = lo + y
    Shift { col: usize, lo: f64 },
    /// x = hi - y
    Mirror { col: usize, hi: f64 },
    /// x = y_pos - y_neg
    Split { pos: usize, neg: usize },
}

pub fn solve_with(lp: &LinearProgram, opts: SimplexOptions) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.num_vars();

    // Map variables to nonnegative standard-form columns.
    let mut maps = Vec::with_capacity(n);
    let mut cols = 0usize;
    for &(lo, hi) in &lp.bounds {
        if lo > hi {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: vec![0.0; n],
                objective: 0.0,
            });
        }
        let m = if lo.is_finite() {
            let m = VarMap::Shift { col: cols, lo };
            cols += 1;
            m
        } else if hi.is_finite() {
            let m = VarMap::Mirror { col: cols, hi };
            cols += 1;
            m
        } else {
            let m = VarMap::Split {
                pos: cols,
                neg: cols + 1,
            };
            cols += 2;
            m
        };
        maps.push(m);
    }

    // Rows: (coefficients over standard columns, rhs, is_equality).
    let mut rows: Vec<(Vec<f64>, f64, bool)> = Vec::new();
    let mut push_row = |coeffs: &[f64], rhs: f64, eq: bool, maps: &[VarMap]| {
        let mut row = vec![0.0; cols];
        let mut b = rhs;
        for (k, &a) in coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            match maps[k] {
                VarMap::Shift { col, lo } => {
                    row[col] += a;
                    b -= a * lo;
                }
                VarMap::Mirror { col, hi } => {
                    row[col] -= a;
                    b -= a * hi;
                }
                VarMap::Split { pos, neg } => {
                    row[pos] += a;
                    row[neg] -= a;
                }
            }
        }
        rows.push((row, b, eq));
    };
    for (row, &b) in lp.a_ub.iter().zip(&lp.b_ub) {
        push_row(row, b, false, &maps);
    }
    // Finite upper bounds of shifted variables become explicit rows.
    for (k, &(lo, hi)) in lp.bounds.iter().enumerate() {
        if lo.is_finite() && hi.is_finite() {
            let mut coeffs = vec![0.0; n];
            coeffs[k] = 1.0;
            push_row(&coeffs, hi, false, &maps);
        }
    }
    for (row, &b) in lp.a_eq.iter().zip(&lp.b_eq) {
        push_row(row, b, true, &maps);
    }

    // Objective over standard columns (constant offset from shifts).
    let sign = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut cost = vec![0.0; cols];
    for (k, &c) in lp.objective.iter().enumerate() {
        let c = c * sign;
        match maps[k] {
            VarMap::Shift { col, .. } => cost[col] += c,
            VarMap::Mirror { col, .. } => cost[col] -= c,
            VarMap::Split { pos, neg } => {
                cost[pos] += c;
                cost[neg] -= c;
            }
        }
    }

    let mut tableau = Tableau::build(rows, cols, opts);
    let status = tableau.run_two_phase(&cost)?;
    if status != LpStatus::Optimal {
        return Ok(LpSolution {
            status,
            x: vec![0.0; n],
            objective: 0.0,
        });
    }
    let y = tableau.primal_values();
    let mut x = vec![0.0; n];
    for (k, m) in maps.iter().enumerate() {
        x[k] = match *m {
            VarMap::Shift { col, lo } => lo + y[col],
            VarMap::Mirror { col, hi } => hi - y[col],
            VarMap::Split { pos, neg } => y[pos] - y[neg],
        };
    }
    let objective = lp.objective.iter().zip(&x).map(|(c, xi)| c * xi).sum();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective,
    })
}

struct Tableau {
    // rows x (total columns + rhs), row-major.
    a: Vec<f64>,
    m: usize,
    structural: usize,
    slacks: usize,
    artificials: usize,
    basis: Vec<usize>,
    opts: SimplexOptions,
}

impl Tableau {
    fn width(&self) -> usize {
        self.structural + self.slacks + self.artificials + 1
    }

    fn rhs_col(&self) -> usize {
        self.structural + self.slacks + self.artificials
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.width() + c]
    }

    fn build(rows: Vec<(Vec<f64>, f64, bool)>, structural: usize, opts: SimplexOptions) -> Self {
        let m = rows.len();
        let slacks = rows.iter().filter(|(_, _, eq)| !eq).count();
        // Every row gets an artificial; unnecessary ones just start
        // nonbasic when the slack can serve as the identity column.
        let artificials = m;
        let width = structural + slacks + artificials + 1;
        let mut a = vec![0.0; m * width];
        let mut basis = vec![0usize; m];
        let mut slack_idx = 0usize;
        for (r, (row, mut b, eq)) in rows.into_iter().enumerate() {
            let mut coeffs = row;
            let mut slack_coeff = 0.0;
            if !eq {
                slack_coeff = 1.0;
            }
            let flip = b < 0.0;
            if flip {
                for c in coeffs.iter_mut() {
                    *c = -*c;
                }
                slack_coeff = -slack_coeff;
                b = -b;
            }
            let off = r * width;
            a[off..off + structural].copy_from_slice(&coeffs);
            let mut basic = None;
            if !eq {
                a[off + structural + slack_idx] = slack_coeff;
                if slack_coeff > 0.0 {
                    basic = Some(structural + slack_idx);
                }
                slack_idx += 1;
            }
            let art_col = structural + slacks + r;
            a[off + art_col] = 1.0;
            a[off + structural + slacks + artificials] = b;
            basis[r] = basic.unwrap_or(art_col);
        }
        Self {
            a,
            m,
            structural,
            slacks,
            artificials,
            basis,
            opts,
        }
    }

    fn is_artificial(&self, col: usize) -> bool {
        col >= self.structural + self.slacks && col < self.rhs_col()
    }

    /// Reduced-cost row for the given column costs, priced out against the
    /// current basis.
    fn priced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let width = self.width();
        let mut z = vec![0.0; width];
        z[..cost.len()].copy_from_slice(cost);
        for r in 0..self.m {
            let cb = if self.basis[r] < cost.len() {
                cost[self.basis[r]]
            } else {
                0.0
            };
            if cb == 0.0 {
                continue;
            }
            for c in 0..width {
                z[c] -= cb * self.a[r * width + c];
            }
        }
        z
    }

    fn pivot(&mut self, row: usize, col: usize, z: &mut [f64]) {
        let width = self.width();
        let pivot = self.a[row * width + col];
        let inv = 1.0 / pivot;
        for c in 0..width {
            self.a[row * width + c] *= inv;
        }
        self.a[row * width + col] = 1.0;
        for r in 0..self.m {
            if r == row {
                continue;
            }
            let factor = self.a[r * width + col];
            if factor == 0.0 {
                continue;
            }
            for c in 0..width {
                self.a[r * width + c] -= factor * self.a[row * width + c];
            }
            self.a[r * width + col] = 0.0;
        }
        let factor = z[col];
        if factor != 0.0 {
            for c in 0..width {
                z[c] -= factor * self.a[row * width + c];
            }
            z[col] = 0.0;
        }
        self.basis[row] = col;
    }

    /// Bland-rule simplex on the current tableau. `allowed` bounds the
    /// columns eligible to enter.
    fn iterate(&mut self, z: &mut [f64], allowed: usize) -> Result<LpStatus> {
        let rhs = self.rhs_col();
        for _ in 0..self.opts.max_pivots {
            // Entering: lowest-index column with improving reduced cost.
            let mut entering = None;
            for c in 0..allowed {
                if z[c] < -self.opts.pivot_tol {
                    entering = Some(c);
                    break;
                }
            }
            let Some(col) = entering else {
                return Ok(LpStatus::Optimal);
            };
            // Leaving: minimum ratio, ties by lowest basic variable index.
            let mut leaving: Option<(usize, f64)> = None;
            for r in 0..self.m {
                let a = self.at(r, col);
                if a > self.opts.pivot_tol {
                    let ratio = self.at(r, rhs) / a;
                    match leaving {
                        None => leaving = Some((r, ratio)),
                        Some((best_r, best)) => {
                            if ratio < best - self.opts.pivot_tol
                                || ((ratio - best).abs() <= self.opts.pivot_tol
                                    && self.basis[r] < self.basis[best_r])
                            {
                                leaving = Some((r, ratio));
                            }
                        }
                    }
                }
            }
            let Some((row, _)) = leaving else {
                return Ok(LpStatus::Unbounded);
            };
            self.pivot(row, col, z);
        }
        Err(Error::LpFailure(format!(
            "pivot limit {} exceeded",
            self.opts.max_pivots
        )))
    }

    fn run_two_phase(&mut self, cost: &[f64]) -> Result<LpStatus> {
        // Phase 1: minimize the sum of artificials.
        let mut phase1_cost = vec![0.0; self.rhs_col()];
        for c in self.structural + self.slacks..self.rhs_col() {
            phase1_cost[c] = 1.0;
        }
        let mut z = self.priced_costs(&phase1_cost);
        let status = self.iterate(&mut z, self.rhs_col())?;
        if status != LpStatus::Optimal {
            // Phase 1 is always bounded below by zero.
            return Err(Error::LpFailure("phase 1 reported unbounded".into()));
        }
        let residual: f64 = (0..self.m)
            .filter(|&r| self.is_artificial(self.basis[r]))
            .map(|r| self.at(r, self.rhs_col()))
            .sum();
        if residual > self.opts.feas_tol {
            return Ok(LpStatus::Infeasible);
        }
        // Drive remaining artificials out of the basis where possible.
        let non_artificial = self.structural + self.slacks;
        for r in 0..self.m {
            if !self.is_artificial(self.basis[r]) {
                continue;
            }
            let mut pivot_col = None;
            for c in 0..non_artificial {
                if self.at(r, c).abs() > self.opts.pivot_tol {
                    pivot_col = Some(c);
                    break;
                }
            }
            if let Some(col) = pivot_col {
                self.pivot(r, col, &mut z);
            }
            // Otherwise the row is redundant; its artificial stays basic
            // at (numerical) zero and never re-enters.
        }
        // Phase 2 on the real costs; artificial columns are not eligible.
        let mut phase2_cost = vec![0.0; self.rhs_col()];
        phase2_cost[..cost.len()].copy_from_slice(cost);
        let mut z = self.priced_costs(&phase2_cost);
        self.iterate(&mut z, self.structural + self.slacks)
    }

    fn primal_values(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.structural];
        for r in 0..self.m {
            if self.basis[r] < self.structural {
                y[self.basis[r]] = self.at(r, self.rhs_col());
            }
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_box_maximum() {
        // max x s.t. x <= 1, x >= 0.
        let mut lp = LinearProgram::maximize(vec![1.0]);
        lp.bounds = vec![(0.0, f64::INFINITY)];
        lp.add_ub(vec![1.0], 1.0);
        let s = solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 1.0).abs() < 1e-9);
        assert!((s.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_detected() {
        // min 0 s.t. x <= -1, x >= 0.
        let mut lp = LinearProgram::minimize(vec![0.0]);
        lp.bounds = vec![(0.0, f64::INFINITY)];
        lp.add_ub(vec![1.0], -1.0);
        let s = solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        let mut lp = LinearProgram::maximize(vec![1.0]);
        lp.bounds = vec![(0.0, f64::INFINITY)];
        let s = solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_and_free_variables() {
        // min x + y s.t. x + y = 2, x - y <= 1, free vars.
        let mut lp = LinearProgram::minimize(vec![1.0, 1.0]);
        lp.add_eq(vec![1.0, 1.0], 2.0);
        lp.add_ub(vec![1.0, -1.0], 1.0);
        let s = solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 2.0).abs() < 1e-9);
        assert!(lp.max_violation(&s.x) < 1e-9);
    }

    #[test]
    fn mirrored_variable_bounds() {
        // max x + 2y with x <= 3 (no lower bound), 0 <= y <= 2, x + y <= 4.
        let mut lp = LinearProgram::maximize(vec![1.0, 2.0]);
        lp.bounds = vec![(f64::NEG_INFINITY, 3.0), (0.0, 2.0)];
        lp.add_ub(vec![1.0, 1.0], 4.0);
        let s = solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 6.0).abs() < 1e-9, "got {}", s.objective);
        assert!(lp.max_violation(&s.x) < 1e-9);
    }

    #[test]
    fn degenerate_redundant_rows() {
        // Duplicate equalities must not break phase 1.
        let mut lp = LinearProgram::minimize(vec![1.0, 0.0]);
        lp.bounds = vec![(0.0, f64::INFINITY), (0.0, f64::INFINITY)];
        lp.add_eq(vec![1.0, 1.0], 1.0);
        lp.add_eq(vec![2.0, 2.0], 2.0);
        let s = solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 0.0).abs() < 1e-9);
    }
}
