//! Dense two-phase primal simplex for small linear programs.
//!
//! Variables with general bounds are mapped to nonnegative columns
//! (shift, mirror or split); finite upper bounds become explicit rows.
//! Pricing is Dantzig's rule, switching to Bland's rule after a run of
//! degenerate pivots so the method cannot cycle.

use nalgebra::{DMatrix, DVector};

use crate::model::Sense;

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const PHASE1_TOL: f64 = 1e-7;
const DEGENERATE_RUN: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct LpRow {
    pub coefs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// `min c·x + c0` subject to rows and `lower <= x <= upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub cost: Vec<f64>,
    pub cost_constant: f64,
    pub rows: Vec<LpRow>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            cost: vec![0.0; num_vars],
            cost_constant: 0.0,
            rows: Vec::new(),
            lower: vec![0.0; num_vars],
            upper: vec![f64::INFINITY; num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn add_row(&mut self, coefs: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.rows.push(LpRow { coefs, sense, rhs });
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.cost_constant + self.cost.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    /// Largest bound or row violation at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        for row in &self.rows {
            let lhs: f64 = row.coefs.iter().map(|(j, a)| a * x[*j]).sum();
            let viol = match row.sense {
                Sense::Le => lhs - row.rhs,
                Sense::Ge => row.rhs - lhs,
                Sense::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    pub fn solve(&self) -> LpSolution {
        solve(self)
    }
}

#[derive(Debug, Clone, Copy)]
enum ColumnMap {
    /// x = lb + z
    Shift {
        col: usize,
        lb: f64,
    },
    /// x = ub - z
    Mirror {
        col: usize,
        ub: f64,
    },
    /// x = z+ - z-
    Split {
        pos: usize,
        neg: usize,
    },
    Fixed(f64),
}

struct StandardForm {
    /// m x (ncols) constraint matrix, rows already sign-normalized so b >= 0
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    cost: Vec<f64>,
    map: Vec<ColumnMap>,
    /// column that can start in the basis for each row, if any
    slack_basis: Vec<Option<usize>>,
}

fn standardize(lp: &LinearProgram) -> Result<StandardForm, LpStatus> {
    let n = lp.num_vars();
    let mut map = Vec::with_capacity(n);
    let mut ncols = 0usize;
    let mut upper_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        let (lb, ub) = (lp.lower[j], lp.upper[j]);
        if lb > ub + 1e-12 {
            return Err(LpStatus::Infeasible);
        }
        let m = if lb.is_finite() && ub.is_finite() && (ub - lb).abs() <= 1e-12 {
            ColumnMap::Fixed(lb)
        } else if lb.is_finite() {
            let col = ncols;
            ncols += 1;
            if ub.is_finite() {
                upper_rows.push((col, ub - lb));
            }
            ColumnMap::Shift { col, lb }
        } else if ub.is_finite() {
            let col = ncols;
            ncols += 1;
            ColumnMap::Mirror { col, ub }
        } else {
            let pos = ncols;
            ncols += 2;
            ColumnMap::Split { pos, neg: pos + 1 }
        };
        map.push(m);
    }

    let mut cost = vec![0.0; ncols];
    for j in 0..n {
        let c = lp.cost[j];
        match map[j] {
            ColumnMap::Shift { col, .. } => cost[col] += c,
            ColumnMap::Mirror { col, .. } => cost[col] -= c,
            ColumnMap::Split { pos, neg } => {
                cost[pos] += c;
                cost[neg] -= c;
            }
            ColumnMap::Fixed(_) => {}
        }
    }

    // Rows over structural columns, plus senses; slacks appended afterwards.
    let mut rows: Vec<(Vec<f64>, Sense, f64)> =
        Vec::with_capacity(lp.rows.len() + upper_rows.len());
    for row in &lp.rows {
        let mut dense = vec![0.0; ncols];
        let mut rhs = row.rhs;
        for &(j, a) in &row.coefs {
            match map[j] {
                ColumnMap::Shift { col, lb } => {
                    dense[col] += a;
                    rhs -= a * lb;
                }
                ColumnMap::Mirror { col, ub } => {
                    dense[col] -= a;
                    rhs -= a * ub;
                }
                ColumnMap::Split { pos, neg } => {
                    dense[pos] += a;
                    dense[neg] -= a;
                }
                ColumnMap::Fixed(v) => rhs -= a * v,
            }
        }
        if dense.iter().all(|&a| a == 0.0) {
            let ok = match row.sense {
                Sense::Le => rhs >= -PHASE1_TOL,
                Sense::Ge => rhs <= PHASE1_TOL,
                Sense::Eq => rhs.abs() <= PHASE1_TOL,
            };
            if !ok {
                return Err(LpStatus::Infeasible);
            }
            continue;
        }
        rows.push((dense, row.sense, rhs));
    }
    for (col, width) in upper_rows {
        let mut dense = vec![0.0; ncols];
        dense[col] = 1.0;
        rows.push((dense, Sense::Le, width));
    }

    let nslack = rows.iter().filter(|r| r.1 != Sense::Eq).count();
    let total = ncols + nslack;
    let mut a = Vec::with_capacity(rows.len());
    let mut b = Vec::with_capacity(rows.len());
    let mut slack_basis = Vec::with_capacity(rows.len());
    let mut next_slack = ncols;
    for (dense, sense, rhs) in rows {
        let mut full = dense;
        full.resize(total, 0.0);
        let mut slack_col = None;
        match sense {
            Sense::Le => {
                full[next_slack] = 1.0;
                slack_col = Some(next_slack);
                next_slack += 1;
            }
            Sense::Ge => {
                full[next_slack] = -1.0;
                slack_col = Some(next_slack);
                next_slack += 1;
            }
            Sense::Eq => {}
        }
        let mut rhs = rhs;
        if rhs < 0.0 {
            for v in full.iter_mut() {
                *v = -*v;
            }
            rhs = -rhs;
        }
        let start = slack_col.filter(|&c| full[c] > 0.0);
        a.push(full);
        b.push(rhs);
        slack_basis.push(start);
    }
    cost.resize(total, 0.0);
    Ok(StandardForm {
        a,
        b,
        cost,
        map,
        slack_basis,
    })
}

struct Tableau {
    /// rows of [A | b], width = ncols + 1
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    ncols: usize,
    /// columns allowed to enter the basis
    allowed: Vec<bool>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let width = self.ncols + 1;
        let p = self.t[r][c];
        {
            let row = &mut self.t[r];
            for v in row.iter_mut() {
                *v /= p;
            }
            row[c] = 1.0;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f == 0.0 {
                continue;
            }
            for k in 0..width {
                let pk = pivot_row[k];
                if pk != 0.0 {
                    row[k] -= f * pk;
                }
            }
            row[c] = 0.0;
        }
        self.basis[r] = c;
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost[..self.ncols].to_vec();
        for (i, row) in self.t.iter().enumerate() {
            let cb = cost[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            for k in 0..self.ncols {
                d[k] -= cb * row[k];
            }
        }
        d
    }

    /// Runs primal simplex iterations for `cost`. Returns `Unbounded` or `Optimal`.
    fn optimize(&mut self, cost: &[f64], iterations: &mut usize, limit: usize) -> LpStatus {
        let width = self.ncols;
        let mut d = self.reduced_costs(cost);
        let mut degenerate = 0usize;
        loop {
            if *iterations >= limit {
                return LpStatus::IterationLimit;
            }
            let bland = degenerate >= DEGENERATE_RUN;
            let mut enter = None;
            let mut best = -COST_TOL;
            for j in 0..width {
                if !self.allowed[j] || d[j] >= -COST_TOL {
                    continue;
                }
                if bland {
                    enter = Some(j);
                    break;
                }
                if d[j] < best {
                    best = d[j];
                    enter = Some(j);
                }
            }
            let Some(c) = enter else {
                return LpStatus::Optimal;
            };

            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for (i, row) in self.t.iter().enumerate() {
                let a = row[c];
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = row[width].max(0.0) / a;
                match leave {
                    None => {
                        leave = Some(i);
                        best_ratio = ratio;
                    }
                    Some(l) => {
                        let tie = (ratio - best_ratio).abs() <= 1e-12 * (1.0 + best_ratio.abs());
                        if ratio < best_ratio && !tie {
                            leave = Some(i);
                            best_ratio = ratio;
                        } else if tie {
                            let better = if bland {
                                self.basis[i] < self.basis[l]
                            } else {
                                a > self.t[l][c]
                            };
                            if better {
                                leave = Some(i);
                                best_ratio = best_ratio.min(ratio);
                            }
                        }
                    }
                }
            }
            let Some(r) = leave else {
                return LpStatus::Unbounded;
            };
            if best_ratio <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, c);
            *iterations += 1;
            // update reduced costs from the new pivot row
            let f = d[c];
            if f != 0.0 {
                let row = &self.t[r];
                for k in 0..width {
                    d[k] -= f * row[k];
                }
            }
            d[c] = 0.0;
        }
    }
}

pub fn solve(lp: &LinearProgram) -> LpSolution {
    let n = lp.num_vars();
    let fail = |status| LpSolution {
        status,
        x: vec![0.0; n],
        objective: f64::NAN,
        iterations: 0,
    };
    let sf = match standardize(lp) {
        Ok(sf) => sf,
        Err(status) => return fail(status),
    };
    let m = sf.a.len();
    let nstruct = sf.cost.len();
    let nart = sf.slack_basis.iter().filter(|s| s.is_none()).count();
    let ncols = nstruct + nart;

    let mut t = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut next_art = nstruct;
    for i in 0..m {
        let mut row = sf.a[i].clone();
        row.resize(ncols + 1, 0.0);
        row[ncols] = sf.b[i];
        match sf.slack_basis[i] {
            Some(c) => basis.push(c),
            None => {
                row[next_art] = 1.0;
                basis.push(next_art);
                next_art += 1;
            }
        }
        t.push(row);
    }
    let mut tab = Tableau {
        t,
        basis,
        ncols,
        allowed: vec![true; ncols],
    };
    let limit = 50 * (m + ncols) + 1000;
    let mut iterations = 0usize;

    if nart > 0 {
        let mut phase1 = vec![0.0; ncols];
        for c in phase1.iter_mut().skip(nstruct) {
            *c = 1.0;
        }
        let st = tab.optimize(&phase1, &mut iterations, limit);
        if st == LpStatus::IterationLimit {
            return fail(st);
        }
        let infeas: f64 = tab
            .basis
            .iter()
            .enumerate()
            .filter(|(_, &b)| b >= nstruct)
            .map(|(i, _)| tab.t[i][ncols])
            .sum();
        if infeas > PHASE1_TOL * (1.0 + sf.b.iter().fold(0.0f64, |a, b| a.max(b.abs()))) {
            return fail(LpStatus::Infeasible);
        }
        // drive artificials out of the basis where possible
        for i in 0..m {
            if tab.basis[i] < nstruct {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..nstruct {
                let a = tab.t[i][j].abs();
                if a > 1e-7 && best.map_or(true, |(_, b)| a > b) {
                    best = Some((j, a));
                }
            }
            if let Some((j, _)) = best {
                tab.pivot(i, j);
            }
        }
        for j in nstruct..ncols {
            tab.allowed[j] = false;
        }
    }

    let mut phase2 = sf.cost.clone();
    phase2.resize(ncols, 0.0);
    let st = tab.optimize(&phase2, &mut iterations, limit);
    if st != LpStatus::Optimal {
        let mut sol = fail(st);
        sol.iterations = iterations;
        return sol;
    }

    // Recompute the basic solution from the original data for accuracy.
    let mut z = vec![0.0; ncols];
    let art_rows: Vec<usize> = (0..m).filter(|&r| sf.slack_basis[r].is_none()).collect();
    let bm = DMatrix::from_fn(m, m, |i, k| {
        let col = tab.basis[k];
        if col < nstruct {
            sf.a[i][col]
        } else if art_rows[col - nstruct] == i {
            1.0
        } else {
            0.0
        }
    });
    let rhs = DVector::from_vec(sf.b.clone());
    let refined = if m > 0 {
        bm.lu().solve(&rhs)
    } else {
        Some(DVector::zeros(0))
    };
    match refined {
        Some(xb) if xb.iter().all(|v| v.is_finite()) => {
            for (k, &col) in tab.basis.iter().enumerate() {
                z[col] = xb[k];
            }
        }
        _ => {
            for (k, &col) in tab.basis.iter().enumerate() {
                z[col] = tab.t[k][ncols];
            }
        }
    }
    for v in z.iter_mut() {
        if *v < 0.0 && *v > -1e-9 {
            *v = 0.0;
        }
    }

    let mut x = vec![0.0; n];
    for j in 0..n {
        x[j] = match sf.map[j] {
            ColumnMap::Shift { col, lb } => lb + z[col],
            ColumnMap::Mirror { col, ub } => ub - z[col],
            ColumnMap::Split { pos, neg } => z[pos] - z[neg],
            ColumnMap::Fixed(v) => v,
        };
        x[j] = x[j].clamp(lp.lower[j], lp.upper[j]);
    }
    let objective = lp.objective_at(&x);
    LpSolution {
        status: LpStatus::Optimal,
        x,
        objective,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_min() {
        // min 2a + b  s.t. a + b = 1, a,b >= 0
        let mut lp = LinearProgram::new(2);
        lp.cost = vec![2.0, 1.0];
        lp.add_row(vec![(0, 1.0), (1, 1.0)], Sense::Eq, 1.0);
        let sol = lp.solve();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 1.0).abs() < 1e-12);
        assert!((sol.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn free_and_mirrored_variables() {
        // min -x + y  s.t. x <= 3 (upper bound only), y free, y >= x - 5
        let mut lp = LinearProgram::new(2);
        lp.cost = vec![-1.0, 1.0];
        lp.lower = vec![f64::NEG_INFINITY, f64::NEG_INFINITY];
        lp.upper = vec![3.0, f64::INFINITY];
        lp.add_row(vec![(1, 1.0), (0, -1.0)], Sense::Ge, -5.0);
        let sol = lp.solve();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x[0] - 3.0).abs() < 1e-12);
        assert!((sol.x[1] + 2.0).abs() < 1e-12);
        assert!((sol.objective + 5.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(1);
        lp.add_row(vec![(0, 1.0)], Sense::Ge, 1.0);
        lp.add_row(vec![(0, 1.0)], Sense::Le, 0.0);
        assert_eq!(lp.solve().status, LpStatus::Infeasible);

        let mut lp = LinearProgram::new(1);
        lp.cost = vec![-1.0];
        assert_eq!(lp.solve().status, LpStatus::Unbounded);

        let mut lp = LinearProgram::new(1);
        lp.lower = vec![2.0];
        lp.upper = vec![1.0];
        assert_eq!(lp.solve().status, LpStatus::Infeasible);
    }

    #[test]
    fn boxed_variables_and_fixed() {
        // max x + y with x in [0, 2], y fixed at 1.5, x + y <= 3
        let mut lp = LinearProgram::new(2);
        lp.cost = vec![-1.0, -1.0];
        lp.upper = vec![2.0, 1.5];
        lp.lower = vec![0.0, 1.5];
        lp.add_row(vec![(0, 1.0), (1, 1.0)], Sense::Le, 3.0);
        let sol = lp.solve();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective + 3.0).abs() < 1e-12);
        assert!(lp.max_violation(&sol.x) < 1e-12);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(2);
        lp.cost = vec![1.0, 1.0];
        lp.add_row(vec![(0, 1.0), (1, 1.0)], Sense::Eq, 2.0);
        lp.add_row(vec![(0, 2.0), (1, 2.0)], Sense::Eq, 4.0);
        lp.add_row(vec![(0, 1.0)], Sense::Ge, 0.5);
        let sol = lp.solve();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 2.0).abs() < 1e-12);
        assert!(lp.max_violation(&sol.x) < 1e-10);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Classic Beale cycling example (cycles under pure Dantzig pricing without safeguards).
        let mut lp = LinearProgram::new(4);
        lp.cost = vec![-0.75, 150.0, -0.02, 6.0];
        lp.add_row(
            vec![(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)],
            Sense::Le,
            0.0,
        );
        lp.add_row(
            vec![(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)],
            Sense::Le,
            0.0,
        );
        lp.add_row(vec![(2, 1.0)], Sense::Le, 1.0);
        let sol = lp.solve();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective + 0.05).abs() < 1e-9);
    }
}
