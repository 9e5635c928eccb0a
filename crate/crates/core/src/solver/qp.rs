//! Primal active-set method for convex (possibly semidefinite) quadratic
//! programs. A feasible start comes from the simplex phase 1; the method
//! then works in the null space of the working set, taking Newton steps
//! along directions of positive curvature and ray steps along descent
//! directions of zero curvature.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::lp::{LinearProgram, LpRow, LpStatus};
use crate::model::Sense;

/// `min ½ xᵀHx + gᵀx + c0` subject to linear rows and bounds.
#[derive(Debug, Clone)]
pub struct ConvexSubproblem {
    pub hessian: DMatrix<f64>,
    pub gradient: Vec<f64>,
    pub constant: f64,
    pub rows: Vec<LpRow>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvexStatus {
    Optimal,
    Infeasible,
    Unbounded,
    Error,
}

/// Multipliers are nonnegative for inequality rows (in the row's own
/// sense) and for bounds; equality-row multipliers are free. With them,
/// `Hx + g - Σ σ_i y_i a_i - z_lo + z_up = 0`, where `σ_i = -1` for `<=`
/// rows and `+1` otherwise.
#[derive(Debug, Clone)]
pub struct ConvexSolution {
    pub status: ConvexStatus,
    pub x: Vec<f64>,
    pub row_duals: Vec<f64>,
    pub lower_duals: Vec<f64>,
    pub upper_duals: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexResiduals {
    pub stationarity: f64,
    pub feasibility: f64,
    pub complementarity: f64,
}

impl ConvexResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.feasibility)
            .max(self.complementarity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Origin {
    Row(usize),
    Lower(usize),
    Upper(usize),
}

/// Internal constraint `a·x >= b` (or `= b` when `equality`).
struct Cons {
    a: DVector<f64>,
    b: f64,
    equality: bool,
    origin: Origin,
    /// +1 if `a` is the row as written, -1 if negated (for `<=` rows)
    sign: f64,
}

impl ConvexSubproblem {
    pub fn num_vars(&self) -> usize {
        self.gradient.len()
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        let xv = DVector::from_column_slice(x);
        0.5 * xv.dot(&(&self.hessian * &xv))
            + self.gradient.iter().zip(x).map(|(g, v)| g * v).sum::<f64>()
            + self.constant
    }

    /// KKT residuals of a primal/dual pair.
    pub fn residuals(&self, sol: &ConvexSolution) -> ConvexResiduals {
        let n = self.num_vars();
        let x = DVector::from_column_slice(&sol.x);
        let mut grad = &self.hessian * &x + DVector::from_column_slice(&self.gradient);
        let mut feas = 0.0f64;
        let mut comp = 0.0f64;
        for (i, row) in self.rows.iter().enumerate() {
            let y = sol.row_duals[i];
            let lhs: f64 = row.coefs.iter().map(|(j, a)| a * sol.x[*j]).sum();
            let (sigma, slack) = match row.sense {
                Sense::Ge => (1.0, lhs - row.rhs),
                Sense::Le => (-1.0, row.rhs - lhs),
                Sense::Eq => (1.0, 0.0),
            };
            for &(j, a) in &row.coefs {
                grad[j] -= sigma * y * a;
            }
            if row.sense == Sense::Eq {
                feas = feas.max((lhs - row.rhs).abs());
            } else {
                feas = feas.max(-slack).max(-y);
                comp = comp.max((y * slack).abs());
            }
        }
        for j in 0..n {
            grad[j] -= sol.lower_duals[j];
            grad[j] += sol.upper_duals[j];
            if self.lower[j].is_finite() {
                let s = sol.x[j] - self.lower[j];
                feas = feas.max(-s);
                comp = comp.max((sol.lower_duals[j] * s).abs());
            }
            if self.upper[j].is_finite() {
                let s = self.upper[j] - sol.x[j];
                feas = feas.max(-s);
                comp = comp.max((sol.upper_duals[j] * s).abs());
            }
            feas = feas.max(-sol.lower_duals[j]).max(-sol.upper_duals[j]);
        }
        ConvexResiduals {
            stationarity: grad.amax(),
            feasibility: feas,
            complementarity: comp,
        }
    }

    pub fn solve(&self) -> ConvexSolution {
        solve_convex(self)
    }
}

fn failure(n: usize, m: usize, status: ConvexStatus, msg: &str) -> ConvexSolution {
    ConvexSolution {
        status,
        x: vec![0.0; n],
        row_duals: vec![0.0; m],
        lower_duals: vec![0.0; n],
        upper_duals: vec![0.0; n],
        objective: f64::NAN,
        iterations: 0,
        message: msg.to_string(),
    }
}

fn null_space(rows: &[&DVector<f64>], n: usize) -> DMatrix<f64> {
    if rows.is_empty() {
        return DMatrix::identity(n, n);
    }
    let mut m = DMatrix::zeros(n, n);
    for (i, r) in rows.iter().enumerate() {
        let norm = r.norm();
        for j in 0..n {
            m[(i, j)] = r[j] / norm;
        }
    }
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let keep: Vec<usize> = (0..n).filter(|&k| svd.singular_values[k] <= 1e-9).collect();
    let mut z = DMatrix::zeros(n, keep.len());
    for (c, &k) in keep.iter().enumerate() {
        for j in 0..n {
            z[(j, c)] = vt[(k, j)];
        }
    }
    z
}

pub fn solve_convex(p: &ConvexSubproblem) -> ConvexSolution {
    let n = p.num_vars();
    let m = p.rows.len();
    if p.hessian.nrows() != n || p.hessian.ncols() != n {
        return failure(n, m, ConvexStatus::Error, "hessian dimension mismatch");
    }
    let finite = p.gradient.iter().all(|v| v.is_finite())
        && p.hessian.iter().all(|v| v.is_finite())
        && p.rows
            .iter()
            .all(|r| r.rhs.is_finite() && r.coefs.iter().all(|(_, a)| a.is_finite()));
    if !finite {
        return failure(n, m, ConvexStatus::Error, "non-finite problem data");
    }
    let is_lp = p.hessian.iter().all(|v| *v == 0.0);

    // Phase 1 (and the whole solve for LPs) through the simplex.
    let mut lp = LinearProgram::new(n);
    lp.rows = p.rows.clone();
    lp.lower = p.lower.clone();
    lp.upper = p.upper.clone();
    if is_lp {
        lp.cost = p.gradient.clone();
    }
    let start = lp.solve();
    match start.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return failure(
                n,
                m,
                ConvexStatus::Infeasible,
                "phase 1 infeasibility is positive",
            );
        }
        LpStatus::Unbounded => {
            return failure(
                n,
                m,
                ConvexStatus::Unbounded,
                "linear objective unbounded below",
            );
        }
        LpStatus::IterationLimit => {
            return failure(
                n,
                m,
                ConvexStatus::Error,
                "simplex iteration limit in phase 1",
            );
        }
    }

    let mut cons: Vec<Cons> = Vec::new();
    for (i, row) in p.rows.iter().enumerate() {
        let mut a = DVector::zeros(n);
        for &(j, c) in &row.coefs {
            a[j] += c;
        }
        if a.amax() == 0.0 {
            continue;
        }
        let (a, b, sign) = match row.sense {
            Sense::Le => (-a, -row.rhs, -1.0),
            _ => (a, row.rhs, 1.0),
        };
        cons.push(Cons {
            a,
            b,
            equality: row.sense == Sense::Eq,
            origin: Origin::Row(i),
            sign,
        });
    }
    for j in 0..n {
        if p.lower[j].is_finite() {
            let mut a = DVector::zeros(n);
            a[j] = 1.0;
            cons.push(Cons {
                a,
                b: p.lower[j],
                equality: false,
                origin: Origin::Lower(j),
                sign: 1.0,
            });
        }
        if p.upper[j].is_finite() {
            let mut a = DVector::zeros(n);
            a[j] = -1.0;
            cons.push(Cons {
                a,
                b: -p.upper[j],
                equality: false,
                origin: Origin::Upper(j),
                sign: 1.0,
            });
        }
    }

    let h = &p.hessian;
    let g0 = DVector::from_column_slice(&p.gradient);
    let mut x = DVector::from_column_slice(&start.x);
    let scale_of = |c: &Cons| c.a.norm().max(1.0) * (1.0 + c.b.abs());

    // Initial working set: equalities, then active inequalities, independent ones only.
    let mut working: Vec<usize> = Vec::new();
    let mut z = DMatrix::identity(n, n);
    let order: Vec<usize> = (0..cons.len())
        .filter(|&k| cons[k].equality)
        .chain((0..cons.len()).filter(|&k| !cons[k].equality))
        .collect();
    for k in order {
        let c = &cons[k];
        let act = (c.a.dot(&x) - c.b).abs() <= 1e-9 * scale_of(c);
        if !c.equality && !act {
            continue;
        }
        if z.ncols() == 0 {
            break;
        }
        let proj = z.transpose() * &c.a;
        if proj.norm() > 1e-8 * c.a.norm() {
            working.push(k);
            let rows: Vec<&DVector<f64>> = working.iter().map(|&w| &cons[w].a).collect();
            z = null_space(&rows, n);
        }
    }

    let max_iter = 50 * (n + cons.len()) + 200;
    let mut iterations = 0usize;
    let mut multipliers: Vec<f64>;
    loop {
        iterations += 1;
        if iterations > max_iter {
            return failure(n, m, ConvexStatus::Error, "active-set iteration limit");
        }
        let g = h * &x + &g0;
        let gscale = 1.0 + g.amax();
        let mut step: Option<(DVector<f64>, f64)> = None;
        if z.ncols() > 0 {
            let gz = z.transpose() * &g;
            if gz.amax() > 1e-11 * gscale {
                let hz = z.transpose() * h * &z;
                let eig = SymmetricEigen::new(hz);
                let hmax = eig.eigenvalues.iter().fold(1.0f64, |a, b| a.max(b.abs()));
                let tol_h = 1e-10 * hmax;
                let coeff = eig.eigenvectors.transpose() * &gz;
                let flat: Vec<usize> = (0..coeff.len())
                    .filter(|&k| eig.eigenvalues[k] <= tol_h && coeff[k].abs() > 1e-11 * gscale)
                    .collect();
                let mut dz = DVector::zeros(coeff.len());
                let max_step;
                if !flat.is_empty() {
                    for &k in &flat {
                        dz += eig.eigenvectors.column(k) * (-coeff[k]);
                    }
                    max_step = f64::INFINITY;
                } else {
                    for k in 0..coeff.len() {
                        if eig.eigenvalues[k] > tol_h {
                            dz += eig.eigenvectors.column(k) * (-coeff[k] / eig.eigenvalues[k]);
                        }
                    }
                    max_step = 1.0;
                }
                let d = &z * dz;
                if d.amax() > 0.0 {
                    step = Some((d, max_step));
                }
            }
        }

        match step {
            Some((d, max_step)) => {
                let dnorm = d.norm();
                let mut alpha = max_step;
                let mut block: Option<usize> = None;
                for (k, c) in cons.iter().enumerate() {
                    if working.contains(&k) {
                        continue;
                    }
                    let ad = c.a.dot(&d);
                    if ad >= -1e-13 * dnorm * c.a.norm() {
                        continue;
                    }
                    let room = (c.a.dot(&x) - c.b).max(0.0);
                    let ak = room / -ad;
                    if ak < alpha {
                        alpha = ak;
                        block = Some(k);
                    }
                }
                if alpha.is_infinite() {
                    return failure(
                        n,
                        m,
                        ConvexStatus::Unbounded,
                        "descent ray with zero curvature",
                    );
                }
                x += &d * alpha;
                if let Some(k) = block {
                    working.push(k);
                    let rows: Vec<&DVector<f64>> = working.iter().map(|&w| &cons[w].a).collect();
                    z = null_space(&rows, n);
                }
            }
            None => {
                // Stationary on the working set: check multiplier signs.
                multipliers = least_squares_multipliers(&cons, &working, &g, n);
                let mut drop: Option<(usize, f64)> = None;
                for (pos, &k) in working.iter().enumerate() {
                    if cons[k].equality {
                        continue;
                    }
                    let lam = multipliers[pos];
                    if lam < -1e-10 * gscale && drop.map_or(true, |(_, l)| lam < l) {
                        drop = Some((pos, lam));
                    }
                }
                match drop {
                    Some((pos, _)) => {
                        working.remove(pos);
                        let rows: Vec<&DVector<f64>> =
                            working.iter().map(|&w| &cons[w].a).collect();
                        z = null_space(&rows, n);
                    }
                    None => break,
                }
            }
        }
    }

    let mut row_duals = vec![0.0; m];
    let mut lower_duals = vec![0.0; n];
    let mut upper_duals = vec![0.0; n];
    for (pos, &k) in working.iter().enumerate() {
        let c = &cons[k];
        let lam = if c.equality {
            multipliers[pos]
        } else {
            multipliers[pos].max(0.0)
        };
        match c.origin {
            Origin::Row(i) => row_duals[i] = lam * if c.equality { c.sign } else { 1.0 },
            Origin::Lower(j) => lower_duals[j] = lam,
            Origin::Upper(j) => upper_duals[j] = lam,
        }
    }
    let xs: Vec<f64> = x.iter().copied().collect();
    let objective = p.objective_at(&xs);
    ConvexSolution {
        status: ConvexStatus::Optimal,
        x: xs,
        row_duals,
        lower_duals,
        upper_duals,
        objective,
        iterations: iterations + start.iterations,
        message: String::new(),
    }
}

fn least_squares_multipliers(
    cons: &[Cons],
    working: &[usize],
    g: &DVector<f64>,
    n: usize,
) -> Vec<f64> {
    let k = working.len();
    if k == 0 {
        return Vec::new();
    }
    let a = DMatrix::from_fn(k, n, |r, j| cons[working[r]].a[j]);
    let gram = &a * a.transpose();
    let rhs = &a * g;
    let sol = gram
        .clone()
        .cholesky()
        .map(|c| c.solve(&rhs))
        .or_else(|| gram.lu().solve(&rhs))
        .unwrap_or_else(|| DVector::zeros(k));
    sol.iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(coefs: &[(usize, f64)], sense: Sense, rhs: f64) -> LpRow {
        LpRow {
            coefs: coefs.to_vec(),
            sense,
            rhs,
        }
    }

    /// min w² + 10ξ  s.t. ξ + w >= 1, ξ - w >= -1, ξ >= 0 (w free).
    fn one_sample(eps: f64) -> ConvexSubproblem {
        let mut h = DMatrix::zeros(2, 2);
        h[(0, 0)] = 2.0;
        ConvexSubproblem {
            hessian: h,
            gradient: vec![0.0, 10.0],
            constant: 0.0,
            rows: vec![
                row(&[(1, 1.0), (0, 1.0)], Sense::Ge, 1.0 - eps),
                row(&[(1, 1.0), (0, -1.0)], Sense::Ge, -1.0 - eps),
            ],
            lower: vec![f64::NEG_INFINITY, 0.0],
            upper: vec![f64::INFINITY, f64::INFINITY],
        }
    }

    #[test]
    fn one_sample_closed_form() {
        let p = one_sample(0.0);
        let sol = p.solve();
        assert_eq!(sol.status, ConvexStatus::Optimal);
        assert!((sol.x[0] - 1.0).abs() < 1e-10);
        assert!(sol.x[1].abs() < 1e-10);
        assert!((sol.objective - 1.0).abs() < 1e-10);
        assert!(p.residuals(&sol).max() < 1e-9);
    }

    #[test]
    fn relaxed_by_epsilon() {
        let p = one_sample(2.0);
        let sol = p.solve();
        assert_eq!(sol.status, ConvexStatus::Optimal);
        assert!(sol.x[0].abs() < 1e-10);
        assert!(sol.objective.abs() < 1e-10);
        assert!(p.residuals(&sol).max() < 1e-9);
    }

    #[test]
    fn infeasible_box() {
        let p = ConvexSubproblem {
            hessian: DMatrix::zeros(1, 1),
            gradient: vec![0.0],
            constant: 0.0,
            rows: vec![
                row(&[(0, 1.0)], Sense::Ge, 1.0),
                row(&[(0, 1.0)], Sense::Le, 0.0),
            ],
            lower: vec![f64::NEG_INFINITY],
            upper: vec![f64::INFINITY],
        };
        assert_eq!(p.solve().status, ConvexStatus::Infeasible);
    }

    #[test]
    fn unbounded_flat_direction() {
        // min x² - y, y free: unbounded along y
        let mut h = DMatrix::zeros(2, 2);
        h[(0, 0)] = 2.0;
        let p = ConvexSubproblem {
            hessian: h,
            gradient: vec![0.0, -1.0],
            constant: 0.0,
            rows: vec![row(&[(0, 1.0)], Sense::Ge, -3.0)],
            lower: vec![f64::NEG_INFINITY; 2],
            upper: vec![f64::INFINITY; 2],
        };
        assert_eq!(p.solve().status, ConvexStatus::Unbounded);
    }

    #[test]
    fn equality_and_upper_bounds() {
        // min (x-3)² + (y-3)² s.t. x + y = 2, x <= 0.5
        let h = DMatrix::from_diagonal_element(2, 2, 2.0);
        let p = ConvexSubproblem {
            hessian: h,
            gradient: vec![-6.0, -6.0],
            constant: 18.0,
            rows: vec![row(&[(0, 1.0), (1, 1.0)], Sense::Eq, 2.0)],
            lower: vec![f64::NEG_INFINITY; 2],
            upper: vec![0.5, f64::INFINITY],
        };
        let sol = p.solve();
        assert_eq!(sol.status, ConvexStatus::Optimal);
        assert!((sol.x[0] - 0.5).abs() < 1e-10);
        assert!((sol.x[1] - 1.5).abs() < 1e-10);
        assert!(sol.upper_duals[0] > 0.0);
        assert!(p.residuals(&sol).max() < 1e-9);
    }

    #[test]
    fn deterministic() {
        let p = one_sample(0.3);
        let a = p.solve();
        let b = p.solve();
        assert_eq!(a.x, b.x);
        assert_eq!(a.row_duals, b.row_duals);
    }
}
