//! Ground truth for the reformulations: the lower-level QP solved directly,
//! a hyperparameter grid search (a feasible upper bound) and exhaustive
//! complementarity-pattern enumeration (the exact optimistic optimum).
//!
//! Enumeration builds its LPs straight from the model and the KKT system and
//! shares nothing with `reformulate`.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::kkt::{build_kkt, KktError, KktResiduals, KktSystem};
use crate::model::{AffineExpr, Assignment, BilevelModel, Level, ObjSense, Sense, VarId};
use crate::solver::{ConvexStatus, ConvexSubproblem, LinearProgram, LpRow, LpStatus};
use crate::svr::{build_bilevel, SvrInstance, SvrModel};

pub const DEFAULT_MAX_PAIRS: usize = 24;
/// Objectives closer than this count as ties; the lowest pattern wins.
pub const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error(transparent)]
    Kkt(#[from] KktError),
    #[error("{pairs} complementarity pairs exceed the enumeration cap of {cap}")]
    TooManyPairs { pairs: usize, cap: usize },
    #[error("every complementarity pattern is infeasible: the bilevel problem is infeasible")]
    Infeasible,
    #[error("pattern {mask:#b} has an unbounded LP")]
    UnboundedPattern { mask: u64 },
    #[error("{0} must be affine for the oracle")]
    NonAffine(String),
    #[error("upper variable `{0}` has no value")]
    MissingUpperValue(String),
    #[error("lower-level solve failed: {0}")]
    Lower(String),
    #[error("LP solve failed: {0}")]
    Lp(String),
    #[error("grid must be nonempty and nonnegative")]
    BadGrid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Certificate {
    GridFeasible { c: f64, eps: f64 },
    PatternExact { mask: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub objective: f64,
    /// Model variables followed by KKT multipliers.
    pub point: Vec<f64>,
    pub certificate: Certificate,
    /// Subproblems solved to produce the answer.
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowerSolution {
    /// Model variables (upper values copied in) followed by multipliers.
    pub point: Vec<f64>,
    pub objective: f64,
    pub residuals: KktResiduals,
}

impl LowerSolution {
    pub fn value(&self, v: VarId) -> f64 {
        self.point[v.index()]
    }
}

pub fn to_assignment(point: &[f64]) -> Assignment {
    point
        .iter()
        .enumerate()
        .map(|(j, v)| (VarId::from_index(j), *v))
        .collect()
}

/// Solves the lower level for fixed upper values (indexed by model `VarId`;
/// lower entries are ignored) and returns primal and KKT multipliers.
pub fn solve_lower(
    model: &BilevelModel,
    kkt: &KktSystem,
    upper: &[f64],
) -> Result<LowerSolution, OracleError> {
    let n_model = model.num_variables();
    let lower: Vec<VarId> = model.vars_at(Level::Lower).map(|v| v.id).collect();
    let mut local = vec![usize::MAX; n_model];
    for (k, v) in lower.iter().enumerate() {
        local[v.index()] = k;
    }
    let is_lower = |v: VarId| local[v.index()] != usize::MAX;
    let value = |v: VarId| -> Result<f64, OracleError> {
        let x = upper
            .get(v.index())
            .copied()
            .ok_or_else(|| OracleError::MissingUpperValue(model.variable(v).name.clone()))?;
        if x.is_finite() {
            Ok(x)
        } else {
            Err(OracleError::MissingUpperValue(
                model.variable(v).name.clone(),
            ))
        }
    };

    let nl = lower.len();
    let f = model.lower_objective_as_min();
    let mut hessian = DMatrix::zeros(nl, nl);
    let mut gradient = vec![0.0; nl];
    let mut constant = f.affine.constant_term();
    for (a, b, c) in f.quad_terms() {
        match (is_lower(a), is_lower(b)) {
            (true, true) if a == b => hessian[(local[a.index()], local[a.index()])] += 2.0 * c,
            (true, true) => {
                hessian[(local[a.index()], local[b.index()])] += c;
                hessian[(local[b.index()], local[a.index()])] += c;
            }
            (true, false) => gradient[local[a.index()]] += c * value(b)?,
            (false, true) => gradient[local[b.index()]] += c * value(a)?,
            (false, false) => constant += c * value(a)? * value(b)?,
        }
    }
    for (v, c) in f.affine.terms() {
        if is_lower(v) {
            gradient[local[v.index()]] += c;
        } else {
            constant += c * value(v)?;
        }
    }

    let mut rows = Vec::new();
    for c in model.constraints_at(Level::Lower) {
        if !c.body.is_affine() {
            return Err(OracleError::NonAffine(format!(
                "lower constraint `{}`",
                c.name
            )));
        }
        let mut rhs = c.rhs;
        let mut coefs = Vec::new();
        for (v, a) in c.body.affine.terms() {
            if is_lower(v) {
                coefs.push((local[v.index()], a));
            } else {
                rhs -= a * value(v)?;
            }
        }
        rows.push(LpRow {
            coefs,
            sense: c.sense,
            rhs,
        });
    }
    let qp = ConvexSubproblem {
        hessian,
        gradient,
        constant,
        rows,
        lower: lower.iter().map(|v| model.variable(*v).lower).collect(),
        upper: lower.iter().map(|v| model.variable(*v).upper).collect(),
    };
    let sol = qp.solve();
    if sol.status != ConvexStatus::Optimal {
        return Err(OracleError::Lower(format!(
            "{:?}: {}",
            sol.status, sol.message
        )));
    }

    // The QP and KKT conventions agree: every multiplier maps over unchanged.
    let mut point = vec![0.0; kkt.num_vars()];
    for j in 0..n_model {
        point[j] = if is_lower(VarId::from_index(j)) {
            sol.x[local[j]]
        } else {
            upper[j]
        };
    }
    let lower_cons: Vec<_> = model.constraints_at(Level::Lower).map(|c| c.id).collect();
    for dual in &kkt.duals {
        point[dual.id.index()] = match dual.source {
            crate::kkt::DualSource::Constraint(cid) => {
                let i = lower_cons
                    .iter()
                    .position(|c| *c == cid)
                    .expect("dual of a lower constraint");
                sol.row_duals[i]
            }
            crate::kkt::DualSource::Bound(v, crate::kkt::BoundSide::Lower) => {
                sol.lower_duals[local[v.index()]]
            }
            crate::kkt::DualSource::Bound(v, crate::kkt::BoundSide::Upper) => {
                sol.upper_duals[local[v.index()]]
            }
        };
    }
    // clear round-off so that, e.g., C = 0 gives w = 0 exactly
    for v in point.iter_mut() {
        if v.abs() < 1e-13 {
            *v = 0.0;
        }
    }
    let residuals = kkt
        .kkt_residual(&to_assignment(&point))
        .expect("point covers every variable");
    let objective = f.eval_dense(&point);
    Ok(LowerSolution {
        point,
        objective,
        residuals,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub c_values: Vec<f64>,
    pub eps_values: Vec<f64>,
}

impl Default for GridSpec {
    /// C = 0 plus 21 log-spaced values in [1e-3, 1e3]; 21 values of ε in [0, 2].
    fn default() -> Self {
        let mut c_values = vec![0.0];
        c_values.extend((0..21).map(|k| 10f64.powf(-3.0 + 6.0 * k as f64 / 20.0)));
        let eps_values = (0..21).map(|k| 2.0 * k as f64 / 20.0).collect();
        GridSpec {
            c_values,
            eps_values,
        }
    }
}

impl GridSpec {
    pub fn single(c: f64, eps: f64) -> Self {
        GridSpec {
            c_values: vec![c],
            eps_values: vec![eps],
        }
    }

    fn check(&self) -> Result<(), OracleError> {
        let ok = |v: &[f64]| !v.is_empty() && v.iter().all(|x| *x >= 0.0 && x.is_finite());
        if ok(&self.c_values) && ok(&self.eps_values) {
            Ok(())
        } else {
            Err(OracleError::BadGrid)
        }
    }
}

/// Best grid point, scoring each with `ξU_i = |y_i - w·x_i|`.
/// Ties keep the earliest point (C-major, then ε).
pub fn grid_search(inst: &SvrInstance, grid: &GridSpec) -> Result<OracleResult, OracleError> {
    grid.check()?;
    let sm = build_bilevel(inst);
    let kkt = build_kkt(&sm.model)?;
    grid_search_model(inst, &sm, &kkt, grid)
}

pub fn grid_search_model(
    inst: &SvrInstance,
    sm: &SvrModel,
    kkt: &KktSystem,
    grid: &GridSpec,
) -> Result<OracleResult, OracleError> {
    grid.check()?;
    let mut best: Option<OracleResult> = None;
    let mut evaluations = 0;
    let mut upper = vec![0.0; sm.model.num_variables()];
    for &c in &grid.c_values {
        for &eps in &grid.eps_values {
            upper[sm.c.index()] = c;
            upper[sm.eps.index()] = eps;
            let sol = solve_lower(&sm.model, kkt, &upper)?;
            evaluations += 1;
            let w: Vec<f64> = sm.w.iter().map(|v| sol.value(*v)).collect();
            let mut point = sol.point;
            let mut objective = 0.0;
            for (k, &i) in inst.out_idx.iter().enumerate() {
                let r = inst.residual(i, &w).abs();
                point[sm.xi_u[k].index()] = r;
                objective += r;
            }
            if best.as_ref().map_or(true, |b| objective < b.objective) {
                best = Some(OracleResult {
                    objective,
                    point,
                    certificate: Certificate::GridFeasible { c, eps },
                    evaluations: 0,
                });
            }
        }
    }
    let mut best = best.expect("grid is nonempty");
    best.evaluations = evaluations;
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumerateOptions {
    pub max_pairs: usize,
    /// Skip subtrees whose partial pattern is infeasible or strictly worse
    /// than the best leaf so far. Leaves are still visited in mask order, so
    /// the answer matches the plain enumeration.
    pub prune: bool,
}

impl Default for EnumerateOptions {
    fn default() -> Self {
        EnumerateOptions {
            max_pairs: DEFAULT_MAX_PAIRS,
            prune: true,
        }
    }
}

pub fn enumerate_patterns(
    model: &BilevelModel,
    kkt: &KktSystem,
) -> Result<OracleResult, OracleError> {
    enumerate_patterns_with(model, kkt, EnumerateOptions::default())
}

fn push_row(lp: &mut LinearProgram, expr: &AffineExpr, sense: Sense, rhs: f64) {
    lp.add_row(
        expr.terms().map(|(v, c)| (v.index(), c)).collect(),
        sense,
        rhs - expr.constant_term(),
    );
}

/// Bit `k` of a pattern set means pair `k` has zero slack; clear means its
/// multiplier is zero.
pub fn enumerate_patterns_with(
    model: &BilevelModel,
    kkt: &KktSystem,
    opts: EnumerateOptions,
) -> Result<OracleResult, OracleError> {
    let np = kkt.pairs.len();
    if np > opts.max_pairs || np >= 64 {
        return Err(OracleError::TooManyPairs {
            pairs: np,
            cap: opts.max_pairs,
        });
    }
    let obj = &model.upper_objective();
    if !obj.expr.is_affine() {
        return Err(OracleError::NonAffine("upper objective".into()));
    }
    let sign = if obj.sense == ObjSense::Max {
        -1.0
    } else {
        1.0
    };

    let n = kkt.num_vars();
    let mut base = LinearProgram::new(n);
    for v in model.variables() {
        base.lower[v.id.index()] = v.lower;
        base.upper[v.id.index()] = v.upper;
    }
    for d in &kkt.duals {
        base.lower[d.id.index()] = if d.free { f64::NEG_INFINITY } else { 0.0 };
        base.upper[d.id.index()] = f64::INFINITY;
    }
    for (v, c) in obj.expr.affine.terms() {
        base.cost[v.index()] = sign * c;
    }
    base.cost_constant = sign * obj.expr.affine.constant_term();
    for c in model.constraints() {
        if !c.body.is_affine() {
            return Err(OracleError::NonAffine(format!("constraint `{}`", c.name)));
        }
        push_row(&mut base, &c.body.affine, c.sense, c.rhs);
    }
    for s in &kkt.stationarity {
        push_row(&mut base, &s.expr, Sense::Eq, 0.0);
    }

    let mut search = Search {
        kkt,
        prune: opts.prune,
        best: None,
        evaluations: 0,
        unbounded: None,
    };
    // Most significant pair first with "multiplier zero" first visits leaves
    // in ascending mask order.
    search.visit(&base, np, 0)?;
    if let Some(mask) = search.unbounded {
        return Err(OracleError::UnboundedPattern { mask });
    }
    let (objective, mask, point) = search.best.ok_or(OracleError::Infeasible)?;
    Ok(OracleResult {
        objective: sign * objective,
        point,
        certificate: Certificate::PatternExact { mask },
        evaluations: search.evaluations,
    })
}

struct Search<'a> {
    kkt: &'a KktSystem,
    prune: bool,
    best: Option<(f64, u64, Vec<f64>)>,
    evaluations: usize,
    unbounded: Option<u64>,
}

impl Search<'_> {
    /// `depth` pairs remain unfixed: pairs `0..depth`.
    fn visit(&mut self, lp: &LinearProgram, depth: usize, mask: u64) -> Result<(), OracleError> {
        let leaf = depth == 0;
        if leaf || self.prune {
            let sol = lp.solve();
            self.evaluations += 1;
            match sol.status {
                LpStatus::Infeasible => return Ok(()),
                LpStatus::Unbounded => {
                    if leaf {
                        self.unbounded.get_or_insert(mask);
                        return Ok(());
                    }
                }
                LpStatus::IterationLimit => {
                    return Err(OracleError::Lp(format!(
                        "iteration limit at pattern {mask:#b}"
                    )))
                }
                LpStatus::Optimal => {
                    if let Some((b, _, _)) = &self.best {
                        if sol.objective > *b + TIE_TOL {
                            return Ok(());
                        }
                    }
                    if leaf {
                        let replace = self
                            .best
                            .as_ref()
                            .map_or(true, |(b, _, _)| sol.objective < *b - TIE_TOL);
                        if replace {
                            self.best = Some((sol.objective, mask, sol.x));
                        }
                        return Ok(());
                    }
                }
            }
        }
        let k = depth - 1;
        let pair = &self.kkt.pairs[k];
        let mut zero_dual = lp.clone();
        zero_dual.upper[pair.dual.index()] = 0.0;
        self.visit(&zero_dual, k, mask)?;
        let mut zero_slack = lp.clone();
        push_row(&mut zero_slack, &pair.slack, Sense::Eq, 0.0);
        self.visit(&zero_slack, k, mask | (1 << k))?;
        Ok(())
    }
}

/// Exact optimum of an SVR instance by pattern enumeration.
pub fn enumerate_instance(inst: &SvrInstance) -> Result<OracleResult, OracleError> {
    let sm = build_bilevel(inst);
    let kkt = build_kkt(&sm.model)?;
    enumerate_patterns(&sm.model, &kkt)
}
