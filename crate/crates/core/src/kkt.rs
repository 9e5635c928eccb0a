//! Lower-level KKT system with upper-level variables treated as parameters.
//!
//! Every lower inequality is brought to the form `slack >= 0` (`<=` rows are
//! negated) and gets a multiplier `>= 0` subtracted in the Lagrangian:
//!
//! ```text
//! L = f(x, u) - Σ dual_i * slack_i(x, u)
//! ```
//!
//! Finite lower-variable bounds get their own multipliers; infinite bounds
//! get none. Equalities get free multipliers and no complementarity pair.
//! Multipliers are allocated as variables that continue the host model's
//! `VarId` numbering.

use thiserror::Error;

use crate::model::{
    AffineExpr, Assignment, BilevelModel, ConstraintId, Diagnostic, Level, ModelError, QuadExpr,
    Sense, VarId,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KktError {
    #[error("model failed validation: {0:?}")]
    InvalidModel(Vec<Diagnostic>),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundSide {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DualSource {
    Constraint(ConstraintId),
    Bound(VarId, BoundSide),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualVar {
    pub id: VarId,
    pub name: String,
    pub source: DualSource,
    /// equality multipliers are free; all others are sign-restricted `>= 0`
    pub free: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplementarityPair {
    pub dual: VarId,
    pub slack: AffineExpr,
    pub source: DualSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stationarity {
    pub var: VarId,
    /// required to equal zero
    pub expr: AffineExpr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EqualityRow {
    pub dual: VarId,
    /// `body - rhs`, required to equal zero
    pub residual: AffineExpr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KktSystem {
    pub num_model_vars: usize,
    pub duals: Vec<DualVar>,
    pub stationarity: Vec<Stationarity>,
    pub pairs: Vec<ComplementarityPair>,
    pub equalities: Vec<EqualityRow>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    pub stat_inf: f64,
    pub feas_inf: f64,
    pub comp_inf: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stat_inf.max(self.feas_inf).max(self.comp_inf)
    }
}

impl KktSystem {
    /// Model variables followed by the multipliers.
    pub fn num_vars(&self) -> usize {
        self.num_model_vars + self.duals.len()
    }

    pub fn dual(&self, id: VarId) -> Option<&DualVar> {
        id.index()
            .checked_sub(self.num_model_vars)
            .and_then(|k| self.duals.get(k))
    }

    pub fn dual_for(&self, source: DualSource) -> Option<VarId> {
        self.duals.iter().find(|d| d.source == source).map(|d| d.id)
    }

    pub fn kkt_residual(&self, point: &Assignment) -> Result<KktResiduals, ModelError> {
        let mut stat_inf = 0.0f64;
        for s in &self.stationarity {
            stat_inf = stat_inf.max(s.expr.evaluate(point)?.abs());
        }
        let mut feas_inf = 0.0f64;
        let mut comp_inf = 0.0f64;
        for pair in &self.pairs {
            let slack = pair.slack.evaluate(point)?;
            let dual = *point
                .get(&pair.dual)
                .ok_or(ModelError::MissingAssignment(pair.dual))?;
            feas_inf = feas_inf.max(-slack).max(-dual);
            comp_inf = comp_inf.max((dual * slack).abs());
        }
        for eq in &self.equalities {
            feas_inf = feas_inf.max(eq.residual.evaluate(point)?.abs());
        }
        Ok(KktResiduals {
            stat_inf,
            feas_inf,
            comp_inf,
        })
    }
}

fn require_valid(model: &BilevelModel) -> Result<(), KktError> {
    let diags = model.validate();
    if diags.is_empty() {
        Ok(())
    } else {
        Err(KktError::InvalidModel(diags))
    }
}

pub fn build_kkt(model: &BilevelModel) -> Result<KktSystem, KktError> {
    require_valid(model)?;
    let base = model.num_variables();
    let mut duals = Vec::new();
    let mut pairs = Vec::new();
    let mut equalities = Vec::new();
    let mut next = base;
    let mut alloc = |name: String, source: DualSource, free: bool, duals: &mut Vec<DualVar>| {
        let id = VarId::from_index(next);
        next += 1;
        duals.push(DualVar {
            id,
            name,
            source,
            free,
        });
        id
    };

    // (dual, slack) for every multiplier, used to assemble stationarity
    let mut lagrangian_terms: Vec<(VarId, AffineExpr)> = Vec::new();

    for c in model.constraints_at(Level::Lower) {
        let body = &c.body.affine;
        let source = DualSource::Constraint(c.id);
        let name = format!("dual_{}", c.name);
        match c.sense {
            Sense::Eq => {
                let id = alloc(name, source, true, &mut duals);
                let mut residual = body.clone();
                residual.add_constant(-c.rhs);
                lagrangian_terms.push((id, residual.clone()));
                equalities.push(EqualityRow { dual: id, residual });
            }
            Sense::Ge | Sense::Le => {
                let id = alloc(name, source, false, &mut duals);
                let mut slack = body.clone();
                slack.add_constant(-c.rhs);
                if c.sense == Sense::Le {
                    slack = slack.scaled(-1.0);
                }
                lagrangian_terms.push((id, slack.clone()));
                pairs.push(ComplementarityPair {
                    dual: id,
                    slack,
                    source,
                });
            }
        }
    }
    for v in model.vars_at(Level::Lower) {
        if v.lower.is_finite() {
            let source = DualSource::Bound(v.id, BoundSide::Lower);
            let id = alloc(format!("dual_lb_{}", v.name), source, false, &mut duals);
            let slack = AffineExpr::from_terms([(v.id, 1.0)], -v.lower);
            lagrangian_terms.push((id, slack.clone()));
            pairs.push(ComplementarityPair {
                dual: id,
                slack,
                source,
            });
        }
        if v.upper.is_finite() {
            let source = DualSource::Bound(v.id, BoundSide::Upper);
            let id = alloc(format!("dual_ub_{}", v.name), source, false, &mut duals);
            let slack = AffineExpr::from_terms([(v.id, -1.0)], v.upper);
            lagrangian_terms.push((id, slack.clone()));
            pairs.push(ComplementarityPair {
                dual: id,
                slack,
                source,
            });
        }
    }

    let f = model.lower_objective_as_min();
    let stationarity = model
        .vars_at(Level::Lower)
        .map(|v| {
            let mut expr = f.derivative(v.id);
            for (dual, slack) in &lagrangian_terms {
                let coef = slack.coefficient(v.id);
                if coef != 0.0 {
                    expr.add_term(*dual, -coef);
                }
            }
            Stationarity { var: v.id, expr }
        })
        .collect();

    Ok(KktSystem {
        num_model_vars: base,
        duals,
        stationarity,
        pairs,
        equalities,
    })
}

/// Dual objective `D` of the lower level, parameterized by the upper
/// variables: `D = -xᵀQx + Σ dual_i * b_i(u) + k(u)` where the lower
/// objective is `xᵀQx + c(u)ᵀx + k(u)` and each slack is `A_i x - b_i(u)`.
///
/// At any point satisfying stationarity, `f - D = Σ dual_i * slack_i`
/// (equality multipliers included).
pub fn lower_dual_objective(kkt: &KktSystem, model: &BilevelModel) -> Result<QuadExpr, KktError> {
    require_valid(model)?;
    let f = model.lower_objective_as_min();
    let is_lower =
        |v: VarId| v.index() < model.num_variables() && model.level_of(v) == Level::Lower;

    let mut d = QuadExpr::new();
    for (a, b, c) in f.quad_terms() {
        if is_lower(a) && is_lower(b) {
            d.add_quad_term(a, b, -c);
        }
    }
    // k(u): terms of f free of lower variables
    for (v, c) in f.affine.terms() {
        if !is_lower(v) {
            d.affine.add_term(v, c);
        }
    }
    d.affine.add_constant(f.affine.constant_term());

    let mut add_dual_terms = |dual: VarId, slack: &AffineExpr| {
        // b(u) = -(slack restricted to non-lower terms)
        for (v, c) in slack.terms() {
            if !is_lower(v) {
                d.add_quad_term(dual, v, -c);
            }
        }
        d.affine.add_term(dual, -slack.constant_term());
    };
    for pair in &kkt.pairs {
        add_dual_terms(pair.dual, &pair.slack);
    }
    for eq in &kkt.equalities {
        add_dual_terms(eq.dual, &eq.residual);
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ObjSense;

    /// One in-sample point (x=1, y=1) and one out-of-sample point (1, 1).
    pub(crate) fn one_sample() -> (BilevelModel, [VarId; 5]) {
        let mut m = BilevelModel::new();
        let c = m
            .add_variable(Level::Upper, 0.0, f64::INFINITY, "C")
            .unwrap();
        let eps = m
            .add_variable(Level::Upper, 0.0, f64::INFINITY, "eps")
            .unwrap();
        let xu = m
            .add_variable(Level::Upper, 0.0, f64::INFINITY, "xi_U")
            .unwrap();
        let w = m
            .add_variable(Level::Lower, f64::NEG_INFINITY, f64::INFINITY, "w")
            .unwrap();
        let xl = m
            .add_variable(Level::Lower, 0.0, f64::INFINITY, "xi_L")
            .unwrap();
        m.set_objective(Level::Upper, ObjSense::Min, AffineExpr::var(xu));
        m.add_constraint(
            Level::Upper,
            AffineExpr::var(xu) + AffineExpr::var(w),
            Sense::Ge,
            1.0,
        )
        .unwrap();
        m.add_constraint(
            Level::Upper,
            AffineExpr::var(xu) - AffineExpr::var(w),
            Sense::Ge,
            -1.0,
        )
        .unwrap();
        m.set_objective(Level::Lower, ObjSense::Min, (w * w) + (c * xl));
        let base = AffineExpr::var(xl) + AffineExpr::var(eps);
        m.add_constraint(
            Level::Lower,
            base.clone() + AffineExpr::var(w),
            Sense::Ge,
            1.0,
        )
        .unwrap();
        m.add_constraint(Level::Lower, base - AffineExpr::var(w), Sense::Ge, -1.0)
            .unwrap();
        (m, [c, eps, xu, w, xl])
    }

    #[test]
    fn one_sample_structure() {
        let (m, [c, eps, _xu, w, xl]) = one_sample();
        let k = build_kkt(&m).unwrap();
        assert_eq!(k.stationarity.len(), 2);
        assert_eq!(k.pairs.len(), 3);
        let (ap, am, mu) = (k.pairs[0].dual, k.pairs[1].dual, k.pairs[2].dual);
        // 2w - α⁺ + α⁻
        let s_w = &k.stationarity[0].expr;
        assert_eq!(s_w.coefficient(w), 2.0);
        assert_eq!(s_w.coefficient(ap), -1.0);
        assert_eq!(s_w.coefficient(am), 1.0);
        assert_eq!(s_w.num_terms(), 3);
        // C - α⁺ - α⁻ - μ
        let s_xi = &k.stationarity[1].expr;
        assert_eq!(s_xi.coefficient(c), 1.0);
        assert_eq!(s_xi.coefficient(ap), -1.0);
        assert_eq!(s_xi.coefficient(am), -1.0);
        assert_eq!(s_xi.coefficient(mu), -1.0);
        // slacks ξ+ε-1+w, ξ+ε+1-w, ξ
        let expect = [
            AffineExpr::from_terms([(xl, 1.0), (eps, 1.0), (w, 1.0)], -1.0),
            AffineExpr::from_terms([(xl, 1.0), (eps, 1.0), (w, -1.0)], 1.0),
            AffineExpr::var(xl),
        ];
        for (p, e) in k.pairs.iter().zip(expect.iter()) {
            assert_eq!(&p.slack, e);
        }
        assert_eq!(k.duals[0].name, "dual_c2");
        assert_eq!(k.duals[2].name, "dual_lb_xi_L");
        assert!(k.stationarity.iter().all(|s| s.expr.num_terms() > 0));
    }

    fn point(entries: &[(VarId, f64)]) -> Assignment {
        entries.iter().copied().collect()
    }

    #[test]
    fn residual_examples() {
        let (m, [c, eps, xu, w, xl]) = one_sample();
        let k = build_kkt(&m).unwrap();
        let (ap, am, mu) = (k.pairs[0].dual, k.pairs[1].dual, k.pairs[2].dual);
        let mut pt = point(&[
            (w, 1.0),
            (xl, 0.0),
            (eps, 0.0),
            (c, 2.0),
            (xu, 0.0),
            (ap, 2.0),
            (am, 0.0),
            (mu, 0.0),
        ]);
        let r = k.kkt_residual(&pt).unwrap();
        assert_eq!((r.stat_inf, r.feas_inf, r.comp_inf), (0.0, 0.0, 0.0));

        pt.insert(ap, 2.1);
        let r = k.kkt_residual(&pt).unwrap();
        assert!((r.stat_inf - 0.1).abs() < 1e-12);

        let zeros = point(&[
            (w, 0.0),
            (xl, 0.0),
            (eps, 0.0),
            (c, 0.0),
            (xu, 0.0),
            (ap, 0.0),
            (am, 0.0),
            (mu, 0.0),
        ]);
        assert_eq!(k.kkt_residual(&zeros).unwrap().feas_inf, 1.0);

        let partial = point(&[(w, 1.0)]);
        assert!(matches!(
            k.kkt_residual(&partial),
            Err(ModelError::MissingAssignment(_))
        ));
    }

    #[test]
    fn equality_gets_free_dual_and_no_pair() {
        let mut m = BilevelModel::new();
        let u = m.add_variable(Level::Upper, 0.0, 1.0, "u").unwrap();
        let x = m
            .add_variable(Level::Lower, f64::NEG_INFINITY, f64::INFINITY, "x")
            .unwrap();
        m.set_objective(Level::Lower, ObjSense::Min, x * x);
        m.add_constraint(
            Level::Lower,
            AffineExpr::var(x) - AffineExpr::var(u),
            Sense::Eq,
            0.0,
        )
        .unwrap();
        let k = build_kkt(&m).unwrap();
        assert_eq!(k.pairs.len(), 0);
        assert_eq!(k.equalities.len(), 1);
        assert!(k.duals[0].free);
    }

    #[test]
    fn no_lower_constraints_dual_is_objective() {
        let mut m = BilevelModel::new();
        let u = m.add_variable(Level::Upper, 0.0, 1.0, "u").unwrap();
        let x = m
            .add_variable(Level::Lower, f64::NEG_INFINITY, f64::INFINITY, "x")
            .unwrap();
        m.set_objective(Level::Lower, ObjSense::Min, (x * x) + (u * x));
        let k = build_kkt(&m).unwrap();
        let d = lower_dual_objective(&k, &m).unwrap();
        // at a stationary point (2x + u = 0) primal and dual agree
        let f = m.lower_objective().expr.clone();
        for &uv in &[0.0, 0.3, 1.0] {
            let pt = point(&[(u, uv), (x, -uv / 2.0)]);
            let gap = f.evaluate(&pt).unwrap() - d.evaluate(&pt).unwrap();
            assert!(gap.abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_model_rejected() {
        let mut m = BilevelModel::new();
        let x = m.add_variable(Level::Lower, 0.0, 1.0, "x").unwrap();
        m.set_objective(Level::Lower, ObjSense::Min, (x * x) * -1.0);
        assert!(matches!(build_kkt(&m), Err(KktError::InvalidModel(_))));
    }
}
