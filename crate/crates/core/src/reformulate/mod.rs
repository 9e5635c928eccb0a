//! Single-level reformulations of a bilevel model through its lower-level
//! KKT system.
//!
//! Every mode starts from the same core ([`base_model`]): upper objective
//! and constraints, lower primal feasibility, dual sign restrictions and
//! stationarity. The modes differ only in how each complementarity pair
//! `dual >= 0, slack >= 0, dual * slack = 0` is encoded.

mod expansion;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::kkt::{lower_dual_objective, ComplementarityPair, KktError, KktSystem};
use crate::model::{
    AffineExpr, BilevelModel, Disjunction, IndicatorConstraint, Level, LinearConstraint, ObjSense,
    QuadExpr, QuadraticConstraint, Sense, SingleLevelModel, SlmVariable, Sos1Set, VarId, VarOrigin,
};

pub use expansion::{binary_expand, ExpansionParams};

pub const DEFAULT_TAU: f64 = 1e-9;
pub const DEFAULT_BIG_M: f64 = 100.0;
pub const DEFAULT_BITS: u32 = 8;
pub const DEFAULT_BOUND: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Sos1,
    Indicator,
    BigM { primal_m: f64, dual_m: f64 },
    Product { tau: f64, expanded: bool },
    StrongDuality { expanded: bool },
}

impl Mode {
    pub fn needs_expansion(&self) -> bool {
        matches!(
            self,
            Mode::Product { expanded: true, .. } | Mode::StrongDuality { expanded: true }
        )
    }

    /// Command-line spelling.
    pub fn cli_name(&self) -> &'static str {
        match self {
            Mode::Sos1 => "sos1",
            Mode::Indicator => "indicator",
            Mode::BigM { .. } => "bigm",
            Mode::Product {
                expanded: false, ..
            } => "product",
            Mode::Product { expanded: true, .. } => "product-bin",
            Mode::StrongDuality { expanded: false } => "strong-duality",
            Mode::StrongDuality { expanded: true } => "strong-duality-bin",
        }
    }

    /// Parses a command-line mode name with the given parameters.
    pub fn parse(name: &str, big_m: f64, tau: f64) -> Option<Mode> {
        Some(match name {
            "sos1" => Mode::Sos1,
            "indicator" => Mode::Indicator,
            "bigm" => Mode::BigM {
                primal_m: big_m,
                dual_m: big_m,
            },
            "product" => Mode::Product {
                tau,
                expanded: false,
            },
            "product-bin" => Mode::Product {
                tau,
                expanded: true,
            },
            "strong-duality" => Mode::StrongDuality { expanded: false },
            "strong-duality-bin" => Mode::StrongDuality { expanded: true },
            _ => return None,
        })
    }

    /// Whether the internal solver treats the encoding as exact.
    pub fn is_exact(&self) -> bool {
        !self.needs_expansion() && !matches!(self, Mode::BigM { .. })
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReformulateError {
    #[error(transparent)]
    Kkt(#[from] KktError),
    #[error("mode {0} requires binary-expansion parameters")]
    MissingExpansion(Mode),
    #[error("mode {0} does not use binary-expansion parameters")]
    UnexpectedExpansion(Mode),
    #[error("big-M values must be positive (got primal {primal_m}, dual {dual_m})")]
    NonPositiveBigM { primal_m: f64, dual_m: f64 },
    #[error("product tolerance must be nonnegative (got {0})")]
    NegativeTau(f64),
    #[error("binary expansion needs at least one bit")]
    ZeroBits,
    #[error("expansion range [{lb}, {ub}] is empty or unbounded")]
    BadExpansionRange { lb: f64, ub: f64 },
    #[error("variable `{0}` has no finite bounds to linearize its product")]
    UnboundedPartner(String),
    #[error("upper-level constraint `{0}` is not affine")]
    NonAffineUpperConstraint(String),
}

/// A reformulated model with maps back to the auxiliary variables.
#[derive(Debug, Clone)]
pub struct ReformulationInfo {
    pub slm: SingleLevelModel,
    pub mode: Mode,
    pub expansion: Option<ExpansionParams>,
    /// dual and slack expression of every complementarity pair, in KKT order
    pub pairs: Vec<(VarId, AffineExpr)>,
    pub pair_binaries: BTreeMap<usize, VarId>,
    pub pair_slack_vars: BTreeMap<usize, VarId>,
    /// expanded variable -> its binaries (least significant first)
    pub expansion_vars: BTreeMap<VarId, Vec<VarId>>,
    /// (binary, partner) -> product variable
    pub product_links: BTreeMap<(VarId, VarId), VarId>,
}

impl ReformulationInfo {
    /// Extends a point over the model and dual variables with values of
    /// every auxiliary variable, so that it can be checked against `slm`.
    pub fn extend_point(&self, base: &[f64]) -> Vec<f64> {
        let n = self.slm.num_variables();
        let mut x = vec![0.0; n];
        x[..base.len()].copy_from_slice(base);
        for (k, (dual, slack)) in self.pairs.iter().enumerate() {
            let d = x[dual.index()];
            let s = slack.eval_dense(&x);
            if let Some(v) = self.pair_slack_vars.get(&k) {
                x[v.index()] = s;
            }
            if let Some(z) = self.pair_binaries.get(&k) {
                let on = match self.mode {
                    Mode::Indicator => d.abs() <= s.abs(),
                    _ => d > s,
                };
                x[z.index()] = if on { 1.0 } else { 0.0 };
            }
        }
        for (&p, bins) in &self.expansion_vars {
            let lb = self.slm.var(p).lower;
            let ub = self.slm.var(p).upper;
            let levels = (1u64 << bins.len()) - 1;
            let delta = (ub - lb) / levels as f64;
            let k = (((x[p.index()] - lb) / delta).round().max(0.0) as u64).min(levels);
            for (bit, b) in bins.iter().enumerate() {
                x[b.index()] = ((k >> bit) & 1) as f64;
            }
        }
        for (&(b, q), &u) in &self.product_links {
            x[u.index()] = x[b.index()] * x[q.index()];
        }
        x
    }
}

fn origin_of(model: &BilevelModel, v: VarId) -> VarOrigin {
    match model.level_of(v) {
        Level::Upper => VarOrigin::Upper,
        Level::Lower => VarOrigin::Lower,
    }
}

/// Shared core of every mode: everything except complementarity.
pub fn base_model(
    model: &BilevelModel,
    kkt: &KktSystem,
) -> Result<SingleLevelModel, ReformulateError> {
    let diags = model.validate();
    if !diags.is_empty() {
        return Err(KktError::InvalidModel(diags).into());
    }
    let mut slm = SingleLevelModel::default();
    for v in model.variables() {
        slm.add_variable(SlmVariable {
            name: v.name.clone(),
            lower: v.lower,
            upper: v.upper,
            binary: false,
            origin: origin_of(model, v.id),
        });
    }
    for d in &kkt.duals {
        let id = slm.add_variable(SlmVariable {
            name: d.name.clone(),
            lower: if d.free { f64::NEG_INFINITY } else { 0.0 },
            upper: f64::INFINITY,
            binary: false,
            origin: VarOrigin::Dual,
        });
        debug_assert_eq!(id, d.id);
    }
    slm.objective_sense = Some(model.upper_objective().sense);
    slm.objective = model.upper_objective().expr.affine.clone();

    for c in model.constraints_at(Level::Upper) {
        if !c.body.is_affine() {
            return Err(ReformulateError::NonAffineUpperConstraint(c.name.clone()));
        }
        slm.linear.push(LinearConstraint::new(
            c.name.clone(),
            c.body.affine.clone(),
            c.sense,
            c.rhs,
        ));
    }
    for c in model.constraints_at(Level::Lower) {
        slm.linear.push(LinearConstraint::new(
            c.name.clone(),
            c.body.affine.clone(),
            c.sense,
            c.rhs,
        ));
    }
    for s in &kkt.stationarity {
        let name = format!("stat_{}", model.variable(s.var).name);
        slm.linear
            .push(LinearConstraint::new(name, s.expr.clone(), Sense::Eq, 0.0));
    }
    Ok(slm)
}

/// `s = slack`, `s >= 0`, SOS1 {dual: 1, s: 2}. Returns `s`.
pub fn apply_sos1(slm: &mut SingleLevelModel, index: usize, pair: &ComplementarityPair) -> VarId {
    let s = slm.add_variable(SlmVariable {
        name: format!("slack_{index}"),
        lower: 0.0,
        upper: f64::INFINITY,
        binary: false,
        origin: VarOrigin::Auxiliary,
    });
    let expr = AffineExpr::var(s) - pair.slack.clone();
    slm.linear.push(LinearConstraint::new(
        format!("slackdef_{index}"),
        expr,
        Sense::Eq,
        0.0,
    ));
    slm.sos1.push(Sos1Set {
        name: format!("sos_{index}"),
        members: vec![(pair.dual, 1.0), (s, 2.0)],
    });
    s
}

fn new_binary(slm: &mut SingleLevelModel, name: String) -> VarId {
    slm.add_variable(SlmVariable {
        name,
        lower: 0.0,
        upper: 1.0,
        binary: true,
        origin: VarOrigin::Auxiliary,
    })
}

/// `z = 1 => dual <= 0` and `z = 0 => slack <= 0`. Returns `z`.
pub fn apply_indicator(
    slm: &mut SingleLevelModel,
    index: usize,
    pair: &ComplementarityPair,
) -> VarId {
    let z = new_binary(slm, format!("ind_{index}"));
    slm.indicators.push(IndicatorConstraint {
        name: format!("ind_dual_{index}"),
        binary: z,
        active: true,
        constraint: LinearConstraint::new(
            format!("ind_dual_{index}"),
            AffineExpr::var(pair.dual),
            Sense::Le,
            0.0,
        ),
    });
    slm.indicators.push(IndicatorConstraint {
        name: format!("ind_slack_{index}"),
        binary: z,
        active: false,
        constraint: LinearConstraint::new(
            format!("ind_slack_{index}"),
            pair.slack.clone(),
            Sense::Le,
            0.0,
        ),
    });
    z
}

/// `dual <= dual_m * z` and `slack <= primal_m * (1 - z)`. Returns `z`.
pub fn apply_bigm(
    slm: &mut SingleLevelModel,
    index: usize,
    pair: &ComplementarityPair,
    primal_m: f64,
    dual_m: f64,
) -> VarId {
    let z = new_binary(slm, format!("bigm_{index}"));
    let dual_row = AffineExpr::var(pair.dual) - AffineExpr::from_terms([(z, dual_m)], 0.0);
    slm.linear.push(LinearConstraint::new(
        format!("bigm_dual_{index}"),
        dual_row,
        Sense::Le,
        0.0,
    ));
    let slack_row = pair.slack.clone() + AffineExpr::from_terms([(z, primal_m)], 0.0);
    slm.linear.push(LinearConstraint::new(
        format!("bigm_slack_{index}"),
        slack_row,
        Sense::Le,
        primal_m,
    ));
    z
}

/// `dual * slack <= tau`.
pub fn apply_product(
    slm: &mut SingleLevelModel,
    index: usize,
    pair: &ComplementarityPair,
    tau: f64,
) {
    let dual = AffineExpr::var(pair.dual);
    let mut expr = dual.product(&pair.slack);
    let constant = expr.affine.constant_term();
    expr.affine.set_constant(0.0);
    slm.quadratic.push(QuadraticConstraint {
        name: format!("comp_{index}"),
        expr,
        sense: Sense::Le,
        rhs: tau - constant,
        disjunctions: vec![Disjunction {
            pair: index,
            left: dual,
            right: pair.slack.clone(),
        }],
    });
}

/// Single aggregate `primal objective - dual objective <= 0`.
pub fn apply_strong_duality(
    slm: &mut SingleLevelModel,
    kkt: &KktSystem,
    model: &BilevelModel,
) -> Result<(), ReformulateError> {
    let primal = model.lower_objective_as_min();
    let dual = lower_dual_objective(kkt, model)?;
    let mut expr = primal - dual;
    let constant = expr.affine.constant_term();
    expr.affine.set_constant(0.0);
    let disjunctions = kkt
        .pairs
        .iter()
        .enumerate()
        .map(|(k, p)| Disjunction {
            pair: k,
            left: AffineExpr::var(p.dual),
            right: p.slack.clone(),
        })
        .collect();
    slm.quadratic.push(QuadraticConstraint {
        name: "strong_duality".into(),
        expr,
        sense: Sense::Le,
        rhs: -constant,
        disjunctions,
    });
    Ok(())
}

/// Rewrites the pure lower-level quadratic part of `expr` through the
/// stationarity rows. With `L_a` the lower-variable part of row `a` and `R_a`
/// the rest, `L_a = -R_a` on the feasible set, so a form `q = k/2 Σ w_a L_a`
/// equals `-k/2 Σ w_a R_a`, which pairs lower variables only with duals,
/// upper variables and constants. Returns false when `q` is not a multiple
/// of that form and leaves `expr` alone.
pub fn substitute_lower_quadratic(
    expr: &mut QuadExpr,
    kkt: &KktSystem,
    slm: &SingleLevelModel,
) -> bool {
    let lower = |v: VarId| slm.var(v).origin == VarOrigin::Lower;
    let mut half_form = QuadExpr::new();
    let mut rest = Vec::new();
    for st in &kkt.stationarity {
        if !st.expr.terms().any(|(v, _)| lower(v)) {
            continue;
        }
        let mut r = AffineExpr::constant(st.expr.constant_term());
        for (v, c) in st.expr.terms() {
            if lower(v) {
                half_form.add_quad_term(st.var, v, 0.5 * c);
            } else {
                r.add_term(v, c);
            }
        }
        rest.push((st.var, r));
    }
    let pure: Vec<_> = expr
        .quad_terms()
        .filter(|(a, b, _)| lower(*a) && lower(*b))
        .collect();
    let Some(&(a0, b0, c0)) = pure.first() else {
        return false;
    };
    let p0 = half_form
        .quad_terms()
        .find(|(a, b, _)| (*a, *b) == (a0, b0))
        .map(|t| t.2)
        .unwrap_or(0.0);
    if p0 == 0.0 {
        return false;
    }
    let k = c0 / p0;
    let same = pure.len() == half_form.num_quad_terms()
        && pure.iter().zip(half_form.quad_terms()).all(|(x, y)| {
            (x.0, x.1) == (y.0, y.1) && (x.2 - k * y.2).abs() <= 1e-12 * x.2.abs().max(1.0)
        });
    if !same {
        return false;
    }
    let mut out = QuadExpr::from(expr.affine.clone());
    for (a, b, c) in expr.quad_terms() {
        if !(lower(a) && lower(b)) {
            out.add_quad_term(a, b, c);
        }
    }
    for (a, r) in &rest {
        out.affine.add_term(*a, -0.5 * k * r.constant_term());
        for (v, c) in r.terms() {
            out.add_quad_term(*a, v, -0.5 * k * c);
        }
    }
    *expr = out;
    true
}

pub fn reformulate(
    model: &BilevelModel,
    kkt: &KktSystem,
    mode: Mode,
    expansion: Option<ExpansionParams>,
) -> Result<ReformulationInfo, ReformulateError> {
    match (mode.needs_expansion(), expansion.is_some()) {
        (true, false) => return Err(ReformulateError::MissingExpansion(mode)),
        (false, true) => return Err(ReformulateError::UnexpectedExpansion(mode)),
        _ => {}
    }
    match mode {
        Mode::BigM { primal_m, dual_m } if !(primal_m > 0.0 && dual_m > 0.0) => {
            return Err(ReformulateError::NonPositiveBigM { primal_m, dual_m });
        }
        Mode::Product { tau, .. } if !(tau >= 0.0) => {
            return Err(ReformulateError::NegativeTau(tau))
        }
        _ => {}
    }
    if let Some(p) = &expansion {
        p.check()?;
    }

    let mut slm = base_model(model, kkt)?;
    let mut info = ReformulationInfo {
        slm: SingleLevelModel::default(),
        mode,
        expansion,
        pairs: kkt
            .pairs
            .iter()
            .map(|p| (p.dual, p.slack.clone()))
            .collect(),
        pair_binaries: BTreeMap::new(),
        pair_slack_vars: BTreeMap::new(),
        expansion_vars: BTreeMap::new(),
        product_links: BTreeMap::new(),
    };
    for (k, pair) in kkt.pairs.iter().enumerate() {
        match mode {
            Mode::Sos1 => {
                let s = apply_sos1(&mut slm, k, pair);
                info.pair_slack_vars.insert(k, s);
            }
            Mode::Indicator => {
                let z = apply_indicator(&mut slm, k, pair);
                info.pair_binaries.insert(k, z);
            }
            Mode::BigM { primal_m, dual_m } => {
                let z = apply_bigm(&mut slm, k, pair, primal_m, dual_m);
                info.pair_binaries.insert(k, z);
            }
            Mode::Product { tau, .. } => apply_product(&mut slm, k, pair, tau),
            Mode::StrongDuality { .. } => {}
        }
    }
    if let Mode::StrongDuality { expanded } = mode {
        apply_strong_duality(&mut slm, kkt, model)?;
        if expanded {
            // expanding w in w^2 would pin the lower solution to the grid
            let mut q = slm.quadratic[0].expr.clone();
            if substitute_lower_quadratic(&mut q, kkt, &slm) {
                slm.quadratic[0].expr = q;
            }
        }
    }
    if let Some(params) = expansion {
        let all: Vec<usize> = (0..slm.quadratic.len()).collect();
        binary_expand(&mut slm, &all, &params, &mut info)?;
    }
    if slm.objective_sense.is_none() {
        slm.objective_sense = Some(ObjSense::Min);
    }
    info.slm = slm;
    Ok(info)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kkt::build_kkt;
    use crate::svr::{build_bilevel, generate_instance, SvrInstance};

    fn one_sample() -> SvrInstance {
        SvrInstance::from_data(vec![vec![1.0], vec![1.0]], vec![1.0, 1.0], vec![0]).unwrap()
    }

    fn ten_two() -> (BilevelModel, KktSystem) {
        let inst = generate_instance(10, 2, 42, 0.1).unwrap();
        let m = build_bilevel(&inst).model;
        let k = build_kkt(&m).unwrap();
        (m, k)
    }

    #[test]
    fn bigm_counts() {
        let (m, k) = ten_two();
        let base = base_model(&m, &k).unwrap();
        let info = reformulate(
            &m,
            &k,
            Mode::BigM {
                primal_m: 100.0,
                dual_m: 100.0,
            },
            None,
        )
        .unwrap();
        assert_eq!(info.slm.num_binaries(), 15);
        assert_eq!(info.slm.linear.len() - base.linear.len(), 30);
        assert_eq!(info.pair_binaries.len(), 15);
    }

    #[test]
    fn sos1_counts() {
        let (m, k) = ten_two();
        let base = base_model(&m, &k).unwrap();
        let info = reformulate(&m, &k, Mode::Sos1, None).unwrap();
        assert_eq!(info.slm.sos1.len(), 15);
        assert_eq!(info.slm.num_variables() - base.num_variables(), 15);
        assert_eq!(info.slm.num_binaries(), 0);
        let mut members: Vec<VarId> = info
            .slm
            .sos1
            .iter()
            .flat_map(|s| s.members.iter().map(|m| m.0))
            .collect();
        let total = members.len();
        members.sort();
        members.dedup();
        assert_eq!(members.len(), total);
    }

    #[test]
    fn indicator_and_product_counts() {
        let (m, k) = ten_two();
        let info = reformulate(&m, &k, Mode::Indicator, None).unwrap();
        assert_eq!(info.slm.num_binaries(), 15);
        assert_eq!(info.slm.indicators.len(), 30);
        let info = reformulate(
            &m,
            &k,
            Mode::Product {
                tau: 0.0,
                expanded: false,
            },
            None,
        )
        .unwrap();
        assert_eq!(info.slm.quadratic.len(), 15);
        assert!(info
            .slm
            .quadratic
            .iter()
            .all(|q| q.sense == Sense::Le && q.rhs == 0.0));
        let info = reformulate(&m, &k, Mode::StrongDuality { expanded: false }, None).unwrap();
        assert_eq!(info.slm.quadratic.len(), 1);
        assert_eq!(info.slm.quadratic[0].disjunctions.len(), 15);
    }

    #[test]
    fn product_pass_through_and_violation() {
        let inst = one_sample();
        let m = build_bilevel(&inst).model;
        let k = build_kkt(&m).unwrap();
        let info = reformulate(
            &m,
            &k,
            Mode::Product {
                tau: 1e-9,
                expanded: false,
            },
            None,
        )
        .unwrap();
        let q = &info.slm.quadratic[2];
        // μ·ξ <= 1e-9
        assert_eq!(q.rhs, 1e-9);
        assert_eq!(q.expr.num_quad_terms(), 1);
        let mut x = vec![0.0; info.slm.num_variables()];
        let mu = k.pairs[2].dual;
        let xi = build_bilevel(&inst).xi_l[0];
        x[mu.index()] = 1.0;
        x[xi.index()] = 1.0;
        assert!((q.violation(&x) - (1.0 - 1e-9)).abs() < 1e-15);
    }

    #[test]
    fn argument_errors() {
        let (m, k) = ten_two();
        assert!(matches!(
            reformulate(
                &m,
                &k,
                Mode::BigM {
                    primal_m: 0.0,
                    dual_m: 1.0
                },
                None
            ),
            Err(ReformulateError::NonPositiveBigM { .. })
        ));
        assert!(matches!(
            reformulate(
                &m,
                &k,
                Mode::Product {
                    tau: 0.0,
                    expanded: true
                },
                None
            ),
            Err(ReformulateError::MissingExpansion(_))
        ));
        assert!(matches!(
            reformulate(
                &m,
                &k,
                Mode::Product {
                    tau: -1.0,
                    expanded: false
                },
                None
            ),
            Err(ReformulateError::NegativeTau(_))
        ));
        let params = ExpansionParams {
            var_lb: -100.0,
            var_ub: 100.0,
            bits: 0,
        };
        assert!(matches!(
            reformulate(&m, &k, Mode::StrongDuality { expanded: true }, Some(params)),
            Err(ReformulateError::ZeroBits)
        ));
    }

    #[test]
    fn strong_duality_zero_at_one_sample_optimum() {
        let inst = one_sample();
        let sm = build_bilevel(&inst);
        let k = build_kkt(&sm.model).unwrap();
        let info =
            reformulate(&sm.model, &k, Mode::StrongDuality { expanded: false }, None).unwrap();
        let q = &info.slm.quadratic[0];
        let mut x = vec![0.0; info.slm.num_variables()];
        x[sm.c.index()] = 2.0;
        x[sm.w[0].index()] = 1.0;
        x[k.pairs[0].dual.index()] = 2.0;
        let value = q.expr.eval_dense(&x) - q.rhs;
        assert!(value.abs() < 1e-12);
    }

    #[test]
    fn expanded_strong_duality_keeps_w_continuous() {
        let inst = generate_instance(6, 2, 5, 0.1).unwrap();
        let sm = build_bilevel(&inst);
        let k = build_kkt(&sm.model).unwrap();
        let plain =
            reformulate(&sm.model, &k, Mode::StrongDuality { expanded: false }, None).unwrap();
        let mut q = plain.slm.quadratic[0].expr.clone();
        assert!(substitute_lower_quadratic(&mut q, &k, &plain.slm));
        assert!(q
            .quad_terms()
            .all(|(a, b, _)| !(sm.w.contains(&a) && sm.w.contains(&b))));
        // both forms agree wherever stationarity holds
        let mut upper = vec![0.0; sm.model.num_variables()];
        upper[sm.c.index()] = 3.0;
        upper[sm.eps.index()] = 0.1;
        let lower = crate::oracle::solve_lower(&sm.model, &k, &upper).unwrap();
        let mut x = lower.point.clone();
        x.resize(plain.slm.num_variables(), 0.0);
        let before = plain.slm.quadratic[0].expr.eval_dense(&x);
        assert!((q.eval_dense(&x) - before).abs() < 1e-9);

        let params = ExpansionParams::symmetric(100.0, 6);
        let info = reformulate(
            &sm.model,
            &k,
            Mode::StrongDuality { expanded: true },
            Some(params),
        )
        .unwrap();
        for w in &sm.w {
            assert!(!info.expansion_vars.contains_key(w));
        }
    }

    #[test]
    fn mode_names_round_trip() {
        for name in [
            "sos1",
            "indicator",
            "bigm",
            "product",
            "product-bin",
            "strong-duality",
            "strong-duality-bin",
        ] {
            let mode = Mode::parse(name, 100.0, 1e-9).unwrap();
            assert_eq!(mode.cli_name(), name);
        }
        assert!(Mode::parse("fa", 1.0, 0.0).is_none());
    }
}
