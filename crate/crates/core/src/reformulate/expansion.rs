//! Binary expansion of bilinear terms.
//!
//! For a product `p * q`, the designated factor `p` is restricted to the
//! grid `lb + Δ Σ 2^k b_k` with `Δ = (ub - lb) / (2^bits - 1)`, and each
//! `b_k * q` is replaced by a continuous variable tied to it by the four
//! McCormick inequalities, which are exact because `b_k` is binary.

use super::{ReformulateError, ReformulationInfo};
use crate::model::{
    AffineExpr, LinearConstraint, Sense, SingleLevelModel, SlmVariable, VarId, VarOrigin,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionParams {
    pub var_lb: f64,
    pub var_ub: f64,
    pub bits: u32,
}

impl Default for ExpansionParams {
    fn default() -> Self {
        ExpansionParams {
            var_lb: -super::DEFAULT_BOUND,
            var_ub: super::DEFAULT_BOUND,
            bits: super::DEFAULT_BITS,
        }
    }
}

impl ExpansionParams {
    pub fn symmetric(bound: f64, bits: u32) -> Self {
        ExpansionParams {
            var_lb: -bound,
            var_ub: bound,
            bits,
        }
    }

    pub(crate) fn check(&self) -> Result<(), ReformulateError> {
        if self.bits < 1 {
            return Err(ReformulateError::ZeroBits);
        }
        if !(self.var_lb < self.var_ub) {
            return Err(ReformulateError::BadExpansionRange {
                lb: self.var_lb,
                ub: self.var_ub,
            });
        }
        Ok(())
    }

    /// Grid spacing for a variable ranging over `[lb, ub]`.
    pub fn spacing(&self, lb: f64, ub: f64) -> f64 {
        (ub - lb) / ((1u64 << self.bits) - 1) as f64
    }

    /// Every value representable on `[lb, ub]`, ascending.
    pub fn grid(&self, lb: f64, ub: f64) -> Vec<f64> {
        let delta = self.spacing(lb, ub);
        (0..(1u64 << self.bits))
            .map(|k| lb + delta * k as f64)
            .collect()
    }
}

fn rank(slm: &SingleLevelModel, v: VarId) -> u8 {
    match slm.var(v).origin {
        VarOrigin::Dual => 0,
        VarOrigin::Upper => 1,
        _ => 2,
    }
}

/// Factor of `a * b` that gets expanded: a dual, else an upper-level
/// variable, else the smaller id.
pub(crate) fn designated_factor(slm: &SingleLevelModel, a: VarId, b: VarId) -> (VarId, VarId) {
    let (ra, rb) = (rank(slm, a), rank(slm, b));
    if ra < rb || (ra == rb && a <= b) {
        (a, b)
    } else {
        (b, a)
    }
}

/// Intersects the variable's bounds with the expansion range and requires a
/// bounded result.
fn clip_bounds(
    slm: &mut SingleLevelModel,
    v: VarId,
    params: &ExpansionParams,
) -> Result<(f64, f64), ReformulateError> {
    let var = &mut slm.variables[v.index()];
    let lb = var.lower.max(params.var_lb);
    let ub = var.upper.min(params.var_ub);
    if !lb.is_finite() || !ub.is_finite() {
        return Err(ReformulateError::UnboundedPartner(var.name.clone()));
    }
    if lb > ub {
        return Err(ReformulateError::BadExpansionRange { lb, ub });
    }
    var.lower = lb;
    var.upper = ub;
    Ok((lb, ub))
}

fn expand_variable(
    slm: &mut SingleLevelModel,
    p: VarId,
    params: &ExpansionParams,
    info: &mut ReformulationInfo,
) -> Result<(f64, f64, Vec<VarId>), ReformulateError> {
    if let Some(bins) = info.expansion_vars.get(&p) {
        let var = slm.var(p);
        let delta = params.spacing(var.lower, var.upper);
        return Ok((var.lower, delta, bins.clone()));
    }
    let (lb, ub) = clip_bounds(slm, p, params)?;
    let delta = params.spacing(lb, ub);
    let name = slm.var(p).name.clone();
    let bins: Vec<VarId> = (0..params.bits)
        .map(|k| {
            slm.add_variable(SlmVariable {
                name: format!("bin_{name}_{k}"),
                lower: 0.0,
                upper: 1.0,
                binary: true,
                origin: VarOrigin::Auxiliary,
            })
        })
        .collect();
    let mut link = AffineExpr::var(p);
    for (k, b) in bins.iter().enumerate() {
        link.add_term(*b, -delta * (1u64 << k) as f64);
    }
    slm.linear.push(LinearConstraint::new(
        format!("expand_{name}"),
        link,
        Sense::Eq,
        lb,
    ));
    info.expansion_vars.insert(p, bins.clone());
    slm.binary_levels.push(bins.clone());
    Ok((lb, delta, bins))
}

fn product_var(
    slm: &mut SingleLevelModel,
    b: VarId,
    q: VarId,
    info: &mut ReformulationInfo,
) -> VarId {
    if let Some(&u) = info.product_links.get(&(b, q)) {
        return u;
    }
    let (ql, qu) = (slm.var(q).lower, slm.var(q).upper);
    let name = format!("prod_{}_{}", slm.var(b).name, slm.var(q).name);
    let u = slm.add_variable(SlmVariable {
        name: name.clone(),
        lower: ql.min(0.0),
        upper: qu.max(0.0),
        binary: false,
        origin: VarOrigin::Auxiliary,
    });
    let ub = AffineExpr::var(u);
    // u >= ql b ; u <= qu b ; u >= q - qu (1 - b) ; u <= q - ql (1 - b)
    slm.linear.push(LinearConstraint::new(
        format!("{name}_mc1"),
        ub.clone() - AffineExpr::from_terms([(b, ql)], 0.0),
        Sense::Ge,
        0.0,
    ));
    slm.linear.push(LinearConstraint::new(
        format!("{name}_mc2"),
        ub.clone() - AffineExpr::from_terms([(b, qu)], 0.0),
        Sense::Le,
        0.0,
    ));
    slm.linear.push(LinearConstraint::new(
        format!("{name}_mc3"),
        ub.clone() - AffineExpr::from_terms([(q, 1.0), (b, qu)], -qu),
        Sense::Ge,
        0.0,
    ));
    slm.linear.push(LinearConstraint::new(
        format!("{name}_mc4"),
        ub - AffineExpr::from_terms([(q, 1.0), (b, ql)], -ql),
        Sense::Le,
        0.0,
    ));
    info.product_links.insert((b, q), u);
    u
}

/// Replaces the listed quadratic constraints by exact linear models of their
/// binary-expanded versions. Constraints not listed are kept as they are.
pub fn binary_expand(
    slm: &mut SingleLevelModel,
    quad_constraints: &[usize],
    params: &ExpansionParams,
    info: &mut ReformulationInfo,
) -> Result<(), ReformulateError> {
    params.check()?;
    let mut selected: Vec<usize> = quad_constraints.to_vec();
    selected.sort_unstable();
    selected.dedup();
    let taken: Vec<_> = selected.iter().map(|&i| slm.quadratic[i].clone()).collect();
    for &i in selected.iter().rev() {
        slm.quadratic.remove(i);
    }
    for q in taken {
        let mut lin = q.expr.affine.clone();
        for (a, b, coef) in q.expr.quad_terms() {
            let (p, partner) = if a == b {
                (a, a)
            } else {
                designated_factor(slm, a, b)
            };
            if p != partner {
                clip_bounds(slm, partner, params)?;
            }
            let (lb, delta, bins) = expand_variable(slm, p, params, info)?;
            // coef * p * partner = coef * (lb * partner + Δ Σ 2^k b_k partner)
            lin.add_term(partner, coef * lb);
            for (k, bin) in bins.iter().enumerate() {
                let u = product_var(slm, *bin, partner, info);
                lin.add_term(u, coef * delta * (1u64 << k) as f64);
            }
        }
        slm.linear
            .push(LinearConstraint::new(q.name, lin, q.sense, q.rhs));
        slm.complementarity.extend(q.disjunctions);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{QuadExpr, QuadraticConstraint};
    use crate::reformulate::Mode;
    use std::collections::BTreeMap;

    #[test]
    fn two_bit_grid() {
        let p = ExpansionParams::symmetric(100.0, 2);
        let grid = p.grid(0.0, 100.0);
        let expect = [0.0, 100.0 / 3.0, 200.0 / 3.0, 100.0];
        for (a, b) in grid.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((ExpansionParams::default().spacing(0.0, 100.0) - 0.392156862745098).abs() < 1e-12);
    }

    fn empty_info() -> ReformulationInfo {
        ReformulationInfo {
            slm: SingleLevelModel::default(),
            mode: Mode::Product {
                tau: 0.0,
                expanded: true,
            },
            expansion: None,
            pairs: Vec::new(),
            pair_binaries: BTreeMap::new(),
            pair_slack_vars: BTreeMap::new(),
            expansion_vars: BTreeMap::new(),
            product_links: BTreeMap::new(),
        }
    }

    fn var(slm: &mut SingleLevelModel, name: &str, lo: f64, hi: f64, origin: VarOrigin) -> VarId {
        slm.add_variable(SlmVariable {
            name: name.into(),
            lower: lo,
            upper: hi,
            binary: false,
            origin,
        })
    }

    #[test]
    fn single_bilinear_term_counts() {
        let mut slm = SingleLevelModel::default();
        let xi = var(&mut slm, "xi", 0.0, f64::INFINITY, VarOrigin::Lower);
        let c = var(&mut slm, "C", 0.0, f64::INFINITY, VarOrigin::Upper);
        slm.quadratic.push(QuadraticConstraint {
            name: "q".into(),
            expr: c * xi,
            sense: Sense::Le,
            rhs: 0.0,
            disjunctions: Vec::new(),
        });
        let mut info = empty_info();
        let before_vars = slm.num_variables();
        binary_expand(
            &mut slm,
            &[0],
            &ExpansionParams::symmetric(100.0, 8),
            &mut info,
        )
        .unwrap();
        assert_eq!(slm.num_binaries(), 8);
        assert_eq!(slm.num_variables() - before_vars, 16);
        let mccormick = slm.linear.iter().filter(|l| l.name.contains("_mc")).count();
        assert_eq!(mccormick, 32);
        assert_eq!(info.expansion_vars[&c].len(), 8);
        assert!(slm.quadratic.is_empty());
        // C was chosen (upper beats lower), and both factors got clipped
        assert_eq!((slm.var(c).lower, slm.var(c).upper), (0.0, 100.0));
        assert_eq!((slm.var(xi).lower, slm.var(xi).upper), (0.0, 100.0));
    }

    #[test]
    fn expansion_is_exact_on_grid_points() {
        // w² with w in [-100, 100]: at any grid value the linear model equals w²
        let mut slm = SingleLevelModel::default();
        let w = var(
            &mut slm,
            "w",
            f64::NEG_INFINITY,
            f64::INFINITY,
            VarOrigin::Lower,
        );
        let mut q = QuadExpr::new();
        q.add_quad_term(w, w, 1.0);
        slm.quadratic.push(QuadraticConstraint {
            name: "sq".into(),
            expr: q,
            sense: Sense::Le,
            rhs: 0.0,
            disjunctions: Vec::new(),
        });
        let params = ExpansionParams::symmetric(100.0, 3);
        let mut info = empty_info();
        binary_expand(&mut slm, &[0], &params, &mut info).unwrap();
        info.slm = slm.clone();
        let row = slm.linear.iter().find(|l| l.name == "sq").unwrap();
        for value in params.grid(-100.0, 100.0) {
            let mut base = vec![0.0; 1];
            base[0] = value;
            let x = info.extend_point(&base);
            assert!(slm
                .linear
                .iter()
                .filter(|l| l.name != "sq")
                .all(|l| l.violation(&x) < 1e-9));
            assert!((row.expr.eval_dense(&x) - value * value).abs() < 1e-9);
        }
    }

    #[test]
    fn unbounded_range_rejected() {
        let mut slm = SingleLevelModel::default();
        let a = var(&mut slm, "a", 0.0, 1.0, VarOrigin::Dual);
        let b = var(
            &mut slm,
            "b",
            f64::NEG_INFINITY,
            f64::INFINITY,
            VarOrigin::Lower,
        );
        slm.quadratic.push(QuadraticConstraint {
            name: "q".into(),
            expr: a * b,
            sense: Sense::Le,
            rhs: 0.0,
            disjunctions: Vec::new(),
        });
        let params = ExpansionParams {
            var_lb: f64::NEG_INFINITY,
            var_ub: f64::INFINITY,
            bits: 4,
        };
        assert!(matches!(
            binary_expand(&mut slm, &[0], &params, &mut empty_info()),
            Err(ReformulateError::UnboundedPartner(_))
        ));
        let params = ExpansionParams::symmetric(10.0, 0);
        assert!(matches!(
            binary_expand(&mut slm, &[0], &params, &mut empty_info()),
            Err(ReformulateError::ZeroBits)
        ));
    }
}
