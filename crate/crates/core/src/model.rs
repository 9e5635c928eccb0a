//! Algebraic intermediate representation for bilevel programs and for the
//! flat single-level problems produced by reformulation.
//!
//! Expressions keep their terms in ordered maps so that iteration order,
//! and therefore every derived model and exported file, is deterministic.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

/// Opaque handle of a decision variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub(crate) usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }

    pub fn from_index(index: usize) -> Self {
        VarId(index)
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// Opaque handle of a constraint of a [`BilevelModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConstraintId(pub(crate) usize);

impl ConstraintId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObjSense {
    Min,
    Max,
}

/// Values assigned to variables.
pub type Assignment = HashMap<VarId, f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("variable name `{0}` is already in use")]
    DuplicateName(String),
    #[error("inverted bounds on `{name}`: lower {lower} > upper {upper}")]
    InvertedBounds {
        name: String,
        lower: f64,
        upper: f64,
    },
    #[error("unknown variable {0}")]
    UnknownVariable(VarId),
    #[error("lower-level constraint is not affine")]
    NonAffineLowerConstraint,
    #[error("no value assigned to variable {0}")]
    MissingAssignment(VarId),
}

/// Linear combination of variables plus a constant.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AffineExpr {
    terms: BTreeMap<VarId, f64>,
    constant: f64,
}

impl AffineExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(value: f64) -> Self {
        AffineExpr {
            terms: BTreeMap::new(),
            constant: value,
        }
    }

    pub fn var(v: VarId) -> Self {
        let mut e = Self::new();
        e.add_term(v, 1.0);
        e
    }

    pub fn from_terms<I: IntoIterator<Item = (VarId, f64)>>(terms: I, constant: f64) -> Self {
        let mut e = Self::constant(constant);
        for (v, c) in terms {
            e.add_term(v, c);
        }
        e
    }

    /// Adds `coef * v`, dropping the entry if the coefficient cancels to zero.
    pub fn add_term(&mut self, v: VarId, coef: f64) {
        if coef == 0.0 {
            return;
        }
        let entry = self.terms.entry(v).or_insert(0.0);
        *entry += coef;
        if *entry == 0.0 {
            self.terms.remove(&v);
        }
    }

    pub fn add_constant(&mut self, c: f64) {
        self.constant += c;
    }

    pub fn constant_term(&self) -> f64 {
        self.constant
    }

    pub fn set_constant(&mut self, c: f64) {
        self.constant = c;
    }

    pub fn coefficient(&self, v: VarId) -> f64 {
        self.terms.get(&v).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (VarId, f64)> + '_ {
        self.terms.iter().map(|(v, c)| (*v, *c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn variables(&self) -> impl Iterator<Item = VarId> + '_ {
        self.terms.keys().copied()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = Self::constant(self.constant * factor);
        for (v, c) in self.terms() {
            out.add_term(v, c * factor);
        }
        out
    }

    pub fn add_scaled(&mut self, other: &AffineExpr, factor: f64) {
        for (v, c) in other.terms() {
            self.add_term(v, c * factor);
        }
        self.constant += other.constant * factor;
    }

    /// Returns the expression without its constant part.
    pub fn without_constant(&self) -> Self {
        AffineExpr {
            terms: self.terms.clone(),
            constant: 0.0,
        }
    }

    pub fn evaluate(&self, point: &Assignment) -> Result<f64, ModelError> {
        let mut total = self.constant;
        for (v, c) in self.terms() {
            let x = point.get(&v).ok_or(ModelError::MissingAssignment(v))?;
            total += c * x;
        }
        Ok(total)
    }

    /// Evaluates against a dense vector indexed by `VarId::index`.
    pub fn eval_dense(&self, x: &[f64]) -> f64 {
        self.constant + self.terms().map(|(v, c)| c * x[v.0]).sum::<f64>()
    }

    /// Product of two affine forms.
    pub fn product(&self, other: &AffineExpr) -> QuadExpr {
        let mut q = QuadExpr::new();
        for (a, ca) in self.terms() {
            for (b, cb) in other.terms() {
                q.add_quad_term(a, b, ca * cb);
            }
        }
        for (a, ca) in self.terms() {
            q.affine.add_term(a, ca * other.constant);
        }
        for (b, cb) in other.terms() {
            q.affine.add_term(b, cb * self.constant);
        }
        q.affine.constant = self.constant * other.constant;
        q
    }
}

/// Quadratic expression: `sum q_ab * x_a * x_b + affine`, with keys stored
/// as `(min, max)` so that `(a, b)` and `(b, a)` never coexist.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QuadExpr {
    quad: BTreeMap<(VarId, VarId), f64>,
    pub affine: AffineExpr,
}

impl QuadExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_quad_term(&mut self, a: VarId, b: VarId, coef: f64) {
        if coef == 0.0 {
            return;
        }
        let key = if a <= b { (a, b) } else { (b, a) };
        let entry = self.quad.entry(key).or_insert(0.0);
        *entry += coef;
        if *entry == 0.0 {
            self.quad.remove(&key);
        }
    }

    pub fn quad_terms(&self) -> impl Iterator<Item = (VarId, VarId, f64)> + '_ {
        self.quad.iter().map(|((a, b), c)| (*a, *b, *c))
    }

    pub fn num_quad_terms(&self) -> usize {
        self.quad.len()
    }

    pub fn is_affine(&self) -> bool {
        self.quad.is_empty()
    }

    pub fn variables(&self) -> Vec<VarId> {
        let mut vars: Vec<VarId> = self
            .quad
            .keys()
            .flat_map(|(a, b)| [*a, *b])
            .chain(self.affine.variables())
            .collect();
        vars.sort();
        vars.dedup();
        vars
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = QuadExpr {
            quad: BTreeMap::new(),
            affine: self.affine.scaled(factor),
        };
        for (a, b, c) in self.quad_terms() {
            out.add_quad_term(a, b, c * factor);
        }
        out
    }

    pub fn add_scaled(&mut self, other: &QuadExpr, factor: f64) {
        for (a, b, c) in other.quad_terms() {
            self.add_quad_term(a, b, c * factor);
        }
        self.affine.add_scaled(&other.affine, factor);
    }

    /// Each stored key is visited exactly once.
    pub fn evaluate(&self, point: &Assignment) -> Result<f64, ModelError> {
        let mut total = self.affine.evaluate(point)?;
        for (a, b, c) in self.quad_terms() {
            let xa = point.get(&a).ok_or(ModelError::MissingAssignment(a))?;
            let xb = point.get(&b).ok_or(ModelError::MissingAssignment(b))?;
            total += c * xa * xb;
        }
        Ok(total)
    }

    pub fn eval_dense(&self, x: &[f64]) -> f64 {
        self.affine.eval_dense(x)
            + self
                .quad_terms()
                .map(|(a, b, c)| c * x[a.0] * x[b.0])
                .sum::<f64>()
    }

    /// Partial derivative with respect to `v`, which is affine.
    pub fn derivative(&self, v: VarId) -> AffineExpr {
        let mut d = AffineExpr::constant(self.affine.coefficient(v));
        for (a, b, c) in self.quad_terms() {
            if a == v && b == v {
                d.add_term(v, 2.0 * c);
            } else if a == v {
                d.add_term(b, c);
            } else if b == v {
                d.add_term(a, c);
            }
        }
        d
    }
}

impl From<AffineExpr> for QuadExpr {
    fn from(affine: AffineExpr) -> Self {
        QuadExpr {
            quad: BTreeMap::new(),
            affine,
        }
    }
}

impl From<VarId> for AffineExpr {
    fn from(v: VarId) -> Self {
        AffineExpr::var(v)
    }
}

impl From<VarId> for QuadExpr {
    fn from(v: VarId) -> Self {
        AffineExpr::var(v).into()
    }
}

impl From<f64> for AffineExpr {
    fn from(c: f64) -> Self {
        AffineExpr::constant(c)
    }
}

impl From<f64> for QuadExpr {
    fn from(c: f64) -> Self {
        AffineExpr::constant(c).into()
    }
}

impl Add for AffineExpr {
    type Output = AffineExpr;
    fn add(mut self, rhs: AffineExpr) -> AffineExpr {
        self.add_scaled(&rhs, 1.0);
        self
    }
}

impl Sub for AffineExpr {
    type Output = AffineExpr;
    fn sub(mut self, rhs: AffineExpr) -> AffineExpr {
        self.add_scaled(&rhs, -1.0);
        self
    }
}

impl Neg for AffineExpr {
    type Output = AffineExpr;
    fn neg(self) -> AffineExpr {
        self.scaled(-1.0)
    }
}

impl AddAssign<AffineExpr> for AffineExpr {
    fn add_assign(&mut self, rhs: AffineExpr) {
        self.add_scaled(&rhs, 1.0);
    }
}

impl SubAssign<AffineExpr> for AffineExpr {
    fn sub_assign(&mut self, rhs: AffineExpr) {
        self.add_scaled(&rhs, -1.0);
    }
}

impl Mul<f64> for AffineExpr {
    type Output = AffineExpr;
    fn mul(self, rhs: f64) -> AffineExpr {
        self.scaled(rhs)
    }
}

impl Mul<VarId> for f64 {
    type Output = AffineExpr;
    fn mul(self, rhs: VarId) -> AffineExpr {
        AffineExpr::from_terms([(rhs, self)], 0.0)
    }
}

impl Mul<VarId> for VarId {
    type Output = QuadExpr;
    fn mul(self, rhs: VarId) -> QuadExpr {
        let mut q = QuadExpr::new();
        q.add_quad_term(self, rhs, 1.0);
        q
    }
}

impl Add for QuadExpr {
    type Output = QuadExpr;
    fn add(mut self, rhs: QuadExpr) -> QuadExpr {
        self.add_scaled(&rhs, 1.0);
        self
    }
}

impl Sub for QuadExpr {
    type Output = QuadExpr;
    fn sub(mut self, rhs: QuadExpr) -> QuadExpr {
        self.add_scaled(&rhs, -1.0);
        self
    }
}

impl Add<AffineExpr> for QuadExpr {
    type Output = QuadExpr;
    fn add(mut self, rhs: AffineExpr) -> QuadExpr {
        self.affine.add_scaled(&rhs, 1.0);
        self
    }
}

impl AddAssign<QuadExpr> for QuadExpr {
    fn add_assign(&mut self, rhs: QuadExpr) {
        self.add_scaled(&rhs, 1.0);
    }
}

impl Mul<f64> for QuadExpr {
    type Output = QuadExpr;
    fn mul(self, rhs: f64) -> QuadExpr {
        self.scaled(rhs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariableInfo {
    pub id: VarId,
    pub level: Level,
    pub lower: f64,
    pub upper: f64,
    pub name: String,
}

/// Stored as `body SENSE rhs`; any constant in the body given at creation is
/// folded into `rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub id: ConstraintId,
    pub name: String,
    pub level: Level,
    pub body: QuadExpr,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub sense: ObjSense,
    pub expr: QuadExpr,
}

impl Default for Objective {
    fn default() -> Self {
        Objective {
            sense: ObjSense::Min,
            expr: QuadExpr::new(),
        }
    }
}

/// Structural problems reported by [`BilevelModel::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    NonAffineUpperObjective,
    NonConvexLower {
        min_eigenvalue: f64,
    },
    NonAffineLowerConstraint {
        constraint: ConstraintId,
    },
    /// Quadratic term of the lower objective that is not lower×lower or upper×lower.
    InvalidBilinearTerm {
        a: VarId,
        b: VarId,
    },
    NonAffineUpperConstraint {
        constraint: ConstraintId,
    },
    UnknownVariable(VarId),
}

/// Two-level model: upper-level variables act as parameters of the lower
/// level. Ties in the lower level are resolved in the upper level's favour.
#[derive(Debug, Clone, Default)]
pub struct BilevelModel {
    variables: Vec<VariableInfo>,
    names: HashMap<String, VarId>,
    constraints: Vec<Constraint>,
    upper_objective: Objective,
    lower_objective: Objective,
}

impl BilevelModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable(
        &mut self,
        level: Level,
        lower: f64,
        upper: f64,
        name: &str,
    ) -> Result<VarId, ModelError> {
        if self.names.contains_key(name) {
            return Err(ModelError::DuplicateName(name.to_string()));
        }
        if lower > upper || lower.is_nan() || upper.is_nan() {
            return Err(ModelError::InvertedBounds {
                name: name.to_string(),
                lower,
                upper,
            });
        }
        let id = VarId(self.variables.len());
        self.variables.push(VariableInfo {
            id,
            level,
            lower,
            upper,
            name: name.to_string(),
        });
        self.names.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn add_constraint(
        &mut self,
        level: Level,
        body: impl Into<QuadExpr>,
        sense: Sense,
        rhs: f64,
    ) -> Result<ConstraintId, ModelError> {
        let name = format!("c{}", self.constraints.len());
        self.add_named_constraint(&name, level, body, sense, rhs)
    }

    pub fn add_named_constraint(
        &mut self,
        name: &str,
        level: Level,
        body: impl Into<QuadExpr>,
        sense: Sense,
        rhs: f64,
    ) -> Result<ConstraintId, ModelError> {
        let mut body: QuadExpr = body.into();
        for v in body.variables() {
            self.check_var(v)?;
        }
        if level == Level::Lower && !body.is_affine() {
            return Err(ModelError::NonAffineLowerConstraint);
        }
        let rhs = rhs - body.affine.constant_term();
        body.affine.set_constant(0.0);
        let id = ConstraintId(self.constraints.len());
        self.constraints.push(Constraint {
            id,
            name: name.to_string(),
            level,
            body,
            sense,
            rhs,
        });
        Ok(id)
    }

    /// Replaces the objective of `level`. Structure is checked by [`validate`](Self::validate).
    pub fn set_objective(&mut self, level: Level, sense: ObjSense, expr: impl Into<QuadExpr>) {
        let objective = Objective {
            sense,
            expr: expr.into(),
        };
        match level {
            Level::Upper => self.upper_objective = objective,
            Level::Lower => self.lower_objective = objective,
        }
    }

    fn check_var(&self, v: VarId) -> Result<(), ModelError> {
        if v.0 < self.variables.len() {
            Ok(())
        } else {
            Err(ModelError::UnknownVariable(v))
        }
    }

    pub fn variables(&self) -> &[VariableInfo] {
        &self.variables
    }

    pub fn variable(&self, v: VarId) -> &VariableInfo {
        &self.variables[v.0]
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.names.get(name).copied()
    }

    pub fn level_of(&self, v: VarId) -> Level {
        self.variables[v.0].level
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn constraint(&self, id: ConstraintId) -> &Constraint {
        &self.constraints[id.0]
    }

    pub fn upper_objective(&self) -> &Objective {
        &self.upper_objective
    }

    pub fn lower_objective(&self) -> &Objective {
        &self.lower_objective
    }

    pub fn vars_at(&self, level: Level) -> impl Iterator<Item = &VariableInfo> + '_ {
        self.variables.iter().filter(move |v| v.level == level)
    }

    pub fn constraints_at(&self, level: Level) -> impl Iterator<Item = &Constraint> + '_ {
        self.constraints.iter().filter(move |c| c.level == level)
    }

    /// Lower objective written as a minimization.
    pub fn lower_objective_as_min(&self) -> QuadExpr {
        match self.lower_objective.sense {
            ObjSense::Min => self.lower_objective.expr.clone(),
            ObjSense::Max => self.lower_objective.expr.scaled(-1.0),
        }
    }

    /// Hessian of the (minimization-form) lower objective restricted to the
    /// lower-level variables, in the order of `lower_vars`.
    pub fn lower_hessian(&self, lower_vars: &[VarId]) -> DMatrix<f64> {
        let pos: HashMap<VarId, usize> = lower_vars
            .iter()
            .enumerate()
            .map(|(i, v)| (*v, i))
            .collect();
        let n = lower_vars.len();
        let mut h = DMatrix::zeros(n, n);
        for (a, b, c) in self.lower_objective_as_min().quad_terms() {
            if let (Some(&i), Some(&j)) = (pos.get(&a), pos.get(&b)) {
                if i == j {
                    h[(i, i)] += 2.0 * c;
                } else {
                    h[(i, j)] += c;
                    h[(j, i)] += c;
                }
            }
        }
        h
    }

    /// Returns an empty list iff the model is a bilevel program with an
    /// affine upper objective and a convex QP lower level.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let n = self.variables.len();
        let mut referenced: Vec<VarId> = self.upper_objective.expr.variables();
        referenced.extend(self.lower_objective.expr.variables());
        for c in &self.constraints {
            referenced.extend(c.body.variables());
        }
        referenced.sort();
        referenced.dedup();
        for v in referenced {
            if v.0 >= n {
                out.push(Diagnostic::UnknownVariable(v));
            }
        }
        if !out.is_empty() {
            return out;
        }

        if !self.upper_objective.expr.is_affine() {
            out.push(Diagnostic::NonAffineUpperObjective);
        }
        for c in &self.constraints {
            if c.body.is_affine() {
                continue;
            }
            match c.level {
                Level::Lower => out.push(Diagnostic::NonAffineLowerConstraint { constraint: c.id }),
                Level::Upper => out.push(Diagnostic::NonAffineUpperConstraint { constraint: c.id }),
            }
        }
        for (a, b, _) in self.lower_objective.expr.quad_terms() {
            let la = self.level_of(a);
            let lb = self.level_of(b);
            if la == Level::Upper && lb == Level::Upper {
                out.push(Diagnostic::InvalidBilinearTerm { a, b });
            }
        }
        let lower_vars: Vec<VarId> = self.vars_at(Level::Lower).map(|v| v.id).collect();
        if !lower_vars.is_empty() {
            let h = self.lower_hessian(&lower_vars);
            let min_eig = SymmetricEigen::new(h)
                .eigenvalues
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            if min_eig < -1e-9 {
                out.push(Diagnostic::NonConvexLower {
                    min_eigenvalue: min_eig,
                });
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarOrigin {
    Upper,
    Lower,
    Dual,
    Auxiliary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlmVariable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub binary: bool,
    pub origin: VarOrigin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub name: String,
    pub expr: AffineExpr,
    pub sense: Sense,
    pub rhs: f64,
}

impl LinearConstraint {
    /// Builds `expr SENSE rhs`, folding the expression constant into `rhs`.
    pub fn new(name: impl Into<String>, expr: AffineExpr, sense: Sense, rhs: f64) -> Self {
        let rhs = rhs - expr.constant_term();
        LinearConstraint {
            name: name.into(),
            expr: expr.without_constant(),
            sense,
            rhs,
        }
    }

    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.expr.eval_dense(x);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// A pair of nonnegative affine forms whose product must vanish.
#[derive(Debug, Clone, PartialEq)]
pub struct Disjunction {
    pub pair: usize,
    pub left: AffineExpr,
    pub right: AffineExpr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticConstraint {
    pub name: String,
    pub expr: QuadExpr,
    pub sense: Sense,
    pub rhs: f64,
    /// Complementarity structure of the constraint: given linear feasibility,
    /// it holds at tolerance zero iff every listed product vanishes.
    pub disjunctions: Vec<Disjunction>,
}

impl QuadraticConstraint {
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.expr.eval_dense(x);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sos1Set {
    pub name: String,
    pub members: Vec<(VarId, f64)>,
}

/// `binary = active  =>  constraint`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorConstraint {
    pub name: String,
    pub binary: VarId,
    pub active: bool,
    pub constraint: LinearConstraint,
}

/// Flat mixed-integer problem with complementarity structure.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SingleLevelModel {
    pub variables: Vec<SlmVariable>,
    pub linear: Vec<LinearConstraint>,
    pub quadratic: Vec<QuadraticConstraint>,
    pub sos1: Vec<Sos1Set>,
    pub indicators: Vec<IndicatorConstraint>,
    /// Complementarities left behind when products are linearized. The
    /// internal solver branches on them; file writers skip them.
    pub complementarity: Vec<Disjunction>,
    /// Bits of binary expansions, least significant first; `Σ 2^k b_k` is
    /// an integer the solver may branch on directly.
    pub binary_levels: Vec<Vec<VarId>>,
    pub objective_sense: Option<ObjSense>,
    pub objective: AffineExpr,
}

impl SingleLevelModel {
    pub fn add_variable(&mut self, var: SlmVariable) -> VarId {
        self.variables.push(var);
        VarId(self.variables.len() - 1)
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn num_binaries(&self) -> usize {
        self.variables.iter().filter(|v| v.binary).count()
    }

    pub fn sense(&self) -> ObjSense {
        self.objective_sense.unwrap_or(ObjSense::Min)
    }

    pub fn var(&self, v: VarId) -> &SlmVariable {
        &self.variables[v.0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_var_model() -> (BilevelModel, VarId, VarId) {
        let mut m = BilevelModel::new();
        let c = m
            .add_variable(Level::Upper, 0.0, f64::INFINITY, "C")
            .unwrap();
        let w = m
            .add_variable(Level::Lower, f64::NEG_INFINITY, f64::INFINITY, "w_1")
            .unwrap();
        (m, c, w)
    }

    #[test]
    fn first_handle_is_zero() {
        let (m, c, w) = two_var_model();
        assert_eq!(c.index(), 0);
        assert_eq!(m.variable(c).level, Level::Upper);
        assert_eq!(m.variable(w).level, Level::Lower);
        assert!(m.variable(w).lower.is_infinite() && m.variable(w).upper.is_infinite());
    }

    #[test]
    fn inverted_bounds_and_duplicate_names() {
        let (mut m, _, _) = two_var_model();
        assert!(matches!(
            m.add_variable(Level::Upper, 1.0, 0.0, "x"),
            Err(ModelError::InvertedBounds { .. })
        ));
        assert_eq!(
            m.add_variable(Level::Upper, 0.0, 1.0, "C"),
            Err(ModelError::DuplicateName("C".into()))
        );
    }

    #[test]
    fn constraint_errors() {
        let (mut m, _, w) = two_var_model();
        let w2 = m.add_variable(Level::Lower, -1.0, 1.0, "w_2").unwrap();
        assert_eq!(
            m.add_constraint(Level::Lower, w * w2, Sense::Le, 1.0),
            Err(ModelError::NonAffineLowerConstraint)
        );
        assert_eq!(
            m.add_constraint(Level::Upper, AffineExpr::var(VarId(99)), Sense::Le, 1.0),
            Err(ModelError::UnknownVariable(VarId(99)))
        );
        let id = m.add_constraint(Level::Upper, w, Sense::Eq, 5.0).unwrap();
        assert_eq!(m.constraint(id).sense, Sense::Eq);
        assert_eq!(m.constraint(id).rhs, 5.0);
    }

    #[test]
    fn constants_fold_into_rhs() {
        let (mut m, c, _) = two_var_model();
        let body = AffineExpr::from_terms([(c, 2.0)], 3.0);
        let id = m
            .add_constraint(Level::Upper, body, Sense::Ge, 1.0)
            .unwrap();
        let con = m.constraint(id);
        assert_eq!(con.rhs, -2.0);
        assert_eq!(con.body.affine.constant_term(), 0.0);
        assert_eq!(con.body.affine.coefficient(c), 2.0);
    }

    #[test]
    fn evaluate_examples() {
        let (_, c, w) = two_var_model();
        let xi = VarId(2);
        let mut pt = Assignment::new();
        pt.insert(c, 2.0);
        pt.insert(xi, 3.0);
        assert_eq!((c * xi).evaluate(&pt).unwrap(), 6.0);

        let mut pt = Assignment::new();
        pt.insert(w, -2.0);
        assert_eq!(
            ((w * w) + AffineExpr::constant(1.0)).evaluate(&pt).unwrap(),
            5.0
        );
        assert_eq!(QuadExpr::new().evaluate(&Assignment::new()).unwrap(), 0.0);
        assert_eq!((c * w).evaluate(&pt), Err(ModelError::MissingAssignment(c)));
    }

    #[test]
    fn quad_keys_are_canonical() {
        let a = VarId(3);
        let b = VarId(1);
        let mut q = a * b;
        q.add_quad_term(b, a, 2.0);
        assert_eq!(q.num_quad_terms(), 1);
        assert_eq!(q.quad_terms().next().unwrap(), (b, a, 3.0));
    }

    #[test]
    fn zero_coefficients_are_not_stored() {
        let v = VarId(0);
        let mut e = AffineExpr::var(v);
        e.add_term(v, -1.0);
        assert_eq!(e.num_terms(), 0);
        e.add_term(VarId(4), 0.0);
        assert_eq!(e.num_terms(), 0);
    }

    #[test]
    fn validate_catches_structure() {
        let (mut m, c, w) = two_var_model();
        m.set_objective(Level::Upper, ObjSense::Min, AffineExpr::constant(0.0));
        m.set_objective(Level::Lower, ObjSense::Min, w * w);
        assert!(m.validate().is_empty());

        m.set_objective(Level::Lower, ObjSense::Min, (w * w) * -1.0);
        assert!(matches!(
            m.validate()[..],
            [Diagnostic::NonConvexLower { .. }]
        ));

        m.set_objective(Level::Lower, ObjSense::Min, w * w);
        m.set_objective(Level::Upper, ObjSense::Min, w * w);
        assert_eq!(m.validate(), vec![Diagnostic::NonAffineUpperObjective]);

        m.set_objective(Level::Upper, ObjSense::Min, AffineExpr::var(c));
        m.set_objective(Level::Lower, ObjSense::Min, (w * w) + (c * c));
        assert_eq!(
            m.validate(),
            vec![Diagnostic::InvalidBilinearTerm { a: c, b: c }]
        );
    }

    #[test]
    fn derivative_of_quadratic() {
        let (_, c, w) = two_var_model();
        let xi = VarId(2);
        let f = (w * w) + (c * xi);
        let dw = f.derivative(w);
        assert_eq!(dw.coefficient(w), 2.0);
        let dxi = f.derivative(xi);
        assert_eq!(dxi.coefficient(c), 1.0);
        assert_eq!(dxi.num_terms(), 1);
    }
}
