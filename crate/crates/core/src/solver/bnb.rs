//! Best-bound branch-and-bound over a [`SingleLevelModel`].
//!
//! Node relaxations are LPs: integrality, SOS1 sets, indicator implications
//! and quadratic complementarity constraints are dropped and enforced by
//! branching. Complementarity products are branched as the disjunction
//! `left = 0 | right = 0`, which enforces them at tolerance zero; a
//! positive product tolerance is only meaningful for exported models.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::rc::Rc;
use std::time::Instant;

use super::dual::{BoundedLp, DualSimplex, DualStatus};
use super::lp::{LinearProgram, LpStatus};
use crate::model::{AffineExpr, ObjSense, Sense, SingleLevelModel, VarOrigin};
use crate::reformulate::{Mode, ReformulationInfo};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub time_limit_s: f64,
    pub gap_tol: f64,
    pub node_limit: Option<u64>,
    pub feas_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            time_limit_s: 600.0,
            gap_tol: 1e-6,
            node_limit: None,
            feas_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    TimeLimit,
    NodeLimit,
    Infeasible,
    Unbounded,
    Error,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "Optimal",
            SolveStatus::TimeLimit => "TimeLimit",
            SolveStatus::NodeLimit => "NodeLimit",
            SolveStatus::Infeasible => "Infeasible",
            SolveStatus::Unbounded => "Unbounded",
            SolveStatus::Error => "Error",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BigMSide {
    Dual,
    Primal,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    BigMBoundActive {
        pair: usize,
        side: BigMSide,
        value: f64,
        m: f64,
    },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::BigMBoundActive {
                pair,
                side,
                value,
                m,
            } => {
                let side = match side {
                    BigMSide::Dual => "dual",
                    BigMSide::Primal => "slack",
                };
                write!(
                    f,
                    "BigMBoundActive(pair {pair}, {side} {value:.4} at M={m})"
                )
            }
        }
    }
}

/// Global bound and incumbent after a processed node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEvent {
    pub node: u64,
    pub bound: f64,
    pub incumbent: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub point: Option<Vec<f64>>,
    pub objective: Option<f64>,
    pub bound: Option<f64>,
    pub gap_pct: Option<f64>,
    pub time_s: f64,
    pub nodes: u64,
    pub warnings: Vec<Warning>,
    pub trace: Vec<TraceEvent>,
    pub message: String,
}

/// `100 |objective - bound| / max(|bound|, 1e-10)`.
pub fn compute_gap(objective: f64, bound: f64) -> f64 {
    100.0 * (objective - bound).abs() / bound.abs().max(1e-10)
}

pub const GAP_FORMULA: &str = "100*|obj-bound|/max(|bound|,1e-10)";

/// One bound change `lo <= v <= hi` on a structural or row variable of the
/// node relaxation.
type Fix = (usize, f64, f64);

/// Fixes applied along the path from the root, newest first.
struct FixList {
    fix: Fix,
    parent: Option<Rc<FixList>>,
}

fn fixes_of(list: &Option<Rc<FixList>>) -> Vec<Fix> {
    let mut out = Vec::new();
    let mut cur = list.as_ref();
    while let Some(l) = cur {
        out.push(l.fix);
        cur = l.parent.as_ref();
    }
    out.reverse();
    out
}

struct Node {
    id: u64,
    bound: f64,
    fixes: Option<Rc<FixList>>,
    /// Solved relaxation of the parent, reused as a warm start.
    warm: Option<Rc<DualSimplex>>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // max-heap: smallest bound first, then lowest id
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// Complementarity disjunction with the fix that zeroes each side.
struct DisjunctionFix {
    left: AffineExpr,
    right: AffineExpr,
    fix_left: Fix,
    fix_right: Fix,
}

struct Engine<'a> {
    slm: &'a SingleLevelModel,
    base: Rc<BoundedLp>,
    disjunctions: Vec<DisjunctionFix>,
    /// Row variable holding `Σ 2^k b_k` for each expansion.
    levels: Vec<usize>,
    /// Row variable and its bounds once the indicator is active.
    indicators: Vec<Fix>,
    sign: f64,
    opts: SolveOptions,
    /// Solved root relaxation; nodes without a parent tableau restart here.
    root: std::cell::RefCell<Option<Rc<DualSimplex>>>,
}

/// Outcome of one node relaxation.
enum NodeLp {
    Optimal {
        x: Vec<f64>,
        objective: f64,
        state: Option<DualSimplex>,
    },
    Infeasible,
    Unbounded,
    Failed,
}

fn sense_bounds(sense: Sense, rhs: f64) -> (f64, f64) {
    match sense {
        Sense::Le => (f64::NEG_INFINITY, rhs),
        Sense::Ge => (rhs, f64::INFINITY),
        Sense::Eq => (rhs, rhs),
    }
}

impl<'a> Engine<'a> {
    fn new(slm: &'a SingleLevelModel, opts: SolveOptions) -> Self {
        let n = slm.num_variables();
        let sign = if slm.sense() == ObjSense::Max {
            -1.0
        } else {
            1.0
        };
        let mut lp = BoundedLp::new(n);
        for (j, v) in slm.variables.iter().enumerate() {
            lp.lower[j] = v.lower;
            lp.upper[j] = v.upper;
            if v.binary {
                lp.lower[j] = lp.lower[j].max(0.0);
                lp.upper[j] = lp.upper[j].min(1.0);
            }
        }
        for (v, c) in slm.objective.terms() {
            lp.cost[v.index()] = sign * c;
        }
        lp.cost_constant = sign * slm.objective.constant_term();
        let coefs = |e: &AffineExpr| e.terms().map(|(v, c)| (v.index(), c)).collect::<Vec<_>>();
        for row in &slm.linear {
            lp.add_constraint(coefs(&row.expr), row.sense, row.rhs);
        }

        // one free row variable per distinct multi-term disjunction side
        let mut side_rows: HashMap<Vec<(usize, u64)>, usize> = HashMap::new();
        let mut zero_fix = |e: &AffineExpr, lp: &mut BoundedLp| -> Fix {
            let k = e.constant_term();
            let mut terms = e.terms();
            if let (Some((v, c)), None) = (terms.next(), terms.next()) {
                let val = -k / c;
                return (v.index(), val, val);
            }
            let key: Vec<(usize, u64)> = e.terms().map(|(v, c)| (v.index(), c.to_bits())).collect();
            let row = *side_rows
                .entry(key)
                .or_insert_with(|| lp.add_row(coefs(e), f64::NEG_INFINITY, f64::INFINITY));
            (row, -k, -k)
        };
        let mut disjunctions = Vec::new();
        let all = slm
            .quadratic
            .iter()
            .flat_map(|q| q.disjunctions.iter())
            .chain(slm.complementarity.iter());
        for d in all {
            let fix_left = zero_fix(&d.left, &mut lp);
            let fix_right = zero_fix(&d.right, &mut lp);
            disjunctions.push(DisjunctionFix {
                left: d.left.clone(),
                right: d.right.clone(),
                fix_left,
                fix_right,
            });
        }
        let levels = slm
            .binary_levels
            .iter()
            .map(|bits| {
                let top = ((1u64 << bits.len()) - 1) as f64;
                let terms = bits
                    .iter()
                    .enumerate()
                    .map(|(k, b)| (b.index(), (1u64 << k) as f64))
                    .collect();
                lp.add_row(terms, 0.0, top)
            })
            .collect();
        let indicators = slm
            .indicators
            .iter()
            .map(|ind| {
                let c = &ind.constraint;
                let row = lp.add_row(coefs(&c.expr), f64::NEG_INFINITY, f64::INFINITY);
                let (lo, hi) = sense_bounds(c.sense, c.rhs);
                (row, lo, hi)
            })
            .collect();
        Engine {
            slm,
            base: Rc::new(lp),
            disjunctions,
            levels,
            indicators,
            sign,
            opts,
            root: std::cell::RefCell::new(None),
        }
    }

    /// Imposes indicator rows whose binary is fixed to its active value.
    fn activate_indicators(&self, st: &mut DualSimplex) -> bool {
        for (ind, &(row, lo, hi)) in self.slm.indicators.iter().zip(&self.indicators) {
            let j = ind.binary.index();
            let target = if ind.active { 1.0 } else { 0.0 };
            let (l, u) = st.bounds();
            if l[j] == target && u[j] == target && !st.tighten(row, lo, hi) {
                return false;
            }
        }
        true
    }

    fn solve_node(&self, node: &mut Node) -> NodeLp {
        let mut st = match node.warm.take() {
            Some(parent) => {
                let mut st = Rc::try_unwrap(parent).unwrap_or_else(|rc| (*rc).clone());
                if let Some(l) = &node.fixes {
                    let (v, lo, hi) = l.fix;
                    if !st.tighten(v, lo, hi) {
                        return NodeLp::Infeasible;
                    }
                }
                st
            }
            None => {
                let mut st = match self.root.borrow().as_ref() {
                    Some(root) => (**root).clone(),
                    None => DualSimplex::new(self.base.clone()),
                };
                for (v, lo, hi) in fixes_of(&node.fixes) {
                    if !st.tighten(v, lo, hi) {
                        return NodeLp::Infeasible;
                    }
                }
                st
            }
        };
        if !self.activate_indicators(&mut st) {
            return NodeLp::Infeasible;
        }
        match st.solve() {
            DualStatus::Optimal => {
                let x = st.x();
                if self.accurate(&st, &x) {
                    let objective = st.objective();
                    if node.id == 0 {
                        let mut root = st.clone();
                        if root.refresh() {
                            *self.root.borrow_mut() = Some(Rc::new(root));
                        }
                    }
                    return NodeLp::Optimal {
                        x,
                        objective,
                        state: Some(st),
                    };
                }
            }
            DualStatus::Infeasible => return NodeLp::Infeasible,
            DualStatus::Inconclusive => {}
        }
        // fall back to a cold primal solve of the same relaxation
        let (lo, hi) = st.bounds();
        let sol = self.base.to_linear_program(lo, hi).solve();
        match sol.status {
            LpStatus::Optimal => NodeLp::Optimal {
                x: sol.x,
                objective: sol.objective,
                state: None,
            },
            LpStatus::Infeasible => NodeLp::Infeasible,
            LpStatus::Unbounded => NodeLp::Unbounded,
            LpStatus::IterationLimit => NodeLp::Failed,
        }
    }

    /// Checks the tableau point against the original rows and bounds.
    fn accurate(&self, st: &DualSimplex, x: &[f64]) -> bool {
        let (lo, hi) = st.bounds();
        let n = x.len();
        let tol = |b: f64| 1e-7 * (1.0 + b.abs());
        let ok = |v: f64, l: f64, u: f64| v >= l - tol(l) && v <= u + tol(u);
        (0..n).all(|j| ok(x[j], lo[j], hi[j]))
            && self.base.rows.iter().enumerate().all(|(i, row)| {
                let v: f64 = row.iter().map(|&(j, a)| a * x[j]).sum();
                ok(v, lo[n + i], hi[n + i])
            })
    }

    /// Chooses the two child fixes, or `None` if `x` satisfies everything.
    fn select_branch(&self, x: &[f64]) -> Option<[Fix; 2]> {
        let tol = self.opts.feas_tol;
        let mut worst: Option<(f64, [Fix; 2])> = None;
        let consider = |score: f64, branch: [Fix; 2], worst: &mut Option<(f64, [Fix; 2])>| {
            if score > tol && worst.as_ref().map_or(true, |(s, _)| score > *s) {
                *worst = Some((score, branch));
            }
        };
        for d in &self.disjunctions {
            let l = d.left.eval_dense(x);
            let r = d.right.eval_dense(x);
            consider((l * r).abs(), [d.fix_left, d.fix_right], &mut worst);
        }
        for s in &self.slm.sos1 {
            let mut mags: Vec<(f64, usize)> = s
                .members
                .iter()
                .map(|(v, _)| (x[v.index()].abs(), v.index()))
                .collect();
            mags.sort_by(|a, b| b.0.total_cmp(&a.0));
            if mags.len() >= 2 && mags[1].0 > tol {
                let (a, b) = (mags[0].1, mags[1].1);
                let score = mags[0].0 * mags[1].0;
                consider(
                    score.max(mags[1].0),
                    [(a, 0.0, 0.0), (b, 0.0, 0.0)],
                    &mut worst,
                );
            }
        }
        if let Some((_, b)) = worst {
            return Some(b);
        }

        let int_tol = 1e-6;
        // split the encoded integer before its individual bits
        let mut level: Option<(f64, usize, f64)> = None;
        for (g, bits) in self.slm.binary_levels.iter().enumerate() {
            let v: f64 = bits
                .iter()
                .enumerate()
                .map(|(k, b)| (1u64 << k) as f64 * x[b.index()])
                .sum();
            let frac = (v - v.floor()).min(v.ceil() - v);
            if frac > int_tol && level.map_or(true, |(f, _, _)| frac > f) {
                level = Some((frac, g, v));
            }
        }
        if let Some((_, g, v)) = level {
            let row = self.levels[g];
            let f = v.floor();
            return Some([(row, f64::NEG_INFINITY, f), (row, f + 1.0, f64::INFINITY)]);
        }

        let mut best: Option<(f64, usize)> = None;
        for (j, v) in self.slm.variables.iter().enumerate() {
            if !v.binary {
                continue;
            }
            let frac = (x[j] - x[j].floor()).min(x[j].ceil() - x[j]);
            if frac > int_tol && best.map_or(true, |(b, _)| frac > b) {
                best = Some((frac, j));
            }
        }
        let binary = |j: usize| [(j, 0.0, 0.0), (j, 1.0, 1.0)];
        if let Some((_, j)) = best {
            return Some(binary(j));
        }
        for ind in &self.slm.indicators {
            let z = x[ind.binary.index()].round();
            let target = if ind.active { 1.0 } else { 0.0 };
            if z == target && ind.constraint.violation(x) > tol {
                return Some(binary(ind.binary.index()));
            }
        }
        None
    }

    /// Re-solves a feasible leaf preferring small multipliers, keeping the
    /// result only if it is still a valid leaf with the same objective.
    fn polish(&self, lp: &LinearProgram, x: Vec<f64>, obj: f64) -> Vec<f64> {
        let duals: Vec<usize> = self
            .slm
            .variables
            .iter()
            .enumerate()
            .filter(|(_, v)| v.origin == VarOrigin::Dual && v.lower >= 0.0)
            .map(|(j, _)| j)
            .collect();
        if duals.is_empty() {
            return x;
        }
        let mut p = lp.clone();
        let slackness = 1e-9 * (1.0 + obj.abs());
        p.add_row(
            lp.cost
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != 0.0)
                .map(|(j, c)| (j, *c))
                .collect(),
            Sense::Le,
            obj - lp.cost_constant + slackness,
        );
        p.cost = vec![0.0; lp.num_vars()];
        p.cost_constant = 0.0;
        for j in duals {
            p.cost[j] = 1.0;
        }
        let sol = p.solve();
        if sol.status == LpStatus::Optimal
            && self.select_branch(&sol.x).is_none()
            && lp.objective_at(&sol.x) <= obj + slackness
        {
            sol.x
        } else {
            x
        }
    }

    /// The node relaxation as an ordinary LP, for polishing.
    fn leaf_lp(&self, node: &Node) -> LinearProgram {
        let mut st = DualSimplex::new(self.base.clone());
        for (v, lo, hi) in fixes_of(&node.fixes) {
            st.tighten(v, lo, hi);
        }
        self.activate_indicators(&mut st);
        let (lo, hi) = st.bounds();
        self.base.to_linear_program(lo, hi)
    }
}

/// Memory allowed for parked warm starts.
const WARM_BUDGET_BYTES: usize = 256 << 20;

pub fn solve_bnb(slm: &SingleLevelModel, opts: SolveOptions) -> SolveResult {
    let start = Instant::now();
    let engine = Engine::new(slm, opts);
    let sign = engine.sign;
    let mut result = SolveResult {
        status: SolveStatus::Error,
        point: None,
        objective: None,
        bound: None,
        gap_pct: None,
        time_s: 0.0,
        nodes: 0,
        warnings: Vec::new(),
        trace: Vec::new(),
        message: String::new(),
    };
    if let Some(q) = slm.quadratic.iter().find(|q| q.disjunctions.is_empty()) {
        result.message = format!(
            "quadratic constraint `{}` has no complementarity structure",
            q.name
        );
        result.time_s = start.elapsed().as_secs_f64();
        return result;
    }
    let state_bytes = 8 * (engine.base.rows.len() + 1) * engine.base.num_structural.max(1)
        + 64 * engine.base.num_vars();
    let max_parked = (WARM_BUDGET_BYTES / state_bytes).max(2);
    let mut parked = 0usize;

    let mut heap = BinaryHeap::new();
    heap.push(Node {
        id: 0,
        bound: f64::NEG_INFINITY,
        fixes: None,
        warm: None,
    });
    let mut next_id = 1u64;
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    // bound contributed by nodes closed within the gap tolerance
    let mut closed_bound = f64::INFINITY;
    let mut root_bound: Option<f64> = None;
    let mut status = SolveStatus::Optimal;
    let elapsed = || start.elapsed().as_secs_f64();

    while let Some(mut node) = heap.pop() {
        // a parked tableau is freed once its last child leaves the heap
        if node.warm.as_ref().is_some_and(|w| Rc::strong_count(w) == 1) {
            parked -= 1;
        }
        if result.nodes > 0 {
            if elapsed() >= opts.time_limit_s {
                status = SolveStatus::TimeLimit;
                heap.push(node);
                break;
            }
            if opts.node_limit.is_some_and(|lim| result.nodes >= lim) {
                status = SolveStatus::NodeLimit;
                heap.push(node);
                break;
            }
        }
        if let Some((inc, _)) = &incumbent {
            if prunable(node.bound, *inc, &opts) {
                closed_bound = closed_bound.min(closed_value(node.bound, *inc, &opts));
                continue;
            }
        }
        result.nodes += 1;
        let solved = engine.solve_node(&mut node);
        let (x, objective, state) = match solved {
            NodeLp::Optimal {
                x,
                objective,
                state,
            } => (x, objective, state),
            NodeLp::Infeasible => {
                if node.id == 0 {
                    status = SolveStatus::Infeasible;
                    root_bound = None;
                    break;
                }
                record(&mut result, &heap, closed_bound, &incumbent);
                continue;
            }
            NodeLp::Unbounded => {
                if node.id == 0 {
                    status = SolveStatus::Unbounded;
                } else {
                    status = SolveStatus::Error;
                    result.message = "unbounded relaxation below a bounded root".into();
                }
                break;
            }
            NodeLp::Failed => {
                status = SolveStatus::Error;
                result.message = "simplex iteration limit".into();
                break;
            }
        };
        let bound = objective.max(node.bound);
        if node.id == 0 {
            root_bound = Some(bound);
        }
        match engine.select_branch(&x) {
            None => {
                let better = incumbent.as_ref().map_or(true, |(inc, _)| bound < *inc);
                if better {
                    let x = engine.polish(&engine.leaf_lp(&node), x, objective);
                    incumbent = Some((bound, x));
                }
            }
            Some(children) => {
                let prune = incumbent
                    .as_ref()
                    .is_some_and(|(inc, _)| prunable(bound, *inc, &opts));
                if prune {
                    let inc = incumbent.as_ref().unwrap().0;
                    closed_bound = closed_bound.min(closed_value(bound, inc, &opts));
                } else {
                    // children that must wait behind better nodes start cold
                    let soon = heap.peek().map_or(true, |top| bound <= top.bound);
                    let warm = if soon && parked < max_parked {
                        state.map(Rc::new)
                    } else {
                        None
                    };
                    if warm.is_some() {
                        parked += 1;
                    }
                    for fix in children {
                        let fixes = Some(Rc::new(FixList {
                            fix,
                            parent: node.fixes.clone(),
                        }));
                        heap.push(Node {
                            id: next_id,
                            bound,
                            fixes,
                            warm: warm.clone(),
                        });
                        next_id += 1;
                    }
                }
            }
        }
        record(&mut result, &heap, closed_bound, &incumbent);
        if node.id == 0 && elapsed() >= opts.time_limit_s {
            status = SolveStatus::TimeLimit;
            break;
        }
    }

    let open_bound = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    let internal_bound = match status {
        SolveStatus::Infeasible | SolveStatus::Unbounded | SolveStatus::Error => None,
        SolveStatus::Optimal => {
            let inc = incumbent.as_ref().map_or(f64::INFINITY, |(v, _)| *v);
            let b = closed_bound.min(inc);
            if incumbent.is_none() {
                status = SolveStatus::Infeasible;
                None
            } else {
                Some(b)
            }
        }
        SolveStatus::TimeLimit | SolveStatus::NodeLimit => {
            let inc = incumbent.as_ref().map_or(f64::INFINITY, |(v, _)| *v);
            let b = open_bound.min(closed_bound).min(inc);
            if b.is_finite() {
                Some(b)
            } else {
                root_bound
            }
        }
    };
    result.status = status;
    result.bound = internal_bound.map(|b| sign * b);
    if let Some((obj, x)) = incumbent {
        result.objective = Some(sign * obj);
        result.point = Some(x);
    }
    if let (Some(o), Some(b)) = (result.objective, result.bound) {
        result.gap_pct = Some(compute_gap(o, b));
    }
    result.time_s = elapsed();
    result
}

/// Flags pairs whose dual or slack sits at its big-M bound at the incumbent,
/// where the bound may have cut off the true lower-level solution.
pub fn check_bigm_tightness(
    result: &SolveResult,
    info: &ReformulationInfo,
    margin: f64,
) -> Vec<Warning> {
    let (Mode::BigM { primal_m, dual_m }, Some(x)) = (info.mode, result.point.as_ref()) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for (k, (dual, slack)) in info.pairs.iter().enumerate() {
        let d = x[dual.index()];
        let s = slack.eval_dense(x);
        if d >= dual_m - margin * dual_m.max(1.0) {
            out.push(Warning::BigMBoundActive {
                pair: k,
                side: BigMSide::Dual,
                value: d,
                m: dual_m,
            });
        }
        if s >= primal_m - margin * primal_m.max(1.0) {
            out.push(Warning::BigMBoundActive {
                pair: k,
                side: BigMSide::Primal,
                value: s,
                m: primal_m,
            });
        }
    }
    out
}

/// Solves a reformulation and attaches big-M warnings.
pub fn solve_reformulation(info: &ReformulationInfo, opts: SolveOptions) -> SolveResult {
    let mut result = solve_bnb(&info.slm, opts);
    let warnings = check_bigm_tightness(&result, info, 1e-6);
    result.warnings.extend(warnings);
    result
}

fn prunable(bound: f64, incumbent: f64, opts: &SolveOptions) -> bool {
    bound >= incumbent - opts.feas_tol * incumbent.abs().max(1.0)
        || compute_gap(incumbent, bound) <= 100.0 * opts.gap_tol
}

/// Nodes within the absolute tolerance count as ties with the incumbent.
fn closed_value(bound: f64, incumbent: f64, opts: &SolveOptions) -> f64 {
    if bound >= incumbent - opts.feas_tol * incumbent.abs().max(1.0) {
        incumbent
    } else {
        bound
    }
}

fn record(
    result: &mut SolveResult,
    heap: &BinaryHeap<Node>,
    closed: f64,
    incumbent: &Option<(f64, Vec<f64>)>,
) {
    let open = heap.peek().map_or(f64::INFINITY, |n| n.bound);
    let inc = incumbent.as_ref().map(|(v, _)| *v);
    let bound = open.min(closed).min(inc.unwrap_or(f64::INFINITY));
    result.trace.push(TraceEvent {
        node: result.nodes,
        bound,
        incumbent: inc,
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LinearConstraint, SlmVariable, Sos1Set, VarId};

    fn cont(name: &str) -> SlmVariable {
        SlmVariable {
            name: name.into(),
            lower: 0.0,
            upper: f64::INFINITY,
            binary: false,
            origin: VarOrigin::Lower,
        }
    }

    fn sos_example() -> SingleLevelModel {
        // min 2a + b  s.t. a + b = 1, SOS1{a, b}
        let mut slm = SingleLevelModel::default();
        let a = slm.add_variable(cont("a"));
        let b = slm.add_variable(cont("b"));
        slm.objective = AffineExpr::from_terms([(a, 2.0), (b, 1.0)], 0.0);
        slm.linear.push(LinearConstraint::new(
            "sum",
            AffineExpr::from_terms([(a, 1.0), (b, 1.0)], 0.0),
            Sense::Eq,
            1.0,
        ));
        slm.sos1.push(Sos1Set {
            name: "s".into(),
            members: vec![(a, 1.0), (b, 2.0)],
        });
        slm
    }

    #[test]
    fn two_leaf_sos() {
        let r = solve_bnb(&sos_example(), SolveOptions::default());
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective.unwrap() - 1.0).abs() < 1e-12);
        let x = r.point.unwrap();
        assert!(x[0].abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
        assert!(r.gap_pct.unwrap() <= 1e-4);
    }

    #[test]
    fn zero_time_limit_reports_root_bound() {
        let opts = SolveOptions {
            time_limit_s: 0.0,
            ..SolveOptions::default()
        };
        let r = solve_bnb(&sos_example(), opts);
        assert_eq!(r.status, SolveStatus::TimeLimit);
        assert!(r.bound.is_some());
        assert_eq!(r.nodes, 1);
    }

    #[test]
    fn gap_examples() {
        assert_eq!(compute_gap(25.02, 25.02), 0.0);
        assert!((compute_gap(10.0, 2.0) - 400.0).abs() < 1e-12);
        assert!(compute_gap(5.0, 5.0 - 1e-12) < 1e-4);
    }

    #[test]
    fn binary_knapsack() {
        // max 5x + 4y + 3z s.t. 2x + 3y + z <= 5 (binary) -> x = z = 1? 2+1=3 ok, y too: 6 > 5
        let mut slm = SingleLevelModel::default();
        let vars: Vec<VarId> = ["x", "y", "z"]
            .iter()
            .map(|n| {
                slm.add_variable(SlmVariable {
                    name: n.to_string(),
                    lower: 0.0,
                    upper: 1.0,
                    binary: true,
                    origin: VarOrigin::Auxiliary,
                })
            })
            .collect();
        slm.objective_sense = Some(ObjSense::Max);
        slm.objective = AffineExpr::from_terms(vars.iter().copied().zip([5.0, 4.0, 3.0]), 0.0);
        slm.linear.push(LinearConstraint::new(
            "cap",
            AffineExpr::from_terms(vars.iter().copied().zip([2.0, 3.0, 1.0]), 0.0),
            Sense::Le,
            5.0,
        ));
        let r = solve_bnb(&slm, SolveOptions::default());
        assert_eq!(r.status, SolveStatus::Optimal);
        // best: x + y = 9 (weight 5)
        assert!((r.objective.unwrap() - 9.0).abs() < 1e-9);
        assert!(r.bound.unwrap() >= r.objective.unwrap() - 1e-9);
    }

    #[test]
    fn infeasible_model() {
        let mut slm = sos_example();
        slm.linear.push(LinearConstraint::new(
            "neg",
            AffineExpr::from_terms([(VarId::from_index(0), 1.0)], 0.0),
            Sense::Le,
            -1.0,
        ));
        let r = solve_bnb(&slm, SolveOptions::default());
        assert_eq!(r.status, SolveStatus::Infeasible);
        assert!(r.objective.is_none());
    }
}
