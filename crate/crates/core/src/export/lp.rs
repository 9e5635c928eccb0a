//! CPLEX-style LP files.
//!
//! Dialect written:
//!
//! ```text
//! Minimize
//!  obj: 1 xiU_1 + 1 xiU_2
//! Subject To
//!  row: 2 x + 3 y <= 5
//!  comp_0: [ 1 a * b ] <= 1e-9
//!  ind_0: z_0 = 1 -> 1 a <= 0
//! Bounds
//!  -inf <= w_1 <= inf
//! Binaries
//!  z_0
//! SOS
//!  sos_0: S1:: a:1 b:2
//! End
//! ```
//!
//! Every variable gets a line in `Bounds` (binaries too), which fixes the
//! variable order on reading. The reader accepts this dialect plus the usual
//! section aliases, multi-line statements and `\` comments.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{num, unique_names, ExportError};
use crate::model::{
    AffineExpr, IndicatorConstraint, LinearConstraint, ObjSense, QuadExpr, QuadraticConstraint,
    Sense, SingleLevelModel, SlmVariable, Sos1Set, VarId, VarOrigin,
};

/// Terms per output line before wrapping.
const TERMS_PER_LINE: usize = 8;

struct Names {
    vars: Vec<String>,
}

impl Names {
    fn var(&self, v: VarId) -> &str {
        &self.vars[v.index()]
    }
}

fn push_terms(out: &mut String, terms: &[(String, f64)]) {
    for (i, (name, c)) in terms.iter().enumerate() {
        if i > 0 && i % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if *c < 0.0 { "-" } else { "+" };
        if i == 0 {
            if *c < 0.0 {
                out.push('-');
            }
        } else {
            let _ = write!(out, " {sign} ");
        }
        let _ = write!(out, "{} {name}", num(c.abs()));
    }
}

fn linear_terms(expr: &AffineExpr, names: &Names) -> Vec<(String, f64)> {
    expr.terms()
        .map(|(v, c)| (names.var(v).to_string(), c))
        .collect()
}

fn quad_terms(expr: &QuadExpr, names: &Names) -> Vec<(String, f64)> {
    expr.quad_terms()
        .map(|(a, b, c)| {
            let t = if a == b {
                format!("{} ^ 2", names.var(a))
            } else {
                format!("{} * {}", names.var(a), names.var(b))
            };
            (t, c)
        })
        .collect()
}

/// Writes `expr`, or a zero multiple of `placeholder` if it has no terms.
fn push_linear(out: &mut String, expr: &AffineExpr, names: &Names, placeholder: &str) {
    let terms = linear_terms(expr, names);
    if terms.is_empty() {
        let _ = write!(out, "0 {placeholder}");
    } else {
        push_terms(out, &terms);
    }
}

pub fn write_lp(slm: &SingleLevelModel) -> String {
    let names = Names {
        vars: unique_names(slm.variables.iter().map(|v| v.name.as_str()), "x"),
    };
    let row_names = unique_names(
        slm.linear
            .iter()
            .map(|c| c.name.as_str())
            .chain(slm.quadratic.iter().map(|q| q.name.as_str()))
            .chain(slm.indicators.iter().map(|i| i.name.as_str())),
        "r",
    );
    let mut rows = row_names.iter();
    let placeholder = names.vars.first().cloned().unwrap_or_else(|| "x0".into());
    let mut out = String::new();
    let _ = writeln!(
        out,
        "\\ {} variables, {} linear, {} quadratic, {} indicator rows, {} SOS1 sets",
        slm.num_variables(),
        slm.linear.len(),
        slm.quadratic.len(),
        slm.indicators.len(),
        slm.sos1.len()
    );
    out.push_str(match slm.sense() {
        ObjSense::Min => "Minimize\n",
        ObjSense::Max => "Maximize\n",
    });
    out.push_str(" obj: ");
    push_linear(&mut out, &slm.objective, &names, &placeholder);
    let k = slm.objective.constant_term();
    if k != 0.0 {
        let _ = write!(out, " {} {}", if k < 0.0 { "-" } else { "+" }, num(k.abs()));
    }
    out.push_str("\nSubject To\n");
    for c in &slm.linear {
        let _ = write!(out, " {}: ", rows.next().unwrap());
        push_linear(&mut out, &c.expr, &names, &placeholder);
        let _ = writeln!(out, " {} {}", c.sense.symbol(), num(c.rhs));
    }
    for q in &slm.quadratic {
        let _ = write!(out, " {}: ", rows.next().unwrap());
        let lin = linear_terms(&q.expr.affine, &names);
        if !lin.is_empty() {
            push_terms(&mut out, &lin);
            out.push_str(" + ");
        }
        out.push_str("[ ");
        push_terms(&mut out, &quad_terms(&q.expr, &names));
        let rhs = q.rhs - q.expr.affine.constant_term();
        let _ = writeln!(out, " ] {} {}", q.sense.symbol(), num(rhs));
    }
    for ind in &slm.indicators {
        let c = &ind.constraint;
        let _ = write!(
            out,
            " {}: {} = {} -> ",
            rows.next().unwrap(),
            names.var(ind.binary),
            if ind.active { 1 } else { 0 }
        );
        push_linear(&mut out, &c.expr, &names, &placeholder);
        let _ = writeln!(out, " {} {}", c.sense.symbol(), num(c.rhs));
    }
    out.push_str("Bounds\n");
    for (j, v) in slm.variables.iter().enumerate() {
        let name = &names.vars[j];
        if v.lower == v.upper {
            let _ = writeln!(out, " {name} = {}", num(v.lower));
        } else if v.lower == f64::NEG_INFINITY && v.upper == f64::INFINITY {
            let _ = writeln!(out, " {name} free");
        } else {
            let _ = writeln!(out, " {} <= {name} <= {}", num(v.lower), num(v.upper));
        }
    }
    let binaries: Vec<&String> = slm
        .variables
        .iter()
        .zip(&names.vars)
        .filter(|(v, _)| v.binary)
        .map(|(_, n)| n)
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for chunk in binaries.chunks(TERMS_PER_LINE) {
            let line: Vec<&str> = chunk.iter().map(|s| s.as_str()).collect();
            let _ = writeln!(out, " {}", line.join(" "));
        }
    }
    if !slm.sos1.is_empty() {
        out.push_str("SOS\n");
        let sos_names = unique_names(slm.sos1.iter().map(|s| s.name.as_str()), "s");
        for (s, name) in slm.sos1.iter().zip(&sos_names) {
            let _ = write!(out, " {name}: S1::");
            for (v, w) in &s.members {
                let _ = write!(out, " {}:{}", names.var(*v), num(*w));
            }
            out.push('\n');
        }
    }
    out.push_str("End\n");
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Id(String),
    Op(&'static str),
}

fn tokenize(line: &str, lineno: usize) -> Result<Vec<(Tok, usize)>, ExportError> {
    let err = |m: String| ExportError::Parse {
        line: lineno,
        message: m,
    };
    let line = line.split('\\').next().unwrap_or("");
    let b: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let two: String = b[i..(i + 2).min(b.len())].iter().collect();
        let op = match two.as_str() {
            "<=" | "=<" => Some(("<=", 2)),
            ">=" | "=>" => Some((">=", 2)),
            "->" => Some(("->", 2)),
            _ => match c {
                '<' => Some(("<=", 1)),
                '>' => Some((">=", 1)),
                '=' => Some(("=", 1)),
                '+' => Some(("+", 1)),
                '-' => Some(("-", 1)),
                '*' => Some(("*", 1)),
                '^' => Some(("^", 1)),
                '[' => Some(("[", 1)),
                ']' => Some(("]", 1)),
                ':' => Some((":", 1)),
                '/' => Some(("/", 1)),
                _ => None,
            },
        };
        if let Some((op, len)) = op {
            out.push((Tok::Op(op), lineno));
            i += len;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && b.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < b.len() && (b[i].is_ascii_digit() || b[i] == '.') {
                i += 1;
            }
            if i < b.len() && (b[i] == 'e' || b[i] == 'E') {
                let mut j = i + 1;
                if j < b.len() && (b[j] == '+' || b[j] == '-') {
                    j += 1;
                }
                if j < b.len() && b[j].is_ascii_digit() {
                    i = j;
                    while i < b.len() && b[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = b[start..i].iter().collect();
            let v = s
                .parse::<f64>()
                .map_err(|_| err(format!("bad number `{s}`")))?;
            out.push((Tok::Num(v), lineno));
            continue;
        }
        if c.is_alphanumeric() || "_.!\"#$%&(),;?@'`{}~|".contains(c) {
            let start = i;
            while i < b.len() && (b[i].is_alphanumeric() || "_.!\"#$%&(),;?@'`{}~|".contains(b[i]))
            {
                i += 1;
            }
            let s: String = b[start..i].iter().collect();
            let lower = s.to_ascii_lowercase();
            if lower == "inf" || lower == "infinity" {
                out.push((Tok::Num(f64::INFINITY), lineno));
            } else {
                out.push((Tok::Id(s), lineno));
            }
            continue;
        }
        return Err(err(format!("unexpected character `{c}`")));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Section {
    None,
    Objective(ObjSense),
    Constraints,
    Bounds,
    Binaries,
    Generals,
    Sos,
    End,
}

fn section_of(line: &str) -> Option<Section> {
    let l = line.trim().to_ascii_lowercase();
    let l = l.split('\\').next().unwrap_or("").trim();
    Some(match l {
        "minimize" | "minimise" | "minimum" | "min" => Section::Objective(ObjSense::Min),
        "maximize" | "maximise" | "maximum" | "max" => Section::Objective(ObjSense::Max),
        "subject to" | "such that" | "st" | "s.t." | "st." => Section::Constraints,
        "bounds" | "bound" => Section::Bounds,
        "binaries" | "binary" | "bin" => Section::Binaries,
        "generals" | "general" | "gen" => Section::Generals,
        "sos" => Section::Sos,
        "end" => Section::End,
        _ => return None,
    })
}

struct Reader {
    slm: SingleLevelModel,
    index: HashMap<String, VarId>,
    /// Variables in order of their first `Bounds` line.
    bound_order: Vec<VarId>,
    bounded: Vec<bool>,
}

impl Reader {
    fn var(&mut self, name: &str) -> VarId {
        if let Some(v) = self.index.get(name) {
            return *v;
        }
        let v = self.slm.add_variable(SlmVariable {
            name: name.to_string(),
            lower: 0.0,
            upper: f64::INFINITY,
            binary: false,
            origin: VarOrigin::Auxiliary,
        });
        self.index.insert(name.to_string(), v);
        self.bounded.push(false);
        v
    }
}

struct Cursor<'a> {
    toks: &'a [(Tok, usize)],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn peek_at(&self, k: usize) -> Option<&'a Tok> {
        self.toks.get(self.pos + k).map(|t| &t.0)
    }

    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map_or(0, |t| t.1)
    }

    fn next(&mut self) -> Option<&'a Tok> {
        let t = self.peek();
        self.pos += 1;
        t
    }

    fn err(&self, message: impl Into<String>) -> ExportError {
        ExportError::Parse {
            line: self.line(),
            message: message.into(),
        }
    }

    fn expect_op(&mut self, op: &str) -> Result<(), ExportError> {
        match self.next() {
            Some(Tok::Op(o)) if *o == op => Ok(()),
            other => Err(self.err(format!("expected `{op}`, found {other:?}"))),
        }
    }

    fn label(&mut self) -> Option<String> {
        if let (Some(Tok::Id(name)), Some(Tok::Op(":"))) = (self.peek(), self.peek_at(1)) {
            self.pos += 2;
            return Some(name.clone());
        }
        None
    }

    fn signed_number(&mut self) -> Result<f64, ExportError> {
        let mut sign = 1.0;
        loop {
            match self.next() {
                Some(Tok::Op("-")) => sign = -sign,
                Some(Tok::Op("+")) => {}
                Some(Tok::Num(v)) => return Ok(sign * v),
                other => return Err(self.err(format!("expected a number, found {other:?}"))),
            }
        }
    }

    fn sense(&mut self) -> Option<Sense> {
        let s = match self.peek() {
            Some(Tok::Op("<=")) => Sense::Le,
            Some(Tok::Op(">=")) => Sense::Ge,
            Some(Tok::Op("=")) => Sense::Eq,
            _ => return None,
        };
        self.pos += 1;
        Some(s)
    }

    /// Parses `± coef name`, `± number` and `[ ... ]` groups up to a
    /// comparison operator or the end of input.
    fn expression(
        &mut self,
        r: &mut Reader,
        quad: &mut QuadExpr,
        in_bracket: bool,
    ) -> Result<(), ExportError> {
        loop {
            let mut sign = 1.0;
            let mut saw_sign = false;
            while let Some(Tok::Op(o @ ("+" | "-"))) = self.peek() {
                if *o == "-" {
                    sign = -sign;
                }
                saw_sign = true;
                self.pos += 1;
            }
            match self.peek() {
                Some(Tok::Op("[")) if !in_bracket => {
                    self.pos += 1;
                    let mut inner = QuadExpr::new();
                    self.expression(r, &mut inner, true)?;
                    self.expect_op("]")?;
                    // objective brackets carry a `/ 2`
                    if let Some(Tok::Op("/")) = self.peek() {
                        self.pos += 1;
                        let d = self.signed_number()?;
                        inner = inner.scaled(1.0 / d);
                    }
                    quad.add_scaled(&inner, sign);
                }
                Some(Tok::Num(c)) => {
                    self.pos += 1;
                    let coef = sign * c;
                    if let Some(Tok::Id(_)) = self.peek() {
                        self.term(r, quad, coef, in_bracket)?;
                    } else {
                        quad.affine.add_constant(coef);
                    }
                }
                Some(Tok::Id(_)) => self.term(r, quad, sign, in_bracket)?,
                _ => {
                    if saw_sign {
                        return Err(self.err("dangling sign"));
                    }
                    return Ok(());
                }
            }
        }
    }

    fn term(
        &mut self,
        r: &mut Reader,
        quad: &mut QuadExpr,
        coef: f64,
        in_bracket: bool,
    ) -> Result<(), ExportError> {
        let Some(Tok::Id(name)) = self.next() else {
            return Err(self.err("expected a variable"));
        };
        let a = r.var(name);
        if in_bracket {
            match self.peek() {
                Some(Tok::Op("*")) => {
                    self.pos += 1;
                    let Some(Tok::Id(other)) = self.next() else {
                        return Err(self.err("expected a variable after `*`"));
                    };
                    let b = r.var(other);
                    quad.add_quad_term(a, b, coef);
                    return Ok(());
                }
                Some(Tok::Op("^")) => {
                    self.pos += 1;
                    let p = self.signed_number()?;
                    if p != 2.0 {
                        return Err(self.err("only `^ 2` is supported"));
                    }
                    quad.add_quad_term(a, a, coef);
                    return Ok(());
                }
                _ => {}
            }
        }
        quad.affine.add_term(a, coef);
        Ok(())
    }
}

pub fn read_lp(text: &str) -> Result<SingleLevelModel, ExportError> {
    let mut r = Reader {
        slm: SingleLevelModel::default(),
        index: HashMap::new(),
        bound_order: Vec::new(),
        bounded: Vec::new(),
    };
    let mut section = Section::None;
    let mut block: Vec<(Tok, usize)> = Vec::new();
    let mut line_blocks: Vec<Vec<(Tok, usize)>> = Vec::new();
    let mut saw_end = false;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if let Some(next) = section_of(line) {
            finish_section(&mut r, section, &block, &line_blocks)?;
            block.clear();
            line_blocks.clear();
            section = next;
            if next == Section::End {
                saw_end = true;
                break;
            }
            continue;
        }
        let toks = tokenize(line, lineno)?;
        if toks.is_empty() {
            continue;
        }
        if section == Section::None {
            return Err(ExportError::Parse {
                line: lineno,
                message: "content before the objective section".into(),
            });
        }
        block.extend(toks.iter().cloned());
        line_blocks.push(toks);
    }
    if !saw_end {
        finish_section(&mut r, section, &block, &line_blocks)?;
    }

    // restore the variable order given by the Bounds section
    if r.bound_order.len() == r.slm.num_variables() {
        let order = r.bound_order.clone();
        reorder(&mut r.slm, &order);
    }
    Ok(r.slm)
}

fn finish_section(
    r: &mut Reader,
    section: Section,
    toks: &[(Tok, usize)],
    lines: &[Vec<(Tok, usize)>],
) -> Result<(), ExportError> {
    let mut cur = Cursor { toks, pos: 0 };
    match section {
        Section::None | Section::End => {}
        Section::Objective(sense) => {
            r.slm.objective_sense = Some(sense);
            cur.label();
            let mut q = QuadExpr::new();
            cur.expression(r, &mut q, false)?;
            if cur.peek().is_some() {
                return Err(cur.err("unexpected token in objective"));
            }
            if !q.is_affine() {
                return Err(cur.err("quadratic objectives are not supported"));
            }
            r.slm.objective = q.affine;
        }
        Section::Constraints => {
            let mut count = 0usize;
            while cur.peek().is_some() {
                let name = cur.label().unwrap_or_else(|| format!("R{}", count + 1));
                count += 1;
                // indicator prefix `z = 0|1 ->`
                let mut indicator = None;
                if let (
                    Some(Tok::Id(z)),
                    Some(Tok::Op("=")),
                    Some(Tok::Num(v)),
                    Some(Tok::Op("->")),
                ) = (cur.peek(), cur.peek_at(1), cur.peek_at(2), cur.peek_at(3))
                {
                    if *v != 0.0 && *v != 1.0 {
                        return Err(cur.err("indicator value must be 0 or 1"));
                    }
                    indicator = Some((r.var(z), *v == 1.0));
                    cur.pos += 4;
                }
                let mut q = QuadExpr::new();
                cur.expression(r, &mut q, false)?;
                let Some(sense) = cur.sense() else {
                    return Err(cur.err("expected a comparison operator"));
                };
                let rhs = cur.signed_number()?;
                if let Some((binary, active)) = indicator {
                    if !q.is_affine() {
                        return Err(cur.err("indicator rows must be linear"));
                    }
                    r.slm.indicators.push(IndicatorConstraint {
                        name: name.clone(),
                        binary,
                        active,
                        constraint: LinearConstraint::new(name, q.affine, sense, rhs),
                    });
                } else if q.is_affine() {
                    r.slm
                        .linear
                        .push(LinearConstraint::new(name, q.affine, sense, rhs));
                } else {
                    let k = q.affine.constant_term();
                    q.affine.set_constant(0.0);
                    r.slm.quadratic.push(QuadraticConstraint {
                        name,
                        expr: q,
                        sense,
                        rhs: rhs - k,
                        disjunctions: Vec::new(),
                    });
                }
            }
        }
        Section::Bounds => {
            for line in lines {
                let mut c = Cursor { toks: line, pos: 0 };
                read_bound(r, &mut c)?;
            }
        }
        Section::Binaries => {
            for (t, line) in toks {
                let Tok::Id(name) = t else {
                    return Err(ExportError::Parse {
                        line: *line,
                        message: "expected a variable name".into(),
                    });
                };
                let v = r.var(name);
                let var = &mut r.slm.variables[v.index()];
                var.binary = true;
                if !r.bounded[v.index()] {
                    var.lower = 0.0;
                    var.upper = 1.0;
                }
            }
        }
        Section::Generals => {
            if !toks.is_empty() {
                return Err(cur.err("general integer variables are not supported"));
            }
        }
        Section::Sos => {
            for line in lines {
                let mut c = Cursor { toks: line, pos: 0 };
                let name = c.label().ok_or_else(|| c.err("expected an SOS name"))?;
                match c.next() {
                    Some(Tok::Id(kind)) if kind.eq_ignore_ascii_case("s1") => {}
                    other => {
                        return Err(c.err(format!("only S1 sets are supported, found {other:?}")))
                    }
                }
                c.expect_op(":")?;
                c.expect_op(":")?;
                let mut members = Vec::new();
                while c.peek().is_some() {
                    let Some(Tok::Id(v)) = c.next() else {
                        return Err(c.err("expected an SOS member"));
                    };
                    let v = r.var(v);
                    c.expect_op(":")?;
                    members.push((v, c.signed_number()?));
                }
                r.slm.sos1.push(Sos1Set { name, members });
            }
        }
    }
    Ok(())
}

fn read_bound(r: &mut Reader, c: &mut Cursor) -> Result<(), ExportError> {
    let set = |r: &mut Reader, v: VarId, lo: Option<f64>, hi: Option<f64>| {
        if !r.bounded[v.index()] {
            r.bounded[v.index()] = true;
            r.bound_order.push(v);
        }
        let var = &mut r.slm.variables[v.index()];
        if let Some(lo) = lo {
            var.lower = lo;
        }
        if let Some(hi) = hi {
            var.upper = hi;
        }
    };
    // `x free`, `x = v`, `x <= v`, `x >= v`
    if let Some(Tok::Id(name)) = c.peek() {
        c.pos += 1;
        let v = r.var(name);
        match c.next() {
            Some(Tok::Id(w)) if w.eq_ignore_ascii_case("free") => {
                set(r, v, Some(f64::NEG_INFINITY), Some(f64::INFINITY))
            }
            Some(Tok::Op("=")) => {
                let b = c.signed_number()?;
                set(r, v, Some(b), Some(b));
            }
            Some(Tok::Op("<=")) => {
                let b = c.signed_number()?;
                set(r, v, None, Some(b));
            }
            Some(Tok::Op(">=")) => {
                let b = c.signed_number()?;
                set(r, v, Some(b), None);
            }
            other => return Err(c.err(format!("bad bound, found {other:?}"))),
        }
    } else {
        // `lo <= x [<= hi]` or `hi >= x [>= lo]`
        let first = c.signed_number()?;
        let Some(sense) = c.sense() else {
            return Err(c.err("expected a comparison in bound"));
        };
        let Some(Tok::Id(name)) = c.next() else {
            return Err(c.err("expected a variable in bound"));
        };
        let v = r.var(name);
        match sense {
            Sense::Le => set(r, v, Some(first), None),
            Sense::Ge => set(r, v, None, Some(first)),
            Sense::Eq => set(r, v, Some(first), Some(first)),
        }
        if let Some(s2) = c.sense() {
            let second = c.signed_number()?;
            match s2 {
                Sense::Le => set(r, v, None, Some(second)),
                Sense::Ge => set(r, v, Some(second), None),
                Sense::Eq => return Err(c.err("bad double bound")),
            }
        }
    }
    if c.peek().is_some() {
        return Err(c.err("trailing tokens in bound"));
    }
    Ok(())
}

/// Renumbers variables so that `order[k]` becomes variable `k`.
fn reorder(slm: &mut SingleLevelModel, order: &[VarId]) {
    let mut map = vec![VarId::from_index(0); order.len()];
    for (k, v) in order.iter().enumerate() {
        map[v.index()] = VarId::from_index(k);
    }
    let m = |v: VarId| map[v.index()];
    let affine = |e: &AffineExpr| {
        AffineExpr::from_terms(e.terms().map(|(v, c)| (m(v), c)), e.constant_term())
    };
    slm.variables = order
        .iter()
        .map(|v| slm.variables[v.index()].clone())
        .collect();
    slm.objective = affine(&slm.objective);
    for c in &mut slm.linear {
        c.expr = affine(&c.expr);
    }
    for q in &mut slm.quadratic {
        let mut e = QuadExpr::new();
        for (a, b, c) in q.expr.quad_terms() {
            e.add_quad_term(m(a), m(b), c);
        }
        e.affine = affine(&q.expr.affine);
        q.expr = e;
    }
    for i in &mut slm.indicators {
        i.binary = m(i.binary);
        i.constraint.expr = affine(&i.constraint.expr);
    }
    for s in &mut slm.sos1 {
        for (v, _) in &mut s.members {
            *v = m(*v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SingleLevelModel {
        let mut slm = SingleLevelModel::default();
        let mk = |name: &str, lower: f64, upper: f64, binary: bool| SlmVariable {
            name: name.into(),
            lower,
            upper,
            binary,
            origin: VarOrigin::Auxiliary,
        };
        let x = slm.add_variable(mk("x", 0.0, 10.0, false));
        let y = slm.add_variable(mk("y", f64::NEG_INFINITY, f64::INFINITY, false));
        let z = slm.add_variable(mk("z", 0.0, 1.0, true));
        let u = slm.add_variable(mk("u", -2.5, f64::INFINITY, false));
        slm.objective = AffineExpr::from_terms([(x, 1.0), (y, -0.5)], 3.0);
        slm.linear.push(LinearConstraint::new(
            "c1",
            AffineExpr::from_terms([(x, 2.0), (y, -1e-9)], 0.0),
            Sense::Le,
            4.0,
        ));
        slm.linear.push(LinearConstraint::new(
            "empty",
            AffineExpr::new(),
            Sense::Ge,
            -1.0,
        ));
        let mut q = AffineExpr::var(x).product(&AffineExpr::var(u));
        q.add_quad_term(y, y, 2.0);
        q.affine.add_term(u, 1.0);
        slm.quadratic.push(QuadraticConstraint {
            name: "q".into(),
            expr: q,
            sense: Sense::Le,
            rhs: 1e-9,
            disjunctions: Vec::new(),
        });
        slm.indicators.push(IndicatorConstraint {
            name: "ind".into(),
            binary: z,
            active: true,
            constraint: LinearConstraint::new("ind", AffineExpr::var(x), Sense::Le, 0.0),
        });
        slm.sos1.push(Sos1Set {
            name: "s".into(),
            members: vec![(x, 1.0), (u, 2.0)],
        });
        slm
    }

    #[test]
    fn round_trip_preserves_structure() {
        let slm = sample();
        let text = write_lp(&slm);
        let back = read_lp(&text).unwrap();
        assert_eq!(back.variables.len(), slm.variables.len());
        for (a, b) in back.variables.iter().zip(&slm.variables) {
            assert_eq!(
                (&a.name, a.lower, a.upper, a.binary),
                (&b.name, b.lower, b.upper, b.binary)
            );
        }
        assert_eq!(back.objective, slm.objective);
        assert_eq!(back.linear.len(), 2);
        assert_eq!(back.linear[0], slm.linear[0]);
        assert_eq!(back.linear[1].rhs, -1.0);
        assert_eq!(back.quadratic[0].expr, slm.quadratic[0].expr);
        assert_eq!(back.quadratic[0].rhs, 1e-9);
        assert_eq!(back.indicators, slm.indicators);
        assert_eq!(back.sos1, slm.sos1);
        // writing again gives the same bytes
        assert_eq!(write_lp(&back), text);
    }

    #[test]
    fn sections_and_syntax() {
        let text = write_lp(&sample());
        assert!(text.contains("[ 1 x * u + 2 y ^ 2 ] <= 1e-9"), "{text}");
        assert!(text.contains(" ind: z = 1 -> 1 x <= 0"));
        assert!(text.contains(" s: S1:: x:1 u:2"));
        assert!(text.contains(" y free"));
        assert!(text.ends_with("End\n"));
    }

    #[test]
    fn reads_common_variants() {
        let text = "\\ comment\nmaximize\n 3x + 2 y\nst\n c: x + y\n   <= 4\n -x >= -3\nbounds\n x <= 3\n y >= -inf\nbinary\n b\nend\n";
        let m = read_lp(text).unwrap();
        assert_eq!(m.sense(), ObjSense::Max);
        assert_eq!(m.linear.len(), 2);
        assert_eq!(m.linear[1].name, "R2");
        let x = &m.variables[0];
        assert_eq!((x.lower, x.upper), (0.0, 3.0));
        assert_eq!(m.variables[1].lower, f64::NEG_INFINITY);
        assert!(m.variables[2].binary && m.variables[2].upper == 1.0);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let e = read_lp("min\n x\nst\n c: x <= \nend\n").unwrap_err();
        assert!(matches!(e, ExportError::Parse { .. }));
        let e = read_lp("x + y\n").unwrap_err();
        assert!(matches!(e, ExportError::Parse { line: 1, .. }));
    }
}
