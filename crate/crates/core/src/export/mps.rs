//! MPS files with the common SOS and INDICATORS extensions.
//!
//! Fields sit in the classic fixed columns when names fit in eight
//! characters. Longer names widen their field, so files with long names
//! need a reader in free-MPS mode. Binaries are declared with `BV` bounds
//! inside an integer marker block. Indicator rows appear in `ROWS` like any
//! other row and are tied to their binary in `INDICATORS`.

use std::fmt::Write as _;

use super::{num, unique_names, ExportError};
use crate::model::{ObjSense, Sense, SingleLevelModel};

fn sense_code(s: Sense) -> &'static str {
    match s {
        Sense::Le => "L",
        Sense::Ge => "G",
        Sense::Eq => "E",
    }
}

/// Field widths and gaps putting fields at columns 5, 15, 25, 40 and 50.
const WIDTHS: [(usize, usize); 5] = [(8, 2), (8, 2), (12, 3), (8, 2), (12, 0)];

fn line(out: &mut String, code: &str, fields: &[&str]) {
    let _ = write!(out, " {code:<2} ");
    for (f, (w, gap)) in fields.iter().zip(WIDTHS) {
        let _ = write!(out, "{f:<w$}{:gap$}", "");
    }
    // no trailing spaces
    while out.ends_with(' ') {
        out.pop();
    }
    out.push('\n');
}

pub fn write_mps(slm: &SingleLevelModel) -> Result<String, ExportError> {
    if let Some(q) = slm.quadratic.first() {
        return Err(ExportError::QuadraticUnsupported(q.name.clone()));
    }
    let vars = unique_names(slm.variables.iter().map(|v| v.name.as_str()), "x");
    let rows = unique_names(
        std::iter::once("obj")
            .chain(slm.linear.iter().map(|c| c.name.as_str()))
            .chain(slm.indicators.iter().map(|i| i.name.as_str())),
        "r",
    );
    let obj = &rows[0];
    let nlin = slm.linear.len();

    // column-wise coefficients, rows in file order
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); slm.num_variables()];
    for (v, c) in slm.objective.terms() {
        cols[v.index()].push((0, c));
    }
    let row_exprs = slm
        .linear
        .iter()
        .map(|c| &c.expr)
        .chain(slm.indicators.iter().map(|i| &i.constraint.expr));
    for (r, expr) in row_exprs.enumerate() {
        for (v, c) in expr.terms() {
            cols[v.index()].push((r + 1, c));
        }
    }

    let mut out = String::new();
    out.push_str("NAME          bilevel\n");
    if slm.sense() == ObjSense::Max {
        out.push_str("OBJSENSE\n    MAX\n");
    }
    out.push_str("ROWS\n");
    line(&mut out, "N", &[obj]);
    for (k, c) in slm.linear.iter().enumerate() {
        line(&mut out, sense_code(c.sense), &[&rows[k + 1]]);
    }
    for (k, i) in slm.indicators.iter().enumerate() {
        line(
            &mut out,
            sense_code(i.constraint.sense),
            &[&rows[nlin + k + 1]],
        );
    }

    out.push_str("COLUMNS\n");
    let mut in_marker = false;
    let mut marker = 0;
    for (j, col) in cols.iter().enumerate() {
        let binary = slm.variables[j].binary;
        if binary != in_marker {
            let tag = if binary { "'INTORG'" } else { "'INTEND'" };
            let name = format!("MARKER{marker}");
            marker += 1;
            line(&mut out, "", &[&name, "'MARKER'", tag]);
            in_marker = binary;
        }
        if col.is_empty() {
            // keep the column declared
            line(&mut out, "", &[&vars[j], obj, "0"]);
        }
        for &(r, c) in col {
            line(&mut out, "", &[&vars[j], &rows[r], &num(c)]);
        }
    }
    if in_marker {
        let name = format!("MARKER{marker}");
        line(&mut out, "", &[&name, "'MARKER'", "'INTEND'"]);
    }

    out.push_str("RHS\n");
    let k = slm.objective.constant_term();
    if k != 0.0 {
        // the objective row's right-hand side is minus the constant
        line(&mut out, "", &["RHS", obj, &num(-k)]);
    }
    let rhs = slm
        .linear
        .iter()
        .map(|c| c.rhs)
        .chain(slm.indicators.iter().map(|i| i.constraint.rhs));
    for (r, b) in rhs.enumerate() {
        if b != 0.0 {
            line(&mut out, "", &["RHS", &rows[r + 1], &num(b)]);
        }
    }

    out.push_str("BOUNDS\n");
    for (j, v) in slm.variables.iter().enumerate() {
        let name = &vars[j];
        if v.binary && v.lower == 0.0 && v.upper == 1.0 {
            line(&mut out, "BV", &["BND", name]);
            continue;
        }
        if v.lower == v.upper {
            line(&mut out, "FX", &["BND", name, &num(v.lower)]);
            continue;
        }
        match (v.lower, v.upper) {
            (f64::NEG_INFINITY, f64::INFINITY) => line(&mut out, "FR", &["BND", name]),
            (lo, hi) => {
                if lo == f64::NEG_INFINITY {
                    line(&mut out, "MI", &["BND", name]);
                } else if lo != 0.0 {
                    line(&mut out, "LO", &["BND", name, &num(lo)]);
                }
                if hi != f64::INFINITY {
                    line(&mut out, "UP", &["BND", name, &num(hi)]);
                }
            }
        }
    }

    if !slm.sos1.is_empty() {
        out.push_str("SOS\n");
        let names = unique_names(slm.sos1.iter().map(|s| s.name.as_str()), "s");
        for (s, name) in slm.sos1.iter().zip(&names) {
            line(&mut out, "S1", &["SOS", name]);
            for (v, w) in &s.members {
                let _ = writeln!(out, "    {:<8}  {}", vars[v.index()], num(*w));
            }
        }
    }
    if !slm.indicators.is_empty() {
        out.push_str("INDICATORS\n");
        for (k, i) in slm.indicators.iter().enumerate() {
            let value = if i.active { "1" } else { "0" };
            line(
                &mut out,
                "IF",
                &[&rows[nlin + k + 1], &vars[i.binary.index()], value],
            );
        }
    }
    out.push_str("ENDATA\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        AffineExpr, IndicatorConstraint, LinearConstraint, QuadraticConstraint, SlmVariable,
        Sos1Set, VarOrigin,
    };

    fn var(name: &str, lower: f64, upper: f64, binary: bool) -> SlmVariable {
        SlmVariable {
            name: name.into(),
            lower,
            upper,
            binary,
            origin: VarOrigin::Auxiliary,
        }
    }

    #[test]
    fn sections_in_order() {
        let mut slm = SingleLevelModel::default();
        let x = slm.add_variable(var("x", 0.0, 5.0, false));
        let z = slm.add_variable(var("z", 0.0, 1.0, true));
        let w = slm.add_variable(var("w", f64::NEG_INFINITY, f64::INFINITY, false));
        slm.objective = AffineExpr::from_terms([(x, 1.0)], 2.0);
        slm.linear.push(LinearConstraint::new(
            "c",
            AffineExpr::from_terms([(x, 1.0), (w, -1.0)], 0.0),
            Sense::Ge,
            1.0,
        ));
        slm.indicators.push(IndicatorConstraint {
            name: "ind".into(),
            binary: z,
            active: true,
            constraint: LinearConstraint::new("ind", AffineExpr::var(x), Sense::Le, 0.0),
        });
        slm.sos1.push(Sos1Set {
            name: "s".into(),
            members: vec![(x, 1.0), (w, 2.0)],
        });
        let text = write_mps(&slm).unwrap();
        let order: Vec<usize> = [
            "ROWS",
            "COLUMNS",
            "RHS",
            "BOUNDS",
            "SOS",
            "INDICATORS",
            "ENDATA",
        ]
        .iter()
        .map(|s| {
            text.find(&format!("\n{s}\n"))
                .unwrap_or_else(|| panic!("{s} missing:\n{text}"))
        })
        .collect();
        assert!(order.windows(2).all(|p| p[0] < p[1]));
        assert!(text.contains(" BV BND       z\n"), "{text}");
        assert!(text.contains(" FR BND       w\n"));
        assert!(text.contains(" IF ind       z         1\n"), "{text}");
        assert!(text.contains("'INTORG'") && text.contains("'INTEND'"));
        assert!(text.contains("    RHS       obj       -2\n"), "{text}");
        assert!(text.lines().all(|l| !l.ends_with(' ')));
    }

    #[test]
    fn quadratic_rows_are_rejected() {
        let mut slm = SingleLevelModel::default();
        let a = slm.add_variable(var("a", 0.0, 1.0, false));
        slm.quadratic.push(QuadraticConstraint {
            name: "comp_0".into(),
            expr: AffineExpr::var(a).product(&AffineExpr::var(a)),
            sense: Sense::Le,
            rhs: 0.1,
            disjunctions: Vec::new(),
        });
        match write_mps(&slm) {
            Err(ExportError::QuadraticUnsupported(name)) => assert_eq!(name, "comp_0"),
            other => panic!("{other:?}"),
        }
    }
}
