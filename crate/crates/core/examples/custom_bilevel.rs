//! A small hand-written linear bilevel problem solved through the KKT
//! reformulation. Its optimum is x = 4, y = 4 with upper objective -12.
//!
//! Upper: min x - 4y over x >= 0.
//! Lower: min y over y >= 0 subject to
//!   -x - y <= -3, -2x + y <= 0, 2x + y <= 12, 3x - 2y <= 4.

use bilevel::kkt::build_kkt;
use bilevel::model::{AffineExpr, BilevelModel, Level, ObjSense, Sense};
use bilevel::oracle::enumerate_patterns;
use bilevel::reformulate::{reformulate, Mode};
use bilevel::solver::{solve_reformulation, SolveOptions};

fn main() {
    let mut m = BilevelModel::new();
    let x = m
        .add_variable(Level::Upper, 0.0, f64::INFINITY, "x")
        .unwrap();
    let y = m
        .add_variable(Level::Lower, 0.0, f64::INFINITY, "y")
        .unwrap();

    m.set_objective(
        Level::Upper,
        ObjSense::Min,
        AffineExpr::from_terms([(x, 1.0), (y, -4.0)], 0.0),
    );
    m.set_objective(Level::Lower, ObjSense::Min, AffineExpr::var(y));
    for (a, b, rhs) in [
        (-1.0, -1.0, -3.0),
        (-2.0, 1.0, 0.0),
        (2.0, 1.0, 12.0),
        (3.0, -2.0, 4.0),
    ] {
        let row = AffineExpr::from_terms([(x, a), (y, b)], 0.0);
        m.add_constraint(Level::Lower, row, Sense::Le, rhs).unwrap();
    }
    assert!(m.validate().is_empty(), "{:?}", m.validate());

    let kkt = build_kkt(&m).unwrap();
    println!(
        "KKT: {} multipliers, {} complementarity pairs",
        kkt.duals.len(),
        kkt.pairs.len()
    );

    let oracle = enumerate_patterns(&m, &kkt).unwrap();
    println!("enumeration: objective {:.6}", oracle.objective);

    let modes = [
        Mode::Sos1,
        Mode::Indicator,
        Mode::BigM {
            primal_m: 100.0,
            dual_m: 100.0,
        },
        Mode::StrongDuality { expanded: false },
    ];
    for mode in modes {
        let info = reformulate(&m, &kkt, mode, None).unwrap();
        let r = solve_reformulation(&info, SolveOptions::default());
        let p = r.point.as_deref().unwrap_or(&[]);
        println!(
            "{:<15} {:?} objective {:.6} at x = {:.4}, y = {:.4}",
            mode.to_string(),
            r.status,
            r.objective.unwrap_or(f64::NAN),
            p.get(x.index()).copied().unwrap_or(f64::NAN),
            p.get(y.index()).copied().unwrap_or(f64::NAN),
        );
    }
}
