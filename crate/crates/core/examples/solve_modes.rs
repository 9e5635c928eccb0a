//! Solve the exact encodings with the internal branch and bound and compare
//! each against pattern enumeration.

use bilevel::kkt::build_kkt;
use bilevel::oracle::enumerate_patterns;
use bilevel::reformulate::{reformulate, Mode};
use bilevel::solver::{solve_reformulation, SolveOptions};
use bilevel::svr::{build_bilevel, generate_instance};

fn main() {
    let inst = generate_instance(10, 1, 42, 0.1).unwrap();
    let sm = build_bilevel(&inst);
    let kkt = build_kkt(&sm.model).unwrap();
    let exact = enumerate_patterns(&sm.model, &kkt).unwrap();
    println!(
        "{}: enumeration objective {:.6}",
        inst.name(),
        exact.objective
    );

    let opts = SolveOptions {
        time_limit_s: 60.0,
        ..SolveOptions::default()
    };
    for mode in [
        Mode::Sos1,
        Mode::Indicator,
        Mode::BigM {
            primal_m: 100.0,
            dual_m: 100.0,
        },
        Mode::Product {
            tau: 0.0,
            expanded: false,
        },
        Mode::StrongDuality { expanded: false },
    ] {
        let info = reformulate(&sm.model, &kkt, mode, None).unwrap();
        let r = solve_reformulation(&info, opts);
        let x = r.point.as_deref().unwrap_or(&[]);
        println!(
            "{:<15} {:<9} obj {:.6} gap {:.2e}% nodes {:>5} C {:.4} eps {:.4}",
            mode.to_string(),
            r.status.as_str(),
            r.objective.unwrap_or(f64::NAN),
            r.gap_pct.unwrap_or(f64::NAN),
            r.nodes,
            x.get(sm.c.index()).copied().unwrap_or(f64::NAN),
            x.get(sm.eps.index()).copied().unwrap_or(f64::NAN),
        );
        for w in &r.warnings {
            println!("    {w}");
        }
    }
}
