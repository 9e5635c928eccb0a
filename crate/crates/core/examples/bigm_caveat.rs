//! A big-M that is too small cuts off the bilevel optimum, and the solver
//! says so with a `BigMBoundActive` warning.

use bilevel::kkt::build_kkt;
use bilevel::oracle::enumerate_patterns;
use bilevel::reformulate::{reformulate, Mode};
use bilevel::solver::{solve_reformulation, SolveOptions};
use bilevel::svr::{build_bilevel, SvrInstance};

fn main() {
    // one training point and one validation point at x = 1, y = 1
    let inst = SvrInstance::from_data(vec![vec![1.0], vec![1.0]], vec![1.0, 1.0], vec![0]).unwrap();
    let sm = build_bilevel(&inst);
    let kkt = build_kkt(&sm.model).unwrap();
    let oracle = enumerate_patterns(&sm.model, &kkt).unwrap().objective;
    println!("enumeration: {oracle}");

    for m in [1.0, 10.0, 100.0] {
        let mode = Mode::BigM {
            primal_m: m,
            dual_m: m,
        };
        let info = reformulate(&sm.model, &kkt, mode, None).unwrap();
        let r = solve_reformulation(&info, SolveOptions::default());
        println!(
            "M = {m:<5} objective {:.6} ({} warnings)",
            r.objective.unwrap_or(f64::NAN),
            r.warnings.len()
        );
        for w in &r.warnings {
            println!("    {w}");
        }
    }
}
