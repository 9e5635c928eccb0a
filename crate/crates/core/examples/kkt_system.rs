//! Build the KKT system of an SVR lower level and check it at the exact
//! lower-level solution for a fixed (C, eps).

use bilevel::kkt::build_kkt;
use bilevel::oracle::solve_lower;
use bilevel::svr::{build_bilevel, generate_instance};

fn main() {
    let inst = generate_instance(8, 2, 7, 0.1).unwrap();
    let sm = build_bilevel(&inst);
    let kkt = build_kkt(&sm.model).unwrap();
    println!(
        "{} model variables, {} multipliers, {} stationarity rows, {} pairs",
        kkt.num_model_vars,
        kkt.duals.len(),
        kkt.stationarity.len(),
        kkt.pairs.len()
    );
    for (k, pair) in kkt.pairs.iter().take(4).enumerate() {
        println!(
            "  pair {k}: {:?} with slack of {} terms",
            pair.source,
            pair.slack.num_terms()
        );
    }

    for (c, eps) in [(0.1, 0.0), (1.0, 0.05), (50.0, 0.2)] {
        let mut upper = vec![0.0; sm.model.num_variables()];
        upper[sm.c.index()] = c;
        upper[sm.eps.index()] = eps;
        let sol = solve_lower(&sm.model, &kkt, &upper).unwrap();
        let w: Vec<f64> = sm.w.iter().map(|v| sol.value(*v)).collect();
        println!(
            "C = {c:<5} eps = {eps:<4} w = {w:.4?}  lower objective {:.5}  max residual {:.1e}",
            sol.objective,
            sol.residuals.max()
        );
    }
}
