//! Product encoding with binary-expanded multipliers: more bits give a finer
//! grid and a smaller objective error.

use bilevel::kkt::build_kkt;
use bilevel::oracle::enumerate_patterns;
use bilevel::reformulate::{reformulate, ExpansionParams, Mode};
use bilevel::solver::{solve_reformulation, SolveOptions};
use bilevel::svr::{build_bilevel, SvrInstance};

fn main() {
    let inst = SvrInstance::from_data(vec![vec![1.0], vec![1.0]], vec![1.0, 1.0], vec![0]).unwrap();
    let sm = build_bilevel(&inst);
    let kkt = build_kkt(&sm.model).unwrap();
    let oracle = enumerate_patterns(&sm.model, &kkt).unwrap().objective;

    let mode = Mode::Product {
        tau: 1e-9,
        expanded: true,
    };
    for bits in [2, 4, 6, 8] {
        let params = ExpansionParams::symmetric(100.0, bits);
        let info = reformulate(&sm.model, &kkt, mode, Some(params)).unwrap();
        let r = solve_reformulation(&info, SolveOptions::default());
        let obj = r.objective.unwrap_or(f64::NAN);
        let spacing = params.spacing(0.0, 100.0);
        println!(
            "{bits:>2} bits: {:>4} binaries, spacing {spacing:>8.4}, objective {obj:.6}, error {:.6}",
            info.slm.num_binaries(),
            (obj - oracle).abs()
        );
    }
}
