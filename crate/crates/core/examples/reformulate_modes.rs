//! Every single-level encoding of one instance, with its size.

use bilevel::kkt::build_kkt;
use bilevel::reformulate::{reformulate, ExpansionParams, Mode};
use bilevel::svr::{build_bilevel, generate_instance};

fn main() {
    let inst = generate_instance(10, 2, 42, 0.1).unwrap();
    let sm = build_bilevel(&inst);
    let kkt = build_kkt(&sm.model).unwrap();
    let modes = [
        Mode::Sos1,
        Mode::Indicator,
        Mode::BigM {
            primal_m: 100.0,
            dual_m: 100.0,
        },
        Mode::Product {
            tau: 1e-9,
            expanded: false,
        },
        Mode::Product {
            tau: 1e-9,
            expanded: true,
        },
        Mode::StrongDuality { expanded: false },
        Mode::StrongDuality { expanded: true },
    ];
    println!(
        "{:<20} {:>6} {:>6} {:>6} {:>5} {:>5} {:>5}",
        "mode", "vars", "bins", "rows", "quad", "sos1", "ind"
    );
    for mode in modes {
        let params = mode
            .needs_expansion()
            .then(|| ExpansionParams::symmetric(100.0, 8));
        let info = reformulate(&sm.model, &kkt, mode, params).unwrap();
        let s = &info.slm;
        println!(
            "{:<20} {:>6} {:>6} {:>6} {:>5} {:>5} {:>5}",
            mode.to_string(),
            s.num_variables(),
            s.num_binaries(),
            s.linear.len(),
            s.quadratic.len(),
            s.sos1.len(),
            s.indicators.len()
        );
    }
}
