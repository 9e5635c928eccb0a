//! Grid search gives an upper bound; pattern enumeration is exact.

use bilevel::oracle::{enumerate_instance, grid_search, Certificate, GridSpec};
use bilevel::svr::generate_instance;

fn main() {
    println!(
        "{:<8} {:>10} {:>10} {:>8} {:>8}",
        "inst", "grid", "enum", "diff", "evals"
    );
    for (s, f) in [(4, 1), (6, 2), (8, 1), (10, 2)] {
        let inst = generate_instance(s, f, 3, 0.1).unwrap();
        let grid = grid_search(&inst, &GridSpec::default()).unwrap();
        let exact = enumerate_instance(&inst).unwrap();
        assert!(exact.objective <= grid.objective + 1e-9);
        println!(
            "{:<8} {:>10.5} {:>10.5} {:>8.4} {:>8}",
            inst.name().to_string(),
            grid.objective,
            exact.objective,
            grid.objective - exact.objective,
            exact.evaluations
        );
        if let Certificate::GridFeasible { c, eps } = grid.certificate {
            println!("         best grid point C = {c}, eps = {eps}");
        }
    }
}
