//! Randomized invariants over instances, exports and table rendering.

use bilevel::bench::{format_gap, format_obj, format_time};
use bilevel::export::{read_lp, write_lp, write_mps};
use bilevel::kkt::build_kkt;
use bilevel::oracle::enumerate_patterns;
use bilevel::reformulate::{reformulate, Mode};
use bilevel::solver::{solve_reformulation, SolveOptions};
use bilevel::svr::{build_bilevel, generate_instance};
use proptest::prelude::*;

fn exact_mode() -> impl Strategy<Value = Mode> {
    prop_oneof![
        Just(Mode::Sos1),
        Just(Mode::Indicator),
        (1.0f64..200.0).prop_map(|m| Mode::BigM {
            primal_m: m,
            dual_m: m
        }),
        Just(Mode::Product {
            tau: 0.0,
            expanded: false
        }),
        Just(Mode::StrongDuality { expanded: false }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn blank_cells(obj in proptest::option::of(-1e3f64..1e3), gap in proptest::option::of(0.0f64..1e4),
                   time in 0.0f64..1200.0, limit in 1.0f64..900.0) {
        prop_assert_eq!(format_obj(obj) == "-", obj.is_none());
        prop_assert_eq!(format_gap(gap) == "-", gap.is_none());
        prop_assert_eq!(format_time(Some(time), limit) == "-", time >= limit);
        prop_assert_eq!(format_time(None, limit), "-");
        prop_assert!(!format_obj(obj).starts_with("-0.00"));
    }

    #[test]
    fn exports_are_deterministic(s in 2usize..9, f in 1usize..3, seed in 0u64..1000, mode in exact_mode()) {
        let inst = generate_instance(s, f, seed, 0.1).unwrap();
        let sm = build_bilevel(&inst);
        let kkt = build_kkt(&sm.model).unwrap();
        let a = reformulate(&sm.model, &kkt, mode, None).unwrap();
        let b = reformulate(&sm.model, &kkt, mode, None).unwrap();
        let lp = write_lp(&a.slm);
        prop_assert_eq!(&lp, &write_lp(&b.slm));
        // MPS refuses quadratic rows, the same way both times
        prop_assert_eq!(write_mps(&a.slm).ok(), write_mps(&b.slm).ok());
        let back = read_lp(&lp).unwrap();
        prop_assert_eq!(back.num_variables(), a.slm.num_variables());
        prop_assert_eq!(back.linear.len(), a.slm.linear.len());
        prop_assert_eq!(back.num_binaries(), a.slm.num_binaries());
        prop_assert_eq!(back.sos1.len(), a.slm.sos1.len());
        prop_assert_eq!(back.indicators.len(), a.slm.indicators.len());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn bound_trace_is_monotone(s in 2usize..9, f in 1usize..3, seed in 0u64..1000, mode in exact_mode()) {
        let inst = generate_instance(s, f, seed, 0.1).unwrap();
        let sm = build_bilevel(&inst);
        let kkt = build_kkt(&sm.model).unwrap();
        let info = reformulate(&sm.model, &kkt, mode, None).unwrap();
        let r = solve_reformulation(&info, SolveOptions::default());
        for w in r.trace.windows(2) {
            prop_assert!(w[1].bound >= w[0].bound - 1e-9, "{:?}", w);
            prop_assert!(w[1].node >= w[0].node);
        }
        if let (Some(obj), Some(last)) = (r.objective, r.trace.last()) {
            prop_assert!(last.bound <= obj + 1e-9);
        }
    }

    #[test]
    fn exact_modes_match_enumeration(s in 2usize..7, f in 1usize..3, seed in 0u64..1000) {
        let inst = generate_instance(s, f, seed, 0.1).unwrap();
        let sm = build_bilevel(&inst);
        let kkt = build_kkt(&sm.model).unwrap();
        let oracle = enumerate_patterns(&sm.model, &kkt).unwrap().objective;
        for mode in [Mode::Sos1, Mode::Indicator, Mode::StrongDuality { expanded: false }] {
            let info = reformulate(&sm.model, &kkt, mode, None).unwrap();
            let obj = solve_reformulation(&info, SolveOptions::default()).objective.unwrap();
            prop_assert!((obj - oracle).abs() <= 1e-6, "{mode}: {obj} vs {oracle}");
        }
    }
}
