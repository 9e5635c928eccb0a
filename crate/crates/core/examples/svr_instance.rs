//! Generate a seeded SVR instance, build its bilevel model and round-trip
//! the data through CSV.

use bilevel::svr::{
    build_bilevel, generate_instance, instance_from_csv, instance_meta, instance_to_csv,
    DEFAULT_NOISE,
};

fn main() {
    let inst = generate_instance(6, 2, 42, DEFAULT_NOISE).expect("valid size");
    println!("instance {} (seed {})", inst.name(), inst.seed);
    println!(
        "in-sample rows {:?}, out-of-sample rows {:?}",
        inst.in_idx, inst.out_idx
    );
    for (row, y) in inst.x.iter().zip(&inst.y) {
        println!("  x = {row:?}  y = {y:+.4}");
    }

    let sm = build_bilevel(&inst);
    let m = &sm.model;
    println!(
        "bilevel model: {} variables, {} constraints",
        m.num_variables(),
        m.constraints().len()
    );
    for v in m.variables() {
        println!("  {:<8} {:?} [{}, {}]", v.name, v.level, v.lower, v.upper);
    }

    let text = instance_to_csv(&inst);
    let back = instance_from_csv(&text, Some(&instance_meta(&inst))).expect("own csv parses");
    assert_eq!(back, inst);
    println!("csv round trip ok ({} bytes)", text.len());
}
