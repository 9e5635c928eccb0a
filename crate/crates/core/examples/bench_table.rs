//! Run a small benchmark from an inline TOML config and print the table in
//! both output formats.

use bilevel::bench::{render_table, run_benchmark, ConfigFile, OutputFormat};

const CONFIG: &str = r#"
instances = [[6, 1, 42], [8, 2, 42]]
modes = ["sos1", "indicator", "bigm", "strong-duality"]
time_limit = 30
"#;

fn main() {
    let cfg = ConfigFile::parse(CONFIG)
        .and_then(|c| c.resolve())
        .expect("valid config");
    let records = run_benchmark(&cfg);
    println!("{}", render_table(&records, OutputFormat::Markdown));
    println!("{}", render_table(&records, OutputFormat::Csv));
}
