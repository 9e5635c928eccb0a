//! The `bilevel` command line.
//!
//! Exit codes: 0 on success, 1 when a cell or command fails, 2 on usage
//! errors.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::builder::PossibleValuesParser;
use clap::{Args, Parser, Subcommand};

use crate::bench::{
    cell_stem, render_table, run_benchmark, run_cell_on, Backend, BenchConfig, ConfigFile,
    InstanceSpec, ModeSpec, OutputFormat, DEFAULT_TIME_LIMIT,
};
use crate::export::{export_model, ExportFormat};
use crate::kkt::build_kkt;
use crate::oracle::{enumerate_instance, grid_search, to_assignment, Certificate, GridSpec};
use crate::reformulate::{
    reformulate, Mode, DEFAULT_BIG_M, DEFAULT_BITS, DEFAULT_BOUND, DEFAULT_TAU,
};
use crate::svr::{
    build_bilevel, generate_instance, instance_to_csv, read_instance, write_instance, SvrInstance,
    DEFAULT_NOISE,
};

const MODES: [&str; 7] = [
    "sos1",
    "indicator",
    "bigm",
    "product",
    "product-bin",
    "strong-duality",
    "strong-duality-bin",
];

#[derive(Debug, Parser)]
#[command(
    name = "bilevel",
    version,
    about = "Single-level reformulations of bilevel SVR tuning problems"
)]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a seeded instance as CSV (plus a JSON sidecar with --out)
    Generate {
        #[command(flatten)]
        inst: InstanceArgs,
        /// CSV path; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reformulate and solve one instance with one mode
    Solve {
        #[command(flatten)]
        inst: InstanceArgs,
        #[command(flatten)]
        mode: ModeArgs,
        #[arg(long, default_value_t = DEFAULT_TIME_LIMIT)]
        time_limit: f64,
        #[arg(long, default_value = "markdown", value_parser = ["markdown", "csv"])]
        format: String,
        /// also write the table here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an instance x mode sweep
    Bench(BenchArgs),
    /// Solve an instance with an independent oracle
    Oracle {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long, default_value = "enumerate", value_parser = ["grid", "enumerate"])]
        method: String,
    },
    /// Write a reformulated model as an LP or MPS file
    Export {
        #[command(flatten)]
        inst: InstanceArgs,
        #[command(flatten)]
        mode: ModeArgs,
        #[arg(long, default_value = "lp", value_parser = ["lp", "mps"])]
        format: String,
        /// file path; defaults to `<S>_<FF>_s<seed>_<mode>.<ext>`
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct InstanceArgs {
    #[arg(long, required_unless_present = "instance")]
    samples: Option<usize>,
    #[arg(long, required_unless_present = "instance")]
    features: Option<usize>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_NOISE)]
    noise: f64,
    /// read the instance from a CSV written by `generate`
    #[arg(long, conflicts_with_all = ["samples", "features"])]
    instance: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ModeArgs {
    #[arg(long, value_parser = PossibleValuesParser::new(MODES))]
    mode: String,
    #[arg(long, default_value_t = DEFAULT_BIG_M)]
    big_m: f64,
    /// expansion range is [-bounds, bounds]
    #[arg(long, default_value_t = DEFAULT_BOUND)]
    bounds: f64,
    #[arg(long, default_value_t = DEFAULT_BITS)]
    bits: u32,
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: f64,
}

impl ModeArgs {
    fn spec(&self) -> ModeSpec {
        let mode = Mode::parse(&self.mode, self.big_m, self.tau).expect("clap checked the name");
        ModeSpec::new(mode, self.bounds, self.bits)
    }
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// TOML config; flags below override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// with --features, replaces the config's instance list
    #[arg(long, requires = "features")]
    samples: Option<usize>,
    #[arg(long, requires = "samples")]
    features: Option<usize>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// comma-separated; replaces the config's modes
    #[arg(long, value_delimiter = ',', value_parser = PossibleValuesParser::new(MODES))]
    mode: Option<Vec<String>>,
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    big_m: Option<f64>,
    #[arg(long)]
    bounds: Option<f64>,
    #[arg(long)]
    bits: Option<u32>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, value_parser = ["markdown", "csv"])]
    format: Option<String>,
    #[arg(long, value_parser = ["internal", "export-only"])]
    backend: Option<String>,
    /// directory for exported models
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// write the table here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

impl BenchArgs {
    fn config(&self) -> Result<BenchConfig, String> {
        let mut file = match &self.config {
            Some(p) => ConfigFile::read(p).map_err(|e| e.to_string())?,
            None => ConfigFile::default(),
        };
        if let (Some(s), Some(f)) = (self.samples, self.features) {
            file.instances = Some(vec![[s as u64, f as u64, self.seed]]);
        }
        if let Some(m) = &self.mode {
            file.modes = Some(m.clone());
        }
        macro_rules! over {
            ($($field:ident <- $flag:ident),*) => {
                $(if let Some(v) = &self.$flag {
                    file.$field = Some(v.clone());
                })*
            };
        }
        over!(time_limit <- time_limit, big_m <- big_m, bounds <- bounds, bits <- bits,
              tau <- tau, format <- format, backend <- backend, out_dir <- out_dir);
        file.resolve().map_err(|e| e.to_string())
    }
}

enum Failure {
    Usage(String),
    Run(String),
}

/// Runs the command line and returns the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            eprintln!("run `bilevel --help` for usage");
            2
        }
        Err(Failure::Run(m)) => {
            eprintln!("error: {m}");
            1
        }
    }
}

fn load(args: &InstanceArgs) -> Result<SvrInstance, Failure> {
    match &args.instance {
        Some(p) => read_instance(p).map_err(|e| Failure::Run(format!("{}: {e}", p.display()))),
        None => {
            let (s, f) = (args.samples.unwrap_or(0), args.features.unwrap_or(0));
            generate_instance(s, f, args.seed, args.noise)
                .map_err(|e| Failure::Usage(e.to_string()))
        }
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Run(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cmd: Command) -> Result<i32, Failure> {
    match cmd {
        Command::Generate { inst, out } => {
            let data = load(&inst)?;
            match out {
                Some(p) => {
                    write_instance(&data, &p)
                        .map_err(|e| Failure::Run(format!("{}: {e}", p.display())))?;
                    println!(
                        "wrote {} and {}",
                        p.display(),
                        p.with_extension("json").display()
                    );
                }
                None => print!("{}", instance_to_csv(&data)),
            }
            Ok(0)
        }
        Command::Solve {
            inst,
            mode,
            time_limit,
            format,
            out,
        } => {
            let data = load(&inst)?;
            if !(time_limit >= 0.0) {
                return Err(Failure::Usage(format!(
                    "time limit {time_limit} is negative"
                )));
            }
            let cfg = BenchConfig {
                instances: vec![InstanceSpec {
                    samples: data.samples,
                    features: data.features,
                    seed: data.seed,
                }],
                modes: vec![mode.spec()],
                time_limit_s: time_limit,
                noise_amp: data.noise_amp,
                backend: Backend::Internal,
                export_format: ExportFormat::Lp,
                output: OutputFormat::parse(&format).expect("clap checked the format"),
                out_dir: PathBuf::new(),
            };
            let cell = run_cell_on(&data, &cfg.modes[0], &cfg);
            let table = render_table(std::slice::from_ref(&cell.record), cfg.output);
            emit(&table, out.as_deref())?;
            if cell.record.is_error() {
                return Err(Failure::Run(cell.record.message));
            }
            let point = cell.result.as_ref().and_then(|r| r.point.as_ref());
            if let (Some(x), Some(kkt)) = (point, &cell.kkt) {
                let sm = build_bilevel(&data);
                let res = kkt
                    .kkt_residual(&to_assignment(&x[..kkt.num_vars()]))
                    .map_err(|e| Failure::Run(e.to_string()))?;
                println!("C = {:.6}, eps = {:.6}", x[sm.c.index()], x[sm.eps.index()]);
                println!(
                    "KKT residuals: stationarity {:.2e}, feasibility {:.2e}, complementarity {:.2e}",
                    res.stat_inf, res.feas_inf, res.comp_inf
                );
            }
            Ok(0)
        }
        Command::Bench(args) => {
            let cfg = args.config().map_err(Failure::Usage)?;
            let records = run_benchmark(&cfg);
            emit(&render_table(&records, cfg.output), args.out.as_deref())?;
            let failed = records.iter().filter(|r| r.is_error()).count();
            if failed > 0 {
                eprintln!("{failed} of {} cells failed", records.len());
                return Ok(1);
            }
            Ok(0)
        }
        Command::Oracle { inst, method } => {
            let data = load(&inst)?;
            let r = match method.as_str() {
                "grid" => grid_search(&data, &GridSpec::default()),
                _ => enumerate_instance(&data),
            }
            .map_err(|e| Failure::Run(e.to_string()))?;
            println!("instance {} seed {}", data.name(), data.seed);
            println!("objective {:.10}", r.objective);
            let sm = build_bilevel(&data);
            println!(
                "C = {:.6}, eps = {:.6}",
                r.point[sm.c.index()],
                r.point[sm.eps.index()]
            );
            match r.certificate {
                Certificate::GridFeasible { c, eps } => {
                    println!("grid point C = {c}, eps = {eps} (upper bound)")
                }
                Certificate::PatternExact { mask } => println!("exact, pattern {mask:#b}"),
            }
            println!("{} subproblems", r.evaluations);
            Ok(0)
        }
        Command::Export {
            inst,
            mode,
            format,
            out,
        } => {
            let data = load(&inst)?;
            let spec = mode.spec();
            let fmt = ExportFormat::parse(&format).expect("clap checked the format");
            let sm = build_bilevel(&data);
            let kkt = build_kkt(&sm.model).map_err(|e| Failure::Run(e.to_string()))?;
            let info = reformulate(&sm.model, &kkt, spec.mode, spec.expansion)
                .map_err(|e| Failure::Run(e.to_string()))?;
            let path = out.unwrap_or_else(|| {
                let cell = InstanceSpec {
                    samples: data.samples,
                    features: data.features,
                    seed: data.seed,
                };
                PathBuf::from(format!("{}.{}", cell_stem(&cell, &spec), fmt.extension()))
            });
            export_model(&info.slm, fmt, &path).map_err(|e| Failure::Run(e.to_string()))?;
            println!("wrote {}", path.display());
            Ok(0)
        }
    }
}
