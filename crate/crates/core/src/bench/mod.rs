//! Instance × mode sweeps and their result tables.
//!
//! A config file is flat TOML:
//!
//! ```toml
//! instances = [[10, 1, 42], [10, 2, 42]]   # samples, features, seed
//! modes = ["sos1", "indicator", "bigm"]
//! time_limit = 600
//! big_m = 100        # both sides of bigm
//! bounds = 100       # expansion range [-bounds, bounds]
//! bits = 8
//! tau = 1e-9
//! noise = 0.1
//! backend = "internal"   # or "export-only"
//! export_format = "lp"   # or "mps", used by export-only
//! format = "markdown"    # or "csv"
//! out_dir = "bench_out"
//! ```
//!
//! Every key except `instances` and `modes` is optional. Cells run one after
//! another in configuration order.

mod table;

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::export::{export_model, ExportFormat};
use crate::kkt::{build_kkt, KktSystem};
use crate::reformulate::{
    reformulate, ExpansionParams, Mode, ReformulationInfo, DEFAULT_BIG_M, DEFAULT_BITS,
    DEFAULT_BOUND, DEFAULT_TAU,
};
use crate::solver::{solve_reformulation, SolveOptions, SolveResult, GAP_FORMULA};
use crate::svr::{build_bilevel, generate_instance, InstanceName, SvrInstance, DEFAULT_NOISE};

pub use table::{format_gap, format_obj, format_time, render_table, write_csv};

pub const DEFAULT_TIME_LIMIT: f64 = 600.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Internal,
    ExportOnly,
}

impl Backend {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "internal" => Some(Backend::Internal),
            "export-only" | "export" => Some(Backend::ExportOnly),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Backend::Internal => "internal",
            Backend::ExportOnly => "export-only",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Markdown,
    Csv,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "markdown" | "md" => Some(OutputFormat::Markdown),
            "csv" => Some(OutputFormat::Csv),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InstanceSpec {
    pub samples: usize,
    pub features: usize,
    pub seed: u64,
}

impl InstanceSpec {
    pub fn name(&self) -> InstanceName {
        InstanceName {
            samples: self.samples,
            features: self.features,
        }
    }
}

/// A mode with the expansion it needs, if any.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSpec {
    pub mode: Mode,
    pub expansion: Option<ExpansionParams>,
}

impl ModeSpec {
    pub fn new(mode: Mode, bounds: f64, bits: u32) -> Self {
        ModeSpec {
            mode,
            expansion: mode
                .needs_expansion()
                .then(|| ExpansionParams::symmetric(bounds, bits)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub instances: Vec<InstanceSpec>,
    pub modes: Vec<ModeSpec>,
    pub time_limit_s: f64,
    pub noise_amp: f64,
    pub backend: Backend,
    pub export_format: ExportFormat,
    pub output: OutputFormat,
    pub out_dir: PathBuf,
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("config: {0}")]
    Parse(String),
    #[error("config: `{key}` has unknown value `{value}`")]
    BadValue { key: &'static str, value: String },
    #[error("config: `{0}` must not be empty")]
    Empty(&'static str),
    #[error("config: time limit must be a nonnegative number (got {0})")]
    BadTimeLimit(f64),
    #[error("config: instance {0:?} needs samples >= 2 and features >= 1")]
    BadInstance([u64; 3]),
}

/// Raw file contents. Command-line flags are applied on top of this before
/// [`ConfigFile::resolve`].
#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub instances: Option<Vec<[u64; 3]>>,
    pub modes: Option<Vec<String>>,
    pub time_limit: Option<f64>,
    pub big_m: Option<f64>,
    pub bounds: Option<f64>,
    pub bits: Option<u32>,
    pub tau: Option<f64>,
    pub noise: Option<f64>,
    pub backend: Option<String>,
    pub export_format: Option<String>,
    pub format: Option<String>,
    pub out_dir: Option<PathBuf>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn resolve(&self) -> Result<BenchConfig, ConfigError> {
        let instances: Vec<InstanceSpec> = self
            .instances
            .clone()
            .unwrap_or_default()
            .into_iter()
            .map(|t| {
                if t[0] < 2 || t[1] < 1 {
                    return Err(ConfigError::BadInstance(t));
                }
                Ok(InstanceSpec {
                    samples: t[0] as usize,
                    features: t[1] as usize,
                    seed: t[2],
                })
            })
            .collect::<Result<_, _>>()?;
        if instances.is_empty() {
            return Err(ConfigError::Empty("instances"));
        }
        let big_m = self.big_m.unwrap_or(DEFAULT_BIG_M);
        let tau = self.tau.unwrap_or(DEFAULT_TAU);
        let bounds = self.bounds.unwrap_or(DEFAULT_BOUND);
        let bits = self.bits.unwrap_or(DEFAULT_BITS);
        let modes: Vec<ModeSpec> = self
            .modes
            .clone()
            .unwrap_or_default()
            .iter()
            .map(|name| {
                Mode::parse(name, big_m, tau)
                    .map(|m| ModeSpec::new(m, bounds, bits))
                    .ok_or_else(|| ConfigError::BadValue {
                        key: "modes",
                        value: name.clone(),
                    })
            })
            .collect::<Result<_, _>>()?;
        if modes.is_empty() {
            return Err(ConfigError::Empty("modes"));
        }
        let time_limit_s = self.time_limit.unwrap_or(DEFAULT_TIME_LIMIT);
        if !(time_limit_s >= 0.0) {
            return Err(ConfigError::BadTimeLimit(time_limit_s));
        }
        let backend = choose("backend", &self.backend, "internal", Backend::parse)?;
        let export_format = choose(
            "export_format",
            &self.export_format,
            "lp",
            ExportFormat::parse,
        )?;
        let output = choose("format", &self.format, "markdown", OutputFormat::parse)?;
        Ok(BenchConfig {
            instances,
            modes,
            time_limit_s,
            noise_amp: self.noise.unwrap_or(DEFAULT_NOISE),
            backend,
            export_format,
            output,
            out_dir: self
                .out_dir
                .clone()
                .unwrap_or_else(|| PathBuf::from("bench_out")),
        })
    }
}

fn choose<T>(
    key: &'static str,
    value: &Option<String>,
    default: &str,
    parse: fn(&str) -> Option<T>,
) -> Result<T, ConfigError> {
    let v = value.as_deref().unwrap_or(default);
    parse(v).ok_or_else(|| ConfigError::BadValue {
        key,
        value: v.to_string(),
    })
}

/// Parameters a cell ran with, kept in full precision.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverMeta {
    pub gap_formula: &'static str,
    pub big_m: Option<(f64, f64)>,
    pub tau: Option<f64>,
    pub bits: Option<u32>,
    pub expansion_range: Option<(f64, f64)>,
    pub time_limit_s: f64,
    pub noise_amp: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub instance: InstanceName,
    pub seed: u64,
    pub mode: String,
    pub backend: Backend,
    pub status: String,
    pub obj: Option<f64>,
    pub bound: Option<f64>,
    pub gap_pct: Option<f64>,
    /// blank once the time limit is reached
    pub time_s: Option<f64>,
    /// wall time, kept even when `time_s` is blank
    pub elapsed_s: f64,
    pub nodes: u64,
    pub warnings: Vec<String>,
    pub files: Vec<PathBuf>,
    pub message: String,
    pub meta: SolverMeta,
}

impl BenchRecord {
    fn blank(inst: &InstanceSpec, spec: &ModeSpec, cfg: &BenchConfig, status: &str) -> Self {
        let (big_m, tau) = match spec.mode {
            Mode::BigM { primal_m, dual_m } => (Some((primal_m, dual_m)), None),
            Mode::Product { tau, .. } => (None, Some(tau)),
            _ => (None, None),
        };
        BenchRecord {
            instance: inst.name(),
            seed: inst.seed,
            mode: spec.mode.cli_name().to_string(),
            backend: cfg.backend,
            status: status.to_string(),
            obj: None,
            bound: None,
            gap_pct: None,
            time_s: None,
            elapsed_s: 0.0,
            nodes: 0,
            warnings: Vec::new(),
            files: Vec::new(),
            message: String::new(),
            meta: SolverMeta {
                gap_formula: GAP_FORMULA,
                big_m,
                tau,
                bits: spec.expansion.map(|e| e.bits),
                expansion_range: spec.expansion.map(|e| (e.var_lb, e.var_ub)),
                time_limit_s: cfg.time_limit_s,
                noise_amp: cfg.noise_amp,
            },
        }
    }

    pub fn is_error(&self) -> bool {
        self.status == "Error"
    }
}

/// Runs every cell of the sweep, instance-major.
pub fn run_benchmark(cfg: &BenchConfig) -> Vec<BenchRecord> {
    run_benchmark_with(cfg, run_cell)
}

/// Like [`run_benchmark`] with a custom cell runner. A cell that panics
/// becomes an `Error` record and the sweep goes on.
pub fn run_benchmark_with<F>(cfg: &BenchConfig, cell: F) -> Vec<BenchRecord>
where
    F: Fn(&InstanceSpec, &ModeSpec, &BenchConfig) -> BenchRecord,
{
    let mut out = Vec::with_capacity(cfg.instances.len() * cfg.modes.len());
    for inst in &cfg.instances {
        for spec in &cfg.modes {
            let rec =
                catch_unwind(AssertUnwindSafe(|| cell(inst, spec, cfg))).unwrap_or_else(|p| {
                    let mut r = BenchRecord::blank(inst, spec, cfg, "Error");
                    r.message = panic_message(&*p);
                    r
                });
            out.push(rec);
        }
    }
    out
}

fn panic_message(p: &(dyn std::any::Any + Send)) -> String {
    if let Some(s) = p.downcast_ref::<&str>() {
        format!("panic: {s}")
    } else if let Some(s) = p.downcast_ref::<String>() {
        format!("panic: {s}")
    } else {
        "panic".to_string()
    }
}

/// File stem for an exported cell, e.g. `10_02_s42_bigm`.
pub fn cell_stem(inst: &InstanceSpec, spec: &ModeSpec) -> String {
    format!(
        "{}_{:02}_s{}_{}",
        inst.samples,
        inst.features,
        inst.seed,
        spec.mode.cli_name()
    )
}

/// Generate, build, reformulate, then solve or export one cell.
pub fn run_cell(inst: &InstanceSpec, spec: &ModeSpec, cfg: &BenchConfig) -> BenchRecord {
    match generate_instance(inst.samples, inst.features, inst.seed, cfg.noise_amp) {
        Ok(data) => run_cell_on(&data, spec, cfg).record,
        Err(e) => {
            let mut rec = BenchRecord::blank(inst, spec, cfg, "Error");
            rec.message = e.to_string();
            rec
        }
    }
}

/// A finished cell with the model and solver output behind its record.
#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub record: BenchRecord,
    pub kkt: Option<KktSystem>,
    pub info: Option<ReformulationInfo>,
    pub result: Option<SolveResult>,
}

/// Runs one cell on given data instead of a generated instance.
pub fn run_cell_on(data: &SvrInstance, spec: &ModeSpec, cfg: &BenchConfig) -> CellOutcome {
    let inst = InstanceSpec {
        samples: data.samples,
        features: data.features,
        seed: data.seed,
    };
    let mut out = CellOutcome {
        record: BenchRecord::blank(&inst, spec, cfg, "Error"),
        kkt: None,
        info: None,
        result: None,
    };
    let rec = &mut out.record;
    let sm = build_bilevel(data);
    let kkt = match build_kkt(&sm.model) {
        Ok(k) => k,
        Err(e) => {
            rec.message = e.to_string();
            return out;
        }
    };
    let info = match reformulate(&sm.model, &kkt, spec.mode, spec.expansion) {
        Ok(info) => info,
        Err(e) => {
            rec.message = e.to_string();
            return out;
        }
    };

    match cfg.backend {
        Backend::ExportOnly => {
            let path = cfg.out_dir.join(format!(
                "{}.{}",
                cell_stem(&inst, spec),
                cfg.export_format.extension()
            ));
            let written = fs::create_dir_all(&cfg.out_dir)
                .map_err(|e| format!("{}: {e}", cfg.out_dir.display()))
                .and_then(|()| {
                    export_model(&info.slm, cfg.export_format, &path).map_err(|e| e.to_string())
                });
            match written {
                Ok(()) => {
                    rec.status = "Exported".into();
                    rec.files.push(path);
                }
                Err(e) => rec.message = e,
            }
        }
        Backend::Internal => {
            let opts = SolveOptions {
                time_limit_s: cfg.time_limit_s,
                ..SolveOptions::default()
            };
            let r = solve_reformulation(&info, opts);
            rec.status = r.status.as_str().to_string();
            rec.obj = r.objective;
            rec.bound = r.bound;
            rec.gap_pct = r.gap_pct;
            rec.elapsed_s = r.time_s;
            rec.time_s = (r.time_s < cfg.time_limit_s).then_some(r.time_s);
            rec.nodes = r.nodes;
            rec.warnings = r.warnings.iter().map(|w| w.to_string()).collect();
            rec.message = r.message.clone();
            out.result = Some(r);
        }
    }
    out.kkt = Some(kkt);
    out.info = Some(info);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> BenchConfig {
        ConfigFile::parse(text).unwrap().resolve().unwrap()
    }

    #[test]
    fn config_defaults() {
        let c = cfg("instances = [[10, 1, 42]]\nmodes = [\"sos1\", \"product-bin\"]\n");
        assert_eq!(c.time_limit_s, 600.0);
        assert_eq!(c.backend, Backend::Internal);
        assert_eq!(c.output, OutputFormat::Markdown);
        assert_eq!(c.modes[0].expansion, None);
        assert_eq!(
            c.modes[1].expansion,
            Some(ExpansionParams::symmetric(100.0, 8))
        );
        assert_eq!(c.noise_amp, 0.1);
    }

    #[test]
    fn config_errors() {
        let bad = |t: &str| ConfigFile::parse(t).and_then(|f| f.resolve()).unwrap_err();
        assert_eq!(bad("modes = [\"sos1\"]"), ConfigError::Empty("instances"));
        assert!(matches!(
            bad("instances = [[10,1,1]]\nmodes = [\"nope\"]"),
            ConfigError::BadValue { key: "modes", .. }
        ));
        assert!(matches!(
            bad("instances = [[1,1,1]]\nmodes = [\"sos1\"]"),
            ConfigError::BadInstance(_)
        ));
        assert!(matches!(bad("unknown = 3"), ConfigError::Parse(_)));
        assert!(matches!(
            bad("instances = [[10,1,1]]\nmodes = [\"sos1\"]\ntime_limit = -1"),
            ConfigError::BadTimeLimit(_)
        ));
    }

    #[test]
    fn exact_modes_agree_on_a_cell() {
        let c = cfg("instances = [[10, 1, 42]]\nmodes = [\"sos1\", \"bigm\"]\n");
        let recs = run_benchmark(&c);
        assert_eq!(recs.len(), 2);
        let (a, b) = (recs[0].obj.unwrap(), recs[1].obj.unwrap());
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        assert_eq!(recs[1].meta.big_m, Some((100.0, 100.0)));
    }

    #[test]
    fn zero_time_limit_blanks_time() {
        let c =
            cfg("instances = [[10, 1, 42]]\nmodes = [\"sos1\", \"indicator\"]\ntime_limit = 0\n");
        for r in run_benchmark(&c) {
            assert_eq!(r.status, "TimeLimit");
            assert_eq!(r.time_s, None);
        }
    }

    #[test]
    fn panicking_cell_is_isolated() {
        let c = cfg("instances = [[4, 1, 1], [6, 1, 2]]\nmodes = [\"sos1\", \"bigm\"]\n");
        let recs = run_benchmark_with(&c, |inst, spec, cfg| {
            if inst.seed == 2 && spec.mode.cli_name() == "bigm" {
                panic!("boom");
            }
            run_cell(inst, spec, cfg)
        });
        assert_eq!(recs.len(), 4);
        assert_eq!(recs.iter().filter(|r| r.is_error()).count(), 1);
        assert_eq!(recs[3].message, "panic: boom");
        assert_eq!(recs[3].mode, "bigm");
    }

    #[test]
    fn export_only_writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let text = format!(
            "instances = [[10, 2, 7]]\nmodes = [\"bigm\", \"sos1\"]\nbackend = \"export-only\"\nout_dir = {:?}\n",
            dir.path().display().to_string()
        );
        let recs = run_benchmark(&cfg(&text));
        for r in &recs {
            assert_eq!(r.status, "Exported");
            assert!(r.obj.is_none() && r.gap_pct.is_none() && r.time_s.is_none());
            assert!(r.files[0].exists());
        }
        assert!(recs[0].files[0].ends_with("10_02_s7_bigm.lp"));
    }
}
