//! Seeded HT-SVR datasets and their bilevel hyperparameter-tuning model.
//!
//! Generator: `ChaCha8Rng::seed_from_u64(seed)` from `rand_chacha`; each
//! uniform double is `(next_u64() >> 11) * 2^-53` in `[0, 1)`, mapped to
//! `[-1, 1)` by `2u - 1`. All `x` entries are drawn row-major first, then
//! one noise draw per sample, so a seed means the same data everywhere.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AffineExpr, BilevelModel, Level, ObjSense, QuadExpr, Sense, VarId};

/// Noise amplitude used when none is given.
pub const DEFAULT_NOISE: f64 = 0.1;

pub const GENERATOR_TAG: &str = "chacha8-seed_from_u64/u64>>11*2^-53";

#[derive(Debug, Error)]
pub enum SvrError {
    #[error("invalid instance size: {samples} samples, {features} features (need samples >= 2, features >= 1)")]
    InvalidSize { samples: usize, features: usize },
    #[error("weight vector has {got} entries, instance has {expected} features")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cannot parse instance name `{0}` (expected S/FF)")]
    BadName(String),
    #[error("instance file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// `S/FF`, e.g. `100/02`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InstanceName {
    pub samples: usize,
    pub features: usize,
}

impl fmt::Display for InstanceName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{:02}", self.samples, self.features)
    }
}

impl FromStr for InstanceName {
    type Err = SvrError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SvrError::BadName(s.to_string());
        let (a, b) = s.trim().split_once('/').ok_or_else(bad)?;
        Ok(InstanceName {
            samples: a.parse().map_err(|_| bad())?,
            features: b.parse().map_err(|_| bad())?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvrInstance {
    pub samples: usize,
    pub features: usize,
    /// row-major, `samples` rows of `features` entries
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub in_idx: Vec<usize>,
    pub out_idx: Vec<usize>,
    pub seed: u64,
    pub noise_amp: f64,
}

fn uniform_pm1(rng: &mut ChaCha8Rng) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    2.0 * u - 1.0
}

/// In-sample rows are the first `ceil(S/2)` indices.
pub fn generate_instance(
    samples: usize,
    features: usize,
    seed: u64,
    noise_amp: f64,
) -> Result<SvrInstance, SvrError> {
    if samples < 2 || features < 1 {
        return Err(SvrError::InvalidSize { samples, features });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<Vec<f64>> = (0..samples)
        .map(|_| (0..features).map(|_| uniform_pm1(&mut rng)).collect())
        .collect();
    let y = x
        .iter()
        .map(|row| row.iter().sum::<f64>() + noise_amp * uniform_pm1(&mut rng))
        .collect();
    let split = samples.div_ceil(2);
    Ok(SvrInstance {
        samples,
        features,
        x,
        y,
        in_idx: (0..split).collect(),
        out_idx: (split..samples).collect(),
        seed,
        noise_amp,
    })
}

impl SvrInstance {
    pub fn name(&self) -> InstanceName {
        InstanceName {
            samples: self.samples,
            features: self.features,
        }
    }

    /// Builds an instance from explicit data; `in_idx` lists in-sample rows.
    pub fn from_data(x: Vec<Vec<f64>>, y: Vec<f64>, in_idx: Vec<usize>) -> Result<Self, SvrError> {
        let samples = x.len();
        let features = x.first().map_or(0, |r| r.len());
        if samples == 0
            || features == 0
            || y.len() != samples
            || x.iter().any(|r| r.len() != features)
        {
            return Err(SvrError::InvalidSize { samples, features });
        }
        let out_idx = (0..samples).filter(|i| !in_idx.contains(i)).collect();
        Ok(SvrInstance {
            samples,
            features,
            x,
            y,
            in_idx,
            out_idx,
            seed: 0,
            noise_amp: 0.0,
        })
    }

    pub fn residual(&self, i: usize, w: &[f64]) -> f64 {
        self.y[i] - self.x[i].iter().zip(w).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// Out-of-sample absolute loss `Σ_{i∈O} |y_i - x_i·w|`.
pub fn upper_loss(inst: &SvrInstance, w: &[f64]) -> Result<f64, SvrError> {
    if w.len() != inst.features {
        return Err(SvrError::DimensionMismatch {
            expected: inst.features,
            got: w.len(),
        });
    }
    Ok(inst
        .out_idx
        .iter()
        .map(|&i| inst.residual(i, w).abs())
        .sum())
}

/// Bilevel model of an instance with handles to its variables.
#[derive(Debug, Clone)]
pub struct SvrModel {
    pub model: BilevelModel,
    pub c: VarId,
    pub eps: VarId,
    pub xi_u: Vec<VarId>,
    pub w: Vec<VarId>,
    pub xi_l: Vec<VarId>,
}

fn fit_expr(inst: &SvrInstance, i: usize, w: &[VarId]) -> AffineExpr {
    AffineExpr::from_terms(w.iter().zip(&inst.x[i]).map(|(v, a)| (*v, *a)), 0.0)
}

pub fn build_bilevel(inst: &SvrInstance) -> SvrModel {
    let inf = f64::INFINITY;
    let mut m = BilevelModel::new();
    let add = |m: &mut BilevelModel, level, lb, name: String| {
        m.add_variable(level, lb, inf, &name)
            .expect("generated names are unique and bounds ordered")
    };
    let c = add(&mut m, Level::Upper, 0.0, "C".into());
    let eps = add(&mut m, Level::Upper, 0.0, "eps".into());
    let xi_u: Vec<VarId> = inst
        .out_idx
        .iter()
        .map(|i| add(&mut m, Level::Upper, 0.0, format!("xi_U_{}", i + 1)))
        .collect();
    let w: Vec<VarId> = (0..inst.features)
        .map(|j| add(&mut m, Level::Lower, -inf, format!("w_{}", j + 1)))
        .collect();
    let xi_l: Vec<VarId> = inst
        .in_idx
        .iter()
        .map(|i| add(&mut m, Level::Lower, 0.0, format!("xi_L_{}", i + 1)))
        .collect();

    let upper_obj = AffineExpr::from_terms(xi_u.iter().map(|v| (*v, 1.0)), 0.0);
    m.set_objective(Level::Upper, ObjSense::Min, upper_obj);

    let con = |m: &mut BilevelModel, name: String, level, body: AffineExpr, rhs: f64| {
        m.add_named_constraint(&name, level, body, Sense::Ge, rhs)
            .expect("generated constraints reference existing variables");
    };
    // ξU_i >= +y_i - Σ w x  and  ξU_i >= -y_i + Σ w x
    for (k, &i) in inst.out_idx.iter().enumerate() {
        let body = AffineExpr::var(xi_u[k]) + fit_expr(inst, i, &w);
        con(
            &mut m,
            format!("up_pos_{}", i + 1),
            Level::Upper,
            body,
            inst.y[i],
        );
    }
    for (k, &i) in inst.out_idx.iter().enumerate() {
        let body = AffineExpr::var(xi_u[k]) - fit_expr(inst, i, &w);
        con(
            &mut m,
            format!("up_neg_{}", i + 1),
            Level::Upper,
            body,
            -inst.y[i],
        );
    }

    let mut lower_obj = QuadExpr::new();
    for &v in &w {
        lower_obj.add_quad_term(v, v, 1.0);
    }
    for &v in &xi_l {
        lower_obj.add_quad_term(c, v, 1.0);
    }
    m.set_objective(Level::Lower, ObjSense::Min, lower_obj);
    // ξL_i + ε >= +y_i - Σ w x  and  ξL_i + ε >= -y_i + Σ w x
    for (k, &i) in inst.in_idx.iter().enumerate() {
        let body = AffineExpr::var(xi_l[k]) + AffineExpr::var(eps) + fit_expr(inst, i, &w);
        con(
            &mut m,
            format!("lo_pos_{}", i + 1),
            Level::Lower,
            body,
            inst.y[i],
        );
    }
    for (k, &i) in inst.in_idx.iter().enumerate() {
        let body = AffineExpr::var(xi_l[k]) + AffineExpr::var(eps) - fit_expr(inst, i, &w);
        con(
            &mut m,
            format!("lo_neg_{}", i + 1),
            Level::Lower,
            body,
            -inst.y[i],
        );
    }

    SvrModel {
        model: m,
        c,
        eps,
        xi_u,
        w,
        xi_l,
    }
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct InstanceMeta {
    pub samples: usize,
    pub features: usize,
    pub seed: u64,
    pub noise_amp: f64,
    pub generator: String,
    pub columns: Vec<String>,
}

pub fn csv_header(features: usize) -> Vec<String> {
    (1..=features)
        .map(|j| format!("x{j}"))
        .chain(["y".to_string(), "split".to_string()])
        .collect()
}

/// CSV with columns `x1..xF, y, split` (`split` is `in` or `out`); floats use
/// Rust's shortest round-trip formatting.
pub fn instance_to_csv(inst: &SvrInstance) -> String {
    let mut out = csv_header(inst.features).join(",");
    out.push('\n');
    for i in 0..inst.samples {
        let mut cells: Vec<String> = inst.x[i].iter().map(|v| v.to_string()).collect();
        cells.push(inst.y[i].to_string());
        cells.push(
            if inst.in_idx.contains(&i) {
                "in"
            } else {
                "out"
            }
            .to_string(),
        );
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn instance_meta(inst: &SvrInstance) -> InstanceMeta {
    InstanceMeta {
        samples: inst.samples,
        features: inst.features,
        seed: inst.seed,
        noise_amp: inst.noise_amp,
        generator: GENERATOR_TAG.to_string(),
        columns: csv_header(inst.features),
    }
}

pub fn instance_from_csv(text: &str, meta: Option<&InstanceMeta>) -> Result<SvrInstance, SvrError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| SvrError::Format("empty file".into()))?
        .split(',')
        .collect();
    if header.len() < 3 || header[header.len() - 2] != "y" || header[header.len() - 1] != "split" {
        return Err(SvrError::Format("header must end with y,split".into()));
    }
    let features = header.len() - 2;
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut in_idx = Vec::new();
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != features + 2 {
            return Err(SvrError::Format(format!(
                "row {} has {} cells",
                i + 1,
                cells.len()
            )));
        }
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| SvrError::Format(format!("bad number `{s}`")))
        };
        x.push(
            cells[..features]
                .iter()
                .map(|s| parse(s))
                .collect::<Result<Vec<_>, _>>()?,
        );
        y.push(parse(cells[features])?);
        match cells[features + 1].trim() {
            "in" => in_idx.push(i),
            "out" => {}
            other => return Err(SvrError::Format(format!("bad split `{other}`"))),
        }
    }
    let mut inst = SvrInstance::from_data(x, y, in_idx)?;
    if let Some(meta) = meta {
        inst.seed = meta.seed;
        inst.noise_amp = meta.noise_amp;
    }
    Ok(inst)
}

/// Writes `<stem>.csv` and the `<stem>.json` sidecar.
pub fn write_instance(inst: &SvrInstance, csv_path: &Path) -> Result<(), SvrError> {
    fs::write(csv_path, instance_to_csv(inst))?;
    let meta = serde_json::to_string_pretty(&instance_meta(inst))?;
    fs::write(csv_path.with_extension("json"), meta + "\n")?;
    Ok(())
}

pub fn read_instance(csv_path: &Path) -> Result<SvrInstance, SvrError> {
    let text = fs::read_to_string(csv_path)?;
    let sidecar = csv_path.with_extension("json");
    let meta: Option<InstanceMeta> = if sidecar.exists() {
        Some(serde_json::from_str(&fs::read_to_string(sidecar)?)?)
    } else {
        None
    };
    instance_from_csv(&text, meta.as_ref())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_instance_respects_construction() {
        let inst = generate_instance(10, 2, 42, 0.1).unwrap();
        assert_eq!(inst.in_idx.len(), 5);
        assert_eq!(inst.out_idx.len(), 5);
        for i in 0..10 {
            assert!(inst.x[i].iter().all(|v| v.abs() <= 1.0));
            assert!((inst.y[i] - inst.x[i].iter().sum::<f64>()).abs() <= 0.1);
        }
        assert_eq!(inst, generate_instance(10, 2, 42, 0.1).unwrap());
        assert_ne!(inst, generate_instance(10, 2, 43, 0.1).unwrap());
    }

    #[test]
    fn zero_noise_single_feature() {
        let inst = generate_instance(6, 1, 7, 0.0).unwrap();
        for i in 0..6 {
            assert_eq!(inst.y[i], inst.x[i][0]);
        }
    }

    #[test]
    fn odd_sample_count_puts_extra_row_in_sample() {
        let inst = generate_instance(7, 1, 1, 0.1).unwrap();
        assert_eq!(inst.in_idx, vec![0, 1, 2, 3]);
        assert_eq!(inst.out_idx, vec![4, 5, 6]);
    }

    #[test]
    fn invalid_sizes() {
        assert!(matches!(
            generate_instance(1, 1, 0, 0.1),
            Err(SvrError::InvalidSize { .. })
        ));
        assert!(matches!(
            generate_instance(4, 0, 0, 0.1),
            Err(SvrError::InvalidSize { .. })
        ));
    }

    #[test]
    fn golden_seed_42() {
        let inst = generate_instance(4, 2, 42, 0.1).unwrap();
        let flat: Vec<f64> = inst
            .x
            .iter()
            .flatten()
            .copied()
            .chain(inst.y.iter().copied())
            .collect();
        let golden = GOLDEN_4_2_42;
        assert_eq!(flat.len(), golden.len());
        for (a, b) in flat.iter().zip(golden.iter()) {
            assert_eq!(a.to_bits(), b.to_bits(), "{a} vs {b}");
        }
    }

    // x row-major (4x2) then y, for generate_instance(4, 2, 42, 0.1)
    const GOLDEN_4_2_42: [f64; 12] = [
        0.36379238461334285,
        0.900550815344968,
        -0.1449671942869606,
        0.25472104239468063,
        -0.42281224171763476,
        -0.7000822594193501,
        -0.3839188808041807,
        0.6077455343512537,
        1.3185929561188823,
        0.0574709009839879,
        -1.1215211270689711,
        0.30418728795682776,
    ];

    #[test]
    fn names_round_trip() {
        let n = InstanceName {
            samples: 100,
            features: 2,
        };
        assert_eq!(n.to_string(), "100/02");
        assert_eq!("100/02".parse::<InstanceName>().unwrap(), n);
        assert_eq!(
            "1000/5".parse::<InstanceName>().unwrap().to_string(),
            "1000/05"
        );
        assert!("abc".parse::<InstanceName>().is_err());
    }

    #[test]
    fn model_counts_10_02() {
        let inst = generate_instance(10, 2, 42, 0.1).unwrap();
        let sm = build_bilevel(&inst);
        let m = &sm.model;
        assert_eq!(m.vars_at(Level::Upper).count(), 7);
        assert_eq!(m.vars_at(Level::Lower).count(), 7);
        assert_eq!(m.constraints_at(Level::Upper).count(), 10);
        assert_eq!(m.constraints_at(Level::Lower).count(), 10);
        let lower = &m.lower_objective().expr;
        let squares = lower.quad_terms().filter(|(a, b, _)| a == b).count();
        let bilinear = lower.quad_terms().filter(|(a, b, _)| a != b).count();
        assert_eq!((squares, bilinear), (2, 5));
        assert!(m.validate().is_empty());
    }

    #[test]
    fn upper_loss_examples() {
        let inst =
            SvrInstance::from_data(vec![vec![1.0], vec![1.0]], vec![1.0, 1.0], vec![0]).unwrap();
        assert!((upper_loss(&inst, &[0.6]).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(upper_loss(&inst, &[1.0]).unwrap(), 0.0);
        assert_eq!(upper_loss(&inst, &[0.0]).unwrap(), 1.0);
        assert!(matches!(
            upper_loss(&inst, &[1.0, 2.0]),
            Err(SvrError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn csv_round_trip() {
        let inst = generate_instance(7, 3, 9, 0.1).unwrap();
        let text = instance_to_csv(&inst);
        assert!(text.starts_with("x1,x2,x3,y,split\n"));
        let back = instance_from_csv(&text, Some(&instance_meta(&inst))).unwrap();
        assert_eq!(back, inst);
    }
}
