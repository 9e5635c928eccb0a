use super::{BenchRecord, OutputFormat};

const CAPTION: &str = "Time in seconds (s), Gap in percent (%)";
const BLANK: &str = "-";

/// Two decimals, `-` when missing.
pub fn format_obj(obj: Option<f64>) -> String {
    match obj {
        Some(v) if v.is_finite() => fix_negative_zero(format!("{v:.2}")),
        _ => BLANK.to_string(),
    }
}

/// Integer percent, `-` when no bound was available.
pub fn format_gap(gap: Option<f64>) -> String {
    match gap {
        Some(v) if v.is_finite() => fix_negative_zero(format!("{v:.0}")),
        _ => BLANK.to_string(),
    }
}

/// Integer seconds, `-` when missing or at the limit.
pub fn format_time(time: Option<f64>, limit: f64) -> String {
    match time {
        Some(t) if t < limit => format!("{t:.0}"),
        _ => BLANK.to_string(),
    }
}

fn fix_negative_zero(s: String) -> String {
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn cells(r: &BenchRecord) -> [String; 3] {
    [
        format_obj(r.obj),
        format_gap(r.gap_pct),
        format_time(r.time_s, r.meta.time_limit_s),
    ]
}

pub fn render_table(records: &[BenchRecord], format: OutputFormat) -> String {
    match format {
        OutputFormat::Markdown => render_markdown(records),
        OutputFormat::Csv => write_csv(records),
    }
}

/// First-seen order of rows `(instance, seed)` and of mode columns.
fn layout(records: &[BenchRecord]) -> (Vec<(String, u64)>, Vec<String>) {
    let mut rows: Vec<(String, u64)> = Vec::new();
    let mut modes: Vec<String> = Vec::new();
    for r in records {
        let key = (r.instance.to_string(), r.seed);
        if !rows.contains(&key) {
            rows.push(key);
        }
        if !modes.contains(&r.mode) {
            modes.push(r.mode.clone());
        }
    }
    (rows, modes)
}

fn render_markdown(records: &[BenchRecord]) -> String {
    let (rows, modes) = layout(records);
    let lookup = |label: &str, seed: u64, mode: &str| {
        records
            .iter()
            .find(|r| r.instance.to_string() == label && r.seed == seed && r.mode == mode)
    };

    // the same size with several seeds gets the seed in its label
    let label = |name: &str, seed: u64| {
        if rows.iter().filter(|(n, _)| n == name).count() > 1 {
            format!("{name} s{seed}")
        } else {
            name.to_string()
        }
    };

    let mut grid: Vec<Vec<String>> = Vec::new();
    let mut group = vec![String::new()];
    let mut heads = vec!["Inst".to_string()];
    for m in &modes {
        group.extend([m.clone(), String::new(), String::new()]);
        heads.extend(["Obj", "Gap", "Time"].map(String::from));
    }
    grid.push(group);
    grid.push(heads);
    for (name, seed) in &rows {
        let mut line = vec![label(name, *seed)];
        for m in &modes {
            match lookup(name, *seed, m) {
                Some(r) => line.extend(cells(r)),
                None => line.extend([BLANK, BLANK, BLANK].map(String::from)),
            }
        }
        grid.push(line);
    }

    let ncol = grid[0].len();
    let width: Vec<usize> = (0..ncol)
        .map(|c| {
            grid.iter()
                .map(|l| l[c].chars().count())
                .max()
                .unwrap_or(0)
                .max(3)
        })
        .collect();
    let fmt_line = |l: &[String]| {
        let cells: Vec<String> = l
            .iter()
            .zip(&width)
            .map(|(s, w)| format!("{s:<w$}"))
            .collect();
        format!("| {} |\n", cells.join(" | "))
    };

    let mut out = format!("{CAPTION}\n\n");
    out.push_str(&fmt_line(&grid[0]));
    let rule: Vec<String> = width.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&format!("|-{}-|\n", rule.join("-|-")));
    for l in &grid[1..] {
        out.push_str(&fmt_line(l));
    }

    let notes: Vec<String> = records
        .iter()
        .filter(|r| !matches!(r.status.as_str(), "Optimal" | "Exported") || !r.warnings.is_empty())
        .map(|r| {
            let mut s = format!(
                "- {} {}: {}",
                label(&r.instance.to_string(), r.seed),
                r.mode,
                r.status
            );
            for w in &r.warnings {
                s.push_str(&format!("; {w}"));
            }
            if r.is_error() && !r.message.is_empty() {
                s.push_str(&format!("; {}", r.message));
            }
            s
        })
        .collect();
    if !notes.is_empty() {
        out.push('\n');
        for n in notes {
            out.push_str(&n);
            out.push('\n');
        }
    }
    out
}

fn full(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

/// One row per record. Wall time appears only as the rounded `time` cell so
/// repeated runs give the same bytes.
pub fn write_csv(records: &[BenchRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = [
        "instance",
        "seed",
        "mode",
        "backend",
        "status",
        "obj",
        "gap",
        "time",
        "obj_full",
        "bound_full",
        "gap_full",
        "nodes",
        "warnings",
        "gap_formula",
        "big_m_primal",
        "big_m_dual",
        "tau",
        "bits",
        "var_lb",
        "var_ub",
        "time_limit",
        "noise",
        "files",
        "message",
    ];
    w.write_record(header).expect("writing to memory");
    for r in records {
        let [obj, gap, time] = cells(r);
        let m = &r.meta;
        let files: Vec<String> = r.files.iter().map(|p| p.display().to_string()).collect();
        w.write_record([
            r.instance.to_string(),
            r.seed.to_string(),
            r.mode.clone(),
            r.backend.as_str().to_string(),
            r.status.clone(),
            obj,
            gap,
            time,
            full(r.obj),
            full(r.bound),
            full(r.gap_pct),
            r.nodes.to_string(),
            r.warnings.join(";"),
            m.gap_formula.to_string(),
            full(m.big_m.map(|b| b.0)),
            full(m.big_m.map(|b| b.1)),
            full(m.tau),
            m.bits.map(|b| b.to_string()).unwrap_or_default(),
            full(m.expansion_range.map(|b| b.0)),
            full(m.expansion_range.map(|b| b.1)),
            format!("{:?}", m.time_limit_s),
            format!("{:?}", m.noise_amp),
            files.join(";"),
            r.message.clone(),
        ])
        .expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 fields")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{Backend, SolverMeta};
    use crate::svr::InstanceName;

    fn rec(mode: &str, obj: Option<f64>, gap: Option<f64>, time: Option<f64>) -> BenchRecord {
        BenchRecord {
            instance: InstanceName {
                samples: 10,
                features: 1,
            },
            seed: 42,
            mode: mode.into(),
            backend: Backend::Internal,
            status: "Optimal".into(),
            obj,
            bound: obj,
            gap_pct: gap,
            time_s: time,
            elapsed_s: time.unwrap_or(600.0),
            nodes: 1,
            warnings: Vec::new(),
            files: Vec::new(),
            message: String::new(),
            meta: SolverMeta {
                gap_formula: "g",
                big_m: None,
                tau: None,
                bits: None,
                expansion_range: None,
                time_limit_s: 600.0,
                noise_amp: 0.1,
            },
        }
    }

    #[test]
    fn row_layout() {
        let t = render_markdown(&[rec("sos1", Some(0.3), Some(0.0), Some(0.01))]);
        assert!(t.starts_with(CAPTION));
        assert!(t.contains("| 10/01 | 0.30 | 0   | 0    |"), "{t}");
        assert!(t.contains("| Inst  | Obj  | Gap | Time |"), "{t}");
    }

    #[test]
    fn blanks() {
        assert_eq!(format_gap(None), "-");
        assert_eq!(format_time(Some(600.0), 600.0), "-");
        assert_eq!(format_time(None, 600.0), "-");
        assert_eq!(format_obj(Some(-0.001)), "0.00");
        assert_eq!(format_gap(Some(12.6)), "13");
        let t = render_markdown(&[rec("bigm", Some(1.0), None, Some(3.0))]);
        assert!(t.contains("| 1.00 | -   | 3    |"), "{t}");
    }

    #[test]
    fn csv_has_header_and_cells() {
        let text = write_csv(&[rec("sos1", Some(0.25), Some(0.0), Some(0.2))]);
        let mut lines = text.lines();
        assert!(lines
            .next()
            .unwrap()
            .starts_with("instance,seed,mode,backend,status,obj,gap,time,"));
        assert!(lines
            .next()
            .unwrap()
            .starts_with("10/01,42,sos1,internal,Optimal,0.25,0,0,0.25,"));
    }
}
