//! Artifact writers. Every CSV starts with `#`-prefixed metadata lines that
//! echo the resolved configuration, so a file on its own identifies the run
//! that produced it. Floats are written in Rust's shortest round-trip form,
//! which keeps outputs byte-stable across repeated runs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::front::{EnvelopeReport, FrontTrace, FrontVerdict};
use crate::solver::Trajectory;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// RFC-4180 field quoting; applied only when the field needs it.
fn csv_field(raw: &str) -> String {
    if raw.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw.to_string()
    }
}

pub fn write_csv(
    path: &Path,
    meta: &[(String, String)],
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<()> {
    let mut text = String::new();
    for (k, v) in meta {
        let _ = writeln!(text, "# {k} = {v}");
    }
    let _ = writeln!(
        text,
        "{}",
        header.iter().map(|h| csv_field(h)).collect::<Vec<_>>().join(",")
    );
    for row in rows {
        let _ = writeln!(
            text,
            "{}",
            row.iter().map(|f| csv_field(f)).collect::<Vec<_>>().join(",")
        );
    }
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err(path))?;
    }
    std::fs::write(path, text).map_err(io_err(path))
}

pub fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Full resolved-config echo plus any run-specific extras.
pub fn config_meta(cfg: &RunConfig, extra: &[(String, String)]) -> Vec<(String, String)> {
    let mut meta: Vec<(String, String)> = vec![
        ("n".into(), cfg.p.n.to_string()),
        ("r_domain".into(), fmt(cfg.p.r_domain)),
        ("m".into(), fmt(cfg.p.m)),
        ("total_mass".into(), fmt(cfg.md.total_mass)),
        ("mu".into(), fmt(cfg.md.mu)),
        ("r_plateau".into(), fmt(cfg.r_plateau)),
        ("r0".into(), fmt(cfg.r0)),
        ("r1".into(), fmt(cfg.r1)),
        ("alpha".into(), fmt(cfg.alpha)),
        ("plateau".into(), fmt(cfg.plateau)),
        ("a_coef".into(), fmt(cfg.a_coef)),
        ("a_ratio".into(), fmt(cfg.a_ratio)),
        ("a_crit".into(), fmt(cfg.a_crit)),
        ("c_crit_r1".into(), fmt(cfg.c_crit_r1)),
        ("grid_cells".into(), cfg.grid_cells.to_string()),
        (
            "eps".into(),
            cfg.eps.iter().map(|e| fmt(*e)).collect::<Vec<_>>().join(" "),
        ),
        ("safety".into(), fmt(cfg.safety)),
        ("horizon".into(), fmt(cfg.horizon)),
        (
            "tau".into(),
            cfg.tau.iter().map(|t| fmt(*t)).collect::<Vec<_>>().join(" "),
        ),
        ("tau_verdict".into(), fmt(cfg.tau_verdict)),
        (
            "fit_window".into(),
            format!("{} {}", fmt(cfg.fit_window.0), fmt(cfg.fit_window.1)),
        ),
        ("min_cells".into(), fmt(cfg.min_cells)),
    ];
    if !cfg.sweep_ratios.is_empty() {
        meta.push((
            "sweep_ratios".into(),
            cfg.sweep_ratios
                .iter()
                .map(|r| fmt(*r))
                .collect::<Vec<_>>()
                .join(" "),
        ));
    }
    meta.extend(extra.iter().cloned());
    meta
}

/// Wide layout, one column per output time, for direct plotting.
pub fn write_snapshots(
    path: &Path,
    meta: &[(String, String)],
    traj: &Trajectory,
) -> Result<()> {
    let mut header: Vec<String> = vec!["s".into()];
    for (t, _) in &traj.snapshots {
        header.push(format!("t={}", fmt(*t)));
    }
    let header_refs: Vec<&str> = header.iter().map(|h| h.as_str()).collect();
    let n_nodes = traj
        .snapshots
        .first()
        .map(|(_, g)| g.s.len())
        .unwrap_or(0);
    let mut rows = Vec::with_capacity(n_nodes);
    for i in 0..n_nodes {
        let mut row = Vec::with_capacity(traj.snapshots.len() + 1);
        row.push(fmt(traj.snapshots[0].1.s[i]));
        for (_, g) in &traj.snapshots {
            row.push(fmt(g.values[i]));
        }
        rows.push(row);
    }
    write_csv(path, meta, &header_refs, &rows)
}

pub fn write_front_trace(
    path: &Path,
    meta: &[(String, String)],
    trace: &FrontTrace,
) -> Result<()> {
    let mut full = meta.to_vec();
    full.push(("trace_tau".into(), fmt(trace.tau)));
    full.push(("run_id".into(), trace.run_id.clone()));
    let rows: Vec<Vec<String>> = trace
        .entries
        .iter()
        .map(|e| vec![fmt(e.t), fmt(e.s_front), fmt(e.r_front)])
        .collect();
    write_csv(path, &full, &["t", "s_front", "r_front"], &rows)
}

/// One classified run, or its recorded failure.
#[derive(Clone, Debug)]
pub struct VerdictRow {
    pub run_id: String,
    pub a_ratio: f64,
    pub eps: f64,
    pub tau: f64,
    pub verdict: Option<FrontVerdict>,
    pub status: String,
}

impl VerdictRow {
    fn to_row(&self) -> Vec<String> {
        match &self.verdict {
            Some(v) => vec![
                self.run_id.clone(),
                fmt(self.a_ratio),
                fmt(self.eps),
                fmt(self.tau),
                v.classification.to_string(),
                fmt(v.zeta),
                fmt(v.slope),
                fmt(v.fit_residual),
                fmt(v.displacement_cells),
                fmt(v.monotone_until),
                self.status.clone(),
            ],
            None => vec![
                self.run_id.clone(),
                fmt(self.a_ratio),
                fmt(self.eps),
                fmt(self.tau),
                "error".into(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                self.status.clone(),
            ],
        }
    }
}

pub const VERDICT_HEADER: [&str; 11] = [
    "run_id",
    "a_ratio",
    "eps",
    "tau",
    "classification",
    "zeta",
    "slope",
    "fit_residual",
    "displacement_cells",
    "monotone_until",
    "status",
];

pub fn write_verdicts(
    path: &Path,
    meta: &[(String, String)],
    rows: &[VerdictRow],
) -> Result<()> {
    let table: Vec<Vec<String>> = rows.iter().map(|r| r.to_row()).collect();
    write_csv(path, meta, &VERDICT_HEADER, &table)
}

pub fn write_envelope_report(
    path: &Path,
    meta: &[(String, String)],
    reports: &[(String, EnvelopeReport)],
) -> Result<()> {
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|(label, r)| {
            vec![
                label.clone(),
                if r.pass { "pass" } else { "fail" }.into(),
                fmt(r.tol),
                fmt(r.max_slope),
                fmt(r.worst_violation),
                fmt(r.worst_s),
                fmt(r.worst_t),
                r.nodes_checked.to_string(),
                r.snapshots_checked.to_string(),
                fmt(r.ordered_until),
            ]
        })
        .collect();
    write_csv(
        path,
        meta,
        &[
            "envelope",
            "result",
            "tol",
            "max_slope",
            "worst_violation",
            "worst_s",
            "worst_t",
            "nodes_checked",
            "snapshots_checked",
            "ordered_until",
        ],
        &rows,
    )
}

/// Wall-clock sidecar; the only artifact allowed to differ between
/// identical runs.
pub fn write_run_meta(dir: &Path, command: &str, seed: u64, elapsed: std::time::Duration) -> Result<()> {
    let path = dir.join("run_meta.txt");
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let text = format!(
        "command = {command}\nseed = {seed}\nelapsed_ms = {}\nunix_time = {stamp}\n",
        elapsed.as_millis()
    );
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err(&path))?;
    }
    std::fs::write(&path, text).map_err(io_err(&path))
}

/// Gnuplot driver scripts referencing the emitted CSVs. Fails up front if
/// any referenced artifact is missing.
pub fn emit_plots(
    dir: &Path,
    snapshot_csvs: &[PathBuf],
    trace_csvs: &[PathBuf],
    verdict_csv: Option<&Path>,
) -> Result<PathBuf> {
    let mut missing: Vec<String> = Vec::new();
    let all: Vec<&Path> = snapshot_csvs
        .iter()
        .map(|p| p.as_path())
        .chain(trace_csvs.iter().map(|p| p.as_path()))
        .chain(verdict_csv)
        .collect();
    for p in &all {
        if !p.exists() {
            missing.push(p.display().to_string());
        }
    }
    if !missing.is_empty() {
        return Err(Error::domain(format!(
            "cannot emit plots, missing artifacts: {}",
            missing.join(", ")
        )));
    }
    let rel = |p: &Path| -> String {
        p.strip_prefix(dir)
            .map(|q| q.display().to_string())
            .unwrap_or_else(|_| p.display().to_string())
    };
    let mut script = String::new();
    script.push_str("set datafile separator \",\"\n");
    script.push_str("set datafile commentschars \"#\"\n");
    script.push_str("set key outside\n");
    script.push_str("set term pngcairo size 1200,800\n\n");
    for (i, p) in snapshot_csvs.iter().enumerate() {
        let _ = writeln!(script, "set output \"profiles_{i}.png\"");
        let _ = writeln!(script, "set xlabel \"s\"");
        let _ = writeln!(script, "set ylabel \"w\"");
        let _ = writeln!(
            script,
            "plot for [col=2:*] \"{}\" using 1:col with lines title columnheader(col)\n",
            rel(p)
        );
    }
    if !trace_csvs.is_empty() {
        script.push_str("set output \"front_trace.png\"\n");
        script.push_str("set xlabel \"t\"\n");
        script.push_str("set ylabel \"r_front\"\n");
        let plots: Vec<String> = trace_csvs
            .iter()
            .map(|p| format!("\"{}\" using 1:3 with linespoints title \"{}\"", rel(p), rel(p)))
            .collect();
        let _ = writeln!(script, "plot {}\n", plots.join(", \\\n     "));
    }
    if let Some(v) = verdict_csv {
        script.push_str("set output \"verdict_map.png\"\n");
        script.push_str("set xlabel \"a_ratio\"\n");
        script.push_str("set ylabel \"zeta\"\n");
        script.push_str("set logscale x\n");
        let _ = writeln!(
            script,
            "plot \"{}\" using 2:6 with points pt 7 title \"fitted speed\"\n",
            rel(v)
        );
    }
    let path = dir.join("plots.gp");
    std::fs::create_dir_all(dir).map_err(io_err(&path))?;
    std::fs::write(&path, script).map_err(io_err(&path))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quotes_only_what_rfc4180_requires() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
        assert_eq!(csv_field("line\nbreak"), "\"line\nbreak\"");
    }

    #[test]
    fn floats_round_trip_through_their_formatting() {
        for v in [0.1, 1.0 / 3.0, 6.594202898550725e-1, 1e-300, 12345.678] {
            let s = fmt(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn csv_output_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        let meta = vec![("k".to_string(), "v".to_string())];
        let rows = vec![vec!["1".to_string(), "a,b".to_string()]];
        write_csv(&path, &meta, &["num", "label"], &rows).unwrap();
        let first = std::fs::read(&path).unwrap();
        write_csv(&path, &meta, &["num", "label"], &rows).unwrap();
        let second = std::fs::read(&path).unwrap();
        assert_eq!(first, second);
        let text = String::from_utf8(first).unwrap();
        assert!(text.starts_with("# k = v\n"));
        assert!(text.contains("num,label"));
        assert!(text.contains("1,\"a,b\""));
    }

    #[test]
    fn plot_emission_requires_the_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("gone.csv");
        let err = emit_plots(dir.path(), &[missing.clone()], &[], None);
        match err {
            Err(e) => assert!(e.to_string().contains("gone.csv")),
            Ok(_) => panic!("expected missing-artifact error"),
        }
        let present = dir.path().join("trace.csv");
        write_csv(&present, &[], &["t", "s_front", "r_front"], &[]).unwrap();
        let script = emit_plots(dir.path(), &[], &[present.clone()], None).unwrap();
        let text = std::fs::read_to_string(script).unwrap();
        assert!(text.contains("trace.csv"));
        let again = emit_plots(dir.path(), &[], &[present], None).unwrap();
        let text2 = std::fs::read_to_string(again).unwrap();
        assert_eq!(text, text2);
    }
}
