//! Aggregation over finished run directories.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use walkdir::WalkDir;

use crate::error::{CliError, CliResult};
use crate::pipeline::{best_record, write_csv, ParetoRecord, MANIFEST_FILE, PARETO_FILE, SEPARABILITY_FILE};

/// One run joined with the best record of its archive.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRow {
    pub run: String,
    pub n_qubits: usize,
    pub si: f64,
    pub hmi: f64,
    pub dsi: f64,
    pub accuracy: f64,
    pub local_gates: usize,
    pub cnot_gates: usize,
}

#[derive(Deserialize)]
struct ManifestView {
    n_qubits: usize,
}

#[derive(Deserialize)]
struct SeparabilityView {
    si: f64,
    hmi: f64,
    dsi: f64,
}

/// Spearman rank correlation with average ranks for ties. `None` when fewer
/// than two points or either input is constant.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let (ra, rb) = (average_ranks(a), average_ranks(b));
    let n = ra.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma).powi(2);
        vb += (y - mb).powi(2);
    }
    if va == 0.0 || vb == 0.0 {
        return None;
    }
    Some((cov / (va * vb).sqrt()).clamp(-1.0, 1.0))
}

fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut ranks = vec![0.0; v.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && v[order[end]] == v[order[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

fn read_run(dir: &Path, root: &Path) -> Result<RunRow, String> {
    let read = |name: &str| {
        fs::read(dir.join(name)).map_err(|e| format!("{}: {e}", dir.join(name).display()))
    };
    let records: Vec<ParetoRecord> =
        serde_json::from_slice(&read(PARETO_FILE)?).map_err(|e| format!("{PARETO_FILE}: {e}"))?;
    let best = best_record(&records).ok_or_else(|| format!("{PARETO_FILE} has no records"))?;
    let manifest: ManifestView =
        serde_json::from_slice(&read(MANIFEST_FILE)?).map_err(|e| format!("{MANIFEST_FILE}: {e}"))?;
    let sep_bytes = read(SEPARABILITY_FILE)?;
    let mut reader = csv::Reader::from_reader(sep_bytes.as_slice());
    let sep: SeparabilityView = reader
        .deserialize()
        .next()
        .ok_or_else(|| format!("{SEPARABILITY_FILE} has no data row"))?
        .map_err(|e| format!("{SEPARABILITY_FILE}: {e}"))?;
    let run = dir.strip_prefix(root).unwrap_or(dir).display().to_string();
    Ok(RunRow {
        run: if run.is_empty() { ".".into() } else { run },
        n_qubits: manifest.n_qubits,
        si: sep.si,
        hmi: sep.hmi,
        dsi: sep.dsi,
        accuracy: best.accuracy,
        local_gates: best.local_gates,
        cnot_gates: best.cnot_gates,
    })
}

/// Finds every directory under `root` holding a pareto archive and reads it.
/// Unreadable runs are returned separately with the reason.
pub fn collect_runs(root: &Path) -> CliResult<(Vec<RunRow>, Vec<(PathBuf, String)>)> {
    if !root.is_dir() {
        return Err(CliError::Data(format!("{} is not a directory", root.display())));
    }
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    let mut dirs: Vec<PathBuf> = WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().is_dir())
        .map(|e| e.into_path())
        .filter(|d| [PARETO_FILE, MANIFEST_FILE, SEPARABILITY_FILE].iter().any(|f| d.join(f).exists()))
        .collect();
    dirs.sort();
    for dir in dirs {
        match read_run(&dir, root) {
            Ok(r) => rows.push(r),
            Err(reason) => skipped.push((dir, reason)),
        }
    }
    Ok((rows, skipped))
}

pub struct Correlations {
    pub si: Option<f64>,
    pub hmi: Option<f64>,
    pub dsi: Option<f64>,
}

pub fn correlations(rows: &[RunRow]) -> Correlations {
    let cnot: Vec<f64> = rows.iter().map(|r| r.cnot_gates as f64).collect();
    let col = |f: fn(&RunRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    Correlations {
        si: spearman(&col(|r| r.si), &cnot),
        hmi: spearman(&col(|r| r.hmi), &cnot),
        dsi: spearman(&col(|r| r.dsi), &cnot),
    }
}

fn fmt_corr(c: Option<f64>) -> String {
    c.map_or_else(|| "n/a".to_string(), |v| v.to_string())
}

pub const RUNS_FILE: &str = "report_runs.csv";
pub const CORRELATION_FILE: &str = "report_correlation.csv";
pub const GATES_FILE: &str = "report_gates.csv";

/// Aggregates `root` and writes the three report files into `out`. Returns
/// the rows and the correlation summary.
pub fn report(root: &Path, out: &Path) -> CliResult<(Vec<RunRow>, Correlations)> {
    let (rows, skipped) = collect_runs(root)?;
    for (dir, reason) in &skipped {
        log::warn!("skipping {}: {reason}", dir.display());
    }
    if rows.is_empty() {
        return Err(CliError::Data(format!("no complete runs under {}", root.display())));
    }
    fs::create_dir_all(out).map_err(|e| CliError::write(out, e))?;

    write_csv(
        &out.join(RUNS_FILE),
        &["run", "n_qubits", "si", "hmi", "dsi", "accuracy", "local_gates", "cnot_gates"],
        rows.iter()
            .map(|r| {
                vec![
                    r.run.clone(),
                    r.n_qubits.to_string(),
                    r.si.to_string(),
                    r.hmi.to_string(),
                    r.dsi.to_string(),
                    r.accuracy.to_string(),
                    r.local_gates.to_string(),
                    r.cnot_gates.to_string(),
                ]
            })
            .collect(),
    )?;

    let corr = correlations(&rows);
    write_csv(
        &out.join(CORRELATION_FILE),
        &["index", "spearman_vs_cnot", "n_runs"],
        [("si", corr.si), ("hmi", corr.hmi), ("dsi", corr.dsi)]
            .iter()
            .map(|(name, c)| vec![name.to_string(), fmt_corr(*c), rows.len().to_string()])
            .collect(),
    )?;

    let mut by_qubits: BTreeMap<usize, Vec<&RunRow>> = BTreeMap::new();
    for r in &rows {
        by_qubits.entry(r.n_qubits).or_default().push(r);
    }
    write_csv(
        &out.join(GATES_FILE),
        &["n_qubits", "runs", "mean_accuracy", "mean_local_gates", "mean_cnot_gates"],
        by_qubits
            .iter()
            .map(|(q, rs)| {
                let n = rs.len() as f64;
                let mean = |f: fn(&RunRow) -> f64| rs.iter().map(|r| f(r)).sum::<f64>() / n;
                vec![
                    q.to_string(),
                    rs.len().to_string(),
                    mean(|r| r.accuracy).to_string(),
                    mean(|r| r.local_gates as f64).to_string(),
                    mean(|r| r.cnot_gates as f64).to_string(),
                ]
            })
            .collect(),
    )?;
    Ok((rows, corr))
}

pub fn summary(corr: &Correlations, n_runs: usize) -> String {
    format!(
        "runs: {n_runs}\nspearman(si, cnot): {}\nspearman(hmi, cnot): {}\nspearman(dsi, cnot): {}",
        fmt_corr(corr.si),
        fmt_corr(corr.hmi),
        fmt_corr(corr.dsi)
    )
}
