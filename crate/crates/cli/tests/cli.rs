use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qfmevo_cli::pipeline::ParetoRecord;
use qfmevo_core::featuremap::Genome;
use qfmevo_core::nsga2::{dominates, Objectives};

fn qfmevo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qfmevo")).args(args).output().unwrap()
}

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
        .display()
        .to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn only_subdir(dir: &Path) -> PathBuf {
    let mut dirs: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_dir())
        .collect();
    assert_eq!(dirs.len(), 1, "{dirs:?}");
    dirs.pop().unwrap()
}

fn evolve_iris(out: &Path, extra: &[&str]) -> Output {
    let iris = data("iris.csv");
    let mut args = vec!["evolve", "--dataset", &iris[..], "--label-col", "species"];
    let out = out.display().to_string();
    args.extend(["--out", &out]);
    args.extend(extra);
    let o = qfmevo(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    o
}

#[test]
fn decode_listings() {
    let o = qfmevo(&["decode", "0000000", "--qubits", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("local gates: 2") && text.contains("cnot gates: 0"), "{text}");
    assert!(!text.contains("CNOT") && !text.contains("RZ"), "{text}");

    let o = qfmevo(&["decode", "1111001110"]);
    let text = stdout(&o);
    assert!(text.contains("local gates: 24") && text.contains("cnot gates: 12"), "{text}");
    assert!(text.contains("RZ") && text.contains("CNOT"), "{text}");
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(qfmevo(&["decode", "01x0000", "--qubits", "2"]).status.code(), Some(1));
    assert_eq!(qfmevo(&["decode", "000000", "--qubits", "2"]).status.code(), Some(1));
    assert_eq!(qfmevo(&[]).status.code(), Some(1));
    assert_eq!(qfmevo(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(qfmevo(&["--help"]).status.code(), Some(0));
    assert_eq!(qfmevo(&["evolve", "--label-col", "species"]).status.code(), Some(1));
    let o = qfmevo(&["evolve", "--dataset", &data("iris.csv"), "--label-col", "species", "--features", "0,9"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn data_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().display().to_string();
    let o = qfmevo(&["separability", "--dataset", "/nonexistent.csv", "--label-col", "y", "--out", &out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
    let o = qfmevo(&["separability", "--dataset", &data("iris.csv"), "--label-col", "colour", "--out", &out]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_config_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "[evolve]\npopulation_size = \"many\"\n").unwrap();
    let o = qfmevo(&["evolve", "--config", &cfg.display().to_string()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn evolve_writes_a_consistent_archive() {
    let tmp = tempfile::tempdir().unwrap();
    evolve_iris(
        tmp.path(),
        &["--qubits", "3", "--combos", "1", "--population", "32", "--generations", "30", "--seed", "7"],
    );
    let dir = only_subdir(tmp.path());
    for f in ["pareto.json", "history.csv", "manifest.json", "separability.csv"] {
        assert!(dir.join(f).exists(), "missing {f}");
    }
    let records: Vec<ParetoRecord> = serde_json::from_slice(&fs::read(dir.join("pareto.json")).unwrap()).unwrap();
    assert!(!records.is_empty());
    let objs: Vec<Objectives> = records
        .iter()
        .map(|r| Objectives { accuracy: r.accuracy, local_gates: r.local_gates, cnot_gates: r.cnot_gates })
        .collect();
    for r in &records {
        assert_eq!(r.rank, 1);
        let counts = Genome::parse(&r.genome, 3).unwrap().decode().gate_counts();
        assert_eq!((counts.local, counts.cnot), (r.local_gates, r.cnot_gates));
    }
    for a in &objs {
        assert!(objs.iter().all(|b| !dominates(a, b)));
    }
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["n_qubits"], 3);
    assert_eq!(manifest["evolve"]["population_size"], 32);
}

#[test]
fn zero_generations_gives_one_history_row() {
    let tmp = tempfile::tempdir().unwrap();
    evolve_iris(tmp.path(), &["--features", "0,1", "--generations", "0", "--population", "8"]);
    let history = fs::read_to_string(only_subdir(tmp.path()).join("history.csv")).unwrap();
    let lines: Vec<_> = history.lines().collect();
    assert_eq!(lines[0], "generation,best_accuracy,front_size,min_local,min_cnot");
    assert_eq!(lines.len(), 2);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--features", "1,2,3", "--population", "16", "--generations", "6", "--seed", "3", "--dump-kernels"];
    evolve_iris(a.path(), &args);
    evolve_iris(b.path(), &args);
    let (da, db) = (only_subdir(a.path()), only_subdir(b.path()));
    for f in ["pareto.json", "history.csv", "manifest.json", "separability.csv", "kernel_train.csv", "kernel_test.csv"] {
        assert_eq!(fs::read(da.join(f)).unwrap(), fs::read(db.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn classical_kernels_on_iris() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().display().to_string();
    let o = qfmevo(&["kernels", "--dataset", &data("iris.csv"), "--label-col", "species", "--no-quantum", "--out", &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(tmp.path().join("kernels.csv")).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[1][0], "mean");
    for v in rows[0].iter().skip(1).take(4) {
        let acc: f64 = v.parse().unwrap();
        assert!((0.0..=1.0).contains(&acc));
    }
}

#[test]
fn kernels_on_separated_blobs() {
    let tmp = tempfile::tempdir().unwrap();
    let csv_path = tmp.path().join("blobs.csv");
    let mut text = String::from("a,b,label\n");
    for i in 0..60 {
        let (cx, cy, l) = if i % 2 == 0 { (0.0, 0.0, "left") } else { (10.0, 10.0, "right") };
        let jitter = (i as f64 * 0.37).sin() * 0.5;
        text.push_str(&format!("{},{},{l}\n", cx + jitter, cy - jitter));
    }
    fs::write(&csv_path, text).unwrap();
    let out = tmp.path().join("out");
    let o = qfmevo(&[
        "kernels", "--dataset", &csv_path.display().to_string(), "--label-col", "label",
        "--n-train", "40", "--n-test", "20", "--population", "8", "--generations", "3",
        "--out", &out.display().to_string(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("kernels.csv")).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().unwrap().clone();
    let row = reader.records().next().unwrap().unwrap();
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    assert_eq!(&row[col("linear")], "1");
    assert_eq!(&row[col("rbf")], "1");
    // the quantum run also leaves a run directory behind
    assert!(out.join("combo_000_f0-1").join("pareto.json").exists());
}

#[test]
fn separability_table() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().display().to_string();
    let o = qfmevo(&[
        "separability", "--dataset", &data("iris.csv"), "--label-col", "species",
        "--qubits", "2", "--combos", "3", "--out", &out,
    ]);
    assert!(o.status.success());
    let text = fs::read_to_string(tmp.path().join("separability.csv")).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "dataset,features,n_instances,si,hmi,dsi");
    assert_eq!(lines.len(), 5);
    assert!(lines[4].starts_with("iris,mean,150,"));

    let o = qfmevo(&["separability", "--dataset", &data("iris.csv"), "--label-col", "species", "--out", &out]);
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[1], "0-1-2-3");
    let si: f64 = row[3].parse().unwrap();
    assert!((si - 0.95).abs() <= 0.02);
}

#[test]
fn report_over_evolve_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let runs = tmp.path().join("runs");
    evolve_iris(&runs, &["--qubits", "2", "--combos", "3", "--population", "8", "--generations", "2"]);
    fs::create_dir_all(runs.join("broken")).unwrap();
    fs::write(runs.join("broken").join("pareto.json"), "not json").unwrap();
    let o = qfmevo(&["report", &runs.display().to_string()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("broken"));
    assert!(stdout(&o).contains("runs: 3"));
    let agg = fs::read_to_string(runs.join("report_runs.csv")).unwrap();
    assert_eq!(agg.lines().count(), 4);
    let gates = fs::read_to_string(runs.join("report_gates.csv")).unwrap();
    assert!(gates.lines().nth(1).unwrap().starts_with("2,3,"));
}

#[test]
fn report_degenerate_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(qfmevo(&["report", &tmp.path().display().to_string()]).status.code(), Some(2));

    let runs = tmp.path().join("same");
    for seed in ["a", "b"] {
        evolve_iris(
            &runs.join(seed),
            &["--features", "0,1", "--population", "8", "--generations", "1", "--seed", "4"],
        );
    }
    let o = qfmevo(&["report", &runs.display().to_string()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("spearman(dsi, cnot): n/a"), "{}", stdout(&o));
}

#[test]
fn shipped_configs_parse() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["iris.toml", "breast_cancer.toml"] {
        let file = qfmevo_cli::config::FileConfig::load(&root.join(name)).unwrap();
        qfmevo_cli::config::RunConfig::resolve(file, Default::default()).unwrap();
    }
}
