//! Command-line runner for evolved quantum feature-map kernels.
//!
//! Subcommands: `evolve`, `kernels`, `separability`, `decode`, `report`.
//! Exit codes: 0 success, 1 usage, 2 data error, 3 runtime error.

pub mod config;
pub mod error;
pub mod pipeline;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qfmevo_core::featuremap::{genome_length, Genome};
use qfmevo_core::kernel::ClassicalKernel;
use qfmevo_core::separability::HmiMode;
use rayon::prelude::*;

use crate::config::{FileConfig, Overrides, RunConfig};
use crate::error::{CliError, CliResult};
use crate::pipeline::{
    classical_accuracy, combo_data, dataset_name, dump_kernels, feature_tag, prepare, run_combo, run_dir,
    separability, separability_row, write_csv, write_run, SEPARABILITY_HEADER,
};

#[derive(Debug, Parser)]
#[command(name = "qfmevo", version, about = "Evolve quantum feature maps for kernel SVMs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve feature maps for each feature combination.
    Evolve(EvolveArgs),
    /// Compare classical kernels with the best evolved quantum kernel.
    Kernels(KernelsArgs),
    /// Compute SI, HMI and DSI for each feature combination.
    Separability(SeparabilityArgs),
    /// Print the circuit encoded by a genome.
    Decode(DecodeArgs),
    /// Aggregate run directories and correlate separability with CNOT use.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Label column name or zero-based index.
    #[arg(long = "label-col")]
    pub label_col: Option<String>,
    /// Collapse the labels to this class versus the rest.
    #[arg(long = "positive-class")]
    pub positive_class: Option<String>,
    /// Features per sampled combination (one qubit per feature).
    #[arg(long)]
    pub qubits: Option<usize>,
    /// Explicit feature indices, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "combos")]
    pub features: Option<Vec<usize>>,
    /// Number of sampled feature combinations.
    #[arg(long)]
    pub combos: Option<usize>,
    /// Seed for splitting, combination sampling and evolution.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub population: Option<usize>,
    #[arg(long)]
    pub generations: Option<usize>,
    #[arg(long = "n-train")]
    pub n_train: Option<usize>,
    #[arg(long = "n-test")]
    pub n_test: Option<usize>,
}

impl RunArgs {
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let file = match &self.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        RunConfig::resolve(
            file,
            Overrides {
                dataset: self.dataset.clone(),
                label: self.label_col.clone(),
                positive_class: self.positive_class.clone(),
                qubits: self.qubits,
                features: self.features.clone(),
                combos: self.combos,
                seed: self.seed,
                out: self.out.clone(),
                population: self.population,
                generations: self.generations,
                n_train: self.n_train,
                n_test: self.n_test,
            },
        )
    }
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Also write the best record's train and test kernel matrices.
    #[arg(long = "dump-kernels")]
    pub dump_kernels: bool,
}

#[derive(Debug, Args)]
pub struct KernelsArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Skip the evolved quantum kernel.
    #[arg(long = "no-quantum")]
    pub no_quantum: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum HmiArg {
    Sum,
    Mean,
}

#[derive(Debug, Args)]
pub struct SeparabilityArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long = "hmi-mode", value_enum, default_value = "sum")]
    pub hmi_mode: HmiArg,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    /// Bit string of 0 and 1 characters.
    pub genome: String,
    /// Qubit count; inferred from the genome length when omitted.
    #[arg(long)]
    pub qubits: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory holding run subdirectories.
    pub runs: PathBuf,
    /// Where to write the report files; defaults to the runs directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    match execute(cli.command, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command, writing human-facing output to `out`.
pub fn execute(command: Command, out: &mut dyn Write) -> CliResult<()> {
    match command {
        Command::Evolve(a) => cmd_evolve(&a.run.resolve()?, a.dump_kernels, out),
        Command::Kernels(a) => cmd_kernels(&a.run.resolve()?, !a.no_quantum, out),
        Command::Separability(a) => {
            let mode = match a.hmi_mode {
                HmiArg::Sum => HmiMode::Sum,
                HmiArg::Mean => HmiMode::Mean,
            };
            cmd_separability(&a.run.resolve()?, mode, out)
        }
        Command::Decode(a) => cmd_decode(&a.genome, a.qubits, out),
        Command::Report(a) => {
            let dest = a.out.unwrap_or_else(|| a.runs.clone());
            let (rows, corr) = report::report(&a.runs, &dest)?;
            say(out, &report::summary(&corr, rows.len()))
        }
    }
}

fn say(out: &mut dyn Write, text: &str) -> CliResult<()> {
    writeln!(out, "{text}").map_err(|e| CliError::Runtime(format!("stdout: {e}")))
}

fn create_out(rc: &RunConfig) -> CliResult<()> {
    std::fs::create_dir_all(&rc.out).map_err(|e| CliError::write(&rc.out, e))
}

pub fn cmd_evolve(rc: &RunConfig, dump: bool, out: &mut dyn Write) -> CliResult<()> {
    let (ds, combos) = prepare(rc)?;
    create_out(rc)?;
    let runs: Vec<CliResult<_>> = combos
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            let run = run_combo(&ds, f, rc)?;
            let dir = run_dir(&rc.out, i, f);
            write_run(&dir, rc, &run)?;
            if dump {
                dump_kernels(&dir, &run)?;
            }
            Ok((dir, run))
        })
        .collect();
    for r in runs {
        let (dir, run) = r?;
        let best = run.best().expect("archive of a non-empty population is non-empty");
        say(
            out,
            &format!(
                "{}: features {} best accuracy {} (local {}, cnot {}), front {}",
                dir.display(),
                feature_tag(&run.combo.features),
                best.accuracy,
                best.local_gates,
                best.cnot_gates,
                run.records.len()
            ),
        )?;
    }
    Ok(())
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 { f64::NAN } else { sum / n as f64 }
}

pub const KERNELS_FILE: &str = "kernels.csv";

pub fn cmd_kernels(rc: &RunConfig, quantum: bool, out: &mut dyn Write) -> CliResult<()> {
    let (ds, combos) = prepare(rc)?;
    create_out(rc)?;
    let results: Vec<CliResult<(Vec<f64>, Option<(f64, usize, usize, String)>)>> = combos
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            let data = combo_data(&ds, f, rc)?;
            let classical = ClassicalKernel::ALL
                .iter()
                .map(|&k| classical_accuracy(k, &data.split, &rc.svm))
                .collect::<CliResult<Vec<_>>>()?;
            let q = if quantum {
                let run = run_combo(&ds, f, rc)?;
                write_run(&run_dir(&rc.out, i, f), rc, &run)?;
                let b = run.best().expect("non-empty archive");
                Some((b.accuracy, b.local_gates, b.cnot_gates, b.genome.clone()))
            } else {
                None
            };
            Ok((classical, q))
        })
        .collect();
    let results = results.into_iter().collect::<CliResult<Vec<_>>>()?;

    let mut header: Vec<&str> = vec!["features"];
    header.extend(ClassicalKernel::ALL.iter().map(|k| k.name()));
    header.extend(["quantum", "quantum_local_gates", "quantum_cnot_gates", "quantum_genome"]);
    let mut rows: Vec<Vec<String>> = Vec::new();
    for (f, (classical, q)) in combos.iter().zip(&results) {
        let mut row = vec![feature_tag(f)];
        row.extend(classical.iter().map(f64::to_string));
        match q {
            Some((acc, local, cnot, genome)) => {
                row.extend([acc.to_string(), local.to_string(), cnot.to_string(), genome.clone()])
            }
            None => row.extend(std::iter::repeat_n(String::new(), 4)),
        }
        rows.push(row);
    }
    let mut mean_row = vec!["mean".to_string()];
    for k in 0..ClassicalKernel::ALL.len() {
        mean_row.push(mean(results.iter().map(|(c, _)| c[k])).to_string());
    }
    if quantum {
        let qs: Vec<_> = results.iter().filter_map(|(_, q)| q.as_ref()).collect();
        mean_row.push(mean(qs.iter().map(|q| q.0)).to_string());
        mean_row.push(mean(qs.iter().map(|q| q.1 as f64)).to_string());
        mean_row.push(mean(qs.iter().map(|q| q.2 as f64)).to_string());
    } else {
        mean_row.extend(std::iter::repeat_n(String::new(), 3));
    }
    mean_row.push(String::new());
    rows.push(mean_row);

    let path = rc.out.join(KERNELS_FILE);
    write_csv(&path, &header, rows)?;
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Runtime(e.to_string()))?;
    say(out, text.trim_end())
}

pub const SEPARABILITY_REPORT_FILE: &str = "separability.csv";

pub fn cmd_separability(rc: &RunConfig, mode: HmiMode, out: &mut dyn Write) -> CliResult<()> {
    let (ds, combos) = prepare(rc)?;
    create_out(rc)?;
    let name = dataset_name(rc);
    let reports = combos
        .par_iter()
        .map(|f| separability(&ds.select_features(f)?, mode))
        .collect::<Vec<CliResult<_>>>()
        .into_iter()
        .collect::<CliResult<Vec<_>>>()?;
    let mut rows: Vec<Vec<String>> = combos
        .iter()
        .zip(&reports)
        .map(|(f, r)| separability_row(&name, f, ds.n_rows(), r))
        .collect();
    rows.push(vec![
        name.clone(),
        "mean".into(),
        ds.n_rows().to_string(),
        mean(reports.iter().map(|r| r.si)).to_string(),
        mean(reports.iter().map(|r| r.hmi)).to_string(),
        mean(reports.iter().map(|r| r.dsi)).to_string(),
    ]);
    let path = rc.out.join(SEPARABILITY_REPORT_FILE);
    write_csv(&path, &SEPARABILITY_HEADER, rows)?;
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Runtime(e.to_string()))?;
    say(out, text.trim_end())
}

pub fn cmd_decode(genome: &str, qubits: Option<usize>, out: &mut dyn Write) -> CliResult<()> {
    let n = match qubits {
        Some(n) => n,
        None => (1..=qfmevo_core::quantum_sim::MAX_QUBITS)
            .find(|&n| genome_length(n) == genome.len())
            .ok_or_else(|| {
                CliError::Usage(format!("no qubit count has genome length {}", genome.len()))
            })?,
    };
    let g = Genome::parse(genome, n).map_err(|e| CliError::Usage(e.to_string()))?;
    let template = g.decode();
    let counts = template.gate_counts();
    say(
        out,
        &format!("{template}\nlocal gates: {}\ncnot gates: {}", counts.local, counts.cnot),
    )
}
