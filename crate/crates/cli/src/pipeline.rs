//! Shared plumbing for the data-driven subcommands: dataset preparation,
//! one evolution run per feature combination and its on-disk artefacts.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use qfmevo_core::data::{load_csv, minmax_scale, sample_feature_combos, split, Dataset, SplitData};
use qfmevo_core::featuremap::Genome;
use qfmevo_core::kernel::{
    classical_kernel, quantum_cross, quantum_gram, ClassicalKernel, KernelParams,
};
use qfmevo_core::nsga2::{evolve, EvolveResult, Individual, QuantumKernelFitness, StopReason};
use qfmevo_core::separability::{HmiMode, LabeledPoints, SeparabilityReport};
use qfmevo_core::svm::{accuracy, train_multiclass, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::config::{FeatureSelection, RunConfig};
use crate::error::{CliError, CliResult};

pub const PARETO_FILE: &str = "pareto.json";
pub const HISTORY_FILE: &str = "history.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SEPARABILITY_FILE: &str = "separability.csv";

/// One archived non-dominated feature map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParetoRecord {
    pub genome: String,
    pub accuracy: f64,
    pub local_gates: usize,
    pub cnot_gates: usize,
    pub rank: usize,
    pub generation_found: usize,
}

impl From<&Individual> for ParetoRecord {
    fn from(ind: &Individual) -> Self {
        Self {
            genome: ind.genome.to_string(),
            accuracy: ind.objectives.accuracy,
            local_gates: ind.objectives.local_gates,
            cnot_gates: ind.objectives.cnot_gates,
            rank: ind.rank,
            generation_found: ind.generation_found,
        }
    }
}

/// Highest accuracy, then fewest total gates, then fewest CNOTs.
pub fn best_record(records: &[ParetoRecord]) -> Option<&ParetoRecord> {
    records.iter().min_by(|a, b| {
        b.accuracy
            .total_cmp(&a.accuracy)
            .then((a.local_gates + a.cnot_gates).cmp(&(b.local_gates + b.cnot_gates)))
            .then(a.cnot_gates.cmp(&b.cnot_gates))
    })
}

/// Loads the dataset and expands the feature selection into combinations.
pub fn prepare(rc: &RunConfig) -> CliResult<(Dataset, Vec<Vec<usize>>)> {
    let ds = load_csv(&rc.dataset, &rc.label, rc.positive_class.as_deref())?;
    let n = ds.n_features();
    let combos = match &rc.selection {
        FeatureSelection::All => vec![(0..n).collect()],
        FeatureSelection::Explicit(list) => {
            let mut sorted = list.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != list.len() {
                return Err(CliError::Usage("feature list repeats an index".into()));
            }
            if let Some(bad) = list.iter().find(|&&f| f >= n) {
                return Err(CliError::Usage(format!(
                    "feature {bad} out of range; dataset has {n} features"
                )));
            }
            vec![list.clone()]
        }
        &FeatureSelection::Sampled { k, count, seed } => {
            if k > n {
                return Err(CliError::Usage(format!(
                    "cannot take {k} of {n} features"
                )));
            }
            let available = qfmevo_core::data::binomial(n, k);
            let count = if count as u128 > available {
                log::warn!("only {available} combinations of {k} features exist; using all");
                available as usize
            } else {
                count
            };
            sample_feature_combos(n, k, count, seed)?
        }
    };
    Ok((ds, combos))
}

/// A feature combination with its scaled train/test split and the unscaled
/// points used for the separability indexes.
pub struct ComboData {
    pub features: Vec<usize>,
    pub feature_names: Vec<String>,
    pub split: SplitData,
    pub points: Dataset,
}

pub fn combo_data(ds: &Dataset, features: &[usize], rc: &RunConfig) -> CliResult<ComboData> {
    let points = ds.select_features(features)?;
    let scaled = minmax_scale(&points, rc.scaling.0, rc.scaling.1)?;
    let rows = split(&scaled, &rc.split)?;
    Ok(ComboData {
        features: features.to_vec(),
        feature_names: points.feature_names.clone(),
        split: scaled.materialize(&rows),
        points,
    })
}

pub fn separability(points: &Dataset, mode: HmiMode) -> CliResult<SeparabilityReport> {
    let lp = LabeledPoints::scaled(&points.x, points.y.clone())?;
    Ok(SeparabilityReport::compute(&lp, mode)?)
}

/// Test accuracy of a classical kernel with the "scale" gamma of the
/// training rows.
pub fn classical_accuracy(kind: ClassicalKernel, data: &SplitData, svm: &TrainConfig) -> CliResult<f64> {
    let params = KernelParams::scale(data.x_train.view());
    let gram = classical_kernel(kind, &params, data.x_train.view(), data.x_train.view())?;
    let cross = classical_kernel(kind, &params, data.x_test.view(), data.x_train.view())?;
    let model = train_multiclass(&gram, &data.y_train, svm)?;
    Ok(accuracy(&model.predict(&cross)?, &data.y_test)?)
}

pub struct RunOutcome {
    pub combo: ComboData,
    pub result: EvolveResult,
    pub records: Vec<ParetoRecord>,
    pub separability: SeparabilityReport,
}

impl RunOutcome {
    pub fn best(&self) -> Option<&ParetoRecord> {
        best_record(&self.records)
    }
}

pub fn run_combo(ds: &Dataset, features: &[usize], rc: &RunConfig) -> CliResult<RunOutcome> {
    let combo = combo_data(ds, features, rc)?;
    let fitness = QuantumKernelFitness::new(combo.split.clone(), rc.svm.clone())?;
    let result = evolve(&rc.evolve, &fitness)?;
    if result.failed_evaluations > 0 {
        log::warn!(
            "features {:?}: {} genome evaluations failed and were scored 0",
            features,
            result.failed_evaluations
        );
    }
    let records = result.pareto_front.iter().map(ParetoRecord::from).collect();
    let separability = separability(&combo.points, HmiMode::Sum)?;
    Ok(RunOutcome {
        combo,
        result,
        records,
        separability,
    })
}

pub fn dataset_name(rc: &RunConfig) -> String {
    rc.dataset
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

pub fn feature_tag(features: &[usize]) -> String {
    features.iter().map(usize::to_string).collect::<Vec<_>>().join("-")
}

pub fn run_dir(out: &Path, index: usize, features: &[usize]) -> PathBuf {
    out.join(format!("combo_{index:03}_f{}", feature_tag(features)))
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::write(path, e))
}

fn csv_bytes(rows: Vec<Vec<String>>) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(&r).map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))
}

pub const SEPARABILITY_HEADER: [&str; 6] = ["dataset", "features", "n_instances", "si", "hmi", "dsi"];

pub fn separability_row(dataset: &str, features: &[usize], n: usize, r: &SeparabilityReport) -> Vec<String> {
    vec![
        dataset.to_string(),
        feature_tag(features),
        n.to_string(),
        r.si.to_string(),
        r.hmi.to_string(),
        r.dsi.to_string(),
    ]
}

pub fn write_csv(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> CliResult<()> {
    let mut all = vec![header.iter().map(|s| s.to_string()).collect()];
    all.extend(rows);
    write_file(path, &csv_bytes(all)?)
}

#[derive(Serialize)]
struct Manifest<'a> {
    dataset: String,
    dataset_path: String,
    label: String,
    positive_class: Option<&'a str>,
    features: &'a [usize],
    feature_names: &'a [String],
    n_qubits: usize,
    split: SplitManifest,
    scaling: [f64; 2],
    svm: SvmManifest,
    evolve: EvolveManifest,
    stop_reason: &'static str,
    generations_run: usize,
    failed_evaluations: usize,
}

#[derive(Serialize)]
struct SplitManifest {
    n_train: usize,
    n_test: usize,
    seed: u64,
    stratified: bool,
}

#[derive(Serialize)]
struct SvmManifest {
    c: f64,
    tolerance: f64,
    max_passes: usize,
    max_iterations: usize,
}

#[derive(Serialize)]
struct EvolveManifest {
    population_size: usize,
    generations: usize,
    crossover_prob: f64,
    mutation_prob_per_bit: Option<f64>,
    tournament_size: usize,
    seed: u64,
    target_accuracy: Option<f64>,
    stagnation_generations: Option<usize>,
}

fn stop_name(s: StopReason) -> &'static str {
    match s {
        StopReason::Generations => "generations",
        StopReason::TargetAccuracy => "target_accuracy",
        StopReason::Stagnation => "stagnation",
    }
}

/// Writes pareto.json, history.csv, manifest.json and separability.csv into
/// `dir`, creating it if needed.
pub fn write_run(dir: &Path, rc: &RunConfig, run: &RunOutcome) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::write(dir, e))?;

    let pareto = serde_json::to_vec_pretty(&run.records).map_err(|e| CliError::Runtime(e.to_string()))?;
    write_file(&dir.join(PARETO_FILE), &pareto)?;

    let history = run
        .result
        .history
        .iter()
        .map(|h| {
            vec![
                h.generation.to_string(),
                h.best_accuracy.to_string(),
                h.front_size.to_string(),
                h.min_local.to_string(),
                h.min_cnot.to_string(),
            ]
        })
        .collect();
    write_csv(
        &dir.join(HISTORY_FILE),
        &["generation", "best_accuracy", "front_size", "min_local", "min_cnot"],
        history,
    )?;

    let label = match &rc.label {
        qfmevo_core::data::LabelColumn::Name(n) => n.clone(),
        qfmevo_core::data::LabelColumn::Index(i) => i.to_string(),
    };
    let ev = &rc.evolve;
    let manifest = Manifest {
        dataset: dataset_name(rc),
        dataset_path: rc.dataset.display().to_string(),
        label,
        positive_class: rc.positive_class.as_deref(),
        features: &run.combo.features,
        feature_names: &run.combo.feature_names,
        n_qubits: run.combo.features.len(),
        split: SplitManifest {
            n_train: rc.split.n_train,
            n_test: rc.split.n_test,
            seed: rc.split.seed,
            stratified: rc.split.stratified,
        },
        scaling: [rc.scaling.0, rc.scaling.1],
        svm: SvmManifest {
            c: rc.svm.c,
            tolerance: rc.svm.tolerance,
            max_passes: rc.svm.max_passes,
            max_iterations: rc.svm.max_iterations,
        },
        evolve: EvolveManifest {
            population_size: ev.population_size,
            generations: ev.generations,
            crossover_prob: ev.crossover_prob,
            mutation_prob_per_bit: ev.mutation_prob_per_bit,
            tournament_size: ev.tournament_size,
            seed: ev.seed,
            target_accuracy: ev.early_stop.target_accuracy,
            stagnation_generations: ev.early_stop.stagnation_generations,
        },
        stop_reason: stop_name(run.result.stop_reason),
        generations_run: run.result.history.len() - 1,
        failed_evaluations: run.result.failed_evaluations,
    };
    let manifest = serde_json::to_vec_pretty(&manifest).map_err(|e| CliError::Runtime(e.to_string()))?;
    write_file(&dir.join(MANIFEST_FILE), &manifest)?;

    write_csv(
        &dir.join(SEPARABILITY_FILE),
        &SEPARABILITY_HEADER,
        vec![separability_row(
            &dataset_name(rc),
            &run.combo.features,
            run.combo.points.n_rows(),
            &run.separability,
        )],
    )
}

/// Writes the training Gram and test-by-train matrices of the best record.
pub fn dump_kernels(dir: &Path, run: &RunOutcome) -> CliResult<()> {
    let Some(best) = run.best() else { return Ok(()) };
    let template = Genome::parse(&best.genome, run.combo.features.len())?.decode();
    let s = &run.combo.split;
    for (name, m) in [
        ("kernel_train.csv", quantum_gram(&template, s.x_train.view())?),
        ("kernel_test.csv", quantum_cross(&template, s.x_test.view(), s.x_train.view())?),
    ] {
        let path = dir.join(name);
        let file = fs::File::create(&path).map_err(|e| CliError::write(&path, e))?;
        let mut w = std::io::BufWriter::new(file);
        m.write_csv(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::write(&path, e))?;
    }
    Ok(())
}
