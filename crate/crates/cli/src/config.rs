//! Run configuration: a TOML file merged with command-line overrides.
//!
//! Every section is optional. Seeds left unset in `[split]`, `[features]` and
//! `[evolve]` fall back to the top-level `seed`.

use std::path::{Path, PathBuf};

use qfmevo_core::data::{LabelColumn, SplitSpec};
use qfmevo_core::nsga2::{EarlyStop, EvolveConfig};
use qfmevo_core::svm::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub dataset: DatasetSection,
    pub features: FeatureSection,
    pub split: SplitSection,
    pub scaling: ScalingSection,
    pub svm: SvmSection,
    pub evolve: EvolveSection,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    pub path: Option<PathBuf>,
    /// Column name, or a zero-based index.
    pub label: Option<String>,
    pub positive_class: Option<String>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSection {
    /// Explicit feature indices. Mutually exclusive with `k`/`count`.
    pub explicit: Option<Vec<usize>>,
    /// Features per sampled combination (also the qubit count).
    pub k: Option<usize>,
    pub count: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub n_train: usize,
    pub n_test: usize,
    pub stratified: bool,
    pub seed: Option<u64>,
}

impl Default for SplitSection {
    fn default() -> Self {
        let d = SplitSpec::default();
        Self {
            n_train: d.n_train,
            n_test: d.n_test,
            stratified: d.stratified,
            seed: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingSection {
    pub lo: f64,
    pub hi: f64,
}

impl Default for ScalingSection {
    fn default() -> Self {
        Self {
            lo: 0.0,
            hi: std::f64::consts::PI,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SvmSection {
    pub c: f64,
    pub tolerance: f64,
    pub max_passes: usize,
    pub max_iterations: usize,
}

impl Default for SvmSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            c: d.c,
            tolerance: d.tolerance,
            max_passes: d.max_passes,
            max_iterations: d.max_iterations,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveSection {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    pub mutation_prob_per_bit: Option<f64>,
    pub tournament_size: usize,
    pub seed: Option<u64>,
    pub target_accuracy: Option<f64>,
    pub stagnation_generations: Option<usize>,
}

impl Default for EvolveSection {
    fn default() -> Self {
        let d = EvolveConfig::default();
        Self {
            population_size: d.population_size,
            generations: d.generations,
            crossover_prob: d.crossover_prob,
            mutation_prob_per_bit: d.mutation_prob_per_bit,
            tournament_size: d.tournament_size,
            seed: None,
            target_accuracy: None,
            stagnation_generations: None,
        }
    }
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}

/// Flag values that override the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub dataset: Option<PathBuf>,
    pub label: Option<String>,
    pub positive_class: Option<String>,
    pub qubits: Option<usize>,
    pub features: Option<Vec<usize>>,
    pub combos: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub population: Option<usize>,
    pub generations: Option<usize>,
    pub n_train: Option<usize>,
    pub n_test: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSelection {
    /// Every feature of the dataset as one combination.
    All,
    Explicit(Vec<usize>),
    Sampled { k: usize, count: usize, seed: u64 },
}

/// Fully resolved settings for one invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub label: LabelColumn,
    pub positive_class: Option<String>,
    pub selection: FeatureSelection,
    pub split: SplitSpec,
    pub scaling: (f64, f64),
    pub svm: TrainConfig,
    pub evolve: EvolveConfig,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn resolve(file: FileConfig, flags: Overrides) -> CliResult<Self> {
        let base_seed = flags.seed.or(file.seed).unwrap_or(0);
        // --seed pins every stream; otherwise section seeds win over the base
        let pick = |section: Option<u64>| flags.seed.or(section).unwrap_or(base_seed);

        let dataset = flags
            .dataset
            .or(file.dataset.path)
            .ok_or_else(|| CliError::Usage("no dataset given (--dataset or [dataset].path)".into()))?;
        let label_text = flags
            .label
            .or(file.dataset.label)
            .ok_or_else(|| CliError::Usage("no label column given (--label-col or [dataset].label)".into()))?;
        let label: LabelColumn = label_text.parse().unwrap_or_else(|e| match e {});

        let fs = file.features;
        if fs.explicit.is_some() && (fs.k.is_some() || fs.count.is_some()) {
            return Err(CliError::Usage(
                "[features] sets both an explicit list and k/count".into(),
            ));
        }
        let selection = if let Some(list) = flags.features {
            if flags.combos.is_some() || flags.qubits.is_some_and(|q| q != list.len()) {
                return Err(CliError::Usage("--features conflicts with --combos/--qubits".into()));
            }
            FeatureSelection::Explicit(list)
        } else if flags.qubits.is_some() || flags.combos.is_some() || fs.k.is_some() || fs.count.is_some() {
            let k = flags
                .qubits
                .or(fs.k)
                .ok_or_else(|| CliError::Usage("sampled combinations need --qubits or [features].k".into()))?;
            let count = flags.combos.or(fs.count).unwrap_or(1);
            FeatureSelection::Sampled {
                k,
                count,
                seed: pick(fs.seed),
            }
        } else if let Some(list) = fs.explicit {
            FeatureSelection::Explicit(list)
        } else {
            FeatureSelection::All
        };
        match &selection {
            FeatureSelection::Explicit(list) if list.is_empty() => {
                return Err(CliError::Usage("feature list is empty".into()))
            }
            FeatureSelection::Sampled { k: 0, .. } | FeatureSelection::Sampled { count: 0, .. } => {
                return Err(CliError::Usage("qubits and combos must be positive".into()))
            }
            _ => {}
        }

        let split = SplitSpec {
            n_train: flags.n_train.unwrap_or(file.split.n_train),
            n_test: flags.n_test.unwrap_or(file.split.n_test),
            seed: pick(file.split.seed),
            stratified: file.split.stratified,
        };
        if split.n_train == 0 || split.n_test == 0 {
            return Err(CliError::Usage("n_train and n_test must be positive".into()));
        }
        if !(file.scaling.lo.is_finite() && file.scaling.hi.is_finite() && file.scaling.hi > file.scaling.lo) {
            return Err(CliError::Usage("[scaling] needs finite lo < hi".into()));
        }

        let svm = TrainConfig {
            c: file.svm.c,
            tolerance: file.svm.tolerance,
            max_passes: file.svm.max_passes,
            max_iterations: file.svm.max_iterations,
        };
        svm.validate()?;

        let ev = file.evolve;
        let evolve = EvolveConfig {
            population_size: flags.population.unwrap_or(ev.population_size),
            generations: flags.generations.unwrap_or(ev.generations),
            crossover_prob: ev.crossover_prob,
            mutation_prob_per_bit: ev.mutation_prob_per_bit,
            tournament_size: ev.tournament_size,
            seed: pick(ev.seed),
            early_stop: EarlyStop {
                target_accuracy: ev.target_accuracy,
                stagnation_generations: ev.stagnation_generations,
            },
        };
        evolve.validate()?;

        Ok(Self {
            dataset,
            label,
            positive_class: flags.positive_class.or(file.dataset.positive_class),
            selection,
            split,
            scaling: (file.scaling.lo, file.scaling.hi),
            svm,
            evolve,
            out: flags.out.or(file.out).unwrap_or_else(|| PathBuf::from("runs")),
        })
    }
}
