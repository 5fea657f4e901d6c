//! NSGA-II over feature-map genomes.
//!
//! Three objectives: test accuracy (maximized), local gate count and CNOT
//! count (both minimized). Selection is a crowded-comparison tournament,
//! variation is one-point crossover plus per-bit flip mutation, and survival
//! keeps whole non-dominated fronts of the merged parent+offspring population,
//! truncating the last admitted front by crowding distance.
//!
//! All randomness flows from a single ChaCha8 stream seeded with
//! [`EvolveConfig::seed`], drawn in a fixed order: initial bits, then per
//! generation all tournaments, all crossovers, all mutations. Fitness is
//! evaluated in parallel, but results are gathered in population order, so a
//! run is reproducible regardless of scheduling.

use std::cmp::Ordering;
use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::SplitData;
use crate::error::{Error, Result};
use crate::featuremap::{genome_length, Genome};
use crate::kernel::{quantum_cross, quantum_gram};
use crate::svm::{accuracy, train_multiclass, TrainConfig};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Objectives {
    pub accuracy: f64,
    pub local_gates: usize,
    pub cnot_gates: usize,
}

impl Objectives {
    /// Objective vector in minimization form.
    fn as_min(&self) -> [f64; 3] {
        [-self.accuracy, self.local_gates as f64, self.cnot_gates as f64]
    }
}

/// `a` is no worse than `b` everywhere and strictly better somewhere.
pub fn dominates(a: &Objectives, b: &Objectives) -> bool {
    let no_worse = a.accuracy >= b.accuracy
        && a.local_gates <= b.local_gates
        && a.cnot_gates <= b.cnot_gates;
    let better = a.accuracy > b.accuracy
        || a.local_gates < b.local_gates
        || a.cnot_gates < b.cnot_gates;
    no_worse && better
}

/// Partitions `pop` into non-dominated fronts (indices ascending within a front).
pub fn fast_nondominated_sort(pop: &[Objectives]) -> Vec<Vec<usize>> {
    let n = pop.len();
    let mut dominated_by_me: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];
    for p in 0..n {
        for q in p + 1..n {
            if dominates(&pop[p], &pop[q]) {
                dominated_by_me[p].push(q);
                domination_count[q] += 1;
            } else if dominates(&pop[q], &pop[p]) {
                dominated_by_me[q].push(p);
                domination_count[p] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&p| domination_count[p] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            for &q in &dominated_by_me[p] {
                domination_count[q] -= 1;
                if domination_count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each member of `front`.
///
/// Identical objective vectors are collapsed before measuring, so duplicates
/// always share the same distance.
pub fn crowding_distance(front: &[Objectives]) -> Vec<f64> {
    let mut unique: Vec<[f64; 3]> = Vec::new();
    let slot: Vec<usize> = front
        .iter()
        .map(|o| {
            let v = o.as_min();
            match unique.iter().position(|u| *u == v) {
                Some(i) => i,
                None => {
                    unique.push(v);
                    unique.len() - 1
                }
            }
        })
        .collect();

    let m = unique.len();
    let mut dist = vec![0.0f64; m];
    for k in 0..3 {
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| unique[a][k].total_cmp(&unique[b][k]).then(a.cmp(&b)));
        let lo = unique[order[0]][k];
        let hi = unique[order[m - 1]][k];
        dist[order[0]] = f64::INFINITY;
        dist[order[m - 1]] = f64::INFINITY;
        if hi == lo {
            continue;
        }
        for w in 1..m.saturating_sub(1) {
            let i = order[w];
            if dist[i].is_finite() {
                dist[i] += (unique[order[w + 1]][k] - unique[order[w - 1]][k]) / (hi - lo);
            }
        }
    }
    slot.into_iter().map(|s| dist[s]).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Individual {
    pub genome: Genome,
    pub objectives: Objectives,
    /// 1 for the first non-dominated front; 0 until sorted.
    pub rank: usize,
    pub crowding: f64,
    /// Generation in which this genome was created.
    pub generation_found: usize,
}

/// Crowded comparison: lower rank wins, then larger crowding distance.
fn crowded_better(a: &Individual, b: &Individual) -> bool {
    a.rank < b.rank || (a.rank == b.rank && a.crowding > b.crowding)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EarlyStop {
    /// Stop once the best accuracy reaches this value.
    pub target_accuracy: Option<f64>,
    /// Stop after this many consecutive generations in which neither the best
    /// accuracy nor the size of the first front changed.
    pub stagnation_generations: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolveConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    /// Per-bit flip probability; `None` means `1 / genome_length`.
    pub mutation_prob_per_bit: Option<f64>,
    pub tournament_size: usize,
    pub seed: u64,
    pub early_stop: EarlyStop,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            population_size: 32,
            generations: 50,
            crossover_prob: 0.8,
            mutation_prob_per_bit: None,
            tournament_size: 2,
            seed: 0,
            early_stop: EarlyStop::default(),
        }
    }
}

impl EvolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 4 || self.population_size % 2 != 0 {
            return Err(Error::Config(format!(
                "population_size must be even and at least 4, got {}",
                self.population_size
            )));
        }
        let unit = |p: f64| (0.0..=1.0).contains(&p);
        if !unit(self.crossover_prob) || !self.mutation_prob_per_bit.is_none_or(unit) {
            return Err(Error::Config("probabilities must lie in [0, 1]".into()));
        }
        if self.tournament_size == 0 {
            return Err(Error::Config("tournament_size must be positive".into()));
        }
        if let Some(t) = self.early_stop.target_accuracy {
            if !unit(t) {
                return Err(Error::Config(format!("target_accuracy {t} outside [0, 1]")));
            }
        }
        if self.early_stop.stagnation_generations == Some(0) {
            return Err(Error::Config("stagnation_generations must be positive".into()));
        }
        Ok(())
    }
}

/// Objective evaluation for a genome. Implementations must be pure.
pub trait Fitness: Sync {
    fn n_qubits(&self) -> usize;
    fn evaluate(&self, genome: &Genome) -> Result<Objectives>;
}

/// Decodes `genome`, trains a kernel SVM on the training rows and scores it
/// on the test rows.
pub fn evaluate(genome: &Genome, split: &SplitData, svm: &TrainConfig) -> Result<Objectives> {
    let template = genome.decode();
    let counts = template.gate_counts();
    let gram = quantum_gram(&template, split.x_train.view())?;
    let model = train_multiclass(&gram, &split.y_train, svm).map_err(|e| match e {
        Error::Training(msg) => Error::Evaluation(msg),
        other => other,
    })?;
    let cross = quantum_cross(&template, split.x_test.view(), split.x_train.view())?;
    let pred = model.predict(&cross)?;
    Ok(Objectives {
        accuracy: accuracy(&pred, &split.y_test)?,
        local_gates: counts.local,
        cnot_gates: counts.cnot,
    })
}

/// The quantum-kernel fitness on a fixed train/test split.
#[derive(Clone, Debug)]
pub struct QuantumKernelFitness {
    pub data: SplitData,
    pub svm: TrainConfig,
}

impl QuantumKernelFitness {
    pub fn new(data: SplitData, svm: TrainConfig) -> Result<Self> {
        if data.x_train.ncols() != data.x_test.ncols() {
            return Err(Error::Precondition(
                "train and test matrices differ in width".into(),
            ));
        }
        svm.validate()?;
        Ok(Self { data, svm })
    }
}

impl Fitness for QuantumKernelFitness {
    fn n_qubits(&self) -> usize {
        self.data.x_train.ncols()
    }

    fn evaluate(&self, genome: &Genome) -> Result<Objectives> {
        evaluate(genome, &self.data, &self.svm)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_accuracy: f64,
    pub front_size: usize,
    pub min_local: usize,
    pub min_cnot: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Generations,
    TargetAccuracy,
    Stagnation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolveResult {
    pub population: Vec<Individual>,
    /// Distinct rank-1 genomes of the final population, best accuracy first.
    pub pareto_front: Vec<Individual>,
    pub history: Vec<GenerationStats>,
    pub stop_reason: StopReason,
    /// Genomes that failed evaluation and were scored with accuracy 0.
    pub failed_evaluations: usize,
}

struct Evaluator<'a, F: Fitness + ?Sized> {
    fitness: &'a F,
    cache: HashMap<Genome, Objectives>,
    failed: usize,
}

impl<F: Fitness + ?Sized> Evaluator<'_, F> {
    fn run(&mut self, genomes: &[Genome]) -> Vec<Objectives> {
        let mut pending: Vec<&Genome> = Vec::new();
        for g in genomes {
            if !self.cache.contains_key(g) && !pending.contains(&g) {
                pending.push(g);
            }
        }
        let fitness = self.fitness;
        let scored: Vec<(Genome, Result<Objectives>)> = pending
            .par_iter()
            .map(|g| ((*g).clone(), fitness.evaluate(g)))
            .collect();
        for (g, res) in scored {
            let obj = res.unwrap_or_else(|_| {
                self.failed += 1;
                let counts = g.decode().gate_counts();
                Objectives {
                    accuracy: 0.0,
                    local_gates: counts.local,
                    cnot_gates: counts.cnot,
                }
            });
            self.cache.insert(g, obj);
        }
        genomes.iter().map(|g| self.cache[g]).collect()
    }
}

/// Sets rank and crowding on every member; returns the fronts.
fn assign_rank_and_crowding(pop: &mut [Individual]) -> Vec<Vec<usize>> {
    let objs: Vec<Objectives> = pop.iter().map(|i| i.objectives).collect();
    let fronts = fast_nondominated_sort(&objs);
    for (r, front) in fronts.iter().enumerate() {
        let members: Vec<Objectives> = front.iter().map(|&i| objs[i]).collect();
        for (&i, d) in front.iter().zip(crowding_distance(&members)) {
            pop[i].rank = r + 1;
            pop[i].crowding = d;
        }
    }
    fronts
}

fn stats(generation: usize, pop: &[Individual]) -> GenerationStats {
    let front: Vec<&Individual> = pop.iter().filter(|i| i.rank == 1).collect();
    GenerationStats {
        generation,
        best_accuracy: front.iter().map(|i| i.objectives.accuracy).fold(0.0, f64::max),
        front_size: front.len(),
        min_local: front.iter().map(|i| i.objectives.local_gates).min().unwrap_or(0),
        min_cnot: front.iter().map(|i| i.objectives.cnot_gates).min().unwrap_or(0),
    }
}

fn tournament(pop: &[Individual], size: usize, rng: &mut ChaCha8Rng) -> usize {
    let mut best = rng.gen_range(0..pop.len());
    for _ in 1..size {
        let c = rng.gen_range(0..pop.len());
        if crowded_better(&pop[c], &pop[best]) || (!crowded_better(&pop[best], &pop[c]) && c < best) {
            best = c;
        }
    }
    best
}

/// Survivor order inside the front that overflows the budget.
fn truncation_order(a: &Individual, b: &Individual) -> Ordering {
    b.crowding
        .total_cmp(&a.crowding)
        .then(b.objectives.accuracy.total_cmp(&a.objectives.accuracy))
}

/// Keeps `size` members of `merged`: whole fronts first, then the best-spread
/// members of the first front that does not fit.
fn environmental_selection(mut merged: Vec<Individual>, size: usize) -> Vec<Individual> {
    let fronts = assign_rank_and_crowding(&mut merged);
    let mut keep: Vec<usize> = Vec::with_capacity(size);
    for front in fronts {
        if keep.len() + front.len() <= size {
            keep.extend(front);
        } else {
            let mut rest = front;
            rest.sort_by(|&a, &b| truncation_order(&merged[a], &merged[b]).then(a.cmp(&b)));
            keep.extend(rest.into_iter().take(size - keep.len()));
        }
        if keep.len() == size {
            break;
        }
    }
    keep.sort_unstable();
    let mut slots: Vec<Option<Individual>> = merged.into_iter().map(Some).collect();
    keep.into_iter().map(|i| slots[i].take().expect("unique index")).collect()
}

fn pareto_archive(pop: &[Individual]) -> Vec<Individual> {
    let mut front: Vec<Individual> = Vec::new();
    for ind in pop.iter().filter(|i| i.rank == 1) {
        match front.iter_mut().find(|f| f.genome == ind.genome) {
            Some(f) => f.generation_found = f.generation_found.min(ind.generation_found),
            None => front.push(ind.clone()),
        }
    }
    front.sort_by(|a, b| {
        b.objectives
            .accuracy
            .total_cmp(&a.objectives.accuracy)
            .then(a.objectives.local_gates.cmp(&b.objectives.local_gates))
            .then(a.objectives.cnot_gates.cmp(&b.objectives.cnot_gates))
            .then_with(|| a.genome.to_string().cmp(&b.genome.to_string()))
    });
    front
}

/// Runs NSGA-II with the given fitness.
pub fn evolve<F: Fitness + ?Sized>(config: &EvolveConfig, fitness: &F) -> Result<EvolveResult> {
    config.validate()?;
    let n_qubits = fitness.n_qubits();
    let len = genome_length(n_qubits);
    let p_mut = config.mutation_prob_per_bit.unwrap_or(1.0 / len as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut evaluator = Evaluator {
        fitness,
        cache: HashMap::new(),
        failed: 0,
    };

    let genomes = (0..config.population_size)
        .map(|_| Genome::new(n_qubits, (0..len).map(|_| rng.gen_bool(0.5)).collect()))
        .collect::<Result<Vec<_>>>()?;
    let objectives = evaluator.run(&genomes);
    let mut population: Vec<Individual> = genomes
        .into_iter()
        .zip(objectives)
        .map(|(genome, objectives)| Individual {
            genome,
            objectives,
            rank: 0,
            crowding: 0.0,
            generation_found: 0,
        })
        .collect();
    assign_rank_and_crowding(&mut population);
    let mut history = vec![stats(0, &population)];
    let mut stagnant = 0;
    let mut stop_reason = StopReason::Generations;

    for generation in 1..=config.generations {
        let last = history[history.len() - 1];
        if config.early_stop.target_accuracy.is_some_and(|t| last.best_accuracy >= t) {
            stop_reason = StopReason::TargetAccuracy;
            break;
        }
        if config.early_stop.stagnation_generations.is_some_and(|s| stagnant >= s) {
            stop_reason = StopReason::Stagnation;
            break;
        }

        let parents: Vec<usize> = (0..config.population_size)
            .map(|_| tournament(&population, config.tournament_size, &mut rng))
            .collect();
        let mut children: Vec<Vec<bool>> = Vec::with_capacity(config.population_size);
        for pair in parents.chunks(2) {
            let mut a = population[pair[0]].genome.bits().to_vec();
            let mut b = population[pair[1]].genome.bits().to_vec();
            if rng.gen_bool(config.crossover_prob) && len > 1 {
                let cut = rng.gen_range(1..len);
                a[cut..].swap_with_slice(&mut b[cut..]);
            }
            children.push(a);
            children.push(b);
        }
        for child in &mut children {
            for bit in child.iter_mut() {
                if rng.gen_bool(p_mut) {
                    *bit = !*bit;
                }
            }
        }
        let child_genomes = children
            .into_iter()
            .map(|bits| Genome::new(n_qubits, bits))
            .collect::<Result<Vec<_>>>()?;
        let child_objs = evaluator.run(&child_genomes);

        let mut merged = population;
        merged.extend(
            child_genomes
                .into_iter()
                .zip(child_objs)
                .map(|(genome, objectives)| Individual {
                    genome,
                    objectives,
                    rank: 0,
                    crowding: 0.0,
                    generation_found: generation,
                }),
        );
        population = environmental_selection(merged, config.population_size);

        let s = stats(generation, &population);
        if s.best_accuracy == last.best_accuracy && s.front_size == last.front_size {
            stagnant += 1;
        } else {
            stagnant = 0;
        }
        history.push(s);
    }

    Ok(EvolveResult {
        pareto_front: pareto_archive(&population),
        population,
        history,
        stop_reason,
        failed_evaluations: evaluator.failed,
    })
}
