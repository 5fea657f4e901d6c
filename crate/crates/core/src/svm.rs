//! Soft-margin SVM trained on a precomputed kernel.
//!
//! The dual
//!
//! ```text
//! max  sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K_ij
//! s.t. sum_i a_i y_i = 0,  0 <= a_i <= C
//! ```
//!
//! is solved by sequential minimal optimization: each step picks the most
//! violating pair with second-order working-set selection and solves the
//! two-variable subproblem analytically. The decision function is
//! `f(x) = sum_i a_i y_i K(x_i, x) + b`.

use std::collections::BTreeSet;

use crate::error::{precondition, Error, Result};
use crate::kernel::KernelMatrix;

const TAU: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    /// Box constraint.
    pub c: f64,
    /// Stop once the maximal KKT violation gap drops below this.
    pub tolerance: f64,
    /// Consecutive pair updates that fail to move any multiplier before the
    /// solver gives up.
    pub max_passes: usize,
    pub max_iterations: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            tolerance: 1e-3,
            max_passes: 10,
            max_iterations: 1_000_000,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("C must be positive, got {}", self.c)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_passes == 0 || self.max_iterations == 0 {
            return Err(Error::Config(
                "max_passes and max_iterations must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// A trained binary classifier.
#[derive(Clone, Debug, PartialEq)]
pub struct SvmModel {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub support_indices: Vec<usize>,
    pub train_labels: Vec<f64>,
    pub c: f64,
    /// Pair updates performed by the solver.
    pub iterations: usize,
}

impl SvmModel {
    /// Dual objective `sum a - 1/2 a^T Q a` of this model's multipliers.
    pub fn dual_objective(&self, gram: &KernelMatrix) -> f64 {
        dual_objective(gram, &self.train_labels, &self.alphas)
    }
}

/// Dual objective for arbitrary multipliers.
pub fn dual_objective(gram: &KernelMatrix, y: &[f64], alphas: &[f64]) -> f64 {
    let n = alphas.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alphas[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            quad += alphas[i] * alphas[j] * y[i] * y[j] * gram.get(i, j);
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

fn check_labels(y: &[f64]) -> Result<()> {
    if let Some(bad) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
        return Err(precondition(format!("binary labels must be +1 or -1, got {bad}")));
    }
    if !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Err(Error::Training("training labels contain a single class".into()));
    }
    Ok(())
}

/// Trains a binary SVM on the Gram matrix `gram` with labels in `{-1, +1}`.
pub fn train_dual(gram: &KernelMatrix, y: &[f64], config: &TrainConfig) -> Result<SvmModel> {
    config.validate()?;
    if !gram.is_square() {
        return Err(precondition(format!(
            "Gram matrix must be square, got {}x{}",
            gram.rows(),
            gram.cols()
        )));
    }
    if gram.rows() != y.len() {
        return Err(precondition(format!(
            "{} labels for a {}-row Gram matrix",
            y.len(),
            gram.rows()
        )));
    }
    check_labels(y)?;
    // Solve in a fixed label orientation so that negating every label yields
    // exactly the mirrored model.
    if y[0] < 0.0 {
        let flipped: Vec<f64> = y.iter().map(|v| -v).collect();
        let mut model = solve(gram, &flipped, config);
        model.bias = -model.bias;
        model.train_labels = y.to_vec();
        return Ok(model);
    }
    Ok(solve(gram, y, config))
}

fn solve(gram: &KernelMatrix, y: &[f64], config: &TrainConfig) -> SvmModel {
    let n = y.len();
    let c = config.c;
    let k = |i: usize, j: usize| gram.get(i, j);
    let mut alpha = vec![0.0; n];
    // gradient of 1/2 a^T Q a - e^T a
    let mut grad = vec![-1.0; n];
    let mut iterations = 0;
    let mut stalled = 0;

    let in_up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let in_low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);

    while iterations < config.max_iterations {
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            if in_up(alpha[t], y[t]) && -y[t] * grad[t] >= gmax {
                if -y[t] * grad[t] > gmax || i_sel.is_none() {
                    gmax = -y[t] * grad[t];
                    i_sel = Some(t);
                }
            }
        }
        let Some(i) = i_sel else { break };

        let mut gmin = f64::INFINITY;
        let mut j_sel = None;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !in_low(alpha[t], y[t]) {
                continue;
            }
            let v = -y[t] * grad[t];
            gmin = gmin.min(v);
            let b = gmax - v;
            if b > 0.0 {
                let mut a = k(i, i) + k(t, t) - 2.0 * k(i, t);
                if a <= 0.0 {
                    a = TAU;
                }
                let score = -(b * b) / a;
                if score < best {
                    best = score;
                    j_sel = Some(t);
                }
            }
        }
        if gmax - gmin < config.tolerance {
            break;
        }
        let Some(j) = j_sel else { break };
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let mut quad = k(i, i) + k(j, j) - 2.0 * k(i, j);
        if quad <= 0.0 {
            quad = TAU;
        }
        let (mut ai, mut aj) = (old_i, old_j);
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        alpha[i] = ai.clamp(0.0, c);
        alpha[j] = aj.clamp(0.0, c);

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        if di == 0.0 && dj == 0.0 {
            stalled += 1;
            if stalled >= config.max_passes {
                break;
            }
            continue;
        }
        stalled = 0;
        for t in 0..n {
            grad[t] += y[t] * (y[i] * k(t, i) * di + y[j] * k(t, j) * dj);
        }
    }

    let bias = -offset(&alpha, &grad, y, c);
    let threshold = 1e-10 * c;
    let support_indices = (0..n).filter(|&i| alpha[i] > threshold).collect();
    SvmModel {
        alphas: alpha,
        bias,
        support_indices,
        train_labels: y.to_vec(),
        c,
        iterations,
    }
}

/// Offset `rho` (with `b = -rho`): mean of `y G` over free multipliers, or the
/// midpoint of the feasible interval when every multiplier sits at a bound.
fn offset(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0);
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    if free > 0 {
        sum_free / free as f64
    } else {
        (ub + lb) / 2.0
    }
}

/// `f(x) = sum_i a_i y_i K(x_i, x) + b` for each row of `cross` (test x train).
pub fn decision_values(model: &SvmModel, cross: &KernelMatrix) -> Result<Vec<f64>> {
    if cross.cols() != model.alphas.len() {
        return Err(precondition(format!(
            "cross kernel has {} columns, model was trained on {} rows",
            cross.cols(),
            model.alphas.len()
        )));
    }
    Ok((0..cross.rows())
        .map(|r| {
            model
                .support_indices
                .iter()
                .map(|&i| model.alphas[i] * model.train_labels[i] * cross.get(r, i))
                .sum::<f64>()
                + model.bias
        })
        .collect())
}

/// Sign of the decision values; an exact zero maps to `+1`.
pub fn predict(model: &SvmModel, cross: &KernelMatrix) -> Result<Vec<f64>> {
    Ok(decision_values(model, cross)?
        .into_iter()
        .map(|v| if v >= 0.0 { 1.0 } else { -1.0 })
        .collect())
}

/// Fraction of positions where `pred` equals `truth`.
pub fn accuracy<T: PartialEq>(pred: &[T], truth: &[T]) -> Result<f64> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(precondition(format!(
            "accuracy needs equal non-empty lengths, got {} and {}",
            pred.len(),
            truth.len()
        )));
    }
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / pred.len() as f64)
}

/// One binary machine of a one-vs-one ensemble: `positive` maps to `+1`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairwiseModel {
    pub negative: usize,
    pub positive: usize,
    /// Training-row indices used by this machine.
    pub rows: Vec<usize>,
    pub model: SvmModel,
}

/// One-vs-one voting ensemble over class ids.
#[derive(Clone, Debug, PartialEq)]
pub struct MulticlassSvm {
    pub classes: Vec<usize>,
    pub machines: Vec<PairwiseModel>,
}

/// Trains one binary machine per class pair on that pair's rows.
pub fn train_multiclass(gram: &KernelMatrix, y: &[usize], config: &TrainConfig) -> Result<MulticlassSvm> {
    if gram.rows() != y.len() || !gram.is_square() {
        return Err(precondition(format!(
            "{} labels for a {}x{} Gram matrix",
            y.len(),
            gram.rows(),
            gram.cols()
        )));
    }
    let classes: Vec<usize> = y.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    if classes.len() < 2 {
        return Err(Error::Training("training labels contain a single class".into()));
    }
    let mut machines = Vec::new();
    for (a_pos, &negative) in classes.iter().enumerate() {
        for &positive in &classes[a_pos + 1..] {
            let rows: Vec<usize> = (0..y.len())
                .filter(|&r| y[r] == negative || y[r] == positive)
                .collect();
            let labels: Vec<f64> = rows
                .iter()
                .map(|&r| if y[r] == positive { 1.0 } else { -1.0 })
                .collect();
            let sub = gram.select(&rows, &rows);
            let model = train_dual(&sub, &labels, config)?;
            machines.push(PairwiseModel {
                negative,
                positive,
                rows,
                model,
            });
        }
    }
    Ok(MulticlassSvm { classes, machines })
}

impl MulticlassSvm {
    /// Majority vote over the pairwise machines. Vote ties go to the class
    /// with the larger summed decision magnitude, then to the lower class id.
    pub fn predict(&self, cross: &KernelMatrix) -> Result<Vec<usize>> {
        let n_classes = self.classes.len();
        let mut votes = vec![vec![0usize; n_classes]; cross.rows()];
        let mut margin = vec![vec![0.0f64; n_classes]; cross.rows()];
        let slot = |class: usize| self.classes.iter().position(|&c| c == class).expect("known class");
        let all_rows: Vec<usize> = (0..cross.rows()).collect();
        for m in &self.machines {
            if let Some(&max_row) = m.rows.iter().max() {
                if max_row >= cross.cols() {
                    return Err(precondition(format!(
                        "cross kernel has {} columns, ensemble needs {}",
                        cross.cols(),
                        max_row + 1
                    )));
                }
            }
            let sub = cross.select(&all_rows, &m.rows);
            for (r, v) in decision_values(&m.model, &sub)?.into_iter().enumerate() {
                let winner = if v >= 0.0 { m.positive } else { m.negative };
                votes[r][slot(winner)] += 1;
                margin[r][slot(winner)] += v.abs();
            }
        }
        Ok((0..cross.rows())
            .map(|r| {
                let mut best = 0;
                for s in 1..n_classes {
                    let better = votes[r][s] > votes[r][best]
                        || (votes[r][s] == votes[r][best] && margin[r][s] > margin[r][best]);
                    if better {
                        best = s;
                    }
                }
                self.classes[best]
            })
            .collect())
    }
}
