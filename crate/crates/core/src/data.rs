//! Dataset ingestion, scaling, train/test splitting and feature-combination sampling.

use std::collections::HashSet;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, Axis as NdAxis};
use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, LoadError, Result};

/// Feature matrix with integer class ids.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub x: Array2<f64>,
    pub y: Vec<usize>,
    pub class_names: Vec<String>,
}

/// Which CSV column holds the label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

impl FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.trim().parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.trim().to_string()),
        })
    }
}

/// Reads a header-first, comma-separated file. Every non-label column must be
/// numeric. Class ids follow first appearance, unless `positive_class` is
/// given, in which case that class becomes id 1 and everything else id 0.
pub fn load_csv(path: impl AsRef<Path>, label: &LabelColumn, positive_class: Option<&str>) -> Result<Dataset> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv(&bytes, label, positive_class).map_err(|e| match e {
        Error::Load(LoadError::Empty(_)) => LoadError::Empty(path.to_path_buf()).into(),
        other => other,
    })
}

/// [`load_csv`] over an in-memory buffer.
pub fn parse_csv(bytes: &[u8], label: &LabelColumn, positive_class: Option<&str>) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| LoadError::Csv(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(LoadError::Empty("<input>".into()).into());
    }
    let label_idx = match label {
        LabelColumn::Name(name) => header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| LoadError::MissingLabelColumn(name.clone()))?,
        LabelColumn::Index(i) if *i < header.len() => *i,
        LabelColumn::Index(i) => return Err(LoadError::MissingLabelColumn(i.to_string()).into()),
    };
    let feature_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != label_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut values = Vec::new();
    let mut raw_labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| LoadError::Csv(e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != header.len() {
            return Err(LoadError::Ragged {
                line,
                expected: header.len(),
                found: record.len(),
            }
            .into());
        }
        for (i, field) in record.iter().enumerate() {
            if i == label_idx {
                raw_labels.push(field.to_string());
                continue;
            }
            let v: f64 = field
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| LoadError::Parse {
                    line,
                    column: header[i].clone(),
                    value: field.to_string(),
                })?;
            values.push(v);
        }
    }
    if raw_labels.is_empty() {
        return Err(LoadError::Empty("<input>".into()).into());
    }

    let (y, class_names) = match positive_class {
        Some(pos) => {
            if !raw_labels.iter().any(|l| l == pos) {
                return Err(LoadError::UnknownClass(pos.to_string()).into());
            }
            let others: Vec<&String> = {
                let mut seen = Vec::new();
                for l in raw_labels.iter().filter(|l| *l != pos) {
                    if !seen.contains(&l) {
                        seen.push(l);
                    }
                }
                seen
            };
            let negative = match others.as_slice() {
                [only] => (*only).clone(),
                _ => format!("not_{pos}"),
            };
            let y = raw_labels.iter().map(|l| usize::from(l == pos)).collect();
            (y, vec![negative, pos.to_string()])
        }
        None => {
            let mut names: Vec<String> = Vec::new();
            let y = raw_labels
                .iter()
                .map(|l| match names.iter().position(|n| n == l) {
                    Some(i) => i,
                    None => {
                        names.push(l.clone());
                        names.len() - 1
                    }
                })
                .collect();
            (y, names)
        }
    };
    let x = Array2::from_shape_vec((raw_labels.len(), feature_names.len()), values)
        .map_err(|e| LoadError::Csv(e.to_string()))?;
    Ok(Dataset {
        feature_names,
        x,
        y,
        class_names,
    })
}

impl Dataset {
    pub fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_names.len()];
        for &c in &self.y {
            counts[c] += 1;
        }
        counts
    }

    /// Keeps only the given feature columns, in the given order.
    pub fn select_features(&self, features: &[usize]) -> Result<Dataset> {
        if let Some(&bad) = features.iter().find(|&&f| f >= self.n_features()) {
            return Err(Error::Config(format!(
                "feature index {bad} out of range for {} features",
                self.n_features()
            )));
        }
        Ok(Dataset {
            feature_names: features.iter().map(|&f| self.feature_names[f].clone()).collect(),
            x: self.x.select(NdAxis(1), features),
            y: self.y.clone(),
            class_names: self.class_names.clone(),
        })
    }

    pub fn subset(&self, rows: &[usize]) -> (Array2<f64>, Vec<usize>) {
        (
            self.x.select(NdAxis(0), rows),
            rows.iter().map(|&r| self.y[r]).collect(),
        )
    }

    pub fn materialize(&self, split: &Split) -> SplitData {
        let (x_train, y_train) = self.subset(&split.train);
        let (x_test, y_test) = self.subset(&split.test);
        SplitData {
            x_train,
            y_train,
            x_test,
            y_test,
        }
    }
}

/// Maps each column affinely onto `[lo, hi]`; constant columns map to `lo`.
pub fn minmax_scale_matrix(x: &Array2<f64>, lo: f64, hi: f64) -> Result<Array2<f64>> {
    if !(hi > lo) {
        return Err(Error::Config(format!("scaling range needs hi > lo, got [{lo}, {hi}]")));
    }
    let mut out = x.clone();
    for mut col in out.columns_mut() {
        let min = col.iter().copied().fold(f64::INFINITY, f64::min);
        let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = max - min;
        col.mapv_inplace(|v| {
            if span > 0.0 {
                if v == max {
                    hi
                } else {
                    lo + (v - min) / span * (hi - lo)
                }
            } else {
                lo
            }
        });
    }
    Ok(out)
}

pub fn minmax_scale(dataset: &Dataset, lo: f64, hi: f64) -> Result<Dataset> {
    Ok(Dataset {
        x: minmax_scale_matrix(&dataset.x, lo, hi)?,
        ..dataset.clone()
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitSpec {
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            n_train: 100,
            n_test: 50,
            seed: 0,
            stratified: true,
        }
    }
}

/// Sorted, disjoint row indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Materialized train/test matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitData {
    pub x_train: Array2<f64>,
    pub y_train: Vec<usize>,
    pub x_test: Array2<f64>,
    pub y_test: Vec<usize>,
}

/// Largest-remainder apportionment of `total` over `counts`.
fn apportion(total: usize, counts: &[usize]) -> Vec<usize> {
    let n: usize = counts.iter().sum();
    let mut quota: Vec<usize> = counts.iter().map(|&c| total * c / n).collect();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    // remainder of total*c/n, compared as integers
    order.sort_by_key(|&i| std::cmp::Reverse(total * counts[i] % n));
    let short = total - quota.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        quota[i] += 1;
    }
    quota
}

pub fn split(dataset: &Dataset, spec: &SplitSpec) -> Result<Split> {
    let n = dataset.n_rows();
    if spec.n_train == 0 || spec.n_test == 0 || spec.n_train + spec.n_test > n {
        return Err(Error::Split(format!(
            "cannot draw {} train + {} test rows from {n}",
            spec.n_train, spec.n_test
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (mut train, mut test) = if spec.stratified {
        let counts = dataset.class_counts();
        // apportion the drawn rows first, then the training share of each
        // class, so no class is asked for more rows than it has
        let drawn = apportion(spec.n_train + spec.n_test, &counts);
        let train_q = apportion(spec.n_train, &drawn);
        let mut train = Vec::with_capacity(spec.n_train);
        let mut test = Vec::with_capacity(spec.n_test);
        for class in 0..counts.len() {
            let mut rows: Vec<usize> = (0..n).filter(|&r| dataset.y[r] == class).collect();
            rows.shuffle(&mut rng);
            train.extend_from_slice(&rows[..train_q[class]]);
            test.extend_from_slice(&rows[train_q[class]..drawn[class]]);
        }
        (train, test)
    } else {
        let mut rows: Vec<usize> = (0..n).collect();
        rows.shuffle(&mut rng);
        (
            rows[..spec.n_train].to_vec(),
            rows[spec.n_train..spec.n_train + spec.n_test].to_vec(),
        )
    };
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc.saturating_mul((n - i) as u128) / (i as u128 + 1))
}

fn all_combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let Some(pos) = (0..k).rev().find(|&i| cur[i] != i + n - k) else {
            return out;
        };
        cur[pos] += 1;
        for i in pos + 1..k {
            cur[i] = cur[i - 1] + 1;
        }
    }
}

/// `count` distinct sorted `k`-subsets of `0..n_total`, deterministic per seed.
pub fn sample_feature_combos(n_total: usize, k: usize, count: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k == 0 || k > n_total {
        return Err(Error::Sampling(format!(
            "cannot choose {k} of {n_total} features"
        )));
    }
    let available = binomial(n_total, k);
    if count as u128 > available {
        return Err(Error::Sampling(format!(
            "asked for {count} combinations but only {available} exist"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if available <= 200_000 {
        let all = all_combinations(n_total, k);
        let picks = index::sample(&mut rng, all.len(), count);
        return Ok(picks.into_iter().map(|i| all[i].clone()).collect());
    }
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut combo = index::sample(&mut rng, n_total, k).into_vec();
        combo.sort_unstable();
        if seen.insert(combo.clone()) {
            out.push(combo);
        }
    }
    Ok(out)
}
