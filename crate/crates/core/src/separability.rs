//! Nearest-neighbour and distance-distribution separability indexes.
//!
//! * SI: fraction of points whose nearest neighbour has the same label.
//! * HMI: aggregate hypothesis margin `1/2 (|x - nearmiss(x)| - |x - nearhit(x)|)`.
//! * DSI: mean KS distance between intra-class and between-class distance sets.
//!
//! All indexes use the Euclidean metric on the points as stored. Use
//! [`LabeledPoints::scaled`] for the usual per-feature `[0, 1]` normalisation.

use ndarray::{Array2, ArrayView2, Axis as NdAxis};

use crate::data::minmax_scale_matrix;
use crate::error::{precondition, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledPoints {
    pub x: Array2<f64>,
    pub y: Vec<usize>,
}

impl LabeledPoints {
    pub fn new(x: Array2<f64>, y: Vec<usize>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(precondition(format!(
                "{} points but {} labels",
                x.nrows(),
                y.len()
            )));
        }
        Ok(Self { x, y })
    }

    /// Min-max scales every feature to `[0, 1]` first.
    pub fn scaled(x: &Array2<f64>, y: Vec<usize>) -> Result<Self> {
        Self::new(minmax_scale_matrix(x, 0.0, 1.0)?, y)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    fn classes(&self) -> Vec<usize> {
        let mut c = self.y.clone();
        c.sort_unstable();
        c.dedup();
        c
    }

    fn rows_where(&self, pred: impl Fn(usize) -> bool) -> Array2<f64> {
        let rows: Vec<usize> = (0..self.len()).filter(|&i| pred(self.y[i])).collect();
        self.x.select(NdAxis(0), &rows)
    }
}

fn euclid(a: ndarray::ArrayView1<f64>, b: ndarray::ArrayView1<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(u, v)| (u - v) * (u - v))
        .sum::<f64>()
        .sqrt()
}

fn distance_matrix(x: &Array2<f64>) -> Array2<f64> {
    let n = x.nrows();
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        for j in i + 1..n {
            let v = euclid(x.row(i), x.row(j));
            d[[i, j]] = v;
            d[[j, i]] = v;
        }
    }
    d
}

/// Index of the closest `j != i` satisfying `keep`, lowest index on ties.
fn nearest(d: &Array2<f64>, i: usize, keep: impl Fn(usize) -> bool) -> Option<usize> {
    let mut best: Option<usize> = None;
    for j in 0..d.ncols() {
        if j == i || !keep(j) {
            continue;
        }
        if best.is_none_or(|b| d[[i, j]] < d[[i, b]]) {
            best = Some(j);
        }
    }
    best
}

pub fn separability_index(data: &LabeledPoints) -> Result<f64> {
    if data.len() < 2 {
        return Err(precondition("separability index needs at least 2 instances"));
    }
    let d = distance_matrix(&data.x);
    let hits = (0..data.len())
        .filter(|&i| {
            let nn = nearest(&d, i, |_| true).expect("n >= 2");
            data.y[nn] == data.y[i]
        })
        .count();
    Ok(hits as f64 / data.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum HmiMode {
    #[default]
    Sum,
    Mean,
}

/// Per-instance hypothesis margins `1/2 (d(nearmiss) - d(nearhit))`.
pub fn hypothesis_margins(data: &LabeledPoints) -> Result<Vec<f64>> {
    let classes = data.classes();
    if classes.len() < 2 {
        return Err(precondition("hypothesis margin needs at least 2 classes"));
    }
    for &c in &classes {
        if data.y.iter().filter(|&&v| v == c).count() < 2 {
            return Err(precondition(format!(
                "class {c} has a single member, near-hit undefined"
            )));
        }
    }
    let d = distance_matrix(&data.x);
    Ok((0..data.len())
        .map(|i| {
            let hit = nearest(&d, i, |j| data.y[j] == data.y[i]).expect("class size >= 2");
            let miss = nearest(&d, i, |j| data.y[j] != data.y[i]).expect(">= 2 classes");
            0.5 * (d[[i, miss]] - d[[i, hit]])
        })
        .collect())
}

pub fn hypothesis_margin_index(data: &LabeledPoints, mode: HmiMode) -> Result<f64> {
    let margins = hypothesis_margins(data)?;
    let sum: f64 = margins.iter().sum();
    Ok(match mode {
        HmiMode::Sum => sum,
        HmiMode::Mean => sum / margins.len() as f64,
    })
}

/// Two-sample Kolmogorov-Smirnov statistic `sup_t |F_a(t) - F_b(t)|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(precondition("KS statistic needs two non-empty samples"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut sup: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        sup = sup.max((i as f64 / na - j as f64 / nb).abs());
    }
    // once one sample is exhausted the other ECDF only climbs towards 1
    Ok(sup.max((i as f64 / na - j as f64 / nb).abs()))
}

/// Pairwise distances within `x` (`|x|(|x|-1)/2` values).
pub fn intra_class_distances(x: ArrayView2<f64>) -> Vec<f64> {
    let n = x.nrows();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            out.push(euclid(x.row(i), x.row(j)));
        }
    }
    out
}

/// All distances between a row of `x` and a row of `y` (`|x||y|` values).
pub fn between_class_distances(x: ArrayView2<f64>, y: ArrayView2<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.nrows() * y.nrows());
    for a in x.rows() {
        for b in y.rows() {
            out.push(euclid(a, b));
        }
    }
    out
}

/// DSI of two point sets: mean of `KS(ICD_x, BCD)` and `KS(ICD_y, BCD)`.
pub fn dsi_two_class(x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<f64> {
    if x.nrows() < 2 || y.nrows() < 2 {
        return Err(precondition(format!(
            "DSI needs at least 2 points per class, got {} and {}",
            x.nrows(),
            y.nrows()
        )));
    }
    let bcd = between_class_distances(x, y);
    let sx = ks_statistic(&intra_class_distances(x), &bcd)?;
    let sy = ks_statistic(&intra_class_distances(y), &bcd)?;
    Ok((sx + sy) / 2.0)
}

/// Multiclass DSI: mean over classes of the one-vs-rest two-class DSI.
pub fn dsi(data: &LabeledPoints) -> Result<f64> {
    let classes = data.classes();
    if classes.len() < 2 {
        return Err(precondition("DSI needs at least 2 classes"));
    }
    if classes.len() == 2 {
        let a = data.rows_where(|c| c == classes[0]);
        let b = data.rows_where(|c| c == classes[1]);
        return dsi_two_class(a.view(), b.view());
    }
    let mut total = 0.0;
    for &c in &classes {
        let own = data.rows_where(|v| v == c);
        let rest = data.rows_where(|v| v != c);
        total += dsi_two_class(own.view(), rest.view())?;
    }
    Ok(total / classes.len() as f64)
}

/// The three indexes for one point set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeparabilityReport {
    pub si: f64,
    pub hmi: f64,
    pub dsi: f64,
}

impl SeparabilityReport {
    pub fn compute(data: &LabeledPoints, mode: HmiMode) -> Result<Self> {
        Ok(Self {
            si: separability_index(data)?,
            hmi: hypothesis_margin_index(data, mode)?,
            dsi: dsi(data)?,
        })
    }
}
