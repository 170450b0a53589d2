//! From per-domain orbit count matrices to fixed-length feature vectors:
//! non-zero column filter, graphlet correlation matrix (GCM), strict upper
//! triangle flattening and PCA.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use ndarray::{Array1, Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fmt::{float, join_floats, parse_float, parse_int};
use crate::graphlets::Gdvm;
use crate::linalg::symmetric_eigen;
use crate::{Error, Real, Result};

pub const DEFAULT_RETAIN: f64 = 0.90;
const EIGEN_TOL: f64 = 1e-10;
const ZERO_EIGEN_REL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correlation {
    /// Rank correlation with average ranks for ties.
    #[default]
    Spearman,
    Pearson,
}

impl FromStr for Correlation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "spearman" => Ok(Self::Spearman),
            "pearson" => Ok(Self::Pearson),
            _ => Err(Error::InvalidArgument(format!("unknown correlation {s:?}"))),
        }
    }
}

impl fmt::Display for Correlation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Spearman => "spearman",
            Self::Pearson => "pearson",
        })
    }
}

/// Where PCA is fitted: on the whole dataset before cross-validation, or on
/// each outer training split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PcaScope {
    #[default]
    Dataset,
    Fold,
}

impl FromStr for PcaScope {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dataset" => Ok(Self::Dataset),
            "fold" => Ok(Self::Fold),
            _ => Err(Error::InvalidArgument(format!("unknown PCA scope {s:?}"))),
        }
    }
}

impl fmt::Display for PcaScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Dataset => "dataset",
            Self::Fold => "fold",
        })
    }
}

// ---------------------------------------------------------------------------
// Column filter

/// Orbit columns that are non-zero somewhere in the corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnFilter {
    pub kept: Vec<usize>,
}

impl ColumnFilter {
    pub fn fit(corpus: &[Gdvm]) -> Result<Self> {
        let first = corpus
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty corpus".into()))?;
        let cols = first.cols;
        let mut any = vec![false; cols];
        for m in corpus {
            if m.cols != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    got: m.cols,
                });
            }
            for (i, &v) in m.counts.iter().enumerate() {
                if v != 0 {
                    any[i % cols] = true;
                }
            }
        }
        let kept: Vec<usize> = (0..cols).filter(|&c| any[c]).collect();
        if kept.is_empty() {
            return Err(Error::Corpus("every orbit column is zero across the corpus".into()));
        }
        Ok(Self { kept })
    }

    pub fn len(&self) -> usize {
        self.kept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kept.is_empty()
    }

    pub fn apply<T: Real>(&self, m: &Gdvm) -> Result<Array2<T>> {
        if let Some(&last) = self.kept.last() {
            if last >= m.cols {
                return Err(Error::DimensionMismatch {
                    expected: last + 1,
                    got: m.cols,
                });
            }
        }
        Ok(Array2::from_shape_fn((m.rows, self.kept.len()), |(r, c)| {
            T::from_u64(m.get(r, self.kept[c])).expect("count fits scalar")
        }))
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "COLS v1 {}", self.kept.len())?;
        let idx: Vec<String> = self.kept.iter().map(|i| i.to_string()).collect();
        writeln!(out, "{}", idx.join(" "))?;
        Ok(())
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 3 || h[0] != "COLS" || h[1] != "v1" {
            return Err(Error::Format(format!("bad COLS header {header:?}")));
        }
        let count: usize = parse_int(h[2], "column count")?;
        let body = lines.next().transpose()?.unwrap_or_default();
        let kept = body
            .split_whitespace()
            .map(|s| parse_int(s, "column index"))
            .collect::<Result<Vec<usize>>>()?;
        if kept.len() != count || !kept.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Format("COLS indices malformed".into()));
        }
        Ok(Self { kept })
    }
}

// ---------------------------------------------------------------------------
// GCM

/// Symmetric correlation matrix between orbit columns, unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Gcm<T> {
    pub matrix: Array2<T>,
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks<T: Real>(values: &[T]) -> Vec<T> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values").then(a.cmp(&b)));
    let mut ranks = vec![T::zero(); n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j share rank ((i+1) + (j+1)) / 2
        let r = T::from_count(i + j + 2) / T::lit(2.0);
        for &o in &order[i..=j] {
            ranks[o] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Pairwise correlation between the columns of `m` (rows are nodes).
/// Constant columns correlate 0 with every other column.
pub fn compute_gcm<T: Real>(m: &Array2<T>, kind: Correlation) -> Result<Gcm<T>> {
    let (n, c) = m.dim();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("GCM needs at least 2 rows, got {n}")));
    }
    let mut cols: Vec<Vec<T>> = (0..c).map(|j| m.column(j).to_vec()).collect();
    let constant: Vec<bool> = cols.iter().map(|v| v.iter().all(|&x| x == v[0])).collect();
    if kind == Correlation::Spearman {
        for v in cols.iter_mut() {
            *v = average_ranks(v);
        }
    }
    let nn = T::from_count(n);
    let mut norms = vec![T::zero(); c];
    for (j, v) in cols.iter_mut().enumerate() {
        let mean = v.iter().copied().sum::<T>() / nn;
        for x in v.iter_mut() {
            *x -= mean;
        }
        norms[j] = v.iter().map(|&x| x * x).sum::<T>().sqrt();
    }
    let mut g = Array2::<T>::zeros((c, c));
    for a in 0..c {
        g[[a, a]] = T::one();
        for b in a + 1..c {
            let r = if constant[a] || constant[b] {
                T::zero()
            } else {
                let dot: T = cols[a].iter().zip(&cols[b]).map(|(&x, &y)| x * y).sum();
                (dot / (norms[a] * norms[b])).max(-T::one()).min(T::one())
            };
            g[[a, b]] = r;
            g[[b, a]] = r;
        }
    }
    Ok(Gcm { matrix: g })
}

/// Strict upper triangle in row-major order; length `c(c-1)/2`.
pub fn flatten_upper<T: Real>(gcm: &Gcm<T>) -> Vec<T> {
    let c = gcm.matrix.nrows();
    let mut out = Vec::with_capacity(c * c.saturating_sub(1) / 2);
    for a in 0..c {
        for b in a + 1..c {
            out.push(gcm.matrix[[a, b]]);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// PCA

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel<T> {
    pub mean: Array1<T>,
    /// `d × input_dim`, orthonormal rows.
    pub components: Array2<T>,
    /// Explained-variance ratio of every non-zero component, descending;
    /// the first `d` are kept.
    pub explained_variance_ratio: Vec<T>,
}

impl<T: Real> PcaModel<T> {
    pub fn d(&self) -> usize {
        self.components.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn retained_variance(&self) -> T {
        self.explained_variance_ratio[..self.d()].iter().copied().sum()
    }

    pub fn transform(&self, x: &Array2<T>) -> Result<Array2<T>> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.ncols(),
            });
        }
        let centered = x - &self.mean.view().insert_axis(Axis(0));
        Ok(centered.dot(&self.components.t()))
    }

    pub fn reconstruct(&self, z: &Array2<T>) -> Array2<T> {
        z.dot(&self.components) + &self.mean.view().insert_axis(Axis(0))
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "PCA v1 {} {}", self.d(), self.input_dim())?;
        writeln!(out, "MEAN {}", join_floats(self.mean.as_slice().expect("contiguous")))?;
        writeln!(out, "RATIOS {}", join_floats(&self.explained_variance_ratio))?;
        for row in self.components.rows() {
            writeln!(out, "COMP {}", join_floats(&row.to_vec()))?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 4 || h[0] != "PCA" || h[1] != "v1" {
            return Err(Error::Format(format!("bad PCA header {header:?}")));
        }
        let d: usize = parse_int(h[2], "d")?;
        let dim: usize = parse_int(h[3], "input dim")?;
        let mut tagged = |tag: &str| -> Result<Vec<T>> {
            let line = lines.next().transpose()?.unwrap_or_default();
            let mut parts = line.split_whitespace();
            if parts.next() != Some(tag) {
                return Err(Error::Format(format!("expected {tag} line")));
            }
            parts.map(parse_float).collect()
        };
        let mean = tagged("MEAN")?;
        let ratios = tagged("RATIOS")?;
        let mut comps = Vec::with_capacity(d * dim);
        for _ in 0..d {
            let row = tagged("COMP")?;
            if row.len() != dim {
                return Err(Error::Format("component length mismatch".into()));
            }
            comps.extend(row);
        }
        if mean.len() != dim || ratios.len() < d {
            return Err(Error::Format("PCA vectors malformed".into()));
        }
        Ok(Self {
            mean: Array1::from(mean),
            components: Array2::from_shape_vec((d, dim), comps).expect("shape checked"),
            explained_variance_ratio: ratios,
        })
    }
}

/// Mean-centred PCA through the eigendecomposition of the `i × i` Gram
/// matrix. Keeps the fewest leading components whose cumulative
/// explained-variance ratio reaches `retain`.
pub fn fit_pca<T: Real>(x: &Array2<T>, retain: T) -> Result<PcaModel<T>> {
    let (i, dim) = x.dim();
    if i < 2 {
        return Err(Error::InvalidArgument(format!("PCA needs at least 2 rows, got {i}")));
    }
    if !(retain > T::zero() && retain <= T::one()) {
        return Err(Error::InvalidArgument(format!("retain fraction {retain} outside (0, 1]")));
    }
    let mean = x.mean_axis(Axis(0)).expect("non-empty");
    let centered = x - &mean.view().insert_axis(Axis(0));
    let gram = centered.dot(&centered.t());
    let trace: T = (0..i).map(|k| gram[[k, k]]).sum();
    if !(trace > T::zero()) {
        return Err(Error::Numerical("zero total variance".into()));
    }
    let eig = symmetric_eigen(&gram, T::lit(EIGEN_TOL))?;
    let floor = T::lit(ZERO_EIGEN_REL) * trace;
    let positive: Vec<usize> = (0..i).filter(|&k| eig.values[k] > floor).collect();
    let ratios: Vec<T> = positive.iter().map(|&k| eig.values[k] / trace).collect();

    let slack = T::lit(1e-12);
    let mut d = ratios.len();
    let mut cum = T::zero();
    for (k, &r) in ratios.iter().enumerate() {
        cum += r;
        if cum >= retain - slack {
            d = k + 1;
            break;
        }
    }

    let mut components = Array2::<T>::zeros((d, dim));
    for (row, &k) in positive.iter().take(d).enumerate() {
        let u = eig.vectors.column(k);
        let mut v = centered.t().dot(&u);
        let scale = eig.values[k].sqrt();
        v.mapv_inplace(|a| a / scale);
        // renormalize and fix the sign: largest-magnitude entry positive
        let norm = v.iter().map(|&a| a * a).sum::<T>().sqrt();
        let pivot = v
            .iter()
            .enumerate()
            .fold((0, T::zero()), |best, (j, &a)| if a.abs() > best.1 { (j, a.abs()) } else { best })
            .0;
        let sign = if v[pivot] < T::zero() { -T::one() } else { T::one() };
        v.mapv_inplace(|a| sign * a / norm);
        components.row_mut(row).assign(&v);
    }
    Ok(PcaModel {
        mean,
        components,
        explained_variance_ratio: ratios,
    })
}

// ---------------------------------------------------------------------------
// Whole pipeline

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub correlation: Correlation,
    pub retain: f64,
    pub scope: PcaScope,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            correlation: Correlation::Spearman,
            retain: DEFAULT_RETAIN,
            scope: PcaScope::Dataset,
        }
    }
}

/// Rows keyed by domain id. With [`PcaScope::Dataset`] `matrix` is the
/// `i × d` PCA projection; with [`PcaScope::Fold`] it is the flattened GCM
/// matrix and `pca` is `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet<T> {
    pub ids: Vec<String>,
    pub matrix: Array2<T>,
    pub filter: ColumnFilter,
    pub pca: Option<PcaModel<T>>,
}

/// Filtered, flattened GCM vectors stacked in corpus order.
pub fn flattened_gcms<T: Real>(corpus: &[Gdvm], filter: &ColumnFilter, kind: Correlation) -> Result<Array2<T>> {
    let c = filter.len();
    let width = c * c.saturating_sub(1) / 2;
    let rows: Vec<Vec<T>> = corpus
        .par_iter()
        .map(|m| {
            let filtered = filter.apply::<T>(m)?;
            Ok(flatten_upper(&compute_gcm(&filtered, kind)?))
        })
        .collect::<Result<_>>()?;
    let mut out = Array2::<T>::zeros((corpus.len(), width));
    for (r, row) in rows.into_iter().enumerate() {
        out.row_mut(r).assign(&Array1::from(row));
    }
    Ok(out)
}

pub fn apply_pipeline<T: Real>(corpus: &[Gdvm], cfg: &PipelineConfig) -> Result<FeatureSet<T>> {
    let filter = ColumnFilter::fit(corpus)?;
    let flat = flattened_gcms::<T>(corpus, &filter, cfg.correlation)?;
    let ids = corpus.iter().map(|m| m.id.clone()).collect();
    match cfg.scope {
        PcaScope::Dataset => {
            let pca = fit_pca(&flat, T::lit(cfg.retain))?;
            let matrix = pca.transform(&flat)?;
            Ok(FeatureSet {
                ids,
                matrix,
                filter,
                pca: Some(pca),
            })
        }
        PcaScope::Fold => Ok(FeatureSet {
            ids,
            matrix: flat,
            filter,
            pca: None,
        }),
    }
}

pub fn write_features<T: Real, W: Write>(mut out: W, ids: &[String], matrix: &Array2<T>) -> Result<()> {
    writeln!(out, "FEAT v1 {} {}", matrix.nrows(), matrix.ncols())?;
    let mut line = String::new();
    for (id, row) in ids.iter().zip(matrix.rows()) {
        line.clear();
        line.push_str(id);
        for &v in row {
            line.push(' ');
            line.push_str(&float(v));
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

pub fn read_features<T: Real, R: BufRead>(input: R) -> Result<(Vec<String>, Array2<T>)> {
    let mut lines = input.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 4 || h[0] != "FEAT" || h[1] != "v1" {
        return Err(Error::Format(format!("bad FEAT header {header:?}")));
    }
    let rows: usize = parse_int(h[2], "rows")?;
    let cols: usize = parse_int(h[3], "cols")?;
    let mut ids = Vec::with_capacity(rows);
    let mut data = Vec::with_capacity(rows * cols);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        ids.push(parts.next().unwrap_or_default().to_string());
        let before = data.len();
        for p in parts {
            data.push(parse_float(p)?);
        }
        if data.len() - before != cols {
            return Err(Error::Format(format!("feature row has {} values, expected {cols}", data.len() - before)));
        }
    }
    if ids.len() != rows {
        return Err(Error::Format(format!("expected {rows} feature rows, found {}", ids.len())));
    }
    Ok((ids, Array2::from_shape_vec((rows, cols), data).expect("shape checked")))
}
