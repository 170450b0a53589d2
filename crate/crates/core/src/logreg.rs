//! One-vs-rest L2-regularized logistic regression with nested selection of
//! the regularization strength.
//!
//! The binary objective is
//!
//! ```text
//! f(w, b) = mean_i [softplus(z_i) - y_i z_i] + l2 * |w|^2 / 2,   z_i = w.x_i + b
//! ```
//!
//! minimized from zero by damped Newton steps with Armijo backtracking; the
//! bias is not penalized.

use std::io::{BufRead, Write};

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;

use crate::evaluation::stratified_folds;
use crate::fmt::{float, join_floats, parse_float, parse_int};
use crate::linalg::cholesky_solve;
use crate::{Error, Real, Result};

pub const MAX_ITERATIONS: usize = 1000;
pub const GRADIENT_TOL: f64 = 1e-6;
const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-20;

/// `n` values log-spaced over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
        .collect()
}

/// Nine strengths from 1e-4 to 1e4, one per decade.
pub fn default_l2_grid() -> Vec<f64> {
    log_grid(1e-4, 1e4, 9)
}

pub fn sigmoid<T: Real>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

fn softplus<T: Real>(z: T) -> T {
    z.max(T::zero()) + (-z.abs()).exp().ln_1p()
}

/// Per-dimension centring and scaling fitted on training rows. Constant
/// dimensions keep scale 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer<T> {
    pub mean: Array1<T>,
    pub scale: Array1<T>,
}

impl<T: Real> Standardizer<T> {
    pub fn fit(x: ArrayView2<T>) -> Self {
        let n = T::from_count(x.nrows().max(1));
        let mean = x.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(x.ncols()));
        let scale = Array1::from_iter((0..x.ncols()).map(|j| {
            let var = x.column(j).iter().map(|&v| (v - mean[j]).powi(2)).sum::<T>() / n;
            if var > T::zero() {
                var.sqrt()
            } else {
                T::one()
            }
        }));
        Self { mean, scale }
    }

    pub fn apply(&self, x: ArrayView2<T>) -> Array2<T> {
        (&x - &self.mean.view().insert_axis(Axis(0))) / &self.scale.view().insert_axis(Axis(0))
    }

    pub fn apply_row(&self, x: ArrayView1<T>) -> Array1<T> {
        (&x - &self.mean) / &self.scale
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryLrModel<T> {
    pub target: String,
    pub weights: Array1<T>,
    pub bias: T,
    pub l2: T,
    pub iterations: usize,
    /// Gradient norm reached the tolerance (otherwise the iteration cap or
    /// a stalled line search stopped training).
    pub converged: bool,
    pub trained: bool,
}

impl<T: Real> BinaryLrModel<T> {
    pub fn untrained(target: impl Into<String>, d: usize, l2: T) -> Self {
        Self {
            target: target.into(),
            weights: Array1::zeros(d),
            bias: T::zero(),
            l2,
            iterations: 0,
            converged: false,
            trained: false,
        }
    }

    pub fn decision(&self, x: ArrayView1<T>) -> T {
        self.weights.dot(&x) + self.bias
    }

    pub fn probability(&self, x: ArrayView1<T>) -> T {
        sigmoid(self.decision(x))
    }
}

pub fn objective<T: Real>(x: ArrayView2<T>, y: &[bool], w: ArrayView1<T>, b: T, l2: T) -> T {
    let z = x.dot(&w);
    let n = T::from_count(x.nrows());
    let loss: T = z
        .iter()
        .zip(y)
        .map(|(&zi, &yi)| {
            let zi = zi + b;
            softplus(zi) - if yi { zi } else { T::zero() }
        })
        .sum();
    loss / n + l2 * w.dot(&w) / T::lit(2.0)
}

/// Gradient with respect to `(w, b)`.
pub fn gradient<T: Real>(x: ArrayView2<T>, y: &[bool], w: ArrayView1<T>, b: T, l2: T) -> (Array1<T>, T) {
    let n = T::from_count(x.nrows());
    let resid = Array1::from_iter(
        x.dot(&w)
            .iter()
            .zip(y)
            .map(|(&z, &yi)| (sigmoid(z + b) - if yi { T::one() } else { T::zero() }) / n),
    );
    let gw = x.t().dot(&resid) + &w.mapv(|v| v * l2);
    (gw, resid.sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace<T> {
    /// Objective at the start and after every accepted step.
    pub objective: Vec<T>,
    pub gradient_norm: T,
}

pub fn train_binary<T: Real>(
    x: ArrayView2<T>,
    y: &[bool],
    l2: T,
    target: &str,
) -> Result<(BinaryLrModel<T>, TrainTrace<T>)> {
    let (n, d) = x.dim();
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.len() });
    }
    if n < 2 || y.iter().all(|&v| v) || y.iter().all(|&v| !v) {
        return Err(Error::DegenerateTargets);
    }
    if !(l2 > T::zero()) {
        return Err(Error::InvalidArgument(format!("l2 must be positive, got {l2}")));
    }
    let mut model = BinaryLrModel::untrained(target, d, l2);
    let nn = T::from_count(n);
    let mut f = objective(x, y, model.weights.view(), model.bias, l2);
    let mut trace = vec![f];
    let mut gnorm = T::infinity();
    let tol = T::lit(GRADIENT_TOL);

    for it in 0..MAX_ITERATIONS {
        let (gw, gb) = gradient(x, y, model.weights.view(), model.bias, l2);
        gnorm = (gw.dot(&gw) + gb * gb).sqrt();
        model.iterations = it;
        if gnorm <= tol {
            model.converged = true;
            break;
        }
        let mut g = Array1::zeros(d + 1);
        g.slice_mut(ndarray::s![..d]).assign(&gw);
        g[d] = gb;

        // Hessian over the augmented design [x | 1]
        let z = x.dot(&model.weights);
        let mut h = Array2::<T>::zeros((d + 1, d + 1));
        let mut xa = Array2::<T>::ones((n, d + 1));
        xa.slice_mut(ndarray::s![.., ..d]).assign(&x);
        let wts = Array1::from_iter(z.iter().map(|&zi| {
            let p = sigmoid(zi + model.bias);
            p * (T::one() - p) / nn
        }));
        let weighted = &xa * &wts.view().insert_axis(Axis(1));
        h += &xa.t().dot(&weighted);
        for j in 0..d {
            h[[j, j]] += l2;
        }
        let neg_g = g.mapv(|v| -v);
        let dir = match cholesky_solve(&h, &neg_g) {
            Some(step) if step.dot(&g) < T::zero() => step,
            _ => neg_g,
        };
        let slope = g.dot(&dir);
        let mut s = T::one();
        let mut accepted = false;
        while s > T::lit(MIN_STEP) {
            let w_new = &model.weights + &dir.slice(ndarray::s![..d]).mapv(|v| v * s);
            let b_new = model.bias + dir[d] * s;
            let f_new = objective(x, y, w_new.view(), b_new, l2);
            if f_new <= f + T::lit(ARMIJO) * s * slope {
                model.weights = w_new;
                model.bias = b_new;
                f = f_new;
                accepted = true;
                break;
            }
            s = s / T::lit(2.0);
        }
        if !accepted {
            // no representable decrease left
            break;
        }
        trace.push(f);
        model.iterations = it + 1;
    }
    if model.weights.iter().any(|v| !v.is_finite()) || !model.bias.is_finite() {
        return Err(Error::Numerical(format!("non-finite weights training {target}")));
    }
    model.trained = true;
    Ok((
        model,
        TrainTrace {
            objective: trace,
            gradient_norm: gnorm,
        },
    ))
}

/// One binary model per class, classes in lexicographic order, sharing a
/// standardizer fitted on the training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct OvrModel<T> {
    pub classes: Vec<String>,
    pub standardizer: Standardizer<T>,
    pub models: Vec<BinaryLrModel<T>>,
    pub l2: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction<T> {
    pub class: usize,
    pub label: String,
    pub scores: Vec<T>,
}

/// Index of the largest score; the first (lexicographically smallest class)
/// wins ties.
pub fn argmax<T: Real>(scores: &[T]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

impl<T: Real> OvrModel<T> {
    pub fn dim(&self) -> usize {
        self.standardizer.mean.len()
    }

    pub fn predict(&self, x: ArrayView1<T>) -> Result<Prediction<T>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let xs = self.standardizer.apply_row(x);
        let scores: Vec<T> = self.models.iter().map(|m| m.probability(xs.view())).collect();
        let class = argmax(&scores);
        Ok(Prediction {
            class,
            label: self.classes[class].clone(),
            scores,
        })
    }

    pub fn predict_all(&self, x: ArrayView2<T>) -> Result<Vec<Prediction<T>>> {
        x.rows().into_iter().map(|r| self.predict(r)).collect()
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "OVR v1 {} {} {}", self.classes.len(), self.dim(), float(self.l2))?;
        writeln!(out, "MEAN {}", join_floats(&self.standardizer.mean.to_vec()))?;
        writeln!(out, "SCALE {}", join_floats(&self.standardizer.scale.to_vec()))?;
        for m in &self.models {
            if m.target.chars().any(char::is_whitespace) || m.target.is_empty() {
                return Err(Error::Format(format!("class label {:?} cannot be written", m.target)));
            }
            writeln!(
                out,
                "CLASS {} {} {} {}",
                m.target,
                float(m.bias),
                m.iterations,
                if m.converged { "converged" } else { "stopped" }
            )?;
            writeln!(out, "W {}", join_floats(&m.weights.to_vec()))?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let mut next = || -> Result<String> {
            lines
                .next()
                .transpose()?
                .ok_or_else(|| Error::Format("truncated model file".into()))
        };
        let header = next()?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 5 || h[0] != "OVR" || h[1] != "v1" {
            return Err(Error::Format(format!("bad model header {header:?}")));
        }
        let c: usize = parse_int(h[2], "class count")?;
        let d: usize = parse_int(h[3], "dimension")?;
        let l2: T = parse_float(h[4])?;
        let vector = |line: String, tag: &str| -> Result<Array1<T>> {
            let mut parts = line.split_whitespace();
            if parts.next() != Some(tag) {
                return Err(Error::Format(format!("expected {tag} line")));
            }
            let v = parts.map(parse_float).collect::<Result<Vec<T>>>()?;
            if v.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: v.len() });
            }
            Ok(Array1::from(v))
        };
        let mean = vector(next()?, "MEAN")?;
        let scale = vector(next()?, "SCALE")?;
        let mut models = Vec::with_capacity(c);
        for _ in 0..c {
            let line = next()?;
            let p: Vec<&str> = line.split_whitespace().collect();
            if p.len() != 5 || p[0] != "CLASS" {
                return Err(Error::Format(format!("bad class line {line:?}")));
            }
            let weights = vector(next()?, "W")?;
            models.push(BinaryLrModel {
                target: p[1].to_string(),
                weights,
                bias: parse_float(p[2])?,
                l2,
                iterations: parse_int(p[3], "iterations")?,
                converged: p[4] == "converged",
                trained: true,
            });
        }
        Ok(Self {
            classes: models.iter().map(|m| m.target.clone()).collect(),
            standardizer: Standardizer { mean, scale },
            models,
            l2,
        })
    }
}

/// Fits the standardizer and one binary model per class at a fixed `l2`.
pub fn fit_ovr<T: Real>(x: ArrayView2<T>, labels: &[String], l2: T) -> Result<OvrModel<T>> {
    if labels.len() != x.nrows() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            got: labels.len(),
        });
    }
    let mut classes: Vec<String> = labels.to_vec();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::DegenerateTargets);
    }
    let standardizer = Standardizer::fit(x);
    let xs = standardizer.apply(x);
    let models = classes
        .par_iter()
        .map(|c| {
            let y: Vec<bool> = labels.iter().map(|l| l == c).collect();
            train_binary(xs.view(), &y, l2, c).map(|(m, _)| m)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OvrModel {
        classes,
        standardizer,
        models,
        l2,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OvrConfig {
    pub l2_grid: Vec<f64>,
    pub inner_folds: usize,
    pub seed: u64,
}

impl Default for OvrConfig {
    fn default() -> Self {
        Self {
            l2_grid: default_l2_grid(),
            inner_folds: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OvrFit<T> {
    pub model: OvrModel<T>,
    pub l2: T,
    /// Mean inner-fold misclassification per grid value, grid sorted
    /// ascending.
    pub grid: Vec<(T, f64)>,
}

/// Mean inner-fold misclassification of every grid value.
pub fn inner_scores<T: Real>(
    x: ArrayView2<T>,
    ids: &[String],
    labels: &[String],
    cfg: &OvrConfig,
) -> Result<Vec<(T, f64)>> {
    let mut grid: Vec<f64> = cfg.l2_grid.clone();
    if grid.is_empty() || grid.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("bad l2 grid {grid:?}")));
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    let folds = stratified_folds(ids, labels, cfg.inner_folds, cfg.seed)?;
    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|g| (0..cfg.inner_folds).map(move |f| (g, f)))
        .collect();
    let rates = jobs
        .par_iter()
        .map(|&(g, f)| {
            let train: Vec<usize> = (0..ids.len()).filter(|&i| folds.fold[i] != f).collect();
            let test: Vec<usize> = (0..ids.len()).filter(|&i| folds.fold[i] == f).collect();
            let xt = x.select(Axis(0), &train);
            let lt: Vec<String> = train.iter().map(|&i| labels[i].clone()).collect();
            let model = fit_ovr(xt.view(), &lt, T::lit(grid[g]))?;
            let mut wrong = 0usize;
            for &i in &test {
                if model.predict(x.row(i))?.label != labels[i] {
                    wrong += 1;
                }
            }
            Ok(wrong as f64 / test.len() as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(grid
        .iter()
        .enumerate()
        .map(|(g, &l2)| {
            let per = &rates[g * cfg.inner_folds..(g + 1) * cfg.inner_folds];
            (T::lit(l2), per.iter().sum::<f64>() / cfg.inner_folds as f64)
        })
        .collect())
}

/// Nested selection: the grid value with the lowest mean inner
/// misclassification (smaller strength on ties), then a refit on all rows.
pub fn train_ovr<T: Real>(x: ArrayView2<T>, ids: &[String], labels: &[String], cfg: &OvrConfig) -> Result<OvrFit<T>> {
    let grid = inner_scores(x, ids, labels, cfg)?;
    let mut best = 0;
    for (i, g) in grid.iter().enumerate() {
        if g.1 < grid[best].1 {
            best = i;
        }
    }
    let l2 = grid[best].0;
    log::debug!("selected l2 = {l2} (inner misclassification {})", grid[best].1);
    let model = fit_ovr(x, labels, l2)?;
    Ok(OvrFit { model, l2, grid })
}
