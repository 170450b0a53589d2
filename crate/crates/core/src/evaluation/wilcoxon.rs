use statrs::function::erf::erfc;

use super::ranking::DatasetRates;
use crate::{Error, Result};

/// Largest number of non-zero differences handled by the exact null
/// distribution.
pub const EXACT_LIMIT: usize = 25;
pub const MIN_PAIRS: usize = 5;
/// Differences (and gaps between absolute differences) this small count
/// as zero; rates are ratios of small integers, so genuine gaps are far
/// larger.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct WilcoxonTest {
    /// Non-zero differences used.
    pub n: usize,
    pub discarded: usize,
    /// Sum of ranks of positive `x - y`.
    pub w_plus: f64,
    pub p: f64,
    pub q: f64,
    pub exact: bool,
    /// Every difference was zero; `p` and `q` are reported as 1.
    pub undefined: bool,
}

pub fn bonferroni(p: f64, comparisons: usize) -> f64 {
    (p * comparisons as f64).min(1.0)
}

/// Average ranks of `values` (already sorted ascending) with near-equal
/// values tied, doubled so that they are integers.
fn doubled_ranks(sorted: &[f64]) -> Vec<u64> {
    let mut out = vec![0; sorted.len()];
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] - sorted[i] <= TIE_TOL {
            j += 1;
        }
        // ranks i+1..=j+1 average to (i+j+2)/2; doubled: i+j+2
        for o in &mut out[i..=j] {
            *o = (i + j + 2) as u64;
        }
        i = j + 1;
    }
    out
}

/// One-sided paired signed-rank test of "x tends to be smaller than y".
/// Small `W+` (few or small positive `x - y`) is evidence for the
/// alternative, so `p = P(W+ <= observed)` under the null.
pub fn wilcoxon_one_sided(x: &[f64], y: &[f64], comparisons: usize) -> Result<WilcoxonTest> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < MIN_PAIRS {
        return Err(Error::InvalidArgument(format!(
            "signed-rank test needs at least {MIN_PAIRS} pairs, got {}",
            x.len()
        )));
    }
    if comparisons == 0 {
        return Err(Error::InvalidArgument("comparison count must be positive".into()));
    }
    let mut d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|v| v.abs() > TIE_TOL).collect();
    let discarded = x.len() - d.len();
    if discarded > 0 {
        log::debug!("signed-rank test: {discarded} zero difference(s) discarded");
    }
    let n = d.len();
    if n == 0 {
        return Ok(WilcoxonTest {
            n,
            discarded,
            w_plus: 0.0,
            p: 1.0,
            q: 1.0,
            exact: true,
            undefined: true,
        });
    }
    d.sort_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap());
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let ranks2 = doubled_ranks(&abs);
    let w2: u64 = d.iter().zip(&ranks2).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let w_plus = w2 as f64 / 2.0;

    let (p, exact) = if n <= EXACT_LIMIT {
        let total: u64 = ranks2.iter().sum();
        let mut ways = vec![0u64; total as usize + 1];
        ways[0] = 1;
        for &r in &ranks2 {
            for s in (r as usize..=total as usize).rev() {
                ways[s] += ways[s - r as usize];
            }
        }
        let below: u64 = ways[..=w2 as usize].iter().sum();
        (below as f64 / (1u64 << n) as f64, true)
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let mut ties = 0.0;
        let mut i = 0;
        while i < n {
            let j = (i..n).take_while(|&k| ranks2[k] == ranks2[i]).count();
            let t = j as f64;
            ties += t * t * t - t;
            i += j;
        }
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - ties / 48.0;
        let z = (w_plus - mean + 0.5) / var.sqrt();
        ((0.5 * erfc(-z / std::f64::consts::SQRT_2)).min(1.0), false)
    };
    Ok(WilcoxonTest {
        n,
        discarded,
        w_plus,
        p,
        q: bonferroni(p, comparisons),
        exact,
        undefined: false,
    })
}

/// One ordered method pair over the datasets both methods were run on.
#[derive(Debug, Clone, PartialEq)]
pub struct StatResult {
    pub x: String,
    pub y: String,
    pub pairs: usize,
    /// `None` when fewer than [`MIN_PAIRS`] datasets are shared.
    pub test: Option<WilcoxonTest>,
}

/// Every ordered pair `(x, y)`, `x != y`, tested for "x has lower
/// misclassification than y". The Bonferroni divisor defaults to the number
/// of ordered pairs `m(m-1)`.
pub fn pairwise_tests(methods: &[String], data: &[DatasetRates], comparisons: Option<usize>) -> Result<Vec<StatResult>> {
    let m = methods.len();
    let comparisons = comparisons.unwrap_or(m * m.saturating_sub(1)).max(1);
    let mut out = Vec::with_capacity(m * m.saturating_sub(1));
    for a in methods {
        for b in methods {
            if a == b {
                continue;
            }
            let (xs, ys): (Vec<f64>, Vec<f64>) = data
                .iter()
                .filter_map(|d| Some((*d.rates.get(a)?, *d.rates.get(b)?)))
                .unzip();
            let test = if xs.len() >= MIN_PAIRS {
                Some(wilcoxon_one_sided(&xs, &ys, comparisons)?)
            } else {
                None
            };
            out.push(StatResult {
                x: a.clone(),
                y: b.clone(),
                pairs: xs.len(),
                test,
            });
        }
    }
    Ok(out)
}
