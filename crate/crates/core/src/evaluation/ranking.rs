use std::collections::BTreeMap;

use crate::{Error, Result};

/// Slack applied to relaxed comparisons so that a gap equal to the
/// threshold in decimal is not split by rounding.
const RELAXED_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RankPolicy {
    /// Ties only on identical rates.
    Strict,
    /// Rates within the threshold of a better one do not count against a
    /// method; rank 1 means within the threshold of the dataset minimum.
    Relaxed(f64),
}

impl RankPolicy {
    pub fn name(&self) -> String {
        match self {
            Self::Strict => "strict".into(),
            Self::Relaxed(t) => format!("relaxed({t})"),
        }
    }
}

/// Competition ranks of misclassification rates (lower is better):
/// `1 + #{others that beat this one}`.
pub fn competition_ranks(rates: &[f64], policy: RankPolicy) -> Vec<usize> {
    rates
        .iter()
        .map(|&r| {
            let better = match policy {
                RankPolicy::Strict => rates.iter().filter(|&&o| o < r).count(),
                RankPolicy::Relaxed(t) => rates.iter().filter(|&&o| o < r - t - RELAXED_SLACK).count(),
            };
            1 + better
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRates {
    pub dataset_id: String,
    pub rates: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    pub policy: RankPolicy,
    pub methods: Vec<String>,
    pub datasets: Vec<String>,
    /// `ranks[dataset][method]`, `None` where the method has no result.
    pub ranks: Vec<Vec<Option<usize>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankSummary {
    pub method: String,
    pub datasets: usize,
    pub rank1: usize,
    /// Sole rank-1 method on the dataset.
    pub absolute: usize,
    /// Rank 1 shared with at least one other method.
    pub tied: usize,
}

impl RankSummary {
    fn pct(&self, k: usize) -> f64 {
        if self.datasets == 0 {
            0.0
        } else {
            100.0 * k as f64 / self.datasets as f64
        }
    }

    pub fn pct_rank1(&self) -> f64 {
        self.pct(self.rank1)
    }

    pub fn pct_absolute(&self) -> f64 {
        self.pct(self.absolute)
    }

    pub fn pct_tied(&self) -> f64 {
        self.pct(self.tied)
    }
}

impl RankTable {
    pub fn summary(&self) -> Vec<RankSummary> {
        self.methods
            .iter()
            .enumerate()
            .map(|(m, method)| {
                let mut s = RankSummary {
                    method: method.clone(),
                    datasets: 0,
                    rank1: 0,
                    absolute: 0,
                    tied: 0,
                };
                for row in &self.ranks {
                    let Some(r) = row[m] else { continue };
                    s.datasets += 1;
                    if r == 1 {
                        s.rank1 += 1;
                        if row.iter().filter(|x| **x == Some(1)).count() == 1 {
                            s.absolute += 1;
                        } else {
                            s.tied += 1;
                        }
                    }
                }
                s
            })
            .collect()
    }
}

pub fn rank_methods(data: &[DatasetRates], policy: RankPolicy) -> Result<RankTable> {
    if let RankPolicy::Relaxed(t) = policy {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!("relaxed threshold {t}")));
        }
    }
    let mut methods: Vec<String> = data.iter().flat_map(|d| d.rates.keys().cloned()).collect();
    methods.sort();
    methods.dedup();
    let mut ranks = Vec::with_capacity(data.len());
    for d in data {
        if d.rates.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "dataset {} has {} method(s); ranking needs at least 2",
                d.dataset_id,
                d.rates.len()
            )));
        }
        let present: Vec<f64> = d.rates.values().copied().collect();
        let r = competition_ranks(&present, policy);
        let by_method: BTreeMap<&str, usize> = d.rates.keys().map(String::as_str).zip(r).collect();
        ranks.push(methods.iter().map(|m| by_method.get(m.as_str()).copied()).collect());
    }
    Ok(RankTable {
        policy,
        methods,
        datasets: data.iter().map(|d| d.dataset_id.clone()).collect(),
        ranks,
    })
}
