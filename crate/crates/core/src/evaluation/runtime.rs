use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuntimeSummary {
    pub n: usize,
    pub median: f64,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub stdev: f64,
    /// Only one value was available, so `stdev` carries no information.
    pub single: bool,
}

impl RuntimeSummary {
    pub fn in_hours(&self) -> Self {
        Self {
            median: self.median / 3600.0,
            mean: self.mean / 3600.0,
            stdev: self.stdev / 3600.0,
            ..*self
        }
    }
}

/// Median, mean and sample standard deviation of runtimes in seconds.
pub fn runtime_summary(seconds: &[f64]) -> Result<RuntimeSummary> {
    if seconds.is_empty() {
        return Err(Error::InvalidArgument("no runtimes to summarise".into()));
    }
    if seconds.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument("non-finite runtime".into()));
    }
    let n = seconds.len();
    let mut sorted = seconds.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let stdev = if n > 1 {
        (sorted.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(RuntimeSummary {
        n,
        median,
        mean,
        stdev,
        single: n == 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_two_three() {
        let s = runtime_summary(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!((s.median, s.mean, s.stdev, s.single), (2.0, 2.0, 1.0, false));
    }

    #[test]
    fn single_value_is_flagged() {
        let s = runtime_summary(&[7200.0]).unwrap();
        assert!(s.single);
        assert_eq!(s.stdev, 0.0);
        assert_eq!(s.in_hours().median, 2.0);
    }

    #[test]
    fn even_count_median() {
        assert_eq!(runtime_summary(&[4.0, 1.0, 3.0, 2.0]).unwrap().median, 2.5);
        assert!(runtime_summary(&[]).is_err());
    }
}
