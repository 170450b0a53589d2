//! Rank, statistics and report tables derived from a results file.

use std::collections::BTreeMap;

use anyhow::Result;
use dynpsn::evaluation::{
    pairwise_tests, rank_methods, runtime_summary, DatasetRates, RankPolicy, RankTable, ResultRow, StatResult,
};
use dynpsn::fmt::float;

use crate::{svg, RunConfig};

const NA: &str = "NA";

fn csv_bytes<F>(f: F) -> Result<Vec<u8>>
where
    F: FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> Result<()>,
{
    let mut buf = Vec::new();
    {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(&mut buf);
        f(&mut w)?;
        w.flush()?;
    }
    Ok(buf)
}

/// Sorted method ids.
pub fn methods(rows: &[ResultRow]) -> Vec<String> {
    let mut m: Vec<String> = rows.iter().map(|r| r.method_id.clone()).collect();
    m.sort();
    m.dedup();
    m
}

/// Aggregate misclassification per dataset.
pub fn dataset_rates(rows: &[ResultRow]) -> Vec<DatasetRates> {
    let mut by: BTreeMap<&str, BTreeMap<String, f64>> = BTreeMap::new();
    for r in rows {
        by.entry(&r.dataset_id).or_default().insert(r.method_id.clone(), r.aggregate);
    }
    by.into_iter()
        .map(|(d, rates)| DatasetRates {
            dataset_id: d.to_string(),
            rates,
        })
        .collect()
}

/// Strict and relaxed rank tables.
pub fn rank_tables(rows: &[ResultRow], threshold: f64) -> Result<(RankTable, RankTable)> {
    let data = dataset_rates(rows);
    Ok((
        rank_methods(&data, RankPolicy::Strict)?,
        rank_methods(&data, RankPolicy::Relaxed(threshold))?,
    ))
}

/// One row per dataset, one rank column per method.
pub fn ranks_csv(t: &RankTable) -> Result<Vec<u8>> {
    csv_bytes(|w| {
        let mut head = vec!["dataset_id".to_string()];
        head.extend(t.methods.iter().cloned());
        w.write_record(&head)?;
        for (d, ranks) in t.datasets.iter().zip(&t.ranks) {
            let mut rec = vec![d.clone()];
            rec.extend(ranks.iter().map(|r| r.map_or(NA.to_string(), |r| r.to_string())));
            w.write_record(&rec)?;
        }
        Ok(())
    })
}

pub fn rank_summary_csv(tables: &[&RankTable]) -> Result<Vec<u8>> {
    csv_bytes(|w| {
        w.write_record([
            "policy",
            "method_id",
            "datasets",
            "rank1",
            "absolute",
            "tied",
            "pct_rank1",
            "pct_absolute",
            "pct_tied",
        ])?;
        for t in tables {
            for s in t.summary() {
                w.write_record([
                    t.policy.name(),
                    s.method.clone(),
                    s.datasets.to_string(),
                    s.rank1.to_string(),
                    s.absolute.to_string(),
                    s.tied.to_string(),
                    float(s.pct_rank1()),
                    float(s.pct_absolute()),
                    float(s.pct_tied()),
                ])?;
            }
        }
        Ok(())
    })
}

pub fn tests(rows: &[ResultRow], bonferroni: Option<usize>) -> Result<Vec<StatResult>> {
    let m = methods(rows);
    let res = pairwise_tests(&m, &dataset_rates(rows), bonferroni)?;
    let tested = res.iter().filter(|r| r.test.is_some()).count();
    let divisor = bonferroni.unwrap_or(m.len() * m.len().saturating_sub(1));
    log::info!("{tested} of {} ordered pairs tested, Bonferroni divisor {divisor}", res.len());
    for r in &res {
        if let Some(t) = &r.test {
            if t.discarded > 0 {
                log::info!("{} vs {}: {} zero differences discarded", r.x, r.y, t.discarded);
            }
        }
    }
    Ok(res)
}

pub fn stats_csv(tests: &[StatResult]) -> Result<Vec<u8>> {
    csv_bytes(|w| {
        w.write_record(["x", "y", "pairs", "n", "discarded", "w_plus", "p", "q", "exact", "undefined"])?;
        for r in tests {
            let mut rec = vec![r.x.clone(), r.y.clone(), r.pairs.to_string()];
            match &r.test {
                Some(t) => rec.extend([
                    t.n.to_string(),
                    t.discarded.to_string(),
                    float(t.w_plus),
                    float(t.p),
                    float(t.q),
                    t.exact.to_string(),
                    t.undefined.to_string(),
                ]),
                None => rec.extend(std::iter::repeat_n(NA.to_string(), 7)),
            }
            w.write_record(&rec)?;
        }
        Ok(())
    })
}

/// Square table: row `x`, column `y` holds the q-value of "x better than y".
/// The diagonal and untested pairs are `NA`.
pub fn qvalue_csv(methods: &[String], tests: &[StatResult]) -> Result<Vec<u8>> {
    let q: BTreeMap<(&str, &str), f64> = tests
        .iter()
        .filter_map(|r| r.test.as_ref().map(|t| ((r.x.as_str(), r.y.as_str()), t.q)))
        .collect();
    csv_bytes(|w| {
        let mut head = vec!["method_id".to_string()];
        head.extend(methods.iter().cloned());
        w.write_record(&head)?;
        for x in methods {
            let mut rec = vec![x.clone()];
            for y in methods {
                rec.push(q.get(&(x.as_str(), y.as_str())).map_or(NA.to_string(), |v| float(*v)));
            }
            w.write_record(&rec)?;
        }
        Ok(())
    })
}

/// Report files (relative to `report/`) derived from the results rows.
pub fn render(rows: &[ResultRow], cfg: &RunConfig) -> Result<Vec<(String, Vec<u8>)>> {
    let methods = methods(rows);
    let data = dataset_rates(rows);
    let mut out = Vec::new();

    // dataset × method table, aggregate and average
    out.push((
        "misclassification.csv".to_string(),
        csv_bytes(|w| {
            let mut head = vec!["dataset_id".to_string()];
            for m in &methods {
                head.push(format!("{m}_aggregate"));
                head.push(format!("{m}_average"));
            }
            w.write_record(&head)?;
            let mut by: BTreeMap<(&str, &str), &ResultRow> = BTreeMap::new();
            for r in rows {
                by.insert((&r.dataset_id, &r.method_id), r);
            }
            for d in &data {
                let mut rec = vec![d.dataset_id.clone()];
                for m in &methods {
                    match by.get(&(d.dataset_id.as_str(), m.as_str())) {
                        Some(r) => rec.extend([float(r.aggregate), float(r.average)]),
                        None => rec.extend([NA.to_string(), NA.to_string()]),
                    }
                }
                w.write_record(&rec)?;
            }
            Ok(())
        })?,
    ));

    let (strict, relaxed) = rank_tables(rows, cfg.relaxed_threshold)?;
    out.push(("ranks_strict.csv".into(), ranks_csv(&strict)?));
    out.push(("ranks_relaxed.csv".into(), ranks_csv(&relaxed)?));
    out.push(("rank_summary.csv".into(), rank_summary_csv(&[&strict, &relaxed])?));

    let stat = tests(rows, cfg.bonferroni)?;
    out.push(("stats.csv".into(), stats_csv(&stat)?));
    out.push(("qvalues.csv".into(), qvalue_csv(&methods, &stat)?));

    // rank-1 shares, absolute and tied, per policy
    let mut series = Vec::new();
    for t in [&strict, &relaxed] {
        let s = t.summary();
        series.push((format!("{} absolute", t.policy.name()), s.iter().map(|x| x.pct_absolute()).collect()));
        series.push((format!("{} tied", t.policy.name()), s.iter().map(|x| x.pct_tied()).collect()));
    }
    out.push((
        "rank1_bar.svg".into(),
        svg::bar_chart("Datasets at rank 1", "% of datasets", &strict.methods, &series).into_bytes(),
    ));

    let mean_agg: Vec<f64> = methods
        .iter()
        .map(|m| {
            let v: Vec<f64> = data.iter().filter_map(|d| d.rates.get(m).copied()).collect();
            v.iter().sum::<f64>() / v.len().max(1) as f64
        })
        .collect();
    out.push((
        "misclassification_bar.svg".into(),
        svg::bar_chart(
            "Mean aggregate misclassification",
            "misclassification rate",
            &methods,
            &[("aggregate".into(), mean_agg)],
        )
        .into_bytes(),
    ));
    let groups: Vec<(String, Vec<f64>)> = methods
        .iter()
        .map(|m| (m.clone(), data.iter().filter_map(|d| d.rates.get(m).copied()).collect()))
        .collect();
    out.push((
        "misclassification_box.svg".into(),
        svg::box_chart("Aggregate misclassification over datasets", "misclassification rate", &groups).into_bytes(),
    ));
    Ok(out)
}

/// Runtime summary table and chart from per-(dataset, method) seconds.
pub fn render_runtimes(runtimes: &BTreeMap<(String, String), f64>) -> Result<Vec<(String, Vec<u8>)>> {
    let mut per: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for ((_, m), s) in runtimes {
        per.entry(m).or_default().push(*s);
    }
    let table = csv_bytes(|w| {
        w.write_record([
            "method_id",
            "datasets",
            "median_s",
            "mean_s",
            "stdev_s",
            "median_h",
            "mean_h",
            "stdev_h",
            "single",
        ])?;
        for (m, secs) in &per {
            let s = runtime_summary(secs)?;
            let h = s.in_hours();
            w.write_record([
                m.to_string(),
                s.n.to_string(),
                float(s.median),
                float(s.mean),
                float(s.stdev),
                float(h.median),
                float(h.mean),
                float(h.stdev),
                s.single.to_string(),
            ])?;
        }
        Ok(())
    })?;
    let groups: Vec<(String, Vec<f64>)> = per.into_iter().map(|(m, v)| (m.to_string(), v)).collect();
    Ok(vec![
        ("runtime_summary.csv".into(), table),
        (
            "runtime_box.svg".into(),
            svg::box_chart("Runtime per dataset", "seconds", &groups).into_bytes(),
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(d: &str, m: &str, rate: f64) -> ResultRow {
        ResultRow {
            dataset_id: d.into(),
            method_id: m.into(),
            n: 10,
            wrong: (rate * 10.0) as usize,
            aggregate: rate,
            average: rate,
        }
    }

    #[test]
    fn three_methods_give_a_three_by_three_q_table() {
        let mut rows = Vec::new();
        for d in 0..6 {
            let ds = format!("ds{d}");
            rows.push(row(&ds, "a", 0.1 + d as f64 * 0.01));
            rows.push(row(&ds, "b", 0.3 + d as f64 * 0.02));
            rows.push(row(&ds, "c", 0.6));
        }
        let m = methods(&rows);
        let bytes = qvalue_csv(&m, &tests(&rows, None).unwrap()).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let lines: Vec<Vec<&str>> = text.lines().map(|l| l.split(',').collect()).collect();
        assert_eq!(lines.len(), 4);
        assert!(lines.iter().all(|l| l.len() == 4));
        assert_eq!(lines[1][1], "NA");
        // a beats b on all six datasets: p = 2^-6, six ordered comparisons
        let q: f64 = lines[1][2].parse().unwrap();
        assert_eq!(q, 6.0 / 64.0);
    }

    #[test]
    fn rank_csv_marks_absent_methods() {
        let rows = vec![row("d1", "a", 0.1), row("d1", "b", 0.2), row("d2", "a", 0.3), row("d2", "c", 0.1)];
        let (strict, _) = rank_tables(&rows, 0.02).unwrap();
        let text = String::from_utf8(ranks_csv(&strict).unwrap()).unwrap();
        assert_eq!(text, "dataset_id,a,b,c\nd1,1,2,NA\nd2,2,NA,1\n");
    }
}
