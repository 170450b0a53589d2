use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};

use super::folds::{csv_err, FoldAssignment};
use crate::fmt::{float, parse_float};
use crate::{Error, Result};

const PREDICTION_COLUMNS: [&str; 6] = ["dataset_id", "method_id", "domain_id", "fold", "true_label", "predicted_label"];

/// Dataset id of the per-method summary rows in a results file.
pub const SUMMARY_DATASET: &str = "*";

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub domain_id: String,
    pub fold: usize,
    pub true_label: String,
    pub predicted_label: String,
    pub scores: Vec<f64>,
}

/// Test-fold predictions of one method on one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub dataset_id: String,
    pub method_id: String,
    pub rows: Vec<PredictionRow>,
}

/// Writes one or more prediction sets into a single file. Score columns are
/// present when any row carries scores, and every row must then carry the
/// same number.
pub fn write_predictions<W: Write>(out: W, sets: &[PredictionSet]) -> Result<()> {
    let width = sets
        .iter()
        .flat_map(|s| &s.rows)
        .map(|r| r.scores.len())
        .max()
        .unwrap_or(0);
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let mut header: Vec<String> = PREDICTION_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend((0..width).map(|i| format!("score_{i}")));
    w.write_record(&header).map_err(csv_err)?;
    for s in sets {
        for r in &s.rows {
            if r.scores.len() != width {
                return Err(Error::Format(format!(
                    "domain {} has {} scores, expected {width}",
                    r.domain_id,
                    r.scores.len()
                )));
            }
            let mut rec = vec![
                s.dataset_id.clone(),
                s.method_id.clone(),
                r.domain_id.clone(),
                r.fold.to_string(),
                r.true_label.clone(),
                r.predicted_label.clone(),
            ];
            rec.extend(r.scores.iter().map(|&x| float(x)));
            w.write_record(&rec).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Groups rows by `(dataset_id, method_id)`, sorted by that key; rows keep
/// file order.
pub fn read_predictions<R: Read>(input: R) -> Result<Vec<PredictionSet>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(csv_err)?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    if cols.len() < 6 || cols[..6] != PREDICTION_COLUMNS {
        return Err(Error::Format(format!("predictions header {cols:?}")));
    }
    for (i, c) in cols[6..].iter().enumerate() {
        if *c != format!("score_{i}") {
            return Err(Error::Format(format!("unexpected column {c:?}")));
        }
    }
    let mut groups: BTreeMap<(String, String), Vec<PredictionRow>> = BTreeMap::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let fold = rec[3]
            .parse()
            .map_err(|e| Error::Format(format!("fold {:?}: {e}", &rec[3])))?;
        let scores = rec.iter().skip(6).map(parse_float).collect::<Result<Vec<f64>>>()?;
        groups
            .entry((rec[0].to_string(), rec[1].to_string()))
            .or_default()
            .push(PredictionRow {
                domain_id: rec[2].to_string(),
                fold,
                true_label: rec[4].to_string(),
                predicted_label: rec[5].to_string(),
                scores,
            });
    }
    Ok(groups
        .into_iter()
        .map(|((dataset_id, method_id), rows)| PredictionSet {
            dataset_id,
            method_id,
            rows,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FoldRate {
    pub fold: usize,
    pub wrong: usize,
    pub total: usize,
}

impl FoldRate {
    pub fn rate(&self) -> f64 {
        self.wrong as f64 / self.total as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Misclassification {
    /// Wrong over total, all test folds pooled.
    pub aggregate: f64,
    /// Mean of the per-fold rates.
    pub average: f64,
    pub per_fold: Vec<FoldRate>,
}

impl Misclassification {
    pub fn wrong(&self) -> usize {
        self.per_fold.iter().map(|f| f.wrong).sum()
    }

    pub fn total(&self) -> usize {
        self.per_fold.iter().map(|f| f.total).sum()
    }
}

/// Misclassification of a prediction set. With `folds` every assigned
/// domain must be predicted exactly once, in its assigned fold.
pub fn misclassification(set: &PredictionSet, folds: Option<&FoldAssignment>) -> Result<Misclassification> {
    if set.rows.is_empty() {
        return Err(Error::Incomplete(format!("{}/{} has no predictions", set.dataset_id, set.method_id)));
    }
    let mut seen = HashSet::new();
    for r in &set.rows {
        if !seen.insert(r.domain_id.as_str()) {
            return Err(Error::Incomplete(format!("domain {} predicted twice", r.domain_id)));
        }
    }
    if let Some(f) = folds {
        let assigned = f.as_map();
        for r in &set.rows {
            match assigned.get(r.domain_id.as_str()) {
                None => return Err(Error::Incomplete(format!("domain {} is not in the folds file", r.domain_id))),
                Some(&k) if k != r.fold => {
                    return Err(Error::Incomplete(format!(
                        "domain {} predicted in fold {} but assigned to fold {k}",
                        r.domain_id, r.fold
                    )))
                }
                _ => {}
            }
        }
        if let Some(missing) = f.ids.iter().find(|id| !seen.contains(id.as_str())) {
            return Err(Error::Incomplete(format!("domain {missing} has no prediction")));
        }
    }
    let mut per: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for r in &set.rows {
        let e = per.entry(r.fold).or_default();
        e.1 += 1;
        if r.predicted_label != r.true_label {
            e.0 += 1;
        }
    }
    let per_fold: Vec<FoldRate> = per
        .into_iter()
        .map(|(fold, (wrong, total))| FoldRate { fold, wrong, total })
        .collect();
    let wrong: usize = per_fold.iter().map(|f| f.wrong).sum();
    let total: usize = per_fold.iter().map(|f| f.total).sum();
    let average = per_fold.iter().map(FoldRate::rate).sum::<f64>() / per_fold.len() as f64;
    Ok(Misclassification {
        aggregate: wrong as f64 / total as f64,
        average,
        per_fold,
    })
}

/// Misclassification of always predicting the largest class.
pub fn majority_baseline(labels: &[String]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::InvalidArgument("majority baseline of an empty dataset".into()));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    let largest = counts.values().copied().max().unwrap_or(0);
    Ok(1.0 - largest as f64 / labels.len() as f64)
}

/// One line of a results file.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub dataset_id: String,
    pub method_id: String,
    pub n: usize,
    pub wrong: usize,
    pub aggregate: f64,
    pub average: f64,
}

/// Per-dataset rows followed by a summary block (dataset id
/// [`SUMMARY_DATASET`]) holding, per method, the mean rates over datasets.
pub fn write_results<W: Write>(out: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["dataset_id", "method_id", "n", "wrong", "aggregate", "average"])
        .map_err(csv_err)?;
    let mut summary: BTreeMap<&str, (usize, usize, f64, f64, usize)> = BTreeMap::new();
    for r in rows {
        w.write_record([
            r.dataset_id.clone(),
            r.method_id.clone(),
            r.n.to_string(),
            r.wrong.to_string(),
            float(r.aggregate),
            float(r.average),
        ])
        .map_err(csv_err)?;
        let s = summary.entry(&r.method_id).or_default();
        s.0 += r.n;
        s.1 += r.wrong;
        s.2 += r.aggregate;
        s.3 += r.average;
        s.4 += 1;
    }
    for (method, (n, wrong, agg, avg, k)) in summary {
        w.write_record([
            SUMMARY_DATASET.to_string(),
            method.to_string(),
            n.to_string(),
            wrong.to_string(),
            float(agg / k as f64),
            float(avg / k as f64),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-dataset rows of a results file; the summary block is skipped.
pub fn read_results<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != 6 {
            return Err(Error::Format(format!("results row with {} fields", rec.len())));
        }
        if &rec[0] == SUMMARY_DATASET {
            continue;
        }
        let int = |s: &str| s.parse::<usize>().map_err(|e| Error::Format(format!("{s:?}: {e}")));
        out.push(ResultRow {
            dataset_id: rec[0].to_string(),
            method_id: rec[1].to_string(),
            n: int(&rec[2])?,
            wrong: int(&rec[3])?,
            aggregate: parse_float(&rec[4])?,
            average: parse_float(&rec[5])?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(rows: &[(&str, usize, &str, &str)]) -> PredictionSet {
        PredictionSet {
            dataset_id: "ds".into(),
            method_id: "m".into(),
            rows: rows
                .iter()
                .map(|&(id, fold, t, p)| PredictionRow {
                    domain_id: id.into(),
                    fold,
                    true_label: t.into(),
                    predicted_label: p.into(),
                    scores: vec![],
                })
                .collect(),
        }
    }

    #[test]
    fn three_of_ten_wrong() {
        let rows: Vec<(String, usize, &str, &str)> = (0..10)
            .map(|i| (format!("d{i}"), i % 5, "a", if i < 3 { "b" } else { "a" }))
            .collect();
        let s = set(&rows.iter().map(|(a, b, c, d)| (a.as_str(), *b, *c, *d)).collect::<Vec<_>>());
        let m = misclassification(&s, None).unwrap();
        assert_eq!(m.aggregate, 0.3);
        // equal fold sizes: aggregate equals average
        assert!((m.average - m.aggregate).abs() < 1e-15);
    }

    #[test]
    fn all_correct() {
        let m = misclassification(&set(&[("a", 0, "x", "x"), ("b", 1, "y", "y")]), None).unwrap();
        assert_eq!((m.aggregate, m.average), (0.0, 0.0));
    }

    #[test]
    fn unequal_folds() {
        // fold 0: 1/1 wrong, fold 1: 0/3 wrong
        let s = set(&[("a", 0, "x", "y"), ("b", 1, "x", "x"), ("c", 1, "x", "x"), ("d", 1, "y", "y")]);
        let m = misclassification(&s, None).unwrap();
        assert_eq!(m.aggregate, 0.25);
        assert_eq!(m.average, 0.5);
    }

    #[test]
    fn incompleteness() {
        let folds = FoldAssignment {
            folds: 2,
            seed: 0,
            ids: vec!["a".into(), "b".into()],
            fold: vec![0, 1],
        };
        let missing = set(&[("a", 0, "x", "x")]);
        assert!(matches!(misclassification(&missing, Some(&folds)), Err(Error::Incomplete(_))));
        let wrong_fold = set(&[("a", 1, "x", "x"), ("b", 1, "x", "x")]);
        assert!(matches!(misclassification(&wrong_fold, Some(&folds)), Err(Error::Incomplete(_))));
        let dup = set(&[("a", 0, "x", "x"), ("a", 0, "x", "x")]);
        assert!(misclassification(&dup, None).is_err());
        let ok = set(&[("b", 1, "x", "x"), ("a", 0, "x", "y")]);
        assert_eq!(misclassification(&ok, Some(&folds)).unwrap().aggregate, 0.5);
    }

    #[test]
    fn majority() {
        let l = |v: &[(&str, usize)]| -> Vec<String> {
            v.iter().flat_map(|&(s, n)| std::iter::repeat_n(s.to_string(), n)).collect()
        };
        assert!((majority_baseline(&l(&[("a", 60), ("b", 40)])).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(majority_baseline(&l(&[("a", 7)])).unwrap(), 0.0);
        assert!((majority_baseline(&l(&[("a", 30), ("b", 30), ("c", 30)])).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(majority_baseline(&[]).is_err());
    }

    #[test]
    fn prediction_file_round_trip() {
        let mut a = set(&[("d1", 0, "x", "y"), ("d2", 1, "y", "y")]);
        a.rows[0].scores = vec![0.25, 1.0 / 3.0];
        a.rows[1].scores = vec![0.5, 0.75];
        let mut b = a.clone();
        b.method_id = "other".into();
        let mut buf = Vec::new();
        write_predictions(&mut buf, &[a.clone(), b.clone()]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "dataset_id,method_id,domain_id,fold,true_label,predicted_label,score_0,score_1\n"
        ));
        assert!(!text.contains('\r'));
        assert_eq!(read_predictions(&buf[..]).unwrap(), vec![a, b]);
    }

    #[test]
    fn predictions_without_scores() {
        let text = "dataset_id,method_id,domain_id,fold,true_label,predicted_label\nds,ext,d1,0,a,b\n";
        let sets = read_predictions(text.as_bytes()).unwrap();
        assert_eq!(sets[0].method_id, "ext");
        assert!(sets[0].rows[0].scores.is_empty());
        assert!(read_predictions("domain_id,fold\n".as_bytes()).is_err());
    }

    #[test]
    fn results_round_trip_skips_summary() {
        let rows = vec![
            ResultRow {
                dataset_id: "d1".into(),
                method_id: "lr".into(),
                n: 10,
                wrong: 1,
                aggregate: 0.1,
                average: 0.1,
            },
            ResultRow {
                dataset_id: "d2".into(),
                method_id: "lr".into(),
                n: 10,
                wrong: 3,
                aggregate: 0.3,
                average: 0.3,
            },
        ];
        let mut buf = Vec::new();
        write_results(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("\n*,lr,20,4,"));
        assert_eq!(read_results(&buf[..]).unwrap(), rows);
    }
}
