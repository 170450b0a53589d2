use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};

use crate::rng::SplitMix64;
use crate::{Error, Result};

/// Fold index per domain, in the order the domains were supplied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    pub folds: usize,
    pub seed: u64,
    pub ids: Vec<String>,
    pub fold: Vec<usize>,
}

impl FoldAssignment {
    pub fn fold_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id).map(|i| self.fold[i])
    }

    pub fn as_map(&self) -> BTreeMap<&str, usize> {
        self.ids.iter().map(String::as_str).zip(self.fold.iter().copied()).collect()
    }

    /// Row indices of the training and test split for fold `f`.
    pub fn split(&self, f: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.ids.len()).partition(|&i| self.fold[i] != f)
    }
}

/// Seeded stratified assignment. Classes are visited in lexicographic
/// order; each class's members, sorted by id, are shuffled by one shared
/// SplitMix64 stream and dealt round-robin, the dealing position carrying
/// over from class to class so overall fold sizes stay balanced too.
pub fn stratified_folds(ids: &[String], labels: &[String], folds: usize, seed: u64) -> Result<FoldAssignment> {
    if ids.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: ids.len(),
            got: labels.len(),
        });
    }
    if folds < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 folds, got {folds}")));
    }
    let mut seen = HashSet::new();
    if let Some(dup) = ids.iter().find(|id| !seen.insert(id.as_str())) {
        return Err(Error::InvalidArgument(format!("duplicate domain id {dup}")));
    }
    let mut classes: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        classes.entry(l.as_str()).or_default().push(i);
    }
    for (label, members) in &classes {
        if members.len() < folds {
            return Err(Error::Stratification(format!(
                "class {label} has {} members, fewer than {folds} folds",
                members.len()
            )));
        }
    }
    let mut rng = SplitMix64::new(seed);
    let mut fold = vec![0; ids.len()];
    let mut offset = 0;
    for members in classes.values_mut() {
        members.sort_by(|&a, &b| ids[a].cmp(&ids[b]));
        rng.shuffle(members);
        for (j, &m) in members.iter().enumerate() {
            fold[m] = (offset + j) % folds;
        }
        offset = (offset + members.len()) % folds;
    }
    Ok(FoldAssignment {
        folds,
        seed,
        ids: ids.to_vec(),
        fold,
    })
}

/// `domain_id,fold` with a header line.
pub fn write_folds<W: Write>(out: W, folds: &FoldAssignment) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["domain_id", "fold"]).map_err(csv_err)?;
    for (id, f) in folds.ids.iter().zip(&folds.fold) {
        w.write_record([id.as_str(), &f.to_string()]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a folds file; the fold count is one more than the largest index
/// and the seed is not recorded in the file (reported as 0).
pub fn read_folds<R: Read>(input: R) -> Result<FoldAssignment> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(csv_err)?.clone();
    if headers.iter().collect::<Vec<_>>() != ["domain_id", "fold"] {
        return Err(Error::Format(format!("folds header {headers:?}")));
    }
    let mut ids = Vec::new();
    let mut fold = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        ids.push(rec[0].to_string());
        fold.push(
            rec[1]
                .parse::<usize>()
                .map_err(|e| Error::Format(format!("fold index {:?}: {e}", &rec[1])))?,
        );
    }
    let folds = fold.iter().max().map_or(0, |m| m + 1);
    Ok(FoldAssignment {
        folds,
        seed: 0,
        ids,
        fold,
    })
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("{other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(counts: &[usize]) -> (Vec<String>, Vec<String>) {
        let mut ids = Vec::new();
        let mut labels = Vec::new();
        for (c, &n) in counts.iter().enumerate() {
            for i in 0..n {
                ids.push(format!("d{c}_{i:03}"));
                labels.push(format!("class{c}"));
            }
        }
        (ids, labels)
    }

    #[test]
    fn exact_divisibility() {
        let (ids, labels) = corpus(&[10, 10]);
        let f = stratified_folds(&ids, &labels, 5, 42).unwrap();
        for k in 0..5 {
            for c in 0..2 {
                let n = (0..20)
                    .filter(|&i| f.fold[i] == k && labels[i] == format!("class{c}"))
                    .count();
                assert_eq!(n, 2);
            }
        }
    }

    #[test]
    fn small_class_is_rejected() {
        let (ids, labels) = corpus(&[10, 4]);
        assert!(matches!(
            stratified_folds(&ids, &labels, 5, 1),
            Err(Error::Stratification(_))
        ));
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let (ids, labels) = corpus(&[13, 7, 9]);
        let a = stratified_folds(&ids, &labels, 5, 7).unwrap();
        assert_eq!(a, stratified_folds(&ids, &labels, 5, 7).unwrap());
        assert_ne!(a.fold, stratified_folds(&ids, &labels, 5, 8).unwrap().fold);
        // input order does not matter
        let mut rev_ids = ids.clone();
        let mut rev_labels = labels.clone();
        rev_ids.reverse();
        rev_labels.reverse();
        let b = stratified_folds(&rev_ids, &rev_labels, 5, 7).unwrap();
        assert_eq!(a.as_map(), b.as_map());
    }

    #[test]
    fn balanced_overall() {
        let (ids, labels) = corpus(&[6, 6, 6]);
        let f = stratified_folds(&ids, &labels, 5, 3).unwrap();
        let sizes: Vec<usize> = (0..5).map(|k| f.fold.iter().filter(|&&x| x == k).count()).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1, "{sizes:?}");
    }

    #[test]
    fn file_round_trip() {
        let (ids, labels) = corpus(&[5, 5]);
        let f = stratified_folds(&ids, &labels, 5, 9).unwrap();
        let mut buf = Vec::new();
        write_folds(&mut buf, &f).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("domain_id,fold\nd0_000,"));
        let back = read_folds(&buf[..]).unwrap();
        assert_eq!((back.ids, back.fold, back.folds), (f.ids, f.fold, 5));
    }
}
