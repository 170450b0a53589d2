use std::collections::BTreeMap;

use dynpsn::evaluation::{
    competition_ranks, misclassification, rank_methods, stratified_folds, wilcoxon_one_sided, DatasetRates,
    PredictionRow, PredictionSet, RankPolicy,
};
use num_rational::Ratio;
use proptest::prelude::*;

/// Reference one-sided p by listing every sign assignment.
fn enumerate_p(d: &[f64]) -> f64 {
    let nz: Vec<f64> = d.iter().copied().filter(|v| *v != 0.0).collect();
    let n = nz.len();
    let abs: Vec<f64> = nz.iter().map(|v| v.abs()).collect();
    let ranks: Vec<f64> = abs
        .iter()
        .map(|a| {
            let less = abs.iter().filter(|b| *b < a).count() as f64;
            let equal = abs.iter().filter(|b| *b == a).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect();
    let observed: f64 = (0..n).filter(|&i| nz[i] > 0.0).map(|i| ranks[i]).sum();
    let mut hits = 0u64;
    for mask in 0u32..1 << n {
        let w: f64 = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if w <= observed + 1e-9 {
            hits += 1;
        }
    }
    hits as f64 / (1u64 << n) as f64
}

proptest! {
    #[test]
    fn exact_wilcoxon_matches_enumeration(
        pairs in prop::collection::vec((0u8..8, 0u8..8), 5..=12),
    ) {
        // rates on a coarse grid so ties and zeros are common
        let x: Vec<f64> = pairs.iter().map(|p| p.0 as f64 / 8.0).collect();
        let y: Vec<f64> = pairs.iter().map(|p| p.1 as f64 / 8.0).collect();
        let d: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        let t = wilcoxon_one_sided(&x, &y, 3).unwrap();
        if d.iter().all(|v| *v == 0.0) {
            prop_assert!(t.undefined);
            prop_assert_eq!((t.p, t.q), (1.0, 1.0));
        } else {
            prop_assert!(t.exact);
            prop_assert!((t.p - enumerate_p(&d)).abs() <= 1e-12);
            prop_assert!(t.p > 0.0 && t.p <= 1.0);
            prop_assert_eq!(t.q, (t.p * 3.0).min(1.0));
        }
    }

    #[test]
    fn aggregate_is_the_weighted_mean_of_fold_rates(
        rows in prop::collection::vec((0usize..5, any::<bool>()), 1..60),
    ) {
        let set = PredictionSet {
            dataset_id: "ds".into(),
            method_id: "m".into(),
            rows: rows
                .iter()
                .enumerate()
                .map(|(i, &(fold, ok))| PredictionRow {
                    domain_id: format!("d{i}"),
                    fold,
                    true_label: "a".into(),
                    predicted_label: if ok { "a".into() } else { "b".into() },
                    scores: vec![],
                })
                .collect(),
        };
        let m = misclassification(&set, None).unwrap();
        let total = m.total() as i64;
        let weighted: Ratio<i64> = m
            .per_fold
            .iter()
            .map(|f| Ratio::new(f.total as i64, total) * Ratio::new(f.wrong as i64, f.total as i64))
            .sum();
        let wrong = rows.iter().filter(|r| !r.1).count() as i64;
        prop_assert_eq!(weighted, Ratio::new(wrong, total));
        prop_assert_eq!(m.aggregate, wrong as f64 / total as f64);
    }

    #[test]
    fn strict_ranks_are_competition_numbering(rates in prop::collection::vec(0u8..6, 2..8)) {
        let r: Vec<f64> = rates.iter().map(|&v| v as f64 / 10.0).collect();
        let ranks = competition_ranks(&r, RankPolicy::Strict);
        prop_assert_eq!(*ranks.iter().min().unwrap(), 1);
        for (i, &k) in ranks.iter().enumerate() {
            let ahead = r.iter().filter(|&&o| o < r[i]).count();
            prop_assert_eq!(k, ahead + 1);
        }
    }

    #[test]
    fn relaxed_rank1_share_grows_with_threshold(
        table in prop::collection::vec(prop::collection::vec(0u16..300, 3), 1..10),
    ) {
        let data: Vec<DatasetRates> = table
            .iter()
            .enumerate()
            .map(|(i, row)| DatasetRates {
                dataset_id: format!("ds{i}"),
                rates: row.iter().enumerate().map(|(m, &v)| (format!("m{m}"), v as f64 / 1000.0)).collect(),
            })
            .collect();
        let mut prev: Option<Vec<usize>> = None;
        for thr in [0.0, 0.01, 0.02, 0.05, 0.10] {
            let t = rank_methods(&data, RankPolicy::Relaxed(thr)).unwrap();
            let share: Vec<usize> = t.summary().iter().map(|s| s.rank1).collect();
            if let Some(p) = &prev {
                for (a, b) in p.iter().zip(&share) {
                    prop_assert!(b >= a);
                }
            }
            for s in t.summary() {
                prop_assert!((0.0..=100.0).contains(&s.pct_rank1()));
                prop_assert_eq!(s.absolute + s.tied, s.rank1);
            }
            prev = Some(share);
        }
    }

    #[test]
    fn stratified_folds_balance_each_class(
        counts in prop::collection::vec(5usize..25, 1..5),
        seed in any::<u64>(),
    ) {
        let mut ids = Vec::new();
        let mut labels = Vec::new();
        for (c, &n) in counts.iter().enumerate() {
            for i in 0..n {
                ids.push(format!("x{c}_{i}"));
                labels.push(format!("c{c}"));
            }
        }
        let f = stratified_folds(&ids, &labels, 5, seed).unwrap();
        prop_assert_eq!(f.fold.len(), ids.len());
        for c in 0..counts.len() {
            let mut per = [0usize; 5];
            for i in 0..ids.len() {
                if labels[i] == format!("c{c}") {
                    per[f.fold[i]] += 1;
                }
            }
            prop_assert!(per.iter().max().unwrap() - per.iter().min().unwrap() <= 1);
        }
    }
}

#[test]
fn worked_ranking_examples() {
    let data = vec![DatasetRates {
        dataset_id: "ds".into(),
        rates: BTreeMap::from([("A".into(), 0.1), ("B".into(), 0.1), ("C".into(), 0.2)]),
    }];
    let t = rank_methods(&data, RankPolicy::Strict).unwrap();
    assert_eq!(t.ranks[0], vec![Some(1), Some(1), Some(3)]);

    let close = vec![DatasetRates {
        dataset_id: "ds".into(),
        rates: BTreeMap::from([("A".into(), 0.070), ("B".into(), 0.088)]),
    }];
    let relaxed = rank_methods(&close, RankPolicy::Relaxed(0.02)).unwrap();
    assert_eq!(relaxed.ranks[0], vec![Some(1), Some(1)]);
    let s = relaxed.summary();
    assert_eq!((s[0].tied, s[1].tied), (1, 1));
    let strict = rank_methods(&close, RankPolicy::Strict).unwrap();
    assert_eq!(strict.ranks[0], vec![Some(1), Some(2)]);
}

#[test]
fn eight_uniform_wins_against_enumeration() {
    let x = [0.05, 0.10, 0.02, 0.07, 0.01, 0.03, 0.08, 0.04];
    let y = [0.15, 0.30, 0.12, 0.27, 0.21, 0.13, 0.38, 0.44];
    let d: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
    let t = wilcoxon_one_sided(&x, &y, 1).unwrap();
    assert_eq!(t.p, 1.0 / 256.0);
    assert_eq!(enumerate_p(&d), 1.0 / 256.0);
    let capped = wilcoxon_one_sided(&x, &y, 28 * 10).unwrap();
    assert_eq!(capped.q, 1.0);
}
