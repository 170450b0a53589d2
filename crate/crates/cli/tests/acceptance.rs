//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Runs the real `dynpsn` binary for the end-to-end
//! criteria.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use dynpsn::evaluation::{
    competition_ranks, misclassification, rank_methods, read_folds, read_predictions, read_results,
    wilcoxon_one_sided, DatasetRates, RankPolicy,
};
use dynpsn::features::{compute_gcm, ColumnFilter, Correlation, PcaModel};
use dynpsn::graphlets::{
    brute_force_count, count_dynamic_orbits, enumerate_dynamic_orbits, CountConfig, Gdvm,
};
use dynpsn::logreg::{gradient, objective, train_binary};
use dynpsn::rng::SplitMix64;
use dynpsn_cli::oracle::{random_stream, synthetic_prefix_streams};
use ndarray::{Array1, Array2};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_dynpsn")
}

fn run_pipeline(out: &Path) -> Result<Duration, String> {
    let clock = Instant::now();
    let status = Command::new(bin())
        .args(["run", "--out"])
        .arg(out)
        .env("RUST_LOG", "warn")
        .status()
        .map_err(|e| e.to_string())?;
    if !status.success() {
        return Err(format!("dynpsn run exited with {status}"));
    }
    Ok(clock.elapsed())
}

/// Relative path → bytes for every file under `root`, skipping `meta/`.
fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            let rel = p.strip_prefix(root).unwrap().to_path_buf();
            if rel == Path::new("meta") {
                continue;
            }
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

fn unit(rng: &mut SplitMix64) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn uniform(rng: &mut SplitMix64, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * unit(rng)
}

fn aggregate_of(run: &Path) -> BTreeMap<String, f64> {
    let rows = read_results(fs::File::open(run.join("results.csv")).unwrap()).unwrap();
    rows.into_iter().map(|r| (r.method_id, r.aggregate)).collect()
}

// ---------------------------------------------------------------------------

fn orbit_catalogue() -> Outcome {
    let clock = Instant::now();
    let t = match enumerate_dynamic_orbits(4, 6) {
        Ok(t) => t,
        Err(e) => return outcome(false, e.to_string()),
    };
    let secs = clock.elapsed().as_secs_f64();
    outcome(
        t.total_orbits() == 3727 && secs < 300.0,
        format!("{} orbits in {} graphlets, {secs:.2}s", t.total_orbits(), t.class_count()),
    )
}

fn counting_correctness() -> Outcome {
    let clock = Instant::now();
    let table = enumerate_dynamic_orbits(4, 6).unwrap();
    let cfg = CountConfig::default();
    let mut rng = SplitMix64::new(20240607);
    let mut streams: Vec<(String, _)> = (0..50).map(|i| (format!("random{i}"), random_stream(&mut rng))).collect();
    let random = streams.len();
    streams.extend(synthetic_prefix_streams(7).unwrap());
    let mut mismatches = Vec::new();
    let mut events = 0;
    for (id, s) in &streams {
        events += s.len();
        let fast = count_dynamic_orbits(s, &table, &cfg, id).unwrap();
        let slow = brute_force_count(s, &table, &cfg, id).unwrap();
        if fast != slow {
            mismatches.push(id.clone());
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    outcome(
        mismatches.is_empty() && secs < 600.0,
        format!(
            "{random} random + {} synthetic prefix streams ({events} events), mismatches {mismatches:?}, {secs:.2}s",
            streams.len() - random
        ),
    )
}

fn feature_pipeline(run_a: &Path, run_b: &Path) -> Outcome {
    let cols = ColumnFilter::read(&fs::read(run_a.join("features/dynamic.cols")).unwrap()[..]).unwrap();
    let pca = PcaModel::<f64>::read(&fs::read(run_a.join("features/dynamic.pca")).unwrap()[..]).unwrap();
    let c = cols.len();
    let flat_ok = pca.input_dim() == c * (c - 1) / 2 && 211 * 210 / 2 == 22_155;

    let mut worst = 0.0f64;
    for e in fs::read_dir(run_a.join("dgdvm")).unwrap() {
        let m = Gdvm::read(&fs::read(e.unwrap().path()).unwrap()[..]).unwrap();
        let g = compute_gcm(&cols.apply::<f64>(&m).unwrap(), Correlation::Spearman).unwrap().matrix;
        for i in 0..c {
            worst = worst.max((g[[i, i]] - 1.0).abs());
            for j in 0..c {
                worst = worst.max((g[[i, j]] - g[[j, i]]).abs());
            }
        }
    }
    let ratios = &pca.explained_variance_ratio;
    let kept: f64 = ratios[..pca.d()].iter().sum();
    let before: f64 = ratios[..pca.d() - 1].iter().sum();
    let minimal = kept >= 0.90 && before < 0.90;

    let rerun = ["dynamic", "static"].iter().all(|k| {
        ["cols", "feat", "pca"].iter().all(|ext| {
            let rel = format!("features/{k}.{ext}");
            fs::read(run_a.join(&rel)).ok() == fs::read(run_b.join(&rel)).ok()
        })
    });
    outcome(
        flat_ok && worst <= 1e-12 && minimal && rerun,
        format!(
            "c = {c}, flattened {} = c(c-1)/2; GCM asymmetry/diagonal error {worst:.1e}; \
             d = {} keeps {kept:.4} (d-1 keeps {before:.4}); rerun identical: {rerun}",
            pca.input_dim(),
            pca.d()
        ),
    )
}

fn end_to_end(run: &Path, elapsed: Duration) -> Outcome {
    let rates = aggregate_of(run);
    let dynamic = rates["lr_dynamic"];
    let majority = rates["majority"];
    let labels = fs::read_to_string(run.join("labels.csv")).unwrap();
    let n = labels.lines().count() - 1;
    outcome(
        n == 90 && dynamic <= 0.10 && (majority - 2.0 / 3.0).abs() < 1e-12 && elapsed.as_secs() <= 1800,
        format!(
            "{n} domains; dynamic LR aggregate {dynamic:.4}, majority {majority:.4}; full run {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn baseline_ordering(run: &Path) -> Outcome {
    let rates = aggregate_of(run);
    let (d, s) = (rates["lr_dynamic"], rates["lr_static"]);
    outcome(d <= s + 0.02, format!("dynamic {d:.4} <= static {s:.4} + 0.02"))
}

/// One-sided p by listing all sign assignments; `d` must have distinct
/// nonzero magnitudes.
fn enumerate_p(d: &[f64]) -> f64 {
    let n = d.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| d[a].abs().total_cmp(&d[b].abs()));
    let mut rank = vec![0.0; n];
    for (r, &i) in idx.iter().enumerate() {
        rank[i] = r as f64 + 1.0;
    }
    let observed: f64 = (0..n).filter(|&i| d[i] > 0.0).map(|i| rank[i]).sum();
    let hits = (0u32..1 << n)
        .filter(|mask| (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| rank[i]).sum::<f64>() <= observed)
        .count();
    hits as f64 / (1u64 << n) as f64
}

fn evaluation_protocol(run: &Path) -> Outcome {
    let mut notes = Vec::new();
    let strict = competition_ranks(&[0.1, 0.1, 0.2], RankPolicy::Strict) == vec![1, 1, 3];
    notes.push(format!("ranks {{0.1,0.1,0.2}} -> {{1,1,3}}: {strict}"));

    let close = vec![DatasetRates {
        dataset_id: "d".into(),
        rates: BTreeMap::from([("A".into(), 0.070), ("B".into(), 0.088)]),
    }];
    let relaxed = rank_methods(&close, RankPolicy::Relaxed(0.02)).unwrap().ranks[0] == vec![Some(1), Some(1)];
    notes.push(format!("relaxed tie at 0.018: {relaxed}"));

    // weighted-mean identity on the pipeline's own predictions, in integers
    let folds = read_folds(fs::File::open(run.join("folds.csv")).unwrap()).unwrap();
    let sets = read_predictions(fs::File::open(run.join("predictions/lr_static.csv")).unwrap()).unwrap();
    let m = misclassification(&sets[0], Some(&folds)).unwrap();
    let total = m.total() as u64;
    let weighted_num: u64 = m.per_fold.iter().map(|f| f.wrong as u64).sum();
    let identity = m.per_fold.iter().map(|f| f.total as u64).sum::<u64>() == total
        && m.aggregate == weighted_num as f64 / total as f64;
    notes.push(format!("aggregate = fold-weighted mean: {identity}"));

    let x = [0.05, 0.10, 0.02, 0.07, 0.01, 0.03, 0.08, 0.04];
    let y = [0.15, 0.30, 0.12, 0.27, 0.21, 0.13, 0.38, 0.44];
    let d: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
    let t = wilcoxon_one_sided(&x, &y, 1).unwrap();
    let exact = t.p == 0.00390625 && enumerate_p(&d) == 0.00390625;
    notes.push(format!("Wilcoxon p = {} (enumeration {}): {exact}", t.p, enumerate_p(&d)));

    let capped = wilcoxon_one_sided(&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6], &[0.2, 0.1, 0.5, 0.6, 0.7, 0.9], 28).unwrap();
    let cap = capped.p > 1.0 / 28.0 && capped.q == 1.0;
    notes.push(format!("Bonferroni cap (p = {:.4}, 28 comparisons, q = {}): {cap}", capped.p, capped.q));

    outcome(strict && relaxed && identity && exact && cap, notes.join("; "))
}

fn lr_numerics() -> Outcome {
    let mut rng = SplitMix64::new(99);
    let mut worst = 0.0f64;
    let mut monotone = true;
    let mut converged = true;
    for _ in 0..20 {
        let n = 4 + (rng.next_u64() % 16) as usize;
        let d = 1 + (rng.next_u64() % 5) as usize;
        let x = Array2::from_shape_fn((n, d), |_| uniform(&mut rng, -2.0, 2.0));
        let mut y: Vec<bool> = (0..n).map(|_| rng.next_u64() % 2 == 0).collect();
        y[0] = true;
        y[1] = false;
        let w = Array1::from_shape_fn(d, |_| uniform(&mut rng, -1.5, 1.5));
        let b = uniform(&mut rng, -1.0, 1.0);
        let l2 = 10f64.powf(uniform(&mut rng, -3.0, 1.0));

        let (gw, gb) = gradient(x.view(), &y, w.view(), b, l2);
        let f = |w: &Array1<f64>, b: f64| objective(x.view(), &y, w.view(), b, l2);
        let h = 1e-6;
        let mut numeric = Vec::new();
        for j in 0..d {
            let (mut up, mut dn) = (w.clone(), w.clone());
            up[j] += h;
            dn[j] -= h;
            numeric.push((f(&up, b) - f(&dn, b)) / (2.0 * h));
        }
        numeric.push((f(&w, b + h) - f(&w, b - h)) / (2.0 * h));
        let analytic: Vec<f64> = gw.iter().copied().chain([gb]).collect();
        let diff = analytic.iter().zip(&numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
        let scale = analytic.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-8);
        worst = worst.max(diff / scale);

        let (_, trace) = train_binary(x.view(), &y, l2, "t").unwrap();
        monotone &= trace.objective.windows(2).all(|w| w[1] <= w[0]);
        converged &= trace.gradient_norm <= 1e-6;
    }
    outcome(
        worst <= 1e-5 && monotone && converged,
        format!("20 instances: worst relative gradient error {worst:.2e}, objective monotone: {monotone}"),
    )
}

fn determinism(a: &Path, b: &Path) -> Outcome {
    let (sa, sb) = (snapshot(a), snapshot(b));
    let differing: Vec<_> = sa
        .keys()
        .chain(sb.keys())
        .filter(|k| sa.get(*k) != sb.get(*k))
        .map(|k| k.display().to_string())
        .collect();
    outcome(
        differing.is_empty() && sa.len() > 100,
        format!("{} files compared outside meta/, differing: {differing:?}", sa.len()),
    )
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let (run_a, run_b) = (tmp.path().join("a"), tmp.path().join("b"));
    let runs = run_pipeline(&run_a).and_then(|t| run_pipeline(&run_b).map(|_| t));

    let mut results: Vec<(&str, Outcome)> = vec![
        ("1 orbit catalogue (4,6) = 3727", orbit_catalogue()),
        ("2 fast counter == brute force", counting_correctness()),
    ];
    match &runs {
        Ok(elapsed) => {
            results.push(("3 feature pipeline", feature_pipeline(&run_a, &run_b)));
            results.push(("4 dynamic LR end to end", end_to_end(&run_a, *elapsed)));
            results.push(("5 dynamic <= static + 0.02", baseline_ordering(&run_a)));
            results.push(("6 evaluation protocol", evaluation_protocol(&run_a)));
        }
        Err(e) => {
            for name in ["3 feature pipeline", "4 dynamic LR end to end", "5 dynamic <= static + 0.02", "6 evaluation protocol"] {
                results.push((name, outcome(false, format!("pipeline failed: {e}"))));
            }
        }
    }
    results.push(("7 LR numerics", lr_numerics()));
    results.push((
        "8 determinism",
        match &runs {
            Ok(_) => determinism(&run_a, &run_b),
            Err(e) => outcome(false, format!("pipeline failed: {e}")),
        },
    ));

    let mut failed = 0;
    for (name, o) in &results {
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
