//! Pipeline stages. Each reads the documented files from the output
//! directory, checks its upstream metadata and writes its outputs
//! atomically.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use dynpsn::evaluation::{
    majority_baseline, misclassification, read_folds, read_predictions, read_results, stratified_folds,
    write_folds, write_predictions, write_results, FoldAssignment, PredictionRow, PredictionSet, ResultRow,
};
use dynpsn::features::{apply_pipeline, fit_pca, read_features, write_features, PcaModel, PipelineConfig, PcaScope};
use dynpsn::fmt::float;
use dynpsn::graphlets::{
    count_dynamic_orbits, count_static_orbits, enumerate_dynamic_orbits, enumerate_static_orbits, CountConfig,
    Gdvm, OrbitTable,
};
use dynpsn::logreg::{train_ovr, OvrConfig};
use dynpsn::psn::{build_dynamic_psn, build_static_psn, check_connectivity, derive_event_stream, EventStream};
use dynpsn::structure::{
    filter_corpus, generate_synthetic_corpus, read_domains, write_domains, CorpusManifest, ProteinDomain,
    SynthConfig,
};
use ndarray::Axis;
use rayon::prelude::*;

use crate::artifacts::{read_meta, require, sha256_file, StageRun, Workspace, META_DIR};
use crate::{report, DependencyError, InputError, RunConfig};

pub const KINDS: [&str; 2] = ["dynamic", "static"];
pub const MAJORITY: &str = "majority";
pub const RUNTIMES: &str = "meta/runtimes.csv";

pub fn method_id(kind: &str) -> String {
    format!("lr_{kind}")
}

fn csv_writer(buf: &mut Vec<u8>) -> csv::Writer<&mut Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(buf)
}

// ---------------------------------------------------------------------------
// Shared readers

pub fn write_labels(buf: &mut Vec<u8>, domains: &[ProteinDomain<f64>]) -> Result<()> {
    let mut w = csv_writer(buf);
    w.write_record(["domain_id", "label"])?;
    for d in domains {
        w.write_record([&d.id, &d.label])?;
    }
    w.flush()?;
    Ok(())
}

/// `(ids, labels)` from `labels.csv`, in file order.
pub fn read_labels(path: &Path) -> Result<(Vec<String>, Vec<String>)> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    if r.headers()?.iter().collect::<Vec<_>>() != ["domain_id", "label"] {
        return Err(InputError(format!("{}: expected header domain_id,label", path.display())).into());
    }
    let (mut ids, mut labels) = (Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec?;
        ids.push(rec[0].to_string());
        labels.push(rec[1].to_string());
    }
    Ok((ids, labels))
}

fn read_fold_file(path: &Path) -> Result<FoldAssignment> {
    let f = fs::File::open(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(read_folds(f)?)
}

fn safe_id(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

/// Merges `(method, stage) → seconds` rows for one dataset into
/// `meta/runtimes.csv`.
pub fn record_runtimes(ws: &Workspace, dataset: &str, rows: &[(String, &str, f64)]) -> Result<()> {
    let path = ws.path(RUNTIMES);
    let mut all: BTreeMap<(String, String, String), f64> = BTreeMap::new();
    if path.exists() {
        let mut r = csv::Reader::from_path(&path)?;
        for rec in r.records() {
            let rec = rec?;
            if rec.len() == 4 {
                let secs: f64 = rec[3].parse().unwrap_or(0.0);
                all.insert((rec[0].to_string(), rec[1].to_string(), rec[2].to_string()), secs);
            }
        }
    }
    for (method, stage, secs) in rows {
        all.insert((dataset.to_string(), method.clone(), stage.to_string()), *secs);
    }
    ws.write_with(RUNTIMES, |buf| {
        let mut w = csv_writer(buf);
        w.write_record(["dataset_id", "method_id", "stage", "seconds"])?;
        for ((d, m, s), secs) in &all {
            w.write_record([d.as_str(), m, s, &float(*secs)])?;
        }
        w.flush()?;
        Ok(())
    })
}

/// Per-(dataset, method) seconds summed over stages.
pub fn read_runtimes(path: &Path) -> Result<BTreeMap<(String, String), f64>> {
    let mut out = BTreeMap::new();
    let mut r = csv::Reader::from_path(path)?;
    for rec in r.records() {
        let rec = rec?;
        let secs: f64 = rec[3].parse().map_err(|_| InputError(format!("bad seconds {:?}", &rec[3])))?;
        *out.entry((rec[0].to_string(), rec[1].to_string())).or_default() += secs;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// synth

pub fn synth(ws: &Workspace, cfg: &RunConfig) -> Result<()> {
    let mut run = StageRun::start("synth");
    let s = &cfg.synth;
    let corpus = generate_synthetic_corpus::<f64>(&SynthConfig {
        seed: cfg.seed,
        classes: s.classes,
        per_class: s.per_class,
        length_range: (s.min_residues, s.max_residues),
        class_floor: cfg.class_floor.min(s.per_class),
        jitter: s.jitter,
    })
    .map_err(|e| InputError(format!("synth settings: {e}")))?;
    ws.write_with("corpus.jsonl", |buf| Ok(write_domains(buf, &corpus)?))?;
    run.output("corpus.jsonl");
    log::info!("synthesized {} domains in {} classes", corpus.len(), s.classes);
    run.finish(ws, cfg)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// build

fn load_domains(path: &Path) -> Result<Vec<ProteinDomain<f64>>> {
    if !path.exists() {
        return Err(dynpsn::Error::MissingFile(path.to_path_buf()).into());
    }
    if path.extension().is_some_and(|e| e == "jsonl") {
        let f = fs::File::open(path)?;
        Ok(read_domains(BufReader::new(f))?)
    } else {
        Ok(CorpusManifest::load(path)?.resolve_domains()?)
    }
}

pub fn build(ws: &Workspace, cfg: &RunConfig) -> Result<()> {
    let mut run = StageRun::start("build");
    let corpus_path = cfg.corpus_path();
    if cfg.corpus.is_none() {
        require(ws, cfg, "synth")?;
    }
    let domains = load_domains(&corpus_path)?;
    match corpus_path.strip_prefix(&ws.root) {
        Ok(rel) => run.input(ws, &rel.to_string_lossy())?,
        Err(_) => run.external_input(&corpus_path)?,
    }
    for d in &domains {
        if !safe_id(&d.id) {
            return Err(InputError(format!("domain id {:?} is not usable as a file name", d.id)).into());
        }
    }
    let total = domains.len();
    let domains = filter_corpus(domains, cfg.min_length, cfg.class_floor)?;

    let built: Vec<(ProteinDomain<f64>, EventStream)> = domains
        .into_par_iter()
        .map(|d| {
            let dpsn = build_dynamic_psn(&d, cfg.k, cfg.threshold)?;
            let stream = derive_event_stream(&dpsn);
            Ok((d, dpsn, stream))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter_map(|(d, dpsn, stream)| {
            let ok = dpsn.final_snapshot().is_some_and(check_connectivity);
            if !ok {
                log::warn!("dropping domain {}: disconnected PSN", d.id);
            }
            ok.then_some((d, stream))
        })
        .collect();
    // dropping disconnected domains can push a class below the floor
    let (mut domains, mut streams): (Vec<_>, BTreeMap<String, EventStream>) = (Vec::new(), BTreeMap::new());
    for (d, s) in built {
        streams.insert(d.id.clone(), s);
        domains.push(d);
    }
    let domains = filter_corpus(domains, cfg.min_length, cfg.class_floor)?;
    log::info!("kept {} of {total} domains", domains.len());

    ws.write_with("domains.jsonl", |buf| Ok(write_domains(buf, &domains)?))?;
    run.output("domains.jsonl");
    for d in &domains {
        let rel = format!("events/{}.events", d.id);
        ws.write_with(&rel, |buf| Ok(streams[&d.id].write(buf, &d.id)?))?;
        run.output(rel);
    }
    ws.write_with("labels.csv", |buf| write_labels(buf, &domains))?;
    run.output("labels.csv");

    let ids: Vec<String> = domains.iter().map(|d| d.id.clone()).collect();
    let labels: Vec<String> = domains.iter().map(|d| d.label.clone()).collect();
    let folds = stratified_folds(&ids, &labels, cfg.folds, cfg.seed)?;
    ws.write_with("folds.csv", |buf| Ok(write_folds(buf, &folds)?))?;
    run.output("folds.csv");
    run.finish(ws, cfg)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// count

fn gdvm_path(kind: &str, id: &str) -> String {
    match kind {
        "dynamic" => format!("dgdvm/{id}.dgdvm"),
        _ => format!("sgdvm/{id}.gdvm"),
    }
}

pub fn count(ws: &Workspace, cfg: &RunConfig) -> Result<()> {
    require(ws, cfg, "build")?;
    let mut run = StageRun::start("count");
    let (ids, _) = read_labels(&ws.path("labels.csv"))?;

    let clock = Instant::now();
    let dyn_table = enumerate_dynamic_orbits(cfg.max_nodes, cfg.max_events)?;
    ws.write_with("orbits_dynamic.txt", |buf| Ok(dyn_table.write(buf)?))?;
    run.output("orbits_dynamic.txt");
    let count_cfg = CountConfig {
        max_nodes: cfg.max_nodes,
        max_events: cfg.max_events,
        max_gap: cfg.max_gap,
    };
    let dynamic: Vec<Gdvm> = ids
        .par_iter()
        .map(|id| {
            let bytes = ws.read(&format!("events/{id}.events"))?;
            let (file_id, stream) = EventStream::read(&bytes[..])?;
            if &file_id != id {
                bail!("events/{id}.events holds domain {file_id}");
            }
            Ok(count_dynamic_orbits(&stream, &dyn_table, &count_cfg, id)?)
        })
        .collect::<Result<_>>()?;
    let dyn_secs = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let static_table = enumerate_static_orbits(cfg.static_max_nodes)?;
    ws.write_with("orbits_static.txt", |buf| Ok(static_table.write(buf)?))?;
    run.output("orbits_static.txt");
    let f = fs::File::open(ws.path("domains.jsonl"))?;
    let domains: BTreeMap<String, ProteinDomain<f64>> =
        read_domains(BufReader::new(f))?.into_iter().map(|d| (d.id.clone(), d)).collect();
    let stat: Vec<Gdvm> = ids
        .par_iter()
        .map(|id| {
            let d = domains
                .get(id)
                .ok_or_else(|| DependencyError {
                    stage: "build".into(),
                    reason: format!("domain {id} missing from domains.jsonl"),
                })?;
            Ok(count_static_orbits(&build_static_psn(d, cfg.threshold), &static_table, id)?)
        })
        .collect::<Result<_>>()?;
    let static_secs = clock.elapsed().as_secs_f64();

    for (kind, mats) in [("dynamic", &dynamic), ("static", &stat)] {
        for m in mats.iter() {
            let rel = gdvm_path(kind, &m.id);
            ws.write_with(&rel, |buf| Ok(m.write(buf)?))?;
            run.output(rel);
        }
    }
    log::info!(
        "counted {} domains: {} dynamic orbits in {dyn_secs:.2}s, {} static orbits in {static_secs:.2}s",
        ids.len(),
        dyn_table.total_orbits(),
        static_table.total_orbits()
    );
    run.timings.insert("dynamic".into(), dyn_secs);
    run.timings.insert("static".into(), static_secs);
    record_runtimes(
        ws,
        &cfg.dataset_id,
        &[(method_id("dynamic"), "count", dyn_secs), (method_id("static"), "count", static_secs)],
    )?;
    run.finish(ws, cfg)?;
    Ok(())
}

pub fn read_table(ws: &Workspace, kind: &str) -> Result<OrbitTable> {
    let bytes = ws.read(&format!("orbits_{kind}.txt"))?;
    Ok(OrbitTable::read(&bytes[..])?)
}

// ---------------------------------------------------------------------------
// featurize

pub fn featurize(ws: &Workspace, cfg: &RunConfig) -> Result<()> {
    require(ws, cfg, "count")?;
    let mut run = StageRun::start("featurize");
    let (ids, _) = read_labels(&ws.path("labels.csv"))?;
    let pcfg = PipelineConfig {
        correlation: cfg.correlation,
        retain: cfg.pca_retain,
        scope: cfg.pca_scope,
    };
    log::info!("correlation {}, PCA retain {} fitted per {}", cfg.correlation, cfg.pca_retain, cfg.pca_scope);
    let mut runtimes = Vec::new();
    for kind in KINDS {
        let clock = Instant::now();
        let mats: Vec<Gdvm> = ids
            .par_iter()
            .map(|id| {
                let bytes = ws.read(&gdvm_path(kind, id))?;
                Ok(Gdvm::read(&bytes[..])?)
            })
            .collect::<Result<_>>()?;
        let fs = apply_pipeline::<f64>(&mats, &pcfg)?;
        let base = format!("features/{kind}");
        ws.write_with(&format!("{base}.cols"), |buf| Ok(fs.filter.write(buf)?))?;
        ws.write_with(&format!("{base}.feat"), |buf| Ok(write_features(buf, &fs.ids, &fs.matrix)?))?;
        run.output(format!("{base}.cols"));
        run.output(format!("{base}.feat"));
        let pca_rel = format!("{base}.pca");
        match &fs.pca {
            Some(p) => {
                ws.write_with(&pca_rel, |buf| Ok(p.write(buf)?))?;
                run.output(pca_rel);
                log::info!(
                    "{kind}: {} kept columns, {} flattened, {} components ({:.4} variance)",
                    fs.filter.len(),
                    p.input_dim(),
                    p.d(),
                    p.retained_variance()
                );
            }
            None => {
                if ws.exists(&pca_rel) {
                    fs::remove_file(ws.path(&pca_rel))?;
                }
                log::info!("{kind}: {} kept columns, {} flattened", fs.filter.len(), fs.matrix.ncols());
            }
        }
        let secs = clock.elapsed().as_secs_f64();
        run.timings.insert(kind.to_string(), secs);
        runtimes.push((method_id(kind), "featurize", secs));
    }
    record_runtimes(ws, &cfg.dataset_id, &runtimes)?;
    run.finish(ws, cfg)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// train-lr

/// Row indices of `ids` per outer fold.
fn outer_split(ids: &[String], folds: &FoldAssignment, f: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, id) in ids.iter().enumerate() {
        match folds.fold_of(id) {
            Some(k) if k == f => test.push(i),
            Some(_) => train.push(i),
            None => {
                return Err(DependencyError {
                    stage: "build".into(),
                    reason: format!("domain {id} has no fold"),
                }
                .into())
            }
        }
    }
    Ok((train, test))
}

pub fn train_lr(ws: &Workspace, cfg: &RunConfig) -> Result<()> {
    require(ws, cfg, "featurize")?;
    let mut run = StageRun::start("train-lr");
    let (ids, labels) = read_labels(&ws.path("labels.csv"))?;
    let label_of: BTreeMap<&str, &str> = ids.iter().map(String::as_str).zip(labels.iter().map(String::as_str)).collect();
    let folds = read_fold_file(&ws.path("folds.csv"))?;
    let mut selection = Vec::new();
    let mut runtimes = Vec::new();
    for kind in KINDS {
        let clock = Instant::now();
        let method = method_id(kind);
        let bytes = ws.read(&format!("features/{kind}.feat"))?;
        let (fids, x) = read_features::<f64, _>(&bytes[..])?;
        if fids != ids {
            return Err(DependencyError {
                stage: "featurize".into(),
                reason: format!("features/{kind}.feat rows do not match labels.csv"),
            }
            .into());
        }
        let mut rows = Vec::new();
        for f in 0..folds.folds {
            let (train, test) = outer_split(&ids, &folds, f)?;
            let (xtr, xte) = match cfg.pca_scope {
                PcaScope::Dataset => (x.select(Axis(0), &train), x.select(Axis(0), &test)),
                PcaScope::Fold => {
                    let raw_tr = x.select(Axis(0), &train);
                    let pca: PcaModel<f64> = fit_pca(&raw_tr, cfg.pca_retain)?;
                    let rel = format!("models/{kind}_fold{f}.pca");
                    ws.write_with(&rel, |buf| Ok(pca.write(buf)?))?;
                    run.output(rel);
                    (pca.transform(&raw_tr)?, pca.transform(&x.select(Axis(0), &test))?)
                }
            };
            let tr_ids: Vec<String> = train.iter().map(|&i| ids[i].clone()).collect();
            let tr_labels: Vec<String> = train.iter().map(|&i| labels[i].clone()).collect();
            let fit = train_ovr(
                xtr.view(),
                &tr_ids,
                &tr_labels,
                &OvrConfig {
                    l2_grid: cfg.l2_grid.clone(),
                    inner_folds: cfg.inner_folds,
                    seed: cfg.seed.wrapping_add(1 + f as u64),
                },
            )?;
            log::info!("{method} fold {f}: l2 = {}, {} features", fit.l2, xtr.ncols());
            for (l2, err) in &fit.grid {
                selection.push((method.clone(), f, *l2, *err, *l2 == fit.l2));
            }
            let rel = format!("models/{kind}_fold{f}.model");
            ws.write_with(&rel, |buf| Ok(fit.model.write(buf)?))?;
            run.output(rel);
            for (row, &i) in fit.model.predict_all(xte.view())?.into_iter().zip(&test) {
                rows.push(PredictionRow {
                    domain_id: ids[i].clone(),
                    fold: f,
                    true_label: label_of[ids[i].as_str()].to_string(),
                    predicted_label: row.label,
                    scores: row.scores,
                });
            }
        }
        rows.sort_by(|a, b| a.domain_id.cmp(&b.domain_id));
        let set = PredictionSet {
            dataset_id: cfg.dataset_id.clone(),
            method_id: method.clone(),
            rows,
        };
        let rel = format!("predictions/{method}.csv");
        ws.write_with(&rel, |buf| Ok(write_predictions(buf, std::slice::from_ref(&set))?))?;
        run.output(rel);
        let secs = clock.elapsed().as_secs_f64();
        run.timings.insert(kind.to_string(), secs);
        runtimes.push((method, "train-lr", secs));
    }
    ws.write_with("models/l2_selection.csv", |buf| {
        let mut w = csv_writer(buf);
        w.write_record(["method_id", "fold", "l2", "inner_misclassification", "selected"])?;
        for (m, f, l2, err, sel) in &selection {
            w.write_record([m.as_str(), &f.to_string(), &float(*l2), &float(*err), &sel.to_string()])?;
        }
        w.flush()?;
        Ok(())
    })?;
    run.output("models/l2_selection.csv");
    record_runtimes(ws, &cfg.dataset_id, &runtimes)?;
    run.finish(ws, cfg)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// evaluate

fn prediction_files(ws: &Workspace) -> Result<Vec<PathBuf>> {
    let dir = ws.path("predictions");
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let mut out: Vec<PathBuf> = fs::read_dir(&dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    out.retain(|p| p.extension().is_some_and(|e| e == "csv"));
    out.sort();
    Ok(out)
}

fn majority_row(dataset: &str, labels: &[String]) -> Result<ResultRow> {
    let rate = majority_baseline(labels)?;
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    let largest = counts.values().copied().max().unwrap_or(0);
    Ok(ResultRow {
        dataset_id: dataset.to_string(),
        method_id: MAJORITY.into(),
        n: labels.len(),
        wrong: labels.len() - largest,
        aggregate: rate,
        average: rate,
    })
}

/// Scores every prediction set found under `predictions/` plus `extra`
/// files, adds a majority-class row per dataset and writes `results.csv`.
pub fn evaluate(ws: &Workspace, cfg: &RunConfig, extra: &[PathBuf]) -> Result<()> {
    require(ws, cfg, "build")?;
    if read_meta(ws, "train-lr")?.is_some() {
        require(ws, cfg, "train-lr")?;
    }
    let mut run = StageRun::start("evaluate");
    let (ids, labels) = read_labels(&ws.path("labels.csv"))?;
    let folds = read_fold_file(&ws.path("folds.csv"))?;
    run.input(ws, "labels.csv")?;
    run.input(ws, "folds.csv")?;

    let mut files = prediction_files(ws)?;
    for p in extra {
        if !p.exists() {
            return Err(dynpsn::Error::MissingFile(p.clone()).into());
        }
        files.push(p.clone());
    }
    if files.is_empty() {
        return Err(DependencyError {
            stage: "train-lr".into(),
            reason: "no prediction files".into(),
        }
        .into());
    }
    let mut sets: BTreeMap<(String, String), PredictionSet> = BTreeMap::new();
    for p in &files {
        match p.strip_prefix(&ws.root) {
            Ok(rel) => run.input(ws, &rel.to_string_lossy())?,
            Err(_) => run.external_input(p)?,
        }
        let f = fs::File::open(p)?;
        for set in read_predictions(f).with_context(|| format!("reading {}", p.display()))? {
            let key = (set.dataset_id.clone(), set.method_id.clone());
            if key.1 == MAJORITY || sets.contains_key(&key) {
                return Err(InputError(format!(
                    "{}: method {} on dataset {} given more than once",
                    p.display(),
                    key.1,
                    key.0
                ))
                .into());
            }
            sets.insert(key, set);
        }
    }

    let label_of: BTreeMap<&str, &str> = ids.iter().map(String::as_str).zip(labels.iter().map(String::as_str)).collect();
    let mut rows = Vec::new();
    let mut datasets: BTreeMap<String, Vec<String>> = BTreeMap::new();
    datasets.insert(cfg.dataset_id.clone(), labels.clone());
    for ((dataset, method), set) in &sets {
        let own = dataset == &cfg.dataset_id;
        if own {
            for r in &set.rows {
                if label_of.get(r.domain_id.as_str()) != Some(&r.true_label.as_str()) {
                    return Err(InputError(format!(
                        "{method}: domain {} has true label {:?}, labels.csv disagrees",
                        r.domain_id, r.true_label
                    ))
                    .into());
                }
            }
        }
        let m = misclassification(set, if own { Some(&folds) } else { None })
            .with_context(|| format!("method {method} on dataset {dataset}"))?;
        datasets
            .entry(dataset.clone())
            .or_insert_with(|| set.rows.iter().map(|r| r.true_label.clone()).collect());
        rows.push(ResultRow {
            dataset_id: dataset.clone(),
            method_id: method.clone(),
            n: m.total(),
            wrong: m.wrong(),
            aggregate: m.aggregate,
            average: m.average,
        });
    }
    for (dataset, labels) in &datasets {
        rows.push(majority_row(dataset, labels)?);
    }
    rows.sort_by(|a, b| (&a.dataset_id, &a.method_id).cmp(&(&b.dataset_id, &b.method_id)));
    for r in &rows {
        log::info!("{} {}: aggregate {:.4}, average {:.4}", r.dataset_id, r.method_id, r.aggregate, r.average);
    }
    ws.write_with("results.csv", |buf| Ok(write_results(buf, &rows)?))?;
    run.output("results.csv");
    run.finish(ws, cfg)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// rank / stats / report

/// Results file given explicitly, or `results.csv` from `evaluate`.
fn results_source(ws: &Workspace, results: Option<&Path>) -> Result<Vec<ResultRow>> {
    let path = match results {
        Some(p) => {
            if !p.exists() {
                return Err(dynpsn::Error::MissingFile(p.to_path_buf()).into());
            }
            p.to_path_buf()
        }
        None => {
            let p = ws.path("results.csv");
            if !p.exists() {
                return Err(DependencyError {
                    stage: "evaluate".into(),
                    reason: format!("missing {}", p.display()),
                }
                .into());
            }
            if let Some(meta) = read_meta(ws, "evaluate")? {
                if meta.outputs.get("results.csv") != Some(&sha256_file(&p)?) {
                    return Err(DependencyError {
                        stage: "evaluate".into(),
                        reason: "stale `evaluate` outputs: results.csv changed since it ran".into(),
                    }
                    .into());
                }
            }
            p
        }
    };
    let f = fs::File::open(&path)?;
    let rows = read_results(f).with_context(|| format!("reading {}", path.display()))?;
    if rows.is_empty() {
        return Err(InputError(format!("{}: no result rows", path.display())).into());
    }
    Ok(rows)
}

pub fn rank(ws: &Workspace, cfg: &RunConfig, results: Option<&Path>) -> Result<()> {
    let rows = results_source(ws, results)?;
    let mut run = StageRun::start("rank");
    let tables = report::rank_tables(&rows, cfg.relaxed_threshold)?;
    ws.write_atomic("ranks_strict.csv", &report::ranks_csv(&tables.0)?)?;
    ws.write_atomic("ranks_relaxed.csv", &report::ranks_csv(&tables.1)?)?;
    ws.write_atomic("rank_summary.csv", &report::rank_summary_csv(&[&tables.0, &tables.1])?)?;
    for rel in ["ranks_strict.csv", "ranks_relaxed.csv", "rank_summary.csv"] {
        run.output(rel);
    }
    run.finish(ws, cfg)?;
    Ok(())
}

pub fn stats(ws: &Workspace, cfg: &RunConfig, results: Option<&Path>) -> Result<()> {
    let rows = results_source(ws, results)?;
    let mut run = StageRun::start("stats");
    let tests = report::tests(&rows, cfg.bonferroni)?;
    ws.write_atomic("stats.csv", &report::stats_csv(&tests)?)?;
    ws.write_atomic("qvalues.csv", &report::qvalue_csv(&report::methods(&rows), &tests)?)?;
    run.output("stats.csv");
    run.output("qvalues.csv");
    run.finish(ws, cfg)?;
    Ok(())
}

pub fn report(ws: &Workspace, cfg: &RunConfig, results: Option<&Path>) -> Result<()> {
    let rows = results_source(ws, results)?;
    let mut run = StageRun::start("report");
    for (rel, bytes) in report::render(&rows, cfg)? {
        let rel = format!("report/{rel}");
        ws.write_atomic(&rel, &bytes)?;
        run.output(rel);
    }
    let rt = ws.path(RUNTIMES);
    if rt.exists() {
        let runtimes = read_runtimes(&rt)?;
        for (rel, bytes) in report::render_runtimes(&runtimes)? {
            ws.write_atomic(&format!("{META_DIR}/{rel}"), &bytes)?;
        }
    }
    run.finish(ws, cfg)?;
    Ok(())
}

/// Every stage in order; `synth` only when no corpus is configured.
pub fn run_all(ws: &Workspace, cfg: &RunConfig) -> Result<()> {
    if cfg.corpus.is_none() {
        synth(ws, cfg)?;
    }
    build(ws, cfg)?;
    count(ws, cfg)?;
    featurize(ws, cfg)?;
    train_lr(ws, cfg)?;
    evaluate(ws, cfg, &[])?;
    rank(ws, cfg, None)?;
    stats(ws, cfg, None)?;
    report(ws, cfg, None)?;
    Ok(())
}
