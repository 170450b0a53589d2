//! Run configuration: defaults, an optional TOML file, then command-line
//! overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use dynpsn::features::{Correlation, PcaScope};
use dynpsn::logreg::default_l2_grid;
use serde::{Deserialize, Serialize};

use crate::InputError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSettings {
    pub classes: usize,
    pub per_class: usize,
    pub min_residues: usize,
    pub max_residues: usize,
    pub jitter: f64,
}

impl Default for SynthSettings {
    fn default() -> Self {
        Self {
            classes: 3,
            per_class: 30,
            min_residues: 40,
            max_residues: 80,
            jitter: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Corpus manifest (`.json`) or canonical domain records (`.jsonl`).
    /// Unset means `<out>/corpus.jsonl`, as written by `synth`.
    pub corpus: Option<PathBuf>,
    pub dataset_id: String,
    pub k: usize,
    pub threshold: f64,
    pub min_length: usize,
    pub class_floor: usize,
    pub max_nodes: usize,
    pub max_events: usize,
    pub max_gap: Option<u32>,
    pub static_max_nodes: usize,
    pub correlation: Correlation,
    pub pca_retain: f64,
    pub pca_scope: PcaScope,
    pub l2_grid: Vec<f64>,
    pub folds: usize,
    pub inner_folds: usize,
    pub seed: u64,
    pub relaxed_threshold: f64,
    /// Bonferroni divisor; unset means the number of ordered method pairs.
    pub bonferroni: Option<usize>,
    pub jobs: Option<usize>,
    pub out: PathBuf,
    pub synth: SynthSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            corpus: None,
            dataset_id: "synthetic".into(),
            k: dynpsn::psn::DEFAULT_K,
            threshold: dynpsn::psn::DEFAULT_THRESHOLD,
            min_length: dynpsn::structure::DEFAULT_MIN_LENGTH,
            class_floor: dynpsn::structure::DEFAULT_CLASS_FLOOR,
            max_nodes: 4,
            max_events: 6,
            max_gap: None,
            static_max_nodes: 5,
            correlation: Correlation::Spearman,
            pca_retain: dynpsn::features::DEFAULT_RETAIN,
            pca_scope: PcaScope::Dataset,
            l2_grid: default_l2_grid(),
            folds: 5,
            inner_folds: 5,
            seed: 7,
            relaxed_threshold: 0.02,
            bonferroni: None,
            jobs: None,
            out: PathBuf::from("out"),
            synth: SynthSettings::default(),
        }
    }
}

/// Values given on the command line; each replaces the file/default value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub relaxed_threshold: Option<f64>,
    pub correlation: Option<Correlation>,
    pub pca_scope: Option<PcaScope>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| InputError(format!("config: {e}")))?;
        Ok(cfg)
    }

    /// Defaults, then `file` (if any), then `overrides`.
    pub fn load(file: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let mut cfg = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| InputError(format!("cannot read config {}: {e}", path.display())))?;
                let mut cfg = Self::from_toml(&text)?;
                // relative corpus paths are relative to the config file
                if let (Some(c), Some(dir)) = (&cfg.corpus, path.parent()) {
                    if c.is_relative() {
                        cfg.corpus = Some(dir.join(c));
                    }
                }
                cfg
            }
            None => Self::default(),
        };
        cfg.apply(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = &o.out {
            self.out = v.clone();
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.jobs {
            self.jobs = Some(v);
        }
        if let Some(v) = o.relaxed_threshold {
            self.relaxed_threshold = v;
        }
        if let Some(v) = o.correlation {
            self.correlation = v;
        }
        if let Some(v) = o.pca_scope {
            self.pca_scope = v;
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| -> Result<()> { Err(InputError(msg).into()) };
        if self.dataset_id.is_empty() || self.dataset_id.contains([',', '"', '\n']) || self.dataset_id == "*" {
            return bad(format!("dataset_id {:?} is not usable in CSV output", self.dataset_id));
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if !(self.threshold > 0.0 && self.threshold.is_finite()) {
            return bad(format!("threshold {} must be positive", self.threshold));
        }
        if !(2..=4).contains(&self.max_nodes) || !(1..=8).contains(&self.max_events) {
            return bad(format!(
                "graphlet limits ({}, {}) outside 2..=4 nodes, 1..=8 events",
                self.max_nodes, self.max_events
            ));
        }
        if !(2..=5).contains(&self.static_max_nodes) {
            return bad(format!("static_max_nodes {} outside 2..=5", self.static_max_nodes));
        }
        if !(self.pca_retain > 0.0 && self.pca_retain <= 1.0) {
            return bad(format!("pca_retain {} outside (0, 1]", self.pca_retain));
        }
        if self.l2_grid.is_empty() || self.l2_grid.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return bad(format!("l2_grid {:?} must hold positive values", self.l2_grid));
        }
        if self.folds < 2 || self.inner_folds < 2 {
            return bad("folds and inner_folds must be at least 2".into());
        }
        if !(self.relaxed_threshold >= 0.0 && self.relaxed_threshold < 1.0) {
            return bad(format!("relaxed_threshold {} outside [0, 1)", self.relaxed_threshold));
        }
        if self.jobs == Some(0) {
            return bad("jobs must be at least 1".into());
        }
        if self.bonferroni == Some(0) {
            return bad("bonferroni divisor must be at least 1".into());
        }
        Ok(())
    }

    pub fn corpus_path(&self) -> PathBuf {
        self.corpus.clone().unwrap_or_else(|| self.out.join("corpus.jsonl"))
    }

    /// Settings each stage's outputs depend on, used to detect stale
    /// upstream results.
    pub fn fingerprint(&self, stage: &str) -> Result<serde_json::Value> {
        let mut keys: Vec<&str> = vec!["dataset_id"];
        let build = ["corpus", "k", "threshold", "min_length", "class_floor", "folds", "seed", "synth"];
        let count = ["max_nodes", "max_events", "max_gap", "static_max_nodes"];
        let featurize = ["correlation", "pca_retain", "pca_scope"];
        let train = ["l2_grid", "inner_folds"];
        match stage {
            "synth" => keys.extend(["seed", "synth"]),
            "build" => keys.extend(build),
            "count" => keys.extend(build.iter().chain(&count)),
            "featurize" => keys.extend(build.iter().chain(&count).chain(&featurize)),
            "train-lr" => keys.extend(build.iter().chain(&count).chain(&featurize).chain(&train)),
            _ => bail!("no fingerprint for stage {stage}"),
        }
        let full = serde_json::to_value(self).context("serializing config")?;
        let mut out = serde_json::Map::new();
        for k in keys {
            out.insert(k.to_string(), full[k].clone());
        }
        Ok(serde_json::Value::Object(out))
    }
}
