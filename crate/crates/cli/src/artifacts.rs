//! Output-directory plumbing: atomic writes, content hashes and the
//! per-stage metadata used for dependency checks.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{DependencyError, InputError, RunConfig};

pub const META_DIR: &str = "meta";

#[derive(Debug, Clone)]
pub struct Workspace {
    pub root: PathBuf,
}

impl Workspace {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    /// Writes through a sibling temp file and a rename, so readers never see
    /// a partial file.
    pub fn write_atomic(&self, rel: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.path(rel), bytes)
    }

    /// Renders into memory with `f`, then writes atomically.
    pub fn write_with<F>(&self, rel: &str, f: F) -> Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> Result<()>,
    {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write_atomic(rel, &buf)
    }

    pub fn read(&self, rel: &str) -> Result<Vec<u8>> {
        let p = self.path(rel);
        fs::read(&p).with_context(|| format!("reading {}", p.display()))
    }

    pub fn exists(&self, rel: &str) -> bool {
        self.path(rel).exists()
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    {
        let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    Ok(sha256_bytes(&bytes))
}

/// Metadata recorded by every stage under `meta/<stage>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageMeta {
    pub stage: String,
    pub version: String,
    pub config: RunConfig,
    /// The config keys this stage's outputs depend on.
    pub fingerprint: serde_json::Value,
    pub started_unix_ms: u128,
    pub seconds: f64,
    /// Extra timings, e.g. per feature kind.
    pub timings: BTreeMap<String, f64>,
    /// Hashes keyed by path relative to the output directory (absolute for
    /// files outside it).
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

/// Bookkeeping for one stage execution.
pub struct StageRun {
    stage: String,
    started: SystemTime,
    clock: Instant,
    inputs: BTreeMap<String, String>,
    outputs: Vec<String>,
    pub timings: BTreeMap<String, f64>,
}

impl StageRun {
    pub fn start(stage: &str) -> Self {
        log::info!("stage {stage}: start");
        Self {
            stage: stage.to_string(),
            started: SystemTime::now(),
            clock: Instant::now(),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            timings: BTreeMap::new(),
        }
    }

    /// Records an input by its current content hash.
    pub fn input(&mut self, ws: &Workspace, rel: &str) -> Result<()> {
        let h = sha256_file(&ws.path(rel))?;
        self.inputs.insert(rel.to_string(), h);
        Ok(())
    }

    pub fn external_input(&mut self, path: &Path) -> Result<()> {
        let h = sha256_file(path)?;
        self.inputs.insert(path.display().to_string(), h);
        Ok(())
    }

    pub fn output(&mut self, rel: impl Into<String>) {
        self.outputs.push(rel.into());
    }

    /// Hashes the outputs and writes the stage metadata.
    pub fn finish(self, ws: &Workspace, cfg: &RunConfig) -> Result<StageMeta> {
        let seconds = self.clock.elapsed().as_secs_f64();
        let mut outputs = BTreeMap::new();
        for rel in &self.outputs {
            outputs.insert(rel.clone(), sha256_file(&ws.path(rel))?);
        }
        let fingerprint = match cfg.fingerprint(&self.stage) {
            Ok(v) => v,
            Err(_) => serde_json::Value::Null,
        };
        let meta = StageMeta {
            stage: self.stage.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: cfg.clone(),
            fingerprint,
            started_unix_ms: self.started.duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0),
            seconds,
            timings: self.timings,
            inputs: self.inputs,
            outputs,
        };
        let text = serde_json::to_string_pretty(&meta)?;
        ws.write_atomic(&meta_file(&self.stage), text.as_bytes())?;
        log::info!("stage {}: done in {seconds:.2}s", self.stage);
        Ok(meta)
    }
}

pub fn meta_file(stage: &str) -> String {
    format!("{META_DIR}/{stage}.json")
}

pub fn read_meta(ws: &Workspace, stage: &str) -> Result<Option<StageMeta>> {
    let p = ws.path(&meta_file(stage));
    if !p.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&p)?;
    let meta = serde_json::from_str(&text).map_err(|e| InputError(format!("{}: {e}", p.display())))?;
    Ok(Some(meta))
}

fn dependency(stage: &str, reason: String) -> anyhow::Error {
    DependencyError {
        stage: stage.to_string(),
        reason,
    }
    .into()
}

/// Checks that `stage` has run in this output directory with the current
/// settings and that neither its inputs nor its outputs changed since.
pub fn require(ws: &Workspace, cfg: &RunConfig, stage: &str) -> Result<StageMeta> {
    let meta = read_meta(ws, stage)?
        .ok_or_else(|| dependency(stage, format!("missing upstream stage `{stage}` in {}", ws.root.display())))?;
    let want = cfg.fingerprint(stage)?;
    if meta.fingerprint != want {
        let mut changed = Vec::new();
        if let (Some(a), Some(b)) = (meta.fingerprint.as_object(), want.as_object()) {
            for (k, v) in b {
                if a.get(k) != Some(v) {
                    changed.push(k.clone());
                }
            }
        }
        return Err(dependency(
            stage,
            format!("stale `{stage}` outputs: settings changed since it ran ({})", changed.join(", ")),
        ));
    }
    for (rel, hash) in meta.outputs.iter().chain(&meta.inputs) {
        let p = if Path::new(rel).is_absolute() {
            PathBuf::from(rel)
        } else {
            ws.path(rel)
        };
        if !p.exists() {
            return Err(dependency(stage, format!("missing file {} recorded by `{stage}`", p.display())));
        }
        if &sha256_file(&p)? != hash {
            return Err(dependency(stage, format!("stale `{stage}` outputs: {} changed since it ran", p.display())));
        }
    }
    Ok(meta)
}
