//! Cα coordinate ingestion: PDB `ATOM` records, canonical domain records,
//! corpus manifests and the seeded synthetic corpus.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Real, Result};

pub const DEFAULT_MIN_LENGTH: usize = 30;
pub const DEFAULT_CLASS_FLOOR: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Residue<T> {
    pub index: usize,
    pub aa: char,
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Residue<T> {
    pub fn distance_sq(&self, other: &Self) -> T {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        dx * dx + dy * dy + dz * dz
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ProteinDomain<T> {
    pub id: String,
    pub label: String,
    pub residues: Vec<Residue<T>>,
}

impl<T: Real> ProteinDomain<T> {
    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }

    /// First `n` residues as a new domain (same id and label).
    pub fn prefix(&self, n: usize) -> Self {
        Self {
            id: self.id.clone(),
            label: self.label.clone(),
            residues: self.residues[..n.min(self.len())].to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::Corpus("domain with empty id".into()));
        }
        if self.label.is_empty() {
            return Err(Error::Corpus(format!("domain {} has an empty label", self.id)));
        }
        for (i, r) in self.residues.iter().enumerate() {
            if r.index != i + 1 {
                return Err(Error::Corpus(format!(
                    "domain {}: residue {} has index {}, expected {}",
                    self.id,
                    i,
                    r.index,
                    i + 1
                )));
            }
            if !(r.x.is_finite() && r.y.is_finite() && r.z.is_finite()) {
                return Err(Error::Corpus(format!(
                    "domain {}: residue {} has non-finite coordinates",
                    self.id, r.index
                )));
            }
        }
        Ok(())
    }
}

fn one_letter(resname: &str) -> char {
    match resname {
        "ALA" => 'A',
        "ARG" => 'R',
        "ASN" => 'N',
        "ASP" => 'D',
        "CYS" => 'C',
        "GLN" => 'Q',
        "GLU" => 'E',
        "GLY" => 'G',
        "HIS" => 'H',
        "ILE" => 'I',
        "LEU" => 'L',
        "LYS" => 'K',
        "MET" => 'M',
        "PHE" => 'F',
        "PRO" => 'P',
        "SER" => 'S',
        "THR" => 'T',
        "TRP" => 'W',
        "TYR" => 'Y',
        "VAL" => 'V',
        "SEC" => 'U',
        "PYL" => 'O',
        "MSE" => 'M',
        _ => 'X',
    }
}

struct CaCandidate<T> {
    altloc: char,
    occupancy: f64,
    aa: char,
    xyz: [T; 3],
}

fn column(line: &str, from: usize, to: usize) -> Option<&str> {
    // 1-based inclusive PDB columns
    line.get(from - 1..to.min(line.len()))
}

/// Extracts one Cα per residue of `chain` from fixed-column PDB `ATOM`
/// records, optionally restricted to an inclusive residue-number range.
///
/// Alternate locations: candidates with altloc `' '` or `'A'` win; among the
/// remaining duplicates the highest occupancy wins, then the first
/// occurrence. Insertion codes make distinct residues. Residues are
/// renumbered `1..=n` in file order. Only the first model is read.
pub fn parse_pdb_calpha<T: Real>(
    raw: &str,
    chain: char,
    range: Option<(i32, i32)>,
) -> Result<Vec<Residue<T>>> {
    let mut order: Vec<(i32, char)> = Vec::new();
    let mut by_residue: HashMap<(i32, char), Vec<CaCandidate<T>>> = HashMap::new();

    for (lineno, line) in raw.lines().enumerate() {
        let lineno = lineno + 1;
        if line.starts_with("ENDMDL") {
            break;
        }
        if !line.starts_with("ATOM  ") {
            continue;
        }
        let err = |msg: &str| Error::Parse {
            line: lineno,
            msg: msg.to_string(),
        };
        if line.len() < 54 {
            return Err(err("ATOM record shorter than 54 columns"));
        }
        let chain_id = column(line, 22, 22).and_then(|s| s.chars().next()).unwrap_or(' ');
        let atom_name = column(line, 13, 16).ok_or_else(|| err("missing atom name"))?.trim();
        if chain_id != chain || atom_name != "CA" {
            continue;
        }
        let seq: i32 = column(line, 23, 26)
            .ok_or_else(|| err("missing residue number"))?
            .trim()
            .parse()
            .map_err(|_| err("residue number is not an integer"))?;
        if let Some((lo, hi)) = range {
            if seq < lo || seq > hi {
                continue;
            }
        }
        let icode = column(line, 27, 27).and_then(|s| s.chars().next()).unwrap_or(' ');
        let altloc = column(line, 17, 17).and_then(|s| s.chars().next()).unwrap_or(' ');
        let resname = column(line, 18, 20).unwrap_or("").trim();
        let mut xyz = [T::zero(); 3];
        for (k, (a, b)) in [(31, 38), (39, 46), (47, 54)].into_iter().enumerate() {
            let field = column(line, a, b).unwrap_or("").trim();
            xyz[k] = T::from_str(field)
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(&format!("bad coordinate in columns {a}-{b}: {field:?}")))?;
        }
        let occupancy = match column(line, 55, 60).map(str::trim) {
            None | Some("") => 1.0,
            Some(s) => s.parse().map_err(|_| err("bad occupancy"))?,
        };
        let key = (seq, icode);
        let slot = by_residue.entry(key).or_insert_with(|| {
            order.push(key);
            Vec::new()
        });
        slot.push(CaCandidate {
            altloc,
            occupancy,
            aa: one_letter(resname),
            xyz,
        });
    }

    if order.is_empty() {
        return Err(Error::EmptyDomain { chain });
    }

    let residues = order
        .iter()
        .enumerate()
        .map(|(i, key)| {
            let cands = &by_residue[key];
            let preferred: Vec<&CaCandidate<T>> =
                cands.iter().filter(|c| c.altloc == ' ' || c.altloc == 'A').collect();
            let pool: Vec<&CaCandidate<T>> = if preferred.is_empty() {
                cands.iter().collect()
            } else {
                preferred
            };
            // strict '>' keeps the first occurrence among equal occupancies
            let mut best = pool[0];
            for c in &pool[1..] {
                if c.occupancy > best.occupancy {
                    best = c;
                }
            }
            Residue {
                index: i + 1,
                aa: best.aa,
                x: best.xyz[0],
                y: best.xyz[1],
                z: best.xyz[2],
            }
        })
        .collect();
    Ok(residues)
}

// ---------------------------------------------------------------------------
// Canonical JSON-lines records

pub fn write_domains<T: Real, W: Write>(mut out: W, domains: &[ProteinDomain<T>]) -> Result<()> {
    for d in domains {
        serde_json::to_writer(&mut out, d)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_domains<T: Real, R: BufRead>(input: R) -> Result<Vec<ProteinDomain<T>>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let d: ProteinDomain<T> = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            msg: e.to_string(),
        })?;
        d.validate()?;
        out.push(d);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Manifest

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Pdb {
        path: PathBuf,
        chain: char,
        #[serde(default)]
        range: Option<(i32, i32)>,
    },
    Inline(Vec<Residue<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub label: String,
    pub source: Source,
}

/// A JSON array of `{id, label, source}` entries. Relative PDB paths are
/// resolved against `base_dir`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusManifest {
    pub entries: Vec<ManifestEntry>,
    pub base_dir: PathBuf,
}

impl CorpusManifest {
    pub fn from_json(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let entries: Vec<ManifestEntry> =
            serde_json::from_str(text).map_err(|e| Error::Manifest(e.to_string()))?;
        Ok(Self {
            entries,
            base_dir: base_dir.into(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json(&text, base)
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Checks id uniqueness, non-empty labels and that every referenced file
    /// exists.
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            if e.id.is_empty() || e.label.is_empty() {
                return Err(Error::Manifest(format!("entry {:?} has empty id or label", e.id)));
            }
            if !seen.insert(e.id.as_str()) {
                return Err(Error::Manifest(format!("duplicate id {}", e.id)));
            }
            if let Source::Pdb { path, .. } = &e.source {
                let full = self.resolve(path);
                if !full.exists() {
                    return Err(Error::MissingFile(full));
                }
            }
        }
        Ok(())
    }

    /// Materializes every entry into a domain, unfiltered.
    pub fn resolve_domains<T: Real>(&self) -> Result<Vec<ProteinDomain<T>>> {
        self.validate()?;
        let mut file_cache: HashMap<PathBuf, String> = HashMap::new();
        let mut out = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            let residues = match &e.source {
                Source::Pdb { path, chain, range } => {
                    let full = self.resolve(path);
                    if !file_cache.contains_key(&full) {
                        let text = std::fs::read_to_string(&full)?;
                        file_cache.insert(full.clone(), text);
                    }
                    parse_pdb_calpha::<T>(&file_cache[&full], *chain, *range).map_err(|err| {
                        match err {
                            Error::Parse { line, msg } => Error::Parse {
                                line,
                                msg: format!("{}: {msg}", full.display()),
                            },
                            other => other,
                        }
                    })?
                }
                Source::Inline(rs) => rs
                    .iter()
                    .enumerate()
                    .map(|(i, r)| Residue {
                        index: i + 1,
                        aa: r.aa,
                        x: T::lit(r.x),
                        y: T::lit(r.y),
                        z: T::lit(r.z),
                    })
                    .collect(),
            };
            let d = ProteinDomain {
                id: e.id.clone(),
                label: e.label.clone(),
                residues,
            };
            d.validate()?;
            out.push(d);
        }
        Ok(out)
    }
}

/// Applies the length and class-size floors and sorts by id.
pub fn filter_corpus<T: Real>(
    domains: Vec<ProteinDomain<T>>,
    min_length: usize,
    class_floor: usize,
) -> Result<Vec<ProteinDomain<T>>> {
    let mut ids = BTreeSet::new();
    for d in &domains {
        if !ids.insert(d.id.clone()) {
            return Err(Error::Corpus(format!("duplicate domain id {}", d.id)));
        }
    }
    let kept: Vec<_> = domains
        .into_iter()
        .filter(|d| {
            let ok = d.len() >= min_length;
            if !ok {
                warn!("dropping domain {}: {} residues < {min_length}", d.id, d.len());
            }
            ok
        })
        .collect();
    let mut class_sizes: BTreeMap<&str, usize> = BTreeMap::new();
    for d in &kept {
        *class_sizes.entry(d.label.as_str()).or_default() += 1;
    }
    let small: BTreeSet<String> = class_sizes
        .iter()
        .filter(|&(_, &n)| n < class_floor)
        .map(|(l, n)| {
            warn!("dropping class {l}: {n} domains < {class_floor}");
            l.to_string()
        })
        .collect();
    let mut out: Vec<_> = kept.into_iter().filter(|d| !small.contains(&d.label)).collect();
    if out.is_empty() {
        return Err(Error::Corpus("no domains left after filtering".into()));
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}

pub fn load_corpus<T: Real>(
    manifest: &CorpusManifest,
    min_length: usize,
    class_floor: usize,
) -> Result<Vec<ProteinDomain<T>>> {
    filter_corpus(manifest.resolve_domains()?, min_length, class_floor)
}

// ---------------------------------------------------------------------------
// Synthetic corpus

/// Backbone families used by the synthetic generator. Each produces a
/// distinct contact topology under a 6 Å Cα threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// α-helix: radius 2.3 Å, 100° and 1.5 Å rise per residue.
    AlphaHelix,
    /// Straight chain with 3.8 Å spacing; its PSN is a path.
    Extended,
    /// β-meander: strands of `strand` residues, 4.8 Å apart.
    Meander { strand: usize },
    /// 3₁₀-like helix: radius 1.9 Å, 120° and 2.0 Å rise.
    TightHelix,
    /// Helix segments of 10 residues alternating with extended segments of 8.
    Mixed,
}

impl Family {
    pub fn for_class(class: usize) -> Self {
        let variant = class / 5;
        // the first three mirror mainly-alpha, mainly-beta and alpha/beta
        // classes; a plain extended chain (a path PSN) comes last
        match class % 5 {
            0 => Family::AlphaHelix,
            1 => Family::Meander { strand: 7 + 2 * variant },
            2 => Family::Mixed,
            3 => Family::TightHelix,
            _ => Family::Extended,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Family::AlphaHelix => "helix".into(),
            Family::Extended => "extended".into(),
            Family::Meander { strand } => format!("meander{strand}"),
            Family::TightHelix => "helix310".into(),
            Family::Mixed => "mixed".into(),
        }
    }

    /// Ideal (jitter-free) Cα trace of `n` residues.
    pub fn backbone(&self, n: usize) -> Vec<[f64; 3]> {
        let helix = |radius: f64, turn_deg: f64, rise: f64, i: usize| {
            let a = (turn_deg * i as f64).to_radians();
            [radius * a.cos(), radius * a.sin(), rise * i as f64]
        };
        match *self {
            Family::AlphaHelix => (0..n).map(|i| helix(2.3, 100.0, 1.5, i)).collect(),
            Family::TightHelix => (0..n).map(|i| helix(1.9, 120.0, 2.0, i)).collect(),
            Family::Extended => (0..n).map(|i| [3.8 * i as f64, 0.0, 0.0]).collect(),
            Family::Meander { strand } => (0..n)
                .map(|i| {
                    let s = i / strand;
                    let p = i % strand;
                    // alternate direction on every strand
                    let pos = if s % 2 == 0 { p } else { strand - 1 - p };
                    let pleat = if i % 2 == 0 { 0.9 } else { -0.9 };
                    [3.3 * pos as f64, 4.4 * s as f64, pleat]
                })
                .collect(),
            Family::Mixed => {
                let mut pts: Vec<[f64; 3]> = Vec::with_capacity(n);
                let mut origin = [0.0; 3];
                let mut seg = 0;
                while pts.len() < n {
                    let is_helix = seg % 2 == 0;
                    let len = if is_helix { 10 } else { 8 };
                    for j in 0..len.min(n - pts.len()) {
                        let local = if is_helix {
                            let h = helix(2.3, 100.0, 1.5, j);
                            [h[0] - 2.3, h[1], h[2]]
                        } else {
                            [0.0, 0.0, 3.8 * j as f64]
                        };
                        pts.push([origin[0] + local[0], origin[1] + local[1], origin[2] + local[2]]);
                    }
                    let last = *pts.last().unwrap();
                    origin = [last[0], last[1], last[2] + 3.8];
                    seg += 1;
                }
                pts
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub classes: usize,
    pub per_class: usize,
    pub length_range: (usize, usize),
    pub class_floor: usize,
    pub jitter: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            classes: 3,
            per_class: 30,
            length_range: (40, 80),
            class_floor: DEFAULT_CLASS_FLOOR,
            jitter: 0.05,
        }
    }
}

const AMINO_ACIDS: &[u8] = b"ACDEFGHIKLMNPQRSTVWY";

/// Deterministic synthetic corpus: `classes × per_class` domains, each class
/// drawn from its own backbone family with uniform coordinate jitter.
pub fn generate_synthetic_corpus<T: Real>(cfg: &SynthConfig) -> Result<Vec<ProteinDomain<T>>> {
    if cfg.classes < 2 {
        return Err(Error::InvalidArgument("need at least 2 classes".into()));
    }
    if cfg.per_class < cfg.class_floor {
        return Err(Error::InvalidArgument(format!(
            "per_class {} is below the class floor {}",
            cfg.per_class, cfg.class_floor
        )));
    }
    let (lo, hi) = cfg.length_range;
    if lo == 0 || lo > hi {
        return Err(Error::InvalidArgument(format!("bad length range {lo}..={hi}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::with_capacity(cfg.classes * cfg.per_class);
    for class in 0..cfg.classes {
        let family = Family::for_class(class);
        let label = format!("c{class:02}.{}", family.name());
        for k in 0..cfg.per_class {
            let n = rng.random_range(lo..=hi);
            let residues = family
                .backbone(n)
                .into_iter()
                .enumerate()
                .map(|(i, p)| {
                    let mut jit = || {
                        if cfg.jitter > 0.0 {
                            rng.random_range(-cfg.jitter..=cfg.jitter)
                        } else {
                            0.0
                        }
                    };
                    let (dx, dy, dz) = (jit(), jit(), jit());
                    let aa = AMINO_ACIDS[rng.random_range(0..AMINO_ACIDS.len())] as char;
                    Residue {
                        index: i + 1,
                        aa,
                        // three decimals, as in PDB coordinates
                        x: T::lit(((p[0] + dx) * 1000.0).round() / 1000.0),
                        y: T::lit(((p[1] + dy) * 1000.0).round() / 1000.0),
                        z: T::lit(((p[2] + dz) * 1000.0).round() / 1000.0),
                    }
                })
                .collect();
            out.push(ProteinDomain {
                id: format!("syn{class:02}_{k:03}"),
                label: label.clone(),
                residues,
            });
        }
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}
