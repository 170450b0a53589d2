use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::fmt::parse_int;
use crate::{Error, Result};

/// Highest label count supported by the lookup tables (static graphlets go
/// up to five nodes, dynamic ones up to four).
pub(crate) const MAX_LABELS: usize = 5;
pub(crate) const NO_ENTRY: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    Dynamic { max_nodes: usize, max_events: usize },
    Static { max_nodes: usize },
}

impl TableKind {
    pub fn max_nodes(&self) -> usize {
        match *self {
            TableKind::Dynamic { max_nodes, .. } | TableKind::Static { max_nodes } => max_nodes,
        }
    }

    /// Event limit as written in the file header; 0 marks a static table.
    pub fn max_events(&self) -> usize {
        match *self {
            TableKind::Dynamic { max_events, .. } => max_events,
            TableKind::Static { .. } => 0,
        }
    }
}

/// One graphlet: its canonical pattern and the orbit partition of its nodes.
///
/// For dynamic graphlets `pattern` is the ordered event sequence; for static
/// graphlets it is the sorted edge list. Node labels are `0..nodes`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphletClass {
    pub pattern: Vec<(u8, u8)>,
    pub nodes: usize,
    /// Orbits ordered by smallest member; members sorted.
    pub orbits: Vec<Vec<u8>>,
}

impl GraphletClass {
    pub fn orbit_of(&self, label: u8) -> usize {
        self.orbits
            .iter()
            .position(|o| o.contains(&label))
            .expect("label belongs to an orbit")
    }
}

/// Deterministic catalogue of graphlet classes and their orbits. Orbit
/// columns are numbered class by class in catalogue order.
#[derive(Debug, Clone)]
pub struct OrbitTable {
    pub kind: TableKind,
    pub classes: Vec<GraphletClass>,
    offsets: Vec<usize>,
    total: usize,
    index: HashMap<Vec<(u8, u8)>, usize>,
    /// Per labeled pattern, the orbit column of each label.
    pub(crate) labeled: Vec<[u32; MAX_LABELS]>,
    /// Dense pattern key → index into `labeled`.
    pub(crate) lookup: Vec<u32>,
}

impl OrbitTable {
    pub(crate) fn assemble(
        kind: TableKind,
        classes: Vec<GraphletClass>,
        labeled: Vec<[u32; MAX_LABELS]>,
        lookup: Vec<u32>,
    ) -> Self {
        let mut offsets = Vec::with_capacity(classes.len());
        let mut total = 0;
        for c in &classes {
            offsets.push(total);
            total += c.orbits.len();
        }
        let index = classes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.pattern.clone(), i))
            .collect();
        Self {
            kind,
            classes,
            offsets,
            total,
            index,
            labeled,
            lookup,
        }
    }

    pub fn total_orbits(&self) -> usize {
        self.total
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    /// `(class id, orbit id within class)` for every orbit column.
    pub fn orbits(&self) -> Vec<(usize, usize)> {
        self.classes
            .iter()
            .enumerate()
            .flat_map(|(i, c)| (0..c.orbits.len()).map(move |o| (i, o)))
            .collect()
    }

    pub fn column(&self, class: usize, orbit: usize) -> usize {
        self.offsets[class] + orbit
    }

    pub fn class_of_pattern(&self, canonical: &[(u8, u8)]) -> Option<usize> {
        self.index.get(canonical).copied()
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "ORBITS v1 {} {} {}",
            self.kind.max_nodes(),
            self.kind.max_events(),
            self.total
        )?;
        for (i, c) in self.classes.iter().enumerate() {
            let events: Vec<String> = c.pattern.iter().map(|(a, b)| format!("{a}-{b}")).collect();
            let orbits: Vec<String> = c
                .orbits
                .iter()
                .map(|o| o.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
                .collect();
            writeln!(out, "{i} {} {} | {}", c.pattern.len(), events.join(" "), orbits.join(" "))?;
        }
        Ok(())
    }

    /// Reads an orbit-table file and rebuilds the lookup structures by
    /// regenerating the catalogue for the header's limits; the file content
    /// must match the regenerated catalogue exactly.
    pub fn read<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .transpose()?
            .ok_or_else(|| Error::Format("empty orbit table".into()))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 5 || h[0] != "ORBITS" || h[1] != "v1" {
            return Err(Error::Format(format!("bad orbit table header {header:?}")));
        }
        let max_nodes: usize = parse_int(h[2], "max_nodes")?;
        let max_events: usize = parse_int(h[3], "max_events")?;
        let total: usize = parse_int(h[4], "orbit total")?;
        let table = if max_events == 0 {
            super::enumerate_static_orbits(max_nodes)?
        } else {
            super::enumerate_dynamic_orbits(max_nodes, max_events)?
        };
        if table.total_orbits() != total {
            return Err(Error::Format(format!(
                "orbit table declares {total} orbits, catalogue has {}",
                table.total_orbits()
            )));
        }
        let mut parsed = Vec::new();
        for line in lines {
            let line = line?;
            if !line.trim().is_empty() {
                parsed.push(line);
            }
        }
        let mut expected = Vec::new();
        table.write(&mut expected)?;
        let expected = String::from_utf8(expected).expect("ascii");
        let body: Vec<&str> = expected.lines().skip(1).collect();
        if body.len() != parsed.len() || body.iter().zip(&parsed).any(|(a, b)| a.trim() != b.trim()) {
            return Err(Error::Format("orbit table body differs from the catalogue".into()));
        }
        Ok(table)
    }
}

/// Index of the unordered label pair `a < b` among labels `0..labels`.
pub(crate) fn pair_index(a: usize, b: usize, labels: usize) -> usize {
    debug_assert!(a < b && b < labels);
    // pairs are numbered row by row: (0,1),(0,2),..,(1,2),..
    a * (2 * labels - a - 1) / 2 + (b - a - 1)
}

pub(crate) fn pair_count(labels: usize) -> usize {
    labels * labels.saturating_sub(1) / 2
}

/// All permutations of `0..k` in lexicographic order.
pub(crate) fn permutations(k: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut cur: Vec<u8> = (0..k as u8).collect();
    loop {
        out.push(cur.clone());
        // next lexicographic permutation
        let Some(i) = (1..k).rev().find(|&i| cur[i - 1] < cur[i]) else {
            break;
        };
        let j = (i..k).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
    out
}

pub(crate) fn apply_perm(pattern: &[(u8, u8)], perm: &[u8]) -> Vec<(u8, u8)> {
    pattern
        .iter()
        .map(|&(a, b)| {
            let (x, y) = (perm[a as usize], perm[b as usize]);
            (x.min(y), x.max(y))
        })
        .collect()
}

/// Orbits of the labels `0..k` under the given automorphisms.
pub(crate) fn orbits_from_automorphisms(k: usize, autos: &[Vec<u8>]) -> Vec<Vec<u8>> {
    let mut assigned = vec![false; k];
    let mut orbits = Vec::new();
    for x in 0..k {
        if assigned[x] {
            continue;
        }
        let mut orbit: Vec<u8> = autos.iter().map(|p| p[x]).collect();
        orbit.sort_unstable();
        orbit.dedup();
        for &y in &orbit {
            assigned[y as usize] = true;
        }
        orbits.push(orbit);
    }
    orbits
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_indices_are_dense() {
        for labels in 2..=5 {
            let mut seen = vec![false; pair_count(labels)];
            for a in 0..labels {
                for b in a + 1..labels {
                    let i = pair_index(a, b, labels);
                    assert!(!seen[i]);
                    seen[i] = true;
                }
            }
            assert!(seen.into_iter().all(|x| x));
        }
    }

    #[test]
    fn permutation_counts() {
        assert_eq!(permutations(1).len(), 1);
        assert_eq!(permutations(4).len(), 24);
        assert_eq!(permutations(3)[5], vec![2, 1, 0]);
    }
}
