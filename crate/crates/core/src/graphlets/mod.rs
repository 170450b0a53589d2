//! Dynamic and static graphlet orbit catalogues and per-node orbit counts.
//!
//! A dynamic graphlet is a sequence of edge events on at most `max_nodes`
//! nodes and `max_events` events in which every event shares a node with the
//! event immediately before it. Nodes are identified up to relabeling; the
//! canonical form of a sequence is its lexicographically smallest relabeled
//! representative, and orbits are the node classes under relabelings that
//! leave the whole sequence unchanged. With four nodes and six events this
//! gives 981 graphlets and 3,727 orbits.
//!
//! Static graphlets are the usual connected induced subgraphs on up to
//! `max_nodes` nodes with automorphism orbits.

mod count;
mod dynamic;
mod induced;
mod oracle;
mod table;

pub use count::{count_dynamic_orbits, count_dynamic_orbits_serial};
pub use dynamic::{enumerate_dynamic_orbits, enumerate_dynamic_orbits_with_fault};
pub use induced::{brute_force_static_count, count_static_orbits, enumerate_static_orbits};
pub use oracle::{brute_force_count, class_embeddings, ORACLE_EVENT_LIMIT};
pub use table::{GraphletClass, OrbitTable, TableKind};

use std::io::{BufRead, Write};

use crate::fmt::parse_int;
use crate::{Error, Result};

/// Limits applied while counting dynamic graphlets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountConfig {
    pub max_nodes: usize,
    pub max_events: usize,
    /// Largest allowed timestamp difference between consecutive graphlet
    /// events; `None` is unbounded.
    pub max_gap: Option<u32>,
}

impl Default for CountConfig {
    fn default() -> Self {
        Self {
            max_nodes: 4,
            max_events: 6,
            max_gap: None,
        }
    }
}

/// Node × orbit count matrix (dGDVM, or GDVM for static graphlets). Rows
/// follow node order, i.e. residue order for PSNs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gdvm {
    pub id: String,
    pub rows: usize,
    pub cols: usize,
    pub counts: Vec<u64>,
}

impl Gdvm {
    pub fn zeros(id: impl Into<String>, rows: usize, cols: usize) -> Self {
        Self {
            id: id.into(),
            rows,
            cols,
            counts: vec![0; rows * cols],
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.counts[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[u64] {
        &self.counts[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column_sum(&self, col: usize) -> u64 {
        (0..self.rows).map(|r| self.get(r, col)).sum()
    }

    pub fn nonzero_columns(&self) -> Vec<usize> {
        (0..self.cols).filter(|&c| (0..self.rows).any(|r| self.get(r, c) > 0)).collect()
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "DGDVM v1 {} {} {}", self.id, self.rows, self.cols)?;
        let mut line = String::new();
        for r in 0..self.rows {
            line.clear();
            for (c, v) in self.row(r).iter().enumerate() {
                if c > 0 {
                    line.push(' ');
                }
                line.push_str(&v.to_string());
            }
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .transpose()?
            .ok_or_else(|| Error::Format("empty DGDVM file".into()))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 5 || h[0] != "DGDVM" || h[1] != "v1" {
            return Err(Error::Format(format!("bad DGDVM header {header:?}")));
        }
        let rows: usize = parse_int(h[3], "row count")?;
        let cols: usize = parse_int(h[4], "column count")?;
        let mut counts = Vec::with_capacity(rows * cols);
        let mut seen_rows = 0;
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let before = counts.len();
            for v in line.split_whitespace() {
                counts.push(parse_int::<u64>(v, "count")?);
            }
            if counts.len() - before != cols {
                return Err(Error::Format(format!("row {seen_rows} has {} values, expected {cols}", counts.len() - before)));
            }
            seen_rows += 1;
        }
        if seen_rows != rows {
            return Err(Error::Format(format!("expected {rows} rows, found {seen_rows}")));
        }
        Ok(Self {
            id: h[2].to_string(),
            rows,
            cols,
            counts,
        })
    }
}
