//! Protein structure networks: static contact graphs, nested prefix
//! snapshots and the first-appearance edge event stream.

use std::collections::VecDeque;
use std::io::{BufRead, Write};

use crate::fmt::parse_int;
use crate::structure::ProteinDomain;
use crate::{Error, Real, Result};

pub const DEFAULT_THRESHOLD: f64 = 6.0;
pub const DEFAULT_K: usize = 5;

/// Undirected simple graph on `0..n`; edges stored as sorted `(i, j)`, `i < j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StaticPsn {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

impl StaticPsn {
    pub fn new(n: usize, mut edges: Vec<(usize, usize)>) -> Result<Self> {
        for e in edges.iter_mut() {
            if e.0 == e.1 {
                return Err(Error::InvalidArgument(format!("self-loop on node {}", e.0)));
            }
            if e.0.max(e.1) >= n {
                return Err(Error::InvalidArgument(format!("edge {e:?} outside 0..{n}")));
            }
            if e.0 > e.1 {
                *e = (e.1, e.0);
            }
        }
        edges.sort_unstable();
        edges.dedup();
        Ok(Self { n, edges })
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        for a in adj.iter_mut() {
            a.sort_unstable();
        }
        adj
    }
}

/// Edge `(i, j)` iff the Cα distance is at most `threshold` (inclusive).
pub fn build_static_psn<T: Real>(domain: &ProteinDomain<T>, threshold: T) -> StaticPsn {
    let t2 = threshold * threshold;
    let rs = &domain.residues;
    let mut edges = Vec::new();
    for i in 0..rs.len() {
        for j in i + 1..rs.len() {
            if rs[i].distance_sq(&rs[j]) <= t2 {
                edges.push((i, j));
            }
        }
    }
    StaticPsn { n: rs.len(), edges }
}

/// Nested snapshots over growing sequence prefixes of `k` residues.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DynamicPsn {
    pub k: usize,
    pub snapshots: Vec<StaticPsn>,
}

impl DynamicPsn {
    pub fn node_counts(&self) -> Vec<usize> {
        self.snapshots.iter().map(|s| s.n).collect()
    }

    pub fn final_snapshot(&self) -> Option<&StaticPsn> {
        self.snapshots.last()
    }

    pub fn is_nested(&self) -> bool {
        self.snapshots.windows(2).all(|w| {
            w[0].n <= w[1].n && w[0].edges.iter().all(|e| w[1].edges.binary_search(e).is_ok())
        })
    }
}

pub fn build_dynamic_psn<T: Real>(domain: &ProteinDomain<T>, k: usize, threshold: T) -> Result<DynamicPsn> {
    if k == 0 {
        return Err(Error::InvalidArgument("prefix step k must be at least 1".into()));
    }
    let full = build_static_psn(domain, threshold);
    let n = full.n;
    let count = n.div_ceil(k);
    let snapshots = (1..=count)
        .map(|s| {
            let size = (s * k).min(n);
            StaticPsn {
                n: size,
                // an edge lives in a prefix iff its larger endpoint does
                edges: full.edges.iter().copied().filter(|&(_, j)| j < size).collect(),
            }
        })
        .collect();
    let dpsn = DynamicPsn { k, snapshots };
    debug_assert!(dpsn.is_nested());
    Ok(dpsn)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Event {
    pub u: usize,
    pub v: usize,
    pub t: u32,
}

impl Event {
    fn order_key(&self) -> (u32, usize, usize) {
        (self.t, self.u.min(self.v), self.u.max(self.v))
    }
}

/// Timestamped edge events in strict total order `(t, min(u,v), max(u,v))`.
///
/// PSN-derived streams contain each pair once; general streams (used by the
/// counting tests) may repeat a pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventStream {
    pub n: usize,
    pub snapshots: u32,
    pub node_counts: Vec<usize>,
    pub events: Vec<Event>,
}

impl EventStream {
    /// Builds a general stream; events are normalized to `u < v` and sorted.
    pub fn new(n: usize, events: Vec<(usize, usize, u32)>) -> Result<Self> {
        let mut evs = Vec::with_capacity(events.len());
        for (u, v, t) in events {
            if u == v {
                return Err(Error::InvalidArgument(format!("self-loop event on node {u}")));
            }
            if u.max(v) >= n {
                return Err(Error::InvalidArgument(format!("event ({u},{v}) outside 0..{n}")));
            }
            if t == 0 {
                return Err(Error::InvalidArgument("timestamps are 1-based".into()));
            }
            evs.push(Event { u: u.min(v), v: u.max(v), t });
        }
        evs.sort_by_key(Event::order_key);
        let snapshots = evs.iter().map(|e| e.t).max().unwrap_or(1);
        Ok(Self {
            n,
            snapshots,
            node_counts: vec![n; snapshots as usize],
            events: evs,
        })
    }

    /// Stream with events kept in the given order (no sorting). Used to check
    /// relabeling equivariance without re-breaking ties.
    pub fn from_ordered(n: usize, events: Vec<Event>) -> Self {
        let snapshots = events.iter().map(|e| e.t).max().unwrap_or(1);
        Self {
            n,
            snapshots,
            node_counts: vec![n; snapshots as usize],
            events,
        }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Graph formed by every event with `t <= t_max`.
    pub fn graph_at(&self, t_max: u32) -> StaticPsn {
        let mut edges: Vec<_> = self
            .events
            .iter()
            .filter(|e| e.t <= t_max)
            .map(|e| (e.u.min(e.v), e.u.max(e.v)))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        let n = if t_max == 0 {
            0
        } else {
            self.node_counts
                .get(t_max as usize - 1)
                .copied()
                .unwrap_or(self.n)
        };
        StaticPsn { n, edges }
    }

    pub fn write<W: Write>(&self, mut out: W, id: &str) -> Result<()> {
        writeln!(out, "EVENTS v1 {id} {} {} {}", self.n, self.snapshots, self.events.len())?;
        let counts: Vec<String> = self.node_counts.iter().map(|c| c.to_string()).collect();
        writeln!(out, "COUNTS {}", counts.join(" "))?;
        for e in &self.events {
            writeln!(out, "{} {} {}", e.t, e.u, e.v)?;
        }
        Ok(())
    }

    /// Reads the event-stream format, returning the domain id and the stream.
    pub fn read<R: BufRead>(input: R) -> Result<(String, Self)> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .transpose()?
            .ok_or_else(|| Error::Format("empty event file".into()))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 6 || h[0] != "EVENTS" || h[1] != "v1" {
            return Err(Error::Format(format!("bad event header {header:?}")));
        }
        let id = h[2].to_string();
        let n: usize = parse_int(h[3], "node count")?;
        let snapshots: u32 = parse_int(h[4], "snapshot count")?;
        let m: usize = parse_int(h[5], "event count")?;
        let counts_line = lines
            .next()
            .transpose()?
            .ok_or_else(|| Error::Format("missing COUNTS line".into()))?;
        let mut parts = counts_line.split_whitespace();
        if parts.next() != Some("COUNTS") {
            return Err(Error::Format("missing COUNTS line".into()));
        }
        let node_counts = parts
            .map(|p| parse_int(p, "node count"))
            .collect::<Result<Vec<usize>>>()?;
        if node_counts.len() != snapshots as usize {
            return Err(Error::Format(format!(
                "COUNTS has {} entries, header says {snapshots}",
                node_counts.len()
            )));
        }
        let mut events = Vec::with_capacity(m);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(Error::Format(format!("bad event line {line:?}")));
            }
            events.push(Event {
                t: parse_int(f[0], "timestamp")?,
                u: parse_int(f[1], "node")?,
                v: parse_int(f[2], "node")?,
            });
        }
        if events.len() != m {
            return Err(Error::Format(format!("expected {m} events, found {}", events.len())));
        }
        if !events.windows(2).all(|w| w[0].order_key() <= w[1].order_key()) {
            return Err(Error::Format("events are not sorted".into()));
        }
        Ok((
            id,
            Self {
                n,
                snapshots,
                node_counts,
                events,
            },
        ))
    }
}

/// One event per final-snapshot edge, stamped with the first snapshot that
/// contains it.
pub fn derive_event_stream(dpsn: &DynamicPsn) -> EventStream {
    let mut events = Vec::new();
    let mut prev: &[(usize, usize)] = &[];
    for (s, snap) in dpsn.snapshots.iter().enumerate() {
        // nesting makes the previous snapshot's edges a sorted prefix-subset
        for &(u, v) in &snap.edges {
            if prev.binary_search(&(u, v)).is_err() {
                events.push(Event { u, v, t: s as u32 + 1 });
            }
        }
        prev = &snap.edges;
    }
    events.sort_by_key(Event::order_key);
    let node_counts = dpsn.node_counts();
    EventStream {
        n: node_counts.last().copied().unwrap_or(0),
        snapshots: dpsn.snapshots.len().max(1) as u32,
        node_counts: if node_counts.is_empty() { vec![0] } else { node_counts },
        events,
    }
}

pub fn check_connectivity(psn: &StaticPsn) -> bool {
    if psn.n <= 1 {
        return true;
    }
    let adj = psn.adjacency();
    let mut seen = vec![false; psn.n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut reached = 1;
    while let Some(x) = queue.pop_front() {
        for &y in &adj[x] {
            if !seen[y] {
                seen[y] = true;
                reached += 1;
                queue.push_back(y);
            }
        }
    }
    reached == psn.n
}
