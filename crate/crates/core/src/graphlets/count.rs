use rayon::prelude::*;

use super::table::{pair_count, pair_index, OrbitTable, TableKind, MAX_LABELS, NO_ENTRY};
use super::{CountConfig, Gdvm};
use crate::psn::EventStream;
use crate::{Error, Result};

/// Start events handed to one rayon task.
const START_CHUNK: usize = 32;

struct Counter<'a> {
    table: &'a OrbitTable,
    stream: &'a EventStream,
    /// Event positions touching each node, ascending.
    incident: Vec<Vec<u32>>,
    max_nodes: usize,
    max_events: usize,
    max_gap: Option<u32>,
    base: usize,
    pair_idx: [[usize; MAX_LABELS]; MAX_LABELS],
}

struct State {
    nodes: [usize; MAX_LABELS],
    labels: usize,
    key: usize,
    depth: usize,
}

impl<'a> Counter<'a> {
    fn new(table: &'a OrbitTable, stream: &'a EventStream, cfg: &CountConfig) -> Result<Self> {
        let (max_nodes, max_events) = match table.kind {
            TableKind::Dynamic { max_nodes, max_events } => (max_nodes, max_events),
            TableKind::Static { .. } => {
                return Err(Error::ConfigMismatch {
                    table: "static graphlets".into(),
                    requested: "dynamic counting".into(),
                })
            }
        };
        if (max_nodes, max_events) != (cfg.max_nodes, cfg.max_events) {
            return Err(Error::ConfigMismatch {
                table: format!("({max_nodes} nodes, {max_events} events)"),
                requested: format!("({} nodes, {} events)", cfg.max_nodes, cfg.max_events),
            });
        }
        let mut incident = vec![Vec::new(); stream.n];
        for (i, e) in stream.events.iter().enumerate() {
            incident[e.u].push(i as u32);
            incident[e.v].push(i as u32);
        }
        let mut pair_idx = [[usize::MAX; MAX_LABELS]; MAX_LABELS];
        for a in 0..max_nodes {
            for b in a + 1..max_nodes {
                pair_idx[a][b] = pair_index(a, b, max_nodes);
                pair_idx[b][a] = pair_idx[a][b];
            }
        }
        Ok(Self {
            table,
            stream,
            incident,
            max_nodes,
            max_events,
            max_gap: cfg.max_gap,
            base: pair_count(max_nodes) + 1,
            pair_idx,
        })
    }

    fn label_of(state: &State, node: usize) -> Option<usize> {
        state.nodes[..state.labels].iter().position(|&x| x == node)
    }

    fn record(&self, state: &State, counts: &mut [u64]) {
        let entry = self.table.lookup[state.key];
        debug_assert_ne!(entry, NO_ENTRY, "sequence missing from the catalogue");
        let cols = &self.table.labeled[entry as usize];
        let width = self.table.total_orbits();
        for l in 0..state.labels {
            counts[state.nodes[l] * width + cols[l] as usize] += 1;
        }
    }

    fn try_extend(&self, state: &mut State, pos: usize, counts: &mut [u64]) {
        let e = &self.stream.events[pos];
        let (lu, lv) = (Self::label_of(state, e.u), Self::label_of(state, e.v));
        let added = match (lu, lv) {
            (Some(_), Some(_)) => None,
            (Some(_), None) => Some(e.v),
            (None, Some(_)) => Some(e.u),
            (None, None) => unreachable!("candidate shares a node with the previous event"),
        };
        if added.is_some() && state.labels == self.max_nodes {
            return;
        }
        let saved_key = state.key;
        if let Some(node) = added {
            state.nodes[state.labels] = node;
            state.labels += 1;
        }
        let a = lu.unwrap_or(state.labels - 1);
        let b = lv.unwrap_or(state.labels - 1);
        state.key = state.key * self.base + self.pair_idx[a][b] + 1;
        state.depth += 1;
        self.visit(state, pos, counts);
        state.depth -= 1;
        state.key = saved_key;
        if added.is_some() {
            state.labels -= 1;
        }
    }

    fn visit(&self, state: &mut State, pos: usize, counts: &mut [u64]) {
        self.record(state, counts);
        if state.depth == self.max_events {
            return;
        }
        let last = self.stream.events[pos];
        let horizon = self.max_gap.map(|g| last.t.saturating_add(g));
        // candidates: later events touching either endpoint of the last one
        let (iu, iv) = (&self.incident[last.u], &self.incident[last.v]);
        let mut i = iu.partition_point(|&p| p as usize <= pos);
        let mut j = iv.partition_point(|&p| p as usize <= pos);
        loop {
            let next = match (iu.get(i), iv.get(j)) {
                (None, None) => break,
                (Some(&a), None) => {
                    i += 1;
                    a
                }
                (None, Some(&b)) => {
                    j += 1;
                    b
                }
                (Some(&a), Some(&b)) => {
                    if a < b {
                        i += 1;
                        a
                    } else if b < a {
                        j += 1;
                        b
                    } else {
                        // the same pair again: listed under both endpoints
                        i += 1;
                        j += 1;
                        a
                    }
                }
            } as usize;
            if let Some(h) = horizon {
                if self.stream.events[next].t > h {
                    break;
                }
            }
            self.try_extend(state, next, counts);
        }
    }

    fn count_from(&self, start: usize, counts: &mut [u64]) {
        let e = self.stream.events[start];
        let mut state = State {
            nodes: [0; MAX_LABELS],
            labels: 2,
            key: self.pair_idx[0][1] + 1,
            depth: 1,
        };
        state.nodes[0] = e.u.min(e.v);
        state.nodes[1] = e.u.max(e.v);
        self.visit(&mut state, start, counts);
    }
}

fn into_gdvm(stream: &EventStream, table: &OrbitTable, id: &str, counts: Vec<u64>) -> Gdvm {
    Gdvm {
        id: id.to_string(),
        rows: stream.n,
        cols: table.total_orbits(),
        counts,
    }
}

/// Per-node dynamic orbit counts: every strictly increasing event
/// subsequence that satisfies the adjacency rule and the limits contributes
/// one to the orbit of each of its nodes. Work is split over start events;
/// the result is identical to [`count_dynamic_orbits_serial`].
pub fn count_dynamic_orbits(stream: &EventStream, table: &OrbitTable, cfg: &CountConfig, id: &str) -> Result<Gdvm> {
    let counter = Counter::new(table, stream, cfg)?;
    let width = stream.n * table.total_orbits();
    let counts = (0..stream.len())
        .into_par_iter()
        .with_min_len(START_CHUNK)
        .fold(
            || vec![0u64; width],
            |mut acc, start| {
                counter.count_from(start, &mut acc);
                acc
            },
        )
        .reduce(
            || vec![0u64; width],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    Ok(into_gdvm(stream, table, id, counts))
}

pub fn count_dynamic_orbits_serial(
    stream: &EventStream,
    table: &OrbitTable,
    cfg: &CountConfig,
    id: &str,
) -> Result<Gdvm> {
    let counter = Counter::new(table, stream, cfg)?;
    let mut counts = vec![0u64; stream.n * table.total_orbits()];
    for start in 0..stream.len() {
        counter.count_from(start, &mut counts);
    }
    Ok(into_gdvm(stream, table, id, counts))
}
