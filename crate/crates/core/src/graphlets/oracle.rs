//! Brute-force dynamic graphlet counting by explicit subsequence enumeration.
//!
//! Shares nothing with the fast counter beyond the orbit table's column
//! numbering: canonical forms are found by trying every node relabeling and
//! orbits by testing every automorphism.

use super::table::{apply_perm, orbits_from_automorphisms, permutations, OrbitTable, TableKind};
use super::{CountConfig, Gdvm};
use crate::psn::{Event, EventStream};
use crate::{Error, Result};

pub const ORACLE_EVENT_LIMIT: usize = 25;

fn check_table(table: &OrbitTable, cfg: &CountConfig) -> Result<()> {
    match table.kind {
        TableKind::Dynamic { max_nodes, max_events } if (max_nodes, max_events) == (cfg.max_nodes, cfg.max_events) => {
            Ok(())
        }
        kind => Err(Error::ConfigMismatch {
            table: format!("{kind:?}"),
            requested: format!("({} nodes, {} events)", cfg.max_nodes, cfg.max_events),
        }),
    }
}

/// Calls `visit(nodes, canonical pattern, node → canonical label)` for every
/// qualifying subsequence.
fn for_each_subsequence(
    stream: &EventStream,
    cfg: &CountConfig,
    mut visit: impl FnMut(&[usize], &[(u8, u8)], &[u8]),
) -> Result<()> {
    if stream.len() > ORACLE_EVENT_LIMIT {
        return Err(Error::OracleRefused {
            events: stream.len(),
            limit: ORACLE_EVENT_LIMIT,
        });
    }
    let perms: Vec<Vec<Vec<u8>>> = (0..=cfg.max_nodes).map(permutations).collect();
    let m = stream.len();
    let mut chosen: Vec<usize> = Vec::with_capacity(cfg.max_events);
    // iterate all index combinations of size 1..=max_events
    fn rec(
        start: usize,
        m: usize,
        chosen: &mut Vec<usize>,
        cfg: &CountConfig,
        f: &mut dyn FnMut(&[usize]),
    ) {
        if !chosen.is_empty() {
            f(chosen);
        }
        if chosen.len() == cfg.max_events {
            return;
        }
        for i in start..m {
            chosen.push(i);
            rec(i + 1, m, chosen, cfg, f);
            chosen.pop();
        }
    }
    let events = &stream.events;
    let mut check = |idx: &[usize]| {
        let evs: Vec<Event> = idx.iter().map(|&i| events[i]).collect();
        let adjacent = evs
            .windows(2)
            .all(|w| w[1].u == w[0].u || w[1].u == w[0].v || w[1].v == w[0].u || w[1].v == w[0].v);
        if !adjacent {
            return;
        }
        if let Some(g) = cfg.max_gap {
            if evs.windows(2).any(|w| w[1].t - w[0].t > g) {
                return;
            }
        }
        let mut nodes: Vec<usize> = evs.iter().flat_map(|e| [e.u, e.v]).collect();
        nodes.sort_unstable();
        nodes.dedup();
        if nodes.len() > cfg.max_nodes {
            return;
        }
        let local = |x: usize| nodes.binary_search(&x).unwrap() as u8;
        let pattern: Vec<(u8, u8)> = evs
            .iter()
            .map(|e| {
                let (a, b) = (local(e.u), local(e.v));
                (a.min(b), a.max(b))
            })
            .collect();
        let (best, best_perm) = perms[nodes.len()]
            .iter()
            .map(|p| (apply_perm(&pattern, p), p))
            .min_by(|a, b| a.0.cmp(&b.0))
            .unwrap();
        visit(&nodes, &best, best_perm);
    };
    rec(0, m, &mut chosen, cfg, &mut check);
    Ok(())
}

/// Reference dGDVM for streams of at most [`ORACLE_EVENT_LIMIT`] events.
pub fn brute_force_count(stream: &EventStream, table: &OrbitTable, cfg: &CountConfig, id: &str) -> Result<Gdvm> {
    check_table(table, cfg)?;
    let mut out = Gdvm::zeros(id, stream.n, table.total_orbits());
    let perms: Vec<Vec<Vec<u8>>> = (0..=cfg.max_nodes).map(permutations).collect();
    let mut err = None;
    for_each_subsequence(stream, cfg, |nodes, canonical, to_label| {
        let Some(class) = table.class_of_pattern(canonical) else {
            err.get_or_insert_with(|| Error::Numerical(format!("pattern {canonical:?} missing from table")));
            return;
        };
        let autos: Vec<Vec<u8>> = perms[nodes.len()]
            .iter()
            .filter(|p| apply_perm(canonical, p) == canonical)
            .cloned()
            .collect();
        let orbits = orbits_from_automorphisms(nodes.len(), &autos);
        for (i, &node) in nodes.iter().enumerate() {
            let label = to_label[i];
            let orbit = orbits.iter().position(|o| o.contains(&label)).unwrap();
            out.counts[node * out.cols + table.column(class, orbit)] += 1;
        }
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Number of qualifying subsequences per graphlet class.
pub fn class_embeddings(stream: &EventStream, table: &OrbitTable, cfg: &CountConfig) -> Result<Vec<u64>> {
    check_table(table, cfg)?;
    let mut out = vec![0u64; table.class_count()];
    for_each_subsequence(stream, cfg, |_, canonical, _| {
        if let Some(c) = table.class_of_pattern(canonical) {
            out[c] += 1;
        }
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphlets::enumerate_dynamic_orbits;

    #[test]
    fn refuses_large_streams() {
        let t = enumerate_dynamic_orbits(4, 6).unwrap();
        let evs = (0..30).map(|i| (i % 5, (i + 1) % 5, 1 + i as u32)).collect();
        let s = EventStream::new(5, evs).unwrap();
        assert!(matches!(
            brute_force_count(&s, &t, &CountConfig::default(), "x"),
            Err(Error::OracleRefused { events: 30, .. })
        ));
    }

    #[test]
    fn single_event() {
        let t = enumerate_dynamic_orbits(4, 6).unwrap();
        let s = EventStream::new(2, vec![(0, 1, 1)]).unwrap();
        let m = brute_force_count(&s, &t, &CountConfig::default(), "x").unwrap();
        assert_eq!(m.row(0)[0], 1);
        assert_eq!(m.row(1)[0], 1);
        assert_eq!(m.counts.iter().sum::<u64>(), 2);
    }
}
