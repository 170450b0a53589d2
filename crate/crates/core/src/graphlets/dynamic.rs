use std::collections::BTreeMap;

use super::table::{
    apply_perm, orbits_from_automorphisms, pair_count, pair_index, permutations, GraphletClass, OrbitTable,
    TableKind, MAX_LABELS, NO_ENTRY,
};
use crate::{Error, Result};

pub(crate) const MAX_DYNAMIC_NODES: usize = 4;
pub(crate) const MAX_DYNAMIC_EVENTS: usize = 8;

/// Dense key of a labeled event sequence: base `P + 1` digits, one per
/// event, where `P` is the number of label pairs.
pub(crate) fn pattern_key(seq: &[(u8, u8)], labels: usize) -> usize {
    let base = pair_count(labels) + 1;
    seq.iter()
        .fold(0, |k, &(a, b)| k * base + pair_index(a as usize, b as usize, labels) + 1)
}

/// Relabels nodes by first appearance. The two endpoints of the first event
/// get labels 0 and 1 (swapped when `swap_first`). Returns the relabeled
/// sequence and the old → new label map.
pub(crate) fn first_appearance(seq: &[(u8, u8)], swap_first: bool) -> (Vec<(u8, u8)>, Vec<u8>) {
    let width = seq.iter().map(|&(a, b)| a.max(b) as usize + 1).max().unwrap_or(0);
    let mut map = vec![u8::MAX; width];
    let mut next = 0u8;
    let mut assign = |x: u8, map: &mut Vec<u8>| {
        if map[x as usize] == u8::MAX {
            map[x as usize] = next;
            next += 1;
        }
    };
    if let Some(&(a, b)) = seq.first() {
        let (p, q) = if swap_first { (b, a) } else { (a, b) };
        assign(p, &mut map);
        assign(q, &mut map);
    }
    for &(a, b) in seq.iter().skip(1) {
        // at most one endpoint is new under the adjacency rule; order the
        // pair so the known endpoint is assigned first
        let (p, q) = if map[a as usize] == u8::MAX { (b, a) } else { (a, b) };
        assign(p, &mut map);
        assign(q, &mut map);
    }
    let relabeled = seq
        .iter()
        .map(|&(a, b)| {
            let (x, y) = (map[a as usize], map[b as usize]);
            (x.min(y), x.max(y))
        })
        .collect();
    (relabeled, map)
}

/// Canonical form of a labeled sequence under the adjacency rule, with the
/// label map into it.
///
/// Any relabeling whose image is lexicographically minimal gives the first
/// event `(0, 1)` and must give each later new node the smallest unused label,
/// so the minimum is one of the two first-appearance relabelings.
pub(crate) fn canonical(seq: &[(u8, u8)]) -> (Vec<(u8, u8)>, Vec<u8>) {
    let a = first_appearance(seq, false);
    let b = first_appearance(seq, true);
    if b.0 < a.0 {
        b
    } else {
        a
    }
}

fn validate_limits(max_nodes: usize, max_events: usize) -> Result<()> {
    if !(2..=MAX_DYNAMIC_NODES).contains(&max_nodes) {
        return Err(Error::InvalidArgument(format!(
            "dynamic graphlets need 2..={MAX_DYNAMIC_NODES} nodes, got {max_nodes}"
        )));
    }
    if !(1..=MAX_DYNAMIC_EVENTS).contains(&max_events) {
        return Err(Error::InvalidArgument(format!(
            "dynamic graphlets need 1..={MAX_DYNAMIC_EVENTS} events, got {max_events}"
        )));
    }
    Ok(())
}

fn extend(seq: &mut Vec<(u8, u8)>, labels: u8, max_nodes: u8, max_events: usize, out: &mut Vec<Vec<(u8, u8)>>) {
    out.push(seq.clone());
    if seq.len() == max_events {
        return;
    }
    let (p, q) = *seq.last().expect("non-empty");
    let top = if labels < max_nodes { labels } else { labels - 1 };
    for a in 0..top {
        for b in a + 1..=top {
            if a != p && a != q && b != p && b != q {
                continue;
            }
            let grows = b == labels;
            seq.push((a, b));
            extend(seq, labels + grows as u8, max_nodes, max_events, out);
            seq.pop();
        }
    }
}

/// Every first-appearance-labeled event sequence with at most `max_nodes`
/// nodes and `max_events` events in which each event shares a node with its
/// predecessor.
pub(crate) fn labeled_sequences(max_nodes: usize, max_events: usize) -> Vec<Vec<(u8, u8)>> {
    let mut out = Vec::new();
    let mut seq = vec![(0u8, 1u8)];
    extend(&mut seq, 2, max_nodes as u8, max_events, &mut out);
    out
}

/// Builds the dynamic graphlet catalogue. Classes are ordered by
/// `(event count, node count, canonical sequence)`; orbits within a class by
/// smallest member.
pub fn enumerate_dynamic_orbits(max_nodes: usize, max_events: usize) -> Result<OrbitTable> {
    enumerate(max_nodes, max_events, false)
}

/// Catalogue built with a deliberately broken canonicalization that ignores
/// the swapped first-event relabeling. Exists so the oracle can demonstrate
/// that it catches canonicalization faults.
#[doc(hidden)]
pub fn enumerate_dynamic_orbits_with_fault(max_nodes: usize, max_events: usize) -> Result<OrbitTable> {
    enumerate(max_nodes, max_events, true)
}

fn enumerate(max_nodes: usize, max_events: usize, fault: bool) -> Result<OrbitTable> {
    validate_limits(max_nodes, max_events)?;
    let seqs = labeled_sequences(max_nodes, max_events);

    let mut canon: BTreeMap<(usize, usize, Vec<(u8, u8)>), ()> = BTreeMap::new();
    let mut per_seq = Vec::with_capacity(seqs.len());
    for s in &seqs {
        let (c, map) = if fault { first_appearance(s, false) } else { canonical(s) };
        let nodes = map.len();
        canon.insert((c.len(), nodes, c.clone()), ());
        per_seq.push((c, map));
    }

    let classes: Vec<GraphletClass> = canon
        .into_keys()
        .map(|(_, nodes, pattern)| {
            let autos: Vec<Vec<u8>> = permutations(nodes)
                .into_iter()
                .filter(|p| apply_perm(&pattern, p) == pattern)
                .collect();
            let orbits = orbits_from_automorphisms(nodes, &autos);
            GraphletClass { pattern, nodes, orbits }
        })
        .collect();

    let base = pair_count(max_nodes) + 1;
    let key_space = base.pow(max_events as u32);
    let mut table = OrbitTable::assemble(
        TableKind::Dynamic { max_nodes, max_events },
        classes,
        Vec::new(),
        Vec::new(),
    );
    let mut lookup = vec![NO_ENTRY; key_space];
    let mut labeled = Vec::with_capacity(seqs.len());
    for (s, (c, map)) in seqs.iter().zip(per_seq) {
        let class = table.class_of_pattern(&c).expect("canonical form is catalogued");
        let cls = &table.classes[class];
        let mut cols = [NO_ENTRY; MAX_LABELS];
        for (old, &new) in map.iter().enumerate() {
            cols[old] = table.column(class, cls.orbit_of(new)) as u32;
        }
        lookup[pattern_key(s, max_nodes)] = labeled.len() as u32;
        labeled.push(cols);
    }
    table.labeled = labeled;
    table.lookup = lookup;
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_edge_catalogue() {
        let t = enumerate_dynamic_orbits(2, 1).unwrap();
        assert_eq!(t.class_count(), 1);
        assert_eq!(t.total_orbits(), 1);
        assert_eq!(t.classes[0].orbits, vec![vec![0, 1]]);
    }

    #[test]
    fn three_nodes_two_events() {
        let t = enumerate_dynamic_orbits(3, 2).unwrap();
        // (0-1), (0-1 0-1), (0-1 0-2)
        assert_eq!(t.class_count(), 3);
        assert_eq!(t.total_orbits(), 5);
        assert_eq!(t.classes[2].pattern, vec![(0, 1), (0, 2)]);
    }

    #[test]
    fn canonical_form_is_minimal_over_all_relabelings() {
        for s in labeled_sequences(4, 5) {
            let (c, map) = canonical(&s);
            let k = map.len();
            let brute = permutations(k).into_iter().map(|p| apply_perm(&s, &p)).min().unwrap();
            assert_eq!(c, brute);
            assert_eq!(apply_perm(&s, &map), c);
        }
    }

    #[test]
    fn catalogue_is_deterministic() {
        let a = enumerate_dynamic_orbits(4, 4).unwrap();
        let b = enumerate_dynamic_orbits(4, 4).unwrap();
        let (mut wa, mut wb) = (Vec::new(), Vec::new());
        a.write(&mut wa).unwrap();
        b.write(&mut wb).unwrap();
        assert_eq!(wa, wb);
    }

    #[test]
    fn limits_validated() {
        assert!(enumerate_dynamic_orbits(1, 3).is_err());
        assert!(enumerate_dynamic_orbits(5, 3).is_err());
        assert!(enumerate_dynamic_orbits(3, 0).is_err());
    }
}
