//! Static graphlets: connected induced subgraphs on up to five nodes.

use std::collections::BTreeSet;

use super::table::{
    apply_perm, orbits_from_automorphisms, pair_count, pair_index, permutations, GraphletClass, OrbitTable,
    TableKind, MAX_LABELS, NO_ENTRY,
};
use super::Gdvm;
use crate::psn::StaticPsn;
use crate::{Error, Result};

pub(crate) const MAX_STATIC_NODES: usize = 5;

fn mask_offset(k: usize) -> usize {
    (2..k).map(|j| 1usize << pair_count(j)).sum()
}

fn edges_of_mask(k: usize, mask: usize) -> Vec<(u8, u8)> {
    let mut edges = Vec::new();
    for a in 0..k {
        for b in a + 1..k {
            if mask >> pair_index(a, b, k) & 1 == 1 {
                edges.push((a as u8, b as u8));
            }
        }
    }
    edges
}

fn is_connected(k: usize, edges: &[(u8, u8)]) -> bool {
    let mut reached = 1u32;
    loop {
        let before = reached;
        for &(a, b) in edges {
            if reached >> a & 1 == 1 || reached >> b & 1 == 1 {
                reached |= 1 << a | 1 << b;
            }
        }
        if reached == before {
            break;
        }
    }
    reached.count_ones() as usize == k
}

fn canonical_edges(edges: &[(u8, u8)], perm: &[u8]) -> Vec<(u8, u8)> {
    let mut e = apply_perm(edges, perm);
    e.sort_unstable();
    e
}

/// Catalogue of connected graphs on `2..=max_nodes` nodes, ordered by
/// `(node count, edge count, canonical edge list)`.
pub fn enumerate_static_orbits(max_nodes: usize) -> Result<OrbitTable> {
    if !(2..=MAX_STATIC_NODES).contains(&max_nodes) {
        return Err(Error::InvalidArgument(format!(
            "static graphlets need 2..={MAX_STATIC_NODES} nodes, got {max_nodes}"
        )));
    }
    let mut canon: BTreeSet<(usize, usize, Vec<(u8, u8)>)> = BTreeSet::new();
    let mut labeled_masks = Vec::new();
    for k in 2..=max_nodes {
        let perms = permutations(k);
        for mask in 0..1usize << pair_count(k) {
            let edges = edges_of_mask(k, mask);
            if !is_connected(k, &edges) {
                continue;
            }
            let (best, perm) = perms
                .iter()
                .map(|p| (canonical_edges(&edges, p), p.clone()))
                .min_by(|a, b| a.0.cmp(&b.0))
                .unwrap();
            canon.insert((k, best.len(), best.clone()));
            labeled_masks.push((k, mask, best, perm));
        }
    }
    let classes = canon
        .into_iter()
        .map(|(k, _, pattern)| {
            let autos: Vec<Vec<u8>> = permutations(k)
                .into_iter()
                .filter(|p| canonical_edges(&pattern, p) == pattern)
                .collect();
            GraphletClass {
                orbits: orbits_from_automorphisms(k, &autos),
                pattern,
                nodes: k,
            }
        })
        .collect();
    let mut table = OrbitTable::assemble(TableKind::Static { max_nodes }, classes, Vec::new(), Vec::new());
    let mut lookup = vec![NO_ENTRY; mask_offset(max_nodes + 1)];
    let mut labeled = Vec::with_capacity(labeled_masks.len());
    for (k, mask, best, perm) in labeled_masks {
        let class = table.class_of_pattern(&best).expect("catalogued");
        let mut cols = [NO_ENTRY; MAX_LABELS];
        for (l, col) in cols.iter_mut().enumerate().take(k) {
            *col = table.column(class, table.classes[class].orbit_of(perm[l])) as u32;
        }
        lookup[mask_offset(k) + mask] = labeled.len() as u32;
        labeled.push(cols);
    }
    table.labeled = labeled;
    table.lookup = lookup;
    Ok(table)
}

fn static_max_nodes(table: &OrbitTable) -> Result<usize> {
    match table.kind {
        TableKind::Static { max_nodes } => Ok(max_nodes),
        kind => Err(Error::ConfigMismatch {
            table: format!("{kind:?}"),
            requested: "static counting".into(),
        }),
    }
}

struct Esu<'a> {
    adj: Vec<Vec<usize>>,
    neighbor_sets: Vec<BTreeSet<usize>>,
    k: usize,
    table: &'a OrbitTable,
    cols: usize,
}

impl Esu<'_> {
    fn record(&self, sub: &[usize], counts: &mut [u64]) {
        let k = sub.len();
        let mut mask = 0usize;
        for a in 0..k {
            for b in a + 1..k {
                if self.neighbor_sets[sub[a]].contains(&sub[b]) {
                    mask |= 1 << pair_index(a, b, k);
                }
            }
        }
        let entry = self.table.lookup[mask_offset(k) + mask];
        debug_assert_ne!(entry, NO_ENTRY);
        let cols = &self.table.labeled[entry as usize];
        for (l, &node) in sub.iter().enumerate() {
            counts[node * self.cols + cols[l] as usize] += 1;
        }
    }

    fn extend(&self, sub: &mut Vec<usize>, mut ext: Vec<usize>, root: usize, counts: &mut [u64]) {
        if sub.len() >= 2 {
            self.record(sub, counts);
        }
        if sub.len() == self.k {
            return;
        }
        while let Some(w) = ext.pop() {
            let mut next = ext.clone();
            for &u in &self.adj[w] {
                if u <= root || sub.contains(&u) || next.contains(&u) {
                    continue;
                }
                // exclusive neighbourhood: not adjacent to the current set
                if sub.iter().any(|&s| self.neighbor_sets[s].contains(&u)) {
                    continue;
                }
                next.push(u);
            }
            sub.push(w);
            self.extend(sub, next, root, counts);
            sub.pop();
        }
    }
}

/// Per-node static orbit counts over connected induced subgraphs
/// (enumeration-based subgraph enumeration, each node set visited once).
pub fn count_static_orbits(psn: &StaticPsn, table: &OrbitTable, id: &str) -> Result<Gdvm> {
    let k = static_max_nodes(table)?;
    let adj = psn.adjacency();
    let neighbor_sets = adj.iter().map(|a| a.iter().copied().collect()).collect();
    let esu = Esu {
        adj,
        neighbor_sets,
        k,
        table,
        cols: table.total_orbits(),
    };
    let mut out = Gdvm::zeros(id, psn.n, table.total_orbits());
    for v in 0..psn.n {
        let ext: Vec<usize> = esu.adj[v].iter().copied().filter(|&u| u > v).collect();
        let mut sub = vec![v];
        esu.extend(&mut sub, ext, v, &mut out.counts);
    }
    Ok(out)
}

/// Reference static counts by checking every node subset; graphs of at most
/// 16 nodes.
pub fn brute_force_static_count(psn: &StaticPsn, table: &OrbitTable, id: &str) -> Result<Gdvm> {
    let k = static_max_nodes(table)?;
    if psn.n > 16 {
        return Err(Error::OracleRefused {
            events: psn.n,
            limit: 16,
        });
    }
    let mut out = Gdvm::zeros(id, psn.n, table.total_orbits());
    for subset in 1u32..1 << psn.n {
        let size = subset.count_ones() as usize;
        if !(2..=k).contains(&size) {
            continue;
        }
        let nodes: Vec<usize> = (0..psn.n).filter(|&i| subset >> i & 1 == 1).collect();
        let local: Vec<(u8, u8)> = psn
            .edges
            .iter()
            .filter(|&&(a, b)| subset >> a & 1 == 1 && subset >> b & 1 == 1)
            .map(|&(a, b)| {
                (
                    nodes.binary_search(&a).unwrap() as u8,
                    nodes.binary_search(&b).unwrap() as u8,
                )
            })
            .collect();
        if !is_connected(size, &local) {
            continue;
        }
        let perms = permutations(size);
        let (best, perm) = perms
            .iter()
            .map(|p| (canonical_edges(&local, p), p))
            .min_by(|a, b| a.0.cmp(&b.0))
            .unwrap();
        let class = table
            .class_of_pattern(&best)
            .ok_or_else(|| Error::Numerical(format!("graph {best:?} missing from table")))?;
        let autos: Vec<Vec<u8>> = perms
            .iter()
            .filter(|p| canonical_edges(&best, p) == best)
            .cloned()
            .collect();
        let orbits = orbits_from_automorphisms(size, &autos);
        for (i, &node) in nodes.iter().enumerate() {
            let orbit = orbits.iter().position(|o| o.contains(&perm[i])).unwrap();
            out.counts[node * out.cols + table.column(class, orbit)] += 1;
        }
    }
    Ok(out)
}
