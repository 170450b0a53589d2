use dynpsn::graphlets::{
    brute_force_count, brute_force_static_count, class_embeddings, count_dynamic_orbits, count_dynamic_orbits_serial,
    count_static_orbits, enumerate_dynamic_orbits, enumerate_static_orbits, CountConfig, OrbitTable,
};
use dynpsn::psn::{build_dynamic_psn, build_static_psn, derive_event_stream, Event, EventStream, StaticPsn};
use dynpsn::structure::{generate_synthetic_corpus, SynthConfig};
use proptest::prelude::*;
use std::sync::OnceLock;

fn table_4_6() -> &'static OrbitTable {
    static T: OnceLock<OrbitTable> = OnceLock::new();
    T.get_or_init(|| enumerate_dynamic_orbits(4, 6).unwrap())
}

fn table_3_3() -> &'static OrbitTable {
    static T: OnceLock<OrbitTable> = OnceLock::new();
    T.get_or_init(|| enumerate_dynamic_orbits(3, 3).unwrap())
}

fn small_cfg() -> CountConfig {
    CountConfig {
        max_nodes: 3,
        max_events: 3,
        max_gap: None,
    }
}

#[test]
fn full_catalogue_size() {
    let t = table_4_6();
    assert_eq!(t.total_orbits(), 3727);
    assert_eq!(t.class_count(), 981);
}

#[test]
fn small_catalogues_match_independent_enumeration() {
    // (classes, orbits) from a separate exhaustive enumeration script
    let expected = [
        ((2, 1), (1, 1)),
        ((2, 3), (3, 3)),
        ((3, 2), (3, 5)),
        ((3, 3), (8, 18)),
        ((4, 3), (10, 26)),
        ((4, 4), (42, 138)),
        ((3, 5), (63, 179)),
    ];
    for ((n, m), (classes, orbits)) in expected {
        let t = enumerate_dynamic_orbits(n, m).unwrap();
        assert_eq!((t.class_count(), t.total_orbits()), (classes, orbits), "limits ({n},{m})");
    }
}

#[test]
fn static_catalogue_sizes() {
    // connected graphs on 2..=4 nodes: 1 + 2 + 6 graphs with 1 + 3 + 11 orbits
    let t4 = enumerate_static_orbits(4).unwrap();
    assert_eq!((t4.class_count(), t4.total_orbits()), (9, 15));
    let t5 = enumerate_static_orbits(5).unwrap();
    assert_eq!((t5.class_count(), t5.total_orbits()), (30, 73));
}

#[test]
fn orbit_table_file_round_trip() {
    let t = table_3_3();
    let mut buf = Vec::new();
    t.write(&mut buf).unwrap();
    let back = OrbitTable::read(&buf[..]).unwrap();
    assert_eq!(back.total_orbits(), t.total_orbits());
    assert_eq!(back.orbits(), t.orbits());
    let mut again = Vec::new();
    back.write(&mut again).unwrap();
    assert_eq!(buf, again);
}

fn stream_strategy(max_n: usize, max_m: usize, max_t: u32) -> impl Strategy<Value = EventStream> {
    (2..=max_n).prop_flat_map(move |n| {
        prop::collection::vec((0..n, 1..n, 1..=max_t), 0..=max_m).prop_map(move |raw| {
            let evs = raw.into_iter().map(|(u, off, t)| (u, (u + off) % n, t)).collect();
            EventStream::new(n, evs).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn fast_matches_brute_force(s in stream_strategy(12, 20, 6)) {
        let cfg = CountConfig::default();
        let fast = count_dynamic_orbits(&s, table_4_6(), &cfg, "s").unwrap();
        let slow = brute_force_count(&s, table_4_6(), &cfg, "s").unwrap();
        prop_assert_eq!(fast, slow);
    }

    #[test]
    fn fast_matches_brute_force_with_gap(s in stream_strategy(8, 16, 10), gap in 0u32..4) {
        let cfg = CountConfig { max_gap: Some(gap), ..CountConfig::default() };
        let fast = count_dynamic_orbits(&s, table_4_6(), &cfg, "s").unwrap();
        let slow = brute_force_count(&s, table_4_6(), &cfg, "s").unwrap();
        prop_assert_eq!(fast, slow);
    }

    #[test]
    fn fast_matches_brute_force_small_limits(s in stream_strategy(6, 14, 4)) {
        let fast = count_dynamic_orbits(&s, table_3_3(), &small_cfg(), "s").unwrap();
        let slow = brute_force_count(&s, table_3_3(), &small_cfg(), "s").unwrap();
        prop_assert_eq!(fast, slow);
    }

    #[test]
    fn orbit_sums_equal_nodes_times_embeddings(s in stream_strategy(7, 12, 4)) {
        let t = table_4_6();
        let cfg = CountConfig::default();
        let m = count_dynamic_orbits(&s, t, &cfg, "s").unwrap();
        let emb = class_embeddings(&s, t, &cfg).unwrap();
        for (c, class) in t.classes.iter().enumerate() {
            let sum: u64 = (0..class.orbits.len()).map(|o| m.column_sum(t.column(c, o))).sum();
            prop_assert_eq!(sum, class.nodes as u64 * emb[c]);
        }
    }

    #[test]
    fn relabeling_permutes_rows(s in stream_strategy(9, 16, 5), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut perm: Vec<usize> = (0..s.n).collect();
        perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let relabeled = EventStream::from_ordered(
            s.n,
            s.events.iter().map(|e| Event { u: perm[e.u], v: perm[e.v], t: e.t }).collect(),
        );
        let cfg = CountConfig::default();
        let a = count_dynamic_orbits(&s, table_4_6(), &cfg, "s").unwrap();
        let b = count_dynamic_orbits(&relabeled, table_4_6(), &cfg, "s").unwrap();
        for v in 0..s.n {
            prop_assert_eq!(a.row(v), b.row(perm[v]));
        }
    }

    #[test]
    fn parallel_equals_serial(s in stream_strategy(20, 80, 8)) {
        let cfg = CountConfig::default();
        let par = count_dynamic_orbits(&s, table_4_6(), &cfg, "s").unwrap();
        let ser = count_dynamic_orbits_serial(&s, table_4_6(), &cfg, "s").unwrap();
        prop_assert_eq!(par, ser);
    }

    #[test]
    fn static_counts_match_subset_enumeration(
        n in 2usize..11,
        edges in prop::collection::vec((0usize..11, 0usize..11), 0..30),
    ) {
        let edges: Vec<(usize, usize)> = edges
            .into_iter()
            .map(|(a, b)| (a % n, b % n))
            .filter(|(a, b)| a != b)
            .collect();
        let g = StaticPsn::new(n, edges).unwrap();
        for k in [3, 4, 5] {
            let t = enumerate_static_orbits(k).unwrap();
            prop_assert_eq!(count_static_orbits(&g, &t, "g").unwrap(), brute_force_static_count(&g, &t, "g").unwrap());
        }
    }
}

#[test]
fn synthetic_prefix_streams_match_brute_force() {
    let corpus = generate_synthetic_corpus::<f64>(&SynthConfig::default()).unwrap();
    let cfg = CountConfig::default();
    let mut checked = 0;
    for d in &corpus {
        let prefix = d.prefix(15);
        let dpsn = build_dynamic_psn(&prefix, 5, 6.0).unwrap();
        let mut s = derive_event_stream(&dpsn);
        s.events.truncate(25);
        let fast = count_dynamic_orbits(&s, table_4_6(), &cfg, &d.id).unwrap();
        let slow = brute_force_count(&s, table_4_6(), &cfg, &d.id).unwrap();
        assert_eq!(fast, slow, "domain {}", d.id);
        checked += 1;
    }
    assert_eq!(checked, 90);
}

#[test]
fn static_counts_on_synthetic_psns() {
    let corpus = generate_synthetic_corpus::<f64>(&SynthConfig {
        per_class: 30,
        ..SynthConfig::default()
    })
    .unwrap();
    let t = enumerate_static_orbits(4).unwrap();
    for d in corpus.iter().step_by(10) {
        let g = build_static_psn(&d.prefix(16), 6.0);
        assert_eq!(
            count_static_orbits(&g, &t, &d.id).unwrap(),
            brute_force_static_count(&g, &t, &d.id).unwrap()
        );
    }
}
