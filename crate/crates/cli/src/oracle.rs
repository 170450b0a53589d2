//! `dynpsn oracle`: checks the fast counters against the brute-force
//! references and prints one PASS/FAIL line per property.

use std::fmt::Write;

use anyhow::Result;
use dynpsn::graphlets::{
    brute_force_count, brute_force_static_count, count_dynamic_orbits, count_static_orbits,
    enumerate_dynamic_orbits, enumerate_dynamic_orbits_with_fault, enumerate_static_orbits, CountConfig,
    OrbitTable, ORACLE_EVENT_LIMIT,
};
use dynpsn::psn::{build_dynamic_psn, build_static_psn, derive_event_stream, EventStream};
use dynpsn::rng::SplitMix64;
use dynpsn::structure::{generate_synthetic_corpus, SynthConfig};

use crate::InputError;

pub const MAX_ORACLE_NODES: usize = 4;
pub const MAX_ORACLE_EVENTS: usize = 6;
pub const STREAM_NODES: usize = 12;
pub const STREAM_EVENTS: usize = 20;
pub const STREAM_TIMES: u32 = 6;
pub const PREFIX_RESIDUES: usize = 15;

#[derive(Debug, Clone)]
pub struct OracleOptions {
    pub max_nodes: usize,
    pub max_events: usize,
    pub streams: usize,
    pub seed: u64,
    /// Build the catalogue with the broken canonicalization.
    pub inject_fault: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            max_nodes: 4,
            max_events: 6,
            streams: 50,
            seed: 7,
            inject_fault: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct OracleReport {
    pub checks: Vec<Check>,
    /// Smallest failing stream found, in event-file format.
    pub counterexample: Option<String>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let _ = writeln!(out, "{} {}  ({})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        if let Some(cx) = &self.counterexample {
            let _ = write!(out, "minimal counterexample:\n{cx}");
        }
        out
    }
}

/// Seeded stream with `2..=STREAM_NODES` nodes and `0..=STREAM_EVENTS`
/// events.
pub fn random_stream(rng: &mut SplitMix64) -> EventStream {
    let n = 2 + (rng.next_u64() % (STREAM_NODES as u64 - 1)) as usize;
    let m = (rng.next_u64() % (STREAM_EVENTS as u64 + 1)) as usize;
    let events = (0..m)
        .map(|_| {
            let u = (rng.next_u64() % n as u64) as usize;
            let off = 1 + (rng.next_u64() % (n as u64 - 1)) as usize;
            let t = 1 + (rng.next_u64() % STREAM_TIMES as u64) as u32;
            (u, (u + off) % n, t)
        })
        .collect();
    EventStream::new(n, events).expect("generated events are valid")
}

/// Streams of the synthetic corpus, each from the longest prefix of at most
/// [`PREFIX_RESIDUES`] residues whose stream the brute force accepts.
pub fn synthetic_prefix_streams(seed: u64) -> Result<Vec<(String, EventStream)>> {
    let corpus = generate_synthetic_corpus::<f64>(&SynthConfig {
        seed,
        ..SynthConfig::default()
    })?;
    let mut out = Vec::with_capacity(corpus.len());
    for d in &corpus {
        let mut n = PREFIX_RESIDUES.min(d.len());
        loop {
            let s = derive_event_stream(&build_dynamic_psn(&d.prefix(n), 5, 6.0)?);
            if s.len() <= ORACLE_EVENT_LIMIT || n == 1 {
                out.push((d.id.clone(), s));
                break;
            }
            n -= 1;
        }
    }
    Ok(out)
}

fn differs(s: &EventStream, table: &OrbitTable, cfg: &CountConfig) -> bool {
    match (count_dynamic_orbits(s, table, cfg, "s"), brute_force_count(s, table, cfg, "s")) {
        (Ok(a), Ok(b)) => a != b,
        _ => true,
    }
}

/// Greedily deletes events and compacts labels and timestamps while the
/// stream still fails.
pub fn shrink(stream: &EventStream, fails: impl Fn(&EventStream) -> bool) -> EventStream {
    let mut cur = stream.clone();
    loop {
        let mut changed = false;
        let mut i = 0;
        while i < cur.events.len() {
            let mut evs = cur.events.clone();
            evs.remove(i);
            let cand = EventStream::from_ordered(cur.n, evs);
            if fails(&cand) {
                cur = cand;
                changed = true;
            } else {
                i += 1;
            }
        }
        let compact = compact(&cur);
        if compact != cur && fails(&compact) {
            cur = compact;
            changed = true;
        }
        if !changed {
            return cur;
        }
    }
}

/// Relabels used nodes to `0..k` in first-use order and timestamps to
/// consecutive ranks.
fn compact(s: &EventStream) -> EventStream {
    let mut map = vec![usize::MAX; s.n];
    let mut next = 0;
    let mut times: Vec<u32> = s.events.iter().map(|e| e.t).collect();
    times.sort_unstable();
    times.dedup();
    let events = s
        .events
        .iter()
        .map(|e| {
            for x in [e.u, e.v] {
                if map[x] == usize::MAX {
                    map[x] = next;
                    next += 1;
                }
            }
            let t = times.binary_search(&e.t).expect("present") as u32 + 1;
            (map[e.u], map[e.v], t)
        })
        .collect();
    EventStream::new(next.max(2), events).expect("relabeled events are valid")
}

fn stream_text(s: &EventStream) -> String {
    let mut buf = Vec::new();
    s.write(&mut buf, "counterexample").expect("writing to memory");
    String::from_utf8(buf).expect("utf-8")
}

pub fn run_oracle(opts: &OracleOptions) -> Result<OracleReport> {
    if !(2..=MAX_ORACLE_NODES).contains(&opts.max_nodes) || !(1..=MAX_ORACLE_EVENTS).contains(&opts.max_events) {
        return Err(InputError(format!(
            "limits ({}, {}) exceed the oracle bounds (2..={MAX_ORACLE_NODES} nodes, 1..={MAX_ORACLE_EVENTS} events)",
            opts.max_nodes, opts.max_events
        ))
        .into());
    }
    let mut report = OracleReport::default();
    let table = if opts.inject_fault {
        log::warn!("catalogue built with the injected canonicalization fault");
        enumerate_dynamic_orbits_with_fault(opts.max_nodes, opts.max_events)?
    } else {
        enumerate_dynamic_orbits(opts.max_nodes, opts.max_events)?
    };
    let cfg = CountConfig {
        max_nodes: opts.max_nodes,
        max_events: opts.max_events,
        max_gap: None,
    };

    if (opts.max_nodes, opts.max_events) == (4, 6) {
        report.checks.push(Check {
            name: "orbits(4,6) == 3727".into(),
            pass: table.total_orbits() == 3727,
            detail: format!("{} orbits in {} graphlets", table.total_orbits(), table.class_count()),
        });
    }

    let mut rng = SplitMix64::new(opts.seed);
    let mut first_bad: Option<EventStream> = None;
    let mut bad = 0;
    for _ in 0..opts.streams {
        let s = random_stream(&mut rng);
        if differs(&s, &table, &cfg) {
            bad += 1;
            first_bad.get_or_insert(s);
        }
    }
    report.checks.push(Check {
        name: format!("fast == brute force on {} random streams", opts.streams),
        pass: bad == 0,
        detail: format!("{bad} mismatches, ≤{STREAM_NODES} nodes, ≤{STREAM_EVENTS} events, seed {}", opts.seed),
    });

    let prefixes = synthetic_prefix_streams(opts.seed)?;
    let mut bad = 0;
    for (_, s) in &prefixes {
        if differs(s, &table, &cfg) {
            bad += 1;
            first_bad.get_or_insert_with(|| s.clone());
        }
    }
    report.checks.push(Check {
        name: format!("fast == brute force on {} synthetic prefix streams", prefixes.len()),
        pass: bad == 0,
        detail: format!("{bad} mismatches, n ≤ {PREFIX_RESIDUES}"),
    });

    // the static ESU counter against subset enumeration on the same prefixes
    let static_table = enumerate_static_orbits(opts.max_nodes)?;
    let corpus = generate_synthetic_corpus::<f64>(&SynthConfig {
        seed: opts.seed,
        ..SynthConfig::default()
    })?;
    let mut bad = 0;
    for d in &corpus {
        let psn = build_static_psn(&d.prefix(PREFIX_RESIDUES.min(d.len())), 6.0);
        if count_static_orbits(&psn, &static_table, &d.id)? != brute_force_static_count(&psn, &static_table, &d.id)? {
            bad += 1;
        }
    }
    report.checks.push(Check {
        name: format!("static counts == subset enumeration on {} prefixes", corpus.len()),
        pass: bad == 0,
        detail: format!("{bad} mismatches, {} static orbits", static_table.total_orbits()),
    });

    if let Some(s) = first_bad {
        let min = shrink(&s, |c| differs(c, &table, &cfg));
        report.counterexample = Some(stream_text(&min));
    }
    Ok(report)
}
