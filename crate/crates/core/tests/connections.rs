#[path = "support/oracle.rs"]
mod oracle;

use std::collections::BTreeSet;

use xcube_core::connections::{ConnectionCache, Step, guide_shortest_walks};
use xcube_core::fixtures::{self, IMPORT_PCT, IMPORT_TC, MIXED_QUERY, QUERY1};
use xcube_core::path::ContextPath;
use xcube_core::session::{Engine, EngineConfig, Overrides, Session};

fn engine(f: &fixtures::Fixture, threshold: f64) -> Engine {
    Engine::build(f.corpus().unwrap(), EngineConfig { threshold, ..Default::default() }).unwrap()
}

fn sel(p: &str) -> Option<BTreeSet<ContextPath>> {
    Some(BTreeSet::from([ContextPath::parse(p).unwrap()]))
}

fn refined_query1(e: &Engine) -> Session {
    let mut s = Session::start(e, "q1", QUERY1, Overrides::default()).unwrap();
    s.select_contexts(e, &[sel("/country"), sel(IMPORT_TC), sel(IMPORT_PCT)]).unwrap();
    s
}

#[test]
fn trade_country_and_percentage_have_alternative_connections() {
    let e = engine(&fixtures::factbook(), 0.4);
    let s = refined_query1(&e);
    let tc_pct: Vec<String> = s
        .summary
        .entries
        .values()
        .filter(|x| x.uses.iter().any(|u| (u.left, u.right) == (1, 2)))
        .map(|x| x.rendering.clone())
        .collect();
    assert!(tc_pct.len() >= 2, "{tc_pct:?}");
    assert!(tc_pct.iter().any(|r| r == "percentage ↑item ↓trade_country"));
    let text = s.summary.render(&s.query);
    assert!(text.contains("percentage ↑item ↓trade_country"));
}

#[test]
fn summary_has_no_false_negatives_against_top_k_instances() {
    for f in [fixtures::factbook(), fixtures::mondial(), fixtures::random(2, 300), fixtures::random(5, 300)] {
        let e = engine(&f, 0.4);
        for q in [QUERY1, "(name, *) AND (item, *)", "(*, red) AND (*, apple)", "(name, *) AND (abbrev, *)"] {
            let s = Session::start(&e, "s", q, Overrides::default()).unwrap();
            for t in &s.topk.tuples {
                let nodes = &t.tuple.nodes;
                for l in 0..nodes.len() {
                    for r in l + 1..nodes.len() {
                        let d = oracle::bfs(&e.corpus, &nodes[l], 6)[&nodes[r]];
                        let found = s.summary.entries.values().any(|x| {
                            x.connection.length == d as usize
                                && x.uses.iter().any(|u| {
                                    (u.left, u.right) == (l, r) && {
                                        let (a, b) = if u.left_at_from { (&nodes[l], &nodes[r]) } else { (&nodes[r], &nodes[l]) };
                                        oracle::walk(&e.corpus, a, &x.connection).contains(b)
                                    }
                                })
                        });
                        assert!(found, "{}: {q}: pair {l}-{r} of {:?}", f.name, nodes);
                    }
                }
            }
        }
    }
}

#[test]
fn higher_thresholds_give_no_more_false_positives() {
    let f = fixtures::mixed_schema();
    let count = |t: f64| {
        let e = engine(&f, t);
        let s = Session::start(&e, "m", MIXED_QUERY, Overrides::default()).unwrap();
        assert!(!s.topk.tuples.is_empty());
        s.false_positives(&e).unwrap().false_positives.len()
    };
    let (high, low) = (count(0.6), count(0.2));
    assert_eq!(high, 0);
    assert!(low >= 1, "merged guide should produce a spurious shortcut");
    assert!(high <= low);
}

#[test]
fn instance_connections_are_never_false_positives() {
    let e = engine(&fixtures::factbook(), 0.0);
    let s = refined_query1(&e);
    let fp = s.false_positives(&e).unwrap();
    for id in &fp.false_positives {
        assert!(s.summary.entries[id].provenance.is_empty(), "{id}");
    }
}

#[test]
fn guide_walks_are_cached_per_path_pair() {
    let e = engine(&fixtures::factbook(), 0.4);
    let cache = ConnectionCache::new();
    let a = ContextPath::parse(IMPORT_TC).unwrap();
    let b = ContextPath::parse(IMPORT_PCT).unwrap();
    let w1 = cache.guide_walks(&e.guides, &a, &b);
    let w2 = cache.guide_walks(&e.guides, &a, &b);
    assert_eq!(cache.len(), 1);
    assert_eq!(w1, w2);
    assert_eq!(
        *w1,
        vec![vec![Step::Up { name: "item".into() }, Step::Down { name: "percentage".into() }]]
    );
    assert_eq!(*w1, guide_shortest_walks(&e.guides, &a, &b, 16));
}

#[test]
fn connection_ids_are_stable_and_orientation_free() {
    let e = engine(&fixtures::factbook(), 0.4);
    let a = refined_query1(&e);
    let b = refined_query1(&e);
    assert_eq!(
        a.summary.entries.keys().collect::<Vec<_>>(),
        b.summary.entries.keys().collect::<Vec<_>>()
    );
    for x in a.summary.entries.values() {
        let back = x.connection.reversed().unwrap();
        assert_eq!(back.reversed().unwrap(), x.connection);
        assert_eq!(back.length, x.connection.length);
    }
}
