#[path = "support/oracle.rs"]
mod oracle;

use std::collections::BTreeSet;

use proptest::prelude::*;
use xcube_core::contexts::context_buckets;
use xcube_core::fixtures::{self, QUERY1};
use xcube_core::graph::connection_distance;
use xcube_core::index::PathIndex;
use xcube_core::par::ExecMode;
use xcube_core::path::ContextPath;
use xcube_core::query::Query;
use xcube_core::store::Corpus;
use xcube_core::text::SearchExpr;
use xcube_core::topk::{TopKOptions, top_k};

const RANDOM_QUERIES: [&str; 6] = [
    "(name, *) AND (item, *)",
    "(*, red) AND (*, apple)",
    "(a, *) AND (b, green)",
    "(*, \"red apple\") AND (c, *) AND (name, *)",
    "(d, pear OR plum) AND (*, blue)",
    "(item, NOT red) AND (@key, *)",
];

fn setup(f: &fixtures::Fixture) -> (Corpus, PathIndex) {
    let c = f.corpus().unwrap();
    let (idx, _) = PathIndex::build(&c, ExecMode::default());
    (c, idx)
}

fn assert_oracle(c: &Corpus, idx: &PathIndex, q: &Query, k: usize, cap: u32, mode: ExecMode) -> usize {
    let got = top_k(c, idx, q, &TopKOptions { k, radius_cap: cap, mode }).unwrap();
    let want = oracle::top_k(c, q, k, cap);
    assert_eq!(got.tuples.len(), want.len(), "{q}");
    for (g, w) in got.tuples.iter().zip(&want) {
        assert_eq!(g.tuple.nodes, w.nodes, "{q}");
        assert_eq!(g.distance, w.distance);
        assert!((g.score - w.score).abs() < 1e-12);
    }
    want.len()
}

#[test]
fn top_k_matches_enumeration_on_random_corpora() {
    let mut nonempty = 0;
    for seed in 0..5 {
        let (c, idx) = setup(&fixtures::random(seed, 500));
        for q in RANDOM_QUERIES {
            let q = Query::parse(q).unwrap();
            if assert_oracle(&c, &idx, &q, 10, 6, ExecMode::Parallel) > 0 {
                nonempty += 1;
            }
            assert_oracle(&c, &idx, &q, 3, 4, ExecMode::Sequential);
        }
    }
    assert!(nonempty >= 20, "only {nonempty} queries had results");
}

#[test]
fn top_k_matches_enumeration_on_country_fixtures() {
    for f in [fixtures::factbook(), fixtures::collision(), fixtures::mondial()] {
        let (c, idx) = setup(&f);
        for q in [QUERY1, "(country, *) AND (*, china)", "(name, *) AND (abbrev, nafta)"] {
            let q = Query::parse(q).unwrap();
            assert_oracle(&c, &idx, &q, 10, 6, ExecMode::default());
        }
    }
}

#[test]
fn query1_spans_twelve_context_combinations() {
    let (c, idx) = setup(&fixtures::factbook());
    let q = Query::parse(QUERY1).unwrap();
    let buckets = context_buckets(&c, &idx, &q).unwrap();
    assert_eq!(buckets.iter().map(|b| b.entries.len()).collect::<Vec<_>>(), vec![3, 2, 2]);
    let all = oracle::top_k(&c, &q, usize::MAX, 6);
    let combos: BTreeSet<Vec<String>> = all
        .iter()
        .map(|t| t.nodes.iter().map(|n| c.node(n).unwrap().context.to_string()).collect())
        .collect();
    assert_eq!(combos.len(), 12);
}

#[test]
fn united_occurs_in_three_contexts() {
    let (c, idx) = setup(&fixtures::factbook());
    let hits = idx.paths_for(&c, &SearchExpr::parse("united").unwrap(), None).unwrap();
    let paths: BTreeSet<String> = hits.iter().map(|h| h.path.to_string()).collect();
    assert_eq!(
        paths,
        BTreeSet::from([
            "/country".to_string(),
            fixtures::EXPORT_TC.to_string(),
            fixtures::IMPORT_TC.to_string()
        ])
    );
}

#[test]
fn percentage_name_hint_lists_both_paths_with_frequencies() {
    let (c, idx) = setup(&fixtures::factbook());
    let hits = idx.paths_for(&c, &SearchExpr::MatchAll, Some("percentage")).unwrap();
    let got: BTreeSet<(String, usize)> = hits.iter().map(|h| (h.path.to_string(), h.doc_frequency)).collect();
    // every fixture document lists both import and export partners
    assert_eq!(
        got,
        BTreeSet::from([(fixtures::EXPORT_PCT.to_string(), 6), (fixtures::IMPORT_PCT.to_string(), 6)])
    );
    assert!(idx.paths_for(&c, &SearchExpr::MatchAll, None).is_err());
}

#[test]
fn index_scores_follow_term_frequencies() {
    let f = fixtures::random(7, 50);
    let (c, idx) = setup(&f);
    assert!(c.len() <= 50);
    for word in ["red", "apple", "green", "pear", "item"] {
        let q = Query::parse(&format!("(*, {word})")).unwrap();
        let stream = idx.scan_term(&c, &q.terms[0], None).unwrap();
        let got: Vec<(String, f64)> = stream
            .iter()
            .map(|(i, s)| (c.node_at(i).id.to_string(), s))
            .collect();
        let mut want: Vec<(String, f64)> = oracle::candidates(&c, &q)[0]
            .iter()
            .map(|(id, s)| (id.to_string(), *s))
            .collect();
        want.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut got_sorted = got.clone();
        got_sorted.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        assert_eq!(got_sorted, want, "{word}");
        // streams come out in non-increasing score order
        assert!(got.windows(2).all(|w| w[0].1 >= w[1].1));
    }
}

#[test]
fn single_term_ranks_by_content_only() {
    let (c, idx) = setup(&fixtures::mondial());
    let q = Query::parse("(name, mexico)").unwrap();
    let r = top_k(&c, &idx, &q, &TopKOptions::default()).unwrap();
    assert!(!r.tuples.is_empty());
    assert!(r.tuples.iter().all(|t| t.distance == 0));
    assert!(r.tuples.windows(2).all(|w| w[0].score >= w[1].score));
    assert_eq!(r.tuples[0].score, 1.0);
}

#[test]
fn large_k_returns_every_valid_tuple() {
    let (c, idx) = setup(&fixtures::collision());
    let q = Query::parse("(trade country, china) AND (percentage, *)").unwrap();
    let all = oracle::top_k(&c, &q, usize::MAX, 6);
    let r = top_k(&c, &idx, &q, &TopKOptions { k: 1000, ..Default::default() }).unwrap();
    assert_eq!(r.tuples.len(), all.len());
    assert!(!r.stats.stopped_early);
}

#[test]
fn k_zero_is_rejected_and_missing_terms_give_empty_results() {
    let (c, idx) = setup(&fixtures::factbook());
    let q = Query::parse(QUERY1).unwrap();
    assert!(top_k(&c, &idx, &q, &TopKOptions { k: 0, ..Default::default() }).is_err());
    let none = Query::parse("(*, atlantis) AND (percentage, *)").unwrap();
    assert!(top_k(&c, &idx, &none, &TopKOptions::default()).unwrap().tuples.is_empty());
}

#[test]
fn refined_results_stay_inside_the_selection() {
    let (c, idx) = setup(&fixtures::factbook());
    let mut q = Query::parse(QUERY1).unwrap();
    let sel = |p: &str| Some(BTreeSet::from([ContextPath::parse(p).unwrap()]));
    q.refinement.selected_contexts = vec![sel("/country"), sel(fixtures::IMPORT_TC), sel(fixtures::IMPORT_PCT)];
    let r = top_k(&c, &idx, &q, &TopKOptions::default()).unwrap();
    assert!(!r.tuples.is_empty());
    for t in &r.tuples {
        assert_eq!(t.tuple.paths[0].as_str(), "/country");
        assert_eq!(t.tuple.paths[1].as_str(), fixtures::IMPORT_TC);
        assert_eq!(t.tuple.paths[2].as_str(), fixtures::IMPORT_PCT);
    }
    assert_oracle(&c, &idx, &q, 10, 6, ExecMode::default());
}

#[test]
fn raising_the_radius_never_drops_tuples() {
    let (c, idx) = setup(&fixtures::random(3, 300));
    let q = Query::parse(RANDOM_QUERIES[0]).unwrap();
    let mut prev: Option<BTreeSet<Vec<String>>> = None;
    for cap in 1..=7 {
        let r = top_k(&c, &idx, &q, &TopKOptions { k: usize::MAX, radius_cap: cap, ..Default::default() }).unwrap();
        let set: BTreeSet<Vec<String>> = r
            .tuples
            .iter()
            .map(|t| t.tuple.nodes.iter().map(|n| n.to_string()).collect())
            .collect();
        if let Some(p) = &prev {
            assert!(p.is_subset(&set), "cap {cap}");
        }
        prev = Some(set);
    }
}

#[test]
fn connection_distance_agrees_with_bfs_across_links() {
    let c = fixtures::factbook().corpus().unwrap();
    // a US import partner entry, the linked country root, and its year
    let tc = c
        .nodes()
        .find(|n| n.context.as_str() == fixtures::IMPORT_TC && n.text == "China" && n.id.doc == 0)
        .unwrap()
        .id
        .clone();
    let china = c.nodes().find(|n| n.context.as_str() == "/country" && n.text == "China").unwrap();
    let year = china.id.child(1);
    assert_eq!(c.node(&year).unwrap().name, "year");
    let nodes = vec![tc, china.id.clone(), year];
    assert_eq!(connection_distance(&c, &nodes, 6).unwrap(), oracle::distance(&c, &nodes, 6));
    assert_eq!(connection_distance(&c, &nodes, 6).unwrap(), Some(1 + 2 + 1));
    let same = vec![china.id.clone(), china.id.clone()];
    assert_eq!(connection_distance(&c, &same, 6).unwrap(), Some(0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn top_k_oracle_on_generated_corpora(seed in 100u64..10_000, qi in 0usize..RANDOM_QUERIES.len(), k in 1usize..15) {
        let (c, idx) = setup(&fixtures::random(seed, 200));
        let q = Query::parse(RANDOM_QUERIES[qi]).unwrap();
        let got = top_k(&c, &idx, &q, &TopKOptions { k, ..Default::default() }).unwrap();
        let want = oracle::top_k(&c, &q, k, 6);
        let got_nodes: Vec<_> = got.tuples.iter().map(|t| t.tuple.nodes.clone()).collect();
        let want_nodes: Vec<_> = want.iter().map(|t| t.nodes.clone()).collect();
        prop_assert_eq!(got_nodes, want_nodes);
        // score is non-increasing along the ranking
        prop_assert!(got.tuples.windows(2).all(|w| w[0].score >= w[1].score));
    }
}
