#[path = "support/oracle.rs"]
mod oracle;

use std::collections::BTreeSet;

use proptest::prelude::*;
use xcube_core::dewey::DeweyId;
use xcube_core::fixtures::{self, Fixture};
use xcube_core::par::ExecMode;
use xcube_core::path::ContextPath;
use xcube_core::store::{Corpus, EdgeKind, IngestOptions, NodeKind};

fn all_kinds() -> BTreeSet<EdgeKind> {
    EdgeKind::ALL.into_iter().collect()
}

fn every_fixture() -> Vec<Fixture> {
    let mut v = vec![
        fixtures::factbook(),
        fixtures::collision(),
        fixtures::mondial(),
        fixtures::mixed_schema(),
        fixtures::skew(),
    ];
    v.extend((0..3).map(|s| fixtures::random(s, 300)));
    v
}

#[test]
fn value_based_edges_match_a_pairwise_text_scan() {
    let f = fixtures::factbook();
    let (c, stats) = f.ingest().unwrap();
    let countries: Vec<_> = c.nodes().filter(|n| n.context.as_str() == "/country").collect();
    let mut expected = 0;
    for n in c.nodes() {
        let p = n.context.as_str();
        if p == fixtures::IMPORT_TC || p == fixtures::EXPORT_TC {
            expected += countries.iter().filter(|k| k.text.trim() == n.text.trim()).count();
        }
    }
    assert!(expected > 0);
    assert_eq!(stats.edges[&EdgeKind::ValueBased], expected);
    assert_eq!(stats.documents, 6);
}

#[test]
fn trade_partner_reaches_the_linked_country() {
    let c = fixtures::factbook().corpus().unwrap();
    let tc = c
        .nodes()
        .find(|n| n.context.as_str() == fixtures::IMPORT_TC && n.text == "China")
        .unwrap();
    let around = c.neighbors(&tc.id, &BTreeSet::from([EdgeKind::ValueBased])).unwrap();
    assert_eq!(around.len(), 1);
    assert_eq!(around[0].1.context.as_str(), "/country");
    assert_eq!(around[0].1.text, "China");
    assert!(c.neighbors(&tc.id, &BTreeSet::new()).unwrap().is_empty());
}

#[test]
fn skewed_path_frequencies_are_reported() {
    let c = fixtures::skew().corpus().unwrap();
    let stat = |p: &str| c.path_stat(&ContextPath::parse(p).unwrap()).unwrap().doc_frequency;
    assert_eq!(c.documents().len(), 16);
    assert_eq!(stat("/country"), 15);
    assert_eq!(stat("/country/rare"), 2);
}

#[test]
fn content_matches_an_independent_dom_walk() {
    let nested = Fixture {
        name: "nested".into(),
        docs: vec![(
            "n.xml".into(),
            r#"<a k="v">top <b>one <c>two <d>three</d> four</c> five</b> six<e x="1"/> seven</a>"#.into(),
        )],
        links: vec![],
    };
    for f in [nested, fixtures::factbook(), fixtures::mondial()] {
        let c = f.corpus().unwrap();
        for n in c.nodes() {
            let xml = &f.docs[n.id.doc as usize].1;
            assert_eq!(c.content(&n.id).unwrap(), oracle::dom_content(xml, &n.id.steps), "{}", n.id);
        }
    }
    let c = fixtures::factbook().corpus().unwrap();
    let item = c.nodes().find(|n| n.name == "item").unwrap();
    assert_eq!(c.content(&item.id).unwrap(), "China 15");
    assert!(c.content(&DeweyId::new(99, vec![1])).is_err());
}

#[test]
fn dewey_order_is_document_order_and_contexts_follow_parents() {
    for f in every_fixture() {
        let c = f.corpus().unwrap();
        for (doc, (_, xml)) in f.docs.iter().enumerate() {
            // reference pre-order: elements with their attributes first
            let parsed = roxmltree::Document::parse(xml).unwrap();
            let mut want = Vec::new();
            fn pre(n: roxmltree::Node<'_, '_>, out: &mut Vec<String>) {
                out.push(n.tag_name().name().to_lowercase());
                for a in n.attributes() {
                    out.push(format!("@{}", a.name().to_lowercase()));
                }
                for ch in n.children().filter(|x| x.is_element()) {
                    pre(ch, out);
                }
            }
            pre(parsed.root_element(), &mut want);
            let (s, e) = c.doc_range(doc as u32).unwrap();
            let got: Vec<String> = (s..e).map(|i| c.node_at(i).name.clone()).collect();
            assert_eq!(got, want, "{} doc {doc}", f.name);
            let ids: Vec<&DeweyId> = (s..e).map(|i| &c.node_at(i).id).collect();
            assert!(ids.windows(2).all(|w| w[0] < w[1]));
        }
        for n in c.nodes() {
            let mut names = vec![n.name.clone()];
            let mut cur = n.id.parent();
            while let Some(p) = cur {
                names.push(c.node(&p).unwrap().name.clone());
                cur = p.parent();
            }
            names.reverse();
            assert_eq!(n.context, ContextPath::from_segments(names).unwrap());
            if n.kind == NodeKind::Attribute {
                assert!(c.children_idx(c.idx_of(&n.id).unwrap()).is_empty());
            }
        }
    }
}

#[test]
fn edges_are_symmetric() {
    for f in every_fixture() {
        let c = f.corpus().unwrap();
        for n in c.nodes() {
            for (e, other) in c.neighbors(&n.id, &all_kinds()).unwrap() {
                let back = c.neighbors(&other.id, &all_kinds()).unwrap();
                assert!(back.iter().any(|(e2, o2)| *e2 == e && o2.id == n.id), "{}", f.name);
            }
        }
    }
}

#[test]
fn reingest_is_deterministic_across_modes() {
    for f in every_fixture() {
        let (a, sa) = f.ingest_with(&IngestOptions { mode: ExecMode::Sequential }).unwrap();
        let (b, sb) = f.ingest_with(&IngestOptions { mode: ExecMode::Parallel }).unwrap();
        assert_eq!(sa, sb);
        assert_eq!(a.paths(), b.paths());
        assert!(a.nodes().eq(b.nodes()));
    }
}

#[test]
fn store_round_trips_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let (c, stats) = fixtures::mondial().ingest().unwrap();
    c.save(dir.path()).unwrap();
    let back = Corpus::load(dir.path()).unwrap();
    assert_eq!(back.stats(), stats);
    assert!(back.nodes().eq(c.nodes()));
    assert!(stats.edges[&EdgeKind::Idref] > 0);
    assert!(stats.edges[&EdgeKind::Xlink] > 0);
    assert!(Corpus::load(&dir.path().join("missing")).is_err());
}

#[test]
fn malformed_documents_are_rejected_without_stopping_ingest() {
    let docs = vec![
        ("good.xml".to_string(), b"<a><b>x</b></a>".to_vec()),
        ("bad.xml".to_string(), b"<a><b>x</a>".to_vec()),
        ("also_good.xml".to_string(), b"<a/>".to_vec()),
    ];
    let (c, stats) = Corpus::ingest(docs, &[], &IngestOptions::default()).unwrap();
    assert_eq!(stats.documents, 2);
    assert_eq!(stats.rejected.len(), 1);
    assert_eq!(c.len(), 3);
    let dup = vec![("a.xml".to_string(), b"<a/>".to_vec()), ("a.xml".to_string(), b"<b/>".to_vec())];
    assert!(Corpus::ingest(dup, &[], &IngestOptions::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn generated_corpora_keep_store_invariants(seed in 0u64..5_000) {
        let f = fixtures::random(seed, 250);
        let (c, stats) = f.ingest().unwrap();
        prop_assert_eq!(stats.nodes, c.len());
        prop_assert_eq!(stats.distinct_paths, c.paths().len());
        let doc_total: usize = c.documents().iter().map(|d| d.node_count).sum();
        prop_assert_eq!(doc_total, c.len());
        for n in c.nodes() {
            for (e, other) in c.neighbors(&n.id, &all_kinds()).unwrap() {
                if e.kind == EdgeKind::ParentChild {
                    prop_assert!(e.from.is_ancestor_of(&e.to) && e.to.parent() == Some(e.from.clone()));
                }
                let back = c.neighbors(&other.id, &all_kinds()).unwrap();
                prop_assert!(back.iter().any(|(e2, o2)| *e2 == e && o2.id == n.id));
            }
        }
    }
}
