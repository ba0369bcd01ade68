use std::collections::BTreeSet;
use std::time::Instant;

use proptest::prelude::*;
use xcube_core::dataguide::{GuideOptions, GuideSet, document_path_sets, overlap_sets};
use xcube_core::fixtures::{self, Fixture};
use xcube_core::par::ExecMode;
use xcube_core::path::ContextPath;
use xcube_core::store::Corpus;

fn paths(names: &[&str]) -> BTreeSet<ContextPath> {
    names.iter().map(|n| ContextPath::parse(&format!("/r/{n}")).unwrap()).collect()
}

fn build(c: &Corpus, threshold: f64) -> GuideSet {
    GuideSet::build(c, &GuideOptions { threshold, mode: ExecMode::default() }).unwrap()
}

#[test]
fn overlap_formula_cases() {
    let a = paths(&["a", "b", "c", "d"]);
    let b = paths(&["a", "b", "x", "y", "z"]);
    assert_eq!(overlap_sets(&a, &a).unwrap(), 1.0);
    assert_eq!(overlap_sets(&a, &paths(&["p", "q"])).unwrap(), 0.0);
    let o = overlap_sets(&a, &b).unwrap();
    assert!((o - 0.4).abs() <= 1e-12);
    assert!(overlap_sets(&a, &BTreeSet::new()).is_err());
}

fn arb_paths() -> impl Strategy<Value = BTreeSet<ContextPath>> {
    prop::collection::btree_set("[a-f]{1,2}", 1..8)
        .prop_map(|s| s.into_iter().map(|n| ContextPath::parse(&format!("/r/{n}")).unwrap()).collect())
}

proptest! {
    #[test]
    fn overlap_is_symmetric_bounded_and_reflexive(p1 in arb_paths(), p2 in arb_paths()) {
        let a = overlap_sets(&p1, &p2).unwrap();
        prop_assert_eq!(a, overlap_sets(&p2, &p1).unwrap());
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert_eq!(overlap_sets(&p1, &p1).unwrap(), 1.0);
        let common = p1.intersection(&p2).count() as f64;
        let want = common / p1.len().max(p2.len()) as f64;
        prop_assert!((a - want).abs() <= 1e-12);
    }
}

#[test]
fn three_families_give_three_guides() {
    let start = Instant::now();
    let c = fixtures::families(3, 100, 42).corpus().unwrap();
    assert_eq!(c.documents().len(), 300);
    let sets = document_path_sets(&c, ExecMode::default());
    // fixture construction: intra-family overlap ≥ 0.4, inter-family < 0.4
    for i in (0..300).step_by(7) {
        for j in (0..300).step_by(11) {
            let o = overlap_sets(&sets[i], &sets[j]).unwrap();
            if i / 100 == j / 100 {
                assert!(o >= 0.4);
            } else {
                assert!(o < 0.4);
            }
        }
    }
    let gs = build(&c, 0.4);
    assert_eq!(gs.guides.len(), 3);
    for g in &gs.guides {
        assert_eq!(g.member_docs.len(), 100);
    }
    assert!(start.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn degenerate_corpus_without_merging_keeps_one_guide_per_document() {
    let c = fixtures::degenerate(50).corpus().unwrap();
    let sets = document_path_sets(&c, ExecMode::default());
    let distinct: BTreeSet<_> = sets.iter().collect();
    assert_eq!(distinct.len(), 50);
    assert_eq!(build(&c, f64::INFINITY).guides.len(), 50);
    assert_eq!(build(&c, 1.5).guides.len(), 50);
}

#[test]
fn guide_count_never_grows_as_the_threshold_drops() {
    let fs: Vec<Fixture> = vec![
        fixtures::families(3, 30, 7),
        fixtures::degenerate(50),
        fixtures::mixed_schema(),
        fixtures::factbook(),
        fixtures::random(1, 400),
    ];
    for f in fs {
        let c = f.corpus().unwrap();
        let counts: Vec<usize> = [1.0, 0.6, 0.4, 0.2, 0.0].iter().map(|&t| build(&c, t).guides.len()).collect();
        assert!(counts.windows(2).all(|w| w[0] >= w[1]), "{}: {counts:?}", f.name);
        assert_eq!(counts[4], 1);
    }
}

#[test]
fn every_corpus_path_is_covered() {
    let fs = vec![
        fixtures::factbook(),
        fixtures::collision(),
        fixtures::mondial(),
        fixtures::mixed_schema(),
        fixtures::skew(),
        fixtures::families(3, 20, 3),
        fixtures::degenerate(50),
        fixtures::random(0, 500),
        fixtures::random(4, 500),
    ];
    for f in fs {
        let c = f.corpus().unwrap();
        for t in [f64::INFINITY, 1.0, 0.6, 0.4, 0.2, 0.0] {
            let gs = build(&c, t);
            for p in c.paths().keys() {
                assert!(!gs.locate(p).is_empty(), "{} at {t}: {p}", f.name);
            }
            // each document's own paths sit in its guide
            let sets = document_path_sets(&c, ExecMode::default());
            for (d, s) in sets.iter().enumerate() {
                let g = &gs.guides[gs.guide_of_doc(d as u32).unwrap()];
                assert!(s.is_subset(&g.paths));
            }
        }
    }
}

#[test]
fn import_percentage_locates_in_the_country_guide() {
    let c = fixtures::factbook().corpus().unwrap();
    let gs = build(&c, 0.4);
    assert_eq!(gs.guides.len(), 1);
    let at = gs.locate(&ContextPath::parse(fixtures::IMPORT_PCT).unwrap());
    assert_eq!(at.len(), 1);
    assert_eq!(gs.guides[at[0].0].member_docs.len(), 6);
    assert!(!gs.links.is_empty());
}

#[test]
fn shared_path_locates_in_both_family_guides() {
    let c = fixtures::mixed_schema().corpus().unwrap();
    let gs = build(&c, 0.6);
    assert_eq!(gs.guides.len(), 2);
    let shared = gs.locate(&ContextPath::parse("/rec/name").unwrap());
    let ids: BTreeSet<usize> = shared.iter().map(|(g, _)| *g).collect();
    assert_eq!(ids, BTreeSet::from([0, 1]));
    assert_eq!(gs.locate(&ContextPath::parse("/rec/b/deep/y").unwrap()).len(), 1);
}

#[test]
fn guides_round_trip_and_report_stats() {
    let c = fixtures::families(3, 10, 1).corpus().unwrap();
    let gs = build(&c, 0.4);
    let dir = tempfile::tempdir().unwrap();
    gs.save(dir.path()).unwrap();
    let back = GuideSet::load(dir.path()).unwrap();
    assert_eq!(back.stats(), gs.stats());
    let text = gs.stats().to_string();
    assert!(text.contains("dataguides\t3"));
    assert!(text.contains("threshold\t0.4"));
    assert!(GuideSet::build(&c, &GuideOptions { threshold: f64::NAN, mode: ExecMode::default() }).is_err());
}
