use std::hint::black_box;

use criterion::{BenchmarkId, Criterion, criterion_group, criterion_main};
use xcube_core::dataguide::{GuideOptions, GuideSet};
use xcube_core::fixtures::{self, QUERY1};
use xcube_core::index::PathIndex;
use xcube_core::materialize::materialize;
use xcube_core::par::ExecMode;
use xcube_core::query::Query;
use xcube_core::session::{Engine, EngineConfig, Overrides, Session};
use xcube_core::store::IngestOptions;
use xcube_core::topk::{TopKOptions, top_k};

const MODES: [(&str, ExecMode); 2] = [("sequential", ExecMode::Sequential), ("parallel", ExecMode::Parallel)];

fn ingest_and_index(c: &mut Criterion) {
    let f = fixtures::families(3, 200, 11);
    let mut g = c.benchmark_group("ingest");
    for (name, mode) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                let (corpus, _) = f.ingest_with(&IngestOptions { mode }).unwrap();
                black_box(PathIndex::build(&corpus, mode))
            })
        });
    }
    g.finish();
}

fn guides(c: &mut Criterion) {
    let corpus = fixtures::families(3, 200, 11).corpus().unwrap();
    let mut g = c.benchmark_group("guides");
    for (name, mode) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(GuideSet::build(&corpus, &GuideOptions { threshold: 0.4, mode }).unwrap()))
        });
    }
    g.finish();
}

fn search(c: &mut Criterion) {
    let corpus = fixtures::random(9, 2_000).corpus().unwrap();
    let (index, _) = PathIndex::build(&corpus, ExecMode::default());
    let q = Query::parse("(name, *) AND (item, *) AND (*, red)").unwrap();
    let mut g = c.benchmark_group("top_k");
    for (name, mode) in MODES {
        let opts = TopKOptions { k: 10, radius_cap: 6, mode };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(top_k(&corpus, &index, &q, &opts).unwrap()))
        });
    }
    g.finish();
}

fn full_result(c: &mut Criterion) {
    let e = Engine::build(fixtures::factbook().corpus().unwrap(), EngineConfig::default()).unwrap();
    let mut s = Session::start(&e, "bench", QUERY1, Overrides::default()).unwrap();
    let all: Vec<String> = s
        .summary
        .groups()
        .values()
        .filter_map(|ids| ids.first().cloned())
        .collect();
    s.choose_connections(&all).unwrap();
    let mut g = c.benchmark_group("materialize");
    for (name, mode) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(materialize(&e.corpus, &e.index, &s.query, mode).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, ingest_and_index, guides, search, full_result);
criterion_main!(benches);
