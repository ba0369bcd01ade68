//! Plain-text views for terminal output.

use std::fmt::Write as _;

use xcube_core::cube::{MatchReport, MatchStatus, StarSchema};
use xcube_core::query::Query;
use xcube_core::store::Corpus;
use xcube_core::topk::TopKResult;

const VALUE_WIDTH: usize = 32;

fn clip(s: &str) -> String {
    let s = s.split_whitespace().collect::<Vec<_>>().join(" ");
    if s.chars().count() <= VALUE_WIDTH {
        s
    } else {
        let mut t: String = s.chars().take(VALUE_WIDTH - 1).collect();
        t.push('…');
        t
    }
}

pub fn topk(corpus: &Corpus, query: &Query, result: &TopKResult) -> String {
    let mut out = String::new();
    if result.tuples.is_empty() {
        out.push_str("(no results)\n");
        return out;
    }
    let _ = writeln!(out, "rank  score    dist  term  node            path  value");
    for (rank, t) in result.tuples.iter().enumerate() {
        for (i, (node, path)) in t.tuple.nodes.iter().zip(&t.tuple.paths).enumerate() {
            let value = corpus.idx_of(node).map(|n| corpus.value_at(n)).unwrap_or_default();
            if i == 0 {
                let _ = write!(out, "{:<4}  {:<7.4}  {:<4}", rank + 1, t.score, t.distance);
            } else {
                let _ = write!(out, "{:<4}  {:<7}  {:<4}", "", "", "");
            }
            let _ = writeln!(out, "  {:<4}  {:<14}  {path}  {}", i + 1, node.to_string(), clip(&value));
        }
    }
    let s = &result.stats;
    let _ = writeln!(
        out,
        "{} of k={} for {query}; {} sorted accesses, {} tuples scored, stopped early: {}",
        result.tuples.len(),
        result.k,
        s.sorted_accesses,
        s.tuples_scored,
        s.stopped_early
    );
    out
}

pub fn match_report(report: &MatchReport) -> String {
    let mut out = String::new();
    for c in &report.columns {
        let paths: Vec<&str> = c.paths.iter().map(|p| p.as_str()).collect();
        let _ = writeln!(out, "column {} {} [{}]", c.column + 1, c.label, paths.join(", "));
        if c.matches.is_empty() {
            out.push_str("  (no catalog entries)\n");
        }
        for m in &c.matches {
            match &m.status {
                MatchStatus::Full => {
                    let _ = writeln!(out, "  {} {}: full", m.kind, m.name);
                }
                MatchStatus::Partial { missing } => {
                    let miss: Vec<&str> = missing.iter().map(|p| p.as_str()).collect();
                    let _ = writeln!(out, "  {} {}: partial, not covered: {}", m.kind, m.name, miss.join(", "));
                }
            }
        }
    }
    let join = |s: &std::collections::BTreeSet<String>| s.iter().cloned().collect::<Vec<_>>().join(", ");
    let _ = writeln!(out, "facts: {}", join(&report.facts));
    let _ = writeln!(out, "dimensions: {}", join(&report.dimensions));
    for w in &report.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}

pub fn star(star: &StarSchema) -> String {
    let mut out = String::new();
    for (kind, tables) in [("fact", &star.facts), ("dimension", &star.dimensions)] {
        for t in tables {
            let _ = writeln!(
                out,
                "{kind} {} ({} rows) -> {}: {}",
                t.name,
                t.rows.len(),
                t.file,
                t.header().join(", ")
            );
        }
    }
    for (kind, name) in &star.manifest.auto_matched {
        let _ = writeln!(out, "auto-matched {kind} {name}");
    }
    out
}
