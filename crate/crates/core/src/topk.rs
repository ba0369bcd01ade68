//! Threshold-style top-k search over satisfying, connected node tuples.
//!
//! Each term has a ranked stream of satisfying nodes. Streams are consumed
//! round-robin (sorted access). When a node is seen, every tuple containing
//! it at that term position is completed through random access: the other
//! positions draw from the node's bounded BFS ball, checked against the
//! other streams' score tables. Search stops once the k-th best score beats
//! the best score an unseen tuple could still reach, or a stream runs dry.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BallCache, DEFAULT_RADIUS_CAP};
use crate::index::{NodeStream, PathIndex};
use crate::par::{self, ExecMode};
use crate::query::{Query, ResultTuple};
use crate::store::Corpus;

pub const DEFAULT_K: usize = 10;

/// Combines per-term content scores and the tuple's total distance.
/// Implementations must be non-decreasing in every content score and
/// non-increasing in distance.
pub trait ScoreStrategy: Send + Sync + fmt::Debug {
    fn aggregate(&self, content: &[f64], distance: u32) -> f64;
}

/// `sum(content) / (1 + distance)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Compactness;

impl ScoreStrategy for Compactness {
    fn aggregate(&self, content: &[f64], distance: u32) -> f64 {
        let sum: f64 = content.iter().sum();
        sum / (1.0 + distance as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredTuple {
    pub tuple: ResultTuple,
    pub content_scores: Vec<f64>,
    pub distance: u32,
    pub score: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub sorted_accesses: usize,
    pub tuples_scored: usize,
    pub stopped_early: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopKResult {
    pub k: usize,
    pub tuples: Vec<ScoredTuple>,
    pub stats: SearchStats,
}

#[derive(Clone, Copy, Debug)]
pub struct TopKOptions {
    pub k: usize,
    pub radius_cap: u32,
    pub mode: ExecMode,
}

impl Default for TopKOptions {
    fn default() -> Self {
        TopKOptions {
            k: DEFAULT_K,
            radius_cap: DEFAULT_RADIUS_CAP,
            mode: ExecMode::default(),
        }
    }
}

/// Ranking order: descending score, then the node vector in document order.
pub fn rank_order(a: (f64, &[u32]), b: (f64, &[u32])) -> Ordering {
    b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal).then_with(|| a.1.cmp(b.1))
}

#[derive(Clone, Debug)]
struct Candidate {
    nodes: Vec<u32>,
    content: Vec<f64>,
    distance: u32,
    score: f64,
}

pub fn top_k(corpus: &Corpus, index: &PathIndex, query: &Query, opts: &TopKOptions) -> Result<TopKResult> {
    top_k_with(corpus, index, query, opts, &Compactness)
}

pub fn top_k_with(
    corpus: &Corpus,
    index: &PathIndex,
    query: &Query,
    opts: &TopKOptions,
    strategy: &dyn ScoreStrategy,
) -> Result<TopKResult> {
    if opts.k < 1 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let m = query.len();
    let streams = (0..m)
        .map(|i| index.scan_term(corpus, &query.terms[i], query.context_filter(i)))
        .collect::<Result<Vec<NodeStream>>>()?;
    let empty = TopKResult {
        k: opts.k,
        tuples: Vec::new(),
        stats: SearchStats::default(),
    };
    if streams.iter().any(NodeStream::is_empty) {
        return Ok(empty);
    }

    let balls = BallCache::new(opts.radius_cap);
    let mut stats = SearchStats::default();
    let mut pos = vec![0usize; m];
    let mut found: HashMap<Vec<u32>, Candidate> = HashMap::new();
    let mut best: Vec<Candidate>;

    loop {
        // One sorted access per live stream.
        let mut batch = Vec::with_capacity(m);
        for (i, s) in streams.iter().enumerate() {
            if let Some((idx, _)) = s.get(pos[i]) {
                batch.push((i, idx));
                pos[i] += 1;
                stats.sorted_accesses += 1;
            }
        }
        let completions = par::flat_map(opts.mode, &batch, |&(i, x)| {
            complete(corpus, &streams, &balls, i, x, strategy)
        });
        for c in completions {
            if !found.contains_key(&c.nodes) {
                stats.tuples_scored += 1;
                found.insert(c.nodes.clone(), c);
            }
        }
        best = found.values().cloned().collect();
        best.sort_by(|a, b| rank_order((a.score, &a.nodes), (b.score, &b.nodes)));
        best.truncate(opts.k);

        if streams.iter().enumerate().any(|(i, s)| pos[i] >= s.len()) {
            break;
        }
        if best.len() == opts.k {
            let frontier: Vec<f64> = streams
                .iter()
                .enumerate()
                .map(|(i, s)| s.get(pos[i]).map(|e| e.1).unwrap_or(0.0))
                .collect();
            let threshold = strategy.aggregate(&frontier, 0);
            if best[opts.k - 1].score > threshold {
                stats.stopped_early = true;
                break;
            }
        }
    }

    let tuples = best
        .into_iter()
        .map(|c| ScoredTuple {
            tuple: to_result_tuple(corpus, &c.nodes),
            content_scores: c.content,
            distance: c.distance,
            score: c.score,
        })
        .collect();
    Ok(TopKResult {
        k: opts.k,
        tuples,
        stats,
    })
}

pub(crate) fn to_result_tuple(corpus: &Corpus, nodes: &[u32]) -> ResultTuple {
    ResultTuple {
        nodes: nodes.iter().map(|&i| corpus.node_at(i).id.clone()).collect(),
        paths: nodes.iter().map(|&i| corpus.node_at(i).context.clone()).collect(),
    }
}

/// All valid tuples with node `x` at position `i`.
fn complete(
    corpus: &Corpus,
    streams: &[NodeStream],
    balls: &BallCache,
    i: usize,
    x: u32,
    strategy: &dyn ScoreStrategy,
) -> Vec<Candidate> {
    let m = streams.len();
    let around = balls.get(corpus, x);
    let options: Vec<Vec<u32>> = (0..m)
        .map(|j| {
            if j == i {
                return vec![x];
            }
            let mut v: Vec<u32> = around
                .keys()
                .copied()
                .filter(|y| streams[j].score_of(*y).is_some())
                .collect();
            v.sort_unstable();
            v
        })
        .collect();
    if options.iter().any(Vec::is_empty) {
        return Vec::new();
    }

    let mut out = Vec::new();
    let mut chosen: Vec<u32> = Vec::with_capacity(m);
    extend(corpus, streams, balls, &options, &mut chosen, 0, &mut out, strategy);
    out
}

#[allow(clippy::too_many_arguments)]
fn extend(
    corpus: &Corpus,
    streams: &[NodeStream],
    balls: &BallCache,
    options: &[Vec<u32>],
    chosen: &mut Vec<u32>,
    distance: u32,
    out: &mut Vec<Candidate>,
    strategy: &dyn ScoreStrategy,
) {
    let j = chosen.len();
    if j == options.len() {
        let content: Vec<f64> = chosen
            .iter()
            .enumerate()
            .map(|(t, n)| streams[t].score_of(*n).unwrap_or(0.0))
            .collect();
        let score = strategy.aggregate(&content, distance);
        out.push(Candidate {
            nodes: chosen.clone(),
            content,
            distance,
            score,
        });
        return;
    }
    for &y in &options[j] {
        let ball = balls.get(corpus, y);
        let mut add = 0;
        let mut ok = true;
        for c in chosen.iter() {
            match ball.get(c) {
                Some(d) => add += d,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            chosen.push(y);
            extend(corpus, streams, balls, options, chosen, distance + add, out, strategy);
            chosen.pop();
        }
    }
}

/// Distinct paths used by the tuples at each term position.
pub fn paths_in(result: &TopKResult, m: usize) -> Vec<BTreeSet<crate::path::ContextPath>> {
    let mut out = vec![BTreeSet::new(); m];
    for t in &result.tuples {
        for (i, p) in t.tuple.paths.iter().enumerate() {
            out[i].insert(p.clone());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::IngestOptions;

    fn setup(docs: &[&str]) -> (Corpus, PathIndex) {
        let (c, _) = Corpus::ingest(
            docs.iter().enumerate().map(|(i, x)| (format!("d{i}"), x.as_bytes().to_vec())),
            &[],
            &IngestOptions::default(),
        )
        .unwrap();
        let (idx, _) = PathIndex::build(&c, ExecMode::Sequential);
        (c, idx)
    }

    #[test]
    fn single_term_is_content_ranked() {
        let (c, idx) = setup(&["<w><country>Romania</country><country>Romania Romania x</country></w>"]);
        let q = Query::parse("(country, Romania)").unwrap();
        let r = top_k(&c, &idx, &q, &TopKOptions::default()).unwrap();
        assert_eq!(r.tuples.len(), 2);
        assert!(r.tuples.iter().all(|t| t.distance == 0));
        assert_eq!(r.tuples[0].score, 1.0);
        assert!(r.tuples[1].score < 1.0);
    }

    #[test]
    fn sibling_pairs_and_k_bounds() {
        let (c, idx) = setup(&["<r><i><a>x</a><b>y</b></i><i><a>x</a><b>y</b></i></r>"]);
        let q = Query::parse("(a, *) AND (b, *)").unwrap();
        let all = top_k(&c, &idx, &q, &TopKOptions { k: 100, ..Default::default() }).unwrap();
        // two sibling pairs at distance 2, two cross pairs at distance 4
        assert_eq!(all.tuples.len(), 4);
        assert_eq!(all.tuples[0].distance, 2);
        assert_eq!(all.tuples[3].distance, 4);
        let one = top_k(&c, &idx, &q, &TopKOptions { k: 1, ..Default::default() }).unwrap();
        assert_eq!(one.tuples[0], all.tuples[0]);
        assert!(top_k(&c, &idx, &q, &TopKOptions { k: 0, ..Default::default() }).is_err());
        let tight = top_k(&c, &idx, &q, &TopKOptions { k: 100, radius_cap: 2, ..Default::default() }).unwrap();
        assert_eq!(tight.tuples.len(), 2);
    }

    #[test]
    fn no_match_is_empty() {
        let (c, idx) = setup(&["<r><a>x</a></r>"]);
        let q = Query::parse("(a, nothing) AND (a, *)").unwrap();
        assert!(top_k(&c, &idx, &q, &TopKOptions::default()).unwrap().tuples.is_empty());
    }
}
