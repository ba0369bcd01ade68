//! Undirected distances over the data graph (tree edges plus link edges,
//! unit weights).

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use dashmap::DashMap;

use crate::dewey::DeweyId;
use crate::error::Result;
use crate::store::{Corpus, Via};

pub const DEFAULT_RADIUS_CAP: u32 = 6;

/// Hop distances from `src` to every node within `cap` hops (itself at 0).
pub fn ball(corpus: &Corpus, src: u32, cap: u32) -> HashMap<u32, u32> {
    let mut dist = HashMap::new();
    dist.insert(src, 0);
    let mut queue = VecDeque::from([src]);
    while let Some(v) = queue.pop_front() {
        let d = dist[&v];
        if d == cap {
            continue;
        }
        corpus.for_each_adjacent(v, |u, _| {
            if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(u) {
                e.insert(d + 1);
                queue.push_back(u);
            }
        });
    }
    dist
}

/// Shared memo of [`ball`] results for one cap.
#[derive(Debug)]
pub struct BallCache {
    cap: u32,
    balls: DashMap<u32, Arc<HashMap<u32, u32>>>,
}

impl BallCache {
    pub fn new(cap: u32) -> Self {
        BallCache {
            cap,
            balls: DashMap::new(),
        }
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    pub fn get(&self, corpus: &Corpus, idx: u32) -> Arc<HashMap<u32, u32>> {
        if let Some(b) = self.balls.get(&idx) {
            return b.clone();
        }
        let b = Arc::new(ball(corpus, idx, self.cap));
        self.balls.insert(idx, b.clone());
        b
    }

    pub fn distance(&self, corpus: &Corpus, a: u32, b: u32) -> Option<u32> {
        self.get(corpus, a).get(&b).copied()
    }
}

/// Shortest hop count between two nodes, if within `cap`.
pub fn pair_distance(corpus: &Corpus, a: u32, b: u32, cap: u32) -> Option<u32> {
    if a == b {
        return Some(0);
    }
    let mut dist = HashMap::from([(a, 0u32)]);
    let mut queue = VecDeque::from([a]);
    while let Some(v) = queue.pop_front() {
        let d = dist[&v];
        if d == cap {
            continue;
        }
        let mut found = false;
        corpus.for_each_adjacent(v, |u, _| {
            if u == b {
                found = true;
            }
            if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(u) {
                e.insert(d + 1);
                queue.push_back(u);
            }
        });
        if found {
            return Some(d + 1);
        }
    }
    None
}

/// Sum of pairwise distances over all unordered pairs, or `None` when some
/// pair is farther apart than `cap`.
pub fn total_distance(corpus: &Corpus, nodes: &[u32], cap: u32) -> Option<u32> {
    let mut total = 0;
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            total += pair_distance(corpus, nodes[i], nodes[j], cap)?;
        }
    }
    Some(total)
}

pub fn connection_distance(corpus: &Corpus, nodes: &[DeweyId], cap: u32) -> Result<Option<u32>> {
    let idxs = nodes
        .iter()
        .map(|id| {
            corpus
                .idx_of(id)
                .ok_or_else(|| crate::error::Error::NodeNotFound(id.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(total_distance(corpus, &idxs, cap))
}

pub fn invert(via: Via) -> Via {
    match via {
        Via::Up => Via::Down,
        Via::Down => Via::Up,
        Via::Link { edge, forward } => Via::Link { edge, forward: !forward },
    }
}

/// A walk from a start node: each step is the move taken and the node reached.
pub type Walk = Vec<(Via, u32)>;

/// Every shortest walk from `a` to `b` within `cap`, up to `limit` of them,
/// in a deterministic order.
pub fn shortest_walks(corpus: &Corpus, a: u32, b: u32, cap: u32, limit: usize) -> Vec<Walk> {
    if a == b {
        return vec![Vec::new()];
    }
    let mut dist = HashMap::from([(a, 0u32)]);
    let mut queue = VecDeque::from([a]);
    let mut target = None;
    while let Some(v) = queue.pop_front() {
        let d = dist[&v];
        if target.is_some_and(|t| d >= t) || d == cap {
            continue;
        }
        corpus.for_each_adjacent(v, |u, _| {
            if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(u) {
                e.insert(d + 1);
                queue.push_back(u);
                if u == b {
                    target = Some(d + 1);
                }
            }
        });
    }
    if target.is_none() {
        return Vec::new();
    }

    // Walk backwards from b over strictly decreasing distance.
    let mut out = Vec::new();
    let mut suffix: Vec<(Via, u32)> = Vec::new();
    back(corpus, &dist, a, b, &mut suffix, &mut out, limit);
    out.sort();
    out
}

fn back(
    corpus: &Corpus,
    dist: &HashMap<u32, u32>,
    a: u32,
    v: u32,
    suffix: &mut Vec<(Via, u32)>,
    out: &mut Vec<Walk>,
    limit: usize,
) {
    if out.len() >= limit {
        return;
    }
    if v == a {
        out.push(suffix.iter().rev().copied().collect());
        return;
    }
    let dv = dist[&v];
    let mut preds = Vec::new();
    corpus.for_each_adjacent(v, |u, via| {
        if dist.get(&u) == Some(&(dv - 1)) {
            preds.push((u, invert(via)));
        }
    });
    preds.sort();
    for (u, step) in preds {
        suffix.push((step, v));
        back(corpus, dist, a, u, suffix, out, limit);
        suffix.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::{IngestOptions, LinkSpec};

    fn corpus() -> Corpus {
        let docs = [
            ("a.xml", "<r><x>k</x><y>k</y><z><w/></z></r>"),
            ("b.xml", "<s><x>k</x></s>"),
        ];
        let links = vec![LinkSpec::value_based("/r/x", "/s/x", "same").unwrap()];
        Corpus::ingest(
            docs.iter().map(|(n, x)| (n.to_string(), x.as_bytes().to_vec())),
            &links,
            &IngestOptions::default(),
        )
        .unwrap()
        .0
    }

    #[test]
    fn sibling_and_link_distances() {
        let c = corpus();
        let id = |s: &str| c.idx_of(&s.parse().unwrap()).unwrap();
        let (x, y, w, sx) = (id("0:1.1"), id("0:1.2"), id("0:1.3.1"), id("1:1.1"));
        assert_eq!(pair_distance(&c, x, y, 6), Some(2));
        assert_eq!(pair_distance(&c, x, x, 6), Some(0));
        assert_eq!(pair_distance(&c, x, sx, 6), Some(1));
        assert_eq!(pair_distance(&c, w, sx, 6), Some(4));
        assert_eq!(pair_distance(&c, w, sx, 3), None);
        assert_eq!(total_distance(&c, &[x, y, sx], 6), Some(2 + 1 + 3));
        assert_eq!(total_distance(&c, &[x, x], 6), Some(0));
        let cache = BallCache::new(6);
        assert_eq!(cache.distance(&c, w, sx), Some(4));
    }

    #[test]
    fn walks_are_shortest() {
        let c = corpus();
        let id = |s: &str| c.idx_of(&s.parse().unwrap()).unwrap();
        let walks = shortest_walks(&c, id("0:1.2"), id("1:1.1"), 6, 16);
        assert_eq!(walks.len(), 1);
        assert_eq!(walks[0].len(), 3);
        assert_eq!(walks[0][0].0, Via::Up);
        assert!(matches!(walks[0][2].0, Via::Link { forward: true, .. }));
    }
}
