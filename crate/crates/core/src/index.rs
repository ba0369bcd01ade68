//! Full-text index from keywords (text words and tag-name words) to the
//! distinct context paths and nodes that contain them.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, ExecMode};
use crate::path::{ContextPath, glob_match};
use crate::query::{QueryTerm, node_fields};
use crate::store::Corpus;
use crate::text::{ContentScorer, NormalizedTf, SearchExpr};

pub const INDEX_FILE: &str = "index.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathHit {
    pub path: ContextPath,
    /// Documents containing the path, irrespective of the keyword.
    pub doc_frequency: usize,
    /// Nodes on the path that satisfy the probe.
    pub occurrence: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TermPostings {
    /// (path, occurrence) sorted by path.
    paths: Vec<(ContextPath, usize)>,
    /// (node index, single-term score) by descending score, then document order.
    nodes: Vec<(u32, f64)>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexStats {
    pub terms: usize,
    pub path_postings: usize,
    pub node_postings: usize,
    pub longest_posting: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PathIndex {
    node_count: usize,
    terms: BTreeMap<String, TermPostings>,
    #[serde(skip, default = "default_scorer")]
    scorer: Arc<dyn ContentScorer>,
}

fn default_scorer() -> Arc<dyn ContentScorer> {
    Arc::new(NormalizedTf)
}

/// Nodes satisfying an expression, ranked for sorted access, with random
/// access to any node's score.
#[derive(Clone, Debug, Default)]
pub struct NodeStream {
    entries: Vec<(u32, f64)>,
    scores: HashMap<u32, f64>,
}

impl NodeStream {
    fn from_unsorted(mut entries: Vec<(u32, f64)>) -> Self {
        entries.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0)));
        let scores = entries.iter().copied().collect();
        NodeStream { entries, scores }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sorted access.
    pub fn get(&self, pos: usize) -> Option<(u32, f64)> {
        self.entries.get(pos).copied()
    }

    /// Random access.
    pub fn score_of(&self, idx: u32) -> Option<f64> {
        self.scores.get(&idx).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.entries.iter().copied()
    }

    /// Node indices in document order.
    pub fn in_document_order(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.entries.iter().map(|e| e.0).collect();
        v.sort_unstable();
        v
    }
}

impl PathIndex {
    pub fn build(corpus: &Corpus, mode: ExecMode) -> (PathIndex, IndexStats) {
        Self::build_with(corpus, mode, default_scorer())
    }

    pub fn build_with(corpus: &Corpus, mode: ExecMode, scorer: Arc<dyn ContentScorer>) -> (PathIndex, IndexStats) {
        let idxs: Vec<u32> = (0..corpus.len() as u32).collect();
        let per_node = par::map(mode, &idxs, |&idx| {
            let node = corpus.node_at(idx);
            let [text, name] = node_fields(node);
            let fields: [&[String]; 2] = [&text, &name];
            let words: BTreeSet<&String> = text.iter().chain(name.iter()).collect();
            words
                .into_iter()
                .map(|w| {
                    let score = SearchExpr::Term(w.clone()).score(&fields, scorer.as_ref()).unwrap_or(0.0);
                    (w.clone(), score)
                })
                .collect::<Vec<_>>()
        });

        let mut nodes: BTreeMap<String, Vec<(u32, f64)>> = BTreeMap::new();
        let mut paths: BTreeMap<String, BTreeMap<ContextPath, usize>> = BTreeMap::new();
        for (idx, words) in per_node.into_iter().enumerate() {
            let ctx = &corpus.node_at(idx as u32).context;
            for (w, score) in words {
                *paths.entry(w.clone()).or_default().entry(ctx.clone()).or_default() += 1;
                nodes.entry(w).or_default().push((idx as u32, score));
            }
        }
        let mut terms = BTreeMap::new();
        for (w, list) in nodes {
            let stream = NodeStream::from_unsorted(list);
            let p = paths.remove(&w).unwrap_or_default().into_iter().collect();
            terms.insert(
                w,
                TermPostings {
                    paths: p,
                    nodes: stream.entries,
                },
            );
        }
        let index = PathIndex {
            node_count: corpus.len(),
            terms,
            scorer,
        };
        let stats = index.stats();
        (index, stats)
    }

    pub fn stats(&self) -> IndexStats {
        IndexStats {
            terms: self.terms.len(),
            path_postings: self.terms.values().map(|t| t.paths.len()).sum(),
            node_postings: self.terms.values().map(|t| t.nodes.len()).sum(),
            longest_posting: self.terms.values().map(|t| t.nodes.len()).max().unwrap_or(0),
        }
    }

    pub fn scorer(&self) -> &dyn ContentScorer {
        self.scorer.as_ref()
    }

    pub fn with_scorer(mut self, scorer: Arc<dyn ContentScorer>) -> Self {
        self.scorer = scorer;
        self
    }

    /// Raw path posting for one keyword, as stored.
    pub fn posting(&self, corpus: &Corpus, term: &str) -> Vec<PathHit> {
        let key = term.to_lowercase();
        self.terms
            .get(&key)
            .map(|t| {
                t.paths
                    .iter()
                    .map(|(p, occ)| PathHit {
                        path: p.clone(),
                        doc_frequency: corpus.path_stat(p).map(|s| s.doc_frequency).unwrap_or(0),
                        occurrence: *occ,
                    })
                    .collect()
            })
            .unwrap_or_default()
    }

    fn candidate_nodes(&self, e: &SearchExpr) -> Option<BTreeSet<u32>> {
        match e {
            SearchExpr::Term(t) => Some(
                self.terms
                    .get(t)
                    .map(|p| p.nodes.iter().map(|n| n.0).collect())
                    .unwrap_or_default(),
            ),
            SearchExpr::Phrase(ts) => intersect(ts.iter().map(|t| self.candidate_nodes(&SearchExpr::Term(t.clone())))),
            SearchExpr::And(xs) => intersect(xs.iter().map(|x| self.candidate_nodes(x))),
            SearchExpr::Or(xs) => union(xs.iter().map(|x| self.candidate_nodes(x))),
            SearchExpr::Not(_) | SearchExpr::MatchAll => None,
        }
    }

    fn candidate_paths(&self, e: &SearchExpr) -> Option<BTreeSet<ContextPath>> {
        match e {
            SearchExpr::Term(t) => Some(
                self.terms
                    .get(t)
                    .map(|p| p.paths.iter().map(|x| x.0.clone()).collect())
                    .unwrap_or_default(),
            ),
            SearchExpr::Phrase(ts) => intersect(ts.iter().map(|t| self.candidate_paths(&SearchExpr::Term(t.clone())))),
            SearchExpr::And(xs) => intersect(xs.iter().map(|x| self.candidate_paths(x))),
            SearchExpr::Or(xs) => union(xs.iter().map(|x| self.candidate_paths(x))),
            SearchExpr::Not(_) | SearchExpr::MatchAll => None,
        }
    }

    fn check_corpus(&self, corpus: &Corpus) -> Result<()> {
        if corpus.len() != self.node_count {
            return Err(Error::Internal(format!(
                "index covers {} nodes but the corpus has {}",
                self.node_count,
                corpus.len()
            )));
        }
        Ok(())
    }

    /// Nodes whose path passes `keep` and that satisfy `expr`.
    pub fn scan_where(
        &self,
        corpus: &Corpus,
        expr: &SearchExpr,
        keep: &dyn Fn(&ContextPath) -> bool,
    ) -> Result<NodeStream> {
        self.check_corpus(corpus)?;
        let eval = |idx: u32| -> Option<(u32, f64)> {
            let node = corpus.node_at(idx);
            let [text, name] = node_fields(node);
            expr.score(&[&text, &name], self.scorer()).map(|s| (idx, s))
        };
        let mut out = Vec::new();
        match self.candidate_nodes(expr) {
            Some(cands) => {
                for idx in cands {
                    if keep(&corpus.node_at(idx).context) {
                        out.extend(eval(idx));
                    }
                }
            }
            None => {
                let allowed = self.candidate_paths(expr);
                for path in corpus.paths().keys() {
                    if allowed.as_ref().is_some_and(|a| !a.contains(path)) || !keep(path) {
                        continue;
                    }
                    for &idx in corpus.nodes_on_path(path) {
                        out.extend(eval(idx));
                    }
                }
            }
        }
        Ok(NodeStream::from_unsorted(out))
    }

    /// Nodes satisfying `expr` whose context lies in `filter` (when given).
    pub fn scan_nodes(
        &self,
        corpus: &Corpus,
        expr: &SearchExpr,
        filter: Option<&BTreeSet<ContextPath>>,
    ) -> Result<NodeStream> {
        self.scan_where(corpus, expr, &|p| filter.is_none_or(|f| f.contains(p)))
    }

    /// Nodes satisfying a full query term, optionally restricted to `filter`.
    pub fn scan_term(
        &self,
        corpus: &Corpus,
        term: &QueryTerm,
        filter: Option<&BTreeSet<ContextPath>>,
    ) -> Result<NodeStream> {
        self.scan_where(corpus, &term.search, &|p| {
            term.context.matches_path(p) && filter.is_none_or(|f| f.contains(p))
        })
    }

    /// Distinct paths carrying nodes that satisfy `expr`, restricted to
    /// paths whose leaf matches the glob `name_hint`. Sorted by path.
    pub fn paths_for(&self, corpus: &Corpus, expr: &SearchExpr, name_hint: Option<&str>) -> Result<Vec<PathHit>> {
        if expr.is_match_all() && name_hint.is_none_or(|h| h.trim().is_empty()) {
            return Err(Error::InvalidQuery {
                position: 0,
                message: "a path probe needs a search expression or a name hint".into(),
            });
        }
        let stream = self.scan_where(corpus, expr, &|p| name_hint.is_none_or(|h| glob_match(h, p.leaf())))?;
        Ok(group_by_path(corpus, &stream))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(INDEX_FILE), serde_json::to_vec(self)?)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<PathIndex> {
        let file = dir.join(INDEX_FILE);
        if !file.exists() {
            return Err(Error::MissingArtifact(dir.to_path_buf(), INDEX_FILE));
        }
        Ok(serde_json::from_slice(&fs::read(file)?)?)
    }
}

/// Occurrence counts per path of a node stream.
pub fn group_by_path(corpus: &Corpus, stream: &NodeStream) -> Vec<PathHit> {
    let mut counts: BTreeMap<&ContextPath, usize> = BTreeMap::new();
    for (idx, _) in stream.iter() {
        *counts.entry(&corpus.node_at(idx).context).or_default() += 1;
    }
    counts
        .into_iter()
        .map(|(p, occurrence)| PathHit {
            path: p.clone(),
            doc_frequency: corpus.path_stat(p).map(|s| s.doc_frequency).unwrap_or(0),
            occurrence,
        })
        .collect()
}

fn intersect<T: Ord + Clone>(sets: impl Iterator<Item = Option<BTreeSet<T>>>) -> Option<BTreeSet<T>> {
    let mut acc: Option<BTreeSet<T>> = None;
    for s in sets.flatten() {
        acc = Some(match acc {
            None => s,
            Some(a) => a.intersection(&s).cloned().collect(),
        });
    }
    acc
}

fn union<T: Ord>(sets: impl Iterator<Item = Option<BTreeSet<T>>>) -> Option<BTreeSet<T>> {
    let mut acc = BTreeSet::new();
    for s in sets {
        acc.extend(s?);
    }
    Some(acc)
}
