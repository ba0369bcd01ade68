//! Context buckets: every distinct path a query term occurs in, across the
//! whole collection, ranked by how many documents carry the path.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{PathHit, PathIndex};
use crate::path::ContextPath;
use crate::query::{ContextSpec, Query, QueryTerm};
use crate::store::Corpus;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextEntry {
    pub path: ContextPath,
    /// Documents containing the path (the displayed frequency).
    pub path_frequency: usize,
    /// Nodes on the path that satisfy the term.
    pub occurrence: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextBucket {
    pub term: usize,
    pub entries: Vec<ContextEntry>,
}

impl ContextBucket {
    pub fn contains(&self, path: &ContextPath) -> bool {
        self.entries.iter().any(|e| &e.path == path)
    }

    pub fn paths(&self) -> BTreeSet<ContextPath> {
        self.entries.iter().map(|e| e.path.clone()).collect()
    }
}

/// Probe the index the way the context form dictates: a name glob is used
/// as the hint directly, a full path is probed by its leaf and then
/// filtered, and a disjunction unions its members.
fn probe(corpus: &Corpus, index: &PathIndex, term: &QueryTerm, spec: &ContextSpec) -> Result<Vec<PathHit>> {
    Ok(match spec {
        ContextSpec::Empty => index.paths_for(corpus, &term.search, None)?,
        ContextSpec::NamePattern(p) => index.paths_for(corpus, &term.search, Some(p))?,
        ContextSpec::FullPath(full) => index
            .paths_for(corpus, &term.search, Some(full.leaf()))?
            .into_iter()
            .filter(|h| &h.path == full)
            .collect(),
        ContextSpec::Disjunction(ds) => {
            let mut merged: BTreeMap<ContextPath, PathHit> = BTreeMap::new();
            for d in ds {
                for h in probe(corpus, index, term, d)? {
                    merged.insert(h.path.clone(), h);
                }
            }
            merged.into_values().collect()
        }
    })
}

pub fn context_bucket(corpus: &Corpus, index: &PathIndex, query: &Query, term: usize) -> Result<ContextBucket> {
    let qt = &query.terms[term];
    let mut entries: Vec<ContextEntry> = probe(corpus, index, qt, &qt.context)?
        .into_iter()
        .map(|h| ContextEntry {
            path: h.path,
            path_frequency: h.doc_frequency,
            occurrence: h.occurrence,
        })
        .collect();
    entries.sort_by(|a, b| b.path_frequency.cmp(&a.path_frequency).then_with(|| a.path.cmp(&b.path)));
    Ok(ContextBucket { term, entries })
}

pub fn context_buckets(corpus: &Corpus, index: &PathIndex, query: &Query) -> Result<Vec<ContextBucket>> {
    (0..query.len()).map(|i| context_bucket(corpus, index, query, i)).collect()
}

/// Restrict term contexts. `selections[i] == None` leaves term `i` as it is.
/// Any earlier connection choice is dropped because it was made against
/// the old contexts.
pub fn apply_context_selection(
    query: &Query,
    buckets: &[ContextBucket],
    selections: &[Option<BTreeSet<ContextPath>>],
) -> Result<Query> {
    if selections.len() != query.len() || buckets.len() != query.len() {
        return Err(Error::InvalidArgument(format!(
            "expected {} context selections, got {}",
            query.len(),
            selections.len()
        )));
    }
    for (i, sel) in selections.iter().enumerate() {
        let Some(sel) = sel else { continue };
        if sel.is_empty() {
            return Err(Error::InvalidSelection {
                term: i,
                message: "no context selected".into(),
            });
        }
        if let Some(p) = sel.iter().find(|p| !buckets[i].contains(p)) {
            return Err(Error::InvalidSelection {
                term: i,
                message: format!("path {p} is not in this term's context bucket"),
            });
        }
    }
    let mut q = query.clone();
    q.refinement.selected_contexts = selections.to_vec();
    q.refinement.selected_connections = None;
    Ok(q)
}

/// Render buckets as aligned text, one block per term.
pub fn render_buckets(query: &Query, buckets: &[ContextBucket]) -> String {
    let width = buckets
        .iter()
        .flat_map(|b| &b.entries)
        .map(|e| e.path.as_str().len())
        .max()
        .unwrap_or(0)
        .max(4);
    let mut out = format!("  {:<width$}  {:>6}  {:>6}\n", "path", "docs", "occurs");
    for b in buckets {
        out.push_str(&format!("term {} {}\n", b.term + 1, query.terms[b.term]));
        if b.entries.is_empty() {
            out.push_str("  (no contexts)\n");
            continue;
        }
        for e in &b.entries {
            out.push_str(&format!(
                "  {:<width$}  {:>6}  {:>6}\n",
                e.path.as_str(),
                e.path_frequency,
                e.occurrence
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::par::ExecMode;
    use crate::store::IngestOptions;

    fn setup() -> (Corpus, PathIndex) {
        let docs = [
            "<c><n>red</n><p><q>red</q></p></c>",
            "<c><n>red</n></c>",
            "<c><p><q>blue</q></p></c>",
        ];
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
    fn buckets_sorted_by_path_frequency() {
        let (c, idx) = setup();
        let q = Query::parse("(*, red) AND (q, *) AND (nothing, *)").unwrap();
        let b = context_buckets(&c, &idx, &q).unwrap();
        let first: Vec<_> = b[0].entries.iter().map(|e| (e.path.as_str(), e.path_frequency, e.occurrence)).collect();
        assert_eq!(first, vec![("/c/n", 2, 2), ("/c/p/q", 2, 1)]);
        assert_eq!(b[1].entries.len(), 1);
        assert!(b[2].entries.is_empty());
        let full = Query::parse("(/c/p/q | n, red)").unwrap();
        assert_eq!(context_bucket(&c, &idx, &full, 0).unwrap().entries.len(), 2);
    }

    #[test]
    fn selection_validation() {
        let (c, idx) = setup();
        let q = Query::parse("(*, red) AND (q, *)").unwrap();
        let b = context_buckets(&c, &idx, &q).unwrap();
        let ok = apply_context_selection(
            &q,
            &b,
            &[Some([ContextPath::parse("/c/n").unwrap()].into()), None],
        )
        .unwrap();
        assert!(ok.context_filter(0).is_some());
        assert!(ok.context_filter(1).is_none());
        let wrong = apply_context_selection(&q, &b, &[None, Some([ContextPath::parse("/c/n").unwrap()].into())]);
        assert!(matches!(wrong, Err(Error::InvalidSelection { term: 1, .. })));
        assert!(render_buckets(&q, &b).contains("/c/p/q"));
    }
}
