//! Pairwise connections between matched contexts, derived from top-k tuples.
//!
//! A [`Connection`] is a step sequence between two context paths. Because
//! every step records where it arrives (tree steps by name, link steps by
//! full path) the path of each intermediate node is fixed, so a connection
//! can be checked against data instances directly.
//!
//! The summary for a query is the union of
//! * the shortest data walks between the nodes of every top-k tuple pair,
//!   lifted to path level, and
//! * the shortest walks in the dataguide graph between the located paths of
//!   those pairs (cached per endpoint pair).

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use dashmap::DashMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataguide::GuideSet;
use crate::error::{Error, Result};
use crate::graph::{Walk, shortest_walks};
use crate::index::PathIndex;
use crate::par::{self, ExecMode};
use crate::path::ContextPath;
use crate::query::Query;
use crate::store::{Corpus, EdgeKind, Via};
use crate::topk::TopKResult;

/// Upper bound on tied shortest walks kept per node or guide pair.
pub const WALK_LIMIT: usize = 256;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum Step {
    /// To the parent, named `name`.
    Up { name: String },
    /// To a child named `name`.
    Down { name: String },
    /// Along (`forward`) or against a link edge, arriving on `path`.
    Link {
        kind: EdgeKind,
        label: String,
        forward: bool,
        path: ContextPath,
    },
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::Up { name } => write!(f, "↑{name}"),
            Step::Down { name } => write!(f, "↓{name}"),
            Step::Link {
                label, forward: true, path, ..
            } => write!(f, "-{label}->{}", path.leaf()),
            Step::Link {
                label, forward: false, path, ..
            } => write!(f, "<-{label}-{}", path.leaf()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Connection {
    pub id: String,
    pub from: ContextPath,
    pub to: ContextPath,
    pub steps: Vec<Step>,
    pub length: usize,
}

impl Connection {
    /// Build and canonicalize a walk that starts on `from`. Returns the
    /// connection and whether it had to be reversed.
    pub fn canonical(from: ContextPath, steps: Vec<Step>) -> Result<(Connection, bool)> {
        let forward = Self::raw(from, steps)?;
        let backward = forward.reversed()?;
        let flip = match forward.from.cmp(&forward.to) {
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Equal => backward.key() < forward.key(),
        };
        Ok(if flip { (backward, true) } else { (forward, false) })
    }

    fn raw(from: ContextPath, steps: Vec<Step>) -> Result<Connection> {
        let paths = walk_paths(&from, &steps)?;
        let to = paths.last().cloned().unwrap_or_else(|| from.clone());
        let mut c = Connection {
            id: String::new(),
            length: steps.len(),
            from,
            to,
            steps,
        };
        c.id = c.compute_id();
        Ok(c)
    }

    fn key(&self) -> String {
        let mut s = format!("{}|{}", self.from, self.to);
        for st in &self.steps {
            match st {
                Step::Up { name } => s.push_str(&format!("|u:{name}")),
                Step::Down { name } => s.push_str(&format!("|d:{name}")),
                Step::Link {
                    kind,
                    label,
                    forward,
                    path,
                } => s.push_str(&format!("|l:{kind}:{label}:{}:{path}", if *forward { ">" } else { "<" })),
            }
        }
        s
    }

    fn compute_id(&self) -> String {
        let digest = Sha256::digest(self.key().as_bytes());
        digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
    }

    /// The same connection walked from the other end.
    pub fn reversed(&self) -> Result<Connection> {
        let paths = walk_paths(&self.from, &self.steps)?;
        // paths[k] is where step k arrives; the node before step k is
        // paths[k-1] or `from`.
        let before = |k: usize| if k == 0 { self.from.clone() } else { paths[k - 1].clone() };
        let mut steps = Vec::with_capacity(self.steps.len());
        for k in (0..self.steps.len()).rev() {
            let back_to = before(k);
            steps.push(match &self.steps[k] {
                Step::Up { .. } => Step::Down {
                    name: back_to.leaf().to_string(),
                },
                Step::Down { .. } => Step::Up {
                    name: back_to.leaf().to_string(),
                },
                Step::Link {
                    kind, label, forward, ..
                } => Step::Link {
                    kind: *kind,
                    label: label.clone(),
                    forward: !forward,
                    path: back_to,
                },
            });
        }
        Self::raw(self.to.clone(), steps)
    }

    /// Oriented for walking from `from` when `from_left` is true, else from `to`.
    pub fn oriented(&self, from_left: bool) -> Result<Connection> {
        if from_left { Ok(self.clone()) } else { self.reversed() }
    }

    /// Human-readable form such as `percentage ↑item ↓trade_country`.
    pub fn render(&self) -> String {
        let mut s = self.from.leaf().to_string();
        if self.steps.is_empty() {
            s.push_str(" (same node)");
        }
        for st in &self.steps {
            s.push(' ');
            s.push_str(&st.to_string());
        }
        s
    }

    /// Paths visited after each step.
    pub fn visited_paths(&self) -> Result<Vec<ContextPath>> {
        walk_paths(&self.from, &self.steps)
    }

    pub fn uses_links(&self) -> bool {
        self.steps.iter().any(|s| matches!(s, Step::Link { .. }))
    }
}

fn walk_paths(from: &ContextPath, steps: &[Step]) -> Result<Vec<ContextPath>> {
    let mut cur = from.clone();
    let mut out = Vec::with_capacity(steps.len());
    for st in steps {
        cur = match st {
            Step::Up { name } => {
                let p = cur
                    .parent()
                    .ok_or_else(|| Error::InvalidPath(format!("cannot step up from root {cur}")))?;
                if p.leaf() != name {
                    return Err(Error::InvalidPath(format!("parent of {cur} is not `{name}`")));
                }
                p
            }
            Step::Down { name } => cur.child(name),
            Step::Link { path, .. } => path.clone(),
        };
        out.push(cur.clone());
    }
    Ok(out)
}

/// Nodes reachable from `start` by following `conn` from its `from` end.
/// Tree steps must land on the named parent or children; link steps must
/// match kind, label, direction and arrival path.
pub fn reach(corpus: &Corpus, start: u32, conn: &Connection) -> BTreeSet<u32> {
    if corpus.node_at(start).context != conn.from {
        return BTreeSet::new();
    }
    let mut cur = BTreeSet::from([start]);
    for st in &conn.steps {
        let mut next = BTreeSet::new();
        for &v in &cur {
            match st {
                Step::Up { name } => {
                    if let Some(p) = corpus.parent_idx(v) {
                        if corpus.node_at(p).name == *name {
                            next.insert(p);
                        }
                    }
                }
                Step::Down { name } => {
                    next.extend(corpus.children_idx(v).iter().copied().filter(|c| corpus.node_at(*c).name == *name));
                }
                Step::Link {
                    kind,
                    label,
                    forward,
                    path,
                } => {
                    for &e in corpus.links_of(v) {
                        let (k, l, from, to) = corpus.link_parts(e);
                        if k != *kind || l != label {
                            continue;
                        }
                        let other = match (*forward, from == v, to == v) {
                            (true, true, _) => to,
                            (false, _, true) => from,
                            _ => continue,
                        };
                        if corpus.node_at(other).context == *path {
                            next.insert(other);
                        }
                    }
                }
            }
        }
        if next.is_empty() {
            return next;
        }
        cur = next;
    }
    cur
}

/// Lift a data walk starting at `start` to a path-level step list.
pub fn lift_walk(corpus: &Corpus, walk: &Walk) -> Vec<Step> {
    walk.iter()
        .map(|(via, node)| {
            let n = corpus.node_at(*node);
            match via {
                Via::Up => Step::Up { name: n.name.clone() },
                Via::Down => Step::Down { name: n.name.clone() },
                Via::Link { edge, forward } => {
                    let (kind, label, _, _) = corpus.link_parts(*edge);
                    Step::Link {
                        kind,
                        label: label.to_string(),
                        forward: *forward,
                        path: n.context.clone(),
                    }
                }
            }
        })
        .collect()
}

/// A term pair a connection was found for; `left < right`, and
/// `left_at_from` tells which term sits on the connection's `from` end.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PairUse {
    pub left: usize,
    pub right: usize,
    pub left_at_from: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub connection: Connection,
    pub rendering: String,
    pub uses: BTreeSet<PairUse>,
    /// Indices of top-k tuples in which the connection is realized.
    pub provenance: BTreeSet<usize>,
    pub from_guides: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectionSummary {
    pub entries: BTreeMap<String, SummaryEntry>,
}

impl ConnectionSummary {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Connection ids per unordered term pair.
    pub fn groups(&self) -> BTreeMap<(usize, usize), Vec<String>> {
        let mut out: BTreeMap<(usize, usize), BTreeSet<String>> = BTreeMap::new();
        for (id, e) in &self.entries {
            for u in &e.uses {
                out.entry((u.left, u.right)).or_default().insert(id.clone());
            }
        }
        out.into_iter().map(|(k, v)| (k, v.into_iter().collect())).collect()
    }

    fn add(&mut self, conn: Connection, use_: PairUse, tuple: Option<usize>, guide: bool) {
        let e = self.entries.entry(conn.id.clone()).or_insert_with(|| SummaryEntry {
            rendering: conn.render(),
            connection: conn,
            uses: BTreeSet::new(),
            provenance: BTreeSet::new(),
            from_guides: false,
        });
        e.uses.insert(use_);
        e.provenance.extend(tuple);
        e.from_guides |= guide;
    }

    pub fn render(&self, query: &Query) -> String {
        let mut out = String::new();
        for ((l, r), ids) in self.groups() {
            out.push_str(&format!("terms {} - {}: {} | {}\n", l + 1, r + 1, query.terms[l], query.terms[r]));
            for id in ids {
                let e = &self.entries[&id];
                let origin = match (e.provenance.is_empty(), e.from_guides) {
                    (false, true) => "top-k+guides",
                    (false, false) => "top-k",
                    _ => "guides",
                };
                out.push_str(&format!(
                    "  {id}  len {}  {:<12} {}\n",
                    e.connection.length, origin, e.rendering
                ));
            }
        }
        if out.is_empty() {
            out.push_str("(no connections)\n");
        }
        out
    }
}

/// Guide-level connections per (from path, to path), oriented from the
/// first path. Entries are deterministic, so concurrent writers agree.
#[derive(Debug, Default)]
pub struct ConnectionCache {
    map: DashMap<(ContextPath, ContextPath), Arc<Vec<Vec<Step>>>>,
}

impl ConnectionCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clear(&self) {
        self.map.clear();
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn guide_walks(&self, guides: &GuideSet, a: &ContextPath, b: &ContextPath) -> Arc<Vec<Vec<Step>>> {
        let key = (a.clone(), b.clone());
        if let Some(v) = self.map.get(&key) {
            return v.clone();
        }
        let walks = Arc::new(guide_shortest_walks(guides, a, b, WALK_LIMIT));
        self.map.insert(key, walks.clone());
        walks
    }
}

type GNode = (usize, usize);

fn guide_neighbors(guides: &GuideSet, (g, n): GNode, mut f: impl FnMut(GNode, Step)) {
    let node = guides.guide_node(g, n);
    if let Some(p) = node.parent {
        let name = guides.guide_node(g, p).path.leaf().to_string();
        f((g, p), Step::Up { name });
    }
    for &c in &node.children {
        let name = guides.guide_node(g, c).path.leaf().to_string();
        f((g, c), Step::Down { name });
    }
    for &li in guides.links_at(g, n) {
        let l = &guides.links[li];
        let from = guides.link_node(&l.from);
        let to = guides.link_node(&l.to);
        if from == (g, n) {
            f(
                to,
                Step::Link {
                    kind: l.kind,
                    label: l.label.clone(),
                    forward: true,
                    path: l.to.path.clone(),
                },
            );
        }
        if to == (g, n) {
            f(
                from,
                Step::Link {
                    kind: l.kind,
                    label: l.label.clone(),
                    forward: false,
                    path: l.from.path.clone(),
                },
            );
        }
    }
}

/// All tied shortest step sequences in the guide graph from any location
/// of `a` to any location of `b`.
pub fn guide_shortest_walks(guides: &GuideSet, a: &ContextPath, b: &ContextPath, limit: usize) -> Vec<Vec<Step>> {
    let sources = guides.locate(a);
    let targets: BTreeSet<GNode> = guides.locate(b).into_iter().collect();
    if sources.is_empty() || targets.is_empty() {
        return Vec::new();
    }
    let mut dist: HashMap<GNode, usize> = HashMap::new();
    let mut queue = VecDeque::new();
    for s in &sources {
        dist.insert(*s, 0);
        queue.push_back(*s);
    }
    let mut found: Option<usize> = sources.iter().any(|s| targets.contains(s)).then_some(0);
    while let Some(v) = queue.pop_front() {
        let d = dist[&v];
        if found.is_some_and(|f| d >= f) {
            continue;
        }
        guide_neighbors(guides, v, |u, _| {
            if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(u) {
                e.insert(d + 1);
                queue.push_back(u);
                if targets.contains(&u) && found.is_none() {
                    found = Some(d + 1);
                }
            }
        });
    }
    let Some(best) = found else { return Vec::new() };

    let mut out: BTreeSet<Vec<Step>> = BTreeSet::new();
    let mut suffix: Vec<Step> = Vec::new();
    for t in targets.iter().filter(|t| dist.get(t) == Some(&best)) {
        back_guides(guides, &dist, *t, &mut suffix, &mut out, limit);
    }
    out.into_iter().collect()
}

fn back_guides(
    guides: &GuideSet,
    dist: &HashMap<GNode, usize>,
    v: GNode,
    suffix: &mut Vec<Step>,
    out: &mut BTreeSet<Vec<Step>>,
    limit: usize,
) {
    if out.len() >= limit {
        return;
    }
    let dv = dist[&v];
    if dv == 0 {
        out.insert(suffix.iter().rev().cloned().collect());
        return;
    }
    let mut preds = Vec::new();
    guide_neighbors(guides, v, |u, _| {
        if dist.get(&u) == Some(&(dv - 1)) {
            preds.push(u);
        }
    });
    preds.sort();
    preds.dedup();
    for u in preds {
        // the step from u to v
        let mut steps = Vec::new();
        guide_neighbors(guides, u, |w, st| {
            if w == v {
                steps.push(st);
            }
        });
        steps.sort();
        steps.dedup();
        for st in steps {
            suffix.push(st);
            back_guides(guides, dist, u, suffix, out, limit);
            suffix.pop();
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SummaryOptions {
    pub radius_cap: u32,
    pub mode: ExecMode,
}

impl Default for SummaryOptions {
    fn default() -> Self {
        SummaryOptions {
            radius_cap: crate::graph::DEFAULT_RADIUS_CAP,
            mode: ExecMode::default(),
        }
    }
}

/// Pairwise connections for the tuples of `topk`.
pub fn summarize_connections(
    corpus: &Corpus,
    guides: &GuideSet,
    cache: &ConnectionCache,
    topk: &TopKResult,
    opts: &SummaryOptions,
) -> Result<ConnectionSummary> {
    let mut jobs = Vec::new();
    for (ti, t) in topk.tuples.iter().enumerate() {
        let m = t.tuple.nodes.len();
        for l in 0..m {
            for r in l + 1..m {
                jobs.push((ti, l, r));
            }
        }
    }
    type Found = Vec<(Connection, PairUse, Option<usize>, bool)>;
    let found: Vec<Result<Found>> = par::map(opts.mode, &jobs, |&(ti, l, r)| {
        let t = &topk.tuples[ti].tuple;
        let a = corpus.idx_of(&t.nodes[l]).ok_or_else(|| Error::NodeNotFound(t.nodes[l].clone()))?;
        let b = corpus.idx_of(&t.nodes[r]).ok_or_else(|| Error::NodeNotFound(t.nodes[r].clone()))?;
        let mut out = Vec::new();
        for walk in shortest_walks(corpus, a, b, opts.radius_cap, WALK_LIMIT) {
            let (c, flipped) = Connection::canonical(t.paths[l].clone(), lift_walk(corpus, &walk))?;
            out.push((c, use_of(l, r, flipped), Some(ti), false));
        }
        for steps in cache.guide_walks(guides, &t.paths[l], &t.paths[r]).iter() {
            let (c, flipped) = Connection::canonical(t.paths[l].clone(), steps.clone())?;
            out.push((c, use_of(l, r, flipped), None, true));
        }
        Ok(out)
    });

    let mut summary = ConnectionSummary::default();
    for batch in found {
        for (c, u, tuple, guide) in batch? {
            summary.add(c, u, tuple, guide);
        }
    }
    // A guide walk identical to an instance walk is realized in that tuple too.
    for e in summary.entries.values_mut() {
        for (ti, t) in topk.tuples.iter().enumerate() {
            if e.provenance.contains(&ti) {
                continue;
            }
            let hit = e.uses.iter().any(|u| {
                let (l, r) = (&t.tuple.nodes[u.left], &t.tuple.nodes[u.right]);
                let (start, end) = if u.left_at_from { (l, r) } else { (r, l) };
                match (corpus.idx_of(start), corpus.idx_of(end)) {
                    (Some(s), Some(x)) => reach(corpus, s, &e.connection).contains(&x),
                    _ => false,
                }
            });
            if hit {
                e.provenance.insert(ti);
            }
        }
    }
    Ok(summary)
}

fn use_of(l: usize, r: usize, flipped: bool) -> PairUse {
    PairUse {
        left: l,
        right: r,
        left_at_from: !flipped,
    }
}

/// A chosen connection together with the term pairs it may join.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChosenConnection {
    pub connection: Connection,
    pub uses: BTreeSet<PairUse>,
}

pub fn apply_connection_selection(query: &Query, summary: &ConnectionSummary, chosen: &[String]) -> Result<Query> {
    let mut picked = BTreeMap::new();
    for id in chosen {
        let e = summary
            .entries
            .get(id)
            .ok_or_else(|| Error::UnknownConnection(id.clone()))?;
        picked.insert(
            id.clone(),
            ChosenConnection {
                connection: e.connection.clone(),
                uses: e.uses.clone(),
            },
        );
    }
    let mut q = query.clone();
    q.refinement.selected_connections = Some(picked);
    Ok(q)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FalsePositiveReport {
    pub total: usize,
    pub false_positives: Vec<String>,
}

/// Summary connections that join no pair of satisfying nodes anywhere in
/// the collection (under the query's current context selection).
pub fn false_positives(
    corpus: &Corpus,
    index: &PathIndex,
    query: &Query,
    summary: &ConnectionSummary,
) -> Result<FalsePositiveReport> {
    let sets = (0..query.len())
        .map(|i| {
            index
                .scan_term(corpus, &query.terms[i], query.context_filter(i))
                .map(|s| s.in_document_order())
        })
        .collect::<Result<Vec<_>>>()?;
    let members: Vec<BTreeSet<u32>> = sets.iter().map(|s| s.iter().copied().collect()).collect();
    let mut report = FalsePositiveReport {
        total: summary.len(),
        false_positives: Vec::new(),
    };
    for (id, e) in &summary.entries {
        let realized = e.uses.iter().any(|u| {
            let (from_term, to_term) = if u.left_at_from { (u.left, u.right) } else { (u.right, u.left) };
            sets[from_term]
                .iter()
                .any(|&s| reach(corpus, s, &e.connection).iter().any(|x| members[to_term].contains(x)))
        });
        if !realized {
            report.false_positives.push(id.clone());
        }
    }
    Ok(report)
}
