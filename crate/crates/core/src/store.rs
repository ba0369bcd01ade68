//! The corpus store: XML documents shredded into a data graph of
//! Dewey-identified element and attribute nodes, plus the non-tree link
//! edges (IDREF, XLink, value-based) declared through [`LinkSpec`]s.
//!
//! Nodes are kept in one vector sorted by [`DeweyId`], which is document
//! order across the whole corpus. Parent/child edges are implicit in that
//! layout; link edges live in a separate edge list with an adjacency table.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dewey::DeweyId;
use crate::error::{Error, Result};
use crate::par::{self, ExecMode};
use crate::path::{ContextPath, canonical_name};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CORPUS_FILE: &str = "corpus.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Element,
    Attribute,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataNode {
    pub id: DeweyId,
    pub kind: NodeKind,
    /// Canonical name; attributes carry a leading `@`.
    pub name: String,
    pub context: ContextPath,
    /// The node's own text: its direct text children joined by single
    /// spaces (attribute value for attributes).
    pub text: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    ParentChild,
    Idref,
    Xlink,
    ValueBased,
}

impl EdgeKind {
    pub const ALL: [EdgeKind; 4] = [
        EdgeKind::ParentChild,
        EdgeKind::Idref,
        EdgeKind::Xlink,
        EdgeKind::ValueBased,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::ParentChild => "parent_child",
            EdgeKind::Idref => "idref",
            EdgeKind::Xlink => "xlink",
            EdgeKind::ValueBased => "value_based",
        }
    }
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub kind: EdgeKind,
    pub from: DeweyId,
    pub to: DeweyId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    Idref,
    Xlink,
    ValueBased,
}

impl From<LinkKind> for EdgeKind {
    fn from(k: LinkKind) -> Self {
        match k {
            LinkKind::Idref => EdgeKind::Idref,
            LinkKind::Xlink => EdgeKind::Xlink,
            LinkKind::ValueBased => EdgeKind::ValueBased,
        }
    }
}

/// Declares how to materialize one family of non-tree edges.
///
/// The match value of a selected node is the named attribute's value when
/// `*_attr` is set, otherwise the node's own trimmed text.
/// * `idref`: source values are whitespace-separated IDREFS matched against
///   target values.
/// * `xlink`: source values are `[document]#fragment` pointers; the fragment
///   is matched against target values, restricted to the named document
///   when one is given.
/// * `value_based`: plain value equality.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub kind: LinkKind,
    pub source: ContextPath,
    pub target: ContextPath,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_attr: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_attr: Option<String>,
    pub label: String,
    #[serde(default)]
    pub case_fold: bool,
}

impl LinkSpec {
    pub fn value_based(source: &str, target: &str, label: &str) -> Result<Self> {
        Ok(LinkSpec {
            kind: LinkKind::ValueBased,
            source: ContextPath::parse(source)?,
            target: ContextPath::parse(target)?,
            source_attr: None,
            target_attr: None,
            label: label.to_string(),
            case_fold: false,
        })
    }

    /// Read a JSON array of link specs.
    pub fn load_file(path: &Path) -> Result<Vec<LinkSpec>> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathStat {
    /// Number of documents containing the path at least once.
    pub doc_frequency: usize,
    /// Number of nodes whose context is the path.
    pub node_count: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentMeta {
    pub ordinal: u32,
    pub name: String,
    pub node_count: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedDocument {
    pub name: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkReport {
    pub label: String,
    pub kind: LinkKind,
    pub edges: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub documents: usize,
    pub nodes: usize,
    pub elements: usize,
    pub attributes: usize,
    pub edges: BTreeMap<EdgeKind, usize>,
    pub distinct_paths: usize,
    pub links: Vec<LinkReport>,
    pub rejected: Vec<RejectedDocument>,
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "documents: {}", self.documents)?;
        writeln!(f, "nodes: {}", self.nodes)?;
        writeln!(f, "elements: {}", self.elements)?;
        writeln!(f, "attributes: {}", self.attributes)?;
        for kind in EdgeKind::ALL {
            writeln!(f, "edges.{}: {}", kind, self.edges.get(&kind).copied().unwrap_or(0))?;
        }
        writeln!(f, "distinct_paths: {}", self.distinct_paths)?;
        for link in &self.links {
            let note = if link.edges == 0 { " (no matches)" } else { "" };
            writeln!(f, "link.{}: {}{}", link.label, link.edges, note)?;
        }
        for r in &self.rejected {
            writeln!(f, "rejected: {}: {}", r.name, r.message)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default)]
pub struct IngestOptions {
    pub mode: ExecMode,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TextFragment {
    /// Number of element children that precede this fragment.
    before: u32,
    text: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct NodeRecord {
    node: DataNode,
    parent: Option<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    fragments: Vec<TextFragment>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct LinkEdge {
    kind: EdgeKind,
    from: u32,
    to: u32,
    label: String,
}

/// How one node is reached from another in the data graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Via {
    /// Moved to the parent.
    Up,
    /// Moved to a child.
    Down,
    /// Followed link edge `edge`, along (`forward`) or against its direction.
    Link { edge: u32, forward: bool },
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    format: u32,
    documents: Vec<DocumentMeta>,
    links: Vec<LinkSpec>,
    rejected: Vec<RejectedDocument>,
}

#[derive(Serialize, Deserialize)]
struct CorpusBody {
    nodes: Vec<NodeRecord>,
    links: Vec<LinkEdge>,
}

/// Immutable after construction; share behind an `Arc`.
#[derive(Debug)]
pub struct Corpus {
    docs: Vec<DocumentMeta>,
    rejected: Vec<RejectedDocument>,
    nodes: Vec<NodeRecord>,
    links: Vec<LinkEdge>,
    link_specs: Vec<LinkSpec>,
    // derived
    children: Vec<Vec<u32>>,
    link_adj: Vec<Vec<u32>>,
    doc_ranges: Vec<(u32, u32)>,
    paths: BTreeMap<ContextPath, PathStat>,
    by_path: HashMap<ContextPath, Vec<u32>>,
    by_name: HashMap<String, Vec<u32>>,
}

struct ParsedDoc {
    nodes: Vec<NodeRecord>,
}

fn parse_document(name: &str, ordinal: u32, bytes: &[u8]) -> Result<ParsedDoc> {
    let malformed = |line: u32, column: u32, message: String| Error::MalformedXml {
        doc: name.to_string(),
        line,
        column,
        message,
    };
    let text = std::str::from_utf8(bytes).map_err(|e| {
        malformed(0, 0, format!("invalid UTF-8 after byte {}", e.valid_up_to()))
    })?;
    let doc = roxmltree::Document::parse(text).map_err(|e| {
        let pos = e.pos();
        malformed(pos.row, pos.col, e.to_string())
    })?;

    let mut nodes = Vec::new();
    let root = doc.root_element();
    let root_path = ContextPath::root(root.tag_name().name());
    push_element(&mut nodes, root, DeweyId::new(ordinal, vec![1]), root_path, None);
    Ok(ParsedDoc { nodes })
}

fn push_element(
    out: &mut Vec<NodeRecord>,
    elem: roxmltree::Node<'_, '_>,
    id: DeweyId,
    context: ContextPath,
    parent: Option<u32>,
) {
    let me = out.len() as u32;
    let name = context.leaf().to_string();
    out.push(NodeRecord {
        node: DataNode {
            id: id.clone(),
            kind: NodeKind::Element,
            name,
            context: context.clone(),
            text: String::new(),
        },
        parent,
        fragments: Vec::new(),
    });

    let mut ordinal = 0u32;
    for attr in elem.attributes() {
        ordinal += 1;
        let attr_name = canonical_name(&format!("@{}", attr.name()));
        let ctx = context.child(&attr_name);
        out.push(NodeRecord {
            node: DataNode {
                id: id.child(ordinal),
                kind: NodeKind::Attribute,
                name: attr_name,
                context: ctx,
                text: attr.value().trim().to_string(),
            },
            parent: Some(me),
            fragments: Vec::new(),
        });
    }

    let mut fragments = Vec::new();
    let mut elements_seen = 0u32;
    for child in elem.children() {
        if child.is_element() {
            ordinal += 1;
            elements_seen += 1;
            let ctx = context.child(child.tag_name().name());
            push_element(out, child, id.child(ordinal), ctx, Some(me));
        } else if child.is_text() {
            let t = child.text().unwrap_or("").trim();
            if !t.is_empty() {
                fragments.push(TextFragment {
                    before: elements_seen,
                    text: t.to_string(),
                });
            }
        }
    }
    let record = &mut out[me as usize];
    record.node.text = join_fragments(fragments.iter().map(|f| f.text.as_str()));
    record.fragments = fragments;
}

fn join_fragments<'a>(parts: impl Iterator<Item = &'a str>) -> String {
    let mut out = String::new();
    for p in parts {
        let p = p.trim();
        if p.is_empty() {
            continue;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(p);
    }
    out
}

impl Corpus {
    /// Shred `documents` (name, bytes) in the given order. Document ordinals
    /// follow input order over the accepted documents. Malformed documents
    /// are reported in the stats and skipped; a repeated name is an error.
    pub fn ingest<I>(documents: I, links: &[LinkSpec], opts: &IngestOptions) -> Result<(Corpus, CorpusStats)>
    where
        I: IntoIterator<Item = (String, Vec<u8>)>,
    {
        let documents: Vec<(String, Vec<u8>)> = documents.into_iter().collect();
        let mut seen = BTreeSet::new();
        for (name, _) in &documents {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateDocument(name.clone()));
            }
        }

        // Parse with a provisional ordinal of 0, then renumber accepted
        // documents densely in input order.
        let parsed = par::map(opts.mode, &documents, |(name, bytes)| parse_document(name, 0, bytes));
        let mut docs = Vec::new();
        let mut rejected = Vec::new();
        let mut nodes: Vec<NodeRecord> = Vec::new();
        for ((name, _), res) in documents.iter().zip(parsed) {
            match res {
                Ok(doc) => {
                    let ordinal = docs.len() as u32;
                    let offset = nodes.len() as u32;
                    docs.push(DocumentMeta {
                        ordinal,
                        name: name.clone(),
                        node_count: doc.nodes.len(),
                    });
                    for mut rec in doc.nodes {
                        rec.node.id.doc = ordinal;
                        rec.parent = rec.parent.map(|p| p + offset);
                        nodes.push(rec);
                    }
                }
                Err(err) => {
                    log::warn!("rejecting {name}: {err}");
                    rejected.push(RejectedDocument {
                        name: name.clone(),
                        message: err.to_string(),
                    });
                }
            }
        }

        let mut corpus = Corpus::assemble(docs, rejected, nodes, Vec::new(), links.to_vec());
        let (edges, reports) = corpus.resolve_links(links);
        corpus.links = edges;
        corpus.rebuild_link_adjacency();
        let mut stats = corpus.stats();
        stats.links = reports;
        Ok((corpus, stats))
    }

    fn assemble(
        docs: Vec<DocumentMeta>,
        rejected: Vec<RejectedDocument>,
        nodes: Vec<NodeRecord>,
        links: Vec<LinkEdge>,
        link_specs: Vec<LinkSpec>,
    ) -> Corpus {
        let mut children = vec![Vec::new(); nodes.len()];
        let mut by_path: HashMap<ContextPath, Vec<u32>> = HashMap::new();
        let mut by_name: HashMap<String, Vec<u32>> = HashMap::new();
        let mut paths: BTreeMap<ContextPath, PathStat> = BTreeMap::new();
        let mut doc_ranges = Vec::with_capacity(docs.len());
        let mut last_doc_for_path: HashMap<ContextPath, u32> = HashMap::new();

        let mut start = 0u32;
        for (i, rec) in nodes.iter().enumerate() {
            let i = i as u32;
            if let Some(p) = rec.parent {
                children[p as usize].push(i);
            }
            let doc = rec.node.id.doc;
            if doc_ranges.len() < doc as usize + 1 {
                if !doc_ranges.is_empty() {
                    let last: &mut (u32, u32) = doc_ranges.last_mut().unwrap();
                    last.1 = i;
                }
                start = i;
                doc_ranges.push((start, i + 1));
            }
            by_path.entry(rec.node.context.clone()).or_default().push(i);
            by_name.entry(rec.node.name.clone()).or_default().push(i);
            let stat = paths.entry(rec.node.context.clone()).or_default();
            stat.node_count += 1;
            if last_doc_for_path.insert(rec.node.context.clone(), doc) != Some(doc) {
                stat.doc_frequency += 1;
            }
        }
        if let Some(last) = doc_ranges.last_mut() {
            last.1 = nodes.len() as u32;
        }
        let _ = start;

        let mut corpus = Corpus {
            docs,
            rejected,
            nodes,
            links,
            link_specs,
            children,
            link_adj: Vec::new(),
            doc_ranges,
            paths,
            by_path,
            by_name,
        };
        corpus.rebuild_link_adjacency();
        corpus
    }

    fn rebuild_link_adjacency(&mut self) {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (i, e) in self.links.iter().enumerate() {
            adj[e.from as usize].push(i as u32);
            if e.to != e.from {
                adj[e.to as usize].push(i as u32);
            }
        }
        self.link_adj = adj;
    }

    fn match_value(&self, idx: u32, attr: Option<&str>, fold: bool) -> Option<String> {
        let raw = match attr {
            Some(a) => {
                let want = canonical_name(&format!("@{a}"));
                self.children[idx as usize]
                    .iter()
                    .map(|c| &self.nodes[*c as usize].node)
                    .find(|n| n.kind == NodeKind::Attribute && n.name == want)
                    .map(|n| n.text.trim().to_string())?
            }
            None => self.nodes[idx as usize].node.text.trim().to_string(),
        };
        if raw.is_empty() {
            return None;
        }
        Some(if fold { raw.to_lowercase() } else { raw })
    }

    fn resolve_links(&self, specs: &[LinkSpec]) -> (Vec<LinkEdge>, Vec<LinkReport>) {
        let mut edges = BTreeSet::new();
        let mut reports = Vec::new();
        for spec in specs {
            let empty = Vec::new();
            let sources = self.by_path.get(&spec.source).unwrap_or(&empty);
            let targets = self.by_path.get(&spec.target).unwrap_or(&empty);
            let mut by_value: HashMap<String, Vec<u32>> = HashMap::new();
            for &t in targets {
                if let Some(v) = self.match_value(t, spec.target_attr.as_deref(), spec.case_fold) {
                    by_value.entry(v).or_default().push(t);
                }
            }
            let mut count = 0;
            let kind = EdgeKind::from(spec.kind);
            for &s in sources {
                let Some(value) = self.match_value(s, spec.source_attr.as_deref(), spec.case_fold) else {
                    continue;
                };
                let mut hits: Vec<u32> = Vec::new();
                match spec.kind {
                    LinkKind::ValueBased => {
                        hits.extend(by_value.get(&value).into_iter().flatten());
                    }
                    LinkKind::Idref => {
                        for r in value.split_whitespace() {
                            hits.extend(by_value.get(r).into_iter().flatten());
                        }
                    }
                    LinkKind::Xlink => {
                        let (doc_part, frag) = match value.split_once('#') {
                            Some((d, f)) => (d.trim(), f.trim()),
                            None => ("", value.as_str()),
                        };
                        for &t in by_value.get(frag).into_iter().flatten() {
                            if doc_part.is_empty() || self.doc_matches(t, doc_part) {
                                hits.push(t);
                            }
                        }
                    }
                }
                for t in hits {
                    if t == s {
                        continue;
                    }
                    if edges.insert((s, t, kind, spec.label.clone())) {
                        count += 1;
                    }
                }
            }
            if count == 0 {
                log::warn!("link spec `{}` produced no edges", spec.label);
            }
            reports.push(LinkReport {
                label: spec.label.clone(),
                kind: spec.kind,
                edges: count,
            });
        }
        let edges = edges
            .into_iter()
            .map(|(from, to, kind, label)| LinkEdge { kind, from, to, label })
            .collect();
        (edges, reports)
    }

    fn doc_matches(&self, idx: u32, doc_ref: &str) -> bool {
        let name = &self.docs[self.nodes[idx as usize].node.id.doc as usize].name;
        let stem = Path::new(name).file_stem().and_then(|s| s.to_str()).unwrap_or(name);
        let want = Path::new(doc_ref).file_name().and_then(|s| s.to_str()).unwrap_or(doc_ref);
        name == want || stem == want
    }

    pub fn stats(&self) -> CorpusStats {
        let attributes = self.nodes.iter().filter(|n| n.node.kind == NodeKind::Attribute).count();
        let mut edges: BTreeMap<EdgeKind, usize> = EdgeKind::ALL.iter().map(|k| (*k, 0)).collect();
        *edges.get_mut(&EdgeKind::ParentChild).unwrap() = self.nodes.len() - self.docs.len();
        for e in &self.links {
            *edges.entry(e.kind).or_default() += 1;
        }
        let links = self
            .link_specs
            .iter()
            .map(|s| LinkReport {
                label: s.label.clone(),
                kind: s.kind,
                edges: self
                    .links
                    .iter()
                    .filter(|e| e.label == s.label && e.kind == EdgeKind::from(s.kind))
                    .count(),
            })
            .collect();
        CorpusStats {
            documents: self.docs.len(),
            nodes: self.nodes.len(),
            elements: self.nodes.len() - attributes,
            attributes,
            edges,
            distinct_paths: self.paths.len(),
            links,
            rejected: self.rejected.clone(),
        }
    }

    pub fn documents(&self) -> &[DocumentMeta] {
        &self.docs
    }

    pub fn link_specs(&self) -> &[LinkSpec] {
        &self.link_specs
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Distinct path dictionary with per-path document frequency and node counts.
    pub fn paths(&self) -> &BTreeMap<ContextPath, PathStat> {
        &self.paths
    }

    pub fn path_stat(&self, path: &ContextPath) -> Option<&PathStat> {
        self.paths.get(path)
    }

    pub fn idx_of(&self, id: &DeweyId) -> Option<u32> {
        self.nodes
            .binary_search_by(|r| r.node.id.cmp(id))
            .ok()
            .map(|i| i as u32)
    }

    fn require(&self, id: &DeweyId) -> Result<u32> {
        self.idx_of(id).ok_or_else(|| Error::NodeNotFound(id.clone()))
    }

    pub fn node(&self, id: &DeweyId) -> Result<&DataNode> {
        Ok(&self.nodes[self.require(id)? as usize].node)
    }

    pub fn node_at(&self, idx: u32) -> &DataNode {
        &self.nodes[idx as usize].node
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = &DataNode> + '_ {
        self.nodes.iter().map(|r| &r.node)
    }

    pub fn parent_idx(&self, idx: u32) -> Option<u32> {
        self.nodes[idx as usize].parent
    }

    pub fn children_idx(&self, idx: u32) -> &[u32] {
        &self.children[idx as usize]
    }

    /// Node indices on `path`, in document order.
    pub fn nodes_on_path(&self, path: &ContextPath) -> &[u32] {
        self.by_path.get(path).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Node indices with canonical name `name`, in document order.
    pub fn nodes_named(&self, name: &str) -> &[u32] {
        self.by_name.get(name).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Node index range `[start, end)` of document `doc`.
    pub fn doc_range(&self, doc: u32) -> Option<(u32, u32)> {
        self.doc_ranges.get(doc as usize).copied()
    }

    /// Content: the document-order concatenation of all descendant text,
    /// single-space separated.
    pub fn content(&self, id: &DeweyId) -> Result<String> {
        Ok(self.content_at(self.require(id)?))
    }

    pub fn content_at(&self, idx: u32) -> String {
        let mut parts = Vec::new();
        self.collect_text(idx, &mut parts);
        join_fragments(parts.into_iter())
    }

    fn collect_text<'a>(&'a self, idx: u32, out: &mut Vec<&'a str>) {
        let rec = &self.nodes[idx as usize];
        if rec.node.kind == NodeKind::Attribute {
            out.push(&rec.node.text);
            return;
        }
        let elems: Vec<u32> = self.children[idx as usize]
            .iter()
            .copied()
            .filter(|c| self.nodes[*c as usize].node.kind == NodeKind::Element)
            .collect();
        let mut frags = rec.fragments.iter().peekable();
        for (pos, child) in elems.iter().enumerate() {
            while let Some(f) = frags.next_if(|f| f.before as usize <= pos) {
                out.push(&f.text);
            }
            self.collect_text(*child, out);
        }
        for f in frags {
            out.push(&f.text);
        }
    }

    /// The display value of a node: its own text when present, else its content.
    pub fn value_at(&self, idx: u32) -> String {
        let own = &self.nodes[idx as usize].node.text;
        if own.is_empty() { self.content_at(idx) } else { own.clone() }
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn link_edge(&self, edge: u32) -> EdgeRecord {
        let e = &self.links[edge as usize];
        EdgeRecord {
            kind: e.kind,
            from: self.nodes[e.from as usize].node.id.clone(),
            to: self.nodes[e.to as usize].node.id.clone(),
            label: Some(e.label.clone()),
        }
    }

    /// `(kind, label, from, to)` of a link edge, by index.
    pub fn link_parts(&self, edge: u32) -> (EdgeKind, &str, u32, u32) {
        let e = &self.links[edge as usize];
        (e.kind, &e.label, e.from, e.to)
    }

    /// Link edges incident to `idx`.
    pub fn links_of(&self, idx: u32) -> &[u32] {
        &self.link_adj[idx as usize]
    }

    /// Every undirected neighbor of `idx` over all edge kinds.
    pub fn for_each_adjacent(&self, idx: u32, mut f: impl FnMut(u32, Via)) {
        if let Some(p) = self.nodes[idx as usize].parent {
            f(p, Via::Up);
        }
        for &c in &self.children[idx as usize] {
            f(c, Via::Down);
        }
        for &e in &self.link_adj[idx as usize] {
            let edge = &self.links[e as usize];
            if edge.from == idx {
                f(edge.to, Via::Link { edge: e, forward: true });
            }
            if edge.to == idx {
                f(edge.from, Via::Link { edge: e, forward: false });
            }
        }
    }

    /// Incident edges of the requested kinds in both directions, ordered by
    /// kind, then the other endpoint's Dewey id.
    pub fn neighbors(&self, id: &DeweyId, kinds: &BTreeSet<EdgeKind>) -> Result<Vec<(EdgeRecord, DataNode)>> {
        let idx = self.require(id)?;
        let mut out = Vec::new();
        if kinds.contains(&EdgeKind::ParentChild) {
            if let Some(p) = self.nodes[idx as usize].parent {
                let parent = &self.nodes[p as usize].node;
                out.push((
                    EdgeRecord {
                        kind: EdgeKind::ParentChild,
                        from: parent.id.clone(),
                        to: id.clone(),
                        label: None,
                    },
                    parent.clone(),
                ));
            }
            for &c in &self.children[idx as usize] {
                let child = &self.nodes[c as usize].node;
                out.push((
                    EdgeRecord {
                        kind: EdgeKind::ParentChild,
                        from: id.clone(),
                        to: child.id.clone(),
                        label: None,
                    },
                    child.clone(),
                ));
            }
        }
        for &e in &self.link_adj[idx as usize] {
            let edge = &self.links[e as usize];
            if !kinds.contains(&edge.kind) {
                continue;
            }
            let other = if edge.from == idx { edge.to } else { edge.from };
            out.push((self.link_edge(e), self.nodes[other as usize].node.clone()));
        }
        out.sort_by(|a, b| {
            (a.0.kind, &a.1.id, &a.0.label, &a.0.from).cmp(&(b.0.kind, &b.1.id, &b.0.label, &b.0.from))
        });
        Ok(out)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let manifest = Manifest {
            format: 1,
            documents: self.docs.clone(),
            links: self.link_specs.clone(),
            rejected: self.rejected.clone(),
        };
        fs::write(dir.join(MANIFEST_FILE), serde_json::to_vec_pretty(&manifest)?)?;
        let body = CorpusBody {
            nodes: self.nodes.clone(),
            links: self.links.clone(),
        };
        fs::write(dir.join(CORPUS_FILE), serde_json::to_vec(&body)?)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Corpus> {
        let manifest_path = dir.join(MANIFEST_FILE);
        if !manifest_path.exists() {
            return Err(Error::MissingArtifact(dir.to_path_buf(), MANIFEST_FILE));
        }
        let manifest: Manifest = serde_json::from_slice(&fs::read(manifest_path)?)?;
        let body: CorpusBody = serde_json::from_slice(&fs::read(dir.join(CORPUS_FILE))?)?;
        Ok(Corpus::assemble(
            manifest.documents,
            manifest.rejected,
            body.nodes,
            body.links,
            manifest.links,
        ))
    }
}
