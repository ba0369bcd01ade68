//! Merged dataguides: documents grouped by root-to-leaf path sets, plus the
//! link edges between them lifted to path level.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, ExecMode};
use crate::path::ContextPath;
use crate::store::{Corpus, EdgeKind};

pub const GUIDES_FILE: &str = "guides.json";
pub const DEFAULT_THRESHOLD: f64 = 0.4;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GuideNode {
    pub path: ContextPath,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataguide {
    pub id: usize,
    /// Full root-to-leaf paths.
    pub paths: BTreeSet<ContextPath>,
    pub member_docs: BTreeSet<u32>,
    #[serde(skip)]
    tree: Vec<GuideNode>,
    #[serde(skip)]
    by_path: HashMap<ContextPath, usize>,
}

impl Dataguide {
    fn new(id: usize, paths: BTreeSet<ContextPath>, doc: u32) -> Self {
        let mut g = Dataguide {
            id,
            paths,
            member_docs: BTreeSet::from([doc]),
            tree: Vec::new(),
            by_path: HashMap::new(),
        };
        g.rebuild_tree();
        g
    }

    /// Prefix tree over `paths`; node 0.. in sorted prefix order.
    fn rebuild_tree(&mut self) {
        let prefixes: BTreeSet<ContextPath> = self.paths.iter().flat_map(|p| p.prefixes()).collect();
        self.tree = prefixes
            .iter()
            .map(|p| GuideNode {
                path: p.clone(),
                parent: None,
                children: Vec::new(),
            })
            .collect();
        self.by_path = prefixes.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        for i in 0..self.tree.len() {
            if let Some(parent) = self.tree[i].path.parent() {
                let pi = self.by_path[&parent];
                self.tree[i].parent = Some(pi);
                self.tree[pi].children.push(i);
            }
        }
    }

    pub fn tree(&self) -> &[GuideNode] {
        &self.tree
    }

    /// Tree node for `path` (any prefix of a guide path), if present.
    pub fn node_of(&self, path: &ContextPath) -> Option<usize> {
        self.by_path.get(path).copied()
    }
}

/// `min(|common| / |p1|, |common| / |p2|)`.
pub fn overlap_sets(p1: &BTreeSet<ContextPath>, p2: &BTreeSet<ContextPath>) -> Result<f64> {
    if p1.is_empty() || p2.is_empty() {
        return Err(Error::InvalidArgument("overlap of an empty path set".into()));
    }
    let common = p1.intersection(p2).count() as f64;
    Ok((common / p1.len() as f64).min(common / p2.len() as f64))
}

pub fn overlap(g1: &Dataguide, g2: &Dataguide) -> Result<f64> {
    overlap_sets(&g1.paths, &g2.paths)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GuideEnd {
    pub guide: usize,
    pub path: ContextPath,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GuideLink {
    pub from: GuideEnd,
    pub to: GuideEnd,
    pub kind: EdgeKind,
    pub label: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GuideSet {
    pub guides: Vec<Dataguide>,
    pub links: Vec<GuideLink>,
    pub threshold: f64,
    #[serde(skip)]
    doc_guide: HashMap<u32, usize>,
    #[serde(skip)]
    located: HashMap<ContextPath, Vec<(usize, usize)>>,
    #[serde(skip)]
    link_adj: HashMap<(usize, usize), Vec<usize>>,
}

/// Build options. A threshold above 1 disables merging.
#[derive(Clone, Copy, Debug)]
pub struct GuideOptions {
    pub threshold: f64,
    pub mode: ExecMode,
}

impl Default for GuideOptions {
    fn default() -> Self {
        GuideOptions {
            threshold: DEFAULT_THRESHOLD,
            mode: ExecMode::default(),
        }
    }
}

/// Root-to-leaf paths of every document, by ordinal.
pub fn document_path_sets(corpus: &Corpus, mode: ExecMode) -> Vec<BTreeSet<ContextPath>> {
    let docs: Vec<u32> = (0..corpus.documents().len() as u32).collect();
    par::map(mode, &docs, |&d| {
        let (start, end) = corpus.doc_range(d).unwrap_or((0, 0));
        (start..end)
            .filter(|&i| corpus.children_idx(i).is_empty())
            .map(|i| corpus.node_at(i).context.clone())
            .collect()
    })
}

impl GuideSet {
    pub fn build(corpus: &Corpus, opts: &GuideOptions) -> Result<GuideSet> {
        if !(opts.threshold >= 0.0) {
            return Err(Error::InvalidArgument(format!("threshold {} is not a non-negative number", opts.threshold)));
        }
        let sets = document_path_sets(corpus, opts.mode);
        let mut guides: Vec<Dataguide> = Vec::new();
        for (doc, dg) in sets.into_iter().enumerate() {
            let doc = doc as u32;
            let merging = opts.threshold <= 1.0;
            if let Some(g) = guides
                .iter_mut()
                .find(|g| if merging { dg.is_subset(&g.paths) } else { dg == g.paths })
            {
                g.member_docs.insert(doc);
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for (gi, g) in guides.iter().enumerate() {
                let o = overlap_sets(&dg, &g.paths)?;
                if o >= opts.threshold && best.is_none_or(|(_, b)| o > b) {
                    best = Some((gi, o));
                }
            }
            match best {
                Some((gi, _)) => {
                    let g = &mut guides[gi];
                    g.paths.extend(dg);
                    g.member_docs.insert(doc);
                    g.rebuild_tree();
                }
                None => {
                    let id = guides.len();
                    guides.push(Dataguide::new(id, dg, doc));
                }
            }
        }

        let mut gs = GuideSet {
            guides,
            links: Vec::new(),
            threshold: opts.threshold,
            doc_guide: HashMap::new(),
            located: HashMap::new(),
            link_adj: HashMap::new(),
        };
        gs.reindex();
        let mut links = BTreeSet::new();
        for e in 0..corpus.link_count() as u32 {
            let (kind, label, from, to) = corpus.link_parts(e);
            let (a, b) = (corpus.node_at(from), corpus.node_at(to));
            links.insert(GuideLink {
                from: GuideEnd {
                    guide: gs.doc_guide[&a.id.doc],
                    path: a.context.clone(),
                },
                to: GuideEnd {
                    guide: gs.doc_guide[&b.id.doc],
                    path: b.context.clone(),
                },
                kind,
                label: label.to_string(),
            });
        }
        gs.links = links.into_iter().collect();
        gs.reindex();
        Ok(gs)
    }

    fn reindex(&mut self) {
        for g in &mut self.guides {
            if g.tree.is_empty() {
                g.rebuild_tree();
            }
        }
        self.doc_guide = self
            .guides
            .iter()
            .flat_map(|g| g.member_docs.iter().map(move |d| (*d, g.id)))
            .collect();
        self.located.clear();
        for g in &self.guides {
            for (ni, n) in g.tree.iter().enumerate() {
                self.located.entry(n.path.clone()).or_default().push((g.id, ni));
            }
        }
        self.link_adj.clear();
        for (li, l) in self.links.iter().enumerate() {
            let from = (l.from.guide, self.guides[l.from.guide].by_path[&l.from.path]);
            let to = (l.to.guide, self.guides[l.to.guide].by_path[&l.to.path]);
            self.link_adj.entry(from).or_default().push(li);
            if to != from {
                self.link_adj.entry(to).or_default().push(li);
            }
        }
    }

    pub fn guide_of_doc(&self, doc: u32) -> Option<usize> {
        self.doc_guide.get(&doc).copied()
    }

    /// Every (guide id, tree node) whose path equals `path`.
    pub fn locate(&self, path: &ContextPath) -> Vec<(usize, usize)> {
        self.located.get(path).cloned().unwrap_or_default()
    }

    pub fn guide_node(&self, guide: usize, node: usize) -> &GuideNode {
        &self.guides[guide].tree[node]
    }

    /// Link indices incident to a guide node.
    pub fn links_at(&self, guide: usize, node: usize) -> &[usize] {
        self.link_adj.get(&(guide, node)).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn link_node(&self, end: &GuideEnd) -> (usize, usize) {
        (end.guide, self.guides[end.guide].by_path[&end.path])
    }

    pub fn stats(&self) -> GuideStats {
        let mut links_by_kind: BTreeMap<EdgeKind, usize> = BTreeMap::new();
        for l in &self.links {
            *links_by_kind.entry(l.kind).or_default() += 1;
        }
        let distinct: BTreeSet<&ContextPath> = self.guides.iter().flat_map(|g| g.paths.iter()).collect();
        GuideStats {
            threshold: self.threshold,
            documents: self.guides.iter().map(|g| g.member_docs.len()).sum(),
            guides: self.guides.len(),
            total_paths: self.guides.iter().map(|g| g.paths.len()).sum(),
            distinct_paths: distinct.len(),
            links: self.links.len(),
            links_by_kind,
            per_guide: self
                .guides
                .iter()
                .map(|g| GuideRow {
                    id: g.id,
                    documents: g.member_docs.len(),
                    paths: g.paths.len(),
                    tree_nodes: g.tree.len(),
                    links: self
                        .links
                        .iter()
                        .filter(|l| l.from.guide == g.id || l.to.guide == g.id)
                        .count(),
                })
                .collect(),
        }
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(GUIDES_FILE), serde_json::to_vec(self)?)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<GuideSet> {
        let file = dir.join(GUIDES_FILE);
        if !file.exists() {
            return Err(Error::MissingArtifact(dir.to_path_buf(), GUIDES_FILE));
        }
        let mut gs: GuideSet = serde_json::from_slice(&fs::read(file)?)?;
        gs.reindex();
        Ok(gs)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuideRow {
    pub id: usize,
    pub documents: usize,
    pub paths: usize,
    pub tree_nodes: usize,
    pub links: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuideStats {
    pub threshold: f64,
    pub documents: usize,
    pub guides: usize,
    pub total_paths: usize,
    pub distinct_paths: usize,
    pub links: usize,
    pub links_by_kind: BTreeMap<EdgeKind, usize>,
    pub per_guide: Vec<GuideRow>,
}

impl fmt::Display for GuideStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "threshold\t{}", self.threshold)?;
        writeln!(f, "documents\t{}", self.documents)?;
        writeln!(f, "dataguides\t{}", self.guides)?;
        writeln!(f, "leaf paths (sum over guides)\t{}", self.total_paths)?;
        writeln!(f, "distinct leaf paths\t{}", self.distinct_paths)?;
        writeln!(f, "guide links\t{}", self.links)?;
        for (k, n) in &self.links_by_kind {
            writeln!(f, "  {k}\t{n}")?;
        }
        writeln!(f)?;
        writeln!(f, "guide\tdocs\tleaf_paths\tnodes\tlinks")?;
        for g in &self.per_guide {
            writeln!(f, "{}\t{}\t{}\t{}\t{}", g.id, g.documents, g.paths, g.tree_nodes, g.links)?;
        }
        Ok(())
    }
}
