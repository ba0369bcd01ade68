//! Fact/dimension catalog and star-schema generation from complete results.
//!
//! Catalog entries map context paths to relative keys. A key path is either
//! absolute (`/country/year`, evaluated in the keyed node's document), the
//! node itself (`.`), or relative (`./trade_country`), which is looked up
//! below the node first and then below its parent.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dewey::DeweyId;
use crate::error::{Error, Result};
use crate::materialize::FullResult;
use crate::path::{ContextPath, canonical_name};
use crate::store::Corpus;

pub const CATALOG_DIR: &str = "catalog";
pub const FACTS_FILE: &str = "facts.json";
pub const DIMENSIONS_FILE: &str = "dimensions.json";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    Fact,
    Dimension,
}

impl fmt::Display for EntryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntryKind::Fact => "fact",
            EntryKind::Dimension => "dimension",
        })
    }
}

impl FromStr for EntryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fact" | "facts" => Ok(EntryKind::Fact),
            "dimension" | "dimensions" | "dim" => Ok(EntryKind::Dimension),
            other => Err(Error::InvalidArgument(format!("unknown entry kind `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KeyPath {
    Absolute(ContextPath),
    /// `.`: the keyed node.
    Anchor,
    /// `./a/b`
    Relative(Vec<String>),
}

impl KeyPath {
    /// Column label for a key evaluated at a column labeled `anchor`.
    pub fn label(&self, anchor: &str) -> String {
        match self {
            KeyPath::Absolute(p) => p.leaf().to_string(),
            KeyPath::Anchor => anchor.to_string(),
            KeyPath::Relative(segs) => segs.last().cloned().unwrap_or_default(),
        }
    }
}

impl fmt::Display for KeyPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KeyPath::Absolute(p) => write!(f, "{p}"),
            KeyPath::Anchor => f.write_str("."),
            KeyPath::Relative(segs) => write!(f, "./{}", segs.join("/")),
        }
    }
}

impl FromStr for KeyPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t == "." {
            return Ok(KeyPath::Anchor);
        }
        if let Some(rest) = t.strip_prefix("./") {
            let segs: Vec<String> = rest.split('/').map(canonical_name).collect();
            if segs.iter().any(|s| s.is_empty() || s == "@" || s.contains('*')) {
                return Err(Error::InvalidPath(format!("bad relative key `{t}`")));
            }
            return Ok(KeyPath::Relative(segs));
        }
        Ok(KeyPath::Absolute(ContextPath::parse(t)?))
    }
}

impl Serialize for KeyPath {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for KeyPath {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextKey {
    pub context: ContextPath,
    pub key: Vec<KeyPath>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub name: String,
    pub contexts: Vec<ContextKey>,
}

impl CatalogEntry {
    pub fn context_set(&self) -> BTreeSet<ContextPath> {
        self.contexts.iter().map(|c| c.context.clone()).collect()
    }

    pub fn key_for(&self, path: &ContextPath) -> Option<&[KeyPath]> {
        self.contexts.iter().find(|c| &c.context == path).map(|c| c.key.as_slice())
    }

    fn validate(&self, kind: EntryKind) -> Result<()> {
        let bad = |m: String| Error::Catalog(format!("{kind} `{}`: {m}", self.name));
        if self.name.trim().is_empty() {
            return Err(Error::Catalog(format!("{kind} with an empty name")));
        }
        if self.contexts.is_empty() {
            return Err(bad("no contexts".into()));
        }
        if self.context_set().len() != self.contexts.len() {
            return Err(bad("repeated context".into()));
        }
        let len = self.contexts[0].key.len();
        if self.contexts.iter().any(|c| c.key.len() != len) {
            return Err(bad("key lists differ in length across contexts".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Catalog {
    #[serde(default)]
    pub facts: Vec<CatalogEntry>,
    #[serde(default)]
    pub dimensions: Vec<CatalogEntry>,
}

impl Catalog {
    pub fn entries(&self, kind: EntryKind) -> &[CatalogEntry] {
        match kind {
            EntryKind::Fact => &self.facts,
            EntryKind::Dimension => &self.dimensions,
        }
    }

    fn entries_mut(&mut self, kind: EntryKind) -> &mut Vec<CatalogEntry> {
        match kind {
            EntryKind::Fact => &mut self.facts,
            EntryKind::Dimension => &mut self.dimensions,
        }
    }

    pub fn get(&self, kind: EntryKind, name: &str) -> Option<&CatalogEntry> {
        self.entries(kind).iter().find(|e| e.name == name)
    }

    pub fn validate(&self) -> Result<()> {
        for kind in [EntryKind::Fact, EntryKind::Dimension] {
            let mut names = BTreeSet::new();
            for e in self.entries(kind) {
                e.validate(kind)?;
                if !names.insert(&e.name) {
                    return Err(Error::Catalog(format!("{kind} `{}` is defined twice", e.name)));
                }
            }
        }
        Ok(())
    }

    /// Parse an administrator seed file (`{"facts": [...], "dimensions": [...]}`).
    pub fn from_json(text: &str) -> Result<Catalog> {
        let c: Catalog = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(store: &Path) -> Result<Catalog> {
        let dir = store.join(CATALOG_DIR);
        let read = |f: &str| -> Result<Vec<CatalogEntry>> {
            let p = dir.join(f);
            if p.exists() {
                Ok(serde_json::from_slice(&fs::read(p)?)?)
            } else {
                Ok(Vec::new())
            }
        };
        let c = Catalog {
            facts: read(FACTS_FILE)?,
            dimensions: read(DIMENSIONS_FILE)?,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn save(&self, store: &Path) -> Result<()> {
        let dir = store.join(CATALOG_DIR);
        fs::create_dir_all(&dir)?;
        fs::write(dir.join(FACTS_FILE), serde_json::to_vec_pretty(&self.facts)?)?;
        fs::write(dir.join(DIMENSIONS_FILE), serde_json::to_vec_pretty(&self.dimensions)?)?;
        Ok(())
    }
}

/// Resolve `key` for the node at `anchor`. Errors carry a short reason.
pub fn resolve_key(corpus: &Corpus, anchor: u32, key: &KeyPath) -> std::result::Result<u32, String> {
    let found: Vec<u32> = match key {
        KeyPath::Anchor => return Ok(anchor),
        KeyPath::Absolute(p) => {
            let doc = corpus.node_at(anchor).id.doc;
            let (start, end) = corpus.doc_range(doc).unwrap_or((0, 0));
            let on_path = corpus.nodes_on_path(p);
            let lo = on_path.partition_point(|&i| i < start);
            let hi = on_path.partition_point(|&i| i < end);
            on_path[lo..hi].to_vec()
        }
        KeyPath::Relative(segs) => {
            let below = descend(corpus, anchor, segs);
            if below.is_empty() {
                corpus.parent_idx(anchor).map(|p| descend(corpus, p, segs)).unwrap_or_default()
            } else {
                below
            }
        }
    };
    match found.as_slice() {
        [one] => Ok(*one),
        [] => Err(format!("key `{key}` matches no node")),
        many => Err(format!("key `{key}` matches {} nodes", many.len())),
    }
}

fn descend(corpus: &Corpus, from: u32, segs: &[String]) -> Vec<u32> {
    let mut cur = vec![from];
    for s in segs {
        cur = cur
            .iter()
            .flat_map(|&v| corpus.children_idx(v).iter().copied())
            .filter(|&c| corpus.node_at(c).name == *s)
            .collect();
    }
    cur
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "origin", rename_all = "snake_case")]
pub enum ColumnOrigin {
    Term { index: usize },
    Key {
        kind: EntryKind,
        entry: String,
        anchor: usize,
        key: KeyPath,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CubeColumn {
    pub label: String,
    pub paths: BTreeSet<ContextPath>,
    pub origin: ColumnOrigin,
}

/// Node-valued working table: one node id per column and row.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CubeTable {
    pub columns: Vec<CubeColumn>,
    pub rows: Vec<Vec<DeweyId>>,
}

impl CubeTable {
    pub fn from_result(result: &FullResult) -> CubeTable {
        let m = result.arity();
        let mut labels: Vec<String> = Vec::new();
        let columns = (0..m)
            .map(|i| {
                let paths = result.column_paths(i);
                let base = paths.iter().next().map(|p| p.leaf().to_string()).unwrap_or_else(|| format!("c{}", i + 1));
                let label = unique_label(&labels, &base);
                labels.push(label.clone());
                CubeColumn {
                    label,
                    paths,
                    origin: ColumnOrigin::Term { index: i },
                }
            })
            .collect();
        CubeTable {
            columns,
            rows: result.rows.iter().map(|r| r.nodes.clone()).collect(),
        }
    }

    fn column_values(&self, c: usize) -> Vec<&DeweyId> {
        self.rows.iter().map(|r| &r[c]).collect()
    }
}

fn unique_label(existing: &[String], base: &str) -> String {
    if !existing.iter().any(|l| l == base) {
        return base.to_string();
    }
    (2..).map(|n| format!("{base}_{n}")).find(|l| !existing.contains(l)).unwrap()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum MatchStatus {
    Full,
    Partial { missing: Vec<ContextPath> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryMatch {
    pub kind: EntryKind,
    pub name: String,
    #[serde(flatten)]
    pub status: MatchStatus,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMatch {
    pub column: usize,
    pub label: String,
    pub paths: Vec<ContextPath>,
    pub matches: Vec<EntryMatch>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchReport {
    pub columns: Vec<ColumnMatch>,
    pub facts: BTreeSet<String>,
    pub dimensions: BTreeSet<String>,
    pub warnings: Vec<String>,
}

/// Classify a column's path set against one entry.
pub fn classify(paths: &BTreeSet<ContextPath>, entry: &CatalogEntry) -> Option<MatchStatus> {
    let ctx = entry.context_set();
    if paths.is_empty() || paths.is_disjoint(&ctx) {
        return None;
    }
    if paths.is_subset(&ctx) {
        Some(MatchStatus::Full)
    } else {
        Some(MatchStatus::Partial {
            missing: paths.difference(&ctx).cloned().collect(),
        })
    }
}

pub fn match_table(table: &CubeTable, catalog: &Catalog) -> MatchReport {
    let mut report = MatchReport::default();
    for (ci, col) in table.columns.iter().enumerate() {
        let mut matches = Vec::new();
        for kind in [EntryKind::Fact, EntryKind::Dimension] {
            for e in catalog.entries(kind) {
                let Some(status) = classify(&col.paths, e) else { continue };
                match &status {
                    MatchStatus::Full => {
                        match kind {
                            EntryKind::Fact => report.facts.insert(e.name.clone()),
                            EntryKind::Dimension => report.dimensions.insert(e.name.clone()),
                        };
                    }
                    MatchStatus::Partial { missing } => report.warnings.push(format!(
                        "column {} ({}) partially matches {kind} `{}`; not covered: {}",
                        ci + 1,
                        col.label,
                        e.name,
                        missing.iter().map(|p| p.as_str()).collect::<Vec<_>>().join(", ")
                    )),
                }
                matches.push(EntryMatch {
                    kind,
                    name: e.name.clone(),
                    status,
                });
            }
        }
        report.columns.push(ColumnMatch {
            column: ci,
            label: col.label.clone(),
            paths: col.paths.iter().cloned().collect(),
            matches,
        });
    }
    report
}

pub fn match_result(result: &FullResult, catalog: &Catalog) -> MatchReport {
    match_table(&CubeTable::from_result(result), catalog)
}

/// Define a new catalog entry from a result column, verifying that the key
/// is unique over every node of the column on the given contexts.
pub fn define_entry(
    corpus: &Corpus,
    catalog: &mut Catalog,
    kind: EntryKind,
    entry: CatalogEntry,
    table: &CubeTable,
    column: usize,
) -> Result<()> {
    entry.validate(kind)?;
    if catalog.get(kind, &entry.name).is_some() {
        return Err(Error::Catalog(format!("{kind} `{}` already exists", entry.name)));
    }
    let col = table
        .columns
        .get(column)
        .ok_or_else(|| Error::InvalidArgument(format!("no column {}", column + 1)))?;
    if let Some(p) = entry.contexts.iter().find(|c| !col.paths.contains(&c.context)) {
        return Err(Error::Catalog(format!(
            "context {} does not occur in column {}",
            p.context,
            column + 1
        )));
    }
    let nodes: BTreeSet<&DeweyId> = table.column_values(column).into_iter().collect();
    let mut seen: HashMap<Vec<String>, DeweyId> = HashMap::new();
    for id in nodes {
        let idx = corpus.idx_of(id).ok_or_else(|| Error::NodeNotFound(id.clone()))?;
        let Some(keys) = entry.key_for(&corpus.node_at(idx).context) else { continue };
        let mut values = Vec::with_capacity(keys.len());
        for k in keys {
            let at = resolve_key(corpus, idx, k).map_err(|_| Error::UnresolvableKey {
                entry: entry.name.clone(),
                node: id.clone(),
                path: k.to_string(),
            })?;
            values.push(corpus.value_at(at));
        }
        if let Some(first) = seen.get(&values) {
            return Err(Error::DuplicateKey {
                entry: entry.name.clone(),
                first: first.clone(),
                second: id.clone(),
                key: values.join(", "),
            });
        }
        seen.insert(values, id.clone());
    }
    catalog.entries_mut(kind).push(entry);
    Ok(())
}

#[derive(Clone, Debug, Default)]
pub struct AugmentOptions {
    /// Drop rows whose keys cannot be evaluated instead of failing.
    pub skip_rows: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Augmented {
    pub table: CubeTable,
    pub facts: BTreeSet<String>,
    pub dimensions: BTreeSet<String>,
    /// Entries that matched only through added key columns.
    pub auto_matched: Vec<(EntryKind, String)>,
    /// Key columns per (kind, entry, keyed column).
    pub key_columns: Vec<KeyBinding>,
    pub skipped_rows: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyBinding {
    pub kind: EntryKind,
    pub entry: String,
    pub column: usize,
    pub keys: Vec<usize>,
}

impl Augmented {
    pub fn keys_of(&self, kind: EntryKind, entry: &str, column: usize) -> Option<&[usize]> {
        self.key_columns
            .iter()
            .find(|b| b.kind == kind && b.entry == entry && b.column == column)
            .map(|b| b.keys.as_slice())
    }
}

/// Add every key column the chosen facts and dimensions need, then match
/// the added columns against the catalog, until nothing changes.
pub fn augment(
    corpus: &Corpus,
    table: &CubeTable,
    catalog: &Catalog,
    facts: &BTreeSet<String>,
    dimensions: &BTreeSet<String>,
    opts: &AugmentOptions,
) -> Result<Augmented> {
    for (kind, names) in [(EntryKind::Fact, facts), (EntryKind::Dimension, dimensions)] {
        if let Some(n) = names.iter().find(|n| catalog.get(kind, n).is_none()) {
            return Err(Error::Catalog(format!("unknown {kind} `{n}`")));
        }
    }
    let mut out = Augmented {
        table: table.clone(),
        facts: facts.clone(),
        dimensions: dimensions.clone(),
        auto_matched: Vec::new(),
        key_columns: Vec::new(),
        skipped_rows: Vec::new(),
    };
    loop {
        let mut changed = false;
        // matches through added columns join the chosen sets
        for (ci, col) in out.table.columns.iter().enumerate() {
            if !matches!(col.origin, ColumnOrigin::Key { .. }) {
                continue;
            }
            for kind in [EntryKind::Fact, EntryKind::Dimension] {
                for e in catalog.entries(kind) {
                    if classify(&col.paths, e) != Some(MatchStatus::Full) {
                        continue;
                    }
                    let set = match kind {
                        EntryKind::Fact => &mut out.facts,
                        EntryKind::Dimension => &mut out.dimensions,
                    };
                    if set.insert(e.name.clone()) {
                        log::info!("column {} ({}) matched {kind} `{}`", ci + 1, col.label, e.name);
                        out.auto_matched.push((kind, e.name.clone()));
                        changed = true;
                    }
                }
            }
        }

        let chosen: Vec<(EntryKind, String)> = out
            .facts
            .iter()
            .map(|n| (EntryKind::Fact, n.clone()))
            .chain(out.dimensions.iter().map(|n| (EntryKind::Dimension, n.clone())))
            .collect();
        'entries: for (kind, name) in chosen {
            let entry = catalog.get(kind, &name).expect("validated above");
            for c in 0..out.table.columns.len() {
                if classify(&out.table.columns[c].paths, entry) != Some(MatchStatus::Full)
                    || out.keys_of(kind, &name, c).is_some()
                {
                    continue;
                }
                match key_values(corpus, &out.table, entry, c) {
                    Ok(per_key) => {
                        let mut keys = Vec::new();
                        let anchor_label = out.table.columns[c].label.clone();
                        for (kpath, values) in per_key {
                            keys.push(add_or_reuse(corpus, &mut out.table, kind, &name, c, &kpath, &anchor_label, values));
                        }
                        out.key_columns.push(KeyBinding {
                            kind,
                            entry: name.clone(),
                            column: c,
                            keys,
                        });
                        changed = true;
                    }
                    Err(bad_rows) => {
                        if !opts.skip_rows {
                            return Err(Error::RowErrors(bad_rows.into_iter().map(|(_, m)| m).collect()));
                        }
                        let drop: BTreeSet<usize> = bad_rows.iter().map(|(r, _)| *r).collect();
                        out.skipped_rows.extend(bad_rows.into_iter().map(|(_, m)| m));
                        let rows = std::mem::take(&mut out.table.rows);
                        out.table.rows = rows
                            .into_iter()
                            .enumerate()
                            .filter(|(i, _)| !drop.contains(i))
                            .map(|(_, r)| r)
                            .collect();
                        refresh_paths(corpus, &mut out.table);
                        changed = true;
                        break 'entries;
                    }
                }
            }
        }
        if !changed {
            return Ok(out);
        }
    }
}

type KeyColumns = Vec<(KeyPath, Vec<DeweyId>)>;

fn key_values(
    corpus: &Corpus,
    table: &CubeTable,
    entry: &CatalogEntry,
    column: usize,
) -> std::result::Result<KeyColumns, Vec<(usize, String)>> {
    let width = entry.contexts[0].key.len();
    let mut cols: Vec<(KeyPath, Vec<DeweyId>)> = entry.contexts[0]
        .key
        .iter()
        .map(|k| (k.clone(), Vec::with_capacity(table.rows.len())))
        .collect();
    let mut errors = Vec::new();
    for (ri, row) in table.rows.iter().enumerate() {
        let id = &row[column];
        let Some(idx) = corpus.idx_of(id) else {
            errors.push((ri, format!("row {}: node {id} not found", ri + 1)));
            continue;
        };
        let keys = entry.key_for(&corpus.node_at(idx).context).unwrap_or(&[]);
        if keys.len() != width {
            errors.push((ri, format!("row {}: no key for {}", ri + 1, corpus.node_at(idx).context)));
            continue;
        }
        let mut ok = true;
        for (j, k) in keys.iter().enumerate() {
            match resolve_key(corpus, idx, k) {
                Ok(n) => cols[j].1.push(corpus.node_at(n).id.clone()),
                Err(why) => {
                    errors.push((ri, format!("row {}: {} of `{}` at {id}: {why}", ri + 1, k, entry.name)));
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            for c in cols.iter_mut() {
                c.1.truncate(ri - errors.iter().filter(|(r, _)| *r < ri).count());
            }
        }
    }
    if errors.is_empty() { Ok(cols) } else { Err(errors) }
}

#[allow(clippy::too_many_arguments)]
fn add_or_reuse(
    corpus: &Corpus,
    table: &mut CubeTable,
    kind: EntryKind,
    entry: &str,
    anchor: usize,
    key: &KeyPath,
    anchor_label: &str,
    values: Vec<DeweyId>,
) -> usize {
    for c in 0..table.columns.len() {
        if table.rows.iter().zip(&values).all(|(r, v)| &r[c] == v) {
            return c;
        }
    }
    let labels: Vec<String> = table.columns.iter().map(|c| c.label.clone()).collect();
    let label = unique_label(&labels, &key.label(anchor_label));
    let paths = values
        .iter()
        .filter_map(|v| corpus.idx_of(v))
        .map(|i| corpus.node_at(i).context.clone())
        .collect();
    for (r, v) in table.rows.iter_mut().zip(values) {
        r.push(v);
    }
    table.columns.push(CubeColumn {
        label,
        paths,
        origin: ColumnOrigin::Key {
            kind,
            entry: entry.to_string(),
            anchor,
            key: key.clone(),
        },
    });
    table.columns.len() - 1
}

fn refresh_paths(corpus: &Corpus, table: &mut CubeTable) {
    for (c, col) in table.columns.iter_mut().enumerate() {
        col.paths = table
            .rows
            .iter()
            .filter_map(|r| corpus.idx_of(&r[c]))
            .map(|i| corpus.node_at(i).context.clone())
            .collect();
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub file: String,
    pub key_columns: Vec<String>,
    pub value_columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn header(&self) -> Vec<String> {
        self.key_columns.iter().chain(&self.value_columns).cloned().collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableMeta {
    pub name: String,
    pub file: String,
    pub keys: Vec<String>,
    pub values: Vec<String>,
    /// Catalog entries the table was built from.
    pub entries: Vec<String>,
    pub rows: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMeta {
    pub label: String,
    pub paths: Vec<ContextPath>,
    #[serde(flatten)]
    pub origin: ColumnOrigin,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CubeManifest {
    pub query: String,
    pub facts: Vec<TableMeta>,
    pub dimensions: Vec<TableMeta>,
    pub columns: Vec<ColumnMeta>,
    pub auto_matched: Vec<(EntryKind, String)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StarSchema {
    pub facts: Vec<Table>,
    pub dimensions: Vec<Table>,
    pub manifest: CubeManifest,
}

impl StarSchema {
    pub fn fact(&self, name: &str) -> Option<&Table> {
        self.facts.iter().find(|t| t.name == name)
    }

    pub fn dimension(&self, name: &str) -> Option<&Table> {
        self.dimensions.iter().find(|t| t.name == name)
    }

    /// Write `fact_*.csv`, `dim_*.csv` and `manifest.json` into `dir`,
    /// replacing tables left there by an earlier build.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        for e in fs::read_dir(dir)? {
            let p = e?.path();
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            if (name.starts_with("fact_") || name.starts_with("dim_")) && name.ends_with(".csv") {
                fs::remove_file(&p)?;
            }
        }
        let mut written = Vec::new();
        for t in self.facts.iter().chain(&self.dimensions) {
            let p = dir.join(&t.file);
            t.write_csv(fs::File::create(&p)?)?;
            written.push(p);
        }
        let p = dir.join(MANIFEST_FILE);
        fs::write(&p, serde_json::to_vec_pretty(&self.manifest)?)?;
        written.push(p);
        Ok(written)
    }
}

struct FactPart {
    name: String,
    keys: Vec<usize>,
    key_labels: Vec<String>,
    measure: usize,
}

fn file_safe(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_alphanumeric() || c == '_' || c == '-' { c } else { '_' })
        .collect()
}

/// Build fact and dimension tables from an augmented result.
pub fn emit_star(corpus: &Corpus, aug: &Augmented, catalog: &Catalog, query: &str) -> Result<StarSchema> {
    let table = &aug.table;
    let rows_idx: Vec<Vec<u32>> = table
        .rows
        .iter()
        .map(|r| {
            r.iter()
                .map(|id| corpus.idx_of(id).ok_or_else(|| Error::NodeNotFound(id.clone())))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut value_cache: HashMap<u32, String> = HashMap::new();
    let mut value = |i: u32| value_cache.entry(i).or_insert_with(|| corpus.value_at(i)).clone();

    let mut parts: Vec<FactPart> = Vec::new();
    for name in &aug.facts {
        let entry = catalog
            .get(EntryKind::Fact, name)
            .ok_or_else(|| Error::Catalog(format!("unknown fact `{name}`")))?;
        for c in 0..table.columns.len() {
            if classify(&table.columns[c].paths, entry) != Some(MatchStatus::Full) {
                continue;
            }
            let keys = aug
                .keys_of(EntryKind::Fact, name, c)
                .ok_or_else(|| Error::State(format!("fact `{name}` was not augmented")))?
                .to_vec();
            parts.push(FactPart {
                name: name.clone(),
                key_labels: keys.iter().map(|k| table.columns[*k].label.clone()).collect(),
                keys,
                measure: c,
            });
        }
    }

    // Facts whose key label sets agree share one table.
    let mut groups: BTreeMap<BTreeSet<String>, Vec<usize>> = BTreeMap::new();
    for (i, p) in parts.iter().enumerate() {
        groups.entry(p.key_labels.iter().cloned().collect()).or_default().push(i);
    }
    let mut facts = Vec::new();
    let mut fact_meta = Vec::new();
    let mut ordered: Vec<Vec<usize>> = groups.into_values().collect();
    ordered.sort_by_key(|g| g[0]);
    for group in ordered {
        let first = &parts[group[0]];
        let key_labels = first.key_labels.clone();
        let mut names: Vec<String> = Vec::new();
        for &pi in &group {
            if !names.contains(&parts[pi].name) {
                names.push(parts[pi].name.clone());
            }
        }
        let measures: Vec<String> = names.clone();
        let mut merged: BTreeMap<Vec<String>, (Vec<Option<String>>, Vec<Option<u32>>)> = BTreeMap::new();
        for &pi in &group {
            let part = &parts[pi];
            let slot = names.iter().position(|n| *n == part.name).unwrap();
            // key positions in the first part's label order
            let order: Vec<usize> = key_labels
                .iter()
                .map(|l| part.keys[part.key_labels.iter().position(|x| x == l).unwrap()])
                .collect();
            for row in &rows_idx {
                let key: Vec<String> = order.iter().map(|&k| value(row[k])).collect();
                let measure_node = row[part.measure];
                let e = merged
                    .entry(key.clone())
                    .or_insert_with(|| (vec![None; names.len()], vec![None; names.len()]));
                match e.1[slot] {
                    Some(prev) if prev != measure_node => {
                        return Err(Error::DuplicateKey {
                            entry: part.name.clone(),
                            first: corpus.node_at(prev).id.clone(),
                            second: corpus.node_at(measure_node).id.clone(),
                            key: key.join(", "),
                        });
                    }
                    Some(_) => {}
                    None => {
                        e.1[slot] = Some(measure_node);
                        e.0[slot] = Some(value(measure_node));
                    }
                }
            }
        }
        let tname = names.join("_");
        let file = format!("fact_{}.csv", file_safe(&tname));
        let rows: Vec<Vec<String>> = merged
            .into_iter()
            .map(|(k, (vals, _))| k.into_iter().chain(vals.into_iter().map(Option::unwrap_or_default)).collect())
            .collect();
        fact_meta.push(TableMeta {
            name: tname.clone(),
            file: file.clone(),
            keys: key_labels.clone(),
            values: measures.clone(),
            entries: names.clone(),
            rows: rows.len(),
        });
        facts.push(Table {
            name: tname,
            file,
            key_columns: key_labels,
            value_columns: measures,
            rows,
        });
    }

    let mut dimensions = Vec::new();
    let mut dim_meta = Vec::new();
    for name in &aug.dimensions {
        let entry = catalog
            .get(EntryKind::Dimension, name)
            .ok_or_else(|| Error::Catalog(format!("unknown dimension `{name}`")))?;
        let mut key_labels: Option<Vec<String>> = None;
        let mut rows: BTreeSet<Vec<String>> = BTreeSet::new();
        for c in 0..table.columns.len() {
            if classify(&table.columns[c].paths, entry) != Some(MatchStatus::Full) {
                continue;
            }
            let keys = aug
                .keys_of(EntryKind::Dimension, name, c)
                .ok_or_else(|| Error::State(format!("dimension `{name}` was not augmented")))?;
            key_labels.get_or_insert_with(|| keys.iter().map(|k| table.columns[*k].label.clone()).collect());
            for row in &rows_idx {
                let mut r: Vec<String> = keys.iter().map(|&k| value(row[k])).collect();
                r.push(value(row[c]));
                rows.insert(r);
            }
        }
        let key_labels = key_labels.unwrap_or_default();
        let value_col = if key_labels.contains(name) {
            format!("{name}_value")
        } else {
            name.clone()
        };
        let file = format!("dim_{}.csv", file_safe(name));
        dim_meta.push(TableMeta {
            name: name.clone(),
            file: file.clone(),
            keys: key_labels.clone(),
            values: vec![value_col.clone()],
            entries: vec![name.clone()],
            rows: rows.len(),
        });
        dimensions.push(Table {
            name: name.clone(),
            file,
            key_columns: key_labels,
            value_columns: vec![value_col],
            rows: rows.into_iter().collect(),
        });
    }

    Ok(StarSchema {
        facts,
        dimensions,
        manifest: CubeManifest {
            query: query.to_string(),
            facts: fact_meta,
            dimensions: dim_meta,
            columns: table
                .columns
                .iter()
                .map(|c| ColumnMeta {
                    label: c.label.clone(),
                    paths: c.paths.iter().cloned().collect(),
                    origin: c.origin.clone(),
                })
                .collect(),
            auto_matched: aug.auto_matched.clone(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_path_forms() {
        assert_eq!("/country/year".parse::<KeyPath>().unwrap().to_string(), "/country/year");
        assert_eq!(".".parse::<KeyPath>().unwrap(), KeyPath::Anchor);
        assert_eq!(
            "./Trade Country".parse::<KeyPath>().unwrap(),
            KeyPath::Relative(vec!["trade_country".into()])
        );
        assert!("./".parse::<KeyPath>().is_err());
        assert!("year".parse::<KeyPath>().is_err());
        assert_eq!("./a/b".parse::<KeyPath>().unwrap().label("x"), "b");
        assert_eq!(KeyPath::Anchor.label("x"), "x");
    }

    fn p(s: &str) -> ContextPath {
        ContextPath::parse(s).unwrap()
    }

    #[test]
    fn classify_subset_rule() {
        let e = CatalogEntry {
            name: "f".into(),
            contexts: vec![ContextKey {
                context: p("/a/b"),
                key: vec![],
            }],
        };
        assert_eq!(classify(&[p("/a/b")].into(), &e), Some(MatchStatus::Full));
        assert_eq!(
            classify(&[p("/a/b"), p("/a/c")].into(), &e),
            Some(MatchStatus::Partial { missing: vec![p("/a/c")] })
        );
        assert_eq!(classify(&[p("/x")].into(), &e), None);
    }

    #[test]
    fn catalog_validation_and_round_trip() {
        let json = r#"{"facts":[{"name":"f","contexts":[{"context":"/a/b","key":["/a","./c"]}]}],
                       "dimensions":[{"name":"d","contexts":[{"context":"/a","key":["."]}]}]}"#;
        let c = Catalog::from_json(json).unwrap();
        let dir = tempfile::tempdir().unwrap();
        c.save(dir.path()).unwrap();
        assert_eq!(Catalog::load(dir.path()).unwrap(), c);
        let dup = r#"{"facts":[{"name":"f","contexts":[{"context":"/a","key":[]}]},{"name":"f","contexts":[{"context":"/b","key":[]}]}]}"#;
        assert!(Catalog::from_json(dup).is_err());
        let ragged = r#"{"facts":[{"name":"f","contexts":[{"context":"/a","key":["."]},{"context":"/b","key":[]}]}]}"#;
        assert!(Catalog::from_json(ragged).is_err());
        assert_eq!(Catalog::load(&dir.path().join("none")).unwrap(), Catalog::default());
    }
}
