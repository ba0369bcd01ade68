//! The explore, refine and cube loop over one loaded store.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::connections::{
    ConnectionCache, ConnectionSummary, FalsePositiveReport, SummaryOptions, apply_connection_selection,
    false_positives, summarize_connections,
};
use crate::contexts::{ContextBucket, apply_context_selection, context_buckets};
use crate::cube::{
    AugmentOptions, Augmented, Catalog, CatalogEntry, CubeTable, EntryKind, MatchReport, StarSchema, augment,
    define_entry, emit_star, match_table,
};
use crate::dataguide::{GuideOptions, GuideSet};
use crate::error::{Error, Result};
use crate::index::PathIndex;
use crate::materialize::{FullResult, materialize};
use crate::par::ExecMode;
use crate::path::ContextPath;
use crate::query::{DEFAULT_MAX_TERMS, Query};
use crate::store::Corpus;
use crate::topk::{TopKOptions, TopKResult, top_k};

pub const DEFAULT_TTL_SECS: u64 = 3600;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub k: usize,
    pub radius_cap: u32,
    pub threshold: f64,
    pub max_terms: usize,
    pub ttl_secs: u64,
    #[serde(skip)]
    pub mode: ExecMode,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            k: crate::topk::DEFAULT_K,
            radius_cap: crate::graph::DEFAULT_RADIUS_CAP,
            threshold: crate::dataguide::DEFAULT_THRESHOLD,
            max_terms: DEFAULT_MAX_TERMS,
            ttl_secs: DEFAULT_TTL_SECS,
            mode: ExecMode::default(),
        }
    }
}

/// Read-only shared state: store, index, guides and the guide-walk cache.
#[derive(Debug)]
pub struct Engine {
    pub corpus: Corpus,
    pub index: PathIndex,
    pub guides: GuideSet,
    pub cache: ConnectionCache,
    pub config: EngineConfig,
}

impl Engine {
    pub fn new(corpus: Corpus, index: PathIndex, guides: GuideSet, config: EngineConfig) -> Engine {
        Engine {
            corpus,
            index,
            guides,
            cache: ConnectionCache::new(),
            config,
        }
    }

    /// Index the corpus and build guides at the configured threshold.
    pub fn build(corpus: Corpus, config: EngineConfig) -> Result<Engine> {
        let (index, _) = PathIndex::build(&corpus, config.mode);
        let guides = GuideSet::build(
            &corpus,
            &GuideOptions {
                threshold: config.threshold,
                mode: config.mode,
            },
        )?;
        Ok(Engine::new(corpus, index, guides, config))
    }

    /// Load a store directory written by `ingest`, `index` and `guides`.
    pub fn open(dir: &Path, config: EngineConfig) -> Result<Engine> {
        let corpus = Corpus::load(dir)?;
        let index = PathIndex::load(dir)?;
        let guides = GuideSet::load(dir)?;
        Ok(Engine::new(corpus, index, guides, config))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        self.corpus.save(dir)?;
        self.index.save(dir)?;
        self.guides.save(dir)
    }

    /// Swap in guides built at another threshold.
    pub fn rebuild_guides(&mut self, threshold: f64) -> Result<()> {
        self.guides = GuideSet::build(
            &self.corpus,
            &GuideOptions {
                threshold,
                mode: self.config.mode,
            },
        )?;
        self.config.threshold = threshold;
        self.cache.clear();
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Queried,
    ConnectionsChosen,
    Materialized,
    Built,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Overrides {
    pub k: Option<usize>,
    pub radius_cap: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub text: String,
    pub query: Query,
    pub stage: Stage,
    pub k: usize,
    pub radius_cap: u32,
    pub topk: TopKResult,
    pub buckets: Vec<ContextBucket>,
    pub summary: ConnectionSummary,
    pub result: Option<FullResult>,
    pub report: Option<MatchReport>,
    pub augmented: Option<Augmented>,
    pub star: Option<StarSchema>,
    pub created: u64,
    pub expires: u64,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl Session {
    pub fn start(engine: &Engine, id: impl Into<String>, text: &str, over: Overrides) -> Result<Session> {
        let query = Query::from_text_or_json_with_max(text, engine.config.max_terms)?;
        let k = over.k.unwrap_or(engine.config.k);
        if k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        let created = now();
        let mut s = Session {
            id: id.into(),
            text: text.to_string(),
            buckets: context_buckets(&engine.corpus, &engine.index, &query)?,
            query,
            stage: Stage::Queried,
            k,
            radius_cap: over.radius_cap.unwrap_or(engine.config.radius_cap),
            topk: TopKResult {
                k,
                tuples: Vec::new(),
                stats: Default::default(),
            },
            summary: ConnectionSummary::default(),
            result: None,
            report: None,
            augmented: None,
            star: None,
            created,
            expires: created + engine.config.ttl_secs,
        };
        s.refresh(engine)?;
        Ok(s)
    }

    pub fn is_expired(&self) -> bool {
        now() >= self.expires
    }

    pub fn touch(&mut self, ttl_secs: u64) {
        self.expires = now() + ttl_secs;
    }

    fn refresh(&mut self, engine: &Engine) -> Result<()> {
        let opts = TopKOptions {
            k: self.k,
            radius_cap: self.radius_cap,
            mode: engine.config.mode,
        };
        self.topk = top_k(&engine.corpus, &engine.index, &self.query, &opts)?;
        self.summary = summarize_connections(
            &engine.corpus,
            &engine.guides,
            &engine.cache,
            &self.topk,
            &SummaryOptions {
                radius_cap: self.radius_cap,
                mode: engine.config.mode,
            },
        )?;
        self.stage = Stage::Queried;
        self.result = None;
        self.report = None;
        self.augmented = None;
        self.star = None;
        Ok(())
    }

    /// Restrict term contexts (`None` keeps a term unrestricted) and re-rank.
    /// Any connection choice or downstream result is discarded.
    pub fn select_contexts(&mut self, engine: &Engine, selections: &[Option<BTreeSet<ContextPath>>]) -> Result<()> {
        self.query = apply_context_selection(&self.query, &self.buckets, selections)?;
        self.refresh(engine)
    }

    pub fn choose_connections(&mut self, ids: &[String]) -> Result<()> {
        self.query = apply_connection_selection(&self.query, &self.summary, ids)?;
        self.stage = Stage::ConnectionsChosen;
        self.result = None;
        self.report = None;
        self.augmented = None;
        self.star = None;
        Ok(())
    }

    pub fn materialize(&mut self, engine: &Engine) -> Result<&FullResult> {
        if self.stage < Stage::ConnectionsChosen && self.query.len() > 1 {
            return Err(Error::State("materialize requires a connection selection".into()));
        }
        let r = materialize(&engine.corpus, &engine.index, &self.query, engine.config.mode)?;
        self.result = Some(r);
        self.stage = Stage::Materialized;
        self.report = None;
        self.augmented = None;
        self.star = None;
        Ok(self.result.as_ref().expect("just set"))
    }

    pub fn result(&self) -> Result<&FullResult> {
        self.result
            .as_ref()
            .ok_or_else(|| Error::State("no materialized result; run materialize first".into()))
    }

    pub fn table(&self) -> Result<CubeTable> {
        Ok(CubeTable::from_result(self.result()?))
    }

    pub fn match_catalog(&mut self, catalog: &Catalog) -> Result<&MatchReport> {
        let report = match_table(&self.table()?, catalog);
        self.report = Some(report);
        Ok(self.report.as_ref().expect("just set"))
    }

    /// Add a catalog entry defined on a result column, then re-match.
    pub fn define(
        &mut self,
        engine: &Engine,
        catalog: &mut Catalog,
        kind: EntryKind,
        entry: CatalogEntry,
        column: usize,
    ) -> Result<&MatchReport> {
        let table = self.table()?;
        define_entry(&engine.corpus, catalog, kind, entry, &table, column)?;
        self.match_catalog(catalog)
    }

    /// Augment with key columns and emit the star schema. `None` for either
    /// set takes the catalog matches.
    pub fn build_cube(
        &mut self,
        engine: &Engine,
        catalog: &Catalog,
        facts: Option<BTreeSet<String>>,
        dimensions: Option<BTreeSet<String>>,
        opts: &AugmentOptions,
    ) -> Result<&StarSchema> {
        let table = self.table()?;
        let report = match_table(&table, catalog);
        let facts = facts.unwrap_or_else(|| report.facts.clone());
        let dimensions = dimensions.unwrap_or_else(|| report.dimensions.clone());
        self.report = Some(report);
        let aug = augment(&engine.corpus, &table, catalog, &facts, &dimensions, opts)?;
        let star = emit_star(&engine.corpus, &aug, catalog, &self.query.to_string())?;
        self.augmented = Some(aug);
        self.star = Some(star);
        self.stage = Stage::Built;
        Ok(self.star.as_ref().expect("just set"))
    }

    pub fn false_positives(&self, engine: &Engine) -> Result<FalsePositiveReport> {
        false_positives(&engine.corpus, &engine.index, &self.query, &self.summary)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, serde_json::to_vec(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Session> {
        if !path.exists() {
            return Err(Error::State(format!(
                "no session at {}; start one with a query",
                path.display()
            )));
        }
        Ok(serde_json::from_slice(&fs::read(path)?)?)
    }
}
