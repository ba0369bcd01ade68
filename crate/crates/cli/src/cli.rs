//! Subcommands. Each step reads the store and the current session file,
//! so the whole explore-refine-cube loop can be scripted without a server.

use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, bail};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use xcube_core::contexts::render_buckets;
use xcube_core::cube::{AugmentOptions, Catalog, CatalogEntry, ContextKey, EntryKind, KeyPath};
use xcube_core::dataguide::{GuideOptions, GuideSet};
use xcube_core::fixtures;
use xcube_core::index::PathIndex;
use xcube_core::par::ExecMode;
use xcube_core::path::ContextPath;
use xcube_core::session::{Engine, EngineConfig, Overrides, Session};
use xcube_core::store::{Corpus, IngestOptions, LinkSpec};

use crate::config::{DEFAULT_ADDR, FileConfig, FlagOverrides, engine_config};
use crate::render;

pub const SESSION_FILE: &str = "session.json";
pub const CUBE_DIR: &str = "cube";
const CLI_SESSION_ID: &str = "cli";

#[derive(Debug, Parser)]
#[command(name = "xcube", version, about = "Keyword search over heterogeneous XML and star-schema extraction")]
pub struct Cli {
    /// Store directory holding the shredded corpus, index, guides, catalog and session.
    #[arg(long, global = true, env = "XCUBE_STORE", default_value = "xcube-store")]
    pub store: PathBuf,
    /// Defaults file; `<store>/config.toml` is used when present.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Number of top-k results.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Largest pairwise distance considered when connecting terms.
    #[arg(long, global = true)]
    pub radius_cap: Option<u32>,
    /// Dataguide merge threshold; a value above 1 disables merging.
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a small sample corpus and catalog to DIR.
    Sample(SampleArgs),
    /// Shred every `.xml` file under DIR into the store.
    Ingest(IngestArgs),
    /// Build the path index.
    Index,
    /// Build dataguides at the current threshold, or report on them.
    Guides {
        #[command(subcommand)]
        action: Option<GuidesAction>,
    },
    /// Run a keyword query and start a new session.
    Query(QueryArgs),
    /// Show or refine the contexts of each query term.
    Contexts(ContextsArgs),
    /// Show or choose connections between query terms.
    Connections(ConnectionsArgs),
    /// Compute the complete result for the chosen connections.
    Materialize(MaterializeArgs),
    /// Inspect or extend the fact and dimension catalog.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
    /// Augment the result with keys and write the star schema.
    Cube(CubeArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SampleKind {
    Factbook,
    Collision,
    Mondial,
    Mixed,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    pub dir: PathBuf,
    #[arg(long, value_enum, default_value = "factbook")]
    pub fixture: SampleKind,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    pub dir: PathBuf,
    /// Link file (JSON); defaults to DIR/links.json when present.
    #[arg(long)]
    pub links: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum GuidesAction {
    /// Print per-guide statistics.
    Stats,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    /// Query text, e.g. `(*, "United States") AND (trade country, *)`, or its JSON form.
    pub text: String,
}

#[derive(Debug, Args)]
pub struct ContextsArgs {
    /// Restrict term N (1-based) to the listed paths: `N=PATH[,PATH...]`.
    #[arg(long = "select", value_name = "N=PATHS")]
    pub select: Vec<String>,
    /// Drop the restriction on term N.
    #[arg(long = "clear", value_name = "N")]
    pub clear: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct ConnectionsArgs {
    /// Connection ids to use for materialization.
    #[arg(long = "choose", value_name = "ID")]
    pub choose: Vec<String>,
    /// Choose every connection in the summary.
    #[arg(long, conflicts_with = "choose")]
    pub all: bool,
    /// Report summary connections that no instance realizes.
    #[arg(long)]
    pub false_positives: bool,
}

#[derive(Debug, Args)]
pub struct MaterializeArgs {
    /// Write the result as CSV to FILE instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum CatalogAction {
    /// List catalog entries.
    List,
    /// Merge entries from a catalog JSON file.
    Import { file: PathBuf },
    /// Match the current result's columns against the catalog.
    Match,
    /// Define a new entry on a result column, checking key uniqueness.
    Define(DefineArgs),
}

#[derive(Debug, Args)]
pub struct DefineArgs {
    #[arg(long)]
    pub kind: EntryKind,
    #[arg(long)]
    pub name: String,
    /// Result column (1-based) the entry is defined on.
    #[arg(long)]
    pub column: usize,
    /// `PATH=KEY[,KEY...]`, one per context. Keys are absolute paths, `.`, or `./relative`.
    #[arg(long = "context", value_name = "PATH=KEYS", required = true)]
    pub contexts: Vec<String>,
}

#[derive(Debug, Args)]
pub struct CubeArgs {
    /// Add a fact beyond the matched ones.
    #[arg(long = "fact")]
    pub add_fact: Vec<String>,
    /// Add a dimension beyond the matched ones.
    #[arg(long = "dim")]
    pub add_dim: Vec<String>,
    /// Leave out a matched fact.
    #[arg(long = "drop-fact")]
    pub drop_fact: Vec<String>,
    /// Leave out a matched dimension.
    #[arg(long = "drop-dim")]
    pub drop_dim: Vec<String>,
    /// Output directory; defaults to `<store>/cube`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Drop rows whose keys cannot be evaluated.
    #[arg(long)]
    pub skip_rows: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub addr: Option<String>,
}

struct Ctx {
    store: PathBuf,
    file: FileConfig,
    config: EngineConfig,
    threshold_flag: Option<f64>,
    json: bool,
}

impl Ctx {
    fn mode(&self) -> ExecMode {
        self.config.mode
    }

    fn engine(&self) -> anyhow::Result<Engine> {
        let mut e = Engine::open(&self.store, self.config)?;
        if let Some(t) = self.threshold_flag {
            if t != e.guides.threshold {
                e.rebuild_guides(t)?;
            }
        } else {
            e.config.threshold = e.guides.threshold;
        }
        Ok(e)
    }

    fn session_path(&self) -> PathBuf {
        self.store.join(SESSION_FILE)
    }

    fn session(&self) -> anyhow::Result<Session> {
        Ok(Session::load(&self.session_path())?)
    }

    fn save_session(&self, s: &Session) -> anyhow::Result<()> {
        Ok(s.save(&self.session_path())?)
    }

    fn emit<T: Serialize>(&self, value: &T, text: impl FnOnce() -> String) -> anyhow::Result<()> {
        let mut out = io::stdout().lock();
        if self.json {
            serde_json::to_writer_pretty(&mut out, value)?;
            writeln!(out)?;
        } else {
            out.write_all(text().as_bytes())?;
        }
        Ok(())
    }
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let file = FileConfig::load(cli.config.as_deref(), &cli.store)?;
    let flags = FlagOverrides {
        k: cli.k,
        radius_cap: cli.radius_cap,
        threshold: cli.threshold,
    };
    let mut config = engine_config(&file, &flags);
    if cli.sequential {
        config.mode = ExecMode::Sequential;
    }
    let ctx = Ctx {
        store: cli.store,
        threshold_flag: cli.threshold.or(file.threshold),
        file,
        config,
        json: cli.json,
    };
    match cli.command {
        Command::Sample(a) => sample(&ctx, a),
        Command::Ingest(a) => ingest(&ctx, a),
        Command::Index => index(&ctx),
        Command::Guides { action } => guides(&ctx, action),
        Command::Query(a) => query(&ctx, a),
        Command::Contexts(a) => contexts(&ctx, a),
        Command::Connections(a) => connections(&ctx, a),
        Command::Materialize(a) => materialize(&ctx, a),
        Command::Catalog { action } => catalog(&ctx, action),
        Command::Cube(a) => cube(&ctx, a),
        Command::Serve(a) => serve(&ctx, a),
    }
}

fn sample(ctx: &Ctx, a: SampleArgs) -> anyhow::Result<()> {
    let f = match a.fixture {
        SampleKind::Factbook => fixtures::factbook(),
        SampleKind::Collision => fixtures::collision(),
        SampleKind::Mondial => fixtures::mondial(),
        SampleKind::Mixed => fixtures::mixed_schema(),
    };
    f.write(&a.dir)?;
    let catalog = a.dir.join("catalog.json");
    fs::write(&catalog, serde_json::to_vec_pretty(&fixtures::seed_catalog())?)?;
    ctx.emit(&serde_json::json!({"documents": f.docs.len(), "dir": a.dir}), || {
        format!(
            "wrote {} documents, links.json and catalog.json to {}\n",
            f.docs.len(),
            a.dir.display()
        )
    })
}

fn collect_xml(dir: &Path, out: &mut Vec<PathBuf>) -> io::Result<()> {
    let mut entries: Vec<_> = fs::read_dir(dir)?.collect::<Result<_, _>>()?;
    entries.sort_by_key(|e| e.path());
    for e in entries {
        let p = e.path();
        if p.is_dir() {
            collect_xml(&p, out)?;
        } else if p.extension().is_some_and(|x| x.eq_ignore_ascii_case("xml")) {
            out.push(p);
        }
    }
    Ok(())
}

fn ingest(ctx: &Ctx, a: IngestArgs) -> anyhow::Result<()> {
    if !a.dir.is_dir() {
        bail!("{} is not a directory", a.dir.display());
    }
    let mut files = Vec::new();
    collect_xml(&a.dir, &mut files)?;
    if files.is_empty() {
        bail!("no .xml files under {}", a.dir.display());
    }
    let mut docs = Vec::with_capacity(files.len());
    for p in &files {
        let name = p.file_name().expect("file path").to_string_lossy().into_owned();
        docs.push((name, fs::read(p).with_context(|| format!("reading {}", p.display()))?));
    }
    let links_path = a.links.or_else(|| Some(a.dir.join("links.json")).filter(|p| p.exists()));
    let links = match &links_path {
        Some(p) => LinkSpec::load_file(p)?,
        None => Vec::new(),
    };
    let (corpus, stats) = Corpus::ingest(docs, &links, &IngestOptions { mode: ctx.mode() })?;
    corpus.save(&ctx.store)?;
    let _ = fs::remove_file(ctx.session_path());
    for r in &stats.rejected {
        log::warn!("rejected {}: {}", r.name, r.message);
    }
    ctx.emit(&stats, || stats.to_string())
}

fn index(ctx: &Ctx) -> anyhow::Result<()> {
    let corpus = Corpus::load(&ctx.store)?;
    let (idx, stats) = PathIndex::build(&corpus, ctx.mode());
    idx.save(&ctx.store)?;
    ctx.emit(&stats, || serde_json::to_string_pretty(&stats).unwrap_or_default() + "\n")
}

fn guides(ctx: &Ctx, action: Option<GuidesAction>) -> anyhow::Result<()> {
    let gs = match action {
        Some(GuidesAction::Stats) => GuideSet::load(&ctx.store)?,
        None => {
            let corpus = Corpus::load(&ctx.store)?;
            let gs = GuideSet::build(
                &corpus,
                &GuideOptions {
                    threshold: ctx.config.threshold,
                    mode: ctx.mode(),
                },
            )?;
            gs.save(&ctx.store)?;
            gs
        }
    };
    let stats = gs.stats();
    ctx.emit(&stats, || stats.to_string())
}

#[derive(Serialize)]
struct QueryView<'a> {
    query: String,
    stage: xcube_core::session::Stage,
    topk: &'a xcube_core::topk::TopKResult,
    buckets: &'a [xcube_core::contexts::ContextBucket],
    connections: &'a xcube_core::connections::ConnectionSummary,
}

fn query_view(s: &Session) -> QueryView<'_> {
    QueryView {
        query: s.query.to_string(),
        stage: s.stage,
        topk: &s.topk,
        buckets: &s.buckets,
        connections: &s.summary,
    }
}

fn query(ctx: &Ctx, a: QueryArgs) -> anyhow::Result<()> {
    let e = ctx.engine()?;
    let s = Session::start(&e, CLI_SESSION_ID, &a.text, Overrides::default())?;
    ctx.save_session(&s)?;
    ctx.emit(&query_view(&s), || {
        let mut t = render::topk(&e.corpus, &s.query, &s.topk);
        t.push('\n');
        t.push_str(&render_buckets(&s.query, &s.buckets));
        t
    })
}

/// Parse `N=PATH[,PATH...]` with a 1-based term number.
fn parse_selection(spec: &str, m: usize) -> anyhow::Result<(usize, BTreeSet<ContextPath>)> {
    let (n, paths) = spec
        .split_once('=')
        .with_context(|| format!("selection `{spec}` is not of the form N=PATH[,PATH...]"))?;
    let n: usize = n.trim().parse().with_context(|| format!("bad term number in `{spec}`"))?;
    if n == 0 || n > m {
        bail!("term {n} is out of range 1..={m}");
    }
    let set = paths
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| ContextPath::parse(p.trim()))
        .collect::<Result<BTreeSet<_>, _>>()?;
    Ok((n - 1, set))
}

fn contexts(ctx: &Ctx, a: ContextsArgs) -> anyhow::Result<()> {
    let mut s = ctx.session()?;
    let e = ctx.engine()?;
    if !a.select.is_empty() || !a.clear.is_empty() {
        let m = s.query.len();
        let mut sel = s.query.refinement.selected_contexts.clone();
        sel.resize(m, None);
        for spec in &a.select {
            let (t, set) = parse_selection(spec, m)?;
            sel[t] = Some(set);
        }
        for &n in &a.clear {
            if n == 0 || n > m {
                bail!("term {n} is out of range 1..={m}");
            }
            sel[n - 1] = None;
        }
        s.select_contexts(&e, &sel)?;
        s.touch(e.config.ttl_secs);
        ctx.save_session(&s)?;
        return ctx.emit(&query_view(&s), || {
            let mut t = render::topk(&e.corpus, &s.query, &s.topk);
            t.push('\n');
            t.push_str(&s.summary.render(&s.query));
            t
        });
    }
    ctx.emit(&s.buckets, || render_buckets(&s.query, &s.buckets))
}

fn connections(ctx: &Ctx, a: ConnectionsArgs) -> anyhow::Result<()> {
    let mut s = ctx.session()?;
    if a.false_positives {
        let e = ctx.engine()?;
        let fp = s.false_positives(&e)?;
        return ctx.emit(&fp, || {
            let mut t = format!("{} of {} connections are not realized by any instance\n", fp.false_positives.len(), fp.total);
            for id in &fp.false_positives {
                t.push_str(&format!("  {id}  {}\n", s.summary.entries[id].rendering));
            }
            t
        });
    }
    if a.all || !a.choose.is_empty() {
        let ids: Vec<String> = if a.all {
            s.summary.entries.keys().cloned().collect()
        } else {
            a.choose.clone()
        };
        s.choose_connections(&ids)?;
        ctx.save_session(&s)?;
        return ctx.emit(&serde_json::json!({"chosen": ids, "stage": s.stage}), || {
            let mut t = format!("chose {} connection(s)\n", ids.len());
            for id in &ids {
                t.push_str(&format!("  {id}  {}\n", s.summary.entries[id].rendering));
            }
            t
        });
    }
    ctx.emit(&s.summary, || s.summary.render(&s.query))
}

fn materialize(ctx: &Ctx, a: MaterializeArgs) -> anyhow::Result<()> {
    let mut s = ctx.session()?;
    let e = ctx.engine()?;
    s.materialize(&e)?;
    ctx.save_session(&s)?;
    let r = s.result()?;
    for w in &r.warnings {
        log::warn!("{w}");
    }
    match &a.out {
        Some(p) => {
            r.write_csv(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?)?;
            ctx.emit(
                &serde_json::json!({"rows": r.len(), "schema": r.schema, "file": p, "warnings": r.warnings}),
                || format!("{} rows written to {}\n", r.len(), p.display()),
            )
        }
        None if ctx.json => ctx.emit(r, String::new),
        None => {
            r.write_csv(io::stdout().lock())?;
            eprintln!("{} rows", r.len());
            Ok(())
        }
    }
}

fn parse_context_key(spec: &str) -> anyhow::Result<ContextKey> {
    let (path, keys) = spec
        .split_once('=')
        .with_context(|| format!("context `{spec}` is not of the form PATH=KEY[,KEY...]"))?;
    let key = keys
        .split(',')
        .map(|k| k.trim().parse::<KeyPath>())
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ContextKey {
        context: ContextPath::parse(path.trim())?,
        key,
    })
}

fn catalog(ctx: &Ctx, action: CatalogAction) -> anyhow::Result<()> {
    let mut cat = Catalog::load(&ctx.store)?;
    match action {
        CatalogAction::List => ctx.emit(&cat, || {
            let mut t = String::new();
            for kind in [EntryKind::Fact, EntryKind::Dimension] {
                for e in cat.entries(kind) {
                    t.push_str(&format!("{kind} {}\n", e.name));
                    for c in &e.contexts {
                        let keys: Vec<String> = c.key.iter().map(|k| k.to_string()).collect();
                        t.push_str(&format!("  {}  key ({})\n", c.context, keys.join(", ")));
                    }
                }
            }
            if t.is_empty() {
                t.push_str("(empty catalog)\n");
            }
            t
        }),
        CatalogAction::Import { file } => {
            let text = fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
            let incoming = Catalog::from_json(&text)?;
            let mut added = 0;
            for kind in [EntryKind::Fact, EntryKind::Dimension] {
                for e in incoming.entries(kind) {
                    if cat.get(kind, &e.name).is_some() {
                        log::warn!("{kind} `{}` already in the catalog; kept the existing entry", e.name);
                        continue;
                    }
                    match kind {
                        EntryKind::Fact => cat.facts.push(e.clone()),
                        EntryKind::Dimension => cat.dimensions.push(e.clone()),
                    }
                    added += 1;
                }
            }
            cat.validate()?;
            cat.save(&ctx.store)?;
            ctx.emit(&serde_json::json!({"added": added}), || format!("imported {added} entries\n"))
        }
        CatalogAction::Match => {
            let mut s = ctx.session()?;
            let report = s.match_catalog(&cat)?.clone();
            ctx.save_session(&s)?;
            ctx.emit(&report, || render::match_report(&report))
        }
        CatalogAction::Define(d) => {
            if d.column == 0 {
                bail!("columns are numbered from 1");
            }
            let entry = CatalogEntry {
                name: d.name,
                contexts: d.contexts.iter().map(|c| parse_context_key(c)).collect::<anyhow::Result<_>>()?,
            };
            let mut s = ctx.session()?;
            let e = ctx.engine()?;
            let report = s.define(&e, &mut cat, d.kind, entry, d.column - 1)?.clone();
            cat.save(&ctx.store)?;
            ctx.save_session(&s)?;
            ctx.emit(&report, || render::match_report(&report))
        }
    }
}

fn cube(ctx: &Ctx, a: CubeArgs) -> anyhow::Result<()> {
    let cat = Catalog::load(&ctx.store)?;
    let mut s = ctx.session()?;
    let e = ctx.engine()?;
    let report = s.match_catalog(&cat)?.clone();
    let pick = |matched: &BTreeSet<String>, add: &[String], drop: &[String]| -> BTreeSet<String> {
        matched
            .iter()
            .chain(add)
            .filter(|n| !drop.contains(n))
            .cloned()
            .collect()
    };
    let facts = pick(&report.facts, &a.add_fact, &a.drop_fact);
    let dims = pick(&report.dimensions, &a.add_dim, &a.drop_dim);
    let opts = AugmentOptions { skip_rows: a.skip_rows };
    let star = s.build_cube(&e, &cat, Some(facts), Some(dims), &opts)?.clone();
    let out = a.out.unwrap_or_else(|| ctx.store.join(CUBE_DIR));
    let files = star.write(&out)?;
    ctx.save_session(&s)?;
    if let Some(aug) = &s.augmented {
        for r in &aug.skipped_rows {
            log::warn!("skipped row: {r}");
        }
    }
    ctx.emit(&serde_json::json!({"manifest": star.manifest, "files": files}), || {
        let mut t = render::star(&star);
        t.push_str(&format!("written to {}\n", out.display()));
        t
    })
}

fn serve(ctx: &Ctx, a: ServeArgs) -> anyhow::Result<()> {
    let addr = a
        .addr
        .or_else(|| ctx.file.addr.clone())
        .unwrap_or_else(|| DEFAULT_ADDR.to_string());
    let engine = ctx.engine()?;
    let state = crate::http::AppState::new(engine, ctx.store.clone())?;
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(crate::http::serve(state, &addr))
}
