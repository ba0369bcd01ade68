//! Complete results for a refined query.
//!
//! Each chosen connection between two terms becomes a chain of pattern
//! variables. Variables forced to be the same node (a node has one parent)
//! are unified, tree edges group the variables into twigs, and link edges
//! become joins between twigs. Twigs are evaluated bottom-up over
//! document-ordered candidate lists by matching children to parents;
//! twig results are then hash-joined along the link edges.
//!
//! When a term pair has several chosen connections, or one connection fits
//! the pair in both orientations, each combination is planned separately
//! and the results are unioned.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::connections::{Connection, Step};
use crate::error::{Error, Result};
use crate::index::PathIndex;
use crate::par::{self, ExecMode};
use crate::path::ContextPath;
use crate::query::{Query, ResultTuple};
use crate::store::{Corpus, EdgeKind};
use crate::topk::to_result_tuple;

/// Refuse plans with more connection combinations than this.
pub const MAX_ALTERNATIVES: usize = 4096;

const UNBOUND: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternVar {
    pub id: usize,
    /// Fixed path; only a lone term of a single-term query has none.
    pub path: Option<ContextPath>,
    /// Query terms bound to this variable.
    pub terms: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwigPattern {
    pub id: usize,
    pub root: usize,
    /// Variables in the twig, parents before children.
    pub vars: Vec<usize>,
    /// (parent, child) pairs.
    pub edges: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossTwigEdge {
    pub left: (usize, usize),
    pub right: (usize, usize),
    pub kind: EdgeKind,
    pub label: String,
    /// Whether the stored edge runs from `left` to `right`.
    pub forward: bool,
}

/// One satisfiable combination of chosen connections.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlternativePlan {
    /// Connection id used per term pair.
    pub choice: BTreeMap<String, String>,
    pub vars: Vec<PatternVar>,
    pub twigs: Vec<TwigPattern>,
    pub cross: Vec<CrossTwigEdge>,
    /// Pattern variable bound to each query term.
    pub term_vars: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub alternatives: Vec<AlternativePlan>,
    /// Combinations dropped because their constraints contradict.
    pub unsatisfiable: usize,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FullResult {
    pub schema: Vec<String>,
    pub rows: Vec<ResultTuple>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl FullResult {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn arity(&self) -> usize {
        self.schema.len() / 2
    }

    /// Distinct paths in column `i`.
    pub fn column_paths(&self, i: usize) -> BTreeSet<ContextPath> {
        self.rows.iter().map(|r| r.paths[i].clone()).collect()
    }

    /// Write `c_n1, c_p1, ...` as RFC-4180 CSV.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.schema)?;
        for r in &self.rows {
            let mut rec = Vec::with_capacity(self.schema.len());
            for (n, p) in r.nodes.iter().zip(&r.paths) {
                rec.push(n.to_string());
                rec.push(p.to_string());
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn schema(m: usize) -> Vec<String> {
    (1..=m).flat_map(|i| [format!("c_n{i}"), format!("c_p{i}")]).collect()
}

/// Union-find over pattern variables with a functional parent.
struct Unifier {
    link: Vec<usize>,
    path: Vec<Option<ContextPath>>,
    parent: Vec<Option<usize>>,
    ok: bool,
}

impl Unifier {
    fn new() -> Self {
        Unifier {
            link: Vec::new(),
            path: Vec::new(),
            parent: Vec::new(),
            ok: true,
        }
    }

    fn var(&mut self, path: Option<ContextPath>) -> usize {
        self.link.push(self.link.len());
        self.path.push(path);
        self.parent.push(None);
        self.link.len() - 1
    }

    fn find(&mut self, v: usize) -> usize {
        let mut r = v;
        while self.link[r] != r {
            r = self.link[r];
        }
        let mut x = v;
        while self.link[x] != r {
            let next = self.link[x];
            self.link[x] = r;
            x = next;
        }
        r
    }

    fn set_path(&mut self, v: usize, p: &ContextPath) {
        let r = self.find(v);
        match &self.path[r] {
            Some(q) if q != p => self.ok = false,
            Some(_) => {}
            None => self.path[r] = Some(p.clone()),
        }
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        let (keep, gone) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.link[gone] = keep;
        if let Some(p) = self.path[gone].take() {
            self.set_path(keep, &p);
        }
        match (self.parent[keep], self.parent[gone].take()) {
            (Some(pk), Some(pg)) => self.union(pk, pg),
            (None, Some(pg)) => self.parent[keep] = Some(pg),
            _ => {}
        }
    }

    fn set_parent(&mut self, child: usize, parent: usize) {
        let c = self.find(child);
        match self.parent[c] {
            Some(p) => self.union(p, parent),
            None => self.parent[c] = Some(parent),
        }
    }
}

/// Per term pair, the oriented connections (walked from the lower term).
fn pair_options(query: &Query) -> Result<Vec<((usize, usize), Vec<(String, Connection)>)>> {
    let m = query.len();
    let chosen = query
        .refinement
        .selected_connections
        .as_ref()
        .ok_or_else(|| Error::Planning("no connections have been selected".into()))?;
    let mut out = Vec::new();
    for l in 0..m {
        for r in l + 1..m {
            let mut opts = Vec::new();
            for (id, cc) in chosen {
                for u in cc.uses.iter().filter(|u| u.left == l && u.right == r) {
                    opts.push((id.clone(), cc.connection.oriented(u.left_at_from)?));
                }
            }
            if opts.is_empty() {
                return Err(Error::UncoveredPair(l, r));
            }
            out.push(((l, r), opts));
        }
    }
    Ok(out)
}

/// Partition every combination of chosen connections into twigs and
/// cross-twig edges.
pub fn plan_twigs(query: &Query) -> Result<Plan> {
    let m = query.len();
    let mut plan = Plan::default();
    if m > 1 {
        if let Some(sel) = &query.refinement.selected_connections {
            if sel.is_empty() {
                plan.warnings.push("no connections chosen; the result is empty".into());
                return Ok(plan);
            }
        }
    }
    let pairs = if m > 1 { pair_options(query)? } else { Vec::new() };
    let total: usize = pairs.iter().map(|(_, o)| o.len()).product();
    if total > MAX_ALTERNATIVES {
        return Err(Error::Planning(format!(
            "{total} connection combinations exceed the limit of {MAX_ALTERNATIVES}; choose fewer connections"
        )));
    }

    let mut counter = vec![0usize; pairs.len()];
    loop {
        let combo: Vec<(&(usize, usize), &(String, Connection))> =
            pairs.iter().zip(&counter).map(|((pair, opts), &c)| (pair, &opts[c])).collect();
        match build_alternative(query, &combo) {
            Some(alt) => {
                if !plan.alternatives.contains(&alt) {
                    plan.alternatives.push(alt);
                }
            }
            None => plan.unsatisfiable += 1,
        }
        // odometer
        let mut k = 0;
        loop {
            if k == counter.len() {
                return Ok(plan);
            }
            counter[k] += 1;
            if counter[k] < pairs[k].1.len() {
                break;
            }
            counter[k] = 0;
            k += 1;
        }
    }
}

struct LinkConstraint {
    from: usize,
    to: usize,
    kind: EdgeKind,
    label: String,
    forward: bool,
}

fn build_alternative(query: &Query, combo: &[(&(usize, usize), &(String, Connection))]) -> Option<AlternativePlan> {
    let m = query.len();
    let mut u = Unifier::new();
    let term_vars: Vec<usize> = (0..m).map(|_| u.var(None)).collect();
    let mut links = Vec::new();
    let mut choice = BTreeMap::new();

    for ((l, r), (id, conn)) in combo {
        choice.insert(format!("{}-{}", l + 1, r + 1), id.clone());
        u.set_path(term_vars[*l], &conn.from);
        let paths = conn.visited_paths().ok()?;
        let mut cur = term_vars[*l];
        for (k, st) in conn.steps.iter().enumerate() {
            let next = if k + 1 == conn.steps.len() {
                term_vars[*r]
            } else {
                u.var(None)
            };
            u.set_path(next, &paths[k]);
            match st {
                Step::Up { .. } => u.set_parent(cur, next),
                Step::Down { .. } => u.set_parent(next, cur),
                Step::Link {
                    kind, label, forward, ..
                } => links.push(LinkConstraint {
                    from: cur,
                    to: next,
                    kind: *kind,
                    label: label.clone(),
                    forward: *forward,
                }),
            }
            cur = next;
        }
        if conn.steps.is_empty() {
            u.union(term_vars[*l], term_vars[*r]);
        }
        u.set_path(term_vars[*r], &conn.to);
        if !u.ok {
            return None;
        }
    }
    if !u.ok {
        return None;
    }

    // Compact roots into pattern variables.
    let n = u.link.len();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    let mut vars: Vec<PatternVar> = Vec::new();
    for v in 0..n {
        let r = u.find(v);
        if !slot.contains_key(&r) {
            let path = u.path[r].clone();
            if path.is_none() && m > 1 {
                return None;
            }
            slot.insert(r, vars.len());
            vars.push(PatternVar {
                id: vars.len(),
                path,
                terms: Vec::new(),
            });
        }
    }
    for (t, &tv) in term_vars.iter().enumerate() {
        let s = slot[&u.find(tv)];
        vars[s].terms.push(t);
    }
    for v in &vars {
        let Some(path) = &v.path else { continue };
        for &t in &v.terms {
            let allowed = query.terms[t].context.matches_path(path)
                && query.context_filter(t).is_none_or(|f| f.contains(path));
            if !allowed {
                return None;
            }
        }
    }
    let mut parent: Vec<Option<usize>> = vec![None; vars.len()];
    for v in 0..n {
        let r = u.find(v);
        if let Some(p) = u.parent[r] {
            let (cs, ps) = (slot[&r], slot[&u.find(p)]);
            let child_path = vars[cs].path.as_ref().and_then(ContextPath::parent);
            if cs == ps || child_path.as_ref() != vars[ps].path.as_ref() {
                return None;
            }
            parent[cs] = Some(ps);
        }
    }
    // No parent cycles.
    for start in 0..vars.len() {
        let mut seen = BTreeSet::new();
        let mut cur = Some(start);
        while let Some(c) = cur {
            if !seen.insert(c) {
                return None;
            }
            cur = parent[c];
        }
    }

    // Twigs: components of the parent forest.
    let mut twig_of = vec![usize::MAX; vars.len()];
    let mut twigs: Vec<TwigPattern> = Vec::new();
    let root_of = |mut v: usize| {
        while let Some(p) = parent[v] {
            v = p;
        }
        v
    };
    let mut roots: Vec<usize> = (0..vars.len()).map(root_of).collect::<BTreeSet<_>>().into_iter().collect();
    roots.sort_by_key(|r| (0..vars.len()).find(|v| root_of(*v) == *r));
    for (ti, &r) in roots.iter().enumerate() {
        // BFS from the root keeps parents ahead of children.
        let mut order = vec![r];
        let mut edges = Vec::new();
        let mut i = 0;
        while i < order.len() {
            let v = order[i];
            for c in 0..vars.len() {
                if parent[c] == Some(v) {
                    order.push(c);
                    edges.push((v, c));
                }
            }
            i += 1;
        }
        for &v in &order {
            twig_of[v] = ti;
        }
        twigs.push(TwigPattern {
            id: ti,
            root: r,
            vars: order,
            edges,
        });
    }

    let mut cross: Vec<CrossTwigEdge> = Vec::new();
    for lc in links {
        let (a, b) = (slot[&u.find(lc.from)], slot[&u.find(lc.to)]);
        let e = CrossTwigEdge {
            left: (twig_of[a], a),
            right: (twig_of[b], b),
            kind: lc.kind,
            label: lc.label,
            forward: lc.forward,
        };
        if !cross.contains(&e) {
            cross.push(e);
        }
    }
    let term_vars = term_vars.iter().map(|tv| slot[&u.find(*tv)]).collect();
    Some(AlternativePlan {
        choice,
        vars,
        twigs,
        cross,
        term_vars,
    })
}

type Row = Vec<u32>;

fn candidates(corpus: &Corpus, index: &PathIndex, query: &Query, var: &PatternVar) -> Result<Vec<u32>> {
    let only: Option<BTreeSet<ContextPath>> = var.path.clone().map(|p| [p].into());
    if var.terms.is_empty() {
        let path = var
            .path
            .as_ref()
            .ok_or_else(|| Error::Internal("interior pattern variable without a path".into()))?;
        return Ok(corpus.nodes_on_path(path).to_vec());
    }
    let mut keep: Option<BTreeSet<u32>> = None;
    for &t in &var.terms {
        let filter = only.as_ref().or(query.context_filter(t));
        let s: BTreeSet<u32> = index
            .scan_term(corpus, &query.terms[t], filter)?
            .in_document_order()
            .into_iter()
            .collect();
        keep = Some(match keep {
            None => s,
            Some(k) => k.intersection(&s).copied().collect(),
        });
    }
    Ok(keep.unwrap_or_default().into_iter().collect())
}

fn merge(a: &Row, b: &Row) -> Row {
    a.iter().zip(b).map(|(x, y)| if *x == UNBOUND { *y } else { *x }).collect()
}

fn eval_twig(
    corpus: &Corpus,
    index: &PathIndex,
    query: &Query,
    alt: &AlternativePlan,
    twig: &TwigPattern,
) -> Result<Vec<Row>> {
    let n = alt.vars.len();
    let mut rel: HashMap<usize, Vec<Row>> = HashMap::new();
    for &v in twig.vars.iter().rev() {
        let cands = candidates(corpus, index, query, &alt.vars[v])?;
        let kids: Vec<usize> = twig.edges.iter().filter(|e| e.0 == v).map(|e| e.1).collect();
        // group each child's rows by the parent of the child's binding
        let grouped: Vec<HashMap<u32, Vec<Row>>> = kids
            .iter()
            .map(|c| {
                let mut g: HashMap<u32, Vec<Row>> = HashMap::new();
                for row in rel.remove(c).unwrap_or_default() {
                    if let Some(p) = corpus.parent_idx(row[*c]) {
                        g.entry(p).or_default().push(row);
                    }
                }
                g
            })
            .collect();
        let mut rows = Vec::new();
        for x in cands {
            let mut acc: Vec<Row> = vec![{
                let mut r = vec![UNBOUND; n];
                r[v] = x;
                r
            }];
            for g in &grouped {
                let Some(ch) = g.get(&x) else {
                    acc.clear();
                    break;
                };
                acc = acc.iter().flat_map(|a| ch.iter().map(move |c| merge(a, c))).collect();
            }
            rows.extend(acc);
        }
        rel.insert(v, rows);
    }
    Ok(rel.remove(&twig.root).unwrap_or_default())
}

/// Link neighbors of `v` along `kind`/`label`, walking the edge forward
/// (from `v`) or backward (into `v`).
fn link_targets(corpus: &Corpus, v: u32, kind: EdgeKind, label: &str, forward: bool) -> Vec<u32> {
    let mut out = Vec::new();
    for &e in corpus.links_of(v) {
        let (k, l, from, to) = corpus.link_parts(e);
        if k != kind || l != label {
            continue;
        }
        if forward && from == v {
            out.push(to);
        }
        if !forward && to == v {
            out.push(from);
        }
    }
    out
}

fn join_twigs(corpus: &Corpus, alt: &AlternativePlan, mut twig_rows: Vec<Vec<Row>>) -> Vec<Row> {
    let t = alt.twigs.len();
    let mut joined: BTreeSet<usize> = BTreeSet::from([0]);
    let mut acc = std::mem::take(&mut twig_rows[0]);
    let mut applied = vec![false; alt.cross.len()];
    while joined.len() < t {
        let next = alt.cross.iter().enumerate().find(|(i, e)| {
            !applied[*i] && (joined.contains(&e.left.0) != joined.contains(&e.right.0))
        });
        let Some((ei, e)) = next else {
            // Not linked to anything joined so far: cartesian product.
            let ti = (0..t).find(|x| !joined.contains(x)).unwrap();
            let other = std::mem::take(&mut twig_rows[ti]);
            acc = acc.iter().flat_map(|a| other.iter().map(move |b| merge(a, b))).collect();
            joined.insert(ti);
            continue;
        };
        applied[ei] = true;
        // orient: `inner` var is in the joined part
        let (inner, outer, forward) = if joined.contains(&e.left.0) {
            (e.left, e.right, e.forward)
        } else {
            (e.right, e.left, !e.forward)
        };
        let other = std::mem::take(&mut twig_rows[outer.0]);
        let mut out = Vec::new();
        if other.len() <= acc.len() {
            let mut build: HashMap<u32, Vec<&Row>> = HashMap::new();
            for r in &other {
                build.entry(r[outer.1]).or_default().push(r);
            }
            for a in &acc {
                for w in link_targets(corpus, a[inner.1], e.kind, &e.label, forward) {
                    for b in build.get(&w).into_iter().flatten() {
                        out.push(merge(a, b));
                    }
                }
            }
        } else {
            let mut build: HashMap<u32, Vec<&Row>> = HashMap::new();
            for a in &acc {
                build.entry(a[inner.1]).or_default().push(a);
            }
            for b in &other {
                for w in link_targets(corpus, b[outer.1], e.kind, &e.label, !forward) {
                    for a in build.get(&w).into_iter().flatten() {
                        out.push(merge(a, b));
                    }
                }
            }
        }
        acc = out;
        joined.insert(outer.0);
    }
    // Remaining link edges connect already-joined variables: filter.
    for (ei, e) in alt.cross.iter().enumerate() {
        if applied[ei] {
            continue;
        }
        acc.retain(|r| link_targets(corpus, r[e.left.1], e.kind, &e.label, e.forward).contains(&r[e.right.1]));
    }
    acc
}

pub fn evaluate(corpus: &Corpus, index: &PathIndex, query: &Query, plan: &Plan, mode: ExecMode) -> Result<FullResult> {
    let mut rows: BTreeSet<Vec<u32>> = BTreeSet::new();
    for alt in &plan.alternatives {
        let twig_rows = par::map(mode, &alt.twigs, |tw| eval_twig(corpus, index, query, alt, tw))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        if twig_rows.iter().any(Vec::is_empty) {
            continue;
        }
        for r in join_twigs(corpus, alt, twig_rows) {
            rows.insert(alt.term_vars.iter().map(|v| r[*v]).collect());
        }
    }
    Ok(FullResult {
        schema: schema(query.len()),
        rows: rows.iter().map(|r| to_result_tuple(corpus, r)).collect(),
        warnings: plan.warnings.clone(),
    })
}

/// Plan and evaluate in one step.
pub fn materialize(corpus: &Corpus, index: &PathIndex, query: &Query, mode: ExecMode) -> Result<FullResult> {
    let plan = plan_twigs(query)?;
    for w in &plan.warnings {
        log::warn!("{w}");
    }
    evaluate(corpus, index, query, &plan, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connections::{ChosenConnection, PairUse};
    use crate::store::{IngestOptions, LinkSpec};

    fn p(s: &str) -> ContextPath {
        ContextPath::parse(s).unwrap()
    }

    fn setup() -> (Corpus, PathIndex) {
        let docs = [
            "<r><i><a>1</a><b>x</b></i><i><a>2</a><b>y</b></i></r>",
            "<s><b>x</b></s>",
        ];
        let links = vec![LinkSpec::value_based("/r/i/b", "/s/b", "same").unwrap()];
        let (c, _) = Corpus::ingest(
            docs.iter().enumerate().map(|(i, x)| (format!("d{i}"), x.as_bytes().to_vec())),
            &links,
            &IngestOptions::default(),
        )
        .unwrap();
        let (idx, _) = PathIndex::build(&c, ExecMode::Sequential);
        (c, idx)
    }

    fn choose(q: &Query, conns: &[(Connection, PairUse)]) -> Query {
        let mut q = q.clone();
        q.refinement.selected_connections = Some(
            conns
                .iter()
                .map(|(c, u)| {
                    (
                        c.id.clone(),
                        ChosenConnection {
                            connection: c.clone(),
                            uses: [*u].into(),
                        },
                    )
                })
                .collect(),
        );
        q
    }

    fn sibling() -> Connection {
        Connection::canonical(
            p("/r/i/a"),
            vec![Step::Up { name: "i".into() }, Step::Down { name: "b".into() }],
        )
        .unwrap()
        .0
    }

    #[test]
    fn sibling_twig() {
        let (c, idx) = setup();
        let q = choose(
            &Query::parse("(a, *) AND (b, *)").unwrap(),
            &[(sibling(), PairUse { left: 0, right: 1, left_at_from: true })],
        );
        let plan = plan_twigs(&q).unwrap();
        assert_eq!(plan.alternatives.len(), 1);
        assert_eq!(plan.alternatives[0].twigs.len(), 1);
        assert!(plan.alternatives[0].cross.is_empty());
        let r = evaluate(&c, &idx, &q, &plan, ExecMode::Sequential).unwrap();
        assert_eq!(r.len(), 2);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("c_n1,c_p1,c_n2,c_p2\n"));
        assert!(text.contains("0:1.1.1,/r/i/a,0:1.1.2,/r/i/b"));
    }

    #[test]
    fn cross_twig_link() {
        let (c, idx) = setup();
        let conn = Connection::canonical(
            p("/r/i/a"),
            vec![
                Step::Up { name: "i".into() },
                Step::Down { name: "b".into() },
                Step::Link {
                    kind: EdgeKind::ValueBased,
                    label: "same".into(),
                    forward: true,
                    path: p("/s/b"),
                },
            ],
        )
        .unwrap();
        let q = choose(
            &Query::parse("(a, *) AND (/s/b, *)").unwrap(),
            &[(conn.0, PairUse { left: 0, right: 1, left_at_from: !conn.1 })],
        );
        let plan = plan_twigs(&q).unwrap();
        let alt = &plan.alternatives[0];
        assert_eq!(alt.twigs.len(), 2);
        assert_eq!(alt.cross.len(), 1);
        let r = evaluate(&c, &idx, &q, &plan, ExecMode::Parallel).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r.rows[0].nodes[0].to_string(), "0:1.1.1");
    }

    #[test]
    fn empty_and_uncovered_choices() {
        let q = Query::parse("(a, *) AND (b, *) AND (s, *)").unwrap();
        let mut none = q.clone();
        none.refinement.selected_connections = Some(BTreeMap::new());
        let plan = plan_twigs(&none).unwrap();
        assert!(plan.alternatives.is_empty());
        assert_eq!(plan.warnings.len(), 1);
        let partial = choose(&q, &[(sibling(), PairUse { left: 0, right: 1, left_at_from: true })]);
        assert!(matches!(plan_twigs(&partial), Err(Error::UncoveredPair(0, 2))));
        assert!(matches!(plan_twigs(&q), Err(Error::Planning(_))));
    }

    #[test]
    fn single_term_plan() {
        let (c, idx) = setup();
        let q = Query::parse("(b, x)").unwrap();
        let plan = plan_twigs(&q).unwrap();
        assert_eq!(plan.alternatives[0].twigs.len(), 1);
        let r = evaluate(&c, &idx, &q, &plan, ExecMode::Sequential).unwrap();
        assert_eq!(r.len(), 2);
    }
}
