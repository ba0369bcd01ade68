//! Brute-force reference implementations used as test oracles. They only
//! touch the store through its public lookup API.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use xcube_core::connections::{Connection, Step};
use xcube_core::dewey::DeweyId;
use xcube_core::path::ContextPath;
use xcube_core::query::{ContextSpec, Query, QueryTerm};
use xcube_core::store::{Corpus, DataNode, EdgeKind};
use xcube_core::text::SearchExpr;

fn words(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in s.chars() {
        if ch.is_alphanumeric() {
            cur.extend(ch.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn tf(field: &[String], t: &str) -> f64 {
    let n = field.iter().filter(|x| x.as_str() == t).count();
    if n == 0 { 0.0 } else { n as f64 / field.len() as f64 }
}

fn eval(e: &SearchExpr, fields: &[Vec<String>]) -> Option<f64> {
    match e {
        SearchExpr::MatchAll => Some(1.0),
        SearchExpr::Term(t) => {
            let best = fields.iter().map(|f| tf(f, t)).fold(0.0, f64::max);
            (best > 0.0).then_some(best)
        }
        SearchExpr::Phrase(ts) => {
            let mut best: Option<f64> = None;
            for f in fields {
                let hit = (0..f.len()).any(|i| i + ts.len() <= f.len() && f[i..i + ts.len()] == ts[..]);
                if hit {
                    let s = ts.iter().map(|t| tf(f, t)).fold(1.0, f64::min);
                    best = Some(best.map_or(s, |b: f64| b.max(s)));
                }
            }
            best
        }
        SearchExpr::And(xs) => {
            let mut acc = 1.0f64;
            for x in xs {
                acc = acc.min(eval(x, fields)?);
            }
            Some(acc)
        }
        SearchExpr::Or(xs) => xs.iter().filter_map(|x| eval(x, fields)).reduce(f64::max),
        SearchExpr::Not(x) => eval(x, fields).is_none().then_some(1.0),
    }
}

fn glob(pat: &str, s: &str) -> bool {
    let (p, t): (Vec<char>, Vec<char>) = (pat.chars().collect(), s.chars().collect());
    // dp[i][j]: pattern prefix i matches text prefix j
    let mut dp = vec![vec![false; t.len() + 1]; p.len() + 1];
    dp[0][0] = true;
    for i in 1..=p.len() {
        for j in 0..=t.len() {
            dp[i][j] = match p[i - 1] {
                '*' => dp[i - 1][j] || (j > 0 && dp[i][j - 1]),
                c => j > 0 && dp[i - 1][j - 1] && (c == '?' || c == t[j - 1]),
            };
        }
    }
    dp[p.len()][t.len()]
}

pub fn context_ok(spec: &ContextSpec, path: &ContextPath) -> bool {
    match spec {
        ContextSpec::Empty => true,
        ContextSpec::FullPath(p) => p.as_str() == path.as_str(),
        ContextSpec::NamePattern(pat) => glob(pat, path.segments().last().map(|s| s.as_ref()).unwrap_or("")),
        ContextSpec::Disjunction(ds) => ds.iter().any(|d| context_ok(d, path)),
    }
}

/// Content score of `node` for `term`, or `None` if it does not satisfy it.
pub fn score(node: &DataNode, term: &QueryTerm) -> Option<f64> {
    if !context_ok(&term.context, &node.context) {
        return None;
    }
    let fields = vec![words(&node.text), words(node.name.trim_start_matches('@'))];
    eval(&term.search, &fields)
}

/// Satisfying nodes of every term, restricted by selected contexts.
pub fn candidates(corpus: &Corpus, query: &Query) -> Vec<Vec<(DeweyId, f64)>> {
    (0..query.len())
        .map(|i| {
            corpus
                .nodes()
                .filter(|n| query.context_filter(i).is_none_or(|f| f.contains(&n.context)))
                .filter_map(|n| score(n, &query.terms[i]).map(|s| (n.id.clone(), s)))
                .collect()
        })
        .collect()
}

/// Undirected hop distances from `start`, up to `cap`.
pub fn bfs(corpus: &Corpus, start: &DeweyId, cap: u32) -> HashMap<DeweyId, u32> {
    let kinds: BTreeSet<EdgeKind> = EdgeKind::ALL.into_iter().collect();
    let mut dist = HashMap::from([(start.clone(), 0u32)]);
    let mut queue = VecDeque::from([start.clone()]);
    while let Some(v) = queue.pop_front() {
        let d = dist[&v];
        if d == cap {
            continue;
        }
        for (_, n) in corpus.neighbors(&v, &kinds).unwrap() {
            if !dist.contains_key(&n.id) {
                dist.insert(n.id.clone(), d + 1);
                queue.push_back(n.id.clone());
            }
        }
    }
    dist
}

pub fn distance(corpus: &Corpus, nodes: &[DeweyId], cap: u32) -> Option<u32> {
    let mut total = 0;
    for i in 0..nodes.len() {
        let d = bfs(corpus, &nodes[i], cap);
        for j in i + 1..nodes.len() {
            total += *d.get(&nodes[j])?;
        }
    }
    Some(total)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ranked {
    pub nodes: Vec<DeweyId>,
    pub distance: u32,
    pub score: f64,
}

/// Enumerate every tuple, score it, and sort by score then Dewey vector.
pub fn top_k(corpus: &Corpus, query: &Query, k: usize, cap: u32) -> Vec<Ranked> {
    let cands = candidates(corpus, query);
    let mut balls: HashMap<DeweyId, HashMap<DeweyId, u32>> = HashMap::new();
    for c in cands.iter().flatten() {
        balls.entry(c.0.clone()).or_insert_with(|| bfs(corpus, &c.0, cap));
    }
    let mut all = Vec::new();
    let mut pick: Vec<usize> = vec![0; cands.len()];
    if cands.iter().any(Vec::is_empty) {
        return all;
    }
    'outer: loop {
        let chosen: Vec<&(DeweyId, f64)> = pick.iter().enumerate().map(|(i, &j)| &cands[i][j]).collect();
        let mut d = 0;
        let mut ok = true;
        'pairs: for a in 0..chosen.len() {
            for b in a + 1..chosen.len() {
                match balls[&chosen[a].0].get(&chosen[b].0) {
                    Some(x) => d += x,
                    None => {
                        ok = false;
                        break 'pairs;
                    }
                }
            }
        }
        if ok {
            let sum: f64 = chosen.iter().map(|c| c.1).sum();
            all.push(Ranked {
                nodes: chosen.iter().map(|c| c.0.clone()).collect(),
                distance: d,
                score: sum / (1.0 + d as f64),
            });
        }
        for i in (0..pick.len()).rev() {
            pick[i] += 1;
            if pick[i] < cands[i].len() {
                continue 'outer;
            }
            pick[i] = 0;
        }
        break;
    }
    all.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.nodes.cmp(&b.nodes)));
    all.truncate(k);
    all
}

/// Follow `conn` from `start`, step by step, through the neighbor API.
pub fn walk(corpus: &Corpus, start: &DeweyId, conn: &Connection) -> BTreeSet<DeweyId> {
    let node = corpus.node(start).unwrap();
    if node.context != conn.from {
        return BTreeSet::new();
    }
    let all: BTreeSet<EdgeKind> = EdgeKind::ALL.into_iter().collect();
    let mut cur = BTreeSet::from([start.clone()]);
    for st in &conn.steps {
        let mut next = BTreeSet::new();
        for v in &cur {
            let around = corpus.neighbors(v, &all).unwrap();
            for (e, n) in around {
                let ok = match st {
                    Step::Up { name } => e.kind == EdgeKind::ParentChild && n.id.is_ancestor_of(v) && n.name == *name,
                    Step::Down { name } => e.kind == EdgeKind::ParentChild && v.is_ancestor_of(&n.id) && n.name == *name,
                    Step::Link {
                        kind,
                        label,
                        forward,
                        path,
                    } => {
                        e.kind == *kind
                            && e.label.as_deref() == Some(label.as_str())
                            && n.context == *path
                            && if *forward { &e.from == v } else { &e.to == v }
                    }
                };
                if ok {
                    next.insert(n.id.clone());
                }
            }
        }
        cur = next;
    }
    cur
}

/// Nested-loop complete result: every satisfying tuple in which each term
/// pair is joined by one of the chosen connections.
pub fn full_result(corpus: &Corpus, query: &Query) -> BTreeSet<Vec<DeweyId>> {
    let cands = candidates(corpus, query);
    let chosen = query.refinement.selected_connections.clone().unwrap_or_default();
    let m = query.len();
    let mut reach: BTreeMap<(usize, usize), BTreeSet<(DeweyId, DeweyId)>> = BTreeMap::new();
    for l in 0..m {
        for r in l + 1..m {
            let mut ok = BTreeSet::new();
            for cc in chosen.values() {
                for u in cc.uses.iter().filter(|u| u.left == l && u.right == r) {
                    let (from, to) = if u.left_at_from { (l, r) } else { (r, l) };
                    let targets: BTreeSet<&DeweyId> = cands[to].iter().map(|c| &c.0).collect();
                    for (s, _) in &cands[from] {
                        for x in walk(corpus, s, &cc.connection) {
                            if targets.contains(&x) {
                                let pair = if from == l { (s.clone(), x) } else { (x, s.clone()) };
                                ok.insert(pair);
                            }
                        }
                    }
                }
            }
            reach.insert((l, r), ok);
        }
    }
    let mut out = BTreeSet::new();
    if cands.iter().any(Vec::is_empty) {
        return out;
    }
    let mut pick = vec![0usize; m];
    'outer: loop {
        let t: Vec<DeweyId> = pick.iter().enumerate().map(|(i, &j)| cands[i][j].0.clone()).collect();
        let joined = (0..m).all(|l| (l + 1..m).all(|r| reach[&(l, r)].contains(&(t[l].clone(), t[r].clone()))));
        if joined {
            out.insert(t);
        }
        for i in (0..m).rev() {
            pick[i] += 1;
            if pick[i] < cands[i].len() {
                continue 'outer;
            }
            pick[i] = 0;
        }
        break;
    }
    out
}

/// Descendant text of `node`, from a fresh DOM parse of the source.
pub fn dom_content(xml: &str, steps: &[u32]) -> String {
    let doc = roxmltree::Document::parse(xml).unwrap();
    let mut node = doc.root_element();
    // Dewey steps number attributes before element children.
    for &s in &steps[1..] {
        let attrs = node.attributes().count() as u32;
        if s <= attrs {
            return node.attributes().nth((s - 1) as usize).unwrap().value().trim().to_string();
        }
        node = node.children().filter(|c| c.is_element()).nth((s - attrs - 1) as usize).unwrap();
    }
    let mut parts = Vec::new();
    collect(node, &mut parts);
    parts.join(" ")
}

fn collect(node: roxmltree::Node<'_, '_>, out: &mut Vec<String>) {
    for c in node.children() {
        if c.is_text() {
            let t = c.text().unwrap_or("").trim();
            if !t.is_empty() {
                out.push(t.to_string());
            }
        } else if c.is_element() {
            collect(c, out);
        }
    }
}

/// Full match by plain set inclusion.
pub fn full_match(column: &BTreeSet<ContextPath>, contexts: &BTreeSet<ContextPath>) -> bool {
    !column.is_empty() && column.iter().all(|p| contexts.contains(p))
}
