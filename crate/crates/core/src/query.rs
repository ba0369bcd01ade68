//! Query terms, term satisfaction and the textual query grammar.
//!
//! ```text
//! query ::= term (("AND" | "∧") term)*
//! term  ::= "(" context "," search ")"
//! ```
//! `*` as context is the empty context; `*` as search matches anything. A
//! context starting with `/` is a full path, `a | b` is a disjunction, and
//! anything else is a glob over node names.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::connections::ChosenConnection;
use crate::dewey::DeweyId;
use crate::error::{Error, Result};
use crate::path::{ContextPath, canonical_name, glob_match};
use crate::store::{Corpus, DataNode};
use crate::text::{ContentScorer, SearchExpr, name_tokens, tokenize};

pub const DEFAULT_MAX_TERMS: usize = 8;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ContextSpec {
    Empty,
    FullPath(ContextPath),
    NamePattern(String),
    Disjunction(Vec<ContextSpec>),
}

impl ContextSpec {
    pub fn is_empty(&self) -> bool {
        matches!(self, ContextSpec::Empty)
    }

    /// Whether a node on `path` satisfies the context half of a term.
    pub fn matches_path(&self, path: &ContextPath) -> bool {
        match self {
            ContextSpec::Empty => true,
            ContextSpec::FullPath(p) => p == path,
            ContextSpec::NamePattern(pat) => glob_match(pat, path.leaf()),
            ContextSpec::Disjunction(ds) => ds.iter().any(|d| d.matches_path(path)),
        }
    }

    fn validate(&self) -> std::result::Result<(), String> {
        match self {
            ContextSpec::Disjunction(ds) => {
                if ds.is_empty() {
                    return Err("empty disjunction".into());
                }
                for d in ds {
                    match d {
                        ContextSpec::FullPath(_) => {}
                        ContextSpec::NamePattern(p) if !p.is_empty() => {}
                        ContextSpec::NamePattern(_) => return Err("empty name pattern".into()),
                        _ => return Err("disjuncts must be paths or name patterns".into()),
                    }
                }
                Ok(())
            }
            ContextSpec::NamePattern(p) if p.is_empty() => Err("empty name pattern".into()),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for ContextSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContextSpec::Empty => f.write_str("*"),
            ContextSpec::FullPath(p) => write!(f, "{p}"),
            ContextSpec::NamePattern(p) => f.write_str(p),
            ContextSpec::Disjunction(ds) => {
                for (i, d) in ds.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    write!(f, "{d}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QueryTerm {
    pub context: ContextSpec,
    pub search: SearchExpr,
}

impl QueryTerm {
    pub fn new(context: ContextSpec, search: SearchExpr) -> Result<Self> {
        let t = QueryTerm { context, search };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<()> {
        self.context
            .validate()
            .map_err(|message| Error::InvalidQuery { position: 0, message })?;
        if self.context.is_empty() && self.search.is_match_all() {
            return Err(Error::InvalidQuery {
                position: 0,
                message: "a term needs a context or a search expression".into(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for QueryTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.context, self.search)
    }
}

/// User refinements accumulated over a session.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    /// Per term; `None` leaves the term unrestricted.
    #[serde(default)]
    pub selected_contexts: Vec<Option<BTreeSet<ContextPath>>>,
    /// Chosen connections by id; `None` until the user picks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_connections: Option<BTreeMap<String, ChosenConnection>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub terms: Vec<QueryTerm>,
    #[serde(default)]
    pub refinement: Refinement,
}

impl Query {
    pub fn new(terms: Vec<QueryTerm>) -> Result<Self> {
        Self::with_max(terms, DEFAULT_MAX_TERMS)
    }

    pub fn with_max(terms: Vec<QueryTerm>, max_terms: usize) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidQuery {
                position: 0,
                message: "empty query".into(),
            });
        }
        if terms.len() > max_terms {
            return Err(Error::InvalidQuery {
                position: 0,
                message: format!("{} terms exceed the maximum of {max_terms}", terms.len()),
            });
        }
        for t in &terms {
            t.validate()?;
        }
        Ok(Query {
            terms,
            refinement: Refinement::default(),
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with_max(text, DEFAULT_MAX_TERMS)
    }

    pub fn parse_with_max(text: &str, max_terms: usize) -> Result<Self> {
        let terms = parse_terms(text)?;
        Self::with_max(terms, max_terms)
    }

    /// Read either the textual grammar or a JSON document.
    pub fn from_text_or_json(text: &str) -> Result<Self> {
        Self::from_text_or_json_with_max(text, DEFAULT_MAX_TERMS)
    }

    pub fn from_text_or_json_with_max(text: &str, max_terms: usize) -> Result<Self> {
        let trimmed = text.trim_start();
        if trimmed.starts_with('{') {
            let q: Query = serde_json::from_str(trimmed)?;
            let refinement = q.refinement.clone();
            let mut q = Query::with_max(q.terms, max_terms)?;
            q.refinement = refinement;
            return Ok(q);
        }
        Self::parse_with_max(text, max_terms)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Context filter for term `i`, if one was selected.
    pub fn context_filter(&self, i: usize) -> Option<&BTreeSet<ContextPath>> {
        self.refinement.selected_contexts.get(i).and_then(Option::as_ref)
    }

    /// The same terms without any refinement.
    pub fn unrefined(&self) -> Query {
        Query {
            terms: self.terms.clone(),
            refinement: Refinement::default(),
        }
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" AND ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

/// One answer: a node and its path per term.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ResultTuple {
    pub nodes: Vec<DeweyId>,
    pub paths: Vec<ContextPath>,
}

/// Token fields a node is searched over: own text, then name.
pub fn node_fields(node: &DataNode) -> [Vec<String>; 2] {
    [tokenize(&node.text), name_tokens(&node.name)]
}

/// Content score of `node` for `term`, or `None` when the node does not
/// satisfy it.
pub fn term_score(node: &DataNode, term: &QueryTerm, scorer: &dyn ContentScorer) -> Option<f64> {
    if !term.context.matches_path(&node.context) {
        return None;
    }
    let [text, name] = node_fields(node);
    term.search.score(&[&text, &name], scorer)
}

pub fn satisfies(node: &DataNode, term: &QueryTerm, scorer: &dyn ContentScorer) -> bool {
    term_score(node, term, scorer).is_some()
}

/// Check a candidate tuple: arity, satisfaction and the path columns.
pub fn check_tuple(corpus: &Corpus, query: &Query, tuple: &ResultTuple, scorer: &dyn ContentScorer) -> Result<()> {
    if tuple.nodes.len() != query.len() || tuple.paths.len() != query.len() {
        return Err(Error::Internal("tuple arity differs from query".into()));
    }
    for (i, (id, path)) in tuple.nodes.iter().zip(&tuple.paths).enumerate() {
        let node = corpus.node(id)?;
        if &node.context != path {
            return Err(Error::Internal(format!("column {i}: path {path} is not the context of {id}")));
        }
        if !satisfies(node, &query.terms[i], scorer) {
            return Err(Error::Internal(format!("node {id} does not satisfy term {i}")));
        }
    }
    Ok(())
}

fn parse_terms(text: &str) -> Result<Vec<QueryTerm>> {
    let bytes: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    let mut terms = Vec::new();
    let err = |position: usize, message: &str| Error::InvalidQuery {
        position,
        message: message.to_string(),
    };
    let skip_ws = |i: &mut usize| {
        while *i < bytes.len() && bytes[*i].1.is_whitespace() {
            *i += 1;
        }
    };
    let at = |i: usize| bytes.get(i).map(|b| b.0).unwrap_or(text.len());

    skip_ws(&mut i);
    if i == bytes.len() {
        return Err(err(0, "empty query"));
    }
    loop {
        skip_ws(&mut i);
        if i >= bytes.len() || bytes[i].1 != '(' {
            return Err(err(at(i), "expected '('"));
        }
        let open = i;
        i += 1;
        // context runs to the first comma
        let ctx_start = i;
        while i < bytes.len() && bytes[i].1 != ',' && bytes[i].1 != ')' && bytes[i].1 != '(' {
            i += 1;
        }
        if i >= bytes.len() || bytes[i].1 != ',' {
            return Err(err(at(i), "expected ',' after the context"));
        }
        let ctx_text = &text[at(ctx_start)..at(i)];
        let context = parse_context(ctx_text, at(ctx_start))?;
        i += 1;
        // search runs to the matching ')', honoring quotes and nesting
        let search_start = i;
        let mut depth = 0usize;
        let mut in_quote = false;
        while i < bytes.len() {
            match bytes[i].1 {
                '"' => in_quote = !in_quote,
                '(' if !in_quote => depth += 1,
                ')' if !in_quote => {
                    if depth == 0 {
                        break;
                    }
                    depth -= 1;
                }
                _ => {}
            }
            i += 1;
        }
        if i >= bytes.len() {
            return Err(err(at(open), "unclosed '('"));
        }
        let search_text = &text[at(search_start)..at(i)];
        if search_text.trim().is_empty() {
            return Err(err(at(i), "expected a search expression"));
        }
        let search = SearchExpr::parse_at(search_text, at(search_start))?;
        let term = QueryTerm { context, search };
        term.validate().map_err(|e| match e {
            Error::InvalidQuery { message, .. } => err(at(open), &message),
            other => other,
        })?;
        terms.push(term);
        i += 1;

        skip_ws(&mut i);
        if i >= bytes.len() {
            break;
        }
        if bytes[i].1 == '∧' {
            i += 1;
        } else if text[at(i)..].starts_with("AND") {
            i += 3;
        } else {
            return Err(err(at(i), "expected AND between terms"));
        }
    }
    Ok(terms)
}

fn parse_context(raw: &str, position: usize) -> Result<ContextSpec> {
    let t = raw.trim();
    let bad = |message: String| Error::InvalidQuery { position, message };
    if t.is_empty() {
        return Err(bad("expected a context or '*'".into()));
    }
    if t == "*" {
        return Ok(ContextSpec::Empty);
    }
    let one = |part: &str| -> Result<ContextSpec> {
        let part = part.trim();
        if part.is_empty() {
            return Err(bad("empty disjunct".into()));
        }
        if part.starts_with('/') {
            ContextPath::parse(part)
                .map(ContextSpec::FullPath)
                .map_err(|e| bad(e.to_string()))
        } else {
            Ok(ContextSpec::NamePattern(canonical_name(part)))
        }
    };
    if t.contains('|') {
        let ds = t.split('|').map(one).collect::<Result<Vec<_>>>()?;
        return Ok(ContextSpec::Disjunction(ds));
    }
    one(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dewey::DeweyId;
    use crate::store::NodeKind;
    use crate::text::NormalizedTf;
    use proptest::prelude::*;

    fn node(path: &str, text: &str) -> DataNode {
        let context = ContextPath::parse(path).unwrap();
        DataNode {
            id: DeweyId::new(0, vec![1]),
            kind: NodeKind::Element,
            name: context.leaf().to_string(),
            context,
            text: text.to_string(),
        }
    }

    #[test]
    fn query_one_parses() {
        let q = Query::parse(r#"(*, "United States") AND (trade country, *) AND (percentage, *)"#).unwrap();
        assert_eq!(q.len(), 3);
        assert_eq!(q.terms[0].context, ContextSpec::Empty);
        assert_eq!(q.terms[1].context, ContextSpec::NamePattern("trade_country".into()));
        assert_eq!(q.terms[2].search, SearchExpr::MatchAll);
        let again = Query::parse(&q.to_string()).unwrap();
        assert_eq!(again, q);
        let wedge = Query::parse(r#"(*, "United States") ∧ (trade country, *)"#).unwrap();
        assert_eq!(wedge.len(), 2);
    }

    #[test]
    fn parse_errors() {
        for bad in ["", "()", "(a)", "(a, )", "(*, *)", "(a, x", "(a, x) (b, y)", "(/a/*/b, x)", "(a |, x)"] {
            assert!(matches!(Query::parse(bad), Err(Error::InvalidQuery { .. })), "{bad:?}");
        }
        let nine = vec!["(a, x)"; 9].join(" AND ");
        assert!(Query::parse(&nine).is_err());
        assert!(Query::parse_with_max(&nine, 9).is_ok());
    }

    #[test]
    fn satisfaction_cases() {
        let s = &NormalizedTf;
        let romania = node("/country", "Romania");
        let t = Query::parse("(country, Romania)").unwrap().terms.remove(0);
        assert!(satisfies(&romania, &t, s));

        let export_tc = node("/country/economy/export_partners/item/trade_country", "China");
        let full = Query::parse("(/country/economy/import_partners/item/trade_country, *)")
            .unwrap()
            .terms
            .remove(0);
        assert!(!satisfies(&export_tc, &full, s));

        let glob = Query::parse("(trade*, *)").unwrap().terms.remove(0);
        assert!(satisfies(&export_tc, &glob, s));
        assert!(!satisfies(&romania, &glob, s));

        let disj = Query::parse("(percentage | /country, *)").unwrap().terms.remove(0);
        assert!(satisfies(&romania, &disj, s));
        assert!(!satisfies(&export_tc, &disj, s));
    }

    #[test]
    fn json_form() {
        let q = Query::parse("(country, Romania)").unwrap();
        let json = serde_json::to_string(&q).unwrap();
        assert_eq!(Query::from_text_or_json(&json).unwrap(), q);
    }

    proptest! {
        #[test]
        fn context_generality_is_monotone(segs in prop::collection::vec("[a-d]{1,2}", 1..4)) {
            let path = ContextPath::from_segments(&segs).unwrap();
            let full = ContextSpec::FullPath(path.clone());
            let name = ContextSpec::NamePattern(path.leaf().to_string());
            prop_assert!(full.matches_path(&path));
            prop_assert!(name.matches_path(&path));
            prop_assert!(ContextSpec::Empty.matches_path(&path));
        }
    }
}
