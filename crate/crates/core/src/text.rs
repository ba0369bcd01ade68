//! Tokenization, full-text search expressions and content scoring.
//!
//! A node is matched against two token fields: its own text and the tokens of
//! its canonical name (`trade_country` gives `trade`, `country`).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lowercased alphanumeric runs. Numbers are kept.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

/// Tokens of a canonical node name (attribute marker dropped).
pub fn name_tokens(name: &str) -> Vec<String> {
    tokenize(name.trim_start_matches('@'))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op", content = "args", rename_all = "snake_case")]
pub enum SearchExpr {
    /// `*`: no content constraint.
    MatchAll,
    Term(String),
    /// Consecutive tokens within one field.
    Phrase(Vec<String>),
    And(Vec<SearchExpr>),
    Or(Vec<SearchExpr>),
    Not(Box<SearchExpr>),
}

impl SearchExpr {
    pub fn is_match_all(&self) -> bool {
        matches!(self, SearchExpr::MatchAll)
    }

    /// Parse the search half of a query term: quoted phrases, bare keywords
    /// (juxtaposition means AND), `AND`, `OR`, `NOT`, parentheses and `*`.
    pub fn parse(text: &str) -> Result<SearchExpr> {
        SearchParser::new(text, 0).parse_all()
    }

    pub(crate) fn parse_at(text: &str, base: usize) -> Result<SearchExpr> {
        SearchParser::new(text, base).parse_all()
    }

    /// Every positive keyword mentioned, in order of appearance.
    pub fn keywords(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_keywords(&mut out);
        out
    }

    fn collect_keywords<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            SearchExpr::MatchAll | SearchExpr::Not(_) => {}
            SearchExpr::Term(t) => out.push(t),
            SearchExpr::Phrase(ts) => out.extend(ts.iter().map(String::as_str)),
            SearchExpr::And(xs) | SearchExpr::Or(xs) => xs.iter().for_each(|x| x.collect_keywords(out)),
        }
    }

    /// Score a node's token fields; `None` when the expression is not satisfied.
    pub fn score(&self, fields: &[&[String]], scorer: &dyn ContentScorer) -> Option<f64> {
        match self {
            SearchExpr::MatchAll => Some(1.0),
            SearchExpr::Term(t) => fields
                .iter()
                .filter_map(|f| {
                    let tf = f.iter().filter(|x| *x == t).count();
                    (tf > 0).then(|| scorer.term_score(tf, f.len()))
                })
                .reduce(f64::max),
            SearchExpr::Phrase(ts) => fields
                .iter()
                .filter(|f| contains_phrase(f, ts))
                .map(|f| {
                    ts.iter()
                        .map(|t| scorer.term_score(f.iter().filter(|x| *x == t).count(), f.len()))
                        .fold(f64::INFINITY, f64::min)
                })
                .reduce(f64::max),
            SearchExpr::And(xs) => {
                let mut acc = f64::INFINITY;
                for x in xs {
                    acc = acc.min(x.score(fields, scorer)?);
                }
                Some(if acc.is_finite() { acc } else { 1.0 })
            }
            SearchExpr::Or(xs) => xs.iter().filter_map(|x| x.score(fields, scorer)).reduce(f64::max),
            SearchExpr::Not(x) => match x.score(fields, scorer) {
                Some(_) => None,
                None => Some(1.0),
            },
        }
    }
}

fn contains_phrase(field: &[String], phrase: &[String]) -> bool {
    !phrase.is_empty() && field.windows(phrase.len()).any(|w| w == phrase)
}

impl fmt::Display for SearchExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, x: &SearchExpr) -> fmt::Result {
            match x {
                SearchExpr::And(_) | SearchExpr::Or(_) => write!(f, "({x})"),
                _ => write!(f, "{x}"),
            }
        }
        match self {
            SearchExpr::MatchAll => f.write_str("*"),
            SearchExpr::Term(t) => f.write_str(t),
            SearchExpr::Phrase(ts) => write!(f, "\"{}\"", ts.join(" ")),
            SearchExpr::And(xs) | SearchExpr::Or(xs) => {
                let op = if matches!(self, SearchExpr::And(_)) { " AND " } else { " OR " };
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(op)?;
                    }
                    child(f, x)?;
                }
                Ok(())
            }
            SearchExpr::Not(x) => {
                f.write_str("NOT ")?;
                match **x {
                    SearchExpr::Not(_) => write!(f, "({x})"),
                    _ => child(f, x),
                }
            }
        }
    }
}

/// Content score of a single term occurrence count within a field.
pub trait ContentScorer: Send + Sync + fmt::Debug {
    fn term_score(&self, tf: usize, field_len: usize) -> f64;
}

/// `tf / field length`, always in `(0, 1]` for a present term.
#[derive(Clone, Copy, Debug, Default)]
pub struct NormalizedTf;

impl ContentScorer for NormalizedTf {
    fn term_score(&self, tf: usize, field_len: usize) -> f64 {
        if field_len == 0 {
            0.0
        } else {
            tf as f64 / field_len as f64
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Word(String),
    Quoted(String),
    Star,
    And,
    Or,
    Not,
    LParen,
    RParen,
}

struct SearchParser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    unterminated: Option<usize>,
}

impl SearchParser {
    fn new(text: &str, base: usize) -> Self {
        let mut toks = Vec::new();
        let mut chars = text.char_indices().peekable();
        let mut err_quote = None;
        while let Some(&(i, c)) = chars.peek() {
            if c.is_whitespace() {
                chars.next();
            } else if c == '(' || c == ')' {
                chars.next();
                toks.push((base + i, if c == '(' { Tok::LParen } else { Tok::RParen }));
            } else if c == '"' {
                chars.next();
                let mut s = String::new();
                let mut closed = false;
                for (_, c) in chars.by_ref() {
                    if c == '"' {
                        closed = true;
                        break;
                    }
                    s.push(c);
                }
                if !closed {
                    err_quote = Some(base + i);
                }
                toks.push((base + i, Tok::Quoted(s)));
            } else {
                let mut s = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == '"' {
                        break;
                    }
                    s.push(c);
                    chars.next();
                }
                let tok = match s.as_str() {
                    "*" => Tok::Star,
                    "AND" | "∧" => Tok::And,
                    "OR" | "∨" => Tok::Or,
                    "NOT" | "¬" => Tok::Not,
                    _ => Tok::Word(s),
                };
                toks.push((base + i, tok));
            }
        }
        SearchParser {
            toks,
            pos: 0,
            end: base + text.len(),
            unterminated: err_quote,
        }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        let position = self.toks.get(self.pos).map(|t| t.0).unwrap_or(self.end);
        Error::InvalidQuery {
            position,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn parse_all(mut self) -> Result<SearchExpr> {
        if let Some(position) = self.unterminated {
            return Err(Error::InvalidQuery {
                position,
                message: "unterminated phrase".into(),
            });
        }
        if self.toks.is_empty() {
            return Err(self.err("empty search expression"));
        }
        let e = self.parse_or()?;
        if self.pos < self.toks.len() {
            return Err(self.err("unexpected token"));
        }
        Ok(e)
    }

    fn parse_or(&mut self) -> Result<SearchExpr> {
        let mut xs = vec![self.parse_and()?];
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            xs.push(self.parse_and()?);
        }
        Ok(if xs.len() == 1 { xs.pop().unwrap() } else { SearchExpr::Or(xs) })
    }

    fn parse_and(&mut self) -> Result<SearchExpr> {
        let mut xs = vec![self.parse_unary()?];
        loop {
            match self.peek() {
                Some(Tok::And) => {
                    self.pos += 1;
                    xs.push(self.parse_unary()?);
                }
                Some(Tok::Word(_) | Tok::Quoted(_) | Tok::Not | Tok::LParen | Tok::Star) => {
                    xs.push(self.parse_unary()?);
                }
                _ => break,
            }
        }
        Ok(if xs.len() == 1 { xs.pop().unwrap() } else { SearchExpr::And(xs) })
    }

    fn parse_unary(&mut self) -> Result<SearchExpr> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.err("expected a keyword"));
        };
        match tok {
            Tok::Not => {
                self.pos += 1;
                Ok(SearchExpr::Not(Box::new(self.parse_unary()?)))
            }
            Tok::LParen => {
                self.pos += 1;
                let e = self.parse_or()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(e)
            }
            Tok::Star => {
                self.pos += 1;
                Ok(SearchExpr::MatchAll)
            }
            Tok::Word(w) | Tok::Quoted(w) => {
                let quoted = matches!(self.peek(), Some(Tok::Quoted(_)));
                let mut ts = tokenize(&w);
                if ts.is_empty() {
                    return Err(self.err(if quoted {
                        "empty phrase"
                    } else {
                        "keyword has no searchable characters"
                    }));
                }
                self.pos += 1;
                Ok(if ts.len() == 1 {
                    SearchExpr::Term(ts.pop().unwrap())
                } else {
                    SearchExpr::Phrase(ts)
                })
            }
            Tok::And | Tok::Or | Tok::RParen => Err(self.err("expected a keyword")),
        }
    }
}
