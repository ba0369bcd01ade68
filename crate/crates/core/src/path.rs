//! Canonical root-to-leaf context paths.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Canonicalize one element or attribute name: strip a namespace prefix,
/// lowercase, and collapse internal whitespace runs into a single `_`.
///
/// Attribute names keep their leading `@`.
pub fn canonical_name(raw: &str) -> String {
    let trimmed = raw.trim();
    let (attr, body) = match trimmed.strip_prefix('@') {
        Some(rest) => (true, rest.trim()),
        None => (false, trimmed),
    };
    let local = match body.rfind(':') {
        Some(pos) => &body[pos + 1..],
        None => body,
    };
    let mut out = String::with_capacity(local.len() + 1);
    if attr {
        out.push('@');
    }
    let mut pending_space = false;
    for ch in local.chars() {
        if ch.is_whitespace() {
            pending_space = true;
            continue;
        }
        if pending_space && out.len() > usize::from(attr) {
            out.push('_');
        }
        pending_space = false;
        out.extend(ch.to_lowercase());
    }
    out
}

/// A canonical context path such as `/country/economy/import_partners`.
///
/// The canonical string is interned behind an `Arc` so clones are cheap;
/// ordering and hashing follow the string form.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContextPath(Arc<str>);

impl ContextPath {
    pub fn root(name: &str) -> Self {
        ContextPath(Arc::from(format!("/{}", canonical_name(name))))
    }

    pub fn from_segments<I, S>(segments: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut out = String::new();
        for seg in segments {
            let name = canonical_name(seg.as_ref());
            if name.is_empty() || name == "@" {
                return Err(Error::InvalidPath(format!("empty segment in {out}/")));
            }
            out.push('/');
            out.push_str(&name);
        }
        if out.is_empty() {
            return Err(Error::InvalidPath("path has no segments".into()));
        }
        Ok(ContextPath(Arc::from(out)))
    }

    /// Parse and canonicalize a rendered path (`/a/b/@c`).
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let body = text
            .strip_prefix('/')
            .ok_or_else(|| Error::InvalidPath(format!("`{text}` does not start with '/'")))?;
        let segs: Vec<&str> = body.split('/').collect();
        if segs.iter().any(|s| s.contains('*')) {
            return Err(Error::InvalidPath(format!(
                "wildcards are not allowed inside a full path: `{text}`"
            )));
        }
        let path = Self::from_segments(segs)?;
        // attributes are leaves
        let segs = path.segments();
        if segs[..segs.len() - 1].iter().any(|s| s.starts_with('@')) {
            return Err(Error::InvalidPath(format!("attribute with children in `{text}`")));
        }
        Ok(path)
    }

    pub fn child(&self, name: &str) -> Self {
        ContextPath(Arc::from(format!("{}/{}", self.0, canonical_name(name))))
    }

    pub fn parent(&self) -> Option<Self> {
        let pos = self.0.rfind('/')?;
        if pos == 0 {
            None
        } else {
            Some(ContextPath(Arc::from(&self.0[..pos])))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn segments(&self) -> Vec<&str> {
        self.0[1..].split('/').collect()
    }

    pub fn depth(&self) -> usize {
        self.0.matches('/').count()
    }

    pub fn leaf(&self) -> &str {
        let pos = self.0.rfind('/').unwrap_or(0);
        &self.0[pos + 1..]
    }

    /// True when `self` is a proper or improper prefix of `other`.
    pub fn is_prefix_of(&self, other: &ContextPath) -> bool {
        other.0.starts_with(&*self.0)
            && (other.0.len() == self.0.len() || other.0.as_bytes()[self.0.len()] == b'/')
    }

    /// All prefixes from the root down to and including `self`.
    pub fn prefixes(&self) -> Vec<ContextPath> {
        let mut out = Vec::with_capacity(self.depth());
        for (pos, _) in self.0.match_indices('/').skip(1) {
            out.push(ContextPath(Arc::from(&self.0[..pos])));
        }
        out.push(self.clone());
        out
    }
}

impl fmt::Display for ContextPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for ContextPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl std::str::FromStr for ContextPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl Serialize for ContextPath {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for ContextPath {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        ContextPath::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Glob match over canonical names; `*` matches any (possibly empty) run.
pub fn glob_match(pattern: &str, name: &str) -> bool {
    let p: Vec<char> = pattern.chars().collect();
    let n: Vec<char> = name.chars().collect();
    let (mut pi, mut ni) = (0, 0);
    let mut star: Option<(usize, usize)> = None;
    while ni < n.len() {
        if pi < p.len() && p[pi] == '*' {
            star = Some((pi, ni));
            pi += 1;
        } else if pi < p.len() && p[pi] == n[ni] {
            pi += 1;
            ni += 1;
        } else if let Some((sp, sn)) = star {
            pi = sp + 1;
            ni = sn + 1;
            star = Some((sp, sn + 1));
        } else {
            return false;
        }
    }
    p[pi..].iter().all(|&c| c == '*')
}
