use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Hierarchical node identifier: document ordinal plus child ordinals from
/// the document root. The root element of a document is `doc:1`.
///
/// The derived ordering compares `doc` first and then `steps`
/// lexicographically, which is document (pre-)order.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DeweyId {
    pub doc: u32,
    pub steps: Vec<u32>,
}

impl DeweyId {
    pub fn new(doc: u32, steps: Vec<u32>) -> Self {
        DeweyId { doc, steps }
    }

    pub fn depth(&self) -> usize {
        self.steps.len()
    }

    pub fn parent(&self) -> Option<DeweyId> {
        if self.steps.len() <= 1 {
            return None;
        }
        Some(DeweyId {
            doc: self.doc,
            steps: self.steps[..self.steps.len() - 1].to_vec(),
        })
    }

    pub fn child(&self, ordinal: u32) -> DeweyId {
        let mut steps = self.steps.clone();
        steps.push(ordinal);
        DeweyId { doc: self.doc, steps }
    }

    /// Strict ancestor test within one document.
    pub fn is_ancestor_of(&self, other: &DeweyId) -> bool {
        self.doc == other.doc
            && self.steps.len() < other.steps.len()
            && other.steps.starts_with(&self.steps)
    }
}

impl fmt::Display for DeweyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.doc)?;
        for (i, s) in self.steps.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for DeweyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for DeweyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("malformed Dewey id `{s}`"));
        let (doc, rest) = s.split_once(':').ok_or_else(bad)?;
        let doc = doc.trim().parse().map_err(|_| bad())?;
        let steps = rest
            .split('.')
            .map(|p| p.trim().parse::<u32>().ok().filter(|v| *v > 0))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(bad)?;
        if steps.is_empty() {
            return Err(bad());
        }
        Ok(DeweyId { doc, steps })
    }
}

impl Serialize for DeweyId {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DeweyId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
