//! Descriptive actor attributes (selectors).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An `attribute = value` equality test.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Selector {
    pub attribute: String,
    pub value: String,
}

impl Selector {
    pub fn new(attribute: impl Into<String>, value: impl Into<String>) -> Self {
        Self { attribute: attribute.into(), value: value.into() }
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.attribute, self.value)
    }
}

impl FromStr for Selector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, v) = s
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("selector `{s}` is not of the form attribute=value")))?;
        Ok(Self::new(a.trim(), v.trim()))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AttributeTable {
    actors: BTreeMap<String, BTreeSet<Selector>>,
}

impl AttributeTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, actor: impl Into<String>, selector: Selector) {
        self.actors.entry(actor.into()).or_default().insert(selector);
    }

    /// Registers an actor without selectors.
    pub fn touch(&mut self, actor: impl Into<String>) {
        self.actors.entry(actor.into()).or_default();
    }

    pub fn selectors(&self, actor: &str) -> Option<&BTreeSet<Selector>> {
        self.actors.get(actor)
    }

    pub fn actors(&self) -> impl Iterator<Item = (&str, &BTreeSet<Selector>)> {
        self.actors.iter().map(|(a, s)| (a.as_str(), s))
    }

    pub fn len(&self) -> usize {
        self.actors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actors.is_empty()
    }

    /// Actors carrying every selector in `pattern`.
    pub fn matching<'a>(&'a self, pattern: &'a [Selector]) -> impl Iterator<Item = &'a str> + 'a {
        self.actors
            .iter()
            .filter(move |(_, s)| pattern.iter().all(|p| s.contains(p)))
            .map(|(a, _)| a.as_str())
    }

    /// Single-attribute partition: actor -> value of `attribute`. Actors with
    /// several values for the attribute keep the smallest one.
    pub fn partition_by(&self, attribute: &str) -> crate::netstats::Partition {
        let mut p = crate::netstats::Partition::new();
        for (actor, sels) in &self.actors {
            if let Some(s) = sels.iter().find(|s| s.attribute == attribute) {
                p.assign(actor.clone(), s.value.clone());
            }
        }
        p
    }
}

impl FromIterator<(String, Selector)> for AttributeTable {
    fn from_iter<T: IntoIterator<Item = (String, Selector)>>(iter: T) -> Self {
        let mut t = Self::new();
        for (a, s) in iter {
            t.insert(a, s);
        }
        t
    }
}
