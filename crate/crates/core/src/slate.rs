use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of an item in the corpus (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItemId(pub usize);

/// Index of a user in the finite population (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserId(pub usize);

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An ordered list of distinct items; position 1 is `items()[0]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Slate(Vec<ItemId>);

impl Slate {
    /// Validates length, distinctness and corpus membership.
    pub fn new(items: Vec<ItemId>, slate_size: usize, corpus_size: usize) -> Result<Self> {
        if items.len() != slate_size {
            return Err(Error::invalid(format!(
                "slate has {} items, expected {slate_size}",
                items.len()
            )));
        }
        let mut seen = vec![false; corpus_size];
        for item in &items {
            if item.0 >= corpus_size {
                return Err(Error::invalid(format!(
                    "item {item} outside corpus of size {corpus_size}"
                )));
            }
            if std::mem::replace(&mut seen[item.0], true) {
                return Err(Error::invalid(format!("item {item} appears twice in slate")));
            }
        }
        Ok(Slate(items))
    }

    pub(crate) fn from_indices_unchecked(items: &[usize]) -> Self {
        Slate(items.iter().map(|&i| ItemId(i)).collect())
    }

    pub fn items(&self) -> &[ItemId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Item at a 1-based position.
    pub fn at_position(&self, position: usize) -> ItemId {
        self.0[position - 1]
    }

    pub fn contains(&self, item: ItemId) -> bool {
        self.0.contains(&item)
    }

    /// 0-based position of `item`, if present.
    pub fn position_of(&self, item: ItemId) -> Option<usize> {
        self.0.iter().position(|&i| i == item)
    }

    /// Item ids joined by `;`, the form used in CSV output.
    pub fn joined(&self) -> String {
        self.0
            .iter()
            .map(|i| i.0.to_string())
            .collect::<Vec<_>>()
            .join(";")
    }

    /// Inverse of [`Slate::joined`], without corpus validation.
    pub fn parse_joined(s: &str) -> Result<Self> {
        s.split(';')
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .map(ItemId)
                    .map_err(|_| Error::invalid(format!("bad item id {p:?} in slate {s:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Slate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_slates() {
        assert!(Slate::new(vec![ItemId(0), ItemId(1)], 3, 5).is_err());
        assert!(Slate::new(vec![ItemId(0), ItemId(0)], 2, 5).is_err());
        assert!(Slate::new(vec![ItemId(0), ItemId(7)], 2, 5).is_err());
        let s = Slate::new(vec![ItemId(4), ItemId(1)], 2, 5).unwrap();
        assert_eq!(s.at_position(1), ItemId(4));
        assert_eq!(s.position_of(ItemId(1)), Some(1));
    }

    #[test]
    fn joined_round_trip() {
        let s = Slate::new(vec![ItemId(7), ItemId(0), ItemId(3)], 3, 10).unwrap();
        assert_eq!(s.joined(), "7;0;3");
        assert_eq!(Slate::parse_joined(&s.joined()).unwrap(), s);
        assert!(Slate::parse_joined("1;x").is_err());
    }
}
