//! BIO tags and the configurable entity-type inventory.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Entity category such as `PER`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntityType(Arc<str>);

impl EntityType {
    pub fn new(name: &str) -> Self {
        EntityType(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tag {
    Outside,
    Begin(EntityType),
    Inside(EntityType),
}

impl Tag {
    pub fn entity_type(&self) -> Option<&EntityType> {
        match self {
            Tag::Outside => None,
            Tag::Begin(t) | Tag::Inside(t) => Some(t),
        }
    }

    pub fn is_inside(&self) -> bool {
        matches!(self, Tag::Inside(_))
    }

    /// Whether `self` may directly follow `prev` in a well-formed BIO sequence.
    /// `prev = None` means sequence start.
    pub fn may_follow(&self, prev: Option<&Tag>) -> bool {
        match self {
            Tag::Inside(t) => matches!(prev, Some(Tag::Begin(p)) | Some(Tag::Inside(p)) if p == t),
            _ => true,
        }
    }
}

impl fmt::Debug for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::Outside => f.write_str("O"),
            Tag::Begin(t) => write!(f, "B-{t}"),
            Tag::Inside(t) => write!(f, "I-{t}"),
        }
    }
}

/// Checks a whole sequence for BIO well-formedness; returns the first offending position.
pub fn first_bio_violation(tags: &[Tag]) -> Option<usize> {
    let mut prev = None;
    for (i, t) in tags.iter().enumerate() {
        if !t.may_follow(prev) {
            return Some(i);
        }
        prev = Some(t);
    }
    None
}

/// Entity types admitted by a corpus, in a fixed order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagSet {
    types: Vec<EntityType>,
}

impl Default for TagSet {
    fn default() -> Self {
        TagSet::new(["PER", "LOC", "ORG"]).expect("builtin types are valid")
    }
}

impl TagSet {
    pub fn new<'a>(names: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let mut types: Vec<EntityType> = Vec::new();
        for n in names {
            if n.is_empty() || n.chars().any(char::is_whitespace) {
                return Err(Error::Config(format!("invalid entity type name {n:?}")));
            }
            let t = EntityType::new(n);
            if types.contains(&t) {
                return Err(Error::Config(format!("duplicate entity type {n}")));
            }
            types.push(t);
        }
        Ok(TagSet { types })
    }

    pub fn types(&self) -> &[EntityType] {
        &self.types
    }

    pub fn entity_type(&self, name: &str) -> Option<&EntityType> {
        self.types.iter().find(|t| t.as_str() == name)
    }

    /// `O` first, then `B-X, I-X` for each type in order.
    pub fn labels(&self) -> Vec<Tag> {
        let mut out = vec![Tag::Outside];
        for t in &self.types {
            out.push(Tag::Begin(t.clone()));
            out.push(Tag::Inside(t.clone()));
        }
        out
    }

    /// Parses `O`, `B-X` or `I-X`; `None` for anything else, including unknown types.
    pub fn parse_tag(&self, s: &str) -> Option<Tag> {
        if s == "O" {
            return Some(Tag::Outside);
        }
        let (prefix, ty) = s.split_once('-')?;
        let ty = self.entity_type(ty)?.clone();
        match prefix {
            "B" => Some(Tag::Begin(ty)),
            "I" => Some(Tag::Inside(ty)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_label_order() {
        let names: Vec<String> = TagSet::default().labels().iter().map(|t| t.to_string()).collect();
        assert_eq!(names, ["O", "B-PER", "I-PER", "B-LOC", "I-LOC", "B-ORG", "I-ORG"]);
    }

    #[test]
    fn parse_tag_rejects_unknown() {
        let ts = TagSet::default();
        assert_eq!(ts.parse_tag("B-PER").unwrap().to_string(), "B-PER");
        assert!(ts.parse_tag("B-MISC").is_none());
        assert!(ts.parse_tag("X-PER").is_none());
        assert!(ts.parse_tag("o").is_none());
    }

    #[test]
    fn bio_validity() {
        let ts = TagSet::default();
        let seq = |s: &str| -> Vec<Tag> { s.split(' ').map(|x| ts.parse_tag(x).unwrap()).collect() };
        assert_eq!(first_bio_violation(&seq("B-PER I-PER O")), None);
        assert_eq!(first_bio_violation(&seq("O I-PER")), Some(1));
        assert_eq!(first_bio_violation(&seq("I-LOC")), Some(0));
        assert_eq!(first_bio_violation(&seq("B-PER I-LOC")), Some(1));
    }
}
