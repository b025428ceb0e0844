use std::fmt;

use super::Instance;
use crate::tags::{EntityType, Tag, TagSet};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TypeCounts {
    /// Entity spans.
    pub entities: usize,
    /// Tokens inside entity spans.
    pub tokens: usize,
}

/// Span and token counts per entity type, plus a totals row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistributionTable {
    pub rows: Vec<(EntityType, TypeCounts)>,
    pub total: TypeCounts,
}

impl DistributionTable {
    pub fn get(&self, ty: &str) -> TypeCounts {
        self.rows
            .iter()
            .find(|(t, _)| t.as_str() == ty)
            .map(|(_, c)| *c)
            .unwrap_or_default()
    }
}

impl fmt::Display for DistributionTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<8}{:>14}{:>13}", "type", "entity-level", "token-level")?;
        for (ty, c) in &self.rows {
            writeln!(f, "{:<8}{:>14}{:>13}", ty.as_str(), c.entities, c.tokens)?;
        }
        write!(f, "{:<8}{:>14}{:>13}", "Total", self.total.entities, self.total.tokens)
    }
}

/// Counts gold spans (a `B-X` followed by its `I-X` run) and their tokens.
/// Rows follow `tagset` order; types outside the tag set are appended in
/// order of appearance.
pub fn entity_distribution<'a>(instances: impl IntoIterator<Item = &'a Instance>, tagset: &TagSet) -> DistributionTable {
    let mut rows: Vec<(EntityType, TypeCounts)> = tagset.types().iter().map(|t| (t.clone(), TypeCounts::default())).collect();
    let row_of = |ty: &EntityType, rows: &mut Vec<(EntityType, TypeCounts)>| -> usize {
        match rows.iter().position(|(t, _)| t == ty) {
            Some(i) => i,
            None => {
                rows.push((ty.clone(), TypeCounts::default()));
                rows.len() - 1
            }
        }
    };
    for inst in instances {
        for tag in inst.labels() {
            match tag {
                Tag::Begin(ty) => {
                    let r = row_of(ty, &mut rows);
                    rows[r].1.entities += 1;
                    rows[r].1.tokens += 1;
                }
                Tag::Inside(ty) => {
                    let r = row_of(ty, &mut rows);
                    rows[r].1.tokens += 1;
                }
                Tag::Outside => {}
            }
        }
    }
    let total = rows.iter().fold(TypeCounts::default(), |acc, (_, c)| TypeCounts {
        entities: acc.entities + c.entities,
        tokens: acc.tokens + c.tokens,
    });
    DistributionTable { rows, total }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::InstanceId;

    fn inst(labels: &str) -> Instance {
        let ts = TagSet::default();
        let tags: Vec<Tag> = labels.split(' ').map(|l| ts.parse_tag(l).unwrap()).collect();
        let toks = (0..tags.len()).map(|i| format!("t{i}")).collect();
        Instance::new(InstanceId(0), 2014, toks, tags).unwrap()
    }

    #[test]
    fn hand_count() {
        let d = entity_distribution([&inst("B-PER I-PER O B-ORG")], &TagSet::default());
        assert_eq!(d.get("PER"), TypeCounts { entities: 1, tokens: 2 });
        assert_eq!(d.get("ORG"), TypeCounts { entities: 1, tokens: 1 });
        assert_eq!(d.get("LOC"), TypeCounts::default());
        assert_eq!(d.total, TypeCounts { entities: 2, tokens: 3 });
        let names: Vec<&str> = d.rows.iter().map(|(t, _)| t.as_str()).collect();
        assert_eq!(names, ["PER", "LOC", "ORG"]);
    }

    #[test]
    fn all_outside() {
        let d = entity_distribution([&inst("O O O")], &TagSet::default());
        assert_eq!(d.total, TypeCounts::default());
    }

    #[test]
    fn adjacent_spans_of_same_type() {
        let d = entity_distribution([&inst("B-LOC B-LOC I-LOC")], &TagSet::default());
        assert_eq!(d.get("LOC"), TypeCounts { entities: 2, tokens: 3 });
    }
}
