//! Exact-match entity-level precision, recall and F1.

use std::collections::BTreeMap;
use std::fmt;

use crate::corpus::Instance;
use crate::error::{Error, Result};
use crate::tags::{EntityType, Tag};

/// Inclusive token span of one entity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntitySpan {
    pub etype: EntityType,
    pub start: usize,
    pub end: usize,
}

/// Maximal `B-X I-X*` runs. A stray `I-X` (after `O` or another type) opens a
/// new span rather than being dropped.
pub fn extract_spans(labels: &[Tag]) -> Vec<EntitySpan> {
    let mut spans = Vec::new();
    let mut open: Option<EntitySpan> = None;
    for (i, tag) in labels.iter().enumerate() {
        match tag {
            Tag::Inside(t) if open.as_ref().is_some_and(|s| &s.etype == t) => {
                if let Some(s) = open.as_mut() {
                    s.end = i;
                }
            }
            Tag::Begin(t) | Tag::Inside(t) => {
                spans.extend(open.take());
                open = Some(EntitySpan {
                    etype: t.clone(),
                    start: i,
                    end: i,
                });
            }
            Tag::Outside => spans.extend(open.take()),
        }
    }
    spans.extend(open);
    spans
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Counts {
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        }
    }

    /// Gold spans of this type.
    pub fn support(&self) -> usize {
        self.tp + self.fn_
    }

    fn add(&mut self, other: Counts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Per-type and micro-averaged overall scores.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalResult {
    pub per_type: BTreeMap<EntityType, Counts>,
    pub overall: Counts,
}

impl EvalResult {
    pub fn precision(&self) -> f64 {
        self.overall.precision()
    }

    pub fn recall(&self) -> f64 {
        self.overall.recall()
    }

    pub fn f1(&self) -> f64 {
        self.overall.f1()
    }

    pub fn type_counts(&self, ty: &str) -> Counts {
        self.per_type
            .iter()
            .find(|(t, _)| t.as_str() == ty)
            .map(|(_, c)| *c)
            .unwrap_or_default()
    }
}

impl fmt::Display for EvalResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<8}{:>8}{:>8}{:>8}{:>9}", "type", "P", "R", "F1", "support")?;
        let row = |f: &mut fmt::Formatter<'_>, name: &str, c: &Counts| {
            writeln!(
                f,
                "{:<8}{:>8.2}{:>8.2}{:>8.2}{:>9}",
                name,
                100.0 * c.precision(),
                100.0 * c.recall(),
                100.0 * c.f1(),
                c.support()
            )
        };
        for (t, c) in &self.per_type {
            row(f, t.as_str(), c)?;
        }
        row(f, "overall", &self.overall)
    }
}

/// Scores aligned gold/predicted label sequences.
pub fn entity_f1_labels<G: AsRef<[Tag]>, P: AsRef<[Tag]>>(gold: &[G], pred: &[P]) -> Result<EvalResult> {
    if gold.len() != pred.len() {
        return Err(Error::Data(format!(
            "{} gold sequences but {} predicted",
            gold.len(),
            pred.len()
        )));
    }
    let mut per_type: BTreeMap<EntityType, Counts> = BTreeMap::new();
    for (i, (g, p)) in gold.iter().zip(pred).enumerate() {
        let (g, p) = (g.as_ref(), p.as_ref());
        if g.len() != p.len() {
            return Err(Error::Data(format!(
                "sequence {i}: {} gold labels but {} predicted",
                g.len(),
                p.len()
            )));
        }
        let gold_spans = extract_spans(g);
        let mut unmatched: Vec<Option<EntitySpan>> = gold_spans.iter().cloned().map(Some).collect();
        for span in extract_spans(p) {
            let hit = unmatched.iter_mut().find(|s| s.as_ref() == Some(&span));
            let c = per_type.entry(span.etype.clone()).or_default();
            match hit {
                Some(slot) => {
                    *slot = None;
                    c.tp += 1;
                }
                None => c.fp += 1,
            }
        }
        for span in unmatched.into_iter().flatten() {
            per_type.entry(span.etype).or_default().fn_ += 1;
        }
    }
    let mut overall = Counts::default();
    for c in per_type.values() {
        overall.add(*c);
    }
    Ok(EvalResult { per_type, overall })
}

pub fn entity_f1<P: AsRef<[Tag]>>(gold: &[Instance], pred: &[P]) -> Result<EvalResult> {
    let labels: Vec<&[Tag]> = gold.iter().map(Instance::labels).collect();
    entity_f1_labels(&labels, pred)
}
