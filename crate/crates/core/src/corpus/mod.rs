//! Labeled instances grouped by year, plus I/O, splitting and statistics.

mod conll;
mod distribution;
pub mod generator;
mod split;

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::tags::Tag;
use crate::textproc::{normalize_token, TokenSeq};

pub use conll::{parse_conll, parse_conll_with, parse_label_columns, serialize_conll, ConllOptions, LabeledSeq};
pub use distribution::{entity_distribution, DistributionTable, TypeCounts};
pub use generator::{generate_drift_corpus, GeneratorConfig, PoolHistory};
pub use split::split_eval;

/// Stable instance identifier. Defaults to the instance's ordinal in its source file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InstanceId(pub u64);

impl fmt::Display for InstanceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One sentence/tweet with gold BIO labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub id: InstanceId,
    pub year: i32,
    raw_tokens: Vec<String>,
    norm_tokens: TokenSeq,
    labels: Vec<Tag>,
}

impl Instance {
    pub fn new(id: InstanceId, year: i32, raw_tokens: Vec<String>, labels: Vec<Tag>) -> Result<Self> {
        if raw_tokens.is_empty() {
            return Err(Error::Data(format!("instance {id} has no tokens")));
        }
        if raw_tokens.len() != labels.len() {
            return Err(Error::Data(format!(
                "instance {id}: {} tokens but {} labels",
                raw_tokens.len(),
                labels.len()
            )));
        }
        let norm_tokens = TokenSeq::new(raw_tokens.iter().map(|t| normalize_token(t)).collect())?;
        Ok(Instance {
            id,
            year,
            raw_tokens,
            norm_tokens,
            labels,
        })
    }

    pub fn raw_tokens(&self) -> &[String] {
        &self.raw_tokens
    }

    pub fn norm_tokens(&self) -> &TokenSeq {
        &self.norm_tokens
    }

    pub fn labels(&self) -> &[Tag] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.raw_tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw_tokens.is_empty()
    }
}

/// Instances partitioned by year. Ids are unique across the whole corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TemporalCorpus {
    partitions: BTreeMap<i32, Vec<Instance>>,
}

impl TemporalCorpus {
    /// Groups instances by year, keeping their relative order within a year.
    pub fn from_instances(instances: impl IntoIterator<Item = Instance>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut partitions: BTreeMap<i32, Vec<Instance>> = BTreeMap::new();
        for inst in instances {
            if !seen.insert(inst.id) {
                return Err(Error::Data(format!("duplicate instance id {}", inst.id)));
            }
            partitions.entry(inst.year).or_default().push(inst);
        }
        Ok(TemporalCorpus { partitions })
    }

    pub fn years(&self) -> impl Iterator<Item = i32> + '_ {
        self.partitions.keys().copied()
    }

    pub fn partition(&self, year: i32) -> Option<&[Instance]> {
        self.partitions.get(&year).map(Vec::as_slice)
    }

    pub fn partitions(&self) -> &BTreeMap<i32, Vec<Instance>> {
        &self.partitions
    }

    /// All instances, years ascending.
    pub fn instances(&self) -> impl Iterator<Item = &Instance> + '_ {
        self.partitions.values().flatten()
    }

    pub fn len(&self) -> usize {
        self.partitions.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
