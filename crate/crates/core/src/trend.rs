//! Emerging-trend scoring of n-grams and instances, and ranked batch selection.
//!
//! An n-gram's trend score contrasts its frequency in a recent corpus against
//! a past corpus:
//!
//! ```text
//! score(g) = (f_recent(g) - f_past(g)) / (f_past(g) + k)
//! ```
//!
//! An instance scores the plain sum over its (stop-word filtered) n-gram
//! windows, duplicates included.

use std::borrow::Borrow;
use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::str::FromStr;

use rayon::prelude::*;

use crate::corpus::{Instance, InstanceId};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::textproc::{ngram_windows, Ngram, StopwordSet};

pub const DEFAULT_K: f64 = 0.1;
pub const DEFAULT_ORDER: usize = 2;

const TABLE_CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum FrequencyMode {
    /// Raw occurrence counts.
    #[default]
    Raw,
    /// Counts divided by the table's total n-gram count.
    Relative,
}

impl FromStr for FrequencyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(FrequencyMode::Raw),
            "relative" => Ok(FrequencyMode::Relative),
            _ => Err(Error::Config(format!("frequency mode must be raw or relative, got {s:?}"))),
        }
    }
}

impl std::fmt::Display for FrequencyMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FrequencyMode::Raw => "raw",
            FrequencyMode::Relative => "relative",
        })
    }
}

/// N-gram occurrence counts for one corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgramTable {
    counts: HashMap<Ngram, u64>,
    order: usize,
    total: u64,
    mode: FrequencyMode,
}

impl NgramTable {
    pub fn new(order: usize, mode: FrequencyMode) -> Self {
        assert!(order >= 1, "n-gram order must be positive");
        NgramTable {
            counts: HashMap::new(),
            order,
            total: 0,
            mode,
        }
    }

    /// Counts the kept windows of one token sequence.
    pub fn add_tokens(&mut self, tokens: &[String], stopwords: &StopwordSet) {
        for w in ngram_windows(tokens, self.order, stopwords) {
            match self.counts.get_mut(w) {
                Some(c) => *c += 1,
                None => {
                    self.counts.insert(Ngram::from(w), 1);
                }
            }
            self.total += 1;
        }
    }

    /// Associative merge: counts add, totals add.
    pub fn merge(mut self, other: NgramTable) -> Result<NgramTable> {
        if self.order != other.order || self.mode != other.mode {
            return Err(Error::Usage("cannot merge tables of different order or mode".into()));
        }
        for (g, c) in other.counts {
            *self.counts.entry(g).or_insert(0) += c;
        }
        self.total += other.total;
        Ok(self)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn mode(&self) -> FrequencyMode {
        self.mode
    }

    pub fn total_ngrams(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn count(&self, window: &[String]) -> u64 {
        self.counts.get(window).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Ngram, u64)> {
        self.counts.iter().map(|(g, c)| (g, *c))
    }

    fn frequency_of<T: Scalar>(&self, window: &[String]) -> T {
        let c = self.count(window);
        match self.mode {
            FrequencyMode::Raw => T::from_count(c),
            FrequencyMode::Relative if self.total == 0 => T::zero(),
            FrequencyMode::Relative => T::from_count(c) / T::from_count(self.total),
        }
    }

    /// Raw count or relative frequency of `g`; 0 when absent.
    pub fn frequency<T: Scalar>(&self, g: &Ngram) -> Result<T> {
        if g.order() != self.order {
            return Err(Error::Usage(format!(
                "n-gram of order {} looked up in a table of order {}",
                g.order(),
                self.order
            )));
        }
        Ok(self.frequency_of(g.parts()))
    }
}

/// Counts n-grams over all instances' normalized tokens. Chunks are counted
/// in parallel and merged.
pub fn build_table<B>(instances: &[B], n: usize, stopwords: &StopwordSet, mode: FrequencyMode) -> NgramTable
where
    B: Borrow<Instance> + Sync,
{
    instances
        .par_chunks(TABLE_CHUNK)
        .map(|chunk| {
            let mut t = NgramTable::new(n, mode);
            for inst in chunk {
                t.add_tokens(inst.borrow().norm_tokens(), stopwords);
            }
            t
        })
        .reduce(
            || NgramTable::new(n, mode),
            |a, b| a.merge(b).expect("same order and mode"),
        )
}

/// Immutable pairing of past and recent tables with the constant `k`.
#[derive(Debug, Clone)]
pub struct TrendScorer<T: Scalar = f64> {
    past: NgramTable,
    recent: NgramTable,
    k: T,
}

impl<T: Scalar> TrendScorer<T> {
    pub fn new(past: NgramTable, recent: NgramTable, k: T) -> Result<Self> {
        if past.order != recent.order {
            return Err(Error::Usage(format!(
                "past order {} differs from recent order {}",
                past.order, recent.order
            )));
        }
        if !(k > T::zero() && k.is_finite()) {
            return Err(Error::Config(format!("k must be positive and finite, got {k}")));
        }
        Ok(TrendScorer { past, recent, k })
    }

    pub fn order(&self) -> usize {
        self.past.order
    }

    pub fn k(&self) -> T {
        self.k
    }

    pub fn past(&self) -> &NgramTable {
        &self.past
    }

    pub fn recent(&self) -> &NgramTable {
        &self.recent
    }

    fn score_window(&self, window: &[String]) -> T {
        let f_recent: T = self.recent.frequency_of(window);
        let f_past: T = self.past.frequency_of(window);
        (f_recent - f_past) / (f_past + self.k)
    }

    pub fn trend_score(&self, g: &Ngram) -> Result<T> {
        if g.order() != self.order() {
            return Err(Error::Usage(format!(
                "n-gram of order {} scored by a scorer of order {}",
                g.order(),
                self.order()
            )));
        }
        Ok(self.score_window(g.parts()))
    }

    /// Sum of window scores over a token sequence, in position order.
    pub fn score_tokens(&self, tokens: &[String], stopwords: &StopwordSet) -> T {
        ngram_windows(tokens, self.order(), stopwords).fold(T::zero(), |acc, w| acc + self.score_window(w))
    }

    pub fn score_instance(&self, inst: &Instance, stopwords: &StopwordSet) -> T {
        self.score_tokens(inst.norm_tokens(), stopwords)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredInstance<T: Scalar = f64> {
    pub instance_id: InstanceId,
    pub score: T,
}

fn by_rank<T: Scalar>(a: &ScoredInstance<T>, b: &ScoredInstance<T>) -> Ordering {
    b.score
        .partial_cmp(&a.score)
        .expect("trend scores are finite")
        .then(a.instance_id.cmp(&b.instance_id))
}

/// A pool ranked once by score (descending, ties by ascending id).
#[derive(Debug, Clone)]
pub struct Ranking<T: Scalar = f64> {
    ranked: Vec<ScoredInstance<T>>,
}

impl<T: Scalar> Ranking<T> {
    pub fn new<B>(pool: &[B], scorer: &TrendScorer<T>, stopwords: &StopwordSet) -> Self
    where
        B: Borrow<Instance> + Sync,
    {
        let scored = pool
            .par_iter()
            .map(|inst| {
                let inst = inst.borrow();
                ScoredInstance {
                    instance_id: inst.id,
                    score: scorer.score_instance(inst, stopwords),
                }
            })
            .collect();
        Self::from_scores(scored)
    }

    pub fn from_scores(mut scored: Vec<ScoredInstance<T>>) -> Self {
        scored.sort_by(by_rank);
        Ranking { ranked: scored }
    }

    pub fn ranked(&self) -> &[ScoredInstance<T>] {
        &self.ranked
    }

    pub fn score_of(&self, id: InstanceId) -> Option<T> {
        self.ranked.iter().find(|s| s.instance_id == id).map(|s| s.score)
    }

    /// The first `n` ranked ids not in `excluded`.
    pub fn select(&self, n: usize, excluded: &HashSet<InstanceId>) -> Vec<InstanceId> {
        self.ranked
            .iter()
            .filter(|s| !excluded.contains(&s.instance_id))
            .take(n)
            .map(|s| s.instance_id)
            .collect()
    }
}

/// Ranks `pool` and returns up to `batch_size` top instances not in `excluded`.
pub fn rank_and_select<'a, T: Scalar>(
    pool: &'a [Instance],
    scorer: &TrendScorer<T>,
    stopwords: &StopwordSet,
    batch_size: usize,
    excluded: &HashSet<InstanceId>,
) -> Vec<&'a Instance> {
    let ranking = Ranking::new(pool, scorer, stopwords);
    let by_id: HashMap<InstanceId, &Instance> = pool.iter().map(|i| (i.id, i)).collect();
    ranking
        .select(batch_size, excluded)
        .into_iter()
        .map(|id| by_id[&id])
        .collect()
}
