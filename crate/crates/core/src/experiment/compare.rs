//! Single-shot comparison of one random and one trend-selected training set.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::scenario::{prepare, scenario2_ranking, training_pool, Prepared};
use crate::corpus::{entity_distribution, DistributionTable, Instance, InstanceId, TemporalCorpus};
use crate::error::{Error, Result};
use crate::evalmetrics::{entity_f1, EvalResult};
use crate::tagger::CrfModel;
use crate::tags::Tag;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionOutcome {
    pub selected: Vec<InstanceId>,
    pub eval: EvalResult,
    pub distribution: DistributionTable,
}

impl SelectionOutcome {
    pub fn entity_tokens(&self) -> usize {
        self.distribution.total.tokens
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedComparison {
    pub seed: u64,
    pub random: SelectionOutcome,
    pub trend: SelectionOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub sample_size: usize,
    pub eval_year: i32,
    pub seeds: Vec<SeedComparison>,
}

impl ComparisonReport {
    /// Mean overall (P, R, F1) of the random and trend sides.
    pub fn mean_prf(&self) -> ((f64, f64, f64), (f64, f64, f64)) {
        let n = self.seeds.len() as f64;
        let avg = |f: &dyn Fn(&SeedComparison) -> &EvalResult| {
            let (mut p, mut r, mut f1) = (0.0, 0.0, 0.0);
            for s in &self.seeds {
                let e = f(s);
                p += e.precision();
                r += e.recall();
                f1 += e.f1();
            }
            (p / n, r / n, f1 / n)
        };
        (avg(&|s| &s.random.eval), avg(&|s| &s.trend.eval))
    }
}

const SELECTION_STREAM: u64 = 1;
const TAGGER_STREAM: u64 = 2;

fn outcome(selected: Vec<&Instance>, seed: u64, cfg: &ExperimentConfig, prep: &Prepared) -> Result<SelectionOutcome> {
    let data: Vec<Instance> = selected.iter().map(|&i| i.clone()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(TAGGER_STREAM);
    let mut model: CrfModel = CrfModel::new(&prep.tagset, cfg.hyper);
    model.train(&data, &prep.dev, &mut rng)?;
    let pred: Vec<Vec<Tag>> = prep.test.iter().map(|x| model.viterbi(x)).collect();
    Ok(SelectionOutcome {
        selected: data.iter().map(|i| i.id).collect(),
        eval: entity_f1(&prep.test, &pred)?,
        distribution: entity_distribution(&data, &prep.tagset),
    })
}

/// Draws `sample_size` instances from the merged training pool twice, uniformly
/// and by trend rank (scenario 2 scoring), and trains a fresh tagger on each.
/// The trend set is the same for every seed; the random set and tagger init vary.
pub fn compare_on_selection(corpus: &TemporalCorpus, cfg: &ExperimentConfig, sample_size: usize) -> Result<ComparisonReport> {
    let prep = prepare(corpus, cfg)?;
    let pool = training_pool(corpus, &prep);
    if sample_size == 0 || sample_size > pool.len() {
        return Err(Error::Config(format!(
            "sample size {sample_size} must lie in 1..={} (training pool size)",
            pool.len()
        )));
    }
    let ranking = scenario2_ranking(corpus, cfg, &prep)?;
    let by_id: std::collections::HashMap<InstanceId, &Instance> = pool.iter().map(|i| (i.id, *i)).collect();
    let trend_set: Vec<&Instance> = ranking.ranked()[..sample_size]
        .iter()
        .map(|s| by_id[&s.instance_id])
        .collect();
    let seeds = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(SELECTION_STREAM);
            let random_set: Vec<&Instance> = pool.choose_multiple(&mut rng, sample_size).copied().collect();
            Ok(SeedComparison {
                seed,
                random: outcome(random_set, seed, cfg, &prep)?,
                trend: outcome(trend_set.clone(), seed, cfg, &prep)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComparisonReport {
        sample_size,
        eval_year: prep.eval_year,
        seeds,
    })
}
