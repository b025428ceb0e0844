//! The two retraining protocols: year-by-year access (scenario 1) and a single
//! merged pool consumed in ranked batches (scenario 2).

use std::collections::HashSet;

use log::{info, warn};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, RetrainMode, Scenario, Scenario1Past, Scenario2Past, Scenario2Recent, Strategy};
use crate::corpus::{split_eval, Instance, InstanceId, TemporalCorpus};
use crate::error::{Error, Result};
use crate::evalmetrics::{entity_f1, EvalResult};
use crate::tagger::CrfModel;
use crate::tags::{Tag, TagSet};
use crate::textproc::StopwordSet;
use crate::trend::{build_table, rank_and_select, Ranking, TrendScorer};

/// Outcome of one step for one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedStep {
    pub seed: u64,
    pub eval: EvalResult,
    /// This step's batch, in selection order.
    pub selected: Vec<InstanceId>,
    /// Instances the tagger was fit on at this step.
    pub train_size: usize,
    pub dev_f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveStep {
    /// 1-based.
    pub step: usize,
    /// Source year of the candidate pool (scenario 1 only).
    pub year: Option<i32>,
    pub mean_f1: f64,
    /// In configuration seed order.
    pub per_seed: Vec<SeedStep>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearningCurve {
    pub scenario: Scenario,
    pub strategy: Strategy,
    pub retrain_mode: RetrainMode,
    pub steps: Vec<CurveStep>,
}

impl LearningCurve {
    pub fn mean_f1(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.mean_f1).collect()
    }
}

/// Corpus-derived pieces shared by every run of one experiment.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub tagset: TagSet,
    pub train_years: Vec<i32>,
    pub eval_year: i32,
    pub dev: Vec<Instance>,
    pub test: Vec<Instance>,
    pub stopwords: StopwordSet,
}

/// Entity types in the corpus, in the default order when they fit it.
pub fn corpus_tagset(corpus: &TemporalCorpus) -> TagSet {
    let default = TagSet::default();
    let mut extra: Vec<String> = Vec::new();
    for tag in corpus.instances().flat_map(|i| i.labels()) {
        if let Some(t) = tag.entity_type() {
            if default.entity_type(t.as_str()).is_none() && !extra.iter().any(|e| e == t.as_str()) {
                extra.push(t.as_str().to_string());
            }
        }
    }
    if extra.is_empty() {
        return default;
    }
    let names: Vec<&str> = default.types().iter().map(|t| t.as_str()).chain(extra.iter().map(String::as_str)).collect();
    TagSet::new(names).expect("names come from parsed tags")
}

pub fn load_stopwords(cfg: &ExperimentConfig) -> Result<StopwordSet> {
    match &cfg.stopwords {
        None => Ok(StopwordSet::english()),
        Some(p) => std::fs::read_to_string(p)
            .map(|t| StopwordSet::parse(&t))
            .map_err(|e| Error::Config(format!("cannot read stopwords {}: {e}", p.display()))),
    }
}

/// Resolves the evaluation year, training years and dev/test split.
pub fn prepare(corpus: &TemporalCorpus, cfg: &ExperimentConfig) -> Result<Prepared> {
    let latest = corpus.years().last().ok_or_else(|| Error::Data("corpus is empty".into()))?;
    let eval_year = cfg.eval_year.unwrap_or(latest);
    let train_years: Vec<i32> = corpus.years().filter(|&y| y < eval_year).collect();
    let needed = match cfg.scenario {
        Scenario::One => 2,
        Scenario::Two => 1,
    };
    if train_years.len() < needed {
        return Err(Error::Data(format!(
            "scenario {} needs at least {needed} training years before {eval_year}, corpus has {}",
            cfg.scenario,
            train_years.len()
        )));
    }
    if corpus.years().any(|y| y > eval_year) {
        warn!("years after eval year {eval_year} are ignored");
    }
    let (dev, test) = split_eval(corpus, eval_year, cfg.dev_fraction, cfg.split_seed)?;
    if test.is_empty() {
        return Err(Error::Data(format!("eval year {eval_year} leaves an empty test split")));
    }
    Ok(Prepared {
        tagset: corpus_tagset(corpus),
        train_years,
        eval_year,
        dev,
        test,
        stopwords: load_stopwords(cfg)?,
    })
}

fn seed_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const SELECTION_STREAM: u64 = 1;
const TAGGER_STREAM: u64 = 2;

/// Warm-started tagger plus everything it has been shown so far.
struct Learner<'a> {
    model: CrfModel,
    seen: Vec<Instance>,
    rng: ChaCha8Rng,
    cfg: &'a ExperimentConfig,
    prep: &'a Prepared,
}

impl<'a> Learner<'a> {
    fn new(seed: u64, cfg: &'a ExperimentConfig, prep: &'a Prepared) -> Self {
        Learner {
            model: CrfModel::new(&prep.tagset, cfg.hyper),
            seen: Vec::new(),
            rng: seed_rng(seed, TAGGER_STREAM),
            cfg,
            prep,
        }
    }

    fn step(&mut self, seed: u64, batch: Vec<Instance>) -> Result<SeedStep> {
        let selected: Vec<InstanceId> = batch.iter().map(|i| i.id).collect();
        let mut dev_f1 = f64::NAN;
        let train_size = if batch.is_empty() {
            warn!("seed {seed}: empty batch, model left unchanged");
            0
        } else {
            self.seen.extend(batch.iter().cloned());
            let data = match self.cfg.retrain_mode {
                RetrainMode::Cumulative => &self.seen[..],
                RetrainMode::Sequential => &batch[..],
            };
            let report = self.model.train(data, &self.prep.dev, &mut self.rng)?;
            dev_f1 = report.best_dev_f1();
            data.len()
        };
        let pred: Vec<Vec<Tag>> = self.prep.test.iter().map(|x| self.model.viterbi(x)).collect();
        Ok(SeedStep {
            seed,
            eval: entity_f1(&self.prep.test, &pred)?,
            selected,
            train_size,
            dev_f1,
        })
    }
}

fn take_batch(pool_len: usize, n: usize, what: &str) -> usize {
    if pool_len < n {
        warn!("{what}: only {pool_len} candidates for a batch of {n}; taking all");
    }
    pool_len.min(n)
}

fn collect_curve(
    cfg: &ExperimentConfig,
    strategy: Strategy,
    years: Vec<Option<i32>>,
    per_seed: Vec<Vec<SeedStep>>,
) -> LearningCurve {
    let steps = years
        .into_iter()
        .enumerate()
        .map(|(t, year)| {
            let per_seed: Vec<SeedStep> = per_seed.iter().map(|run| run[t].clone()).collect();
            let mean_f1 = per_seed.iter().map(|s| s.eval.f1()).sum::<f64>() / per_seed.len() as f64;
            CurveStep {
                step: t + 1,
                year,
                mean_f1,
                per_seed,
            }
        })
        .collect();
    LearningCurve {
        scenario: cfg.scenario,
        strategy,
        retrain_mode: cfg.retrain_mode,
        steps,
    }
}

/// Scenario 1: one step per training year, candidates limited to that year.
pub fn run_scenario1(corpus: &TemporalCorpus, cfg: &ExperimentConfig, strategy: Strategy) -> Result<LearningCurve> {
    let prep = prepare(corpus, cfg)?;
    run_scenario1_prepared(corpus, cfg, strategy, &prep)
}

pub fn run_scenario1_prepared(
    corpus: &TemporalCorpus,
    cfg: &ExperimentConfig,
    strategy: Strategy,
    prep: &Prepared,
) -> Result<LearningCurve> {
    info!("scenario 1, {strategy}, {} mode, eval year {}", cfg.retrain_mode, prep.eval_year);
    let run_seed = |seed: u64| -> Result<Vec<SeedStep>> {
        let mut learner = Learner::new(seed, cfg, prep);
        let mut rng = seed_rng(seed, SELECTION_STREAM);
        let mut first_batch: Vec<Instance> = Vec::new();
        let mut steps = Vec::new();
        for &year in &prep.train_years {
            let pool = corpus.partition(year).unwrap_or_default();
            let n = take_batch(pool.len(), cfg.step_size, &format!("year {year}"));
            let batch: Vec<Instance> = match strategy {
                Strategy::Trend => {
                    let past_src = match cfg.s1_past {
                        Scenario1Past::Selected => &learner.seen,
                        Scenario1Past::FirstBatch => &first_batch,
                    };
                    let past = build_table(past_src, cfg.ngram_order, &prep.stopwords, cfg.frequency_mode);
                    let recent = build_table(pool, cfg.ngram_order, &prep.stopwords, cfg.frequency_mode);
                    let scorer = TrendScorer::new(past, recent, cfg.k)?;
                    rank_and_select(pool, &scorer, &prep.stopwords, n, &HashSet::new())
                        .into_iter()
                        .cloned()
                        .collect()
                }
                Strategy::Random => pool.choose_multiple(&mut rng, n).cloned().collect(),
            };
            if first_batch.is_empty() {
                first_batch = batch.clone();
            }
            steps.push(learner.step(seed, batch)?);
        }
        Ok(steps)
    };
    let per_seed = cfg.seeds.par_iter().map(|&s| run_seed(s)).collect::<Result<Vec<_>>>()?;
    let years = prep.train_years.iter().map(|&y| Some(y)).collect();
    Ok(collect_curve(cfg, strategy, years, per_seed))
}

/// Merged training pool, in ascending year order.
pub fn training_pool<'a>(corpus: &'a TemporalCorpus, prep: &Prepared) -> Vec<&'a Instance> {
    prep.train_years
        .iter()
        .flat_map(|&y| corpus.partition(y).unwrap_or_default())
        .collect()
}

/// Scores the merged pool with the configured scenario 2 past/recent tables.
pub fn scenario2_ranking(corpus: &TemporalCorpus, cfg: &ExperimentConfig, prep: &Prepared) -> Result<Ranking> {
    let pool = training_pool(corpus, prep);
    let part = |y: i32| {
        corpus
            .partition(y)
            .ok_or_else(|| Error::Data(format!("corpus has no instances for year {y}")))
    };
    let first = prep.train_years[0];
    let last = *prep.train_years.last().expect("at least one training year");
    let past: &[Instance] = match cfg.s2_past {
        Scenario2Past::Earliest => part(first)?,
        Scenario2Past::Empty => &[],
        Scenario2Past::Year(y) => part(y)?,
    };
    let table = |xs: &[&Instance]| build_table(xs, cfg.ngram_order, &prep.stopwords, cfg.frequency_mode);
    let past = table(&past.iter().collect::<Vec<_>>());
    let recent = match cfg.s2_recent {
        Scenario2Recent::Pool => table(&pool),
        Scenario2Recent::Latest => table(&part(last)?.iter().collect::<Vec<_>>()),
    };
    let scorer = TrendScorer::new(past, recent, cfg.k)?;
    Ok(Ranking::new(&pool, &scorer, &prep.stopwords))
}

/// Scenario 2: the merged pool is ordered once (by trend rank or a seeded
/// shuffle) and consumed in successive disjoint batches, one per training year.
pub fn run_scenario2(corpus: &TemporalCorpus, cfg: &ExperimentConfig, strategy: Strategy) -> Result<LearningCurve> {
    let prep = prepare(corpus, cfg)?;
    run_scenario2_prepared(corpus, cfg, strategy, &prep)
}

pub fn run_scenario2_prepared(
    corpus: &TemporalCorpus,
    cfg: &ExperimentConfig,
    strategy: Strategy,
    prep: &Prepared,
) -> Result<LearningCurve> {
    info!(
        "scenario 2, {strategy}, {} mode, past = {}, recent = {}, eval year {}",
        cfg.retrain_mode, cfg.s2_past, cfg.s2_recent, prep.eval_year
    );
    let pool = training_pool(corpus, prep);
    let trend_order: Option<Vec<InstanceId>> = match strategy {
        Strategy::Trend => Some(
            scenario2_ranking(corpus, cfg, prep)?
                .ranked()
                .iter()
                .map(|s| s.instance_id)
                .collect(),
        ),
        Strategy::Random => None,
    };
    let by_id: std::collections::HashMap<InstanceId, &Instance> = pool.iter().map(|i| (i.id, *i)).collect();
    let steps = prep.train_years.len();
    let run_seed = |seed: u64| -> Result<Vec<SeedStep>> {
        let order = match &trend_order {
            Some(o) => o.clone(),
            None => {
                let mut ids: Vec<InstanceId> = pool.iter().map(|i| i.id).collect();
                ids.shuffle(&mut seed_rng(seed, SELECTION_STREAM));
                ids
            }
        };
        let mut learner = Learner::new(seed, cfg, prep);
        let mut out = Vec::with_capacity(steps);
        for t in 0..steps {
            let start = (t * cfg.step_size).min(order.len());
            let n = take_batch(order.len() - start, cfg.step_size, &format!("step {}", t + 1));
            let batch = order[start..start + n].iter().map(|id| by_id[id].clone()).collect();
            out.push(learner.step(seed, batch)?);
        }
        Ok(out)
    };
    let per_seed = cfg.seeds.par_iter().map(|&s| run_seed(s)).collect::<Result<Vec<_>>>()?;
    Ok(collect_curve(cfg, strategy, vec![None; steps], per_seed))
}

/// Runs every configured strategy under the configured scenario.
pub fn run_experiment(corpus: &TemporalCorpus, cfg: &ExperimentConfig) -> Result<Vec<LearningCurve>> {
    let prep = prepare(corpus, cfg)?;
    cfg.strategies
        .iter()
        .map(|&s| match cfg.scenario {
            Scenario::One => run_scenario1_prepared(corpus, cfg, s, &prep),
            Scenario::Two => run_scenario2_prepared(corpus, cfg, s, &prep),
        })
        .collect()
}
