//! Retraining experiments: scenario runs, selection comparisons and reports.

mod compare;
mod config;
pub mod report;
mod scenario;

use crate::corpus::{generate_drift_corpus, parse_conll, GeneratorConfig, TemporalCorpus};
use crate::error::{Error, Result};

pub use compare::{compare_on_selection, ComparisonReport, SeedComparison, SelectionOutcome};
pub use config::{
    CorpusSource, ExperimentConfig, RetrainMode, Scenario, Scenario1Past, Scenario2Past, Scenario2Recent, Strategy,
};
pub use scenario::{
    corpus_tagset, load_stopwords, prepare, run_experiment, run_scenario1, run_scenario2, scenario2_ranking,
    training_pool, CurveStep, LearningCurve, Prepared, SeedStep,
};

/// Reads or generates the configured corpus.
pub fn load_corpus(source: &CorpusSource) -> Result<TemporalCorpus> {
    match source {
        CorpusSource::File(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Data(format!("cannot read corpus {}: {e}", p.display())))?;
            parse_conll(&text)
        }
        CorpusSource::Generated { config, seed } => {
            let cfg = match config {
                Some(p) => GeneratorConfig::load(p)?,
                None => GeneratorConfig::bundled(),
            };
            generate_drift_corpus(&cfg, *seed)
        }
    }
}
