use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kv::KeyValues;
use crate::tagger::CrfHyper;
use crate::trend::{FrequencyMode, DEFAULT_K, DEFAULT_ORDER};

macro_rules! keyword_enum {
    ($(#[$m:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name { $($variant),+ }

        impl FromStr for $name {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => Err(Error::Config(format!(
                        concat!("invalid ", stringify!($name), " {:?}; expected one of: ", $($text, " "),+),
                        s
                    ))),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($name::$variant => $text),+ })
            }
        }
    };
}

keyword_enum!(Scenario { One => "1", Two => "2" });
keyword_enum!(Strategy { Trend => "trend", Random => "random" });
keyword_enum!(
    /// `Cumulative` refits on everything selected so far; `Sequential` fits
    /// only the newest batch. Both warm-start from the previous step's model.
    RetrainMode { Cumulative => "cumulative", Sequential => "sequential" }
);
keyword_enum!(
    /// Past table for scenario 1 trend scoring after the first step.
    Scenario1Past { Selected => "selected", FirstBatch => "first_batch" }
);
keyword_enum!(
    /// Recent table for scenario 2: the merged pool or only the latest training year.
    Scenario2Recent { Pool => "pool", Latest => "latest" }
);

/// Past table for scenario 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario2Past {
    Earliest,
    Empty,
    Year(i32),
}

impl FromStr for Scenario2Past {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "earliest" => Ok(Scenario2Past::Earliest),
            "empty" => Ok(Scenario2Past::Empty),
            y => y
                .parse()
                .map(Scenario2Past::Year)
                .map_err(|_| Error::Config(format!("invalid s2_past {s:?}; expected earliest, empty or a year"))),
        }
    }
}

impl fmt::Display for Scenario2Past {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scenario2Past::Earliest => f.write_str("earliest"),
            Scenario2Past::Empty => f.write_str("empty"),
            Scenario2Past::Year(y) => write!(f, "{y}"),
        }
    }
}

/// Where the experiment corpus comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum CorpusSource {
    File(PathBuf),
    /// Synthetic corpus; `None` uses the bundled generator config.
    Generated { config: Option<PathBuf>, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub corpus: CorpusSource,
    pub scenario: Scenario,
    pub strategies: Vec<Strategy>,
    pub step_size: usize,
    pub ngram_order: usize,
    pub k: f64,
    pub seeds: Vec<u64>,
    pub retrain_mode: RetrainMode,
    pub frequency_mode: FrequencyMode,
    /// Defaults to the latest year in the corpus.
    pub eval_year: Option<i32>,
    pub dev_fraction: f64,
    /// Seeds the dev/test split, shared by all runs.
    pub split_seed: u64,
    /// Stop-word file; `None` uses the bundled English list.
    pub stopwords: Option<PathBuf>,
    pub s1_past: Scenario1Past,
    pub s2_past: Scenario2Past,
    pub s2_recent: Scenario2Recent,
    pub hyper: CrfHyper,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            corpus: CorpusSource::Generated { config: None, seed: 0 },
            scenario: Scenario::Two,
            strategies: vec![Strategy::Trend, Strategy::Random],
            step_size: 100,
            ngram_order: DEFAULT_ORDER,
            k: DEFAULT_K,
            seeds: (1..=5).collect(),
            retrain_mode: RetrainMode::Cumulative,
            frequency_mode: FrequencyMode::Raw,
            eval_year: None,
            dev_fraction: 0.25,
            split_seed: 0,
            stopwords: None,
            s1_past: Scenario1Past::Selected,
            s2_past: Scenario2Past::Earliest,
            s2_recent: Scenario2Recent::Pool,
            hyper: CrfHyper::default(),
        }
    }
}

const KEYS: &[&str] = &[
    "corpus",
    "generator",
    "generator_seed",
    "scenario",
    "strategy",
    "step_size",
    "ngram_order",
    "k",
    "seeds",
    "retrain_mode",
    "frequency_mode",
    "eval_year",
    "dev_fraction",
    "split_seed",
    "stopwords",
    "s1_past",
    "s2_past",
    "s2_recent",
    "l2",
    "max_epochs",
    "patience",
    "init_scale",
];

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::Config(format!("invalid seeds {s:?}; expected e.g. `1,2,3` or `1..5`"));
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        return Ok((a..=b).collect());
    }
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse().map_err(|_| bad()))
        .collect()
}

fn get<T: FromStr>(kv: &KeyValues, key: &str, default: T) -> Result<T> {
    Ok(kv.parsed(key)?.unwrap_or(default))
}

fn keyword<T: FromStr<Err = Error>>(kv: &KeyValues, key: &str, default: T) -> Result<T> {
    kv.get(key).map_or(Ok(default), str::parse)
}

impl ExperimentConfig {
    /// Parses a flat `key = value` file. Relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let kv = KeyValues::parse(text)?;
        kv.reject_unknown(KEYS)?;
        let d = ExperimentConfig::default();
        let resolve = |p: &str| base.join(p);

        let gen_seed = get(&kv, "generator_seed", 0u64)?;
        let corpus = match (kv.get("corpus"), kv.get("generator")) {
            (Some(_), Some(_)) => return Err(Error::Config("set only one of `corpus` and `generator`".into())),
            (Some(p), None) => CorpusSource::File(resolve(p)),
            (None, Some("bundled")) | (None, None) => CorpusSource::Generated { config: None, seed: gen_seed },
            (None, Some(p)) => CorpusSource::Generated {
                config: Some(resolve(p)),
                seed: gen_seed,
            },
        };
        let strategies = match kv.get("strategy") {
            None | Some("both") => d.strategies.clone(),
            Some(s) => vec![s.parse()?],
        };
        let cfg = ExperimentConfig {
            corpus,
            scenario: keyword(&kv, "scenario", d.scenario)?,
            strategies,
            step_size: get(&kv, "step_size", d.step_size)?,
            ngram_order: get(&kv, "ngram_order", d.ngram_order)?,
            k: get(&kv, "k", d.k)?,
            seeds: kv.get("seeds").map_or(Ok(d.seeds.clone()), parse_seeds)?,
            retrain_mode: keyword(&kv, "retrain_mode", d.retrain_mode)?,
            frequency_mode: kv.parsed("frequency_mode")?.unwrap_or(d.frequency_mode),
            eval_year: kv.parsed("eval_year")?,
            dev_fraction: get(&kv, "dev_fraction", d.dev_fraction)?,
            split_seed: get(&kv, "split_seed", d.split_seed)?,
            stopwords: kv.get("stopwords").map(resolve),
            s1_past: keyword(&kv, "s1_past", d.s1_past)?,
            s2_past: keyword(&kv, "s2_past", d.s2_past)?,
            s2_recent: keyword(&kv, "s2_recent", d.s2_recent)?,
            hyper: CrfHyper {
                l2: get(&kv, "l2", d.hyper.l2)?,
                max_epochs: get(&kv, "max_epochs", d.hyper.max_epochs)?,
                patience: get(&kv, "patience", d.hyper.patience)?,
                init_scale: get(&kv, "init_scale", d.hyper.init_scale)?,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.step_size == 0 {
            return fail("step_size must be positive");
        }
        if self.ngram_order == 0 {
            return fail("ngram_order must be positive");
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return fail("k must be positive and finite");
        }
        if self.seeds.is_empty() {
            return fail("at least one seed is required");
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return fail("seeds must be distinct");
        }
        if self.strategies.is_empty() {
            return fail("at least one strategy is required");
        }
        if !(self.dev_fraction > 0.0 && self.dev_fraction < 1.0) {
            return fail("dev_fraction must lie in (0, 1)");
        }
        if !(self.hyper.l2 >= 0.0 && self.hyper.l2.is_finite()) || !(self.hyper.init_scale >= 0.0) {
            return fail("l2 and init_scale must be non-negative");
        }
        Ok(())
    }

    /// The fully resolved config in the same `key = value` format it is read from.
    pub fn to_kv_text(&self) -> String {
        let mut lines = Vec::new();
        match &self.corpus {
            CorpusSource::File(p) => lines.push(format!("corpus = {}", p.display())),
            CorpusSource::Generated { config, seed } => {
                let g = config.as_ref().map_or("bundled".to_string(), |p| p.display().to_string());
                lines.push(format!("generator = {g}"));
                lines.push(format!("generator_seed = {seed}"));
            }
        }
        let strategy = match self.strategies.as_slice() {
            [s] => s.to_string(),
            _ => "both".to_string(),
        };
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        lines.extend([
            format!("scenario = {}", self.scenario),
            format!("strategy = {strategy}"),
            format!("step_size = {}", self.step_size),
            format!("ngram_order = {}", self.ngram_order),
            format!("k = {}", self.k),
            format!("seeds = {}", seeds.join(",")),
            format!("retrain_mode = {}", self.retrain_mode),
            format!("frequency_mode = {}", self.frequency_mode),
        ]);
        if let Some(y) = self.eval_year {
            lines.push(format!("eval_year = {y}"));
        }
        lines.extend([
            format!("dev_fraction = {}", self.dev_fraction),
            format!("split_seed = {}", self.split_seed),
        ]);
        if let Some(p) = &self.stopwords {
            lines.push(format!("stopwords = {}", p.display()));
        }
        lines.extend([
            format!("s1_past = {}", self.s1_past),
            format!("s2_past = {}", self.s2_past),
            format!("s2_recent = {}", self.s2_recent),
            format!("l2 = {}", self.hyper.l2),
            format!("max_epochs = {}", self.hyper.max_epochs),
            format!("patience = {}", self.hyper.patience),
            format!("init_scale = {}", self.hyper.init_scale),
        ]);
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = ExperimentConfig::parse("", Path::new(".")).unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.seeds, vec![1, 2, 3, 4, 5]);
        assert_eq!(c.retrain_mode, RetrainMode::Cumulative);
        assert_eq!(c.k, 0.1);
        assert_eq!(c.ngram_order, 2);
    }

    #[test]
    fn parses_all_keys() {
        let text = "corpus = data/c.conll\nscenario = 1\nstrategy = random\nstep_size = 50\nk = 0.5\n\
                    seeds = 3..5\nretrain_mode = sequential\nfrequency_mode = relative\neval_year = 2019\n\
                    s1_past = first_batch\ns2_past = 2015\nmax_epochs = 7\n";
        let c = ExperimentConfig::parse(text, Path::new("/base")).unwrap();
        assert_eq!(c.corpus, CorpusSource::File(PathBuf::from("/base/data/c.conll")));
        assert_eq!(c.scenario, Scenario::One);
        assert_eq!(c.strategies, vec![Strategy::Random]);
        assert_eq!(c.seeds, vec![3, 4, 5]);
        assert_eq!(c.frequency_mode, FrequencyMode::Relative);
        assert_eq!(c.s2_past, Scenario2Past::Year(2015));
        assert_eq!(c.hyper.max_epochs, 7);
    }

    #[test]
    fn resolved_text_round_trips() {
        let text = "generator = g.conf\ngenerator_seed = 9\nstrategy = trend\nseeds = 4,2\nstopwords = sw.txt\n";
        let c = ExperimentConfig::parse(text, Path::new("/x")).unwrap();
        let again = ExperimentConfig::parse(&c.to_kv_text(), Path::new("/elsewhere")).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn rejects_invalid() {
        for bad in [
            "step_size = 0",
            "k = 0",
            "k = -1",
            "seeds = ",
            "seeds = 1,1",
            "scenario = 3",
            "strategy = best",
            "dev_fraction = 1",
            "colour = red",
            "corpus = a\ngenerator = b",
            "no equals sign",
        ] {
            assert!(matches!(ExperimentConfig::parse(bad, Path::new(".")), Err(Error::Config(_))), "{bad}");
        }
    }
}
