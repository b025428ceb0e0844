use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{info, warn};

use trendsel::corpus::{
    generate_drift_corpus, parse_conll, parse_label_columns, serialize_conll, GeneratorConfig, Instance, InstanceId,
    TemporalCorpus,
};
use trendsel::evalmetrics::entity_f1_labels;
use trendsel::experiment::{
    compare_on_selection, load_corpus, prepare, report, run_experiment, CorpusSource, ExperimentConfig,
};
use trendsel::tags::TagSet;
use trendsel::textproc::StopwordSet;
use trendsel::trend::{build_table, FrequencyMode, Ranking, TrendScorer, DEFAULT_K, DEFAULT_ORDER};
use trendsel::{Error, Result};

#[derive(Parser)]
#[command(name = "trendsel", version, about = "Trend-ranked training data selection for NER retraining")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score every instance of RECENT against the n-gram statistics of PAST.
    Score {
        #[arg(long)]
        past: PathBuf,
        #[arg(long)]
        recent: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ORDER)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_K)]
        k: f64,
        /// One stop word per line; the bundled English list when omitted.
        #[arg(long)]
        stopwords: Option<PathBuf>,
        #[arg(long, default_value_t = FrequencyMode::Raw)]
        mode: FrequencyMode,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the N top-trending pool instances not listed in --exclude.
    Select {
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        past: PathBuf,
        #[arg(short = 'N')]
        count: usize,
        /// Instance ids, one per line.
        #[arg(long)]
        exclude: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_ORDER)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_K)]
        k: f64,
        #[arg(long)]
        stopwords: Option<PathBuf>,
        #[arg(long, default_value_t = FrequencyMode::Raw)]
        mode: FrequencyMode,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a retraining experiment described by a key = value config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Train one tagger on a random and one on a trend-selected sample and compare.
    Compare {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        size: usize,
        /// Experiment config supplying seeds, split and tagger settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Generate a synthetic drift corpus.
    Gen {
        /// Generator config; the bundled one when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Entity-level exact-match P/R/F1 of PRED against GOLD.
    Eval {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        /// Comma-separated entity types.
        #[arg(long, default_value = "PER,LOC,ORG")]
        types: String,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display())))
}

fn read_corpus(path: &Path) -> Result<TemporalCorpus> {
    parse_conll(&read(path)?).map_err(|e| match e {
        Error::Parse { line, message } => Error::Data(format!("{}:{line}: {message}", path.display())),
        other => other,
    })
}

fn stopwords(path: Option<&Path>) -> Result<StopwordSet> {
    match path {
        Some(p) => Ok(StopwordSet::parse(&read(p)?)),
        None => Ok(StopwordSet::english()),
    }
}

fn scorer(past: &[&Instance], recent: &[&Instance], n: usize, k: f64, sw: &StopwordSet, mode: FrequencyMode) -> Result<TrendScorer> {
    if n == 0 {
        return Err(Error::Usage("--n must be positive".into()));
    }
    TrendScorer::new(build_table(past, n, sw, mode), build_table(recent, n, sw, mode), k)
}

fn read_ids(path: &Path) -> Result<HashSet<InstanceId>> {
    let mut ids = HashSet::new();
    for (i, line) in read(path)?.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let id = line
            .parse()
            .map_err(|_| Error::Data(format!("{}:{}: not an instance id: {line:?}", path.display(), i + 1)))?;
        ids.insert(InstanceId(id));
    }
    Ok(ids)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Score { past, recent, n, k, stopwords: sw, mode, out } => {
            let sw = stopwords(sw.as_deref())?;
            let past = read_corpus(&past)?;
            let recent = read_corpus(&recent)?;
            let past: Vec<&Instance> = past.instances().collect();
            let recent: Vec<&Instance> = recent.instances().collect();
            let ranking = Ranking::new(&recent, &scorer(&past, &recent, n, k, &sw, mode)?, &sw);
            let year: std::collections::HashMap<InstanceId, i32> = recent.iter().map(|i| (i.id, i.year)).collect();
            let rows = ranking.ranked().iter().map(|s| (s.instance_id.0, year[&s.instance_id], s.score));
            write(&out, &report::scores_csv(rows))?;
            info!("scored {} instances", recent.len());
        }
        Command::Select { pool, past, count, exclude, n, k, stopwords: sw, mode, out } => {
            let sw = stopwords(sw.as_deref())?;
            let pool = read_corpus(&pool)?;
            let past = read_corpus(&past)?;
            let excluded = match exclude {
                Some(p) => read_ids(&p)?,
                None => HashSet::new(),
            };
            let pool: Vec<&Instance> = pool.instances().collect();
            let past: Vec<&Instance> = past.instances().collect();
            let ranking = Ranking::new(&pool, &scorer(&past, &pool, n, k, &sw, mode)?, &sw);
            let ids = ranking.select(count, &excluded);
            if ids.len() < count {
                warn!("only {} candidates left, selecting all of them", ids.len());
            }
            let chosen: HashSet<InstanceId> = ids.iter().copied().collect();
            let batch = pool.iter().filter(|i| chosen.contains(&i.id)).map(|&i| i.clone());
            write(&out, &serialize_conll(&TemporalCorpus::from_instances(batch)?))?;
            info!("selected {} instances", ids.len());
        }
        Command::Run { config, out_dir } => {
            let cfg = ExperimentConfig::load(&config)?;
            let corpus = load_corpus(&cfg.corpus)?;
            let prep = prepare(&corpus, &cfg)?;
            let curves = run_experiment(&corpus, &cfg)?;
            fs::create_dir_all(&out_dir)?;
            for c in &curves {
                write(&out_dir.join(format!("curve_{}.csv", c.strategy)), &report::curve_csv(c))?;
                write(&out_dir.join(format!("selections_{}.csv", c.strategy)), &report::selections_csv(c))?;
            }
            write(&out_dir.join("run_manifest.txt"), &report::run_manifest(&cfg, &prep, &corpus, &curves))?;
            let title = format!("scenario {}, {} per step", cfg.scenario, cfg.step_size);
            write(&out_dir.join("learning_curve.svg"), &report::svg_chart(&curves, &title))?;
            for c in &curves {
                let means: Vec<String> = c.mean_f1().iter().map(|f| format!("{:.2}", 100.0 * f)).collect();
                println!("{:<8}{}", c.strategy.to_string(), means.join(" "));
            }
        }
        Command::Compare { corpus, size, config, out_dir } => {
            let mut cfg = match config {
                Some(p) => ExperimentConfig::load(&p)?,
                None => ExperimentConfig::default(),
            };
            if let Some(p) = corpus {
                cfg.corpus = CorpusSource::File(p);
            }
            let data = load_corpus(&cfg.corpus)?;
            let rep = compare_on_selection(&data, &cfg, size)?;
            fs::create_dir_all(&out_dir)?;
            let table = report::comparison_table(&rep);
            write(&out_dir.join("comparison.txt"), &table)?;
            write(&out_dir.join("comparison.csv"), &report::comparison_csv(&rep))?;
            write(&out_dir.join("distribution.txt"), &report::distribution_table(&rep))?;
            print!("{table}");
        }
        Command::Gen { config, seed, out } => {
            let cfg = match config {
                Some(p) => GeneratorConfig::load(&p)?,
                None => GeneratorConfig::bundled(),
            };
            let corpus = generate_drift_corpus(&cfg, seed)?;
            write(&out, &serialize_conll(&corpus))?;
            info!("wrote {} instances", corpus.len());
        }
        Command::Eval { gold, pred, types } => {
            let tagset = TagSet::new(types.split(',').map(str::trim))?;
            let load = |p: &Path| {
                parse_label_columns(&read(p)?, &tagset)
                    .map_err(|e| Error::Data(format!("{}: {e}", p.display())))
            };
            let (gold, pred) = (load(&gold)?, load(&pred)?);
            if let Some((i, _)) = gold.iter().zip(&pred).enumerate().find(|(_, (g, p))| g.tokens != p.tokens) {
                return Err(Error::Data(format!("sequence {i}: gold and predicted tokens differ")));
            }
            let g: Vec<_> = gold.iter().map(|s| &s.tags[..]).collect();
            let p: Vec<_> = pred.iter().map(|s| &s.tags[..]).collect();
            print!("{}", entity_f1_labels(&g, &p)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
