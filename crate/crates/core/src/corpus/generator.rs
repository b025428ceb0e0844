//! Synthetic corpus with controlled entity turnover across years.
//!
//! Each year every pool slot (per entity type, plus a `TOPIC` pool of
//! non-entity trending phrases) is independently replaced with probability
//! `turnover` by a never-before-used surface form. Every slot carries a
//! popularity weight `1/r`, with `r` drawn uniformly from `1..=pool size` when
//! the slot's current form enters; survivors keep their weight, so popular
//! forms stay popular while they last. Instances are templates whose slots are
//! filled from the current year's pools in proportion to popularity; an
//! `{ENT}` slot takes an entity type chosen uniformly. `alignment` is the
//! probability that an instance carrying a trending topic also carries
//! entities (and the probability that an instance without a topic carries
//! none); the marginal entity rate stays at one half.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Instance, InstanceId, TemporalCorpus};
use crate::error::{Error, Result};
use crate::kv::KeyValues;
use crate::tags::{Tag, TagSet};

pub const TOPIC: &str = "TOPIC";
/// Template slot standing for an entity of uniformly random type.
pub const ANY_ENTITY: &str = "ENT";

const BUNDLED_CONFIG: &str = include_str!("../../data/drift.conf");
const BUNDLED_POOLS: &str = include_str!("../../data/pools.txt");
const BUNDLED_TEMPLATES: &str = include_str!("../../data/templates.txt");

const SYLLABLES: &[&str] = &[
    "ka", "lo", "ren", "mi", "dar", "vo", "sel", "tan", "bri", "quin", "zu", "mor", "el", "ast", "ori", "pen", "gal",
    "ryn", "thi", "bel", "cor", "nev", "sha", "lu", "fen", "jo", "wex", "ti",
];
const SENTENCE_CAP_RATE: f64 = 0.5;
const TOPIC_RATE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
enum Piece {
    Word(String),
    Slot(String),
}

#[derive(Debug, Clone, PartialEq)]
struct Template {
    pieces: Vec<Piece>,
    has_entity: bool,
    has_topic: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub first_year: i32,
    pub years: usize,
    pub per_year: usize,
    /// Per-year replacement probability of each pool slot.
    pub turnover: f64,
    pub alignment: f64,
    /// Probability that an entity mention is written all-lowercase.
    pub lowercase_rate: f64,
    pub tagset: TagSet,
    /// Kind (entity type or `TOPIC`) to surface forms; tokens separated by spaces.
    pub pools: BTreeMap<String, Vec<String>>,
    templates: Vec<Template>,
}

/// Year-by-year pool contents, as generated.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolHistory {
    pub years: Vec<(i32, BTreeMap<String, Vec<String>>)>,
    /// Popularity weight of every slot, parallel to `years`.
    pub popularity: Vec<BTreeMap<String, Vec<f64>>>,
}

impl PoolHistory {
    /// Fraction of the entity surface forms in `year`'s pools that are absent from the first year's.
    pub fn novel_fraction(&self, year: i32) -> Option<f64> {
        let first = &self.years.first()?.1;
        let (_, pools) = self.years.iter().find(|(y, _)| *y == year)?;
        let (mut novel, mut total) = (0usize, 0usize);
        for (kind, forms) in pools.iter().filter(|(k, _)| k.as_str() != TOPIC) {
            let old: HashSet<&String> = first.get(kind).into_iter().flatten().collect();
            total += forms.len();
            novel += forms.iter().filter(|f| !old.contains(f)).count();
        }
        (total > 0).then(|| novel as f64 / total as f64)
    }
}

fn parse_pools(text: &str) -> Result<BTreeMap<String, Vec<String>>> {
    let mut pools: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (kind, form) = line
            .split_once('\t')
            .ok_or_else(|| Error::Config(format!("pools line {}: expected KIND<TAB>surface form", i + 1)))?;
        let form = form.split_whitespace().collect::<Vec<_>>().join(" ");
        if form.is_empty() {
            return Err(Error::Config(format!("pools line {}: empty surface form", i + 1)));
        }
        pools.entry(kind.trim().to_string()).or_default().push(form);
    }
    Ok(pools)
}

fn parse_templates(text: &str) -> Vec<Template> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let pieces: Vec<Piece> = l
                .split_whitespace()
                .map(|w| match w.strip_prefix('{').and_then(|r| r.strip_suffix('}')) {
                    Some(slot) => Piece::Slot(slot.to_string()),
                    None => Piece::Word(w.to_string()),
                })
                .collect();
            let has_topic = pieces.iter().any(|p| matches!(p, Piece::Slot(s) if s == TOPIC));
            let has_entity = pieces.iter().any(|p| matches!(p, Piece::Slot(s) if s != TOPIC));
            Template {
                pieces,
                has_entity,
                has_topic,
            }
        })
        .collect()
}

impl GeneratorConfig {
    /// The bundled configuration with its pools and templates.
    pub fn bundled() -> Self {
        Self::from_parts(BUNDLED_CONFIG, BUNDLED_POOLS, BUNDLED_TEMPLATES).expect("bundled generator config is valid")
    }

    /// Builds a config from file contents. `pools_file`/`templates_file` keys
    /// in `kv_text` are ignored here; see [`GeneratorConfig::load`].
    pub fn from_parts(kv_text: &str, pools: &str, templates: &str) -> Result<Self> {
        let kv = KeyValues::parse(kv_text)?;
        kv.reject_unknown(&[
            "first_year",
            "years",
            "per_year",
            "turnover",
            "alignment",
            "lowercase_rate",
            "pools_file",
            "templates_file",
        ])?;
        let cfg = GeneratorConfig {
            first_year: kv.parsed("first_year")?.unwrap_or(2014),
            years: kv.parsed("years")?.unwrap_or(6),
            per_year: kv.parsed("per_year")?.unwrap_or(400),
            turnover: kv.parsed("turnover")?.unwrap_or(0.5),
            alignment: kv.parsed("alignment")?.unwrap_or(0.8),
            lowercase_rate: kv.parsed("lowercase_rate")?.unwrap_or(0.25),
            tagset: TagSet::default(),
            pools: parse_pools(pools)?,
            templates: parse_templates(templates),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; `pools_file` and `templates_file` resolve relative
    /// to its directory and fall back to the bundled data when absent.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let kv = KeyValues::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let read = |key: &str, fallback: &str| -> Result<String> {
            match kv.get(key) {
                Some(p) => std::fs::read_to_string(base.join(p))
                    .map_err(|e| Error::Config(format!("cannot read {key} {p:?}: {e}"))),
                None => Ok(fallback.to_string()),
            }
        };
        let pools = read("pools_file", BUNDLED_POOLS)?;
        let templates = read("templates_file", BUNDLED_TEMPLATES)?;
        Self::from_parts(&text, &pools, &templates)
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        unit("turnover", self.turnover)?;
        unit("alignment", self.alignment)?;
        unit("lowercase_rate", self.lowercase_rate)?;
        if self.years == 0 || self.per_year == 0 {
            return Err(Error::Config("years and per_year must be positive".into()));
        }
        for kind in self.pools.keys() {
            if kind != TOPIC && self.tagset.entity_type(kind).is_none() {
                return Err(Error::Config(format!("pool kind {kind} is neither TOPIC nor an entity type")));
            }
        }
        for t in &self.templates {
            for p in &t.pieces {
                if let Piece::Slot(s) = p {
                    if s == ANY_ENTITY {
                        if self.entity_kinds().is_empty() {
                            return Err(Error::Config("{ENT} slot needs at least one entity pool".into()));
                        }
                        continue;
                    }
                    if self.pools.get(s).is_none_or(Vec::is_empty) {
                        return Err(Error::Config(format!("template slot {{{s}}} has an empty pool")));
                    }
                }
            }
        }
        for (entity, topic) in [(true, true), (true, false), (false, true), (false, false)] {
            if !self.templates.iter().any(|t| t.has_entity == entity && t.has_topic == topic) {
                return Err(Error::Config(format!(
                    "templates need at least one with entities={entity}, topic={topic}"
                )));
            }
        }
        Ok(())
    }

    fn entity_kinds(&self) -> Vec<&str> {
        self.pools
            .iter()
            .filter(|(k, v)| k.as_str() != TOPIC && !v.is_empty())
            .map(|(k, _)| k.as_str())
            .collect()
    }

    fn year_of(&self, idx: usize) -> i32 {
        self.first_year + idx as i32
    }
}

fn fresh_form(rng: &mut ChaCha8Rng, like: &str, capitalize: bool, used: &mut HashSet<String>) -> String {
    let n_tokens = like.split(' ').count();
    loop {
        let words: Vec<String> = (0..n_tokens)
            .map(|_| {
                let n_syl = rng.gen_range(2..=3);
                let w: String = (0..n_syl).map(|_| *SYLLABLES.choose(rng).expect("nonempty")).collect();
                if capitalize {
                    let mut cs = w.chars();
                    let first = cs.next().expect("nonempty").to_uppercase();
                    first.chain(cs).collect()
                } else {
                    w
                }
            })
            .collect();
        let form = words.join(" ");
        if used.insert(form.clone()) {
            return form;
        }
    }
}

fn birth_weight(rng: &mut ChaCha8Rng, pool_len: usize) -> f64 {
    1.0 / rng.gen_range(1..=pool_len) as f64
}

fn pool_history(cfg: &GeneratorConfig, rng: &mut ChaCha8Rng) -> PoolHistory {
    let mut used: HashSet<String> = cfg.pools.values().flatten().cloned().collect();
    let mut current = cfg.pools.clone();
    let mut weights: BTreeMap<String, Vec<f64>> = cfg
        .pools
        .iter()
        .map(|(kind, forms)| {
            let mut w: Vec<f64> = (1..=forms.len()).map(|r| 1.0 / r as f64).collect();
            w.shuffle(rng);
            (kind.clone(), w)
        })
        .collect();
    let mut years = vec![(cfg.year_of(0), current.clone())];
    let mut popularity = vec![weights.clone()];
    for idx in 1..cfg.years {
        for (kind, forms) in current.iter_mut() {
            let initial = &cfg.pools[kind];
            let w = weights.get_mut(kind).expect("same kinds");
            let n = forms.len();
            for (slot, weight) in forms.iter_mut().zip(w.iter_mut()) {
                if rng.gen_bool(cfg.turnover) {
                    let like = initial.choose(rng).expect("validated nonempty");
                    *slot = fresh_form(rng, like, kind != TOPIC, &mut used);
                    *weight = birth_weight(rng, n);
                }
            }
        }
        years.push((cfg.year_of(idx), current.clone()));
        popularity.push(weights.clone());
    }
    PoolHistory { years, popularity }
}

struct YearPools<'a> {
    pools: &'a BTreeMap<String, Vec<String>>,
    samplers: BTreeMap<&'a str, WeightedIndex<f64>>,
    entity_kinds: Vec<&'a str>,
}

impl<'a> YearPools<'a> {
    fn new(pools: &'a BTreeMap<String, Vec<String>>, weights: &BTreeMap<String, Vec<f64>>) -> Self {
        let samplers = pools
            .iter()
            .map(|(kind, _)| {
                (kind.as_str(), WeightedIndex::new(&weights[kind]).expect("nonempty pool, positive weights"))
            })
            .collect();
        let entity_kinds = pools
            .iter()
            .filter(|(k, v)| k.as_str() != TOPIC && !v.is_empty())
            .map(|(k, _)| k.as_str())
            .collect();
        YearPools {
            pools,
            samplers,
            entity_kinds,
        }
    }

    /// Resolves `{ENT}` and returns the concrete kind with a drawn form.
    fn draw<'s>(&'s self, slot: &'s str, rng: &mut ChaCha8Rng) -> (&'s str, &'a str) {
        let kind = if slot == ANY_ENTITY {
            *self.entity_kinds.choose(rng).expect("validated entity pools")
        } else {
            slot
        };
        (kind, &self.pools[kind][self.samplers[kind].sample(rng)])
    }
}

fn capitalize_first(w: &str) -> String {
    let mut cs = w.chars();
    match cs.next() {
        Some(c) => c.to_uppercase().chain(cs).collect(),
        None => String::new(),
    }
}

fn render(
    cfg: &GeneratorConfig,
    template: &Template,
    pools: &YearPools<'_>,
    rng: &mut ChaCha8Rng,
) -> (Vec<String>, Vec<Tag>) {
    let mut toks = Vec::new();
    let mut tags = Vec::new();
    for piece in &template.pieces {
        match piece {
            Piece::Word(w) => {
                toks.push(w.clone());
                tags.push(Tag::Outside);
            }
            Piece::Slot(slot) => {
                let (kind, form) = pools.draw(slot, rng);
                let lower = kind != TOPIC && rng.gen_bool(cfg.lowercase_rate);
                let ty = cfg.tagset.entity_type(kind);
                for (j, w) in form.split(' ').enumerate() {
                    toks.push(if lower { w.to_lowercase() } else { w.to_string() });
                    tags.push(match (ty, j) {
                        (None, _) => Tag::Outside,
                        (Some(t), 0) => Tag::Begin(t.clone()),
                        (Some(t), _) => Tag::Inside(t.clone()),
                    });
                }
            }
        }
    }
    if matches!(template.pieces.first(), Some(Piece::Word(_))) && rng.gen_bool(SENTENCE_CAP_RATE) {
        toks[0] = capitalize_first(&toks[0]);
    }
    (toks, tags)
}

fn generate_year(
    cfg: &GeneratorConfig,
    idx: usize,
    pools: &BTreeMap<String, Vec<String>>,
    weights: &BTreeMap<String, Vec<f64>>,
    seed: u64,
) -> Result<Vec<Instance>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(idx as u64 + 1);
    let year_pools = YearPools::new(pools, weights);
    let class = |entity: bool, topic: bool| -> Vec<&Template> {
        cfg.templates
            .iter()
            .filter(|t| t.has_entity == entity && t.has_topic == topic)
            .collect()
    };
    let classes = [
        [class(false, false), class(true, false)],
        [class(false, true), class(true, true)],
    ];
    (0..cfg.per_year)
        .map(|i| {
            let topic = rng.gen_bool(TOPIC_RATE);
            let p_entity = if topic { cfg.alignment } else { 1.0 - cfg.alignment };
            let entity = rng.gen_bool(p_entity);
            let template = classes[topic as usize][entity as usize]
                .choose(&mut rng)
                .expect("validated template classes");
            let (toks, tags) = render(cfg, template, &year_pools, &mut rng);
            let id = InstanceId((idx * cfg.per_year + i) as u64);
            Instance::new(id, cfg.year_of(idx), toks, tags)
        })
        .collect()
}

/// Generates the corpus and the pool history behind it. Deterministic per seed.
pub fn generate_with_history(cfg: &GeneratorConfig, seed: u64) -> Result<(TemporalCorpus, PoolHistory)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let history = pool_history(cfg, &mut rng);
    let per_year: Vec<Vec<Instance>> = history
        .years
        .par_iter()
        .enumerate()
        .map(|(idx, (_, pools))| generate_year(cfg, idx, pools, &history.popularity[idx], seed))
        .collect::<Result<_>>()?;
    let corpus = TemporalCorpus::from_instances(per_year.into_iter().flatten())?;
    Ok((corpus, history))
}

pub fn generate_drift_corpus(cfg: &GeneratorConfig, seed: u64) -> Result<TemporalCorpus> {
    generate_with_history(cfg, seed).map(|(c, _)| c)
}
