//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trendsel::corpus::{generate_drift_corpus, parse_conll, serialize_conll, GeneratorConfig, Instance, InstanceId, TemporalCorpus};
use trendsel::experiment::{compare_on_selection, run_experiment, ExperimentConfig, LearningCurve, Scenario, Strategy};
use trendsel::tagger::{log_likelihood_and_gradient, CrfHyper, CrfModel};
use trendsel::tags::{Tag, TagSet};
use trendsel::textproc::{Ngram, StopwordSet};
use trendsel::trend::{FrequencyMode, NgramTable, TrendScorer};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let t = Instant::now();
    let mut o = f();
    let took = t.elapsed();
    match limit {
        Some(limit) => {
            o.detail = format!("{} [{took:.2?}, limit {limit:?}]", o.detail);
            o.pass &= took <= limit;
        }
        None => o.detail = format!("{} [{took:.2?}]", o.detail),
    }
    o
}

// ---------------------------------------------------------------- 1

fn table(order: usize, mode: FrequencyMode, counts: &[(&str, usize)]) -> NgramTable {
    let mut t = NgramTable::new(order, mode);
    let none = StopwordSet::empty();
    for &(w, c) in counts {
        for _ in 0..c {
            t.add_tokens(&[w.to_string()], &none);
        }
    }
    t
}

fn formula_grid() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let oracle = |r: f64, p: f64, k: f64| (r - p) / (p + k);
    let mut worst = 0.0f64;
    let x = Ngram::new(["x"]).unwrap();
    for i in 0..1000 {
        let mode = if i % 2 == 0 { FrequencyMode::Raw } else { FrequencyMode::Relative };
        let p = match i % 5 {
            0 => 0,
            _ => rng.gen_range(0..40usize),
        };
        let r = if i % 7 == 0 { p } else { rng.gen_range(0..40usize) };
        let (pf, rf) = (rng.gen_range(0..20usize), rng.gen_range(0..20usize));
        let k = if i % 3 == 0 { 0.1 } else { rng.gen_range(0.01..5.0) };
        let past = table(1, mode, &[("x", p), ("filler", pf)]);
        let recent = table(1, mode, &[("x", r), ("filler", rf)]);
        let (fp, fr) = match mode {
            FrequencyMode::Raw => (p as f64, r as f64),
            FrequencyMode::Relative => {
                let rel = |c: usize, t: usize| if t == 0 { 0.0 } else { c as f64 / t as f64 };
                (rel(p, p + pf), rel(r, r + rf))
            }
        };
        let got = TrendScorer::<f64>::new(past, recent, k).unwrap().trend_score(&x).unwrap();
        let err = (got - oracle(fr, fp, k)).abs();
        worst = worst.max(err);
        if fp == 0.0 && (got - fr / k).abs() > 1e-9 {
            return check(false, format!("f_P = 0 case: {got} vs {}", fr / k));
        }
        if p == r && pf == rf && got != 0.0 {
            return check(false, format!("f_R = f_P case scored {got}"));
        }
    }
    check(worst <= 1e-9, format!("max |score - oracle| = {worst:.3e} over 1000 points (tol 1e-9)"))
}

// ---------------------------------------------------------------- 2, 3

const WORDS: &[&str] = &["Jordan", "visits", "New", "York", "@fan", "#Game", "<URL>", "acme", "2019", "!", "Paris", "corp"];

fn random_instance(rng: &mut ChaCha8Rng, len: usize, labels: &[Tag]) -> Instance {
    let tokens: Vec<String> = (0..len).map(|_| WORDS[rng.gen_range(0..WORDS.len())].to_string()).collect();
    // valid BIO gold by rejection
    let tags = loop {
        let t: Vec<Tag> = (0..len).map(|_| labels[rng.gen_range(0..labels.len())].clone()).collect();
        if trendsel::tags::first_bio_violation(&t).is_none() {
            break t;
        }
    };
    Instance::new(InstanceId(0), 2020, tokens, tags).unwrap()
}

/// Independent scoring: emissions and transitions assembled from public
/// weight accessors, then every one of L^n paths enumerated.
fn brute_force(model: &CrfModel, x: &Instance) -> (Vec<usize>, f64, f64) {
    let l = model.num_labels();
    let emit: Vec<Vec<f64>> = (0..x.len())
        .map(|i| {
            let fv = model.featurize(x, i);
            (0..l).map(|y| fv.indices.iter().map(|&f| model.emission_weight(f, y)).sum()).collect()
        })
        .collect();
    let mut best = (Vec::new(), f64::NEG_INFINITY);
    let mut scores = Vec::new();
    for code in 0..l.pow(x.len() as u32) {
        let mut c = code;
        let path: Vec<usize> = (0..x.len())
            .map(|_| {
                let y = c % l;
                c /= l;
                y
            })
            .collect();
        let mut s = 0.0;
        let mut ok = model.start_allowed(path[0]);
        for t in 0..path.len() {
            s += emit[t][path[t]];
            if t > 0 {
                ok &= model.transition_allowed(path[t - 1], path[t]);
                s += model.transition_weight(path[t - 1], path[t]);
            }
        }
        if !ok {
            continue;
        }
        scores.push(s);
        if s > best.1 {
            best = (path, s);
        }
    }
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_z = m + scores.iter().map(|s| (s - m).exp()).sum::<f64>().ln();
    (best.0, best.1, log_z)
}

fn inference_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let labels = TagSet::default().labels();
    let mut worst_z = 0.0f64;
    let mut compared = 0;
    for trial in 0..100 {
        let xs: Vec<Instance> = (1..=5).map(|len| random_instance(&mut rng, len, &labels)).collect();
        let mut m: CrfModel = CrfModel::new(&TagSet::default(), CrfHyper::default());
        m.grow_vocab(&xs, &mut rng);
        for w in m.weights_mut() {
            *w = rng.gen_range(-2.0..2.0);
        }
        for x in &xs {
            let (path, _, log_z) = brute_force(&m, x);
            let vit = m.viterbi_indices(x);
            if vit != path {
                return check(false, format!("model {trial}, length {}: viterbi {vit:?} vs brute force {path:?}", x.len()));
            }
            worst_z = worst_z.max((m.log_partition(x) - log_z).abs());
            compared += 1;
        }
    }
    check(
        worst_z <= 1e-8,
        format!("{compared} sequences (L = 1..5, 7 labels, 100 models): viterbi exact, max |logZ - brute| = {worst_z:.3e} (tol 1e-8)"),
    )
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let labels = TagSet::default().labels();
    let h = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let len = rng.gen_range(1..=5);
        let x = vec![random_instance(&mut rng, len, &labels)];
        let mut m: CrfModel = CrfModel::new(&TagSet::default(), CrfHyper::default());
        m.grow_vocab(&x, &mut rng);
        for w in m.weights_mut() {
            *w = rng.gen_range(-1.0..1.0);
        }
        let (_, g) = log_likelihood_and_gradient(&m, &x).unwrap();
        for _ in 0..50 {
            let j = rng.gen_range(0..g.len());
            let w0 = m.weights()[j];
            m.weights_mut()[j] = w0 + h;
            let up = log_likelihood_and_gradient(&m, &x).unwrap().0;
            m.weights_mut()[j] = w0 - h;
            let down = log_likelihood_and_gradient(&m, &x).unwrap().0;
            m.weights_mut()[j] = w0;
            let fd = (up - down) / (2.0 * h);
            let rel = (fd - g[j]).abs() / fd.abs().max(g[j].abs()).max(1e-6);
            worst = worst.max(rel);
        }
    }
    check(worst <= 1e-4, format!("max relative error {worst:.3e} over 20 instances x 50 coordinates (tol 1e-4)"))
}

// ---------------------------------------------------------------- 4, 5, 6

fn bundled_corpus() -> TemporalCorpus {
    generate_drift_corpus(&GeneratorConfig::bundled(), 0).unwrap()
}

fn scenario2_cfg(step: usize, seeds: Vec<u64>) -> ExperimentConfig {
    ExperimentConfig {
        scenario: Scenario::Two,
        step_size: step,
        seeds,
        ..ExperimentConfig::default()
    }
}

fn curves(corpus: &TemporalCorpus, cfg: &ExperimentConfig) -> (LearningCurve, LearningCurve) {
    let mut cs = run_experiment(corpus, cfg).unwrap();
    let random = cs.pop().unwrap();
    let trend = cs.pop().unwrap();
    assert_eq!((trend.strategy, random.strategy), (Strategy::Trend, Strategy::Random));
    (trend, random)
}

fn fmt_curve(c: &LearningCurve) -> String {
    c.mean_f1().iter().map(|f| format!("{:.2}", 100.0 * f)).collect::<Vec<_>>().join(" ")
}

fn directional(corpus: &TemporalCorpus) -> Outcome {
    let (trend, random) = curves(corpus, &scenario2_cfg(100, (1..=5).collect()));
    let gaps: Vec<f64> = trend
        .mean_f1()
        .iter()
        .zip(random.mean_f1())
        .map(|(t, r)| 100.0 * (t - r))
        .collect();
    let final_gap = *gaps.last().unwrap();
    let wins = gaps.iter().filter(|&&g| g > 0.0).count();
    check(
        gaps.len() == 5 && final_gap >= 2.0 && wins >= 4,
        format!(
            "trend [{}] vs random [{}]; final gap {final_gap:+.2} (need >= 2.00), positive at {wins}/{} steps (need >= 4)",
            fmt_curve(&trend),
            fmt_curve(&random),
            gaps.len()
        ),
    )
}

fn mean_gap(corpus: &TemporalCorpus, step: usize, seeds: Vec<u64>) -> f64 {
    let (trend, random) = curves(corpus, &scenario2_cfg(step, seeds));
    let n = trend.steps.len() as f64;
    trend.mean_f1().iter().zip(random.mean_f1()).map(|(t, r)| 100.0 * (t - r)).sum::<f64>() / n
}

fn data_size(corpus: &TemporalCorpus) -> Outcome {
    let (small, large) = (mean_gap(corpus, 50, (1..=5).collect()), mean_gap(corpus, 200, (1..=5).collect()));
    if small >= large {
        return check(true, format!("mean gap N=50 {small:+.2} >= N=200 {large:+.2} (5 seeds)"));
    }
    let (small10, large10) = (mean_gap(corpus, 50, (1..=10).collect()), mean_gap(corpus, 200, (1..=10).collect()));
    check(
        small10 >= large10,
        format!("5 seeds: N=50 {small:+.2} < N=200 {large:+.2}; 10 seeds: N=50 {small10:+.2} vs N=200 {large10:+.2}"),
    )
}

fn distribution(corpus: &TemporalCorpus) -> Outcome {
    let cfg = scenario2_cfg(100, (1..=5).collect());
    let report = compare_on_selection(corpus, &cfg, 100).unwrap();
    let pairs: Vec<(usize, usize)> = report
        .seeds
        .iter()
        .map(|s| (s.trend.entity_tokens(), s.random.entity_tokens()))
        .collect();
    let wins = pairs.iter().filter(|(t, r)| t > r).count();
    check(
        wins >= 4,
        format!("entity tokens (trend, random) per seed {pairs:?}; trend richer in {wins}/5 (need >= 4)"),
    )
}

// ---------------------------------------------------------------- 7

fn random_corpus(rng: &mut ChaCha8Rng) -> TemporalCorpus {
    let labels = TagSet::default().labels();
    let n = rng.gen_range(1..30);
    let mut ids: Vec<u64> = (0..n as u64 * 3).collect();
    ids.shuffle(rng);
    let instances = (0..n).map(|i| {
        let len = rng.gen_range(1..8);
        let mut x = random_instance(rng, len, &labels);
        x = Instance::new(InstanceId(ids[i]), rng.gen_range(2010..2016), x.raw_tokens().to_vec(), x.labels().to_vec()).unwrap();
        x
    });
    TemporalCorpus::from_instances(instances.collect::<Vec<_>>()).unwrap()
}

fn determinism() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..200 {
        let c = random_corpus(&mut rng);
        let text = serialize_conll(&c);
        match parse_conll(&text) {
            Ok(back) if back == c && serialize_conll(&back) == text => {}
            _ => return check(false, format!("round trip failed on random corpus {i}")),
        }
    }
    let generated = bundled_corpus();
    if parse_conll(&serialize_conll(&generated)).ok().as_ref() != Some(&generated) {
        return check(false, "round trip failed on the bundled synthetic corpus");
    }

    let mut gen = GeneratorConfig::bundled();
    gen.per_year = 120;
    let corpus = generate_drift_corpus(&gen, 3).unwrap();
    if generate_drift_corpus(&gen, 3).unwrap() != corpus {
        return check(false, "generator not deterministic");
    }
    let cfg = ExperimentConfig {
        step_size: 30,
        seeds: vec![1, 2],
        ..ExperimentConfig::default()
    };
    let a = run_experiment(&corpus, &cfg).unwrap();
    let b = run_experiment(&corpus, &cfg).unwrap();
    if a != b {
        return check(false, "scenario 2 curves or selections differ between runs");
    }
    let s1 = ExperimentConfig {
        scenario: Scenario::One,
        ..cfg.clone()
    };
    if run_experiment(&corpus, &s1).unwrap() != run_experiment(&corpus, &s1).unwrap() {
        return check(false, "scenario 1 curves or selections differ between runs");
    }

    let train: Vec<Instance> = corpus.partitions().values().next().unwrap().clone();
    let weights = || {
        let mut m: CrfModel = CrfModel::new(&TagSet::default(), CrfHyper::default());
        m.train(&train, &[], &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        m.weights().iter().map(|w| w.to_bits()).collect::<Vec<u64>>()
    };
    check(
        weights() == weights(),
        "200 random corpora + synthetic corpus round-trip; curves, selections and trained weights bit-identical across runs",
    )
}

fn main() {
    let corpus = bundled_corpus();
    let results = [
        ("1 formula exactness", timed(Some(Duration::from_secs(1)), formula_grid)),
        ("2 inference oracle", timed(Some(Duration::from_secs(30)), inference_oracle)),
        ("3 gradient check", timed(Some(Duration::from_secs(30)), gradient_check)),
        ("4 end-to-end direction", timed(Some(Duration::from_secs(300)), || directional(&corpus))),
        ("5 data-size effect", timed(None, || data_size(&corpus))),
        ("6 distribution analog", timed(None, || distribution(&corpus))),
        ("7 round-trip and determinism", timed(None, determinism)),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
