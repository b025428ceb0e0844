use trendsel::corpus::generator::generate_with_history;
use trendsel::corpus::{entity_distribution, GeneratorConfig, TypeCounts};
use trendsel::evalmetrics::extract_spans;

#[test]
fn novelty_tracks_turnover() {
    let mut cfg = GeneratorConfig::bundled();
    cfg.per_year = 20;
    let seeds = 40;
    let slots: usize = cfg.pools.iter().filter(|(k, _)| k.as_str() != "TOPIC").map(|(_, v)| v.len()).sum();
    let runs: Vec<_> = (0..seeds).map(|s| generate_with_history(&cfg, s).unwrap().1).collect();
    for y in 1..cfg.years {
        let year = cfg.first_year + y as i32;
        let expected = 1.0 - (1.0 - cfg.turnover).powi(y as i32);
        let mean = runs.iter().map(|h| h.novel_fraction(year).unwrap()).sum::<f64>() / seeds as f64;
        let sigma = (expected * (1.0 - expected) / (slots * seeds as usize) as f64).sqrt();
        assert!(
            (mean - expected).abs() <= 3.0 * sigma,
            "year {year}: novelty {mean:.4} vs {expected:.4} (3 sigma = {:.4})",
            3.0 * sigma
        );
    }
}

#[test]
fn distribution_matches_span_extraction() {
    let cfg = GeneratorConfig::bundled();
    let (corpus, _) = generate_with_history(&cfg, 5).unwrap();
    let insts: Vec<_> = corpus.instances().collect();
    let table = entity_distribution(insts.iter().copied(), &cfg.tagset);
    let mut total = TypeCounts::default();
    for ty in cfg.tagset.types() {
        let mut c = TypeCounts::default();
        for inst in &insts {
            for span in extract_spans(inst.labels()).iter().filter(|s| &s.etype == ty) {
                c.entities += 1;
                c.tokens += span.end - span.start + 1;
            }
        }
        assert_eq!(table.get(ty.as_str()), c, "{}", ty.as_str());
        total.entities += c.entities;
        total.tokens += c.tokens;
    }
    assert_eq!(table.total, total);
    assert!(total.entities > 0);
}

#[test]
fn alignment_couples_topics_and_entities() {
    // P(entity | topic) = alignment, P(entity | no topic) = 1 - alignment
    for alignment in [0.2, 0.8] {
        let mut cfg = GeneratorConfig::bundled();
        cfg.alignment = alignment;
        let (corpus, history) = generate_with_history(&cfg, 2).unwrap();
        let (mut topic, mut topic_ent, mut plain, mut plain_ent) = (0usize, 0usize, 0usize, 0usize);
        for inst in corpus.instances() {
            let (_, pools) = history.years.iter().find(|(y, _)| *y == inst.year).unwrap();
            let text = format!(" {} ", inst.norm_tokens().join());
            let has_topic = pools["TOPIC"].iter().any(|f| text.contains(&format!(" {} ", f.to_lowercase())));
            let has_entity = inst.labels().iter().any(|t| t.entity_type().is_some());
            if has_topic {
                topic += 1;
                topic_ent += has_entity as usize;
            } else {
                plain += 1;
                plain_ent += has_entity as usize;
            }
        }
        let (pt, pp) = (topic_ent as f64 / topic as f64, plain_ent as f64 / plain as f64);
        assert!((pt - alignment).abs() < 0.05, "alignment {alignment}: P(entity | topic) = {pt:.3}");
        assert!((pp - (1.0 - alignment)).abs() < 0.05, "alignment {alignment}: P(entity | no topic) = {pp:.3}");
    }
}
