//! Linear-chain CRF tagger: feature templates, exact inference and
//! warm-startable maximum-likelihood training.

mod features;
mod inference;
mod model;
mod persist;
mod train;

pub use features::{extract_features, word_shape};
pub use inference::log_likelihood_and_gradient;
pub use model::{CrfHyper, CrfModel, FeatureVector};
pub use train::TrainReport;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_drift_corpus, GeneratorConfig, Instance, InstanceId};
    use crate::evalmetrics::entity_f1;
    use crate::scalar::log_sum_exp;
    use crate::tags::{Tag, TagSet};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn inst(text: &str, tags: &str) -> Instance {
        let ts = TagSet::default();
        Instance::new(
            InstanceId(0),
            2020,
            text.split(' ').map(str::to_string).collect(),
            tags.split(' ').map(|t| ts.parse_tag(t).unwrap()).collect(),
        )
        .unwrap()
    }

    fn no_l2() -> CrfHyper {
        CrfHyper {
            l2: 0.0,
            ..CrfHyper::default()
        }
    }

    fn randomize(model: &mut CrfModel, rng: &mut ChaCha8Rng, scale: f64) {
        for w in model.weights_mut() {
            *w = rng.gen_range(-scale..scale);
        }
    }

    /// Every label path of length `len`, as base-`l` digits.
    fn all_paths(l: usize, len: usize) -> impl Iterator<Item = Vec<usize>> {
        (0..l.pow(len as u32)).map(move |mut c| {
            (0..len)
                .map(|_| {
                    let y = c % l;
                    c /= l;
                    y
                })
                .collect()
        })
    }

    #[test]
    fn zero_weights_single_token() {
        let data = [inst("Jordan", "B-PER")];
        let mut rng = ChaCha8Rng::seed_from_u64(0);

        // Without inside labels every label is reachable: -log L.
        let labels = vec![Tag::Outside, TagSet::default().parse_tag("B-PER").unwrap(), TagSet::default().parse_tag("B-LOC").unwrap()];
        let mut m: CrfModel = CrfModel::with_labels(labels, CrfHyper { init_scale: 0.0, ..no_l2() });
        m.grow_vocab(&data, &mut rng);
        let (v, _) = log_likelihood_and_gradient(&m, &data).unwrap();
        assert!((v + 3f64.ln()).abs() < 1e-12);

        // Full BIO set: inside labels cannot open a sentence, so 4 of 7 remain.
        let mut m: CrfModel = CrfModel::new(&TagSet::default(), CrfHyper { init_scale: 0.0, ..no_l2() });
        m.grow_vocab(&data, &mut rng);
        let (v, g) = log_likelihood_and_gradient(&m, &data).unwrap();
        assert!((v + 4f64.ln()).abs() < 1e-12);

        // Closed form at w = 0: one-hot gold minus uniform over reachable labels.
        let gold = m.label_index(&data[0].labels()[0]).unwrap();
        for f in 0..m.num_features() {
            for (y, label) in m.labels().iter().enumerate() {
                let expected = if label.is_inside() { 0.0 } else { 0.25 };
                let empirical = if y == gold { 1.0 } else { 0.0 };
                assert!((g[f * 7 + y] - (empirical - expected)).abs() < 1e-12);
            }
        }
        assert!(g[m.num_features() * 7..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn zero_gradient_two_tokens_matches_enumeration() {
        let data = [inst("Visit Paris", "O B-LOC")];
        let mut m: CrfModel = CrfModel::new(&TagSet::default(), CrfHyper { init_scale: 0.0, ..no_l2() });
        m.grow_vocab(&data, &mut ChaCha8Rng::seed_from_u64(0));
        let (_, g) = log_likelihood_and_gradient(&m, &data).unwrap();
        let valid: Vec<Vec<usize>> = all_paths(7, 2)
            .filter(|p| m.start_allowed(p[0]) && m.transition_allowed(p[0], p[1]))
            .collect();
        let off = m.num_features() * 7;
        for a in 0..7 {
            for b in 0..7 {
                let count = valid.iter().filter(|p| p[0] == a && p[1] == b).count();
                let emp = if (a, b) == (0, m.label_index(&data[0].labels()[1]).unwrap()) { 1.0 } else { 0.0 };
                let want = emp - count as f64 / valid.len() as f64;
                assert!((g[off + a * 7 + b] - want).abs() < 1e-12, "{a}->{b}");
            }
        }
    }

    #[test]
    fn inference_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sents = [
            ("Go", "O"),
            ("Jordan scores", "B-PER O"),
            ("Visit New York now", "O B-LOC I-LOC O"),
            ("@fan loves Acme Corp !", "O O B-ORG I-ORG O"),
        ];
        let data: Vec<Instance> = sents.iter().map(|(t, l)| inst(t, l)).collect();
        for trial in 0..10 {
            let mut m: CrfModel = CrfModel::new(&TagSet::default(), CrfHyper::default());
            m.grow_vocab(&data, &mut rng);
            randomize(&mut m, &mut rng, 2.0);
            for x in &data {
                let scores: Vec<(Vec<usize>, f64)> = all_paths(7, x.len()).map(|p| {
                    let s = m.path_score(x, &p);
                    (p, s)
                }).collect();
                let brute_z = log_sum_exp(scores.iter().map(|(_, s)| *s));
                assert!((m.log_partition(x) - brute_z).abs() < 1e-8, "trial {trial}");
                let best = scores.iter().map(|(_, s)| *s).fold(f64::NEG_INFINITY, f64::max);
                let vit = m.viterbi_indices(x);
                assert_eq!(m.path_score(x, &vit), best);
                assert!(crate::tags::first_bio_violation(&m.viterbi(x)).is_none());
            }
        }
    }

    #[test]
    fn zero_weights_decode_to_outside() {
        let x = inst("Visit New York now", "O B-LOC I-LOC O");
        let mut m: CrfModel = CrfModel::new(&TagSet::default(), CrfHyper { init_scale: 0.0, ..no_l2() });
        m.grow_vocab(std::slice::from_ref(&x), &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(m.viterbi(&x), vec![Tag::Outside; 4]);
    }

    #[test]
    fn favoring_outside_decodes_outside() {
        let x = inst("Jordan", "O");
        let mut m: CrfModel = CrfModel::new(&TagSet::default(), CrfHyper::default());
        m.grow_vocab(std::slice::from_ref(&x), &mut ChaCha8Rng::seed_from_u64(0));
        let bias = m.feature_index("bias").unwrap();
        m.weights_mut()[bias as usize * 7] = 5.0;
        assert_eq!(m.viterbi(&x), vec![Tag::Outside]);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let data = vec![inst("Visit New York now", "O B-LOC I-LOC O"), inst("Acme hires Jordan", "B-ORG O B-PER")];
        let mut m: CrfModel = CrfModel::new(&TagSet::default(), CrfHyper::default());
        m.grow_vocab(&data, &mut rng);
        randomize(&mut m, &mut rng, 1.0);
        let (_, g) = log_likelihood_and_gradient(&m, &data).unwrap();
        let h = 1e-5;
        for _ in 0..50 {
            let j = rng.gen_range(0..m.weights().len());
            let w0 = m.weights()[j];
            m.weights_mut()[j] = w0 + h;
            let up = log_likelihood_and_gradient(&m, &data).unwrap().0;
            m.weights_mut()[j] = w0 - h;
            let down = log_likelihood_and_gradient(&m, &data).unwrap().0;
            m.weights_mut()[j] = w0;
            let fd = (up - down) / (2.0 * h);
            let rel = (fd - g[j]).abs() / fd.abs().max(g[j].abs()).max(1e-6);
            assert!(rel <= 1e-4, "coord {j}: analytic {} vs fd {fd}", g[j]);
        }
    }

    #[test]
    fn masked_labels_are_rejected_as_unknown() {
        let x = inst("Jordan", "B-PER");
        let m: CrfModel = CrfModel::with_labels(vec![Tag::Outside], CrfHyper::default());
        assert!(log_likelihood_and_gradient(&m, &[x]).is_err());
    }

    fn small_corpus(seed: u64) -> (Vec<Instance>, Vec<Instance>) {
        let mut cfg = GeneratorConfig::bundled();
        cfg.years = 2;
        cfg.per_year = 80;
        let c = generate_drift_corpus(&cfg, seed).unwrap();
        let mut years = c.partitions().values();
        (years.next().unwrap().clone(), years.next().unwrap().clone())
    }

    #[test]
    fn repeated_instance_is_memorized() {
        let x = inst("Visit New York now", "O B-LOC I-LOC O");
        let data = vec![x.clone(); 5];
        let mut m: CrfModel = CrfModel::new(&TagSet::default(), CrfHyper::default());
        let report = m.train(&data, &[], &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let gold: Vec<usize> = x.labels().iter().map(|t| m.label_index(t).unwrap()).collect();
        let p = (m.path_score(&x, &gold) - m.log_partition(&x)).exp();
        assert!(p > 0.99, "p = {p}, {report:?}");
    }

    #[test]
    fn objective_never_decreases_and_training_helps() {
        let (train, dev) = small_corpus(3);
        let mut m: CrfModel = CrfModel::new(&TagSet::default(), CrfHyper::default());
        let report = m.train(&train, &dev, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(report.objective.windows(2).all(|w| w[1] >= w[0]), "{:?}", report.objective);
        assert!(report.best_dev_f1() > 0.3, "{report:?}");
        assert!(m.weights().iter().all(|w| w.is_finite()));
        let pred: Vec<Vec<Tag>> = dev.iter().map(|x| m.viterbi(x)).collect();
        assert_eq!(entity_f1(&dev, &pred).unwrap().f1(), report.best_dev_f1());
    }

    #[test]
    fn warm_start_from_converged_model_is_stable() {
        let (train, dev) = small_corpus(5);
        let mut m: CrfModel = CrfModel::new(&TagSet::default(), CrfHyper::default());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let first = m.train(&train, &dev, &mut rng).unwrap();
        let second = m.train(&train, &dev, &mut rng).unwrap();
        assert_eq!(second.features_added, 0);
        let delta = 100.0 * (second.best_dev_f1() - first.best_dev_f1()).abs();
        assert!(delta < 0.5, "dev F1 moved {delta} points");
    }

    #[test]
    fn training_is_deterministic() {
        let (train, dev) = small_corpus(9);
        let run = || {
            let mut m: CrfModel = CrfModel::new(&TagSet::default(), CrfHyper::default());
            m.train(&train, &dev, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
            m.weights().iter().map(|w| w.to_bits()).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn f32_model_trains() {
        let (train, dev) = small_corpus(9);
        let mut m: CrfModel<f32> = CrfModel::new(&TagSet::default(), CrfHyper::default());
        let report = m.train(&train, &dev, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert!(report.best_dev_f1() > 0.3);
    }

    #[test]
    fn save_load_preserves_decoding() {
        let (train, dev) = small_corpus(13);
        let mut m: CrfModel = CrfModel::new(&TagSet::default(), CrfHyper::default());
        m.train(&train, &dev, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let text = m.to_text();
        let back = CrfModel::<f64>::from_text(&text).unwrap();
        assert_eq!(back, m);
        for x in &dev {
            assert_eq!(back.viterbi(x), m.viterbi(x));
        }
        assert!(CrfModel::<f32>::from_text(&text).is_err());
        assert!(CrfModel::<f64>::from_text(&text[..text.len() / 2]).is_err());
        assert!(CrfModel::<f64>::from_text("hello\n").is_err());
    }
}
