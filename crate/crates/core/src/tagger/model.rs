use std::collections::HashMap;

use rand::Rng;

use super::features::extract_features;
use super::inference::{self, Lattice};
use crate::corpus::Instance;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tags::{Tag, TagSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrfHyper {
    /// L2 strength: the objective subtracts `l2 / 2 * |w|^2`.
    pub l2: f64,
    pub max_epochs: usize,
    /// Epochs without dev-F1 improvement before stopping.
    pub patience: usize,
    /// Half-width of the uniform init for newly added feature weights.
    pub init_scale: f64,
}

impl Default for CrfHyper {
    fn default() -> Self {
        CrfHyper {
            l2: 1e-3,
            max_epochs: 100,
            patience: 10,
            init_scale: 0.01,
        }
    }
}

/// Active feature indices at one position. All feature values are 1.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeatureVector {
    pub indices: Vec<u32>,
}

/// Instance mapped onto a model's feature and label indices.
#[derive(Debug, Clone)]
pub(crate) struct CompiledSeq {
    pub feats: Vec<FeatureVector>,
    pub gold: Option<Vec<usize>>,
}

/// Linear-chain CRF over BIO labels.
///
/// Weight layout: `features x labels` emission block, then a `labels x labels`
/// transition block indexed `[prev * L + cur]`. Transitions into `I-X` from
/// anything but `B-X`/`I-X`, and `I-X` at sequence start, are masked to `-inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrfModel<T: Scalar = f64> {
    pub(crate) labels: Vec<Tag>,
    label_index: HashMap<Tag, usize>,
    pub(crate) feature_names: Vec<String>,
    feature_index: HashMap<String, u32>,
    pub(crate) weights: Vec<T>,
    pub hyper: CrfHyper,
}

impl<T: Scalar> CrfModel<T> {
    pub fn new(tagset: &TagSet, hyper: CrfHyper) -> Self {
        Self::with_labels(tagset.labels(), hyper)
    }

    pub fn with_labels(labels: Vec<Tag>, hyper: CrfHyper) -> Self {
        let label_index = labels.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
        let n = labels.len();
        CrfModel {
            labels,
            label_index,
            feature_names: Vec::new(),
            feature_index: HashMap::new(),
            weights: vec![T::zero(); n * n],
            hyper,
        }
    }

    pub fn labels(&self) -> &[Tag] {
        &self.labels
    }

    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn num_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [T] {
        &mut self.weights
    }

    pub fn label_index(&self, tag: &Tag) -> Option<usize> {
        self.label_index.get(tag).copied()
    }

    pub fn feature_index(&self, name: &str) -> Option<u32> {
        self.feature_index.get(name).copied()
    }

    pub(crate) fn transition_offset(&self) -> usize {
        self.feature_names.len() * self.labels.len()
    }

    pub fn emission_weight(&self, feature: u32, label: usize) -> T {
        self.weights[feature as usize * self.labels.len() + label]
    }

    pub fn transition_weight(&self, prev: usize, cur: usize) -> T {
        self.weights[self.transition_offset() + prev * self.labels.len() + cur]
    }

    pub fn transition_allowed(&self, prev: usize, cur: usize) -> bool {
        self.labels[cur].may_follow(Some(&self.labels[prev]))
    }

    pub fn start_allowed(&self, label: usize) -> bool {
        self.labels[label].may_follow(None)
    }

    /// Adds features seen in `data` to the vocabulary. New emission weights
    /// are drawn uniformly from `[-init_scale, init_scale]`; existing weights
    /// are untouched. Returns the number of features added.
    pub fn grow_vocab<R: Rng>(&mut self, data: &[Instance], rng: &mut R) -> usize {
        let before = self.feature_names.len();
        for inst in data {
            for i in 0..inst.len() {
                for name in extract_features(inst, i) {
                    if !self.feature_index.contains_key(&name) {
                        self.feature_index.insert(name.clone(), self.feature_names.len() as u32);
                        self.feature_names.push(name);
                    }
                }
            }
        }
        let added = self.feature_names.len() - before;
        if added > 0 {
            let n = self.labels.len();
            let transitions = self.weights.split_off(before * n);
            let scale = self.hyper.init_scale;
            self.weights.extend((0..added * n).map(|_| {
                if scale > 0.0 {
                    T::lit(rng.gen_range(-scale..=scale))
                } else {
                    T::zero()
                }
            }));
            self.weights.extend(transitions);
        }
        added
    }

    /// Known feature indices at position `i`; unseen features are dropped.
    pub fn featurize(&self, inst: &Instance, i: usize) -> FeatureVector {
        let indices = extract_features(inst, i)
            .iter()
            .filter_map(|name| self.feature_index.get(name).copied())
            .collect();
        FeatureVector { indices }
    }

    pub(crate) fn compile(&self, inst: &Instance, with_gold: bool) -> Result<CompiledSeq> {
        let feats = (0..inst.len()).map(|i| self.featurize(inst, i)).collect();
        let gold = if with_gold {
            let g = inst
                .labels()
                .iter()
                .map(|t| {
                    self.label_index(t)
                        .ok_or_else(|| Error::Data(format!("instance {}: label {t} not in model label set", inst.id)))
                })
                .collect::<Result<Vec<_>>>()?;
            Some(g)
        } else {
            None
        };
        Ok(CompiledSeq { feats, gold })
    }

    pub(crate) fn lattice(&self, seq: &CompiledSeq) -> Lattice<T> {
        Lattice::new(self, &seq.feats)
    }

    /// Unnormalized score of a label path; `-inf` when the path is masked.
    pub fn path_score(&self, inst: &Instance, path: &[usize]) -> T {
        let seq = self.compile(inst, false).expect("no gold requested");
        self.lattice(&seq).path_score(path)
    }

    pub fn log_partition(&self, inst: &Instance) -> T {
        let seq = self.compile(inst, false).expect("no gold requested");
        inference::forward(&self.lattice(&seq)).1
    }

    /// Exact best label path (indices into [`CrfModel::labels`]).
    pub fn viterbi_indices(&self, inst: &Instance) -> Vec<usize> {
        let seq = self.compile(inst, false).expect("no gold requested");
        inference::viterbi(&self.lattice(&seq))
    }

    /// Exact best label sequence; always well-formed BIO.
    pub fn viterbi(&self, inst: &Instance) -> Vec<Tag> {
        self.viterbi_indices(inst)
            .into_iter()
            .map(|y| self.labels[y].clone())
            .collect()
    }

    pub(crate) fn decode_compiled(&self, seq: &CompiledSeq) -> Vec<Tag> {
        inference::viterbi(&self.lattice(seq))
            .into_iter()
            .map(|y| self.labels[y].clone())
            .collect()
    }

    pub(crate) fn from_parts(labels: Vec<Tag>, feature_names: Vec<String>, weights: Vec<T>, hyper: CrfHyper) -> Result<Self> {
        let mut m = Self::with_labels(labels, hyper);
        let expected = feature_names.len() * m.labels.len() + m.labels.len() * m.labels.len();
        if weights.len() != expected {
            return Err(Error::Data(format!("expected {expected} weights, found {}", weights.len())));
        }
        for (i, name) in feature_names.iter().enumerate() {
            if m.feature_index.insert(name.clone(), i as u32).is_some() {
                return Err(Error::Data(format!("duplicate feature {name:?}")));
            }
        }
        m.feature_names = feature_names;
        m.weights = weights;
        Ok(m)
    }
}
