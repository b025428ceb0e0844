//! Batch training with per-coordinate adaptive steps (resilient
//! backpropagation) and a monotone acceptance test, early-stopped on dev F1.

use log::debug;
use rand::Rng;

use super::inference::objective;
use super::model::{CompiledSeq, CrfModel};
use crate::corpus::Instance;
use crate::error::{Error, Result};
use crate::evalmetrics::entity_f1_labels;
use crate::scalar::Scalar;
use crate::tags::Tag;

const STEP_INIT: f64 = 0.05;
const STEP_MIN: f64 = 1e-8;
const STEP_MAX: f64 = 1.0;
const GROW: f64 = 1.2;
const SHRINK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 30;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    /// Regularized log-likelihood at the start and after every accepted step.
    pub objective: Vec<f64>,
    /// Dev entity F1 (in [0, 1]) at the start and after every accepted step.
    pub dev_f1: Vec<f64>,
    /// Index into `dev_f1` of the weights kept.
    pub best_epoch: usize,
    pub epochs: usize,
    pub features_added: usize,
}

impl TrainReport {
    pub fn best_dev_f1(&self) -> f64 {
        self.dev_f1.get(self.best_epoch).copied().unwrap_or(0.0)
    }
}

fn dev_score<T: Scalar>(model: &CrfModel<T>, dev: &[CompiledSeq], gold: &[&[Tag]]) -> f64 {
    let pred: Vec<Vec<Tag>> = dev.iter().map(|s| model.decode_compiled(s)).collect();
    entity_f1_labels(gold, &pred).map(|r| r.f1()).unwrap_or(0.0)
}

impl<T: Scalar> CrfModel<T> {
    /// Trains from the current weights (warm start). The vocabulary first
    /// grows to cover `data`; new weights take seeded random init. With a
    /// nonempty `dev`, training stops after `patience` epochs without dev-F1
    /// improvement and the dev-best weights (possibly the starting ones) are
    /// kept; otherwise the final weights are kept.
    pub fn train<R: Rng>(&mut self, data: &[Instance], dev: &[Instance], rng: &mut R) -> Result<TrainReport> {
        if data.is_empty() {
            return Err(Error::Usage("training data is empty".into()));
        }
        let features_added = self.grow_vocab(data, rng);
        let train_seqs = data
            .iter()
            .map(|i| self.compile(i, true))
            .collect::<Result<Vec<_>>>()?;
        let dev_seqs = dev
            .iter()
            .map(|i| self.compile(i, false))
            .collect::<Result<Vec<_>>>()?;
        let dev_gold: Vec<&[Tag]> = dev.iter().map(Instance::labels).collect();

        let dim = self.weights.len();
        let mut step = vec![T::lit(STEP_INIT); dim];
        let mut prev_sign = vec![T::zero(); dim];
        let (mut value, mut grad) = objective(self, &train_seqs)?;

        let mut report = TrainReport {
            objective: vec![value.as_f64()],
            features_added,
            ..Default::default()
        };
        let mut best_weights = self.weights.clone();
        let mut best_f1 = if dev.is_empty() { 0.0 } else { dev_score(self, &dev_seqs, &dev_gold) };
        report.dev_f1.push(best_f1);

        let mut direction = vec![T::zero(); dim];
        for epoch in 1..=self.hyper.max_epochs {
            for i in 0..dim {
                let sign = grad[i].signum() * if grad[i] == T::zero() { T::zero() } else { T::one() };
                let agree = sign * prev_sign[i];
                if agree > T::zero() {
                    step[i] = (step[i] * T::lit(GROW)).min(T::lit(STEP_MAX));
                    prev_sign[i] = sign;
                } else if agree < T::zero() {
                    step[i] = (step[i] * T::lit(SHRINK)).max(T::lit(STEP_MIN));
                    prev_sign[i] = T::zero();
                } else {
                    prev_sign[i] = sign;
                }
                direction[i] = prev_sign[i] * step[i];
            }

            let start = self.weights.clone();
            let mut scale = T::one();
            let mut accepted = None;
            for _ in 0..MAX_BACKTRACKS {
                for ((w, &w0), &d) in self.weights.iter_mut().zip(&start).zip(&direction) {
                    *w = w0 + scale * d;
                }
                let (v, g) = objective(self, &train_seqs)?;
                if v >= value {
                    accepted = Some((v, g));
                    break;
                }
                scale = scale * T::lit(0.5);
            }
            let Some((v, g)) = accepted else {
                self.weights = start;
                debug!("no ascent step found at epoch {epoch}; stopping");
                break;
            };
            if scale < T::one() {
                for s in step.iter_mut() {
                    *s = (*s * scale).max(T::lit(STEP_MIN));
                }
            }
            value = v;
            grad = g;
            report.objective.push(value.as_f64());
            report.epochs = epoch;

            if dev.is_empty() {
                continue;
            }
            let f1 = dev_score(self, &dev_seqs, &dev_gold);
            report.dev_f1.push(f1);
            if f1 > best_f1 {
                best_f1 = f1;
                best_weights.clone_from(&self.weights);
                report.best_epoch = epoch;
            } else if epoch - report.best_epoch >= self.hyper.patience {
                break;
            }
        }
        if dev.is_empty() {
            report.best_epoch = report.epochs;
        } else {
            self.weights = best_weights;
        }
        if self.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Numeric("non-finite weights after training".into()));
        }
        Ok(report)
    }
}
