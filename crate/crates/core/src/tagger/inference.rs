//! Forward-backward and Viterbi over one sequence, in log space.

use rayon::prelude::*;

use super::model::{CompiledSeq, CrfModel, FeatureVector};
use crate::corpus::Instance;
use crate::error::{Error, Result};
use crate::scalar::{log_sum_exp, Scalar};

const GRADIENT_CHUNK: usize = 32;

/// Per-sequence score tables: emissions `[t * L + y]`, masked transitions
/// `[prev * L + cur]`, and start scores (`0` or `-inf`).
pub(crate) struct Lattice<T> {
    pub len: usize,
    pub labels: usize,
    pub emit: Vec<T>,
    pub trans: Vec<T>,
    pub start: Vec<T>,
}

impl<T: Scalar> Lattice<T> {
    pub fn new(model: &CrfModel<T>, feats: &[FeatureVector]) -> Self {
        let l = model.num_labels();
        let mut emit = vec![T::zero(); feats.len() * l];
        for (t, fv) in feats.iter().enumerate() {
            let row = &mut emit[t * l..(t + 1) * l];
            for &f in &fv.indices {
                let w = &model.weights[f as usize * l..(f as usize + 1) * l];
                for (e, &wy) in row.iter_mut().zip(w) {
                    *e += wy;
                }
            }
        }
        let mut trans = Vec::with_capacity(l * l);
        for a in 0..l {
            for b in 0..l {
                trans.push(if model.transition_allowed(a, b) {
                    model.transition_weight(a, b)
                } else {
                    T::neg_infinity()
                });
            }
        }
        let start = (0..l)
            .map(|y| if model.start_allowed(y) { T::zero() } else { T::neg_infinity() })
            .collect();
        Lattice {
            len: feats.len(),
            labels: l,
            emit,
            trans,
            start,
        }
    }

    pub fn path_score(&self, path: &[usize]) -> T {
        assert_eq!(path.len(), self.len, "path length");
        let l = self.labels;
        let mut s = T::zero();
        for (t, &y) in path.iter().enumerate() {
            s += self.emit[t * l + y];
            s += match t {
                0 => self.start[y],
                _ => self.trans[path[t - 1] * l + y],
            };
        }
        s
    }
}

/// Forward log-messages `[t * L + y]` and the log-partition.
pub(crate) fn forward<T: Scalar>(lat: &Lattice<T>) -> (Vec<T>, T) {
    let l = lat.labels;
    let mut alpha = vec![T::neg_infinity(); lat.len * l];
    if lat.len == 0 {
        return (alpha, T::zero());
    }
    for y in 0..l {
        alpha[y] = lat.start[y] + lat.emit[y];
    }
    for t in 1..lat.len {
        for y in 0..l {
            let prev = &alpha[(t - 1) * l..t * l];
            let lse = log_sum_exp((0..l).map(|a| prev[a] + lat.trans[a * l + y]));
            alpha[t * l + y] = lse + lat.emit[t * l + y];
        }
    }
    let log_z = log_sum_exp(alpha[(lat.len - 1) * l..].iter().copied());
    (alpha, log_z)
}

pub(crate) fn backward<T: Scalar>(lat: &Lattice<T>) -> Vec<T> {
    let l = lat.labels;
    let mut beta = vec![T::zero(); lat.len * l];
    for t in (0..lat.len.saturating_sub(1)).rev() {
        for y in 0..l {
            let next = &beta[(t + 1) * l..(t + 2) * l];
            let emit = &lat.emit[(t + 1) * l..(t + 2) * l];
            beta[t * l + y] = log_sum_exp((0..l).map(|b| lat.trans[y * l + b] + emit[b] + next[b]));
        }
    }
    beta
}

/// Exact argmax path. Ties go to the lowest label index, both at each
/// backpointer and at the final position.
pub(crate) fn viterbi<T: Scalar>(lat: &Lattice<T>) -> Vec<usize> {
    let l = lat.labels;
    if lat.len == 0 {
        return Vec::new();
    }
    let argmax = |scores: &mut dyn Iterator<Item = (usize, T)>| -> (usize, T) {
        let mut best = (0, T::neg_infinity());
        let mut found = false;
        for (i, s) in scores {
            if !found || s > best.1 {
                best = (i, s);
                found = true;
            }
        }
        best
    };
    let mut delta: Vec<T> = (0..l).map(|y| lat.start[y] + lat.emit[y]).collect();
    let mut back = vec![0usize; lat.len * l];
    for t in 1..lat.len {
        let mut next = vec![T::neg_infinity(); l];
        for y in 0..l {
            let (arg, best) = argmax(&mut (0..l).map(|a| (a, delta[a] + lat.trans[a * l + y])));
            back[t * l + y] = arg;
            next[y] = best + lat.emit[t * l + y];
        }
        delta = next;
    }
    let (mut y, _) = argmax(&mut delta.iter().copied().enumerate());
    let mut path = vec![0; lat.len];
    for t in (0..lat.len).rev() {
        path[t] = y;
        y = back[t * l + y];
    }
    path
}

/// Adds `empirical - expected` counts for one sequence into `grad` and
/// returns `log p(gold | tokens)`.
pub(crate) fn accumulate<T: Scalar>(model: &CrfModel<T>, seq: &CompiledSeq, grad: &mut [T]) -> T {
    let gold = seq.gold.as_ref().expect("training sequences carry gold labels");
    let lat = Lattice::new(model, &seq.feats);
    let l = lat.labels;
    let off = model.transition_offset();
    let (alpha, log_z) = forward(&lat);
    let beta = backward(&lat);

    for (t, fv) in seq.feats.iter().enumerate() {
        let marg: Vec<T> = (0..l)
            .map(|y| (alpha[t * l + y] + beta[t * l + y] - log_z).exp())
            .collect();
        for &f in &fv.indices {
            let row = &mut grad[f as usize * l..(f as usize + 1) * l];
            for (g, &m) in row.iter_mut().zip(&marg) {
                *g -= m;
            }
            row[gold[t]] += T::one();
        }
        if t > 0 {
            for a in 0..l {
                let base = alpha[(t - 1) * l + a] - log_z;
                if base == T::neg_infinity() {
                    continue;
                }
                for b in 0..l {
                    let p = (base + lat.trans[a * l + b] + lat.emit[t * l + b] + beta[t * l + b]).exp();
                    grad[off + a * l + b] -= p;
                }
            }
            grad[off + gold[t - 1] * l + gold[t]] += T::one();
        }
    }
    lat.path_score(gold) - log_z
}

/// Regularized log-likelihood and its gradient over compiled sequences.
/// Chunks are reduced in a fixed order, so results do not depend on thread count.
pub(crate) fn objective<T: Scalar>(model: &CrfModel<T>, data: &[CompiledSeq]) -> Result<(T, Vec<T>)> {
    let dim = model.weights.len();
    let partials: Vec<(T, Vec<T>)> = data
        .par_chunks(GRADIENT_CHUNK)
        .map(|chunk| {
            let mut g = vec![T::zero(); dim];
            let v = chunk.iter().fold(T::zero(), |acc, s| acc + accumulate(model, s, &mut g));
            (v, g)
        })
        .collect();
    let mut value = T::zero();
    let mut grad = vec![T::zero(); dim];
    for (v, g) in partials {
        value += v;
        for (a, b) in grad.iter_mut().zip(g) {
            *a += b;
        }
    }
    let lambda = T::lit(model.hyper.l2);
    let mut sq = T::zero();
    for (g, &w) in grad.iter_mut().zip(&model.weights) {
        *g -= lambda * w;
        sq += w * w;
    }
    value -= lambda * sq / T::lit(2.0);
    if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Numeric(format!("non-finite objective {value}")));
    }
    Ok((value, grad))
}

/// `sum log p(labels | tokens) - l2/2 |w|^2` and its gradient for a batch,
/// using the model's current feature vocabulary.
pub fn log_likelihood_and_gradient<T: Scalar>(model: &CrfModel<T>, batch: &[Instance]) -> Result<(T, Vec<T>)> {
    let compiled = batch
        .iter()
        .map(|inst| model.compile(inst, true))
        .collect::<Result<Vec<_>>>()?;
    objective(model, &compiled)
}
