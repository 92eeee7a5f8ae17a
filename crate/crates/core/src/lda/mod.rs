//! Latent Dirichlet allocation trained by collapsed Gibbs sampling.
//!
//! Each token's topic is resampled from
//!
//! ```text
//! p(z_i = k | z_-i, w) ∝ (n_dk + α) · (n_kw + β) / (n_k + Vβ)
//! ```
//!
//! with all counts excluding token `i`. The model returned by [`train`] is the
//! state after the final sweep (optionally with counts averaged over the last
//! few sweeps, see [`LdaHyperparams::average_last`]).

mod io;
mod matrix;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::EncodedCorpus;

pub use matrix::Matrix;

#[derive(Debug, Error)]
pub enum LdaError {
    #[error("invalid hyperparameters: {0}")]
    Hyperparams(String),
    #[error("corpus has no tokens")]
    EmptyCorpus,
    #[error("vocabulary has {0} terms; at least 2 are required")]
    VocabularyTooSmall(usize),
    #[error("k = {k} is not smaller than the corpus token count {tokens}")]
    Degenerate { k: usize, tokens: usize },
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaHyperparams {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
    /// Average counts over this many final sweeps (0: use the final sample only).
    #[serde(default)]
    pub average_last: usize,
}

impl LdaHyperparams {
    /// α = 5/k, β = 0.01, 1000 sweeps.
    pub fn new(k: usize, seed: u64) -> Self {
        LdaHyperparams {
            k,
            alpha: 5.0 / k as f64,
            beta: 0.01,
            iterations: 1000,
            seed,
            average_last: 0,
        }
    }

    pub fn validate(&self) -> Result<(), LdaError> {
        let bad = |m: String| Err(LdaError::Hyperparams(m));
        if self.k < 2 {
            return bad(format!("k must be at least 2, got {}", self.k));
        }
        if self.k > u32::MAX as usize {
            return bad("k too large".into());
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be positive, got {}", self.beta));
        }
        if self.iterations == 0 {
            return bad("iterations must be at least 1".into());
        }
        if self.average_last > self.iterations {
            return bad("average_last exceeds iterations".into());
        }
        Ok(())
    }
}

/// Count matrices averaged over several sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedCounts {
    pub samples: usize,
    pub n_dk: Vec<f64>,
    pub n_kw: Vec<f64>,
    pub n_k: Vec<f64>,
}

/// Sampler state: per-token assignments and the count tables they induce.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    hp: LdaHyperparams,
    vocab_size: usize,
    vocab_hash: String,
    handles: Vec<String>,
    docs: Vec<Vec<u32>>,
    z: Vec<Vec<u32>>,
    n_dk: Vec<u32>,
    n_kw: Vec<u32>,
    n_k: Vec<u32>,
    averaged: Option<AveragedCounts>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTables {
    pub n_dk: Vec<u32>,
    pub n_kw: Vec<u32>,
    pub n_k: Vec<u32>,
}

fn tally(docs: &[Vec<u32>], z: &[Vec<u32>], k: usize, v: usize) -> CountTables {
    let mut t = CountTables {
        n_dk: vec![0; docs.len() * k],
        n_kw: vec![0; k * v],
        n_k: vec![0; k],
    };
    for (d, (words, topics)) in docs.iter().zip(z).enumerate() {
        for (&w, &topic) in words.iter().zip(topics) {
            let topic = topic as usize;
            t.n_dk[d * k + topic] += 1;
            t.n_kw[topic * v + w as usize] += 1;
            t.n_k[topic] += 1;
        }
    }
    t
}

/// Unnormalized collapsed conditional for one topic, counts excluding the token.
#[inline]
pub fn conditional_weight(n_dk: u32, n_kw: u32, n_k: u32, alpha: f64, beta: f64, vocab_size: usize) -> f64 {
    (n_dk as f64 + alpha) * (n_kw as f64 + beta) / (n_k as f64 + vocab_size as f64 * beta)
}

impl LdaModel {
    /// Builds a model from explicit assignments (counts are derived from `z`).
    pub fn from_assignments(corpus: &EncodedCorpus, hp: LdaHyperparams, z: Vec<Vec<u32>>) -> Result<Self, LdaError> {
        hp.validate()?;
        let docs: Vec<Vec<u32>> = corpus.documents().iter().map(|d| d.ids.clone()).collect();
        let handles = corpus.documents().iter().map(|d| d.shop_handle.clone()).collect();
        Self::assemble(hp, corpus.vocabulary().len(), corpus.vocabulary().content_hash(), handles, docs, z)
    }

    fn assemble(
        hp: LdaHyperparams,
        vocab_size: usize,
        vocab_hash: String,
        handles: Vec<String>,
        docs: Vec<Vec<u32>>,
        z: Vec<Vec<u32>>,
    ) -> Result<Self, LdaError> {
        if z.len() != docs.len() || z.iter().zip(&docs).any(|(a, b)| a.len() != b.len()) {
            return Err(LdaError::Format("assignment shape does not match documents".into()));
        }
        if z.iter().flatten().any(|&t| t as usize >= hp.k) {
            return Err(LdaError::Format("assignment outside topic range".into()));
        }
        if docs.iter().flatten().any(|&w| w as usize >= vocab_size) {
            return Err(LdaError::Format("word id outside vocabulary".into()));
        }
        let CountTables { n_dk, n_kw, n_k } = tally(&docs, &z, hp.k, vocab_size);
        Ok(LdaModel {
            hp,
            vocab_size,
            vocab_hash,
            handles,
            docs,
            z,
            n_dk,
            n_kw,
            n_k,
            averaged: None,
        })
    }

    pub fn hyperparams(&self) -> &LdaHyperparams {
        &self.hp
    }

    pub fn num_topics(&self) -> usize {
        self.hp.k
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn vocab_hash(&self) -> &str {
        &self.vocab_hash
    }

    pub fn num_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn handles(&self) -> &[String] {
        &self.handles
    }

    pub fn documents(&self) -> &[Vec<u32>] {
        &self.docs
    }

    pub fn assignments(&self) -> &[Vec<u32>] {
        &self.z
    }

    pub fn token_count(&self) -> usize {
        self.n_k.iter().map(|&n| n as usize).sum()
    }

    pub fn counts(&self) -> CountTables {
        CountTables {
            n_dk: self.n_dk.clone(),
            n_kw: self.n_kw.clone(),
            n_k: self.n_k.clone(),
        }
    }

    pub fn doc_topic_count(&self, d: usize, k: usize) -> u32 {
        self.n_dk[d * self.hp.k + k]
    }

    pub fn topic_word_count(&self, k: usize, w: usize) -> u32 {
        self.n_kw[k * self.vocab_size + w]
    }

    pub fn topic_count(&self, k: usize) -> u32 {
        self.n_k[k]
    }

    pub fn averaged(&self) -> Option<&AveragedCounts> {
        self.averaged.as_ref()
    }

    /// Recomputes the count tables from `z`.
    pub fn recount(&self) -> CountTables {
        tally(&self.docs, &self.z, self.hp.k, self.vocab_size)
    }

    pub fn counts_consistent(&self) -> bool {
        self.recount() == self.counts()
    }

    /// Unnormalized conditional over topics for token `i` of document `d`,
    /// with that token's own assignment excluded from the counts.
    pub fn token_conditional(&self, d: usize, i: usize) -> Vec<f64> {
        let k = self.hp.k;
        let w = self.docs[d][i] as usize;
        let own = self.z[d][i] as usize;
        (0..k)
            .map(|t| {
                let minus = u32::from(t == own);
                conditional_weight(
                    self.n_dk[d * k + t] - minus,
                    self.n_kw[t * self.vocab_size + w] - minus,
                    self.n_k[t] - minus,
                    self.hp.alpha,
                    self.hp.beta,
                    self.vocab_size,
                )
            })
            .collect()
    }

    fn sweep(&mut self, rng: &mut ChaCha8Rng, weights: &mut [f64]) {
        let k = self.hp.k;
        let v = self.vocab_size;
        let (alpha, beta) = (self.hp.alpha, self.hp.beta);
        let v_beta = v as f64 * beta;
        for d in 0..self.docs.len() {
            let doc_row = d * k;
            for i in 0..self.docs[d].len() {
                let w = self.docs[d][i] as usize;
                let old = self.z[d][i] as usize;
                self.n_dk[doc_row + old] -= 1;
                self.n_kw[old * v + w] -= 1;
                self.n_k[old] -= 1;

                let mut total = 0.0;
                for (t, slot) in weights.iter_mut().enumerate() {
                    total += (self.n_dk[doc_row + t] as f64 + alpha) * (self.n_kw[t * v + w] as f64 + beta)
                        / (self.n_k[t] as f64 + v_beta);
                    *slot = total;
                }
                let u = rng.random::<f64>() * total;
                let new = weights.iter().position(|&c| u < c).unwrap_or(k - 1);

                self.z[d][i] = new as u32;
                self.n_dk[doc_row + new] += 1;
                self.n_kw[new * v + w] += 1;
                self.n_k[new] += 1;
            }
        }
    }

    fn accumulate(&mut self) {
        let acc = self.averaged.get_or_insert_with(|| AveragedCounts {
            samples: 0,
            n_dk: vec![0.0; self.n_dk.len()],
            n_kw: vec![0.0; self.n_kw.len()],
            n_k: vec![0.0; self.n_k.len()],
        });
        let n = acc.samples as f64;
        let blend = |avg: &mut [f64], cur: &[u32]| {
            for (a, &c) in avg.iter_mut().zip(cur) {
                *a = (*a * n + c as f64) / (n + 1.0);
            }
        };
        blend(&mut acc.n_dk, &self.n_dk);
        blend(&mut acc.n_kw, &self.n_kw);
        blend(&mut acc.n_k, &self.n_k);
        acc.samples += 1;
    }
}

/// Trains a model with the given hyperparameters.
pub fn train(corpus: &EncodedCorpus, hp: &LdaHyperparams) -> Result<LdaModel, LdaError> {
    train_observed(corpus, hp, |_, _| {})
}

/// Like [`train`], calling `observer(sweep, &model)` after every sweep (1-based).
pub fn train_observed(
    corpus: &EncodedCorpus,
    hp: &LdaHyperparams,
    mut observer: impl FnMut(usize, &LdaModel),
) -> Result<LdaModel, LdaError> {
    hp.validate()?;
    let tokens = corpus.token_count();
    if tokens == 0 {
        return Err(LdaError::EmptyCorpus);
    }
    if corpus.vocabulary().len() < 2 {
        return Err(LdaError::VocabularyTooSmall(corpus.vocabulary().len()));
    }
    if hp.k >= tokens {
        return Err(LdaError::Degenerate { k: hp.k, tokens });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let z: Vec<Vec<u32>> = corpus
        .documents()
        .iter()
        .map(|d| d.ids.iter().map(|_| rng.random_range(0..hp.k as u32)).collect())
        .collect();
    let mut model = LdaModel::from_assignments(corpus, hp.clone(), z)?;
    let mut weights = vec![0.0; hp.k];
    let average_from = hp.iterations - hp.average_last;
    for sweep in 1..=hp.iterations {
        model.sweep(&mut rng, &mut weights);
        if hp.average_last > 0 && sweep > average_from {
            model.accumulate();
        }
        observer(sweep, &model);
    }
    Ok(model)
}

/// Row-stochastic topic-word and document-topic estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicDistributions {
    pub phi: Matrix,
    pub theta: Matrix,
}

impl TopicDistributions {
    pub fn of(model: &LdaModel) -> Self {
        TopicDistributions {
            phi: estimate_phi(model),
            theta: estimate_theta(model),
        }
    }
}

/// `φ[k][w]` = (n_kw + β) / (n_k + Vβ).
pub fn estimate_phi(model: &LdaModel) -> Matrix {
    let (k, v, beta) = (model.hp.k, model.vocab_size, model.hp.beta);
    let mut phi = Matrix::zeros(k, v);
    for t in 0..k {
        let (row_counts, total): (Vec<f64>, f64) = match &model.averaged {
            Some(a) => (a.n_kw[t * v..(t + 1) * v].to_vec(), a.n_k[t]),
            None => (
                model.n_kw[t * v..(t + 1) * v].iter().map(|&c| c as f64).collect(),
                model.n_k[t] as f64,
            ),
        };
        let denom = total + v as f64 * beta;
        for (out, c) in phi.row_mut(t).iter_mut().zip(row_counts) {
            *out = (c + beta) / denom;
        }
    }
    phi
}

/// `θ[d][k]` = (n_dk + α) / (N_d + Kα).
pub fn estimate_theta(model: &LdaModel) -> Matrix {
    let (k, alpha) = (model.hp.k, model.hp.alpha);
    let mut theta = Matrix::zeros(model.docs.len(), k);
    for d in 0..model.docs.len() {
        let denom = model.docs[d].len() as f64 + k as f64 * alpha;
        for t in 0..k {
            let c = match &model.averaged {
                Some(a) => a.n_dk[d * k + t],
                None => model.n_dk[d * k + t] as f64,
            };
            theta.row_mut(d)[t] = (c + alpha) / denom;
        }
    }
    theta
}

/// Index of the largest entry; ties go to the lowest index.
pub fn dominant_topic(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in row.iter().enumerate().skip(1) {
        if p > row[best] {
            best = i;
        }
    }
    best
}

/// Number of documents for which each topic is dominant.
pub fn dominant_topic_counts(theta: &Matrix) -> Vec<usize> {
    let mut counts = vec![0; theta.cols()];
    for d in 0..theta.rows() {
        counts[dominant_topic(theta.row(d))] += 1;
    }
    counts
}
