//! Term ranking for topic interpretation and product lookup.
//!
//! * relevance (per topic): `λ·log φ_kw + (1−λ)·log(φ_kw / p_w)`
//! * saliency (corpus-wide): `p(w) · Σ_k p(k|w) · log(p(k|w) / p(k))`
//!
//! Salient terms of a topic are then used to search product titles.

mod query;

use serde::{Deserialize, Serialize};

use crate::lda::{LdaModel, Matrix};

pub use query::{parse_record_count, query_products, sample_products, ProductMatch, SampleProduct};

pub const DEFAULT_LAMBDA: f64 = 0.6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermScore {
    pub word_id: u32,
    pub term: String,
    pub topic: Option<usize>,
    pub score: f64,
    /// 1-based.
    pub rank: usize,
}

/// Ranks every word by descending score, ties by lower word id.
pub fn rank_scores(scores: &[f64], topic: Option<usize>, terms: &[String]) -> Vec<TermScore> {
    let mut ids: Vec<u32> = (0..scores.len() as u32).collect();
    ids.sort_by(|&a, &b| scores[b as usize].total_cmp(&scores[a as usize]).then(a.cmp(&b)));
    ids.into_iter()
        .enumerate()
        .map(|(i, w)| TermScore {
            word_id: w,
            term: terms.get(w as usize).cloned().unwrap_or_else(|| format!("w{w}")),
            topic,
            score: scores[w as usize],
            rank: i + 1,
        })
        .collect()
}

/// Relevance of every word of one topic row. `phi_row` and `p_w` must be
/// strictly positive.
pub fn relevance_scores(phi_row: &[f64], p_w: &[f64], lambda: f64) -> Vec<f64> {
    phi_row
        .iter()
        .zip(p_w)
        .map(|(&phi, &p)| lambda * phi.ln() + (1.0 - lambda) * (phi / p).ln())
        .collect()
}

/// `p(k|w)` as a V × K matrix.
pub fn topic_given_word(phi: &Matrix, p_k: &[f64]) -> Matrix {
    let (k, v) = (phi.rows(), phi.cols());
    let mut out = Matrix::zeros(v, k);
    for w in 0..v {
        let row = out.row_mut(w);
        for t in 0..k {
            row[t] = phi.get(t, w) * p_k[t];
        }
        let total: f64 = row.iter().sum();
        if total > 0.0 {
            row.iter_mut().for_each(|x| *x /= total);
        }
    }
    out
}

/// KL divergence of `p(k|w)` from `p(k)` for every word.
pub fn distinctiveness(phi: &Matrix, p_k: &[f64]) -> Vec<f64> {
    let posterior = topic_given_word(phi, p_k);
    (0..phi.cols())
        .map(|w| {
            let kl: f64 = posterior
                .row(w)
                .iter()
                .zip(p_k)
                .filter(|(&q, &p)| q > 0.0 && p > 0.0)
                .map(|(&q, &p)| q * (q / p).ln())
                .sum();
            kl.max(0.0)
        })
        .collect()
}

pub fn saliency_scores(phi: &Matrix, p_k: &[f64], p_w: &[f64]) -> Vec<f64> {
    distinctiveness(phi, p_k).iter().zip(p_w).map(|(d, p)| d * p).collect()
}

/// Topic marginal from token-assignment mass, `n_k / Σ N`.
pub fn topic_probs(model: &LdaModel) -> Vec<f64> {
    let masses: Vec<f64> = match model.averaged() {
        Some(a) => a.n_k.clone(),
        None => (0..model.num_topics()).map(|k| model.topic_count(k) as f64).collect(),
    };
    normalize(masses)
}

/// Relative frequency of each word over the training tokens.
pub fn corpus_term_probs(model: &LdaModel) -> Vec<f64> {
    let mut counts = vec![0.0; model.vocab_size()];
    for doc in model.documents() {
        for &w in doc {
            counts[w as usize] += 1.0;
        }
    }
    normalize(counts)
}

fn normalize(mut xs: Vec<f64>) -> Vec<f64> {
    let total: f64 = xs.iter().sum();
    if total > 0.0 {
        xs.iter_mut().for_each(|x| *x /= total);
    }
    xs
}

/// Everything needed to rank the terms of one trained model.
#[derive(Debug, Clone)]
pub struct TermRanker {
    pub phi: Matrix,
    pub p_k: Vec<f64>,
    pub p_w: Vec<f64>,
    pub terms: Vec<String>,
}

impl TermRanker {
    pub fn new(model: &LdaModel, terms: &[String]) -> Self {
        TermRanker {
            phi: crate::lda::estimate_phi(model),
            p_k: topic_probs(model),
            p_w: corpus_term_probs(model),
            terms: terms.to_vec(),
        }
    }

    pub fn num_topics(&self) -> usize {
        self.phi.rows()
    }

    /// All terms of `topic` by relevance.
    pub fn relevance(&self, topic: usize, lambda: f64) -> Vec<TermScore> {
        rank_scores(&relevance_scores(self.phi.row(topic), &self.p_w, lambda), Some(topic), &self.terms)
    }

    /// All terms of `topic` by raw φ.
    pub fn by_probability(&self, topic: usize) -> Vec<TermScore> {
        rank_scores(self.phi.row(topic), Some(topic), &self.terms)
    }

    /// All terms by corpus-wide saliency.
    pub fn saliency(&self) -> Vec<TermScore> {
        rank_scores(&saliency_scores(&self.phi, &self.p_k, &self.p_w), None, &self.terms)
    }

    /// The `n` most salient terms whose most likely topic is `topic`.
    pub fn top_salient_terms(&self, topic: usize, n: usize) -> Vec<TermScore> {
        let posterior = topic_given_word(&self.phi, &self.p_k);
        self.saliency()
            .into_iter()
            .filter(|s| crate::lda::dominant_topic(posterior.row(s.word_id as usize)) == topic)
            .take(n)
            .enumerate()
            .map(|(i, s)| TermScore {
                topic: Some(topic),
                rank: i + 1,
                ..s
            })
            .collect()
    }
}
