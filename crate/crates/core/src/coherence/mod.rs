//! C_v topic coherence and coherence-driven selection of the topic count.
//!
//! For each topic the `top_n` most probable words `W` are scored: every word
//! gets a context vector of NPMI values against all of `W`, and the topic score
//! is the mean cosine between each word's vector and the sum of all vectors.
//! Probabilities come from boolean sliding windows over the training documents.

mod window;

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::EncodedCorpus;
use crate::lda::{self, estimate_phi, LdaError, LdaHyperparams, LdaModel, Matrix};

pub use window::{WindowStats, DEFAULT_WINDOW_WIDTH};

pub const DEFAULT_EPSILON: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum CoherenceError {
    #[error("top_n = {top_n} must be between 2 and the vocabulary size {vocab}")]
    TopN { top_n: usize, vocab: usize },
    #[error("window statistics do not track term {0}")]
    UntrackedTerm(u32),
    #[error("no k values to sweep")]
    NoCandidates,
    #[error("training with k = {k}: {source}")]
    Train {
        k: usize,
        #[source]
        source: LdaError,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoherenceConfig {
    pub window_width: usize,
    pub top_n: usize,
    pub epsilon: f64,
}

impl Default for CoherenceConfig {
    fn default() -> Self {
        CoherenceConfig {
            window_width: DEFAULT_WINDOW_WIDTH,
            top_n: 20,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

/// NPMI from raw window counts.
///
/// No evidence (a marginal of zero) scores 0; a pair present in every window
/// scores 1. The result is clamped to `[-1, 1]`.
pub fn npmi_from_counts(co: u64, occ_a: u64, occ_b: u64, total: u64, epsilon: f64) -> f64 {
    if total == 0 || occ_a == 0 || occ_b == 0 {
        return 0.0;
    }
    let n = total as f64;
    let (pa, pb, pab) = (occ_a as f64 / n, occ_b as f64 / n, co as f64 / n);
    if co >= total {
        return 1.0;
    }
    let value = ((pab + epsilon) / (pa * pb)).ln() / -(pab + epsilon).ln();
    value.clamp(-1.0, 1.0)
}

pub fn npmi(a: u32, b: u32, stats: &WindowStats, epsilon: f64) -> Result<f64, CoherenceError> {
    let co = stats
        .co_occurrence(a, b)
        .ok_or(CoherenceError::UntrackedTerm(if stats.tracks(a) { b } else { a }))?;
    Ok(npmi_from_counts(co, stats.occurrence(a), stats.occurrence(b), stats.total_windows(), epsilon))
}

/// The `n` highest-probability word ids of a topic row; ties by lower id.
pub fn top_words(row: &[f64], n: usize) -> Vec<u32> {
    let mut ids: Vec<u32> = (0..row.len() as u32).collect();
    ids.sort_by(|&a, &b| row[b as usize].total_cmp(&row[a as usize]).then(a.cmp(&b)));
    ids.truncate(n);
    ids
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvScore {
    pub overall: f64,
    pub per_topic: Vec<f64>,
}

/// C_v of a word set given window statistics.
pub fn cv_of_words(words: &[u32], stats: &WindowStats, epsilon: f64) -> Result<f64, CoherenceError> {
    let n = words.len();
    let mut vectors = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = npmi(words[i], words[j], stats, epsilon)?;
            vectors[i][j] = v;
            vectors[j][i] = v;
        }
    }
    let mut sum = vec![0.0; n];
    for v in &vectors {
        for (s, x) in sum.iter_mut().zip(v) {
            *s += x;
        }
    }
    Ok(vectors.iter().map(|v| cosine(v, &sum)).sum::<f64>() / n as f64)
}

/// C_v of every topic of `phi` (k × V) and their mean.
pub fn cv_score(phi: &Matrix, stats: &WindowStats, config: &CoherenceConfig) -> Result<CvScore, CoherenceError> {
    let vocab = phi.cols();
    if config.top_n < 2 || config.top_n > vocab {
        return Err(CoherenceError::TopN {
            top_n: config.top_n,
            vocab,
        });
    }
    let per_topic = (0..phi.rows())
        .map(|k| cv_of_words(&top_words(phi.row(k), config.top_n), stats, config.epsilon))
        .collect::<Result<Vec<_>, _>>()?;
    let overall = if per_topic.is_empty() {
        0.0
    } else {
        per_topic.iter().sum::<f64>() / per_topic.len() as f64
    };
    Ok(CvScore { overall, per_topic })
}

/// Distinct top words over all topics of all given topic-word matrices.
pub fn union_of_top_words<'a>(phis: impl IntoIterator<Item = &'a Matrix>, top_n: usize) -> Vec<u32> {
    let mut set = BTreeSet::new();
    for phi in phis {
        for k in 0..phi.rows() {
            set.extend(top_words(phi.row(k), top_n));
        }
    }
    set.into_iter().collect()
}

/// The default sweep: k = 5, 10, …, 50.
pub fn default_k_values() -> Vec<usize> {
    (5..=50).step_by(5).collect()
}

/// Per-k training seed derived from the master seed (SplitMix64 finalizer).
pub fn derive_seed(master: u64, k: usize) -> u64 {
    let mut x = master ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Training settings shared by every k of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSpec {
    /// α = alpha_numerator / k.
    pub alpha_numerator: f64,
    pub beta: f64,
    pub iterations: usize,
    pub average_last: usize,
    pub master_seed: u64,
    pub coherence: CoherenceConfig,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            alpha_numerator: 5.0,
            beta: 0.01,
            iterations: 1000,
            average_last: 0,
            master_seed: 0,
            coherence: CoherenceConfig::default(),
        }
    }
}

impl SweepSpec {
    pub fn hyperparams(&self, k: usize) -> LdaHyperparams {
        LdaHyperparams {
            k,
            alpha: self.alpha_numerator / k as f64,
            beta: self.beta,
            iterations: self.iterations,
            seed: derive_seed(self.master_seed, k),
            average_last: self.average_last,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceEntry {
    pub k: usize,
    pub seed: u64,
    pub cv: f64,
    pub per_topic: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub master_seed: u64,
    pub window_width: usize,
    pub top_n: usize,
    pub entries: Vec<CoherenceEntry>,
    pub best_k: usize,
}

impl CoherenceReport {
    /// Two columns, `k` and `cv`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("k\tcv\n");
        for e in &self.entries {
            let _ = writeln!(out, "{}\t{:.6}", e.k, e.cv);
        }
        out
    }

    pub fn entry(&self, k: usize) -> Option<&CoherenceEntry> {
        self.entries.iter().find(|e| e.k == k)
    }
}

/// Largest score wins; equal scores go to the smaller k. NaN never wins.
pub fn best_k(scores: &[(usize, f64)]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &(k, cv) in scores {
        let cv = if cv.is_nan() { f64::NEG_INFINITY } else { cv };
        best = match best {
            None => Some((k, cv)),
            Some((bk, bcv)) if cv > bcv || (cv == bcv && k < bk) => Some((k, cv)),
            keep => keep,
        };
    }
    best.map(|(k, _)| k)
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub report: CoherenceReport,
    /// One model per entry of `report.entries`, same order.
    pub models: Vec<LdaModel>,
}

impl SweepOutcome {
    pub fn best_model(&self) -> &LdaModel {
        let i = self
            .report
            .entries
            .iter()
            .position(|e| e.k == self.report.best_k)
            .expect("best_k is one of the entries");
        &self.models[i]
    }
}

/// Trains one model per k (in parallel), scores each by C_v over the training
/// documents and picks the best.
pub fn select_k(corpus: &EncodedCorpus, k_values: &[usize], spec: &SweepSpec) -> Result<SweepOutcome, CoherenceError> {
    if k_values.is_empty() {
        return Err(CoherenceError::NoCandidates);
    }
    let vocab = corpus.vocabulary().len();
    let top_n = spec.coherence.top_n;
    if top_n < 2 || top_n > vocab {
        return Err(CoherenceError::TopN { top_n, vocab });
    }
    let models = k_values
        .par_iter()
        .map(|&k| lda::train(corpus, &spec.hyperparams(k)).map_err(|source| CoherenceError::Train { k, source }))
        .collect::<Result<Vec<_>, _>>()?;
    let phis: Vec<Matrix> = models.iter().map(estimate_phi).collect();

    let docs: Vec<Vec<u32>> = corpus.documents().iter().map(|d| d.ids.clone()).collect();
    let tracked = union_of_top_words(&phis, top_n);
    let stats = WindowStats::build_for_terms(&docs, vocab, spec.coherence.window_width, &tracked);

    let scores = phis
        .par_iter()
        .map(|phi| cv_score(phi, &stats, &spec.coherence))
        .collect::<Result<Vec<_>, _>>()?;
    let entries: Vec<CoherenceEntry> = k_values
        .iter()
        .zip(scores)
        .map(|(&k, s)| CoherenceEntry {
            k,
            seed: spec.hyperparams(k).seed,
            cv: s.overall,
            per_topic: s.per_topic,
        })
        .collect();
    let pairs: Vec<(usize, f64)> = entries.iter().map(|e| (e.k, e.cv)).collect();
    let best = best_k(&pairs).expect("non-empty");
    for e in &entries {
        log::info!("k = {:>3}: C_v = {:.4}", e.k, e.cv);
    }
    Ok(SweepOutcome {
        report: CoherenceReport {
            master_seed: spec.master_seed,
            window_width: spec.coherence.window_width,
            top_n,
            entries,
            best_k: best,
        },
        models,
    })
}
