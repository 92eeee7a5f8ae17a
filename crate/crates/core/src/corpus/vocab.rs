use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{CorpusError, Document};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VocabConfig {
    pub min_df: usize,
    pub max_df_ratio: f64,
}

impl Default for VocabConfig {
    fn default() -> Self {
        VocabConfig {
            min_df: 2,
            max_df_ratio: 0.5,
        }
    }
}

/// Dense term ↔ id mapping with per-term document frequency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    ids: HashMap<String, u32>,
    df: Vec<usize>,
}

impl Vocabulary {
    /// Builds a vocabulary from explicit `(term, df)` pairs in id order.
    pub fn from_entries(entries: Vec<(String, usize)>) -> Result<Self, CorpusError> {
        let mut terms = Vec::with_capacity(entries.len());
        let mut df = Vec::with_capacity(entries.len());
        let mut ids = HashMap::with_capacity(entries.len());
        for (i, (term, freq)) in entries.into_iter().enumerate() {
            if ids.insert(term.clone(), i as u32).is_some() {
                return Err(CorpusError::Format(format!("duplicate term `{term}`")));
            }
            terms.push(term);
            df.push(freq);
        }
        Ok(Vocabulary { terms, ids, df })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn id(&self, term: &str) -> Option<u32> {
        self.ids.get(term).copied()
    }

    pub fn term(&self, id: u32) -> Option<&str> {
        self.terms.get(id as usize).map(String::as_str)
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn document_frequency(&self, id: u32) -> usize {
        self.df[id as usize]
    }

    /// `id\tterm\tdf` per line, in id order.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (i, (t, df)) in self.terms.iter().zip(&self.df).enumerate() {
            let _ = writeln!(out, "{i}\t{t}\t{df}");
        }
        out
    }

    pub fn read_tsv<R: BufRead>(reader: R) -> Result<Self, CorpusError> {
        let mut entries = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let bad = |what: &str| CorpusError::Format(format!("vocabulary line {}: {what}", n + 1));
            let mut cols = line.split('\t');
            let (Some(id), Some(term), Some(df), None) = (cols.next(), cols.next(), cols.next(), cols.next()) else {
                return Err(bad("expected 3 tab-separated columns"));
            };
            let id: usize = id.parse().map_err(|_| bad("bad id"))?;
            if id != entries.len() {
                return Err(bad("ids must be dense and ascending"));
            }
            let df: usize = df.parse().map_err(|_| bad("bad document frequency"))?;
            entries.push((term.to_string(), df));
        }
        Vocabulary::from_entries(entries)
    }

    /// SHA-256 of the TSV form; ties serialized models to their vocabulary.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_tsv().as_bytes()))
    }
}

/// Keeps terms with `min_df ≤ df ≤ max_df_ratio·|docs|`; ids by descending df,
/// then lexicographic term.
pub fn build_vocabulary(docs: &[Document], config: &VocabConfig) -> Result<Vocabulary, CorpusError> {
    if docs.is_empty() {
        return Err(CorpusError::NoDocuments);
    }
    let mut df: HashMap<&str, usize> = HashMap::new();
    for doc in docs {
        let distinct: HashSet<&str> = doc.tokens.iter().map(String::as_str).collect();
        for t in distinct {
            *df.entry(t).or_default() += 1;
        }
    }
    let ceiling = config.max_df_ratio * docs.len() as f64;
    let mut kept: Vec<(&str, usize)> = df
        .into_iter()
        .filter(|&(_, f)| f >= config.min_df && f as f64 <= ceiling)
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    if kept.is_empty() {
        return Err(CorpusError::EmptyVocabulary {
            min_df: config.min_df,
            max_df_ratio: config.max_df_ratio,
        });
    }
    Vocabulary::from_entries(kept.into_iter().map(|(t, f)| (t.to_string(), f)).collect())
}
