//! One bag-of-words document per shop, built from its aggregated product titles.

pub mod tokenize;
pub mod vocab;

use std::fmt::Write as _;
use std::io::BufRead;

use thiserror::Error;

use crate::harvest::ShopDataset;

pub use tokenize::{tokenize, Lemmatizer, Tokenizer, TokenizerConfig, DEFAULT_STOPWORDS};
pub use vocab::{build_vocabulary, VocabConfig, Vocabulary};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("no documents to build a vocabulary from")]
    NoDocuments,
    #[error("vocabulary is empty after filtering (min_df={min_df}, max_df_ratio={max_df_ratio})")]
    EmptyVocabulary { min_df: usize, max_df_ratio: f64 },
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub shop_handle: String,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DocumentSet {
    pub documents: Vec<Document>,
    /// Shops whose titles produced no tokens.
    pub dropped_empty: Vec<String>,
}

/// Concatenates each shop's titles in listing order and tokenizes the result.
pub fn build_documents(dataset: &ShopDataset, tokenizer: &Tokenizer) -> DocumentSet {
    let mut set = DocumentSet::default();
    for shop in dataset.shops() {
        let tokens: Vec<String> = shop
            .products
            .iter()
            .flat_map(|p| tokenizer.tokenize(&p.title))
            .collect();
        if tokens.is_empty() {
            set.dropped_empty.push(shop.handle.clone());
        } else {
            set.documents.push(Document {
                shop_handle: shop.handle.clone(),
                tokens,
            });
        }
    }
    set
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedDocument {
    pub shop_handle: String,
    pub ids: Vec<u32>,
}

/// Integer-encoded documents over a shared vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedCorpus {
    documents: Vec<EncodedDocument>,
    vocabulary: Vocabulary,
    /// Documents with no in-vocabulary token.
    pub dropped: Vec<String>,
}

impl EncodedCorpus {
    /// Assembles a corpus from already encoded documents; every id must be in range.
    pub fn from_parts(vocabulary: Vocabulary, documents: Vec<EncodedDocument>) -> Result<Self, CorpusError> {
        let v = vocabulary.len() as u32;
        for d in &documents {
            if let Some(bad) = d.ids.iter().find(|&&id| id >= v) {
                return Err(CorpusError::Format(format!(
                    "document `{}` references id {bad} outside vocabulary of {v}",
                    d.shop_handle
                )));
            }
        }
        Ok(EncodedCorpus {
            documents,
            vocabulary,
            dropped: Vec::new(),
        })
    }

    /// Synthetic corpus over terms `w0..w{V-1}`; handy for experiments and tests.
    pub fn synthetic(vocab_size: usize, docs: Vec<Vec<u32>>) -> Result<Self, CorpusError> {
        let mut df = vec![0usize; vocab_size];
        for d in &docs {
            let mut ids = d.clone();
            ids.sort_unstable();
            ids.dedup();
            for id in ids {
                if let Some(slot) = df.get_mut(id as usize) {
                    *slot += 1;
                }
            }
        }
        let vocab = Vocabulary::from_entries((0..vocab_size).map(|i| (format!("w{i}"), df[i])).collect())?;
        let documents = docs
            .into_iter()
            .enumerate()
            .map(|(i, ids)| EncodedDocument {
                shop_handle: format!("doc{i}"),
                ids,
            })
            .collect();
        EncodedCorpus::from_parts(vocab, documents)
    }

    pub fn documents(&self) -> &[EncodedDocument] {
        &self.documents
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn token_count(&self) -> usize {
        self.documents.iter().map(|d| d.ids.len()).sum()
    }

    pub fn decode(&self, index: usize) -> Vec<&str> {
        self.documents[index]
            .ids
            .iter()
            .map(|&id| self.vocabulary.term(id).expect("id in range"))
            .collect()
    }

    /// `shop_handle id id ...` per line.
    pub fn documents_to_text(&self) -> String {
        let mut out = String::new();
        for d in &self.documents {
            out.push_str(&d.shop_handle);
            for id in &d.ids {
                let _ = write!(out, " {id}");
            }
            out.push('\n');
        }
        out
    }

    pub fn read(vocabulary: Vocabulary, documents: impl BufRead) -> Result<Self, CorpusError> {
        let mut docs = Vec::new();
        for (n, line) in documents.lines().enumerate() {
            let line = line?;
            let mut parts = line.split(' ');
            let Some(handle) = parts.next().filter(|h| !h.is_empty()) else {
                continue;
            };
            let ids = parts
                .map(|p| {
                    p.parse::<u32>()
                        .map_err(|_| CorpusError::Format(format!("documents line {}: bad id `{p}`", n + 1)))
                })
                .collect::<Result<Vec<_>, _>>()?;
            docs.push(EncodedDocument {
                shop_handle: handle.to_string(),
                ids,
            });
        }
        EncodedCorpus::from_parts(vocabulary, docs)
    }
}

/// Maps tokens to ids, dropping out-of-vocabulary tokens and then empty documents.
pub fn encode(docs: &[Document], vocabulary: &Vocabulary) -> EncodedCorpus {
    let mut documents = Vec::with_capacity(docs.len());
    let mut dropped = Vec::new();
    for doc in docs {
        let ids: Vec<u32> = doc.tokens.iter().filter_map(|t| vocabulary.id(t)).collect();
        if ids.is_empty() {
            dropped.push(doc.shop_handle.clone());
        } else {
            documents.push(EncodedDocument {
                shop_handle: doc.shop_handle.clone(),
                ids,
            });
        }
    }
    EncodedCorpus {
        documents,
        vocabulary: vocabulary.clone(),
        dropped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harvest::{Category, Product, Shop};
    use proptest::prelude::*;

    fn shop(handle: &str, titles: &[&str]) -> Shop {
        Shop {
            handle: handle.into(),
            retrieved_at: "2020-04-01T12:00:00Z".parse().unwrap(),
            products: titles.iter().map(|t| Product::new(*t, 1.0, Category::Account)).collect(),
        }
    }

    #[test]
    fn documents_from_titles() {
        let ds = ShopDataset::new(vec![
            shop("a", &["Netflix Premium", "Spotify Family"]),
            shop("b", &["!!! ---"]),
            shop("c", &[]),
        ])
        .unwrap();
        let set = build_documents(&ds, &Tokenizer::default());
        assert_eq!(set.documents.len(), 1);
        assert_eq!(set.documents[0].tokens, ["netflix", "premium", "spotify", "family"]);
        assert_eq!(set.dropped_empty, ["b", "c"]);
    }

    #[test]
    fn encode_drops_oov_and_empty() {
        let vocab = Vocabulary::from_entries(vec![("combo".into(), 2), ("list".into(), 2)]).unwrap();
        let docs = vec![
            Document { shop_handle: "a".into(), tokens: vec!["combo".into(), "yahoo".into(), "list".into(), "combo".into()] },
            Document { shop_handle: "b".into(), tokens: vec!["netflix".into()] },
        ];
        let corpus = encode(&docs, &vocab);
        assert_eq!(corpus.documents().len(), 1);
        assert_eq!(corpus.documents()[0].ids, [0, 1, 0]);
        assert_eq!(corpus.decode(0), ["combo", "list", "combo"]);
        assert_eq!(corpus.dropped, ["b"]);
    }

    #[test]
    fn text_roundtrip() {
        let corpus = EncodedCorpus::synthetic(3, vec![vec![0, 2, 2], vec![1]]).unwrap();
        let vocab = Vocabulary::read_tsv(corpus.vocabulary().to_tsv().as_bytes()).unwrap();
        let back = EncodedCorpus::read(vocab, corpus.documents_to_text().as_bytes()).unwrap();
        assert_eq!(back, corpus);
        assert!(EncodedCorpus::synthetic(2, vec![vec![2]]).is_err());
    }

    proptest! {
        #[test]
        fn decode_encode_keeps_in_vocab_tokens(tokens in proptest::collection::vec("[a-e]{1,2}", 1..40)) {
            let vocab = Vocabulary::from_entries(
                ["a", "b", "c", "aa", "bb"].iter().map(|t| (t.to_string(), 1)).collect()
            ).unwrap();
            let doc = Document { shop_handle: "s".into(), tokens: tokens.clone() };
            let corpus = encode(std::slice::from_ref(&doc), &vocab);
            let expected: Vec<&str> = tokens.iter().map(String::as_str).filter(|t| vocab.id(t).is_some()).collect();
            if expected.is_empty() {
                prop_assert_eq!(corpus.documents().len(), 0);
            } else {
                prop_assert_eq!(corpus.decode(0), expected);
            }
        }
    }
}
