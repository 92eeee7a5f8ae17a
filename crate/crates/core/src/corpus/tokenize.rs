use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// Small English function-word list. Marketplace jargon (`full`, `premium`,
/// `nfa`, `cpm`, ...) is deliberately absent.
pub const DEFAULT_STOPWORDS: &[&str] = &[
    "a", "about", "after", "all", "also", "am", "an", "and", "any", "are", "as", "at", "be", "been", "but", "by",
    "can", "do", "does", "each", "for", "from", "had", "has", "have", "he", "her", "his", "how", "if", "in",
    "into", "is", "it", "its", "me", "more", "my", "no", "not", "of", "on", "one", "only", "or", "our", "out",
    "over", "per", "she", "so", "than", "that", "the", "their", "them", "then", "there", "these", "they",
    "this", "those", "to", "too", "up", "us", "very", "was", "we", "were", "what", "when", "which", "while",
    "who", "will", "with", "you", "your",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TokenizerConfig {
    /// Tokens shorter than this (in characters) are dropped.
    pub min_len: usize,
    /// Drop tokens made only of digits (prices, percentages, quantities).
    pub drop_numeric: bool,
    pub stopwords: Vec<String>,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            min_len: 2,
            drop_numeric: true,
            stopwords: DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Optional last pipeline stage mapping a token to its lemma.
pub trait Lemmatizer: Send + Sync {
    fn lemmatize(&self, token: &str) -> String;
}

impl<F: Fn(&str) -> String + Send + Sync> Lemmatizer for F {
    fn lemmatize(&self, token: &str) -> String {
        self(token)
    }
}

/// Lowercase, split on non-alphanumerics, drop numbers, short tokens and
/// stopwords, then optionally lemmatize.
#[derive(Clone)]
pub struct Tokenizer {
    min_len: usize,
    drop_numeric: bool,
    stopwords: HashSet<String>,
    lemmatizer: Option<Arc<dyn Lemmatizer>>,
}

impl fmt::Debug for Tokenizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tokenizer")
            .field("min_len", &self.min_len)
            .field("drop_numeric", &self.drop_numeric)
            .field("stopwords", &self.stopwords.len())
            .field("lemmatizer", &self.lemmatizer.is_some())
            .finish()
    }
}

impl Default for Tokenizer {
    fn default() -> Self {
        Tokenizer::new(&TokenizerConfig::default())
    }
}

impl Tokenizer {
    pub fn new(config: &TokenizerConfig) -> Self {
        Tokenizer {
            min_len: config.min_len,
            drop_numeric: config.drop_numeric,
            stopwords: config.stopwords.iter().map(|s| s.to_lowercase()).collect(),
            lemmatizer: None,
        }
    }

    pub fn with_lemmatizer(mut self, lemmatizer: Arc<dyn Lemmatizer>) -> Self {
        self.lemmatizer = Some(lemmatizer);
        self
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        text.to_lowercase()
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .filter(|t| !(self.drop_numeric && t.chars().all(|c| c.is_numeric())))
            .filter(|t| t.chars().count() >= self.min_len)
            .filter(|t| !self.stopwords.contains(*t))
            .map(|t| match &self.lemmatizer {
                Some(l) => l.lemmatize(t),
                None => t.to_string(),
            })
            .collect()
    }
}

pub fn tokenize(text: &str, config: &TokenizerConfig) -> Vec<String> {
    Tokenizer::new(config).tokenize(text)
}
