use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::Tokenizer;
use crate::harvest::{Category, ShopDataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductMatch {
    pub shop_handle: String,
    pub title: String,
    pub price_usd: f64,
    pub category: Category,
    /// Record count parsed from the title, when it carries one.
    pub records: Option<u64>,
    /// Query terms found in the title, sorted.
    pub matched_terms: Vec<String>,
}

/// Products whose tokenized title contains any of `terms` or `augment` as a
/// whole token (or contiguous token run, for multi-word terms). Sorted by
/// descending price, then title, then shop.
pub fn query_products(dataset: &ShopDataset, terms: &[String], augment: &[String], tokenizer: &Tokenizer) -> Vec<ProductMatch> {
    let patterns: Vec<(&str, Vec<String>)> = terms
        .iter()
        .chain(augment)
        .map(|t| (t.as_str(), tokenizer.tokenize(t)))
        .filter(|(_, toks)| !toks.is_empty())
        .collect();
    let mut out = Vec::new();
    for (handle, product) in dataset.products() {
        let tokens = tokenizer.tokenize(&product.title);
        let matched: BTreeSet<String> = patterns
            .iter()
            .filter(|(_, pat)| tokens.windows(pat.len()).any(|w| w == pat.as_slice()))
            .map(|(term, _)| term.to_string())
            .collect();
        if matched.is_empty() {
            continue;
        }
        out.push(ProductMatch {
            shop_handle: handle.to_string(),
            title: product.title.clone(),
            price_usd: product.price_usd,
            category: product.category,
            records: parse_record_count(&product.title),
            matched_terms: matched.into_iter().collect(),
        });
    }
    out.sort_by(|a, b| {
        b.price_usd
            .total_cmp(&a.price_usd)
            .then_with(|| a.title.cmp(&b.title))
            .then_with(|| a.shop_handle.cmp(&b.shop_handle))
    });
    out
}

/// A product chosen to illustrate a topic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleProduct {
    pub shop_handle: String,
    pub title: String,
    pub price_usd: f64,
    /// Distinct topic terms present in the title.
    pub term_hits: usize,
}

/// The `n` products whose titles contain the most distinct `topic_terms`;
/// ties go to the shorter title, then title and shop order.
pub fn sample_products(dataset: &ShopDataset, topic_terms: &[String], n: usize, tokenizer: &Tokenizer) -> Vec<SampleProduct> {
    let wanted: BTreeSet<&str> = topic_terms.iter().map(String::as_str).collect();
    let mut found: Vec<SampleProduct> = dataset
        .products()
        .filter_map(|(handle, p)| {
            let tokens: BTreeSet<String> = tokenizer.tokenize(&p.title).into_iter().collect();
            let hits = tokens.iter().filter(|t| wanted.contains(t.as_str())).count();
            (hits > 0).then(|| SampleProduct {
                shop_handle: handle.to_string(),
                title: p.title.clone(),
                price_usd: p.price_usd,
                term_hits: hits,
            })
        })
        .collect();
    found.sort_by(|a, b| {
        b.term_hits
            .cmp(&a.term_hits)
            .then_with(|| a.title.chars().count().cmp(&b.title.chars().count()))
            .then_with(|| a.title.cmp(&b.title))
            .then_with(|| a.shop_handle.cmp(&b.shop_handle))
    });
    found.truncate(n);
    found
}

static SCALED: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)(\d+(?:[.,]\d+)?)\s*(k|m|mil|million|b|billion|thousand)\b").unwrap()
});
static PLAIN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)(\d{1,3}(?:,\d{3})+|\d+)\s*(?:lines|records|rows|entries|users)\b").unwrap());

/// Heuristic record count from a title: `528M` → 528,000,000, `1.5k` → 1,500,
/// `12,000 lines` → 12,000. The largest figure in the title wins.
pub fn parse_record_count(title: &str) -> Option<u64> {
    let scaled = SCALED.captures_iter(title).filter_map(|c| {
        let number = &c[1];
        // "1,500k" uses a thousands separator; "1,5k" a decimal comma.
        let number = match number.split_once(',') {
            Some((_, frac)) if frac.len() == 3 => number.replace(',', ""),
            _ => number.replace(',', "."),
        };
        let value: f64 = number.parse().ok()?;
        let factor = match c[2].to_ascii_lowercase().as_str() {
            "k" | "thousand" => 1e3,
            "m" | "mil" | "million" => 1e6,
            _ => 1e9,
        };
        Some((value * factor).round() as u64)
    });
    let plain = PLAIN
        .captures_iter(title)
        .filter_map(|c| c[1].replace(',', "").parse::<u64>().ok());
    scaled.chain(plain).max()
}
