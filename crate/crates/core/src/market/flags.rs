use serde::{Deserialize, Serialize};

use crate::corpus::Tokenizer;
use crate::harvest::{Category, ShopDataset};
use crate::table::Table;

pub const DEFAULT_FLAG_KEYWORDS: &[&str] = &[
    "terms of service",
    "discord",
    "telegram",
    "read before buying",
    "contact",
    "support",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlagConfig {
    /// Prices at or above this are suspicious.
    pub price_threshold: f64,
    /// Phrases matched against title words, case-insensitively.
    pub keywords: Vec<String>,
}

impl Default for FlagConfig {
    fn default() -> Self {
        FlagConfig {
            price_threshold: 500.0,
            keywords: DEFAULT_FLAG_KEYWORDS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum FalseProductRule {
    Keyword { keyword: String },
    /// A service whose title has no content tokens left after tokenization.
    ZeroInformationService,
}

impl FalseProductRule {
    pub fn describe(&self) -> String {
        match self {
            FalseProductRule::Keyword { keyword } => format!("keyword:{keyword}"),
            FalseProductRule::ZeroInformationService => "zero-information-service".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedProduct {
    pub shop_handle: String,
    pub title: String,
    pub price_usd: f64,
    pub category: Category,
    pub rules: Vec<FalseProductRule>,
}

fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Products priced at or above the threshold that either mention a keyword
/// phrase or are services with a zero-information title. Dataset order.
pub fn flag_false_products(dataset: &ShopDataset, config: &FlagConfig, tokenizer: &Tokenizer) -> Vec<FlaggedProduct> {
    let phrases: Vec<(&str, Vec<String>)> = config
        .keywords
        .iter()
        .map(|k| (k.as_str(), words(k)))
        .filter(|(_, w)| !w.is_empty())
        .collect();
    let mut out = Vec::new();
    for (handle, p) in dataset.products() {
        if p.price_usd < config.price_threshold {
            continue;
        }
        let title = words(&p.title);
        let mut rules: Vec<FalseProductRule> = phrases
            .iter()
            .filter(|(_, phrase)| title.windows(phrase.len()).any(|w| w == phrase.as_slice()))
            .map(|(k, _)| FalseProductRule::Keyword { keyword: k.to_string() })
            .collect();
        if p.category == Category::Service && tokenizer.tokenize(&p.title).is_empty() {
            rules.push(FalseProductRule::ZeroInformationService);
        }
        if !rules.is_empty() {
            out.push(FlaggedProduct {
                shop_handle: handle.to_string(),
                title: p.title.clone(),
                price_usd: p.price_usd,
                category: p.category,
                rules,
            });
        }
    }
    out
}

pub fn flagged_table(flags: &[FlaggedProduct]) -> Table {
    let mut t = Table::new(["shop", "title", "price", "category", "rules"]).with_schema("false_products");
    for f in flags {
        let rules: Vec<String> = f.rules.iter().map(FalseProductRule::describe).collect();
        t.push([
            f.shop_handle.clone(),
            f.title.clone(),
            f.price_usd.to_string(),
            f.category.as_str().to_string(),
            rules.join(","),
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harvest::{Product, Shop};
    use chrono::{TimeZone, Utc};

    fn flag(items: Vec<Product>) -> Vec<FlaggedProduct> {
        let ds = ShopDataset::new(vec![Shop {
            handle: "s".into(),
            retrieved_at: Utc.with_ymd_and_hms(2020, 4, 1, 0, 0, 0).unwrap(),
            products: items,
        }])
        .unwrap();
        flag_false_products(&ds, &FlagConfig::default(), &Tokenizer::default())
    }

    #[test]
    fn terms_of_service_listing() {
        let f = flag(vec![Product::new("Terms of Service. READ BEFORE BUYING", 600.0, Category::Service)]);
        assert_eq!(f.len(), 1);
        assert_eq!(
            f[0].rules,
            vec![
                FalseProductRule::Keyword { keyword: "terms of service".into() },
                FalseProductRule::Keyword { keyword: "read before buying".into() },
            ]
        );
    }

    #[test]
    fn threshold_is_conjunctive() {
        assert!(flag(vec![Product::new("Combo List | 528M Yahoo.com", 400.0, Category::File)]).is_empty());
        assert!(flag(vec![Product::new("Contact me on discord", 499.0, Category::Service)]).is_empty());
        assert_eq!(flag(vec![Product::new("Contact me on discord", 500.0, Category::Account)]).len(), 1);
    }

    #[test]
    fn zero_information_services() {
        let f = flag(vec![
            Product::new("- - -", 800.0, Category::Service),
            Product::new("- - -", 800.0, Category::Account),
            Product::new("Private method", 800.0, Category::Service),
        ]);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].rules, vec![FalseProductRule::ZeroInformationService]);
    }

    #[test]
    fn whole_word_keywords() {
        // "supporter" is not "support"
        assert!(flag(vec![Product::new("Supporter rank", 900.0, Category::Account)]).is_empty());
    }
}
