//! Normalized shop/product dataset and its newline-delimited JSON file format.
//!
//! One shop per line:
//!
//! ```text
//! {"handle":"dealking","retrieved_at":"2020-04-01T12:00:00Z","products":[{"title":"Netflix Premium","price_usd":5.0,"category":"account","metadata":{}}]}
//! ```

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Product type as exposed by the marketplace. `Account` is the platform default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Account,
    Service,
    File,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Account, Category::Service, Category::File];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Account => "account",
            Category::Service => "service",
            Category::File => "file",
        }
    }

    pub fn index(self) -> usize {
        match self {
            Category::Account => 0,
            Category::Service => 1,
            Category::File => 2,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "account" | "accounts" => Ok(Category::Account),
            "service" | "services" => Ok(Category::Service),
            "file" | "files" => Ok(Category::File),
            other => Err(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Product {
    pub title: String,
    pub price_usd: f64,
    pub category: Category,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl Product {
    pub fn new(title: impl Into<String>, price_usd: f64, category: Category) -> Self {
        Product {
            title: title.into(),
            price_usd,
            category,
            metadata: BTreeMap::new(),
        }
    }

    fn check(&self) -> Result<(), String> {
        if self.title.trim().is_empty() {
            return Err("product title is empty".into());
        }
        if !self.price_usd.is_finite() || self.price_usd < 0.0 {
            return Err(format!("invalid price {}", self.price_usd));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shop {
    pub handle: String,
    pub retrieved_at: DateTime<Utc>,
    #[serde(default)]
    pub products: Vec<Product>,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: {reason}")]
    Invalid { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Collection of shops in discovery order. Handles are unique.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ShopDataset {
    shops: Vec<Shop>,
}

impl ShopDataset {
    pub fn new(shops: Vec<Shop>) -> Result<Self, DatasetError> {
        let mut seen = HashSet::new();
        for (i, shop) in shops.iter().enumerate() {
            validate_shop(shop, &mut seen).map_err(|reason| DatasetError::Invalid { line: i + 1, reason })?;
        }
        Ok(ShopDataset { shops })
    }

    pub fn shops(&self) -> &[Shop] {
        &self.shops
    }

    pub fn is_empty(&self) -> bool {
        self.shops.is_empty()
    }

    pub fn len(&self) -> usize {
        self.shops.len()
    }

    pub fn product_count(&self) -> usize {
        self.shops.iter().map(|s| s.products.len()).sum()
    }

    /// Every product paired with its shop handle, in dataset order.
    pub fn products(&self) -> impl Iterator<Item = (&str, &Product)> {
        self.shops
            .iter()
            .flat_map(|s| s.products.iter().map(move |p| (s.handle.as_str(), p)))
    }

    pub fn read_ndjson<R: BufRead>(reader: R) -> Result<Self, DatasetError> {
        let mut shops = Vec::new();
        let mut seen = HashSet::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let shop: Shop =
                serde_json::from_str(&line).map_err(|source| DatasetError::Parse { line: i + 1, source })?;
            validate_shop(&shop, &mut seen).map_err(|reason| DatasetError::Invalid { line: i + 1, reason })?;
            shops.push(shop);
        }
        Ok(ShopDataset { shops })
    }

    pub fn write_ndjson<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        for shop in &self.shops {
            serde_json::to_writer(&mut writer, shop)?;
            writer.write_all(b"\n")?;
        }
        Ok(())
    }
}

fn validate_shop(shop: &Shop, seen: &mut HashSet<String>) -> Result<(), String> {
    if shop.handle.is_empty() {
        return Err("empty shop handle".into());
    }
    if !seen.insert(shop.handle.clone()) {
        return Err(format!("duplicate shop handle `{}`", shop.handle));
    }
    for (j, p) in shop.products.iter().enumerate() {
        p.check().map_err(|e| format!("shop `{}` product {}: {e}", shop.handle, j))?;
    }
    Ok(())
}
