//! Marketplace shop API: existence checks and paginated product retrieval.
//!
//! The HTTP contract is minimal:
//!
//! * `GET {base}/shops/{handle}` answers 200 when the shop exists, 404 otherwise;
//! * `GET {base}/shops/{handle}/products?page={n}` (n from 1) answers a JSON
//!   array of product objects; an empty array ends pagination; 404 means the
//!   shop is gone.
//!
//! 429 and 5xx answers, and transport failures, are transient.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::Mutex;
use std::time::Duration;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::dataset::{Category, Product, Shop};
use super::fetch::{FetchRequest, Fetcher};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ClientError {
    #[error("transient: {0}")]
    Transient(String),
    #[error("not found")]
    NotFound,
    #[error("{0}")]
    Permanent(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductPage {
    pub items: Vec<Value>,
    pub fetched_at: DateTime<Utc>,
}

pub trait ShopClient: Sync {
    fn shop_exists(&self, handle: &str) -> Result<bool, ClientError>;
    fn product_page(&self, handle: &str, page: u32) -> Result<ProductPage, ClientError>;
}

impl<C: ShopClient + ?Sized> ShopClient for &C {
    fn shop_exists(&self, handle: &str) -> Result<bool, ClientError> {
        (**self).shop_exists(handle)
    }
    fn product_page(&self, handle: &str, page: u32) -> Result<ProductPage, ClientError> {
        (**self).product_page(handle, page)
    }
}

/// [`ShopClient`] speaking the HTTP contract above through any [`Fetcher`].
pub struct HttpShopClient<F> {
    fetcher: F,
    base_url: String,
}

impl<F: Fetcher> HttpShopClient<F> {
    pub fn new(fetcher: F, base_url: &str) -> Self {
        HttpShopClient {
            fetcher,
            base_url: base_url.trim_end_matches('/').to_string(),
        }
    }

    fn get(&self, url: &str) -> Result<super::fetch::FetchResponse, ClientError> {
        let req = FetchRequest::get(url).map_err(|e| ClientError::Permanent(e.to_string()))?;
        let resp = self
            .fetcher
            .fetch(&req)
            .map_err(|e| ClientError::Transient(e.to_string()))?;
        match resp.status {
            200..=299 => Ok(resp),
            404 | 410 => Err(ClientError::NotFound),
            429 | 500..=599 => Err(ClientError::Transient(format!("status {} for {url}", resp.status))),
            s => Err(ClientError::Permanent(format!("status {s} for {url}"))),
        }
    }
}

impl<F: Fetcher> ShopClient for HttpShopClient<F> {
    fn shop_exists(&self, handle: &str) -> Result<bool, ClientError> {
        match self.get(&format!("{}/shops/{handle}", self.base_url)) {
            Ok(_) => Ok(true),
            Err(ClientError::NotFound) => Ok(false),
            Err(e) => Err(e),
        }
    }

    fn product_page(&self, handle: &str, page: u32) -> Result<ProductPage, ClientError> {
        let resp = self.get(&format!("{}/shops/{handle}/products?page={page}", self.base_url))?;
        let items: Vec<Value> = serde_json::from_slice(&resp.body)
            .map_err(|e| ClientError::Permanent(format!("malformed product page {page} of {handle}: {e}")))?;
        Ok(ProductPage {
            items,
            fetched_at: resp.fetched_at,
        })
    }
}

/// In-memory client. Pages are served as stored; a page past the last is empty.
#[derive(Debug, Default)]
pub struct MemoryShopClient {
    shops: BTreeMap<String, Vec<Vec<Value>>>,
    transient_failures: Mutex<HashMap<String, usize>>,
    fetched_at: DateTime<Utc>,
}

impl MemoryShopClient {
    pub fn new(fetched_at: DateTime<Utc>) -> Self {
        MemoryShopClient {
            fetched_at,
            ..Default::default()
        }
    }

    pub fn with_shop(mut self, handle: &str, pages: Vec<Vec<Value>>) -> Self {
        self.shops.insert(handle.to_string(), pages);
        self
    }

    /// The next `count` calls mentioning `handle` fail transiently.
    pub fn fail_transiently(self, handle: &str, count: usize) -> Self {
        self.transient_failures
            .lock()
            .unwrap()
            .insert(handle.to_string(), count);
        self
    }

    fn maybe_fail(&self, handle: &str) -> Result<(), ClientError> {
        let mut failures = self.transient_failures.lock().unwrap_or_else(|e| e.into_inner());
        match failures.get_mut(handle) {
            Some(n) if *n > 0 => {
                *n -= 1;
                Err(ClientError::Transient(format!("injected failure for {handle}")))
            }
            _ => Ok(()),
        }
    }
}

impl ShopClient for MemoryShopClient {
    fn shop_exists(&self, handle: &str) -> Result<bool, ClientError> {
        self.maybe_fail(handle)?;
        Ok(self.shops.contains_key(handle))
    }

    fn product_page(&self, handle: &str, page: u32) -> Result<ProductPage, ClientError> {
        self.maybe_fail(handle)?;
        let pages = self.shops.get(handle).ok_or(ClientError::NotFound)?;
        let items = page
            .checked_sub(1)
            .and_then(|i| pages.get(i as usize))
            .cloned()
            .unwrap_or_default();
        Ok(ProductPage {
            items,
            fetched_at: self.fetched_at,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub retries: u32,
    pub backoff_base_ms: u64,
    pub workers: usize,
    /// Safety bound on pagination.
    pub max_pages: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            retries: 3,
            backoff_base_ms: 250,
            workers: 1,
            max_pages: 10_000,
        }
    }
}

impl RetryPolicy {
    fn run<T>(&self, mut op: impl FnMut() -> Result<T, ClientError>) -> Result<T, ClientError> {
        let mut attempt = 0;
        loop {
            match op() {
                Err(ClientError::Transient(reason)) if attempt < self.retries => {
                    let delay = self.backoff_base_ms.saturating_mul(1 << attempt.min(16));
                    log::debug!("transient failure ({reason}); retry {} in {delay} ms", attempt + 1);
                    if delay > 0 {
                        std::thread::sleep(Duration::from_millis(delay));
                    }
                    attempt += 1;
                }
                other => return other,
            }
        }
    }

    fn map<T: Sync, R: Send>(&self, items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
        if self.workers > 1 {
            if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(self.workers).build() {
                return pool.install(|| items.par_iter().map(&f).collect());
            }
        }
        items.iter().map(f).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationOutcome {
    pub valid: Vec<String>,
    pub invalid: Vec<String>,
    /// Handles whose status could not be established, with the last error.
    pub unknown: Vec<(String, String)>,
}

/// Partitions `handles` (deduplicated, first occurrence order kept) by shop existence.
pub fn validate_shops<C: ShopClient>(handles: &[String], client: &C, policy: &RetryPolicy) -> ValidationOutcome {
    let mut seen = HashSet::new();
    let unique: Vec<&String> = handles.iter().filter(|h| seen.insert(h.as_str())).collect();
    let results = policy.map(&unique, |h| policy.run(|| client.shop_exists(h)));
    let mut out = ValidationOutcome::default();
    for (handle, result) in unique.into_iter().zip(results) {
        match result {
            Ok(true) => out.valid.push(handle.clone()),
            Ok(false) => out.invalid.push(handle.clone()),
            Err(e) => {
                log::warn!("could not validate `{handle}`: {e}");
                out.unknown.push((handle.clone(), e.to_string()));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum FetchShopError {
    #[error("shop `{0}` is gone")]
    Gone(String),
    #[error("shop `{handle}`: {source}")]
    Client {
        handle: String,
        #[source]
        source: ClientError,
    },
    #[error("shop `{0}` exceeded the pagination bound")]
    TooManyPages(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FetchedShop {
    pub shop: Shop,
    pub warnings: Vec<String>,
    pub skipped_products: usize,
}

/// Retrieves every product page of a validated shop.
pub fn fetch_shop<C: ShopClient>(handle: &str, client: &C, policy: &RetryPolicy) -> Result<FetchedShop, FetchShopError> {
    let mut products = Vec::new();
    let mut warnings = Vec::new();
    let mut skipped = 0usize;
    let mut retrieved_at: Option<DateTime<Utc>> = None;
    for page in 1..=policy.max_pages {
        let result = policy.run(|| client.product_page(handle, page));
        let page_data = match result {
            Ok(p) => p,
            Err(ClientError::NotFound) => return Err(FetchShopError::Gone(handle.to_string())),
            Err(source) => {
                return Err(FetchShopError::Client {
                    handle: handle.to_string(),
                    source,
                })
            }
        };
        retrieved_at = Some(retrieved_at.map_or(page_data.fetched_at, |t| t.max(page_data.fetched_at)));
        if page_data.items.is_empty() {
            return Ok(FetchedShop {
                shop: Shop {
                    handle: handle.to_string(),
                    retrieved_at: retrieved_at.expect("at least one page"),
                    products,
                },
                warnings,
                skipped_products: skipped,
            });
        }
        for (i, item) in page_data.items.iter().enumerate() {
            match parse_product(item) {
                Ok((product, warning)) => {
                    if let Some(w) = warning {
                        warnings.push(format!("{handle} page {page} item {i}: {w}"));
                    }
                    products.push(product);
                }
                Err(reason) => {
                    log::warn!("{handle} page {page} item {i}: skipped ({reason})");
                    warnings.push(format!("{handle} page {page} item {i}: skipped ({reason})"));
                    skipped += 1;
                }
            }
        }
    }
    Err(FetchShopError::TooManyPages(handle.to_string()))
}

/// Fetches several shops with the policy's worker count; results in input order.
pub fn fetch_shops<C: ShopClient>(
    handles: &[String],
    client: &C,
    policy: &RetryPolicy,
) -> Vec<Result<FetchedShop, FetchShopError>> {
    policy.map(handles, |h| fetch_shop(h, client, policy))
}

const KNOWN_FIELDS: &[&str] = &["title", "price", "price_usd", "type", "category"];

/// Maps a raw API product object. Unknown categories fall back to `account`
/// with a warning.
fn parse_product(item: &Value) -> Result<(Product, Option<String>), String> {
    let obj = item.as_object().ok_or("not an object")?;
    let title = obj
        .get("title")
        .and_then(Value::as_str)
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .ok_or("missing or empty title")?;
    let price = obj
        .get("price_usd")
        .or_else(|| obj.get("price"))
        .ok_or("missing price")?;
    let price = match price {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().trim_start_matches('$').parse::<f64>().ok(),
        _ => None,
    }
    .filter(|p| p.is_finite() && *p >= 0.0)
    .ok_or_else(|| format!("invalid price {price}"))?;

    let raw_category = obj.get("category").or_else(|| obj.get("type")).and_then(Value::as_str);
    let (category, warning) = match raw_category {
        None => (Category::Account, None),
        Some(c) => match c.parse::<Category>() {
            Ok(cat) => (cat, None),
            Err(other) => (
                Category::Account,
                Some(format!("unknown category `{other}` mapped to account")),
            ),
        },
    };
    let metadata = obj
        .iter()
        .filter(|(k, _)| !KNOWN_FIELDS.contains(&k.as_str()))
        .map(|(k, v)| {
            let text = match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            (k.clone(), text)
        })
        .collect();
    Ok((
        Product {
            title: title.to_string(),
            price_usd: price,
            category,
            metadata,
        },
        warning,
    ))
}
