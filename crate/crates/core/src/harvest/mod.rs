//! Shop discovery: forum crawling, signature extraction, shop validation and
//! product retrieval, all behind the [`Fetcher`] abstraction so recorded
//! fixtures and live endpoints run through identical code.

pub mod client;
pub mod crawl;
pub mod dataset;
pub mod fetch;
pub mod fixture;
#[cfg(feature = "live")]
pub mod live;
pub mod signature;
pub mod summary;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use client::{
    fetch_shop, fetch_shops, validate_shops, ClientError, FetchShopError, FetchedShop, HttpShopClient,
    MemoryShopClient, ProductPage, RetryPolicy, ShopClient, ValidationOutcome,
};
pub use crawl::{crawl_forum, CrawlError, CrawlLimits, CrawlOutcome, ForumLayout, HarvestRecord, RecordSource, SkippedPage};
pub use dataset::{Category, DatasetError, Product, Shop, ShopDataset};
pub use fetch::{FetchError, FetchRequest, FetchResponse, Fetcher, PoliteFetcher, Politeness, DEFAULT_BODY_CAP};
pub use fixture::{FixtureFetcher, FixtureStore, RecordingFetcher};
pub use signature::{extract_signature_links, HandleGrammar, MarketplaceLinks, SignatureScan};
pub use summary::{HarvestSummary, SummaryRow};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForumSeed {
    pub forum: String,
    pub url: String,
}

#[derive(Debug, Error)]
pub enum HarvestError {
    #[error(transparent)]
    Crawl(#[from] CrawlError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// Everything a harvest run produced, in deterministic order.
#[derive(Debug, Clone)]
pub struct HarvestRun {
    pub records: Vec<HarvestRecord>,
    pub validation: ValidationOutcome,
    pub summary: HarvestSummary,
    pub dataset: ShopDataset,
    pub skipped_pages: Vec<SkippedPage>,
    /// Shops that validated but disappeared before their products were fetched.
    pub gone: Vec<String>,
    pub diagnostics: Vec<String>,
}

pub struct Harvester<'a> {
    pub layout: &'a ForumLayout,
    pub links: &'a MarketplaceLinks,
    pub limits: &'a CrawlLimits,
    pub policy: &'a RetryPolicy,
}

impl Harvester<'_> {
    /// Crawls every seed, validates the discovered handles (forum usernames are
    /// tried verbatim as handles) and fetches the valid shops.
    pub fn run<F: Fetcher, C: ShopClient>(
        &self,
        seeds: &[ForumSeed],
        fetcher: &F,
        client: &C,
    ) -> Result<HarvestRun, HarvestError> {
        let mut records = Vec::new();
        let mut skipped_pages = Vec::new();
        let mut diagnostics = Vec::new();
        for seed in seeds {
            let outcome = crawl_forum(&seed.forum, &seed.url, fetcher, self.layout, self.links, self.limits)?;
            log::info!(
                "{}: {} pages, {} records, {} skipped",
                seed.forum,
                outcome.pages_fetched,
                outcome.records.len(),
                outcome.skipped.len()
            );
            records.extend(outcome.records);
            skipped_pages.extend(outcome.skipped);
            diagnostics.extend(outcome.diagnostics);
        }

        let mut seen = HashSet::new();
        let candidates: Vec<String> = records
            .iter()
            .filter_map(|r| r.shop_handle.clone())
            .filter(|h| seen.insert(h.clone()))
            .collect();
        let validation = validate_shops(&candidates, client, self.policy);
        let summary = HarvestSummary::tally(&records, &validation.valid);

        let mut shops = Vec::new();
        let mut gone = Vec::new();
        for (handle, result) in validation.valid.iter().zip(fetch_shops(&validation.valid, client, self.policy)) {
            match result {
                Ok(fetched) => {
                    diagnostics.extend(fetched.warnings);
                    shops.push(fetched.shop);
                }
                Err(FetchShopError::Gone(_)) => gone.push(handle.clone()),
                Err(e) => diagnostics.push(e.to_string()),
            }
        }
        Ok(HarvestRun {
            records,
            validation,
            summary,
            dataset: ShopDataset::new(shops)?,
            skipped_pages,
            gone,
            diagnostics,
        })
    }
}
