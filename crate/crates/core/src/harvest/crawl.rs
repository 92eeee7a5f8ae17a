//! Structure-driven forum crawler.
//!
//! Pages are either *boards* (thread listings, possibly paginated) or *threads*
//! (posts, possibly paginated). Traversal is breadth-first; each depth level is
//! visited in lexicographic URL order so the output depends only on the fetched
//! bytes.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::time::Duration;

use rayon::prelude::*;
use scraper::{ElementRef, Html, Selector};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

use super::fetch::{FetchError, FetchRequest, FetchResponse, Fetcher, Politeness};
use super::signature::MarketplaceLinks;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordSource {
    ForumUsername,
    ForumSignature,
}

impl RecordSource {
    pub fn label(self) -> &'static str {
        match self {
            RecordSource::ForumUsername => "usernames",
            RecordSource::ForumSignature => "signatures",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarvestRecord {
    pub source: RecordSource,
    pub forum: String,
    pub raw_value: String,
    pub shop_handle: Option<String>,
    pub page_url: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrawlLimits {
    pub max_pages: usize,
    pub max_depth: usize,
    #[serde(with = "millis")]
    pub min_delay: Duration,
    /// Concurrent fetches across distinct hosts. Requests to one host stay sequential.
    pub workers: usize,
}

impl Default for CrawlLimits {
    fn default() -> Self {
        CrawlLimits {
            max_pages: 10_000,
            max_depth: 8,
            min_delay: Duration::ZERO,
            workers: 1,
        }
    }
}

mod millis {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        u64::deserialize(d).map(Duration::from_millis)
    }
}

/// CSS selectors describing a forum's page structure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForumLayout {
    /// Links from a board page to further board pages (pagination, sub-boards).
    pub board_link: String,
    /// Links from a board page to threads.
    pub thread_link: String,
    /// Links from a thread page to its further pages.
    pub thread_page_link: String,
    pub post: String,
    /// Relative to a post.
    pub username: String,
    /// Relative to a post.
    pub signature: String,
    /// Only URLs whose path starts with one of these are followed. Empty means any path.
    pub allowed_prefixes: Vec<String>,
}

impl Default for ForumLayout {
    fn default() -> Self {
        ForumLayout {
            board_link: "a.board-link, .pagination a.board-page".into(),
            thread_link: "a.thread-link".into(),
            thread_page_link: ".pagination a.thread-page".into(),
            post: "article.post".into(),
            username: ".username".into(),
            signature: ".signature".into(),
            allowed_prefixes: Vec::new(),
        }
    }
}

#[derive(Debug, Error)]
pub enum CrawlError {
    #[error("seed {url}: {source}")]
    Seed {
        url: String,
        #[source]
        source: FetchError,
    },
    #[error("seed {url} returned status {status}")]
    SeedStatus { url: String, status: u16 },
    #[error("invalid selector `{0}`")]
    Selector(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedPage {
    pub url: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CrawlOutcome {
    pub records: Vec<HarvestRecord>,
    pub skipped: Vec<SkippedPage>,
    pub pages_fetched: usize,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum PageKind {
    Board,
    Thread,
}

struct Selectors {
    board_link: Selector,
    thread_link: Selector,
    thread_page_link: Selector,
    post: Selector,
    username: Selector,
    signature: Selector,
}

impl Selectors {
    fn compile(layout: &ForumLayout) -> Result<Self, CrawlError> {
        let sel = |s: &str| Selector::parse(s).map_err(|_| CrawlError::Selector(s.to_string()));
        Ok(Selectors {
            board_link: sel(&layout.board_link)?,
            thread_link: sel(&layout.thread_link)?,
            thread_page_link: sel(&layout.thread_page_link)?,
            post: sel(&layout.post)?,
            username: sel(&layout.username)?,
            signature: sel(&layout.signature)?,
        })
    }
}

/// Crawl configuration bound to one forum.
pub struct ForumCrawler<'a> {
    pub forum: String,
    pub layout: &'a ForumLayout,
    pub links: &'a MarketplaceLinks,
    pub limits: &'a CrawlLimits,
}

struct PageContent {
    records: Vec<HarvestRecord>,
    children: Vec<(String, PageKind)>,
    diagnostics: Vec<String>,
}

impl ForumCrawler<'_> {
    pub fn crawl<F: Fetcher>(&self, seed_url: &str, fetcher: &F) -> Result<CrawlOutcome, CrawlError> {
        let selectors = Selectors::compile(self.layout)?;
        let seed = FetchRequest::get(seed_url).map_err(|source| CrawlError::Seed {
            url: seed_url.to_string(),
            source,
        })?;
        let seed_url = seed.url().clone();
        let politeness = Politeness::new(self.limits.min_delay);

        let mut outcome = CrawlOutcome::default();
        let mut seen: HashSet<String> = HashSet::new();
        seen.insert(seed_url.to_string());
        let mut frontier = vec![(seed_url.to_string(), PageKind::Board)];
        let mut depth = 0usize;

        while !frontier.is_empty() {
            let budget = self.limits.max_pages.saturating_sub(outcome.pages_fetched);
            if budget == 0 {
                break;
            }
            frontier.truncate(budget);
            let responses = self.fetch_level(&frontier, fetcher, &politeness);
            outcome.pages_fetched += frontier.len();

            let mut next: BTreeMap<String, PageKind> = BTreeMap::new();
            for ((url, kind), result) in frontier.iter().zip(responses) {
                let is_seed = depth == 0;
                let response = match result {
                    Ok(r) if r.is_success() => r,
                    Ok(r) if is_seed => {
                        return Err(CrawlError::SeedStatus {
                            url: url.clone(),
                            status: r.status,
                        })
                    }
                    Err(source) if is_seed => return Err(CrawlError::Seed { url: url.clone(), source }),
                    Ok(r) => {
                        outcome.skipped.push(SkippedPage {
                            url: url.clone(),
                            reason: format!("status {}", r.status),
                        });
                        continue;
                    }
                    Err(e) => {
                        log::warn!("skipping {url}: {e}");
                        outcome.skipped.push(SkippedPage {
                            url: url.clone(),
                            reason: e.to_string(),
                        });
                        continue;
                    }
                };
                let content = self.parse_page(&selectors, &seed_url, url, *kind, &response);
                outcome.records.extend(content.records);
                outcome.diagnostics.extend(content.diagnostics);
                if depth < self.limits.max_depth {
                    for (child, child_kind) in content.children {
                        if !seen.contains(&child) {
                            next.entry(child).or_insert(child_kind);
                        }
                    }
                }
            }
            seen.extend(next.keys().cloned());
            frontier = next.into_iter().collect();
            depth += 1;
        }
        Ok(outcome)
    }

    /// Fetches one level. Hosts are processed in parallel (bounded by `workers`),
    /// each host's URLs strictly in order.
    fn fetch_level<F: Fetcher>(
        &self,
        frontier: &[(String, PageKind)],
        fetcher: &F,
        politeness: &Politeness,
    ) -> Vec<Result<FetchResponse, FetchError>> {
        let mut by_host: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, (url, _)) in frontier.iter().enumerate() {
            let host = Url::parse(url)
                .ok()
                .and_then(|u| u.host_str().map(str::to_string))
                .unwrap_or_default();
            by_host.entry(host).or_default().push(i);
        }
        let fetch_host = |indices: &Vec<usize>| -> Vec<(usize, Result<FetchResponse, FetchError>)> {
            indices
                .iter()
                .map(|&i| {
                    let url = &frontier[i].0;
                    let result = FetchRequest::get(url).and_then(|req| {
                        politeness.wait(req.host());
                        fetcher.fetch(&req)
                    });
                    (i, result)
                })
                .collect()
        };
        let groups: Vec<Vec<usize>> = by_host.into_values().collect();
        let per_host: Vec<Vec<(usize, Result<FetchResponse, FetchError>)>> =
            if self.limits.workers > 1 && groups.len() > 1 {
                match rayon::ThreadPoolBuilder::new().num_threads(self.limits.workers).build() {
                    Ok(pool) => pool.install(|| groups.par_iter().map(fetch_host).collect()),
                    Err(_) => groups.iter().map(fetch_host).collect(),
                }
            } else {
                groups.iter().map(fetch_host).collect()
            };
        let mut slots: Vec<Option<Result<FetchResponse, FetchError>>> =
            (0..frontier.len()).map(|_| None).collect();
        for (i, r) in per_host.into_iter().flatten() {
            slots[i] = Some(r);
        }
        slots
            .into_iter()
            .map(|s| s.expect("every frontier url fetched"))
            .collect()
    }

    fn parse_page(
        &self,
        sel: &Selectors,
        seed: &Url,
        page_url: &str,
        kind: PageKind,
        response: &FetchResponse,
    ) -> PageContent {
        let mut content = PageContent {
            records: Vec::new(),
            children: Vec::new(),
            diagnostics: Vec::new(),
        };
        if response.body.contains(&0) {
            content
                .diagnostics
                .push(format!("{page_url}: binary body ignored"));
            return content;
        }
        let html = Html::parse_document(&response.text());
        let base = Url::parse(page_url).unwrap_or_else(|_| seed.clone());
        let push_links = |selector: &Selector, child_kind: PageKind, out: &mut Vec<(String, PageKind)>| {
            let mut urls = BTreeSet::new();
            for a in html.select(selector) {
                if let Some(u) = a.value().attr("href").and_then(|h| self.resolve(&base, seed, h)) {
                    urls.insert(u);
                }
            }
            out.extend(urls.into_iter().map(|u| (u, child_kind)));
        };

        match kind {
            PageKind::Board => {
                push_links(&sel.board_link, PageKind::Board, &mut content.children);
                push_links(&sel.thread_link, PageKind::Thread, &mut content.children);
            }
            PageKind::Thread => {
                push_links(&sel.thread_page_link, PageKind::Thread, &mut content.children);
                for post in html.select(&sel.post) {
                    self.parse_post(sel, page_url, post, &mut content.records);
                }
            }
        }
        content
    }

    fn parse_post(&self, sel: &Selectors, page_url: &str, post: ElementRef<'_>, out: &mut Vec<HarvestRecord>) {
        if let Some(user) = post.select(&sel.username).next() {
            let name = user.text().collect::<String>().trim().to_string();
            if !name.is_empty() {
                out.push(HarvestRecord {
                    source: RecordSource::ForumUsername,
                    forum: self.forum.clone(),
                    shop_handle: self.links.grammar().normalize(&name),
                    raw_value: name,
                    page_url: page_url.to_string(),
                });
            }
        }
        for signature in post.select(&sel.signature) {
            let scan = self.links.scan_html(signature.html().as_bytes());
            for link in scan.links {
                out.push(HarvestRecord {
                    source: RecordSource::ForumSignature,
                    forum: self.forum.clone(),
                    raw_value: link.raw,
                    shop_handle: Some(link.handle),
                    page_url: page_url.to_string(),
                });
            }
        }
    }

    fn resolve(&self, base: &Url, seed: &Url, href: &str) -> Option<String> {
        let mut url = base.join(href).ok()?;
        url.set_fragment(None);
        if url.host_str() != seed.host_str() || url.scheme() != seed.scheme() {
            return None;
        }
        let prefixes = &self.layout.allowed_prefixes;
        if !prefixes.is_empty() && !prefixes.iter().any(|p| url.path().starts_with(p.as_str())) {
            return None;
        }
        Some(url.to_string())
    }
}

/// Crawls one forum from `seed_url`.
pub fn crawl_forum<F: Fetcher>(
    forum: &str,
    seed_url: &str,
    fetcher: &F,
    layout: &ForumLayout,
    links: &MarketplaceLinks,
    limits: &CrawlLimits,
) -> Result<CrawlOutcome, CrawlError> {
    ForumCrawler {
        forum: forum.to_string(),
        layout,
        links,
        limits,
    }
    .crawl(seed_url, fetcher)
}
