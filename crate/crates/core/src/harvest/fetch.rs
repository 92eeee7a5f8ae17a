//! Transport abstraction shared by the forum crawler and the shop API client.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use thiserror::Error;
use url::Url;

/// Default cap on a response body.
pub const DEFAULT_BODY_CAP: usize = 8 * 1024 * 1024;

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("invalid url `{url}`: {reason}")]
    InvalidUrl { url: String, reason: String },
    #[error("no recorded response for {0}")]
    NotRecorded(String),
    #[error("response body for {url} exceeds {cap} bytes")]
    BodyTooLarge { url: String, cap: usize },
    #[error("invalid status {status} for {url}")]
    InvalidStatus { url: String, status: u16 },
    #[error("transport error for {url}: {reason}")]
    Transport { url: String, reason: String },
    #[error("fixture store: {0}")]
    Store(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A GET request. Only absolute http(s) URLs are accepted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchRequest {
    url: Url,
    pub headers: BTreeMap<String, String>,
}

impl FetchRequest {
    pub fn get(url: &str) -> Result<Self, FetchError> {
        let parsed = Url::parse(url).map_err(|e| FetchError::InvalidUrl {
            url: url.to_string(),
            reason: e.to_string(),
        })?;
        Self::from_url(parsed)
    }

    pub fn from_url(url: Url) -> Result<Self, FetchError> {
        if !matches!(url.scheme(), "http" | "https") || url.host_str().is_none() {
            return Err(FetchError::InvalidUrl {
                url: url.to_string(),
                reason: "expected an absolute http(s) url".into(),
            });
        }
        Ok(FetchRequest {
            url,
            headers: BTreeMap::new(),
        })
    }

    pub fn url(&self) -> &Url {
        &self.url
    }

    pub fn host(&self) -> &str {
        self.url.host_str().unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FetchResponse {
    pub url: String,
    pub status: u16,
    pub headers: BTreeMap<String, String>,
    pub body: Vec<u8>,
    pub fetched_at: DateTime<Utc>,
}

impl FetchResponse {
    pub fn new(
        url: impl Into<String>,
        status: u16,
        body: Vec<u8>,
        fetched_at: DateTime<Utc>,
    ) -> Result<Self, FetchError> {
        let url = url.into();
        if !(100..=599).contains(&status) {
            return Err(FetchError::InvalidStatus { url, status });
        }
        Ok(FetchResponse {
            url,
            status,
            headers: BTreeMap::new(),
            body,
            fetched_at,
        })
    }

    pub fn is_success(&self) -> bool {
        (200..300).contains(&self.status)
    }

    pub fn text(&self) -> std::borrow::Cow<'_, str> {
        String::from_utf8_lossy(&self.body)
    }
}

/// Anything that can answer GET requests: recorded fixtures, live HTTP, test doubles.
pub trait Fetcher: Send + Sync {
    fn fetch(&self, request: &FetchRequest) -> Result<FetchResponse, FetchError>;
}

impl<F: Fetcher + ?Sized> Fetcher for &F {
    fn fetch(&self, request: &FetchRequest) -> Result<FetchResponse, FetchError> {
        (**self).fetch(request)
    }
}

impl<F: Fetcher + ?Sized> Fetcher for Box<F> {
    fn fetch(&self, request: &FetchRequest) -> Result<FetchResponse, FetchError> {
        (**self).fetch(request)
    }
}

impl<F: Fetcher + ?Sized> Fetcher for Arc<F> {
    fn fetch(&self, request: &FetchRequest) -> Result<FetchResponse, FetchError> {
        (**self).fetch(request)
    }
}

/// Enforces a minimum delay between consecutive requests to the same host.
#[derive(Debug, Default)]
pub struct Politeness {
    min_delay: Duration,
    last: Mutex<HashMap<String, Instant>>,
}

impl Politeness {
    pub fn new(min_delay: Duration) -> Self {
        Politeness {
            min_delay,
            last: Mutex::new(HashMap::new()),
        }
    }

    pub fn min_delay(&self) -> Duration {
        self.min_delay
    }

    /// Blocks until `host` may be contacted again, then marks it as contacted.
    pub fn wait(&self, host: &str) {
        if self.min_delay.is_zero() {
            return;
        }
        let mut last = self.last.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(prev) = last.get(host) {
            let elapsed = prev.elapsed();
            if elapsed < self.min_delay {
                std::thread::sleep(self.min_delay - elapsed);
            }
        }
        last.insert(host.to_string(), Instant::now());
    }
}

/// Wraps a fetcher so that every request honours a per-host politeness delay.
pub struct PoliteFetcher<F> {
    inner: F,
    politeness: Politeness,
}

impl<F: Fetcher> PoliteFetcher<F> {
    pub fn new(inner: F, min_delay: Duration) -> Self {
        PoliteFetcher {
            inner,
            politeness: Politeness::new(min_delay),
        }
    }
}

impl<F: Fetcher> Fetcher for PoliteFetcher<F> {
    fn fetch(&self, request: &FetchRequest) -> Result<FetchResponse, FetchError> {
        self.politeness.wait(request.host());
        self.inner.fetch(request)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_and_non_http_urls_rejected() {
        assert!(FetchRequest::get("/forums/marketplace/").is_err());
        assert!(FetchRequest::get("ftp://example.test/x").is_err());
        let req = FetchRequest::get("https://forum.test/a?b=1").unwrap();
        assert_eq!(req.host(), "forum.test");
    }

    #[test]
    fn status_range_enforced() {
        let now = Utc::now();
        assert!(FetchResponse::new("https://x.test/", 99, vec![], now).is_err());
        assert!(FetchResponse::new("https://x.test/", 600, vec![], now).is_err());
        assert!(FetchResponse::new("https://x.test/", 404, vec![], now).is_ok());
    }

    #[test]
    fn politeness_delays_same_host_only() {
        let p = Politeness::new(Duration::from_millis(30));
        let start = Instant::now();
        p.wait("a.test");
        p.wait("b.test");
        assert!(start.elapsed() < Duration::from_millis(30));
        p.wait("a.test");
        assert!(start.elapsed() >= Duration::from_millis(30));
    }
}
