//! Recorded request/response store.
//!
//! A fixture directory holds one body file per recorded response, named after
//! a hash of the URL, plus an `index.json` sidecar mapping URL to file,
//! status, headers and capture time.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::fetch::{FetchError, FetchRequest, FetchResponse, Fetcher, DEFAULT_BODY_CAP};

pub const INDEX_FILE: &str = "index.json";
const INDEX_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureEntry {
    pub url: String,
    pub file: String,
    pub status: u16,
    #[serde(default)]
    pub headers: BTreeMap<String, String>,
    pub fetched_at: DateTime<Utc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct IndexFile {
    version: u32,
    entries: Vec<FixtureEntry>,
}

/// Body file name for a URL: first 16 hex digits of its SHA-256.
pub fn body_file_name(url: &str) -> String {
    let digest = Sha256::digest(url.as_bytes());
    format!("{}.body", &hex::encode(digest)[..16])
}

/// URLs are keyed in their normalized form (`url::Url` serialization).
pub fn normalize_url(url: &str) -> Result<String, FetchError> {
    FetchRequest::get(url).map(|r| r.url().to_string())
}

#[derive(Debug, Clone)]
pub struct FixtureStore {
    dir: PathBuf,
    entries: BTreeMap<String, FixtureEntry>,
}

impl FixtureStore {
    /// An empty store rooted at `dir` (nothing is written until [`FixtureStore::save`]).
    pub fn create(dir: impl Into<PathBuf>) -> Self {
        FixtureStore {
            dir: dir.into(),
            entries: BTreeMap::new(),
        }
    }

    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, FetchError> {
        let dir = dir.into();
        let index_path = dir.join(INDEX_FILE);
        let raw = fs::read_to_string(&index_path)
            .map_err(|e| FetchError::Store(format!("{}: {e}", index_path.display())))?;
        let index: IndexFile = serde_json::from_str(&raw)
            .map_err(|e| FetchError::Store(format!("{}: {e}", index_path.display())))?;
        if index.version != INDEX_VERSION {
            return Err(FetchError::Store(format!(
                "{}: unsupported index version {}",
                index_path.display(),
                index.version
            )));
        }
        let mut entries = BTreeMap::new();
        for entry in index.entries {
            let key = normalize_url(&entry.url)?;
            if entries.insert(key.clone(), entry).is_some() {
                return Err(FetchError::Store(format!("duplicate entry for {key}")));
            }
        }
        Ok(FixtureStore { dir, entries })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, url: &str) -> Option<&FixtureEntry> {
        self.entries.get(url)
    }

    /// Records a response, writing its body file immediately.
    pub fn insert(&mut self, response: &FetchResponse) -> Result<(), FetchError> {
        let key = normalize_url(&response.url)?;
        let file = body_file_name(&key);
        fs::create_dir_all(&self.dir)?;
        fs::write(self.dir.join(&file), &response.body)?;
        self.entries.insert(
            key.clone(),
            FixtureEntry {
                url: key,
                file,
                status: response.status,
                headers: response.headers.clone(),
                fetched_at: response.fetched_at,
            },
        );
        Ok(())
    }

    pub fn save(&self) -> Result<(), FetchError> {
        fs::create_dir_all(&self.dir)?;
        let index = IndexFile {
            version: INDEX_VERSION,
            entries: self.entries.values().cloned().collect(),
        };
        let json = serde_json::to_string_pretty(&index).map_err(|e| FetchError::Store(e.to_string()))?;
        fs::write(self.dir.join(INDEX_FILE), json + "\n")?;
        Ok(())
    }
}

/// Replays responses from a [`FixtureStore`]. Unrecorded URLs are transport failures.
#[derive(Debug, Clone)]
pub struct FixtureFetcher {
    store: FixtureStore,
    body_cap: usize,
}

impl FixtureFetcher {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, FetchError> {
        Ok(FixtureFetcher {
            store: FixtureStore::open(dir)?,
            body_cap: DEFAULT_BODY_CAP,
        })
    }

    pub fn with_body_cap(mut self, cap: usize) -> Self {
        self.body_cap = cap;
        self
    }

    pub fn store(&self) -> &FixtureStore {
        &self.store
    }
}

impl Fetcher for FixtureFetcher {
    fn fetch(&self, request: &FetchRequest) -> Result<FetchResponse, FetchError> {
        let key = request.url().to_string();
        let entry = self
            .store
            .entry(&key)
            .ok_or_else(|| FetchError::NotRecorded(key.clone()))?;
        let path = self.store.dir.join(&entry.file);
        let len = fs::metadata(&path)?.len();
        if len > self.body_cap as u64 {
            return Err(FetchError::BodyTooLarge {
                url: key,
                cap: self.body_cap,
            });
        }
        let body = fs::read(&path)?;
        let mut response = FetchResponse::new(key, entry.status, body, entry.fetched_at)?;
        response.headers = entry.headers.clone();
        Ok(response)
    }
}

/// Passes requests through to `inner` and records every response into a store.
pub struct RecordingFetcher<F> {
    inner: F,
    store: Mutex<FixtureStore>,
}

impl<F: Fetcher> RecordingFetcher<F> {
    pub fn new(inner: F, store: FixtureStore) -> Self {
        RecordingFetcher {
            inner,
            store: Mutex::new(store),
        }
    }

    /// Writes the index and returns the store.
    pub fn finish(self) -> Result<FixtureStore, FetchError> {
        let store = self.store.into_inner().unwrap_or_else(|e| e.into_inner());
        store.save()?;
        Ok(store)
    }
}

impl<F: Fetcher> Fetcher for RecordingFetcher<F> {
    fn fetch(&self, request: &FetchRequest) -> Result<FetchResponse, FetchError> {
        let response = self.inner.fetch(request)?;
        self.store
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(&response)?;
        Ok(response)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Echo;

    impl Fetcher for Echo {
        fn fetch(&self, request: &FetchRequest) -> Result<FetchResponse, FetchError> {
            FetchResponse::new(
                request.url().as_str(),
                200,
                request.url().path().as_bytes().to_vec(),
                "2020-04-01T12:00:00Z".parse().unwrap(),
            )
        }
    }

    #[test]
    fn record_then_replay() {
        let dir = tempfile::tempdir().unwrap();
        let rec = RecordingFetcher::new(Echo, FixtureStore::create(dir.path()));
        let req = FetchRequest::get("https://forum.test/threads/1").unwrap();
        let live = rec.fetch(&req).unwrap();
        rec.finish().unwrap();

        let replay = FixtureFetcher::open(dir.path()).unwrap();
        assert_eq!(replay.store().len(), 1);
        assert_eq!(replay.fetch(&req).unwrap(), live);

        let missing = FetchRequest::get("https://forum.test/threads/2").unwrap();
        assert!(matches!(replay.fetch(&missing), Err(FetchError::NotRecorded(_))));
    }

    #[test]
    fn body_cap_enforced() {
        let dir = tempfile::tempdir().unwrap();
        let rec = RecordingFetcher::new(Echo, FixtureStore::create(dir.path()));
        let req = FetchRequest::get("https://forum.test/a-rather-long-path").unwrap();
        rec.fetch(&req).unwrap();
        rec.finish().unwrap();
        let replay = FixtureFetcher::open(dir.path()).unwrap().with_body_cap(4);
        assert!(matches!(replay.fetch(&req), Err(FetchError::BodyTooLarge { .. })));
    }

    #[test]
    fn url_keys_are_normalized() {
        assert_eq!(normalize_url("HTTPS://Forum.Test").unwrap(), "https://forum.test/");
        assert_eq!(body_file_name("https://forum.test/").len(), 21);
    }
}
