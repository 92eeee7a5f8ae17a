//! Blocking HTTP fetcher for live runs. Pair with [`super::fetch::PoliteFetcher`]
//! and, ideally, [`super::fixture::RecordingFetcher`] so a live crawl leaves a
//! replayable fixture behind.

use std::time::Duration;

use chrono::Utc;
use ureq::Agent;

use super::fetch::{FetchError, FetchRequest, FetchResponse, Fetcher, DEFAULT_BODY_CAP};

pub struct LiveFetcher {
    agent: Agent,
    body_cap: usize,
}

impl LiveFetcher {
    pub fn new(user_agent: &str, timeout: Duration) -> Self {
        let agent: Agent = Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .user_agent(user_agent)
            .build()
            .into();
        LiveFetcher {
            agent,
            body_cap: DEFAULT_BODY_CAP,
        }
    }

    pub fn with_body_cap(mut self, cap: usize) -> Self {
        self.body_cap = cap;
        self
    }
}

impl Fetcher for LiveFetcher {
    fn fetch(&self, request: &FetchRequest) -> Result<FetchResponse, FetchError> {
        let url = request.url().to_string();
        let transport = |e: ureq::Error| FetchError::Transport {
            url: url.clone(),
            reason: e.to_string(),
        };
        let mut call = self.agent.get(&url);
        for (k, v) in &request.headers {
            call = call.header(k.as_str(), v.as_str());
        }
        let mut response = call.call().map_err(transport)?;
        let status = response.status().as_u16();
        let mut headers = std::collections::BTreeMap::new();
        for (name, value) in response.headers() {
            if let Ok(v) = value.to_str() {
                headers.insert(name.as_str().to_string(), v.to_string());
            }
        }
        let body = response
            .body_mut()
            .with_config()
            .limit(self.body_cap as u64)
            .read_to_vec()
            .map_err(|e| match e {
                ureq::Error::BodyExceedsLimit(_) => FetchError::BodyTooLarge {
                    url: url.clone(),
                    cap: self.body_cap,
                },
                other => transport(other),
            })?;
        let mut out = FetchResponse::new(url.clone(), status, body, Utc::now())?;
        out.headers = headers;
        Ok(out)
    }
}
