//! Pluggable HTTP transports for [`GbifClient`](super::GbifClient).
//!
//! Every transport is addressed by a *request key*: the percent-encoded
//! path and query relative to the API base, e.g.
//! `species/match?name=Apis%20mellifera`. The same key names fixture files
//! and cache entries, which is what makes a recorded cache directory usable
//! as a replay corpus.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use chrono::{DateTime, Utc};

use crate::cache::{CacheEntry, CacheError, CacheStore};

pub const DEFAULT_BASE_URL: &str = "https://api.gbif.org/v1/";

/// Raw HTTP response as seen by the client.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Response {
    pub status: u16,
    pub body: Vec<u8>,
}

impl Response {
    pub fn ok(body: impl Into<Vec<u8>>) -> Self {
        Response { status: 200, body: body.into() }
    }

    pub fn is_success(&self) -> bool {
        (200..300).contains(&self.status)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TransportError {
    #[error("network error for {request}: {message}")]
    Network { request: String, message: String },
    #[error("no recorded response for {0}")]
    NotRecorded(String),
    #[error(transparent)]
    Store(#[from] CacheError),
}

/// Source of raw responses for a request key.
///
/// Implementations must be safe to share between worker threads.
pub trait Transport: Send + Sync {
    fn fetch(&self, request_key: &str) -> Result<Response, TransportError>;
}

impl<T: Transport + ?Sized> Transport for Arc<T> {
    fn fetch(&self, request_key: &str) -> Result<Response, TransportError> {
        (**self).fetch(request_key)
    }
}

/// Retry schedule for the live transport: transport-level failures and 5xx
/// responses are retried with exponential backoff; 4xx responses are final.
#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { attempts: 3, initial_backoff: Duration::from_millis(250) }
    }
}

/// Blocking HTTP transport against a live API.
pub struct HttpTransport {
    base_url: String,
    agent: ureq::Agent,
    retry: RetryPolicy,
}

impl HttpTransport {
    pub fn new(base_url: &str) -> Self {
        let mut base_url = base_url.trim().to_string();
        if !base_url.ends_with('/') {
            base_url.push('/');
        }
        let agent = ureq::AgentBuilder::new()
            .timeout_connect(Duration::from_secs(10))
            .timeout(Duration::from_secs(30))
            .user_agent(concat!("taxowl/", env!("CARGO_PKG_VERSION")))
            .build();
        HttpTransport { base_url, agent, retry: RetryPolicy::default() }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    fn fetch_once(&self, url: &str) -> Result<Response, String> {
        let read_body = |resp: ureq::Response| -> Result<Response, String> {
            let status = resp.status();
            let mut body = Vec::new();
            resp.into_reader()
                .read_to_end(&mut body)
                .map_err(|e| format!("reading body: {e}"))?;
            Ok(Response { status, body })
        };
        match self.agent.get(url).call() {
            Ok(resp) => read_body(resp),
            Err(ureq::Error::Status(_, resp)) => read_body(resp),
            Err(ureq::Error::Transport(t)) => Err(t.to_string()),
        }
    }
}

impl Transport for HttpTransport {
    fn fetch(&self, request_key: &str) -> Result<Response, TransportError> {
        let url = format!("{}{}", self.base_url, request_key);
        let mut backoff = self.retry.initial_backoff;
        let mut last_error = String::new();
        for attempt in 1..=self.retry.attempts.max(1) {
            match self.fetch_once(&url) {
                Ok(resp) if resp.status >= 500 && attempt < self.retry.attempts => {
                    last_error = format!("HTTP {}", resp.status);
                }
                Ok(resp) => return Ok(resp),
                Err(e) => last_error = e,
            }
            if attempt < self.retry.attempts {
                thread::sleep(backoff);
                backoff *= 2;
            }
        }
        Err(TransportError::Network { request: url, message: last_error })
    }
}

/// Replays responses from a recorded store directory. Never touches the
/// network; a request without a recording is an error.
pub struct FixtureTransport {
    store: CacheStore,
}

impl FixtureTransport {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, CacheError> {
        Ok(FixtureTransport { store: CacheStore::open_existing(dir)? })
    }

    pub fn store(&self) -> &CacheStore {
        &self.store
    }
}

impl Transport for FixtureTransport {
    fn fetch(&self, request_key: &str) -> Result<Response, TransportError> {
        match self.store.get(request_key, None)? {
            Some(entry) => Ok(Response::ok(entry.body)),
            None => Err(TransportError::NotRecorded(request_key.to_string())),
        }
    }
}

/// Hit/miss counters for [`CacheThroughTransport`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub hits: usize,
    pub misses: usize,
    pub oldest_hit: Option<DateTime<Utc>>,
}

/// Consults a [`CacheStore`] first, falls back to an upstream transport and
/// writes successful responses back.
pub struct CacheThroughTransport<T> {
    store: Arc<CacheStore>,
    upstream: T,
    max_age: Option<Duration>,
    refresh: bool,
    hits: AtomicUsize,
    misses: AtomicUsize,
    oldest_hit: Mutex<Option<DateTime<Utc>>>,
}

impl<T: Transport> CacheThroughTransport<T> {
    /// `max_age = None` means entries never expire.
    pub fn new(store: Arc<CacheStore>, upstream: T, max_age: Option<Duration>) -> Self {
        CacheThroughTransport {
            store,
            upstream,
            max_age,
            refresh: false,
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
            oldest_hit: Mutex::new(None),
        }
    }

    /// Bypass reads (every request goes upstream) while still writing back.
    pub fn refreshing(mut self, refresh: bool) -> Self {
        self.refresh = refresh;
        self
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
            oldest_hit: *self.oldest_hit.lock().unwrap(),
        }
    }
}

impl<T: Transport> Transport for CacheThroughTransport<T> {
    fn fetch(&self, request_key: &str) -> Result<Response, TransportError> {
        if !self.refresh {
            if let Some(entry) = self.store.get(request_key, self.max_age)? {
                self.hits.fetch_add(1, Ordering::Relaxed);
                let mut oldest = self.oldest_hit.lock().unwrap();
                if oldest.is_none_or(|o| entry.fetched_at < o) {
                    *oldest = Some(entry.fetched_at);
                }
                return Ok(Response::ok(entry.body));
            }
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let resp = self.upstream.fetch(request_key)?;
        // only successful responses are worth replaying
        if resp.is_success() {
            self.store.put(&CacheEntry::new(request_key, resp.body.clone()))?;
        }
        Ok(resp)
    }
}

/// In-memory transport, mostly for tests and embedding.
#[derive(Default)]
pub struct MemoryTransport {
    responses: BTreeMap<String, Response>,
    requests: Mutex<Vec<String>>,
}

impl MemoryTransport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, request_key: impl Into<String>, body: impl Into<Vec<u8>>) -> Self {
        self.responses.insert(request_key.into(), Response::ok(body));
        self
    }

    pub fn with_response(mut self, request_key: impl Into<String>, response: Response) -> Self {
        self.responses.insert(request_key.into(), response);
        self
    }

    /// Request keys seen so far, in arrival order.
    pub fn requests(&self) -> Vec<String> {
        self.requests.lock().unwrap().clone()
    }
}

impl Transport for MemoryTransport {
    fn fetch(&self, request_key: &str) -> Result<Response, TransportError> {
        self.requests.lock().unwrap().push(request_key.to_string());
        self.responses
            .get(request_key)
            .cloned()
            .ok_or_else(|| TransportError::NotRecorded(request_key.to_string()))
    }
}
