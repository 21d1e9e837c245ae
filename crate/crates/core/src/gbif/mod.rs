//! Typed client for the GBIF species API.

mod transport;
mod types;

use std::sync::Arc;

use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};

pub use transport::{
    CacheStats, CacheThroughTransport, FixtureTransport, HttpTransport, MemoryTransport, Response,
    RetryPolicy, Transport, TransportError, DEFAULT_BASE_URL,
};
pub use types::{
    Classification, MatchType, RankEntry, TaxonMatch, TaxonRecord, TaxonomicStatus,
};

use crate::rank::Rank;
use types::{positive, RawMatch, RawRecord, RawSynonymPage};

/// Everything except RFC 3986 unreserved characters.
pub(crate) const STRICT: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'_').remove(b'.').remove(b'~');

pub const DEFAULT_PARALLELISM: usize = 4;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("no backbone match for {name:?}")]
    NoMatch { name: String, note: Option<String> },
    #[error("{what} not found")]
    NotFound { what: String },
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("could not decode response for {request}: {message}")]
    Decode { request: String, message: String },
}

/// Request key of a name match.
pub fn match_request(name: &str) -> String {
    format!("species/match?name={}", utf8_percent_encode(name, STRICT))
}

/// Request key of a single taxon record.
pub fn taxon_request(key: u64) -> String {
    format!("species/{key}")
}

/// Request key of the (first page of the) synonym list of a taxon.
pub fn synonyms_request(key: u64) -> String {
    format!("species/{key}/synonyms")
}

/// Client for the `species/match`, `species/{key}` and
/// `species/{key}/synonyms` endpoints.
///
/// Cloning is cheap; clones share the transport.
#[derive(Clone)]
pub struct GbifClient {
    transport: Arc<dyn Transport>,
    parallelism: usize,
}

impl GbifClient {
    pub fn new(transport: Arc<dyn Transport>) -> Self {
        GbifClient { transport, parallelism: DEFAULT_PARALLELISM }
    }

    pub fn from_transport(transport: impl Transport + 'static) -> Self {
        Self::new(Arc::new(transport))
    }

    /// Upper bound on concurrent requests issued by batch callers.
    pub fn with_parallelism(mut self, parallelism: usize) -> Self {
        self.parallelism = parallelism.max(1);
        self
    }

    pub fn parallelism(&self) -> usize {
        self.parallelism
    }

    pub fn transport(&self) -> &Arc<dyn Transport> {
        &self.transport
    }

    /// Matches a (normalized) scientific name against the backbone.
    ///
    /// Synonym and fuzzy results are returned as-is; acceptance policy is
    /// the caller's business.
    pub fn match_name(&self, name: &str) -> Result<TaxonMatch, ClientError> {
        let request = match_request(name);
        let resp = self.transport.fetch(&request)?;
        if resp.status == 404 {
            return Err(ClientError::NoMatch { name: name.to_string(), note: None });
        }
        let raw: RawMatch = decode_json(&request, &resp)?;
        let match_type = MatchType::parse(raw.match_type.as_deref().unwrap_or("NONE"));
        if match_type == MatchType::None {
            return Err(ClientError::NoMatch { name: name.to_string(), note: raw.note });
        }
        decode_match(raw, match_type).map_err(|message| ClientError::Decode { request, message })
    }

    /// Fetches the full record of a usage key. Non-positive keys are
    /// `NotFound` without a request.
    pub fn get_taxon(&self, key: i64) -> Result<TaxonRecord, ClientError> {
        let key = checked_key(key)?;
        let request = taxon_request(key);
        let resp = self.transport.fetch(&request)?;
        if resp.status == 404 {
            return Err(ClientError::NotFound { what: format!("taxon {key}") });
        }
        let raw: RawRecord = decode_json(&request, &resp)?;
        raw.decode().map_err(|message| ClientError::Decode { request, message })
    }

    /// Fetches the names recorded as synonyms of `key`. Only the first page
    /// of the endpoint is read.
    pub fn get_synonyms(&self, key: i64) -> Result<Vec<TaxonRecord>, ClientError> {
        let key = checked_key(key)?;
        let request = synonyms_request(key);
        let resp = self.transport.fetch(&request)?;
        if resp.status == 404 {
            return Err(ClientError::NotFound { what: format!("taxon {key}") });
        }
        let page: RawSynonymPage = decode_json(&request, &resp)?;
        page.results
            .into_iter()
            .map(RawRecord::decode)
            .collect::<Result<_, _>>()
            .map_err(|message| ClientError::Decode { request, message })
    }
}

fn checked_key(key: i64) -> Result<u64, ClientError> {
    if key > 0 {
        Ok(key as u64)
    } else {
        Err(ClientError::NotFound { what: format!("taxon {key}") })
    }
}

fn decode_json<T: serde::de::DeserializeOwned>(request: &str, resp: &Response) -> Result<T, ClientError> {
    if !resp.is_success() {
        return Err(ClientError::Transport(TransportError::Network {
            request: request.to_string(),
            message: format!("HTTP {}", resp.status),
        }));
    }
    serde_json::from_slice(&resp.body).map_err(|e| ClientError::Decode {
        request: request.to_string(),
        message: e.to_string(),
    })
}

fn decode_match(raw: RawMatch, match_type: MatchType) -> Result<TaxonMatch, String> {
    let usage_key = positive(raw.usage_key.ok_or("missing usageKey")?, "usageKey")?;
    let scientific_name = raw.scientific_name.ok_or("missing scientificName")?;
    let canonical_name = raw
        .canonical_name
        .filter(|c| !c.is_empty())
        .unwrap_or_else(|| scientific_name.clone());
    let rank = raw.rank.ok_or("missing rank")?.parse::<Rank>().map_err(|e| e.to_string())?;
    let status = TaxonomicStatus::parse(&raw.status.ok_or("missing status")?);
    let confidence = raw.confidence.ok_or("missing confidence")?;
    if !(0..=100).contains(&confidence) {
        return Err(format!("confidence {confidence} outside 0..=100"));
    }
    let synonym = raw.synonym.unwrap_or(false);
    if synonym != status.is_synonym() {
        return Err(format!("synonym flag {synonym} disagrees with status {status}"));
    }
    let accepted_usage_key =
        raw.accepted_usage_key.map(|k| positive(k, "acceptedUsageKey")).transpose()?;
    let species_name = if synonym { raw.classification.species().map(str::to_string) } else { None };
    let classification = raw.classification.into_classification()?;
    Ok(TaxonMatch {
        usage_key,
        scientific_name,
        canonical_name,
        rank,
        status,
        confidence: confidence as u8,
        match_type,
        synonym,
        classification,
        accepted_usage_key,
        species_name,
    })
}
