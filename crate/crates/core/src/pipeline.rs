//! End-to-end operations shared by the command line and the C interface.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use crate::cache::{CacheError, CacheStore};
use crate::gbif::{CacheStats, CacheThroughTransport, FixtureTransport, GbifClient, HttpTransport, Transport};
use crate::names::RawNameEntry;
use crate::owl::{
    emit, is_absolute_iri, parse_axiom_spec, EmitConfig, EmitWarning, RestrictionAxiom, SpecError,
};
use crate::taxonomy::{build, resolve_name, ConversionReport, MatchPolicy, TaxonomyGraph};

/// Where backbone responses come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransportMode {
    Live { base_url: String },
    /// Replay a recorded corpus; unrecorded requests fail.
    Fixtures(PathBuf),
    /// Serve from a local store, fetching and recording misses.
    CacheThrough { dir: PathBuf, base_url: String, max_age: Option<Duration>, refresh: bool },
}

/// A client plus whatever cache statistics its transport collects.
pub struct Session {
    pub client: GbifClient,
    cache: Option<Arc<CacheThroughTransport<HttpTransport>>>,
}

impl Session {
    pub fn open(mode: &TransportMode, parallelism: usize) -> Result<Self, CacheError> {
        let (transport, cache): (Arc<dyn Transport>, _) = match mode {
            TransportMode::Live { base_url } => (Arc::new(HttpTransport::new(base_url)), None),
            TransportMode::Fixtures(dir) => (Arc::new(FixtureTransport::open(dir)?), None),
            TransportMode::CacheThrough { dir, base_url, max_age, refresh } => {
                let store = Arc::new(CacheStore::open(dir)?);
                let t = Arc::new(
                    CacheThroughTransport::new(store, HttpTransport::new(base_url), *max_age).refreshing(*refresh),
                );
                (t.clone() as Arc<dyn Transport>, Some(t))
            }
        };
        Ok(Session { client: GbifClient::new(transport).with_parallelism(parallelism), cache })
    }

    pub fn from_client(client: GbifClient) -> Self {
        Session { client, cache: None }
    }

    /// Hit/miss counts when running through a cache.
    pub fn cache_stats(&self) -> Option<CacheStats> {
        self.cache.as_ref().map(|c| c.stats())
    }
}

/// Graph, report and document produced from one names list.
#[derive(Debug, Clone)]
pub struct Conversion {
    pub graph: TaxonomyGraph,
    pub report: ConversionReport,
    pub xml: String,
    pub warnings: Vec<EmitWarning>,
}

pub fn convert(names: &[RawNameEntry], client: &GbifClient, policy: &MatchPolicy, config: &EmitConfig) -> Conversion {
    let (graph, report) = build(names, client, policy);
    let emitted = emit(&graph, config);
    Conversion { graph, report, xml: emitted.xml, warnings: emitted.warnings }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AxiomSpecError {
    #[error(transparent)]
    Syntax(#[from] SpecError),
    #[error("line {line}: could not resolve {name:?}: {reason}")]
    UnresolvedTarget { line: usize, name: String, reason: String },
}

/// Parses an axiom spec and resolves every subject and target that is not
/// already an IRI to its accepted backbone class.
pub fn resolve_axiom_spec(
    text: &str,
    client: &GbifClient,
    policy: &MatchPolicy,
    config: &EmitConfig,
) -> Result<Vec<RestrictionAxiom>, AxiomSpecError> {
    let lines = parse_axiom_spec(text)?;
    let mut out = Vec::with_capacity(lines.len());
    for spec in lines {
        let resolve = |name: &str| -> Result<String, AxiomSpecError> {
            if is_absolute_iri(name) {
                return Ok(name.to_string());
            }
            let res = resolve_name(&RawNameEntry::new(name), client, policy);
            res.result.map(|t| config.iri(t.accepted_key)).map_err(|reason| AxiomSpecError::UnresolvedTarget {
                line: spec.line,
                name: name.to_string(),
                reason,
            })
        };
        let subject = resolve(&spec.subject)?;
        let targets = spec.targets.iter().map(|t| resolve(t)).collect::<Result<Vec<_>, _>>()?;
        let axiom = RestrictionAxiom::new(subject, spec.kind, &spec.property, targets)
            .map_err(|e| SpecError { line: spec.line, message: e.to_string() })?;
        out.push(axiom);
    }
    Ok(out)
}
