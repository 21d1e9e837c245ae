use std::fmt;

use crate::gbif::{ClientError, GbifClient, MatchType, TaxonMatch, TaxonomicStatus};
use crate::rank::Rank;

/// Default minimum confidence for accepting a fuzzy match.
pub const DEFAULT_FUZZY_THRESHOLD: u8 = 90;

/// Synonym chains longer than this are treated as unresolvable.
const MAX_SYNONYM_HOPS: usize = 3;

/// Rules for turning a backbone match into an accepted taxon.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchPolicy {
    /// Fuzzy matches at or above this confidence are accepted (and flagged).
    pub fuzzy_threshold: u8,
    /// Accept every fuzzy match regardless of confidence.
    pub allow_fuzzy: bool,
    /// Repair names before querying. Disabling sends raw text as given.
    pub normalize: bool,
    /// Retry an unmatched trinomial as its binomial.
    pub subspecies_fallback: bool,
}

impl Default for MatchPolicy {
    fn default() -> Self {
        MatchPolicy {
            fuzzy_threshold: DEFAULT_FUZZY_THRESHOLD,
            allow_fuzzy: false,
            normalize: true,
            subspecies_fallback: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Resolution {
    Accepted,
    SynonymReplaced,
    FuzzyMatched,
}

impl Resolution {
    pub fn as_str(self) -> &'static str {
        match self {
            Resolution::Accepted => "ACCEPTED",
            Resolution::SynonymReplaced => "SYNONYM_REPLACED",
            Resolution::FuzzyMatched => "FUZZY_MATCHED",
        }
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One level of a resolved lineage.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChainLink {
    pub rank: Rank,
    pub name: String,
    pub key: u64,
}

/// An input name resolved to its accepted taxon and lineage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedTaxon {
    pub input_name: String,
    pub accepted_name: String,
    pub accepted_key: u64,
    /// Kingdom first, the accepted taxon last.
    pub chain: Vec<ChainLink>,
    pub resolution: Resolution,
    pub original_match: TaxonMatch,
    /// Classification ranks missing between the top of the chain and the
    /// taxon's own rank.
    pub gaps: Vec<Rank>,
    /// Set when the accepted taxon differs from the matched usage (synonym
    /// replacement), holding the matched canonical name.
    pub replaced_name: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum ResolveError {
    #[error("{name:?} is a synonym without an accepted reference")]
    UnresolvableSynonym { name: String },
    #[error("fuzzy match {matched:?} has confidence {confidence} below threshold {threshold}")]
    LowConfidence { matched: String, confidence: u8, threshold: u8 },
    #[error("match type {match_type} for {name:?} is not accepted")]
    RejectedMatch { name: String, match_type: MatchType },
    #[error("classification of {name:?} is inconsistent: {message}")]
    InconsistentClassification { name: String, message: String },
    #[error(transparent)]
    Client(#[from] ClientError),
}

/// Resolves a match to the accepted taxon it denotes.
///
/// Accepted (and doubtful) matches use their own classification. Synonyms
/// are replaced by the record behind `acceptedUsageKey`, falling back to
/// the accepted species carried on the match when that key is absent.
pub fn resolve_accepted(
    m: &TaxonMatch,
    client: &GbifClient,
    policy: &MatchPolicy,
) -> Result<ResolvedTaxon, ResolveError> {
    let fuzzy = match &m.match_type {
        MatchType::Exact => false,
        MatchType::Fuzzy => {
            if !policy.allow_fuzzy && m.confidence < policy.fuzzy_threshold {
                return Err(ResolveError::LowConfidence {
                    matched: m.canonical_name.clone(),
                    confidence: m.confidence,
                    threshold: policy.fuzzy_threshold,
                });
            }
            true
        }
        other => {
            return Err(ResolveError::RejectedMatch { name: m.canonical_name.clone(), match_type: other.clone() })
        }
    };

    let (accepted_name, accepted_key, chain, replaced) = if m.status.is_synonym() {
        let (name, key, chain) = accepted_of_synonym(m, client)?;
        (name, key, chain, Some(m.canonical_name.clone()))
    } else {
        let chain = chain_for(&m.canonical_name, m.rank, m.usage_key, m.classification.iter())?;
        (m.canonical_name.clone(), m.usage_key, chain, None)
    };

    let resolution = if fuzzy {
        Resolution::FuzzyMatched
    } else if replaced.is_some() {
        Resolution::SynonymReplaced
    } else {
        Resolution::Accepted
    };
    let gaps = gaps_in(&chain);
    Ok(ResolvedTaxon {
        input_name: m.canonical_name.clone(),
        accepted_name,
        accepted_key,
        chain,
        resolution,
        original_match: m.clone(),
        gaps,
        replaced_name: replaced,
    })
}

fn accepted_of_synonym(m: &TaxonMatch, client: &GbifClient) -> Result<(String, u64, Vec<ChainLink>), ResolveError> {
    let Some(mut key) = m.accepted_usage_key else {
        // older responses only carry the accepted species in the classification
        return match m.classification.get(Rank::Species) {
            Some(sp) if sp.key != m.usage_key && m.species_name.is_some() => {
                let chain = chain_for(&sp.name, Rank::Species, sp.key, m.classification.iter())?;
                Ok((sp.name.clone(), sp.key, chain))
            }
            _ => Err(ResolveError::UnresolvableSynonym { name: m.canonical_name.clone() }),
        };
    };
    for _ in 0..MAX_SYNONYM_HOPS {
        let record = client.get_taxon(key as i64)?;
        if record.taxonomic_status.is_synonym() {
            match record.accepted_key.or(record.parent_key) {
                Some(next) if next != key => {
                    key = next;
                    continue;
                }
                _ => break,
            }
        }
        let chain = chain_for(&record.canonical_name, record.rank, record.key, record.classification.iter())?;
        return Ok((record.canonical_name, record.key, chain));
    }
    Err(ResolveError::UnresolvableSynonym { name: m.canonical_name.clone() })
}

/// Builds the lineage of taxon `key` at `rank` from classification entries.
fn chain_for<'a>(
    name: &str,
    rank: Rank,
    key: u64,
    classification: impl Iterator<Item = (Rank, &'a crate::gbif::RankEntry)>,
) -> Result<Vec<ChainLink>, ResolveError> {
    let mut chain: Vec<ChainLink> = classification
        .filter(|(r, _)| *r <= rank)
        .map(|(r, e)| ChainLink { rank: r, name: e.name.clone(), key: e.key })
        .collect();
    match chain.last() {
        Some(last) if last.rank == rank => {
            if last.key != key {
                return Err(ResolveError::InconsistentClassification {
                    name: name.to_string(),
                    message: format!("{rank} key {} differs from usage key {key}", last.key),
                });
            }
        }
        _ => chain.push(ChainLink { rank, name: name.to_string(), key }),
    }
    for pair in chain.windows(2) {
        if pair[0].key == pair[1].key {
            return Err(ResolveError::InconsistentClassification {
                name: name.to_string(),
                message: format!("key {} appears at both {} and {}", pair[0].key, pair[0].rank, pair[1].rank),
            });
        }
    }
    Ok(chain)
}

fn gaps_in(chain: &[ChainLink]) -> Vec<Rank> {
    let (Some(first), Some(last)) = (chain.first(), chain.last()) else {
        return Vec::new();
    };
    Rank::CLASSIFICATION
        .into_iter()
        .filter(|r| *r > first.rank && *r < last.rank)
        .filter(|r| !chain.iter().any(|l| l.rank == *r))
        .collect()
}

impl ResolvedTaxon {
    /// True when the original match carried a doubtful status.
    pub fn is_doubtful(&self) -> bool {
        self.original_match.status == TaxonomicStatus::Doubtful
    }
}
