use std::collections::BTreeMap;
use std::fmt;

use serde::Deserialize;

use crate::rank::Rank;

/// Taxonomic status of a name usage.
///
/// Vocabulary the backbone adds later lands in `Other` with the raw text.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TaxonomicStatus {
    Accepted,
    Synonym,
    Doubtful,
    Other(String),
}

impl TaxonomicStatus {
    pub fn parse(raw: &str) -> Self {
        match raw {
            "ACCEPTED" => TaxonomicStatus::Accepted,
            "SYNONYM" => TaxonomicStatus::Synonym,
            "DOUBTFUL" => TaxonomicStatus::Doubtful,
            other => TaxonomicStatus::Other(other.to_string()),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            TaxonomicStatus::Accepted => "ACCEPTED",
            TaxonomicStatus::Synonym => "SYNONYM",
            TaxonomicStatus::Doubtful => "DOUBTFUL",
            TaxonomicStatus::Other(raw) => raw,
        }
    }

    /// True for `SYNONYM` and for the record endpoint's finer-grained
    /// variants (`HOMOTYPIC_SYNONYM`, `PROPARTE_SYNONYM`, ...).
    pub fn is_synonym(&self) -> bool {
        match self {
            TaxonomicStatus::Synonym => true,
            TaxonomicStatus::Other(raw) => raw.ends_with("_SYNONYM"),
            _ => false,
        }
    }
}

impl fmt::Display for TaxonomicStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How the backbone matched a queried name.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum MatchType {
    Exact,
    Fuzzy,
    HigherRank,
    None,
    Other(String),
}

impl MatchType {
    pub fn parse(raw: &str) -> Self {
        match raw {
            "EXACT" => MatchType::Exact,
            "FUZZY" => MatchType::Fuzzy,
            "HIGHERRANK" => MatchType::HigherRank,
            "NONE" => MatchType::None,
            other => MatchType::Other(other.to_string()),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            MatchType::Exact => "EXACT",
            MatchType::Fuzzy => "FUZZY",
            MatchType::HigherRank => "HIGHERRANK",
            MatchType::None => "NONE",
            MatchType::Other(raw) => raw,
        }
    }
}

impl fmt::Display for MatchType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One named, keyed level of a classification.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RankEntry {
    pub name: String,
    pub key: u64,
}

/// Kingdom-to-species classification as reported by the backbone.
///
/// Names and keys are stored together, so a rank can never carry a key
/// without a name or the other way round.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Classification(BTreeMap<Rank, RankEntry>);

impl Classification {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, rank: Rank, name: impl Into<String>, key: u64) {
        self.0.insert(rank, RankEntry { name: name.into(), key });
    }

    pub fn get(&self, rank: Rank) -> Option<&RankEntry> {
        self.0.get(&rank)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Rank, &RankEntry)> {
        self.0.iter().map(|(r, e)| (*r, e))
    }

    pub fn rank_names(&self) -> BTreeMap<Rank, &str> {
        self.0.iter().map(|(r, e)| (*r, e.name.as_str())).collect()
    }

    pub fn rank_keys(&self) -> BTreeMap<Rank, u64> {
        self.0.iter().map(|(r, e)| (*r, e.key)).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }
}

/// Decoded response of the `species/match` endpoint.
///
/// A `NONE` match never becomes a `TaxonMatch`; the client reports it as
/// [`ClientError::NoMatch`](super::ClientError::NoMatch) instead.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaxonMatch {
    pub usage_key: u64,
    pub scientific_name: String,
    pub canonical_name: String,
    pub rank: Rank,
    pub status: TaxonomicStatus,
    pub confidence: u8,
    pub match_type: MatchType,
    pub synonym: bool,
    pub classification: Classification,
    /// Present when `status` is a synonym.
    pub accepted_usage_key: Option<u64>,
    /// The accepted species name carried by a synonym match.
    pub species_name: Option<String>,
}

/// Decoded response of the `species/{key}` endpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaxonRecord {
    pub key: u64,
    pub scientific_name: String,
    pub canonical_name: String,
    pub rank: Rank,
    pub taxonomic_status: TaxonomicStatus,
    pub parent_key: Option<u64>,
    pub accepted_key: Option<u64>,
    pub vernacular_name: Option<String>,
    pub num_descendants: Option<u64>,
    /// Higher classification of the (accepted) taxon, as listed on the record.
    pub classification: Classification,
}

/// Classification fields shared by match responses and taxon records.
#[derive(Debug, Default, Deserialize)]
pub(crate) struct RawClassification {
    kingdom: Option<String>,
    phylum: Option<String>,
    class: Option<String>,
    order: Option<String>,
    family: Option<String>,
    genus: Option<String>,
    species: Option<String>,
    #[serde(rename = "kingdomKey")]
    kingdom_key: Option<i64>,
    #[serde(rename = "phylumKey")]
    phylum_key: Option<i64>,
    #[serde(rename = "classKey")]
    class_key: Option<i64>,
    #[serde(rename = "orderKey")]
    order_key: Option<i64>,
    #[serde(rename = "familyKey")]
    family_key: Option<i64>,
    #[serde(rename = "genusKey")]
    genus_key: Option<i64>,
    #[serde(rename = "speciesKey")]
    species_key: Option<i64>,
}

impl RawClassification {
    pub(crate) fn species(&self) -> Option<&str> {
        self.species.as_deref()
    }

    pub(crate) fn into_classification(self) -> Result<Classification, String> {
        let pairs = [
            (Rank::Kingdom, self.kingdom, self.kingdom_key),
            (Rank::Phylum, self.phylum, self.phylum_key),
            (Rank::Class, self.class, self.class_key),
            (Rank::Order, self.order, self.order_key),
            (Rank::Family, self.family, self.family_key),
            (Rank::Genus, self.genus, self.genus_key),
            (Rank::Species, self.species, self.species_key),
        ];
        let mut out = Classification::new();
        for (rank, name, key) in pairs {
            match (name, key) {
                (Some(name), Some(key)) => out.insert(rank, name, positive(key, rank.as_api_str())?),
                (None, None) => {}
                (Some(_), None) => return Err(format!("{rank} name without a {rank} key")),
                (None, Some(_)) => return Err(format!("{rank} key without a {rank} name")),
            }
        }
        Ok(out)
    }
}

pub(crate) fn positive(value: i64, field: &str) -> Result<u64, String> {
    if value > 0 {
        Ok(value as u64)
    } else {
        Err(format!("{field} must be a positive integer, got {value}"))
    }
}

#[derive(Debug, Deserialize)]
pub(crate) struct RawMatch {
    #[serde(rename = "usageKey")]
    pub usage_key: Option<i64>,
    #[serde(rename = "scientificName")]
    pub scientific_name: Option<String>,
    #[serde(rename = "canonicalName")]
    pub canonical_name: Option<String>,
    pub rank: Option<String>,
    pub status: Option<String>,
    pub confidence: Option<i64>,
    #[serde(rename = "matchType")]
    pub match_type: Option<String>,
    pub synonym: Option<bool>,
    #[serde(rename = "acceptedUsageKey")]
    pub accepted_usage_key: Option<i64>,
    pub note: Option<String>,
    #[serde(flatten)]
    pub classification: RawClassification,
}

#[derive(Debug, Deserialize)]
pub(crate) struct RawRecord {
    pub key: Option<i64>,
    #[serde(rename = "scientificName")]
    pub scientific_name: Option<String>,
    #[serde(rename = "canonicalName")]
    pub canonical_name: Option<String>,
    pub rank: Option<String>,
    #[serde(rename = "taxonomicStatus")]
    pub taxonomic_status: Option<String>,
    #[serde(rename = "parentKey")]
    pub parent_key: Option<i64>,
    #[serde(rename = "acceptedKey")]
    pub accepted_key: Option<i64>,
    #[serde(rename = "vernacularName")]
    pub vernacular_name: Option<String>,
    #[serde(rename = "numDescendants")]
    pub num_descendants: Option<i64>,
    #[serde(flatten)]
    pub classification: RawClassification,
}

#[derive(Debug, Deserialize)]
pub(crate) struct RawSynonymPage {
    pub results: Vec<RawRecord>,
}

impl RawRecord {
    pub(crate) fn decode(self) -> Result<TaxonRecord, String> {
        let key = positive(self.key.ok_or("missing key")?, "key")?;
        let rank_raw = self.rank.ok_or("missing rank")?;
        let rank = rank_raw.parse::<Rank>().map_err(|e| e.to_string())?;
        let scientific_name = self.scientific_name.ok_or("missing scientificName")?;
        // records of unparsable names lack a canonical form; fall back to the full name
        let canonical_name = self
            .canonical_name
            .filter(|c| !c.is_empty())
            .unwrap_or_else(|| scientific_name.clone());
        let taxonomic_status =
            TaxonomicStatus::parse(&self.taxonomic_status.ok_or("missing taxonomicStatus")?);
        let parent_key = self.parent_key.map(|k| positive(k, "parentKey")).transpose()?;
        let accepted_key = self.accepted_key.map(|k| positive(k, "acceptedKey")).transpose()?;
        let num_descendants = match self.num_descendants {
            Some(n) if n < 0 => return Err(format!("numDescendants is negative ({n})")),
            Some(n) => Some(n as u64),
            None => None,
        };
        Ok(TaxonRecord {
            key,
            scientific_name,
            canonical_name,
            rank,
            taxonomic_status,
            parent_key,
            accepted_key,
            vernacular_name: self.vernacular_name,
            num_descendants,
            classification: self.classification.into_classification()?,
        })
    }
}
