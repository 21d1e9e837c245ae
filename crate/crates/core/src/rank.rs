use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Linnaean rank, ordered from the most general (`Kingdom`) to the most
/// specific (`Subspecies`).
///
/// `Ord` follows declaration order, so `Rank::Kingdom < Rank::Species`.
/// "Higher rank" in the taxonomic sense therefore means a *smaller* value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Rank {
    Kingdom,
    Phylum,
    Class,
    Order,
    Family,
    Genus,
    Species,
    Subspecies,
}

impl Rank {
    pub const ALL: [Rank; 8] = [
        Rank::Kingdom,
        Rank::Phylum,
        Rank::Class,
        Rank::Order,
        Rank::Family,
        Rank::Genus,
        Rank::Species,
        Rank::Subspecies,
    ];

    /// The seven ranks the backbone reports as named classification fields.
    pub const CLASSIFICATION: [Rank; 7] = [
        Rank::Kingdom,
        Rank::Phylum,
        Rank::Class,
        Rank::Order,
        Rank::Family,
        Rank::Genus,
        Rank::Species,
    ];

    /// Upper-case wire name used by the GBIF API (`"KINGDOM"`).
    pub fn as_api_str(self) -> &'static str {
        match self {
            Rank::Kingdom => "KINGDOM",
            Rank::Phylum => "PHYLUM",
            Rank::Class => "CLASS",
            Rank::Order => "ORDER",
            Rank::Family => "FAMILY",
            Rank::Genus => "GENUS",
            Rank::Species => "SPECIES",
            Rank::Subspecies => "SUBSPECIES",
        }
    }

    /// Lower-case JSON field prefix of the match/record classification
    /// (`"kingdom"` / `"kingdomKey"`). `None` for subspecies, which the
    /// backbone does not report as a classification field.
    pub fn classification_field(self) -> Option<&'static str> {
        match self {
            Rank::Kingdom => Some("kingdom"),
            Rank::Phylum => Some("phylum"),
            Rank::Class => Some("class"),
            Rank::Order => Some("order"),
            Rank::Family => Some("family"),
            Rank::Genus => Some("genus"),
            Rank::Species => Some("species"),
            Rank::Subspecies => None,
        }
    }

    /// Title-case display name (`"Kingdom"`), as used in comment banners and
    /// in names-file rank hints.
    pub fn title(self) -> &'static str {
        match self {
            Rank::Kingdom => "Kingdom",
            Rank::Phylum => "Phylum",
            Rank::Class => "Class",
            Rank::Order => "Order",
            Rank::Family => "Family",
            Rank::Genus => "Genus",
            Rank::Species => "Species",
            Rank::Subspecies => "Subspecies",
        }
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_api_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unrecognized rank {0:?}")]
pub struct UnknownRank(pub String);

impl FromStr for Rank {
    type Err = UnknownRank;

    /// Case-insensitive.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.trim().to_ascii_uppercase();
        Rank::ALL
            .into_iter()
            .find(|r| r.as_api_str() == upper)
            .ok_or_else(|| UnknownRank(s.to_string()))
    }
}
