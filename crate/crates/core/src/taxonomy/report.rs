use std::fmt;
use std::io::Write;

use crate::gbif::{MatchType, TaxonomicStatus};

use super::resolve::Resolution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Accepted,
    SynonymReplaced,
    FuzzyMatched,
    Failed,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Accepted => "ACCEPTED",
            Outcome::SynonymReplaced => "SYNONYM_REPLACED",
            Outcome::FuzzyMatched => "FUZZY_MATCHED",
            Outcome::Failed => "FAILED",
        }
    }
}

impl From<Resolution> for Outcome {
    fn from(r: Resolution) -> Self {
        match r {
            Resolution::Accepted => Outcome::Accepted,
            Resolution::SynonymReplaced => Outcome::SynonymReplaced,
            Resolution::FuzzyMatched => Outcome::FuzzyMatched,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One input name and what became of it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportRow {
    pub input: String,
    pub normalized: Option<String>,
    pub outcome: Outcome,
    pub status: Option<TaxonomicStatus>,
    pub match_type: Option<MatchType>,
    pub confidence: Option<u8>,
    pub accepted_name: Option<String>,
    pub accepted_key: Option<u64>,
    /// Repairs, gaps, fallbacks or the failure reason, `; `-separated.
    pub detail: String,
}

impl ReportRow {
    pub fn failed(input: &str, normalized: Option<String>, detail: impl Into<String>) -> Self {
        ReportRow {
            input: input.to_string(),
            normalized,
            outcome: Outcome::Failed,
            status: None,
            match_type: None,
            confidence: None,
            accepted_name: None,
            accepted_key: None,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OutcomeCounts {
    pub accepted: usize,
    pub synonym_replaced: usize,
    pub fuzzy_matched: usize,
    pub failed: usize,
}

impl OutcomeCounts {
    pub fn total(&self) -> usize {
        self.accepted + self.synonym_replaced + self.fuzzy_matched + self.failed
    }
}

/// Per-name outcomes of a conversion, in input order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConversionReport {
    pub rows: Vec<ReportRow>,
}

pub const REPORT_HEADER: [&str; 8] =
    ["input", "normalized", "outcome", "matchType", "confidence", "acceptedName", "acceptedKey", "detail"];

impl ConversionReport {
    pub fn counts(&self) -> OutcomeCounts {
        let mut c = OutcomeCounts::default();
        for row in &self.rows {
            match row.outcome {
                Outcome::Accepted => c.accepted += 1,
                Outcome::SynonymReplaced => c.synonym_replaced += 1,
                Outcome::FuzzyMatched => c.fuzzy_matched += 1,
                Outcome::Failed => c.failed += 1,
            }
        }
        c
    }

    pub fn has_failures(&self) -> bool {
        self.rows.iter().any(|r| r.outcome == Outcome::Failed)
    }

    pub fn row(&self, input: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.input == input)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(REPORT_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.input.as_str(),
                r.normalized.as_deref().unwrap_or(""),
                r.outcome.as_str(),
                r.match_type.as_ref().map(MatchType::as_str).unwrap_or(""),
                &r.confidence.map(|c| c.to_string()).unwrap_or_default(),
                r.accepted_name.as_deref().unwrap_or(""),
                &r.accepted_key.map(|k| k.to_string()).unwrap_or_default(),
                r.detail.as_str(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("report is UTF-8")
    }

    /// One-line summary, e.g. `14 names: 6 accepted, 5 synonym replaced, 2 fuzzy, 1 failed`.
    pub fn summary(&self) -> String {
        let c = self.counts();
        format!(
            "{} names: {} accepted, {} synonym replaced, {} fuzzy, {} failed",
            c.total(),
            c.accepted,
            c.synonym_replaced,
            c.fuzzy_matched,
            c.failed
        )
    }
}
