//! Resolution of matched names to accepted taxa and their accumulation into
//! a deduplicated rank hierarchy.

mod build;
mod graph;
mod report;
mod resolve;

pub use build::{build, resolve_all, resolve_name, NameResolution};
pub use graph::{GraphError, TaxonNode, TaxonomyGraph};
pub use report::{ConversionReport, Outcome, OutcomeCounts, ReportRow, REPORT_HEADER};
pub use resolve::{
    resolve_accepted, ChainLink, MatchPolicy, ResolveError, Resolution, ResolvedTaxon,
    DEFAULT_FUZZY_THRESHOLD,
};
