//! Converts lists of scientific species names into a deduplicated OWL class
//! hierarchy, using the GBIF Backbone Taxonomy to resolve synonyms and
//! supply the rank lineage of every accepted taxon.

pub mod cache;
pub mod cli;
pub mod gbif;
pub mod names;
pub mod owl;
pub mod pipeline;
pub mod rank;
pub mod taxonomy;

pub use rank::Rank;
