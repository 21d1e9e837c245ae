//! RDF/XML OWL output, parsing of the same dialect, and merging of
//! documents.

mod axioms;
mod document;
mod merge;
mod parse;

pub use axioms::{
    emit_axioms, is_absolute_iri, parse_axiom_spec, AxiomError, AxiomKind, AxiomSpecLine, RestrictionAxiom,
    SpecError,
};
pub use document::{
    emit, EmitConfig, EmitWarning, Emitted, Label, OwlClass, OwlDocument, DEFAULT_IRI_BASE, DEFAULT_LANG_TAG,
    OWL_NS, RDFS_NS, RDF_NS,
};
pub use merge::{merge, MergeError, MergeWarning, Merged};
pub use parse::{parse, ParseError, ParsedClass, ParsedFragment};

/// Inserts axiom blocks before the closing `</rdf:RDF>` of a document.
pub fn append_axioms(document: &str, fragment: &str) -> Option<String> {
    let end = document.rfind("</rdf:RDF>")?;
    let mut out = String::with_capacity(document.len() + fragment.len() + 1);
    out.push_str(&document[..end]);
    out.push_str(fragment);
    if !fragment.is_empty() {
        out.push('\n');
    }
    out.push_str(&document[end..]);
    Some(out)
}
