use std::collections::BTreeSet;
use std::fmt::Write as _;

use quick_xml::escape::escape;

use crate::taxonomy::TaxonomyGraph;

use super::axioms::{write_axioms, RestrictionAxiom};

pub const RDF_NS: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
pub const RDFS_NS: &str = "http://www.w3.org/2000/01/rdf-schema#";
pub const OWL_NS: &str = "http://www.w3.org/2002/07/owl#";

pub const DEFAULT_IRI_BASE: &str = "https://www.gbif.org/species/";
pub const DEFAULT_LANG_TAG: &str = "lat";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmitConfig {
    pub iri_base: String,
    pub lang_tag: String,
    /// Write a `<!-- Rank Name -->` banner above every class.
    pub comments: bool,
}

impl Default for EmitConfig {
    fn default() -> Self {
        EmitConfig { iri_base: DEFAULT_IRI_BASE.to_string(), lang_tag: DEFAULT_LANG_TAG.to_string(), comments: false }
    }
}

impl EmitConfig {
    pub fn iri(&self, key: u64) -> String {
        format!("{}{key}", self.iri_base)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label {
    pub text: String,
    pub lang: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OwlClass {
    pub iri: String,
    /// Empty only for placeholder classes created by a merge.
    pub labels: Vec<Label>,
    pub parents: Vec<String>,
    pub banner: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitWarning {
    EmptyGraph,
}

/// An ordered OWL document ready for serialization.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OwlDocument {
    pub classes: Vec<OwlClass>,
    pub axioms: Vec<RestrictionAxiom>,
}

impl OwlDocument {
    /// Classes ordered by rank, then key.
    pub fn from_graph(graph: &TaxonomyGraph, config: &EmitConfig) -> Self {
        let mut nodes: Vec<_> = graph.nodes().collect();
        nodes.sort_by_key(|n| (n.rank, n.key));
        let classes = nodes
            .into_iter()
            .map(|n| {
                let mut banner = format!("{} {}", n.rank.title(), n.label);
                if let Some(old) = graph.replaced_names().get(&n.key) {
                    let old: Vec<&str> = old.iter().map(String::as_str).collect();
                    let _ = write!(banner, " (for {})", old.join(", "));
                }
                OwlClass {
                    iri: config.iri(n.key),
                    labels: vec![Label { text: n.label.clone(), lang: Some(config.lang_tag.clone()) }],
                    parents: n.parent.map(|p| config.iri(p)).into_iter().collect(),
                    banner: config.comments.then_some(banner),
                }
            })
            .collect();
        OwlDocument { classes, axioms: Vec::new() }
    }

    /// IRIs of every declared class.
    pub fn class_iris(&self) -> BTreeSet<&str> {
        self.classes.iter().map(|c| c.iri.as_str()).collect()
    }

    /// (child, parent) IRI pairs.
    pub fn edges(&self) -> BTreeSet<(&str, &str)> {
        self.classes
            .iter()
            .flat_map(|c| c.parents.iter().map(move |p| (c.iri.as_str(), p.as_str())))
            .collect()
    }

    pub fn to_xml(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("<rdf:RDF xmlns:rdf=\"{RDF_NS}\"\n"));
        out.push_str(&format!("         xmlns:rdfs=\"{RDFS_NS}\"\n"));
        out.push_str(&format!("         xmlns:owl=\"{OWL_NS}\">\n\n"));
        for class in &self.classes {
            write_class(&mut out, class);
            out.push('\n');
        }
        if !self.axioms.is_empty() {
            write_axioms(&mut out, &self.axioms);
            out.push('\n');
        }
        out.push_str("</rdf:RDF>\n");
        out
    }
}

fn write_class(out: &mut String, class: &OwlClass) {
    if let Some(banner) = &class.banner {
        // `--` may not appear inside a comment
        let _ = writeln!(out, "    <!-- {} -->", banner.replace("--", "- -"));
    }
    let about = escape(class.iri.as_str());
    if class.labels.is_empty() && class.parents.is_empty() {
        let _ = writeln!(out, "    <owl:Class rdf:about=\"{about}\"/>");
        return;
    }
    let _ = writeln!(out, "    <owl:Class rdf:about=\"{about}\">");
    for label in &class.labels {
        let text = escape(label.text.as_str());
        match &label.lang {
            Some(lang) => {
                let _ = writeln!(out, "        <rdfs:label xml:lang=\"{}\">{text}</rdfs:label>", escape(lang.as_str()));
            }
            None => {
                let _ = writeln!(out, "        <rdfs:label>{text}</rdfs:label>");
            }
        }
    }
    for parent in &class.parents {
        let _ = writeln!(out, "        <rdfs:subClassOf rdf:resource=\"{}\"/>", escape(parent.as_str()));
    }
    out.push_str("    </owl:Class>\n");
}

/// The result of serializing a graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Emitted {
    pub xml: String,
    pub warnings: Vec<EmitWarning>,
}

/// Serializes a graph. Identical graphs give byte-identical output no
/// matter how they were built.
pub fn emit(graph: &TaxonomyGraph, config: &EmitConfig) -> Emitted {
    let warnings = if graph.is_empty() { vec![EmitWarning::EmptyGraph] } else { Vec::new() };
    Emitted { xml: OwlDocument::from_graph(graph, config).to_xml(), warnings }
}
