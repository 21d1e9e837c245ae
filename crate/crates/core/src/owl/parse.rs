use quick_xml::events::{BytesStart, Event};
use quick_xml::name::ResolveResult;
use quick_xml::reader::NsReader;

use super::axioms::{AxiomKind, RestrictionAxiom};
use super::document::{Label, OWL_NS, RDFS_NS, RDF_NS};

const XML_NS: &str = "http://www.w3.org/XML/1998/namespace";

/// A class as it appeared in one input document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedClass {
    pub iri: String,
    pub labels: Vec<Label>,
    pub parents: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedFragment {
    pub source_name: String,
    pub classes: Vec<ParsedClass>,
    pub axioms: Vec<RestrictionAxiom>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("{source_name}:{line}:{column}: malformed XML: {message}")]
    MalformedXml { source_name: String, line: usize, column: usize, message: String },
    #[error("{source_name}:{line}:{column}: {message}")]
    UnknownDialect { source_name: String, line: usize, column: usize, message: String },
}

#[derive(Debug)]
struct Attr {
    ns: Option<String>,
    local: String,
    value: String,
}

#[derive(Debug)]
struct Elem {
    ns: Option<String>,
    local: String,
    attrs: Vec<Attr>,
    text: String,
    children: Vec<Elem>,
    pos: usize,
}

impl Elem {
    fn is(&self, ns: &str, local: &str) -> bool {
        self.ns.as_deref() == Some(ns) && self.local == local
    }

    /// Functional-syntax elements are accepted unprefixed or in the OWL
    /// namespace.
    fn is_functional(&self, local: &str) -> bool {
        self.local == local && matches!(self.ns.as_deref(), None | Some(OWL_NS))
    }

    fn attr(&self, ns: Option<&str>, local: &str) -> Option<&str> {
        self.attrs.iter().find(|a| a.ns.as_deref() == ns && a.local == local).map(|a| a.value.as_str())
    }

    fn qualified(&self) -> String {
        match self.ns.as_deref() {
            Some(RDF_NS) => format!("rdf:{}", self.local),
            Some(RDFS_NS) => format!("rdfs:{}", self.local),
            Some(OWL_NS) => format!("owl:{}", self.local),
            Some(ns) => format!("{{{ns}}}{}", self.local),
            None => self.local.clone(),
        }
    }
}

struct Ctx<'a> {
    source_name: &'a str,
    text: &'a str,
}

impl Ctx<'_> {
    fn location(&self, pos: usize) -> (usize, usize) {
        let before = &self.text[..pos.min(self.text.len())];
        let line = before.matches('\n').count() + 1;
        let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
        (line, column)
    }

    fn malformed(&self, pos: usize, message: impl Into<String>) -> ParseError {
        let (line, column) = self.location(pos);
        ParseError::MalformedXml { source_name: self.source_name.to_string(), line, column, message: message.into() }
    }

    fn unknown(&self, pos: usize, message: impl Into<String>) -> ParseError {
        let (line, column) = self.location(pos);
        ParseError::UnknownDialect { source_name: self.source_name.to_string(), line, column, message: message.into() }
    }
}

/// Parses a document in the emitter's dialect: `owl:Class` declarations
/// with `rdfs:label` and `rdfs:subClassOf`, plus `SubClassOf` restriction
/// blocks.
pub fn parse(text: &str, source_name: &str) -> Result<ParsedFragment, ParseError> {
    let ctx = Ctx { source_name, text };
    let root = read_tree(text, &ctx)?;
    let Some(root) = root else {
        return Err(ctx.malformed(text.len(), "no root element"));
    };
    if !root.is(RDF_NS, "RDF") {
        return Err(ctx.unknown(root.pos, format!("root element {} is not rdf:RDF", root.qualified())));
    }
    let mut fragment = ParsedFragment { source_name: source_name.to_string(), classes: Vec::new(), axioms: Vec::new() };
    for child in &root.children {
        if child.is(OWL_NS, "Class") {
            fragment.classes.push(read_class(child, &ctx)?);
        } else if child.is_functional("SubClassOf") {
            fragment.axioms.push(read_axiom(child, &ctx)?);
        } else {
            return Err(ctx.unknown(child.pos, format!("unsupported element {}", child.qualified())));
        }
    }
    Ok(fragment)
}

fn read_class(el: &Elem, ctx: &Ctx) -> Result<ParsedClass, ParseError> {
    let iri = el
        .attr(Some(RDF_NS), "about")
        .ok_or_else(|| ctx.unknown(el.pos, "owl:Class without rdf:about"))?
        .to_string();
    let mut class = ParsedClass { iri, labels: Vec::new(), parents: Vec::new() };
    for child in &el.children {
        if let Some(grandchild) = child.children.first() {
            return Err(ctx.unknown(grandchild.pos, format!("unexpected element {}", grandchild.qualified())));
        }
        if child.is(RDFS_NS, "label") {
            let lang = child.attr(Some(XML_NS), "lang").map(str::to_string);
            class.labels.push(Label { text: child.text.clone(), lang });
        } else if child.is(RDFS_NS, "subClassOf") {
            let parent = child
                .attr(Some(RDF_NS), "resource")
                .ok_or_else(|| ctx.unknown(child.pos, "rdfs:subClassOf without rdf:resource"))?;
            class.parents.push(parent.to_string());
        } else {
            return Err(ctx.unknown(child.pos, format!("unsupported element {} in owl:Class", child.qualified())));
        }
    }
    Ok(class)
}

fn class_iri(el: &Elem, ctx: &Ctx) -> Result<String, ParseError> {
    if !el.is_functional("Class") {
        return Err(ctx.unknown(el.pos, format!("expected Class, found {}", el.qualified())));
    }
    el.attr(None, "IRI")
        .map(str::to_string)
        .ok_or_else(|| ctx.unknown(el.pos, "Class without IRI"))
}

fn read_axiom(el: &Elem, ctx: &Ctx) -> Result<RestrictionAxiom, ParseError> {
    let [subject, restriction] = &el.children[..] else {
        return Err(ctx.unknown(el.pos, "SubClassOf needs a class and a restriction"));
    };
    let subject = class_iri(subject, ctx)?;
    let [property, filler] = &restriction.children[..] else {
        return Err(ctx.unknown(restriction.pos, "restriction needs a property and a filler"));
    };
    if !property.is_functional("ObjectProperty") {
        return Err(ctx.unknown(property.pos, format!("expected ObjectProperty, found {}", property.qualified())));
    }
    let property_iri = property.attr(None, "IRI").ok_or_else(|| ctx.unknown(property.pos, "ObjectProperty without IRI"))?;

    let (kind, targets) = if restriction.is_functional("ObjectSomeValuesFrom") {
        if filler.is_functional("ObjectIntersectionOf") {
            let targets = filler.children.iter().map(|c| class_iri(c, ctx)).collect::<Result<Vec<_>, _>>()?;
            (AxiomKind::SomeValuesIntersection, targets)
        } else {
            (AxiomKind::SomeValuesSingle, vec![class_iri(filler, ctx)?])
        }
    } else if restriction.is_functional("ObjectExactCardinality") {
        if restriction.attr(None, "cardinality") != Some("1") {
            return Err(ctx.unknown(restriction.pos, "only cardinality 1 is supported"));
        }
        (AxiomKind::ExactCardinality1, vec![class_iri(filler, ctx)?])
    } else {
        return Err(ctx.unknown(restriction.pos, format!("unsupported restriction {}", restriction.qualified())));
    };
    RestrictionAxiom::new(subject, kind, property_iri, targets).map_err(|e| ctx.unknown(el.pos, e.to_string()))
}

fn namespace(ns: ResolveResult) -> Result<Option<String>, String> {
    match ns {
        ResolveResult::Bound(n) => Ok(Some(String::from_utf8_lossy(n.as_ref()).into_owned())),
        ResolveResult::Unbound => Ok(None),
        ResolveResult::Unknown(p) => Err(format!("undeclared prefix {:?}", String::from_utf8_lossy(&p))),
    }
}

fn read_tree(text: &str, ctx: &Ctx) -> Result<Option<Elem>, ParseError> {
    let mut reader = NsReader::from_str(text);
    let mut stack: Vec<Elem> = Vec::new();
    let mut root: Option<Elem> = None;
    loop {
        let pos = reader.buffer_position() as usize;
        let (ns, event) = match reader.read_resolved_event() {
            Ok(pair) => pair,
            Err(e) => return Err(ctx.malformed(reader.error_position() as usize, e.to_string())),
        };
        let ns = namespace(ns).map_err(|m| ctx.malformed(pos, m));
        if root.is_some() && matches!(event, Event::Start(_) | Event::Empty(_)) {
            return Err(ctx.malformed(pos, "content after the root element"));
        }
        match event {
            Event::Start(e) => {
                let el = element(&reader, ns?, &e, pos, ctx)?;
                stack.push(el);
            }
            Event::Empty(e) => {
                let el = element(&reader, ns?, &e, pos, ctx)?;
                match stack.last_mut() {
                    Some(parent) => parent.children.push(el),
                    None => root = Some(el),
                }
            }
            Event::End(_) => {
                let el = stack.pop().ok_or_else(|| ctx.malformed(pos, "unbalanced end tag"))?;
                match stack.last_mut() {
                    Some(parent) => parent.children.push(el),
                    None => root = Some(el),
                }
            }
            Event::Text(t) => {
                let s = t.unescape().map_err(|e| ctx.malformed(pos, e.to_string()))?;
                match stack.last_mut() {
                    Some(el) => el.text.push_str(&s),
                    None if s.trim().is_empty() => {}
                    None => return Err(ctx.malformed(pos, "text outside the root element")),
                }
            }
            Event::CData(t) => {
                let s = String::from_utf8_lossy(&t).into_owned();
                match stack.last_mut() {
                    Some(el) => el.text.push_str(&s),
                    None => return Err(ctx.malformed(pos, "CDATA outside the root element")),
                }
            }
            Event::Comment(_) | Event::Decl(_) | Event::PI(_) => {}
            Event::DocType(_) => return Err(ctx.unknown(pos, "DOCTYPE is not supported")),
            Event::Eof => break,
        }
    }
    if let Some(open) = stack.last() {
        return Err(ctx.malformed(text.len(), format!("unclosed element {}", open.qualified())));
    }
    if let Some(root) = &root {
        check_text(root, ctx)?;
    }
    Ok(root)
}

/// Only labels carry text; everything else may hold whitespace only.
fn check_text(el: &Elem, ctx: &Ctx) -> Result<(), ParseError> {
    if !el.is(RDFS_NS, "label") && !el.text.trim().is_empty() {
        return Err(ctx.unknown(el.pos, format!("unexpected text in {}", el.qualified())));
    }
    el.children.iter().try_for_each(|c| check_text(c, ctx))
}

fn element(reader: &NsReader<&[u8]>, ns: Option<String>, e: &BytesStart, pos: usize, ctx: &Ctx) -> Result<Elem, ParseError> {
    let local = String::from_utf8_lossy(e.local_name().as_ref()).into_owned();
    let mut attrs = Vec::new();
    for a in e.attributes() {
        let a = a.map_err(|err| ctx.malformed(pos, err.to_string()))?;
        if a.key.as_namespace_binding().is_some() {
            continue;
        }
        let (ans, alocal) = reader.resolve_attribute(a.key);
        let ans = namespace(ans).map_err(|m| ctx.malformed(pos, m))?;
        let value = a.unescape_value().map_err(|err| ctx.malformed(pos, err.to_string()))?.into_owned();
        attrs.push(Attr { ns: ans, local: String::from_utf8_lossy(alocal.as_ref()).into_owned(), value });
    }
    Ok(Elem { ns, local, attrs, text: String::new(), children: Vec::new(), pos })
}
