use std::fmt::{self, Write as _};
use std::str::FromStr;

use quick_xml::escape::escape;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AxiomKind {
    /// `property some (A and B ...)`
    SomeValuesIntersection,
    /// `property exactly 1 A`
    ExactCardinality1,
    /// `property some A`
    SomeValuesSingle,
}

impl AxiomKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AxiomKind::SomeValuesIntersection => "SOME_VALUES_INTERSECTION",
            AxiomKind::ExactCardinality1 => "EXACT_CARDINALITY_1",
            AxiomKind::SomeValuesSingle => "SOME_VALUES_SINGLE",
        }
    }
}

impl fmt::Display for AxiomKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AxiomKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "some-values-intersection" | "some-intersection" => Ok(AxiomKind::SomeValuesIntersection),
            "exact-cardinality-1" | "exactly-1" => Ok(AxiomKind::ExactCardinality1),
            "some-values-single" | "some" => Ok(AxiomKind::SomeValuesSingle),
            _ => Err(format!("unknown axiom kind {s:?}")),
        }
    }
}

/// A class restriction attached to a subject class.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RestrictionAxiom {
    pub subject: String,
    pub kind: AxiomKind,
    /// Property IRI; spaces are replaced by underscores on construction.
    pub property: String,
    pub targets: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AxiomError {
    #[error("{kind} needs {expected} target(s), got {got}")]
    TargetCount { kind: AxiomKind, expected: &'static str, got: usize },
    #[error("{0:?} is not a resolved IRI")]
    UnresolvedTarget(String),
    #[error("property name is empty")]
    EmptyProperty,
}

impl RestrictionAxiom {
    pub fn new(
        subject: impl Into<String>,
        kind: AxiomKind,
        property: &str,
        targets: Vec<String>,
    ) -> Result<Self, AxiomError> {
        let property = property.split_whitespace().collect::<Vec<_>>().join("_");
        if property.is_empty() {
            return Err(AxiomError::EmptyProperty);
        }
        let ok = match kind {
            AxiomKind::SomeValuesIntersection => targets.len() >= 2,
            _ => targets.len() == 1,
        };
        if !ok {
            let expected = if kind == AxiomKind::SomeValuesIntersection { "at least 2" } else { "exactly 1" };
            return Err(AxiomError::TargetCount { kind, expected, got: targets.len() });
        }
        Ok(RestrictionAxiom { subject: subject.into(), kind, property, targets })
    }

    fn check_resolved(&self) -> Result<(), AxiomError> {
        for iri in std::iter::once(&self.subject).chain(&self.targets) {
            if !is_absolute_iri(iri) {
                return Err(AxiomError::UnresolvedTarget(iri.clone()));
            }
        }
        Ok(())
    }
}

/// `scheme:rest` with an RFC 3986 scheme and no whitespace.
pub fn is_absolute_iri(s: &str) -> bool {
    let Some((scheme, rest)) = s.split_once(':') else { return false };
    let mut chars = scheme.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
        && !rest.is_empty()
        && !s.chars().any(char::is_whitespace)
}

/// Renders axioms as `SubClassOf` blocks. An empty list gives an empty
/// fragment.
pub fn emit_axioms(axioms: &[RestrictionAxiom]) -> Result<String, AxiomError> {
    for a in axioms {
        a.check_resolved()?;
    }
    let mut out = String::new();
    write_axioms(&mut out, axioms);
    Ok(out)
}

pub(crate) fn write_axioms(out: &mut String, axioms: &[RestrictionAxiom]) {
    for (i, a) in axioms.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str("    <SubClassOf>\n");
        let _ = writeln!(out, "        <Class IRI=\"{}\"/>", escape(a.subject.as_str()));
        let property = escape(a.property.as_str());
        match a.kind {
            AxiomKind::SomeValuesIntersection => {
                out.push_str("        <ObjectSomeValuesFrom>\n");
                let _ = writeln!(out, "            <ObjectProperty IRI=\"{property}\"/>");
                out.push_str("            <ObjectIntersectionOf>\n");
                for t in &a.targets {
                    let _ = writeln!(out, "                <Class IRI=\"{}\"/>", escape(t.as_str()));
                }
                out.push_str("            </ObjectIntersectionOf>\n");
                out.push_str("        </ObjectSomeValuesFrom>\n");
            }
            AxiomKind::ExactCardinality1 => {
                out.push_str("        <ObjectExactCardinality cardinality=\"1\">\n");
                let _ = writeln!(out, "            <ObjectProperty IRI=\"{property}\"/>");
                let _ = writeln!(out, "            <Class IRI=\"{}\"/>", escape(a.targets[0].as_str()));
                out.push_str("        </ObjectExactCardinality>\n");
            }
            AxiomKind::SomeValuesSingle => {
                out.push_str("        <ObjectSomeValuesFrom>\n");
                let _ = writeln!(out, "            <ObjectProperty IRI=\"{property}\"/>");
                let _ = writeln!(out, "            <Class IRI=\"{}\"/>", escape(a.targets[0].as_str()));
                out.push_str("        </ObjectSomeValuesFrom>\n");
            }
        }
        out.push_str("    </SubClassOf>\n");
    }
}

/// One line of an axiom spec file, before names are resolved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxiomSpecLine {
    pub line: usize,
    pub subject: String,
    pub kind: AxiomKind,
    pub property: String,
    pub targets: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct SpecError {
    pub line: usize,
    pub message: String,
}

/// Parses `subject | kind | property | target, target...` lines. Blank
/// lines and `#` comments are skipped.
pub fn parse_axiom_spec(text: &str) -> Result<Vec<AxiomSpecLine>, SpecError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let err = |message: String| SpecError { line, message };
        let fields: Vec<&str> = content.split('|').map(str::trim).collect();
        let [subject, kind, property, targets] = fields[..] else {
            return Err(err(format!("expected 4 '|'-separated fields, found {}", fields.len())));
        };
        if subject.is_empty() {
            return Err(err("subject is empty".into()));
        }
        let kind: AxiomKind = kind.parse().map_err(err)?;
        let targets: Vec<String> =
            targets.split(',').map(str::trim).filter(|t| !t.is_empty()).map(str::to_string).collect();
        RestrictionAxiom::new(subject, kind, property, targets.clone()).map_err(|e| err(e.to_string()))?;
        out.push(AxiomSpecLine { line, subject: subject.to_string(), kind, property: property.to_string(), targets });
    }
    Ok(out)
}
