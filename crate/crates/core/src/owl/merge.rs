use std::collections::{BTreeMap, BTreeSet};

use super::axioms::RestrictionAxiom;
use super::document::{Label, OwlClass, OwlDocument};
use super::parse::ParsedFragment;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MergeError {
    #[error(
        "{iri} has conflicting {lang} labels: {first_text:?} in {first_source}, {second_text:?} in {second_source}",
        lang = lang.as_deref().unwrap_or("untagged")
    )]
    LabelConflict {
        iri: String,
        lang: Option<String>,
        first_text: String,
        first_source: String,
        second_text: String,
        second_source: String,
    },
    #[error("subclass edges form a cycle: {}", cycle.join(" -> "))]
    ParentCycle { cycle: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MergeWarning {
    /// A parent IRI that no input declared; a label-less class was added.
    UndeclaredParent { iri: String, referenced_by: String },
}

impl std::fmt::Display for MergeWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MergeWarning::UndeclaredParent { iri, referenced_by } => {
                write!(f, "{iri} is referenced by {referenced_by} but never declared; added without a label")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Merged {
    pub document: OwlDocument,
    pub warnings: Vec<MergeWarning>,
}

#[derive(Default)]
struct Acc {
    /// lang -> (text, first source)
    labels: BTreeMap<Option<String>, (String, String)>,
    parents: BTreeSet<String>,
}

/// Unions the classes, labels, edges and axioms of every fragment.
///
/// The result does not depend on fragment order or repetition. Classes are
/// ordered by the numeric key at the end of their IRI, then by IRI.
pub fn merge(fragments: &[ParsedFragment]) -> Result<Merged, MergeError> {
    let mut classes: BTreeMap<String, Acc> = BTreeMap::new();
    let mut axioms: BTreeSet<RestrictionAxiom> = BTreeSet::new();

    // sources in name order, so conflict messages do not depend on input order
    let mut ordered: Vec<&ParsedFragment> = fragments.iter().collect();
    ordered.sort_by(|a, b| a.source_name.cmp(&b.source_name));

    for fragment in ordered {
        for class in &fragment.classes {
            let acc = classes.entry(class.iri.clone()).or_default();
            for label in &class.labels {
                match acc.labels.get(&label.lang) {
                    Some((text, source)) if *text != label.text => {
                        return Err(MergeError::LabelConflict {
                            iri: class.iri.clone(),
                            lang: label.lang.clone(),
                            first_text: text.clone(),
                            first_source: source.clone(),
                            second_text: label.text.clone(),
                            second_source: fragment.source_name.clone(),
                        });
                    }
                    Some(_) => {}
                    None => {
                        acc.labels.insert(label.lang.clone(), (label.text.clone(), fragment.source_name.clone()));
                    }
                }
            }
            acc.parents.extend(class.parents.iter().cloned());
        }
        axioms.extend(fragment.axioms.iter().cloned());
    }

    let mut warnings = Vec::new();
    let mut placeholders = BTreeMap::new();
    for (iri, acc) in &classes {
        for parent in &acc.parents {
            if !classes.contains_key(parent) && !placeholders.contains_key(parent) {
                warnings.push(MergeWarning::UndeclaredParent { iri: parent.clone(), referenced_by: iri.clone() });
                placeholders.insert(parent.clone(), Acc::default());
            }
        }
    }
    classes.extend(placeholders);

    if let Some(cycle) = find_cycle(&classes) {
        return Err(MergeError::ParentCycle { cycle });
    }

    let mut out: Vec<OwlClass> = classes
        .into_iter()
        .map(|(iri, acc)| OwlClass {
            iri,
            labels: acc.labels.into_iter().map(|(lang, (text, _))| Label { text, lang }).collect(),
            parents: acc.parents.into_iter().collect(),
            banner: None,
        })
        .collect();
    out.sort_by(|a, b| iri_order(&a.iri).cmp(&iri_order(&b.iri)));
    Ok(Merged { document: OwlDocument { classes: out, axioms: axioms.into_iter().collect() }, warnings })
}

/// Numeric trailing key first (IRIs with one sort before those without),
/// then the IRI itself.
fn iri_order(iri: &str) -> (u8, u64, &str) {
    let digits = iri.len() - iri.trim_end_matches(|c: char| c.is_ascii_digit()).len();
    match iri[iri.len() - digits..].parse::<u64>() {
        Ok(k) if digits > 0 => (0, k, iri),
        _ => (1, 0, iri),
    }
}

fn find_cycle(classes: &BTreeMap<String, Acc>) -> Option<Vec<String>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    let mut marks: BTreeMap<&str, Mark> = BTreeMap::new();
    for start in classes.keys() {
        if marks.contains_key(start.as_str()) {
            continue;
        }
        // iterative DFS; each frame is a node and the parents still to visit
        let mut path: Vec<&str> = vec![start];
        let mut stack: Vec<std::collections::btree_set::Iter<String>> = vec![classes[start].parents.iter()];
        marks.insert(start, Mark::Active);
        while let Some(iter) = stack.last_mut() {
            match iter.next() {
                Some(p) => match marks.get(p.as_str()) {
                    Some(Mark::Active) => {
                        let from = path.iter().position(|n| *n == p).unwrap_or(0);
                        let mut cycle: Vec<String> = path[from..].iter().map(|s| s.to_string()).collect();
                        cycle.push(p.clone());
                        return Some(cycle);
                    }
                    Some(Mark::Done) => {}
                    None => {
                        marks.insert(p, Mark::Active);
                        path.push(p);
                        stack.push(classes.get(p).map(|a| a.parents.iter()).unwrap_or_default());
                    }
                },
                None => {
                    stack.pop();
                    if let Some(done) = path.pop() {
                        marks.insert(done, Mark::Done);
                    }
                }
            }
        }
    }
    None
}
