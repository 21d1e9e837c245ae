use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::gbif::{ClientError, GbifClient, MatchType, TaxonMatch};
use crate::names::{hybrid_candidates, normalize, NormalizedName, RawNameEntry};
use crate::rank::Rank;

use super::graph::TaxonomyGraph;
use super::report::{ConversionReport, Outcome, ReportRow};
use super::resolve::{resolve_accepted, MatchPolicy, ResolvedTaxon};

/// What happened to a single name before graph accumulation.
#[derive(Debug, Clone)]
pub struct NameResolution {
    pub entry: RawNameEntry,
    pub normalized: Option<NormalizedName>,
    /// The query text that produced the match, if any did.
    pub queried: Option<String>,
    pub matched: Option<TaxonMatch>,
    pub result: Result<ResolvedTaxon, String>,
    /// Every query form came back without a match.
    pub no_match: bool,
    pub notes: Vec<String>,
}

/// Normalizes, matches and resolves one name.
///
/// Hybrid names are tried in their marker-attached form first and bare
/// second. A trinomial that finds no species-level match is retried as its
/// binomial when the policy allows.
pub fn resolve_name(entry: &RawNameEntry, client: &GbifClient, policy: &MatchPolicy) -> NameResolution {
    let mut out = NameResolution {
        entry: entry.clone(),
        normalized: None,
        queried: None,
        matched: None,
        result: Err(String::new()),
        no_match: false,
        notes: Vec::new(),
    };
    let normalized = if policy.normalize {
        match normalize(entry) {
            Ok(n) => n,
            Err(e) => {
                out.result = Err(e.to_string());
                return out;
            }
        }
    } else {
        let n = NormalizedName::verbatim(&entry.raw_text, entry.rank_hint);
        if n.canonical_text.is_empty() {
            out.result = Err("name is empty".into());
            return out;
        }
        n
    };
    for r in &normalized.repairs {
        out.notes.push(r.as_str().to_string());
    }

    let candidates = hybrid_candidates(&normalized);
    let words: Vec<&str> = normalized.canonical_text.split_whitespace().collect();
    let trinomial = words.len() == 3 && normalized.rank_hint.is_none_or(|r| r == Rank::Subspecies);
    let binomial = words[..words.len().min(2)].join(" ");
    out.normalized = Some(normalized);

    let mut tried = Vec::new();
    let mut found: Option<(String, TaxonMatch)> = None;
    for query in &candidates {
        tried.push(query.as_str());
        match client.match_name(query) {
            Ok(m) => {
                if query != &candidates[0] {
                    out.notes.push(format!("matched as {query}"));
                }
                found = Some((query.clone(), m));
                break;
            }
            Err(ClientError::NoMatch { .. }) => {}
            Err(e) => {
                out.result = Err(e.to_string());
                return out;
            }
        }
    }
    let unmatched = found.as_ref().is_none_or(|(_, m)| m.match_type == MatchType::HigherRank);
    if trinomial && policy.subspecies_fallback && unmatched {
        tried.push(binomial.as_str());
        match client.match_name(&binomial) {
            Ok(m) => {
                out.notes.push(format!("retried as {binomial}"));
                found = Some((binomial.clone(), m));
            }
            Err(ClientError::NoMatch { .. }) => {}
            Err(e) => {
                out.result = Err(e.to_string());
                return out;
            }
        }
    }

    let Some((query, m)) = found else {
        out.no_match = true;
        out.result = Err(format!("no match (tried {})", tried.join(", ")));
        return out;
    };
    out.queried = Some(query);
    out.result = resolve_accepted(&m, client, policy)
        .map(|mut r| {
            r.input_name = entry.raw_text.clone();
            r
        })
        .map_err(|e| e.to_string());
    out.matched = Some(m);
    if let Ok(r) = &out.result {
        if !r.gaps.is_empty() {
            let gaps: Vec<&str> = r.gaps.iter().map(|g| g.as_api_str()).collect();
            out.notes.push(format!("missing ranks {}", gaps.join("/")));
        }
        if r.is_doubtful() {
            out.notes.push("DOUBTFUL".into());
        }
    }
    out
}

/// Resolves names using up to `client.parallelism()` workers. Results come
/// back in input order.
pub fn resolve_all(names: &[RawNameEntry], client: &GbifClient, policy: &MatchPolicy) -> Vec<NameResolution> {
    let workers = client.parallelism().min(names.len()).max(1);
    if workers == 1 {
        return names.iter().map(|n| resolve_name(n, client, policy)).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<NameResolution>>> = Mutex::new(vec![None; names.len()]);
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(entry) = names.get(i) else { break };
                let r = resolve_name(entry, client, policy);
                slots.lock().expect("no worker panics while holding the lock")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("workers finished")
        .into_iter()
        .map(|r| r.expect("every slot filled"))
        .collect()
}

/// Resolves every name and folds the accepted lineages into one graph.
///
/// A name that cannot be resolved, or whose lineage conflicts with what is
/// already in the graph, is reported as FAILED and contributes nothing.
pub fn build(names: &[RawNameEntry], client: &GbifClient, policy: &MatchPolicy) -> (TaxonomyGraph, ConversionReport) {
    let mut graph = TaxonomyGraph::new();
    let mut report = ConversionReport::default();
    for res in resolve_all(names, client, policy) {
        let row = accumulate_one(&mut graph, &res);
        report.rows.push(row);
    }
    (graph, report)
}

fn accumulate_one(graph: &mut TaxonomyGraph, res: &NameResolution) -> ReportRow {
    let normalized = res.normalized.as_ref().map(|n| n.canonical_text.clone());
    let mut notes = res.notes.clone();
    let mut row = match &res.result {
        Ok(taxon) => match graph.accumulate(taxon) {
            Ok(()) => ReportRow {
                input: res.entry.raw_text.clone(),
                normalized,
                outcome: Outcome::from(taxon.resolution),
                status: None,
                match_type: None,
                confidence: None,
                accepted_name: Some(taxon.accepted_name.clone()),
                accepted_key: Some(taxon.accepted_key),
                detail: String::new(),
            },
            Err(e) => {
                notes.push(e.to_string());
                ReportRow::failed(&res.entry.raw_text, normalized, "")
            }
        },
        Err(reason) => {
            notes.push(reason.clone());
            ReportRow::failed(&res.entry.raw_text, normalized, "")
        }
    };
    if res.no_match {
        row.match_type = Some(MatchType::None);
    }
    if let Some(m) = &res.matched {
        row.status = Some(m.status.clone());
        row.match_type = Some(m.match_type.clone());
        row.confidence = Some(m.confidence);
        if let (Outcome::SynonymReplaced | Outcome::FuzzyMatched, Ok(t)) = (row.outcome, &res.result) {
            if let Some(old) = &t.replaced_name {
                notes.push(format!("synonym {old}"));
            }
        }
    }
    row.detail = notes.join("; ");
    row
}
