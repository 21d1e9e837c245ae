use std::collections::{BTreeMap, BTreeSet};

use crate::rank::Rank;

use super::resolve::{ChainLink, ResolvedTaxon};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TaxonNode {
    pub key: u64,
    pub label: String,
    pub rank: Rank,
    pub parent: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("key {key} is already labelled {existing:?}, refusing to relabel it {incoming:?}")]
    LabelConflict { key: u64, existing: String, incoming: String },
    #[error("key {key} is already a {existing}, refusing to add it as a {incoming}")]
    RankConflict { key: u64, existing: Rank, incoming: Rank },
    #[error("key {key} has two distinct {rank} parents: {first} and {second}")]
    ParentConflict { key: u64, rank: Rank, first: u64, second: u64 },
    #[error("chain is not strictly descending at {0}")]
    UnorderedChain(Rank),
    #[error("chain is empty")]
    EmptyChain,
}

/// Deduplicated taxonomy, one node per usage key.
///
/// Every parent has a strictly higher rank than its child, so the graph is
/// acyclic by construction. When lineages disagree only because one of them
/// skips a rank, the nearest (lowest-ranked) parent wins. Two different
/// parents at the same rank are a conflict even when a nearer parent has
/// since taken over, so the outcome of a chain does not depend on what was
/// accumulated after it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TaxonomyGraph {
    nodes: BTreeMap<u64, TaxonNode>,
    /// Synonyms that were resolved into each accepted key.
    replaced: BTreeMap<u64, BTreeSet<String>>,
    /// Every parent any lineage has given a key, by the parent's rank.
    claims: BTreeMap<u64, BTreeMap<Rank, u64>>,
}

impl TaxonomyGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds every link of a resolved lineage. On error the graph is left
    /// unchanged.
    pub fn accumulate(&mut self, taxon: &ResolvedTaxon) -> Result<(), GraphError> {
        self.accumulate_chain(&taxon.chain)?;
        if let Some(old) = &taxon.replaced_name {
            self.replaced.entry(taxon.accepted_key).or_default().insert(old.clone());
        }
        Ok(())
    }

    /// Adds a lineage (kingdom first). Re-adding identical links is a no-op.
    pub fn accumulate_chain(&mut self, chain: &[ChainLink]) -> Result<(), GraphError> {
        if chain.is_empty() {
            return Err(GraphError::EmptyChain);
        }
        for pair in chain.windows(2) {
            if pair[0].rank >= pair[1].rank {
                return Err(GraphError::UnorderedChain(pair[1].rank));
            }
        }

        // validate everything before touching the graph
        let mut planned: Vec<(TaxonNode, Option<&ChainLink>)> = Vec::with_capacity(chain.len());
        for (i, link) in chain.iter().enumerate() {
            let incoming_parent = i.checked_sub(1).map(|p| &chain[p]);
            if let Some(existing) = self.nodes.get(&link.key) {
                if existing.label != link.name {
                    return Err(GraphError::LabelConflict {
                        key: link.key,
                        existing: existing.label.clone(),
                        incoming: link.name.clone(),
                    });
                }
                if existing.rank != link.rank {
                    return Err(GraphError::RankConflict { key: link.key, existing: existing.rank, incoming: link.rank });
                }
            }
            let claims = self.claims.get(&link.key);
            if let Some(p) = incoming_parent {
                if let Some(&other) = claims.and_then(|c| c.get(&p.rank)).filter(|&&k| k != p.key) {
                    return Err(GraphError::ParentConflict {
                        key: link.key,
                        rank: p.rank,
                        first: other.min(p.key),
                        second: other.max(p.key),
                    });
                }
            }
            // nearest claimed parent, counting this chain's claim
            let nearest = claims.and_then(|c| c.last_key_value()).map(|(&r, &k)| (r, k));
            let parent = match (nearest, incoming_parent) {
                (Some((r, k)), Some(p)) => Some(if r > p.rank { k } else { p.key }),
                (Some((_, k)), None) => Some(k),
                (None, p) => p.map(|p| p.key),
            };
            planned.push((TaxonNode { key: link.key, label: link.name.clone(), rank: link.rank, parent }, incoming_parent));
        }
        for (node, parent) in planned {
            if let Some(p) = parent {
                self.claims.entry(node.key).or_default().insert(p.rank, p.key);
            }
            self.nodes.insert(node.key, node);
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn get(&self, key: u64) -> Option<&TaxonNode> {
        self.nodes.get(&key)
    }

    pub fn contains(&self, key: u64) -> bool {
        self.nodes.contains_key(&key)
    }

    /// Nodes in key order.
    pub fn nodes(&self) -> impl Iterator<Item = &TaxonNode> {
        self.nodes.values()
    }

    pub fn roots(&self) -> BTreeSet<u64> {
        self.nodes.values().filter(|n| n.parent.is_none()).map(|n| n.key).collect()
    }

    pub fn children(&self, key: u64) -> impl Iterator<Item = &TaxonNode> {
        self.nodes.values().filter(move |n| n.parent == Some(key))
    }

    /// Leaves: nodes without children.
    pub fn leaves(&self) -> BTreeSet<u64> {
        let parents: BTreeSet<u64> = self.nodes.values().filter_map(|n| n.parent).collect();
        self.nodes.keys().copied().filter(|k| !parents.contains(k)).collect()
    }

    /// (child, parent) pairs.
    pub fn edges(&self) -> BTreeSet<(u64, u64)> {
        self.nodes.values().filter_map(|n| n.parent.map(|p| (n.key, p))).collect()
    }

    /// Ancestors of `key`, nearest first.
    pub fn ancestors(&self, key: u64) -> Vec<&TaxonNode> {
        let mut out = Vec::new();
        let mut cur = self.nodes.get(&key).and_then(|n| n.parent);
        while let Some(k) = cur {
            match self.nodes.get(&k) {
                Some(n) => {
                    out.push(n);
                    cur = n.parent;
                }
                None => break,
            }
        }
        out
    }

    /// Synonym names resolved into each accepted key.
    pub fn replaced_names(&self) -> &BTreeMap<u64, BTreeSet<String>> {
        &self.replaced
    }

    /// Checks the structural invariants: parents exist and have a strictly
    /// higher rank.
    pub fn validate(&self) -> Result<(), String> {
        for node in self.nodes.values() {
            if let Some(p) = node.parent {
                let parent = self.nodes.get(&p).ok_or_else(|| format!("{} has missing parent {p}", node.key))?;
                if parent.rank >= node.rank {
                    return Err(format!("{} ({}) has parent {p} of rank {}", node.key, node.rank, parent.rank));
                }
            }
        }
        Ok(())
    }
}
