use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{normalize_name, EvidencePath, GraphStore, NodeId, NodeType, Relation};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticWeights {
    /// Per distinct evidence path.
    pub alpha: f64,
    /// Novelty numerator, divided by `1 + drug degree`.
    pub beta: f64,
    /// Bonus for an available structure.
    pub gamma: f64,
}

impl Default for CriticWeights {
    fn default() -> Self {
        CriticWeights {
            alpha: 1.0,
            beta: 2.0,
            gamma: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetCandidate {
    pub id: NodeId,
    pub name: String,
    pub evidence: Vec<EvidencePath>,
    pub drug_degree: usize,
    /// `alpha * distinct paths`
    pub relevance: f64,
    /// `beta / (1 + drug_degree)`
    pub novelty: f64,
    pub score: f64,
    pub pdb: Option<String>,
}

impl TargetCandidate {
    /// Kept in the ranking but unusable where a structure is required.
    pub fn lacks_structure(&self) -> bool {
        self.pdb.is_none()
    }
}

/// Groups paths by their end node.
pub fn group_by_end(paths: &[EvidencePath]) -> Vec<(NodeId, Vec<EvidencePath>)> {
    let mut by_end: BTreeMap<NodeId, Vec<EvidencePath>> = BTreeMap::new();
    for p in paths {
        by_end.entry(p.end()).or_default().push(p.clone());
    }
    by_end.into_iter().collect()
}

/// Scores and ranks candidates, best first; ties broken by name.
///
/// `score = alpha * distinct paths + beta / (1 + drug degree) + gamma * [pdb]`
/// where the drug degree counts `DRUG_PROTEIN` edges to Drug nodes.
/// Candidates without evidence are dropped.
pub fn critic_rank(
    candidates: &[(NodeId, Vec<EvidencePath>)],
    store: &GraphStore,
    weights: CriticWeights,
) -> Vec<TargetCandidate> {
    let mut out: Vec<TargetCandidate> = candidates
        .iter()
        .filter(|(id, ev)| !ev.is_empty() && store.node(*id).is_some())
        .map(|(id, ev)| {
            let node = store.node(*id).expect("checked above");
            let mut evidence = ev.clone();
            evidence.sort_by(|a, b| {
                (&a.nodes, &a.relations, &a.forward).cmp(&(&b.nodes, &b.relations, &b.forward))
            });
            evidence.dedup();
            super::paths::sort_paths(store, &mut evidence);
            let drug_degree = store.relation_degree(*id, Relation::DrugProtein, NodeType::Drug);
            let relevance = weights.alpha * evidence.len() as f64;
            let novelty = weights.beta / (1.0 + drug_degree as f64);
            let pdb = node.pdb().map(str::to_string);
            let score = relevance + novelty + if pdb.is_some() { weights.gamma } else { 0.0 };
            TargetCandidate {
                id: *id,
                name: node.name.clone(),
                evidence,
                drug_degree,
                relevance,
                novelty,
                score,
                pdb,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| normalize_name(&a.name).cmp(&normalize_name(&b.name)))
            .then_with(|| a.id.cmp(&b.id))
    });
    out
}
