use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{normalize_name, GraphStore, NodeId, NodeType};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkedEntity {
    pub id: NodeId,
    pub name: String,
    #[serde(rename = "type")]
    pub node_type: NodeType,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkingResult {
    /// Normalized query followed by its synonym expansions.
    pub terms: Vec<String>,
    pub exact_matches: Vec<LinkedEntity>,
    pub contains_matches: Vec<LinkedEntity>,
}

impl LinkingResult {
    pub fn ids(&self) -> Vec<NodeId> {
        self.exact_matches
            .iter()
            .chain(&self.contains_matches)
            .map(|e| e.id)
            .collect()
    }
}

/// Maps free text to graph nodes.
///
/// The query is lowercased and whitespace-collapsed, then expanded through
/// the synonym table (the phrase and each of its tokens are looked up). Nodes
/// whose name equals an expanded term are exact matches. Only when there are
/// none, nodes whose name contains a term become contains matches. Both lists
/// are restricted to `types` when it is non-empty and sorted by (type, name).
pub fn entity_linking(query: &str, store: &GraphStore, types: &[NodeType]) -> LinkingResult {
    let phrase = normalize_name(query);
    if phrase.is_empty() {
        return LinkingResult::default();
    }
    let mut terms = vec![phrase.clone()];
    let mut push = |t: &str| {
        if !terms.iter().any(|x| x == t) {
            terms.push(t.to_string());
        }
    };
    for s in store.synonyms_of(&phrase) {
        push(s);
    }
    let tokens: Vec<&str> = phrase.split(' ').collect();
    if tokens.len() > 1 {
        for tok in tokens {
            for s in store.synonyms_of(tok) {
                push(s);
            }
        }
    }

    let allowed =
        |id: NodeId| types.is_empty() || types.contains(&store.nodes()[id as usize].node_type);
    let mut exact = BTreeSet::new();
    for t in &terms {
        exact.extend(
            store
                .lookup_name(t)
                .iter()
                .copied()
                .filter(|&id| allowed(id)),
        );
    }
    let mut contains = BTreeSet::new();
    if exact.is_empty() {
        for (name, ids) in store.name_index() {
            if terms.iter().any(|t| name.contains(t.as_str())) {
                contains.extend(ids.iter().copied().filter(|&id| allowed(id)));
            }
        }
    }
    let entities = |set: BTreeSet<NodeId>| {
        let mut v: Vec<LinkedEntity> = set
            .into_iter()
            .map(|id| {
                let n = &store.nodes()[id as usize];
                LinkedEntity {
                    id,
                    name: n.name.clone(),
                    node_type: n.node_type,
                }
            })
            .collect();
        v.sort_by(|a, b| {
            (a.node_type, normalize_name(&a.name), a.id).cmp(&(
                b.node_type,
                normalize_name(&b.name),
                b.id,
            ))
        });
        v
    };
    LinkingResult {
        terms,
        exact_matches: entities(exact),
        contains_matches: entities(contains),
    }
}
