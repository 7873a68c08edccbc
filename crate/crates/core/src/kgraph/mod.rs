//! Typed biomedical property graph: ingest, entity linking, bounded path
//! search with a relaxed fallback, relation-absence filtering and a
//! deterministic candidate critic.

mod critic;
mod linking;
mod paths;
mod pattern;
mod vocab;

pub use critic::{critic_rank, group_by_end, CriticWeights, TargetCandidate};
pub use linking::{entity_linking, LinkedEntity, LinkingResult};
pub use paths::{find_related_paths, EvidencePath, HopConstraint, PathSearch, MAX_HOPS};
pub use pattern::{parse_pattern, Direction, NodeSpec, PathPattern};
pub use vocab::{NodeType, Relation};

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type NodeId = u32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KgError {
    #[error("line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("line {line}: unknown node type '{name}'")]
    UnknownNodeType { line: usize, name: String },
    #[error("line {line}: unknown relation '{name}'")]
    UnknownRelation { line: usize, name: String },
    #[error("unknown start node {0}")]
    UnknownStartNode(NodeId),
    #[error("hop count {0} outside 1..=3")]
    InvalidHops(usize),
    #[error("pattern position {pos}: {reason}")]
    Pattern { pos: usize, reason: String },
    #[error("{path}: {reason}")]
    Io { path: String, reason: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub node_type: NodeType,
    pub name: String,
    pub attributes: BTreeMap<String, String>,
}

impl Node {
    pub fn pdb(&self) -> Option<&str> {
        self.attributes.get("pdb").map(String::as_str)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub source: NodeId,
    pub relation: Relation,
    pub target: NodeId,
}

/// In-memory graph. Immutable once built; every query takes `&self`.
#[derive(Clone, Debug, Default)]
pub struct GraphStore {
    nodes: Vec<Node>,
    by_key: BTreeMap<(NodeType, String), NodeId>,
    name_index: BTreeMap<String, Vec<NodeId>>,
    edges: BTreeMap<Edge, u32>,
    out_adj: Vec<Vec<(Relation, NodeId)>>,
    in_adj: Vec<Vec<(Relation, NodeId)>>,
    synonyms: BTreeMap<String, BTreeSet<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationSummary {
    pub relation: Relation,
    /// Number of ingested rows, duplicates included.
    pub count: u64,
    pub signatures: Vec<(NodeType, NodeType)>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSchema {
    pub node_types: Vec<(NodeType, u64)>,
    pub relations: Vec<RelationSummary>,
}

pub(crate) fn normalize_name(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

fn tsv_fields(line: &str) -> Vec<&str> {
    line.split('\t').map(str::trim).collect()
}

fn skip_line(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#')
}

fn read(path: &Path) -> Result<String, KgError> {
    std::fs::read_to_string(path).map_err(|e| KgError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

impl GraphStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses the five-column edge TSV
    /// `source_type  source_name  relation  target_type  target_name`.
    pub fn ingest_edges(edges: &str, synonyms: Option<&str>) -> Result<GraphStore, KgError> {
        let mut g = GraphStore::new();
        for (i, line) in edges.lines().enumerate() {
            if skip_line(line) {
                continue;
            }
            let line_no = i + 1;
            let f = tsv_fields(line);
            if f.len() != 5 || f.iter().any(|c| c.is_empty()) {
                return Err(KgError::MalformedRow {
                    line: line_no,
                    reason: format!(
                        "expected 5 non-empty tab-separated fields, found {}",
                        f.len()
                    ),
                });
            }
            let ty = |name: &str| {
                NodeType::parse(name).ok_or_else(|| KgError::UnknownNodeType {
                    line: line_no,
                    name: name.to_string(),
                })
            };
            let (st, tt) = (ty(f[0])?, ty(f[3])?);
            let relation = Relation::parse(f[2]).ok_or_else(|| KgError::UnknownRelation {
                line: line_no,
                name: f[2].to_string(),
            })?;
            let s = g.intern(st, f[1]);
            let t = g.intern(tt, f[4]);
            g.add_edge(s, relation, t);
        }
        if let Some(text) = synonyms {
            g.load_synonyms(text)?;
        }
        Ok(g)
    }

    /// Reads the edge file and optional synonym and PDB map files.
    pub fn ingest_files(
        edges: &Path,
        synonyms: Option<&Path>,
        pdb_map: Option<&Path>,
    ) -> Result<GraphStore, KgError> {
        let syn = synonyms.map(read).transpose()?;
        let mut g = GraphStore::ingest_edges(&read(edges)?, syn.as_deref())?;
        if let Some(p) = pdb_map {
            g.load_pdb_map(&read(p)?)?;
        }
        Ok(g)
    }

    /// `alias<TAB>canonical`; an alias may map to several canonical names.
    pub fn load_synonyms(&mut self, text: &str) -> Result<(), KgError> {
        for (i, line) in text.lines().enumerate() {
            if skip_line(line) {
                continue;
            }
            let f = tsv_fields(line);
            if f.len() != 2 || f[0].is_empty() || f[1].is_empty() {
                return Err(KgError::MalformedRow {
                    line: i + 1,
                    reason: "expected alias<TAB>canonical".into(),
                });
            }
            self.synonyms
                .entry(normalize_name(f[0]))
                .or_default()
                .insert(normalize_name(f[1]));
        }
        Ok(())
    }

    /// `gene<TAB>pdb_id`. Sets the `pdb` attribute on every Gene_protein node
    /// with that name; genes absent from the graph are ignored.
    pub fn load_pdb_map(&mut self, text: &str) -> Result<(), KgError> {
        for (i, line) in text.lines().enumerate() {
            if skip_line(line) {
                continue;
            }
            let f = tsv_fields(line);
            if f.len() != 2 || f[0].is_empty() || f[1].is_empty() {
                return Err(KgError::MalformedRow {
                    line: i + 1,
                    reason: "expected gene<TAB>pdb_id".into(),
                });
            }
            if let Some(id) = self.node_id(NodeType::GeneProtein, f[0]) {
                self.nodes[id as usize]
                    .attributes
                    .insert("pdb".into(), f[1].to_string());
            }
        }
        Ok(())
    }

    fn intern(&mut self, node_type: NodeType, name: &str) -> NodeId {
        let key = (node_type, normalize_name(name));
        if let Some(&id) = self.by_key.get(&key) {
            return id;
        }
        let id = self.nodes.len() as NodeId;
        self.nodes.push(Node {
            id,
            node_type,
            name: name.split_whitespace().collect::<Vec<_>>().join(" "),
            attributes: BTreeMap::new(),
        });
        self.name_index.entry(key.1.clone()).or_default().push(id);
        self.by_key.insert(key, id);
        self.out_adj.push(Vec::new());
        self.in_adj.push(Vec::new());
        id
    }

    fn add_edge(&mut self, source: NodeId, relation: Relation, target: NodeId) {
        let count = self
            .edges
            .entry(Edge {
                source,
                relation,
                target,
            })
            .or_insert(0);
        *count += 1;
        if *count == 1 {
            let out = &mut self.out_adj[source as usize];
            let pos = out.partition_point(|&e| e < (relation, target));
            out.insert(pos, (relation, target));
            let inc = &mut self.in_adj[target as usize];
            let pos = inc.partition_point(|&e| e < (relation, source));
            inc.insert(pos, (relation, source));
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Distinct edges (duplicates collapsed).
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(id as usize)
    }

    pub fn node_id(&self, node_type: NodeType, name: &str) -> Option<NodeId> {
        self.by_key.get(&(node_type, normalize_name(name))).copied()
    }

    /// Node ids whose normalized name equals `name`, any type.
    pub fn lookup_name(&self, name: &str) -> &[NodeId] {
        self.name_index
            .get(&normalize_name(name))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn name_index(&self) -> impl Iterator<Item = (&str, &[NodeId])> {
        self.name_index
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn synonyms_of(&self, alias: &str) -> impl Iterator<Item = &str> {
        self.synonyms
            .get(&normalize_name(alias))
            .into_iter()
            .flat_map(|s| s.iter().map(String::as_str))
    }

    /// Distinct edges with their multiplicity, in `(source, relation, target)` order.
    pub fn edges(&self) -> impl Iterator<Item = (Edge, u32)> + '_ {
        self.edges.iter().map(|(e, c)| (*e, *c))
    }

    pub fn multiplicity(&self, edge: Edge) -> u32 {
        self.edges.get(&edge).copied().unwrap_or(0)
    }

    pub fn out_edges(&self, id: NodeId) -> &[(Relation, NodeId)] {
        &self.out_adj[id as usize]
    }

    pub fn in_edges(&self, id: NodeId) -> &[(Relation, NodeId)] {
        &self.in_adj[id as usize]
    }

    /// Number of distinct edges of `relation` between `id` and nodes of
    /// `counterpart`, either direction.
    pub fn relation_degree(&self, id: NodeId, relation: Relation, counterpart: NodeType) -> usize {
        let hit = |&(r, n): &(Relation, NodeId)| {
            r == relation && self.nodes[n as usize].node_type == counterpart
        };
        self.out_adj[id as usize].iter().filter(|e| hit(e)).count()
            + self.in_adj[id as usize].iter().filter(|e| hit(e)).count()
    }

    pub fn schema(&self) -> GraphSchema {
        let mut types: BTreeMap<NodeType, u64> = BTreeMap::new();
        for n in &self.nodes {
            *types.entry(n.node_type).or_default() += 1;
        }
        let mut rels: BTreeMap<Relation, (u64, BTreeSet<(NodeType, NodeType)>)> = BTreeMap::new();
        for (e, c) in &self.edges {
            let entry = rels.entry(e.relation).or_default();
            entry.0 += *c as u64;
            entry.1.insert((
                self.nodes[e.source as usize].node_type,
                self.nodes[e.target as usize].node_type,
            ));
        }
        GraphSchema {
            node_types: types.into_iter().collect(),
            relations: rels
                .into_iter()
                .map(|(relation, (count, sig))| RelationSummary {
                    relation,
                    count,
                    signatures: sig.into_iter().collect(),
                })
                .collect(),
        }
    }

    /// Keeps the nodes of `ids` that have no `relation` edge toward a node of
    /// type `counterpart`. Order is preserved.
    pub fn filter_nodes_without_relation(
        &self,
        ids: &[NodeId],
        relation: Relation,
        counterpart: NodeType,
    ) -> Vec<NodeId> {
        ids.iter()
            .copied()
            .filter(|&id| {
                (id as usize) < self.nodes.len()
                    && self.relation_degree(id, relation, counterpart) == 0
            })
            .collect()
    }
}
