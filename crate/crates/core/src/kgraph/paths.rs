use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{normalize_name, GraphStore, KgError, NodeId, NodeType, Relation};

pub const MAX_HOPS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `-[R]->`
    Forward,
    /// `<-[R]-`
    Backward,
    /// `-[R]-`
    Either,
}

/// One hop of a path pattern.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HopConstraint {
    /// `None` is the wildcard.
    pub relations: Option<BTreeSet<Relation>>,
    pub direction: Direction,
    pub target_type: Option<NodeType>,
    pub target_name: Option<String>,
}

impl HopConstraint {
    pub fn any() -> Self {
        HopConstraint {
            relations: None,
            direction: Direction::Forward,
            target_type: None,
            target_name: None,
        }
    }

    pub fn relation(r: Relation) -> Self {
        HopConstraint {
            relations: Some([r].into()),
            ..Self::any()
        }
    }

    pub fn to_type(mut self, t: NodeType) -> Self {
        self.target_type = Some(t);
        self
    }

    pub fn direction(mut self, d: Direction) -> Self {
        self.direction = d;
        self
    }

    /// Same hop with the relation constraint dropped.
    pub fn relaxed(&self) -> Self {
        HopConstraint {
            relations: None,
            ..self.clone()
        }
    }

    pub fn admits_relation(&self, r: Relation) -> bool {
        self.relations.as_ref().is_none_or(|s| s.contains(&r))
    }

    pub fn admits_node(&self, store: &GraphStore, id: NodeId) -> bool {
        let n = &store.nodes()[id as usize];
        self.target_type.is_none_or(|t| t == n.node_type)
            && self
                .target_name
                .as_ref()
                .is_none_or(|name| normalize_name(name) == normalize_name(&n.name))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidencePath {
    pub nodes: Vec<NodeId>,
    pub relations: Vec<Relation>,
    /// Whether each hop follows the stored edge direction.
    pub forward: Vec<bool>,
}

impl EvidencePath {
    pub fn hop_count(&self) -> usize {
        self.relations.len()
    }

    pub fn end(&self) -> NodeId {
        *self.nodes.last().expect("path has a start node")
    }

    /// `A -[R]-> B <-[S]- C`
    pub fn render(&self, store: &GraphStore) -> String {
        let name = |id: NodeId| store.nodes()[id as usize].name.as_str();
        let mut s = name(self.nodes[0]).to_string();
        for (i, r) in self.relations.iter().enumerate() {
            if self.forward[i] {
                s.push_str(&format!(" -[{r}]-> "));
            } else {
                s.push_str(&format!(" <-[{r}]- "));
            }
            s.push_str(name(self.nodes[i + 1]));
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathSearch {
    pub paths: Vec<EvidencePath>,
    /// The strict pass found nothing and relation constraints were dropped.
    pub relaxed: bool,
}

impl PathSearch {
    /// Distinct end nodes in first-seen order.
    pub fn end_nodes(&self) -> Vec<NodeId> {
        let mut seen = BTreeSet::new();
        self.paths
            .iter()
            .map(EvidencePath::end)
            .filter(|id| seen.insert(*id))
            .collect()
    }
}

fn expand(store: &GraphStore, partial: &[EvidencePath], hop: &HopConstraint) -> Vec<EvidencePath> {
    let mut out = Vec::new();
    for p in partial {
        let last = p.end();
        let mut step = |edges: &[(Relation, NodeId)], fwd: bool| {
            for &(r, n) in edges {
                if hop.admits_relation(r) && !p.nodes.contains(&n) && hop.admits_node(store, n) {
                    let mut q = p.clone();
                    q.nodes.push(n);
                    q.relations.push(r);
                    q.forward.push(fwd);
                    out.push(q);
                }
            }
        };
        if hop.direction != Direction::Backward {
            step(store.out_edges(last), true);
        }
        if hop.direction != Direction::Forward {
            step(store.in_edges(last), false);
        }
    }
    out
}

fn search(store: &GraphStore, starts: &[NodeId], hops: &[HopConstraint]) -> Vec<EvidencePath> {
    let mut layer: Vec<EvidencePath> = starts
        .iter()
        .map(|&s| EvidencePath {
            nodes: vec![s],
            relations: Vec::new(),
            forward: Vec::new(),
        })
        .collect();
    for hop in hops {
        layer = expand(store, &layer, hop);
        if layer.is_empty() {
            break;
        }
    }
    layer
}

/// Sort order: hop count, then node names, then relations, direction and ids.
pub(crate) fn sort_paths(store: &GraphStore, paths: &mut [EvidencePath]) {
    let key = |p: &EvidencePath| {
        (
            p.hop_count(),
            p.nodes
                .iter()
                .map(|&id| normalize_name(&store.nodes()[id as usize].name))
                .collect::<Vec<_>>(),
            p.relations.clone(),
            p.forward.iter().map(|f| !f).collect::<Vec<_>>(),
            p.nodes.clone(),
        )
    };
    paths.sort_by_cached_key(key);
}

/// All simple paths from `starts` whose hops satisfy `hops` in order.
///
/// Path length equals the pattern length, which must lie in `1..=max_hops`
/// with `max_hops <= 3`. When the strict pass is empty the search is repeated
/// once with every relation constraint relaxed to the wildcard (direction and
/// node constraints are kept) and the result is flagged `relaxed`.
pub fn find_related_paths(
    store: &GraphStore,
    starts: &[NodeId],
    hops: &[HopConstraint],
    max_hops: usize,
) -> Result<PathSearch, KgError> {
    if !(1..=MAX_HOPS).contains(&max_hops) {
        return Err(KgError::InvalidHops(max_hops));
    }
    if hops.is_empty() || hops.len() > max_hops {
        return Err(KgError::InvalidHops(hops.len()));
    }
    if let Some(&bad) = starts.iter().find(|&&s| store.node(s).is_none()) {
        return Err(KgError::UnknownStartNode(bad));
    }
    let starts: Vec<NodeId> = starts
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut paths = search(store, &starts, hops);
    let mut relaxed = false;
    if paths.is_empty() {
        let loose: Vec<HopConstraint> = hops.iter().map(HopConstraint::relaxed).collect();
        paths = search(store, &starts, &loose);
        relaxed = true;
    }
    sort_paths(store, &mut paths);
    Ok(PathSearch { paths, relaxed })
}

#[cfg(test)]
mod tests {
    use super::*;

    const EDGES: &str = "\
Disease\tpancreatic adenocarcinoma\tDISEASE_PROTEIN\tGene_protein\tKRAS
Disease\tpancreatic adenocarcinoma\tDISEASE_DISEASE\tDisease\tFamilial pancreatic carcinoma
Disease\tFamilial pancreatic carcinoma\tDISEASE_PROTEIN\tGene_protein\tPALLD
Drug\tSotorasib\tDRUG_PROTEIN\tGene_protein\tKRAS
";

    fn setup() -> (GraphStore, NodeId) {
        let g = GraphStore::ingest_edges(EDGES, None).unwrap();
        let s = g
            .node_id(NodeType::Disease, "pancreatic adenocarcinoma")
            .unwrap();
        (g, s)
    }

    fn ends(g: &GraphStore, r: &PathSearch) -> Vec<String> {
        r.end_nodes()
            .iter()
            .map(|&id| g.node(id).unwrap().name.clone())
            .collect()
    }

    #[test]
    fn one_and_two_hops() {
        let (g, s) = setup();
        let one = find_related_paths(
            &g,
            &[s],
            &[HopConstraint::relation(Relation::DiseaseProtein)],
            3,
        )
        .unwrap();
        assert_eq!(ends(&g, &one), ["KRAS"]);
        assert!(!one.relaxed);
        let two = find_related_paths(
            &g,
            &[s],
            &[
                HopConstraint::any(),
                HopConstraint::relation(Relation::DiseaseProtein),
            ],
            3,
        )
        .unwrap();
        assert_eq!(ends(&g, &two), ["PALLD"]);
        assert_eq!(
            two.paths[0].render(&g),
            "pancreatic adenocarcinoma -[DISEASE_DISEASE]-> Familial pancreatic carcinoma -[DISEASE_PROTEIN]-> PALLD"
        );
    }

    #[test]
    fn backward_and_simple() {
        let (g, s) = setup();
        let hops = [
            HopConstraint::relation(Relation::DiseaseProtein),
            HopConstraint::relation(Relation::DrugProtein).direction(Direction::Backward),
        ];
        let r = find_related_paths(&g, &[s], &hops, 2).unwrap();
        assert_eq!(ends(&g, &r), ["Sotorasib"]);
        assert_eq!(r.paths[0].forward, [true, false]);
        // going back to the start is never allowed
        let back = [
            HopConstraint::any(),
            HopConstraint::any().direction(Direction::Backward),
        ];
        let r = find_related_paths(&g, &[s], &back, 2).unwrap();
        assert!(r.paths.iter().all(|p| p.nodes[2] != s));
    }

    #[test]
    fn relaxed_retry() {
        let (g, s) = setup();
        let hops = [HopConstraint::relation(Relation::Indication).to_type(NodeType::GeneProtein)];
        let r = find_related_paths(&g, &[s], &hops, 1).unwrap();
        assert!(r.relaxed);
        assert_eq!(ends(&g, &r), ["KRAS"]);
    }

    #[test]
    fn argument_errors() {
        let (g, s) = setup();
        let h = [HopConstraint::any()];
        assert_eq!(
            find_related_paths(&g, &[s], &h, 4),
            Err(KgError::InvalidHops(4))
        );
        assert_eq!(
            find_related_paths(&g, &[s], &[], 3),
            Err(KgError::InvalidHops(0))
        );
        assert_eq!(
            find_related_paths(&g, &[99], &h, 3),
            Err(KgError::UnknownStartNode(99))
        );
    }
}
