mod support;

use std::collections::{BTreeMap, BTreeSet};

use leadforge_core::bundled_fixtures_dir;
use leadforge_core::kgraph::{
    entity_linking, find_related_paths, parse_pattern, Direction, GraphStore, HopConstraint,
    NodeType, Relation,
};
use proptest::prelude::*;
use support::dfs::{compare_with_oracle, raw_edges, Key};

fn check_against_oracle(
    g: &GraphStore,
    edges: &[(Key, Relation, Key)],
    starts: &[Key],
    hops: &[HopConstraint],
) {
    if let Err(e) = compare_with_oracle(g, edges, starts, hops) {
        panic!("{e}");
    }
}

fn fixture(name: &str) -> (GraphStore, String) {
    let dir = bundled_fixtures_dir().join(name);
    let g = GraphStore::ingest_files(
        &dir.join("edges.tsv"),
        Some(&dir.join("synonyms.tsv")),
        Some(&dir.join("pdb_map.tsv")),
    )
    .unwrap();
    (g, std::fs::read_to_string(dir.join("edges.tsv")).unwrap())
}

fn hop_menu() -> Vec<Vec<HopConstraint>> {
    let any = HopConstraint::any;
    let gene = || any().to_type(NodeType::GeneProtein);
    vec![
        vec![HopConstraint::relation(Relation::DiseaseProtein).to_type(NodeType::GeneProtein)],
        vec![any()],
        vec![any().direction(Direction::Either)],
        vec![any(), gene()],
        vec![
            HopConstraint::relation(Relation::DiseaseDisease),
            HopConstraint::relation(Relation::DiseaseProtein),
        ],
        vec![
            any().direction(Direction::Either),
            any().direction(Direction::Backward),
        ],
        vec![
            gene(),
            HopConstraint::relation(Relation::DrugProtein).direction(Direction::Backward),
            any().direction(Direction::Either),
        ],
        vec![HopConstraint::relation(Relation::DrugDrug)],
    ]
}

#[test]
fn path_search_matches_dfs_on_fixtures() {
    for name in ["diabetes", "pancreatic"] {
        let (g, text) = fixture(name);
        assert!(g.node_count() <= 200);
        let edges = raw_edges(&text);
        let diseases: Vec<Key> = g
            .nodes()
            .iter()
            .filter(|n| n.node_type == NodeType::Disease)
            .map(|n| (n.node_type, n.name.clone()))
            .collect();
        for hops in hop_menu() {
            for s in &diseases {
                check_against_oracle(&g, &edges, std::slice::from_ref(s), &hops);
            }
            check_against_oracle(&g, &edges, &diseases, &hops);
        }
    }
}

#[test]
fn schema_matches_file_tallies() {
    for name in ["diabetes", "pancreatic"] {
        let (g, text) = fixture(name);
        let mut nodes: BTreeSet<Key> = BTreeSet::new();
        let mut rows: BTreeMap<Relation, u64> = BTreeMap::new();
        for line in text
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        {
            let f: Vec<&str> = line.split('\t').map(str::trim).collect();
            nodes.insert((NodeType::parse(f[0]).unwrap(), f[1].to_string()));
            nodes.insert((NodeType::parse(f[3]).unwrap(), f[4].to_string()));
            *rows.entry(Relation::parse(f[2]).unwrap()).or_default() += 1;
        }
        let schema = g.schema();
        let mut by_type: BTreeMap<NodeType, u64> = BTreeMap::new();
        for (t, _) in &nodes {
            *by_type.entry(*t).or_default() += 1;
        }
        assert_eq!(schema.node_types, by_type.into_iter().collect::<Vec<_>>());
        let counted: BTreeMap<Relation, u64> = schema
            .relations
            .iter()
            .map(|r| (r.relation, r.count))
            .collect();
        assert_eq!(counted, rows);
        assert_eq!(g.node_count(), nodes.len());
    }
}

#[test]
fn diabetes_links_three_exact_matches() {
    let (g, _) = fixture("diabetes");
    let r = entity_linking("diabetes", &g, &[NodeType::Disease]);
    let names: BTreeSet<&str> = r.exact_matches.iter().map(|e| e.name.as_str()).collect();
    assert_eq!(
        names,
        BTreeSet::from([
            "type 1 diabetes mellitus",
            "diabetes mellitus",
            "type 2 diabetes mellitus"
        ])
    );
    assert_eq!(r.exact_matches.len(), 3);
    assert!(r.contains_matches.is_empty());
}

#[test]
fn pancreatic_replay_keeps_palld_and_drops_kras() {
    let (g, _) = fixture("pancreatic");
    let linked = entity_linking("pancreatic cancer", &g, &[NodeType::Disease]).ids();
    assert!(!linked.is_empty());
    let mut ends = Vec::new();
    for text in [
        "(Disease)-[DISEASE_PROTEIN]->(Gene_protein)",
        "(Disease)-[DISEASE_DISEASE]->(Disease)-[DISEASE_PROTEIN]->(Gene_protein)",
    ] {
        let pat = parse_pattern(text).unwrap();
        let res = find_related_paths(&g, &linked, &pat.hops, 3).unwrap();
        assert!(!res.relaxed);
        for id in res.end_nodes() {
            if !ends.contains(&id) {
                ends.push(id);
            }
        }
    }
    let name = |id: u32| g.node(id).unwrap().name.clone();
    let before: Vec<String> = ends.iter().map(|&i| name(i)).collect();
    assert!(before.contains(&"KRAS".to_string()));
    let kept: Vec<String> = g
        .filter_nodes_without_relation(&ends, Relation::DrugProtein, NodeType::Drug)
        .into_iter()
        .map(name)
        .collect();
    assert!(kept.contains(&"PALLD".to_string()), "{kept:?}");
    assert!(!kept.contains(&"KRAS".to_string()));
}

#[test]
fn queries_are_deterministic() {
    let (g, _) = fixture("pancreatic");
    let (g2, _) = fixture("pancreatic");
    let pat = parse_pattern("(Disease)-[*]->(Gene_protein)").unwrap();
    let starts = pat.resolve_starts(&g);
    let a = serde_json::to_string(&find_related_paths(&g, &starts, &pat.hops, 3).unwrap()).unwrap();
    let b = serde_json::to_string(
        &find_related_paths(&g2, &pat.resolve_starts(&g2), &pat.hops, 3).unwrap(),
    )
    .unwrap();
    assert_eq!(a, b);
    let l1 = serde_json::to_string(&entity_linking("pancreatic cancer", &g, &[])).unwrap();
    let l2 = serde_json::to_string(&entity_linking("pancreatic cancer", &g2, &[])).unwrap();
    assert_eq!(l1, l2);
}

/// Edge signatures that appear in the diabetes fixture, so random graphs
/// only use type-consistent relations.
fn signatures() -> Vec<(NodeType, Relation, NodeType)> {
    let (_, text) = fixture("diabetes");
    raw_edges(&text)
        .into_iter()
        .map(|((st, _), r, (tt, _))| (st, r, tt))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

fn random_graph() -> impl Strategy<Value = String> {
    let sigs = signatures();
    prop::collection::vec((0..sigs.len(), 0u8..6, 0u8..6), 1..60).prop_map(move |picks| {
        picks
            .into_iter()
            .map(|(s, a, b)| {
                let (st, r, tt) = sigs[s];
                format!("{st}\t{st}{a}\t{r}\t{tt}\t{tt}{b}\n")
            })
            .collect()
    })
}

fn random_hops() -> impl Strategy<Value = Vec<HopConstraint>> {
    let hop = (
        prop::option::of(prop::sample::select(Relation::ALL.to_vec())),
        prop::sample::select(vec![
            Direction::Forward,
            Direction::Backward,
            Direction::Either,
        ]),
        prop::option::of(prop::sample::select(NodeType::ALL.to_vec())),
    )
        .prop_map(|(r, d, t)| HopConstraint {
            relations: r.map(|r| [r].into()),
            direction: d,
            target_type: t,
            target_name: None,
        });
    prop::collection::vec(hop, 1..=3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn random_graphs_match_dfs(text in random_graph(), hops in random_hops(), pick in any::<prop::sample::Index>()) {
        let g = GraphStore::ingest_edges(&text, None).unwrap();
        let edges = raw_edges(&text);
        let all: Vec<Key> = g.nodes().iter().map(|n| (n.node_type, n.name.clone())).collect();
        let start = all[pick.index(all.len())].clone();
        check_against_oracle(&g, &edges, &[start], &hops);
        check_against_oracle(&g, &edges, &all, &hops);
    }

    #[test]
    fn filter_partitions_the_input(text in random_graph(), rel in prop::sample::select(Relation::ALL.to_vec()), ty in prop::sample::select(NodeType::ALL.to_vec())) {
        let g = GraphStore::ingest_edges(&text, None).unwrap();
        let edges = raw_edges(&text);
        let ids: Vec<u32> = g.nodes().iter().map(|n| n.id).collect();
        let kept: BTreeSet<u32> = g.filter_nodes_without_relation(&ids, rel, ty).into_iter().collect();
        let key = |id: u32| (g.node(id).unwrap().node_type, g.node(id).unwrap().name.clone());
        let has: BTreeSet<u32> = ids
            .iter()
            .copied()
            .filter(|&id| edges.iter().any(|(s, r, t)| *r == rel && ((*s == key(id) && t.0 == ty) || (*t == key(id) && s.0 == ty))))
            .collect();
        prop_assert!(kept.is_disjoint(&has));
        prop_assert_eq!(kept.union(&has).copied().collect::<BTreeSet<_>>(), ids.into_iter().collect::<BTreeSet<_>>());
    }
}
