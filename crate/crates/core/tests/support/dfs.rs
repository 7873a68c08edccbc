//! Exhaustive-DFS path oracle over the raw edge TSV, shared by the graph
//! tests and the acceptance harness.

use std::collections::BTreeSet;

use leadforge_core::kgraph::{
    find_related_paths, Direction, GraphStore, HopConstraint, NodeType, Relation,
};

pub type Key = (NodeType, String);

/// Distinct edges straight from the TSV, without going through the store.
pub fn raw_edges(text: &str) -> Vec<(Key, Relation, Key)> {
    let mut set = BTreeSet::new();
    for line in text.lines() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').map(str::trim).collect();
        let st = NodeType::parse(f[0]).unwrap();
        let tt = NodeType::parse(f[3]).unwrap();
        let r = Relation::parse(f[2]).unwrap();
        set.insert(((st, f[1].to_string()), r, (tt, f[4].to_string())));
    }
    set.into_iter().collect()
}

pub type OraclePath = (Vec<Key>, Vec<Relation>, Vec<bool>);

fn admits(hop: &HopConstraint, r: Relation, next: &Key) -> bool {
    hop.relations.as_ref().is_none_or(|s| s.contains(&r))
        && hop.target_type.is_none_or(|t| t == next.0)
        && hop
            .target_name
            .as_ref()
            .is_none_or(|n| n.to_lowercase() == next.1.to_lowercase())
}

/// Exhaustive DFS over the raw edge list.
pub fn oracle(
    edges: &[(Key, Relation, Key)],
    starts: &[Key],
    hops: &[HopConstraint],
) -> Vec<OraclePath> {
    fn go(
        edges: &[(Key, Relation, Key)],
        hops: &[HopConstraint],
        path: &mut OraclePath,
        out: &mut Vec<OraclePath>,
    ) {
        let depth = path.1.len();
        if depth == hops.len() {
            out.push(path.clone());
            return;
        }
        let hop = &hops[depth];
        let cur = path.0.last().unwrap().clone();
        for (s, r, t) in edges {
            let mut steps = Vec::new();
            if *s == cur && matches!(hop.direction, Direction::Forward | Direction::Either) {
                steps.push((t, true));
            }
            if *t == cur && matches!(hop.direction, Direction::Backward | Direction::Either) {
                steps.push((s, false));
            }
            for (next, fwd) in steps {
                if path.0.contains(next) || !admits(hop, *r, next) {
                    continue;
                }
                path.0.push(next.clone());
                path.1.push(*r);
                path.2.push(fwd);
                go(edges, hops, path, out);
                path.0.pop();
                path.1.pop();
                path.2.pop();
            }
        }
    }
    let mut out = Vec::new();
    for s in starts {
        go(
            edges,
            hops,
            &mut (vec![s.clone()], vec![], vec![]),
            &mut out,
        );
    }
    out.sort();
    out
}

fn store_paths(g: &GraphStore, starts: &[Key], hops: &[HopConstraint]) -> (Vec<OraclePath>, bool) {
    let ids: Vec<u32> = starts
        .iter()
        .map(|(t, n)| g.node_id(*t, n).unwrap())
        .collect();
    let res = find_related_paths(g, &ids, hops, 3).unwrap();
    let key = |id: u32| {
        let n = g.node(id).unwrap();
        (n.node_type, n.name.clone())
    };
    let mut out: Vec<OraclePath> = res
        .paths
        .iter()
        .map(|p| {
            (
                p.nodes.iter().map(|&i| key(i)).collect(),
                p.relations.clone(),
                p.forward.clone(),
            )
        })
        .collect();
    out.sort();
    (out, res.relaxed)
}

/// Compares the store's search against the oracle, including the relaxed
/// retry when the strict pass is empty.
pub fn compare_with_oracle(
    g: &GraphStore,
    edges: &[(Key, Relation, Key)],
    starts: &[Key],
    hops: &[HopConstraint],
) -> Result<(), String> {
    let strict = oracle(edges, starts, hops);
    let (expect, relaxed) = if strict.is_empty() {
        let loose: Vec<HopConstraint> = hops.iter().map(HopConstraint::relaxed).collect();
        (oracle(edges, starts, &loose), true)
    } else {
        (strict, false)
    };
    let (got, got_relaxed) = store_paths(g, starts, hops);
    if got_relaxed != relaxed {
        return Err(format!(
            "relaxed flag {got_relaxed}, expected {relaxed} for {hops:?}"
        ));
    }
    if got != expect {
        return Err(format!(
            "{} paths, expected {} for {hops:?}",
            got.len(),
            expect.len()
        ));
    }
    Ok(())
}
