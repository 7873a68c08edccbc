//! Smallest set of smallest rings: Horton candidate cycles reduced to a
//! minimum cycle basis by Gaussian elimination over GF(2).

use std::collections::{HashSet, VecDeque};

use super::Bond;

pub(super) fn smallest_ring_set(
    n: usize,
    bonds: &[Bond],
    adjacency: &[Vec<(usize, usize)>],
) -> Vec<Vec<usize>> {
    let cyclomatic = (bonds.len() + 1).saturating_sub(n);
    if cyclomatic == 0 {
        return Vec::new();
    }
    let words = bonds.len().div_ceil(64);

    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut candidates: Vec<(Vec<usize>, Vec<u64>)> = Vec::new();
    for root in 0..n {
        let (parent, parent_bond) = bfs_tree(root, n, adjacency);
        for (bi, bond) in bonds.iter().enumerate() {
            let (x, y) = (bond.a, bond.b);
            if parent_bond[x] == Some(bi) || parent_bond[y] == Some(bi) {
                continue;
            }
            let (Some(px), Some(py)) = (
                path_to_root(x, root, &parent),
                path_to_root(y, root, &parent),
            ) else {
                continue;
            };
            // the two tree paths may only share the root
            let on_x: HashSet<usize> = px.iter().copied().collect();
            if py.iter().filter(|v| on_x.contains(v)).count() != 1 {
                continue;
            }
            let mut cycle = px.clone();
            cycle.reverse();
            cycle.extend(py.iter().copied());
            // cycle: root .. x, then y .. root (root twice): drop the trailing root
            cycle.pop();
            let mut bits = vec![0u64; words];
            for i in 0..cycle.len() {
                let a = cycle[i];
                let b = cycle[(i + 1) % cycle.len()];
                let Some(&(_, e)) = adjacency[a].iter().find(|&&(m, _)| m == b) else {
                    continue;
                };
                bits[e / 64] |= 1 << (e % 64);
            }
            if seen.insert(bits.clone()) {
                candidates.push((cycle, bits));
            }
        }
    }
    candidates.sort_by(|a, b| {
        let mut sa = a.0.clone();
        let mut sb = b.0.clone();
        sa.sort_unstable();
        sb.sort_unstable();
        a.0.len().cmp(&b.0.len()).then(sa.cmp(&sb))
    });

    let mut basis: Vec<Vec<u64>> = Vec::new();
    let mut rings = Vec::new();
    for (cycle, bits) in candidates {
        if reduce(&bits, &basis).iter().any(|&w| w != 0) {
            insert_reduced(reduce(&bits, &basis), &mut basis);
            rings.push(cycle);
            if rings.len() == cyclomatic {
                break;
            }
        }
    }
    rings
}

fn bfs_tree(
    root: usize,
    n: usize,
    adjacency: &[Vec<(usize, usize)>],
) -> (Vec<Option<usize>>, Vec<Option<usize>>) {
    let mut parent = vec![None; n];
    let mut parent_bond = vec![None; n];
    let mut visited = vec![false; n];
    visited[root] = true;
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        let mut nbrs = adjacency[u].clone();
        nbrs.sort_unstable();
        for (v, e) in nbrs {
            if !visited[v] {
                visited[v] = true;
                parent[v] = Some(u);
                parent_bond[v] = Some(e);
                queue.push_back(v);
            }
        }
    }
    (parent, parent_bond)
}

/// Path from `v` up to `root`, inclusive of both ends.
fn path_to_root(v: usize, root: usize, parent: &[Option<usize>]) -> Option<Vec<usize>> {
    let mut path = vec![v];
    let mut cur = v;
    while cur != root {
        cur = parent[cur]?;
        path.push(cur);
    }
    Some(path)
}

fn leading_bit(bits: &[u64]) -> Option<usize> {
    bits.iter()
        .enumerate()
        .find(|(_, &w)| w != 0)
        .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}

fn reduce(bits: &[u64], basis: &[Vec<u64>]) -> Vec<u64> {
    let mut v = bits.to_vec();
    for row in basis {
        let Some(pivot) = leading_bit(row) else {
            continue;
        };
        if v[pivot / 64] & (1 << (pivot % 64)) != 0 {
            for (a, b) in v.iter_mut().zip(row) {
                *a ^= b;
            }
        }
    }
    v
}

/// Keeps `basis` in reduced echelon form keyed by each row's lowest set bit.
fn insert_reduced(v: Vec<u64>, basis: &mut Vec<Vec<u64>>) {
    let pivot = leading_bit(&v).expect("non-zero vector");
    for row in basis.iter_mut() {
        if row[pivot / 64] & (1 << (pivot % 64)) != 0 {
            for (a, b) in row.iter_mut().zip(&v) {
                *a ^= b;
            }
        }
    }
    basis.push(v);
}
