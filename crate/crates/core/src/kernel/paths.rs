//! Hop-count path utilities: Yen's k shortest loopless paths, and peeling a
//! single-slot flow into paths.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::model::DUST;
use crate::topology::LinkId;

/// Fewest-hop path from `src` to `dst` using links for which `usable` holds
/// and avoiding `banned_nodes`. Ties go to the lower link index.
fn bfs_path(
    node_count: usize,
    links: &[(usize, usize)],
    src: usize,
    dst: usize,
    usable: impl Fn(LinkId) -> bool,
    banned_nodes: &[bool],
) -> Option<Vec<LinkId>> {
    if src == dst {
        return Some(Vec::new());
    }
    let mut via: Vec<Option<LinkId>> = vec![None; node_count];
    let mut seen = vec![false; node_count];
    seen[src] = true;
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        for (l, &(a, b)) in links.iter().enumerate() {
            if a != u || seen[b] || banned_nodes[b] || !usable(l) {
                continue;
            }
            seen[b] = true;
            via[b] = Some(l);
            if b == dst {
                let mut path = Vec::new();
                let mut v = dst;
                while v != src {
                    let l = via[v].expect("bfs parent");
                    path.push(l);
                    v = links[l].0;
                }
                path.reverse();
                return Some(path);
            }
            queue.push_back(b);
        }
    }
    None
}

/// Up to `k` loopless paths from `src` to `dst`, shortest (by hops) first.
pub fn k_shortest_paths(
    node_count: usize,
    links: &[(usize, usize)],
    src: usize,
    dst: usize,
    k: usize,
) -> Vec<Vec<LinkId>> {
    let none = vec![false; node_count];
    let Some(first) = bfs_path(node_count, links, src, dst, |_| true, &none) else {
        return Vec::new();
    };
    let mut found = vec![first];
    let mut candidates: BTreeSet<(usize, Vec<LinkId>)> = BTreeSet::new();
    while found.len() < k {
        let prev = found.last().expect("non-empty").clone();
        for j in 0..prev.len() {
            let root = &prev[..j];
            let spur = if j == 0 { src } else { links[prev[j - 1]].1 };
            let banned_links: BTreeSet<LinkId> = found
                .iter()
                .filter(|p| p.len() > j && &p[..j] == root)
                .map(|p| p[j])
                .collect();
            let mut banned_nodes = vec![false; node_count];
            banned_nodes[src] = j > 0;
            for &l in root {
                banned_nodes[links[l].0] = true;
            }
            banned_nodes[spur] = false;
            if let Some(tail) = bfs_path(
                node_count,
                links,
                spur,
                dst,
                |l| !banned_links.contains(&l),
                &banned_nodes,
            ) {
                let mut path = root.to_vec();
                path.extend(tail);
                if !found.contains(&path) {
                    candidates.insert((path.len(), path));
                }
            }
        }
        match candidates.pop_first() {
            Some((_, p)) => found.push(p),
            None => break,
        }
    }
    found
}

/// Union of the links on the `k` shortest paths; empty if `dst` is unreachable.
pub fn admissible_links(
    node_count: usize,
    links: &[(usize, usize)],
    src: usize,
    dst: usize,
    k: usize,
) -> BTreeSet<LinkId> {
    k_shortest_paths(node_count, links, src, dst, k)
        .into_iter()
        .flatten()
        .collect()
}

pub fn reachable(node_count: usize, links: &[(usize, usize)], src: usize, dst: usize) -> bool {
    bfs_path(node_count, links, src, dst, |_| true, &vec![false; node_count]).is_some()
}

/// Splits a single-slot `src -> dst` flow into paths by repeatedly peeling
/// the fewest-hop path through links that still carry flow.
pub fn decompose_paths(
    node_count: usize,
    links: &[(usize, usize)],
    flows: impl IntoIterator<Item = (LinkId, f64)>,
    src: usize,
    dst: usize,
) -> Vec<(Vec<LinkId>, f64)> {
    let mut left: BTreeMap<LinkId, f64> = BTreeMap::new();
    for (l, f) in flows {
        *left.entry(l).or_insert(0.0) += f;
    }
    let none = vec![false; node_count];
    let mut out = Vec::new();
    while let Some(path) = bfs_path(
        node_count,
        links,
        src,
        dst,
        |l| left.get(&l).is_some_and(|&f| f > DUST),
        &none,
    ) {
        let amount = path.iter().map(|l| left[l]).fold(f64::INFINITY, f64::min);
        for l in &path {
            *left.get_mut(l).expect("on path") -= amount;
        }
        out.push((path, amount));
    }
    out
}
