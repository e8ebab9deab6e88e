//! Independent reference implementations used as test oracles. They share no
//! code with the library beyond its public data types.

#![allow(dead_code)]

use std::collections::BTreeSet;

use macc_core::graph::Graph;
use macc_core::macc::{generate_topology, AccessTopology};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// All `t`-subsets of `0..n` in lexicographic order, via bitmask filtering.
pub fn t_subsets(n: usize, t: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == t)
        .map(|m| (0..n).filter(|&i| m >> i & 1 == 1).collect())
        .collect();
    out.sort();
    out
}

/// Star pattern of `U` as rows of booleans.
pub fn retrieve_stars(topology: &AccessTopology, t: usize) -> Vec<Vec<bool>> {
    t_subsets(topology.cache_nodes(), t)
        .iter()
        .map(|subset| {
            (0..topology.users())
                .map(|k| topology.access(k).iter().any(|l| subset.contains(l)))
                .collect()
        })
        .collect()
}

/// Per-user sets of uncached rows.
pub fn uncached(stars: &[Vec<bool>]) -> Vec<BTreeSet<usize>> {
    let k = stars.first().map_or(0, Vec::len);
    (0..k)
        .map(|u| (0..stars.len()).filter(|&f| !stars[f][u]).collect())
        .collect()
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// Maximum over all user orders of the summed running intersections.
pub fn brute_ic(sets: &[BTreeSet<usize>], packets: usize) -> Ratio<u64> {
    let best = permutations(sets.len())
        .into_iter()
        .map(|order| {
            let mut acc: Option<BTreeSet<usize>> = None;
            let mut total = 0;
            for &u in &order {
                let next: BTreeSet<usize> = match &acc {
                    None => sets[u].clone(),
                    Some(a) => a.intersection(&sets[u]).copied().collect(),
                };
                total += next.len();
                acc = Some(next);
            }
            total
        })
        .max()
        .unwrap_or(0);
    Ratio::new(best as u64, packets as u64)
}

/// Exact chromatic number by backtracking. Intended for at most 20 vertices.
pub fn chromatic_number(g: &Graph) -> usize {
    let n = g.vertex_count();
    assert!(n <= 20, "oracle limited to 20 vertices");
    if n == 0 {
        return 0;
    }
    let adj: Vec<Vec<usize>> = (0..n).map(|v| g.neighbors(v).collect()).collect();
    (1..=n)
        .find(|&k| {
            let mut colors = vec![0usize; n];
            colorable(&adj, &mut colors, 0, k, 0)
        })
        .unwrap()
}

fn colorable(adj: &[Vec<usize>], colors: &mut [usize], v: usize, k: usize, used: usize) -> bool {
    if v == colors.len() {
        return true;
    }
    // New colors are opened in order, which removes relabeling symmetry.
    for c in 1..=(used + 1).min(k) {
        if adj[v].iter().all(|&w| w >= v || colors[w] != c) {
            colors[v] = c;
            if colorable(adj, colors, v + 1, k, used.max(c)) {
                return true;
            }
        }
    }
    colors[v] = 0;
    false
}

/// A random small instance: `(K, Lambda, t, topology)`.
pub struct Instance {
    pub users: usize,
    pub cache_nodes: usize,
    pub t: usize,
    pub topology: AccessTopology,
}

pub fn random_instance(seed: u64, max_users: usize, max_nodes: usize, max_t: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let users = rng.random_range(1..=max_users);
    let cache_nodes = rng.random_range(1..=max_nodes);
    let t = rng.random_range(1..=max_t.min(cache_nodes));
    let topology = generate_topology(users, cache_nodes, (1, cache_nodes), rng.random()).unwrap();
    Instance {
        users,
        cache_nodes,
        t,
        topology,
    }
}
