//! The multi-access caching system: configuration, user-cache access
//! topology, MN node placement and the derived user-retrieve array.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bitset::BitSet;
use crate::combinatorics::{binomial, rank_subset, subsets};
use crate::error::{Error, Result};

/// Name of the generator behind every seeded draw in this crate. Recorded in
/// experiment outputs so runs can be replayed elsewhere.
pub const PRNG_NAME: &str = "ChaCha8Rng/rand_chacha-0.9";

pub(crate) fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SystemConfig {
    pub users: usize,
    pub cache_nodes: usize,
    pub files: usize,
    pub t: usize,
}

impl SystemConfig {
    pub fn new(users: usize, cache_nodes: usize, files: usize, t: usize) -> Result<Self> {
        if users == 0 || cache_nodes == 0 || files == 0 {
            return Err(Error::InvalidParameter(format!(
                "K, Lambda and N must be positive (got {users}, {cache_nodes}, {files})"
            )));
        }
        if t > cache_nodes {
            return Err(Error::InvalidParameter(format!(
                "t = {t} exceeds Lambda = {cache_nodes}"
            )));
        }
        Ok(Self {
            users,
            cache_nodes,
            files,
            t,
        })
    }

    pub fn subpacketization(&self) -> usize {
        binomial(self.cache_nodes, self.t)
    }

    /// Per-node memory `M = tN / Lambda`, in files.
    pub fn memory(&self) -> Ratio<u64> {
        Ratio::new((self.t * self.files) as u64, self.cache_nodes as u64)
    }

    pub fn memory_ratio(&self) -> Ratio<u64> {
        Ratio::new(self.t as u64, self.cache_nodes as u64)
    }

    /// Converse evaluation assumes every user can request a distinct file.
    pub fn check_distinct_demands(&self) -> Result<()> {
        if self.files < self.users {
            return Err(Error::InvalidParameter(format!(
                "N = {} < K = {}: distinct demands impossible",
                self.files, self.users
            )));
        }
        Ok(())
    }
}

/// Access sets `A_k`, stored 0-based and sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AccessTopology {
    cache_nodes: usize,
    access: Vec<Vec<usize>>,
}

impl AccessTopology {
    pub fn new(cache_nodes: usize, access: Vec<Vec<usize>>) -> Result<Self> {
        if access.is_empty() {
            return Err(Error::InvalidParameter("topology has no users".into()));
        }
        let mut covered = vec![false; cache_nodes];
        let mut sets = Vec::with_capacity(access.len());
        for (k, set) in access.into_iter().enumerate() {
            let mut set = set;
            set.sort_unstable();
            set.dedup();
            if set.is_empty() {
                return Err(Error::InvalidParameter(format!("user {} has no cache", k + 1)));
            }
            if let Some(&bad) = set.iter().find(|&&l| l >= cache_nodes) {
                return Err(Error::InvalidParameter(format!(
                    "user {} accesses cache {} outside [1, {cache_nodes}]",
                    k + 1,
                    bad + 1
                )));
            }
            for &l in &set {
                covered[l] = true;
            }
            sets.push(set);
        }
        if let Some(l) = covered.iter().position(|&c| !c) {
            return Err(Error::InvalidParameter(format!(
                "cache node {} is not accessed by any user",
                l + 1
            )));
        }
        Ok(Self {
            cache_nodes,
            access: sets,
        })
    }

    /// Build from 1-based index lists, as written in topology files.
    pub fn from_one_based(cache_nodes: usize, access: &[Vec<usize>]) -> Result<Self> {
        let sets = access
            .iter()
            .enumerate()
            .map(|(k, set)| {
                set.iter()
                    .map(|&l| {
                        l.checked_sub(1).ok_or_else(|| {
                            Error::InvalidParameter(format!("user {} lists cache 0", k + 1))
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(cache_nodes, sets)
    }

    /// `A_k = {k}` for `K = Lambda`: the retrieve array is the MN PDA star
    /// pattern.
    pub fn identity(users: usize) -> Result<Self> {
        Self::new(users, (0..users).map(|k| vec![k]).collect())
    }

    pub fn users(&self) -> usize {
        self.access.len()
    }

    pub fn cache_nodes(&self) -> usize {
        self.cache_nodes
    }

    pub fn access(&self, user: usize) -> &[usize] {
        &self.access[user]
    }

    pub fn access_sets(&self) -> &[Vec<usize>] {
        &self.access
    }

    pub fn to_one_based(&self) -> Vec<Vec<usize>> {
        self.access
            .iter()
            .map(|s| s.iter().map(|l| l + 1).collect())
            .collect()
    }
}

/// Draw a random topology. Each user picks a degree uniformly in
/// `[lo, hi]` and a uniformly random access set of that size; afterwards each
/// cache node nobody reached is handed to a uniformly chosen user.
pub fn generate_topology(
    users: usize,
    cache_nodes: usize,
    degree: (usize, usize),
    seed: u64,
) -> Result<AccessTopology> {
    let (lo, hi) = degree;
    if users == 0 || cache_nodes == 0 {
        return Err(Error::InvalidParameter("K and Lambda must be positive".into()));
    }
    if lo == 0 || lo > hi || hi > cache_nodes {
        return Err(Error::InvalidParameter(format!(
            "degree range {lo}:{hi} must satisfy 1 <= lo <= hi <= Lambda = {cache_nodes}"
        )));
    }
    let mut rng = seeded_rng(seed);
    let mut access: Vec<Vec<usize>> = (0..users)
        .map(|_| {
            let deg = rng.random_range(lo..=hi);
            let mut set = index::sample(&mut rng, cache_nodes, deg).into_vec();
            set.sort_unstable();
            set
        })
        .collect();

    let mut covered = vec![false; cache_nodes];
    for &l in access.iter().flatten() {
        covered[l] = true;
    }
    for (l, _) in covered.iter().enumerate().filter(|(_, &c)| !c) {
        let k = rng.random_range(0..users);
        let pos = access[k].partition_point(|&x| x < l);
        access[k].insert(pos, l);
    }
    AccessTopology::new(cache_nodes, access)
}

/// Header plus topology, as stored in topology files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopologyFile {
    pub t: usize,
    pub seed: u64,
    pub topology: AccessTopology,
}

impl fmt::Display for TopologyFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let topo = &self.topology;
        writeln!(f, "{} {} {} {}", topo.users(), topo.cache_nodes(), self.t, self.seed)?;
        for set in topo.to_one_based() {
            let line: Vec<String> = set.iter().map(ToString::to_string).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

impl FromStr for TopologyFile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let parse_nums = |line: usize, text: &str| -> Result<Vec<u64>> {
            text.split_whitespace()
                .map(|tok| {
                    tok.parse::<u64>().map_err(|e| Error::Parse {
                        line,
                        msg: format!("bad integer {tok:?}: {e}"),
                    })
                })
                .collect()
        };
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let header = parse_nums(hline, header)?;
        let [k, lambda, t, seed] = header[..] else {
            return Err(Error::Parse {
                line: hline,
                msg: "header must be `K Lambda t seed`".into(),
            });
        };
        let mut access = Vec::new();
        for (line, text) in lines {
            let set = parse_nums(line, text)?;
            access.push(set.into_iter().map(|x| x as usize).collect::<Vec<_>>());
        }
        if access.len() != k as usize {
            return Err(Error::Parse {
                line: hline,
                msg: format!("header says K = {k} but {} user lines follow", access.len()),
            });
        }
        let topology = AccessTopology::from_one_based(lambda as usize, &access)?;
        if t > lambda {
            return Err(Error::InvalidParameter(format!("t = {t} exceeds Lambda = {lambda}")));
        }
        Ok(TopologyFile {
            t: t as usize,
            seed,
            topology,
        })
    }
}

/// Bijection between packet index `f` and the `t`-subset `T_f` of cache nodes
/// that store it, in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PacketIndex {
    cache_nodes: usize,
    t: usize,
    sets: Vec<Vec<usize>>,
}

impl PacketIndex {
    pub fn new(cache_nodes: usize, t: usize) -> Result<Self> {
        if t > cache_nodes {
            return Err(Error::InvalidParameter(format!(
                "t = {t} exceeds Lambda = {cache_nodes}"
            )));
        }
        Ok(Self {
            cache_nodes,
            t,
            sets: subsets(cache_nodes, t).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn subset(&self, f: usize) -> &[usize] {
        &self.sets[f]
    }

    pub fn rank(&self, subset: &[usize]) -> Option<usize> {
        let valid = subset.len() == self.t
            && subset.windows(2).all(|w| w[0] < w[1])
            && subset.iter().all(|&l| l < self.cache_nodes);
        valid.then(|| rank_subset(self.cache_nodes, subset))
    }
}

/// `F x Lambda` star grid: `C(f, λ)` is a star iff `λ ∈ T_f`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodePlacement {
    index: PacketIndex,
    stars: Vec<bool>,
}

pub fn build_node_placement(cache_nodes: usize, t: usize) -> Result<NodePlacement> {
    let index = PacketIndex::new(cache_nodes, t)?;
    let mut stars = vec![false; index.len() * cache_nodes];
    for f in 0..index.len() {
        for &l in index.subset(f) {
            stars[f * cache_nodes + l] = true;
        }
    }
    Ok(NodePlacement { index, stars })
}

impl NodePlacement {
    pub fn rows(&self) -> usize {
        self.index.len()
    }

    pub fn cache_nodes(&self) -> usize {
        self.index.cache_nodes
    }

    pub fn t(&self) -> usize {
        self.index.t
    }

    pub fn packet_index(&self) -> &PacketIndex {
        &self.index
    }

    pub fn is_star(&self, f: usize, node: usize) -> bool {
        self.stars[f * self.cache_nodes() + node]
    }

    /// Packets held by one node (`Z_λ`).
    pub fn cached_set(&self, node: usize) -> BitSet {
        BitSet::from_indices(self.rows(), (0..self.rows()).filter(|&f| self.is_star(f, node)))
    }
}

/// `F x K` star/null grid: `U(f, k)` is a star iff user `k` reaches a cache
/// node holding packet `f`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetrieveArray {
    rows: usize,
    cols: usize,
    stars: Vec<bool>,
    origin: Option<RetrieveOrigin>,
}

/// Instance a retrieve array was derived from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetrieveOrigin {
    pub t: usize,
    pub topology: AccessTopology,
}

pub fn derive_retrieve_array(
    placement: &NodePlacement,
    topology: &AccessTopology,
) -> Result<RetrieveArray> {
    if topology.cache_nodes() != placement.cache_nodes() {
        return Err(Error::DimensionMismatch(format!(
            "topology has {} cache nodes, placement has {}",
            topology.cache_nodes(),
            placement.cache_nodes()
        )));
    }
    let rows = placement.rows();
    let cols = topology.users();
    let mut stars = vec![false; rows * cols];
    for f in 0..rows {
        for k in 0..cols {
            stars[f * cols + k] = topology.access(k).iter().any(|&l| placement.is_star(f, l));
        }
    }
    Ok(RetrieveArray {
        rows,
        cols,
        stars,
        origin: Some(RetrieveOrigin {
            t: placement.t(),
            topology: topology.clone(),
        }),
    })
}

impl RetrieveArray {
    /// A bare grid without an originating instance.
    pub fn from_stars(rows: usize, cols: usize, stars: Vec<bool>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter(format!(
                "array dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if stars.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} cells for a {rows}x{cols} array",
                stars.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            stars,
            origin: None,
        })
    }

    /// Parse the star/null text form: `*` for stars, `.` (or any other token)
    /// for nulls.
    pub fn parse_grid(text: &str) -> Result<Self> {
        let rows: Vec<Vec<bool>> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| l.split_whitespace().map(|tok| tok == "*").collect())
            .collect();
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::from_stars(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn origin(&self) -> Option<&RetrieveOrigin> {
        self.origin.as_ref()
    }

    #[inline]
    pub fn is_star(&self, f: usize, k: usize) -> bool {
        self.stars[f * self.cols + k]
    }

    pub fn null_count(&self) -> usize {
        self.stars.iter().filter(|&&s| !s).count()
    }

    pub fn column_star_count(&self, k: usize) -> usize {
        (0..self.rows).filter(|&f| self.is_star(f, k)).count()
    }
}

impl fmt::Display for RetrieveArray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            let line: Vec<&str> = (0..self.cols)
                .map(|k| if self.is_star(r, k) { "*" } else { "." })
                .collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// Per-user sets `S_{d_k}` of packets not retrievable from cache.
pub fn uncached_sets(u: &RetrieveArray) -> Vec<BitSet> {
    (0..u.cols())
        .map(|k| BitSet::from_indices(u.rows(), (0..u.rows()).filter(|&f| !u.is_star(f, k))))
        .collect()
}
