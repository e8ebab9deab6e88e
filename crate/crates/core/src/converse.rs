//! Lower bounds on the delivery load under uncoded placement.
//!
//! For a user order `u`, the value `R_u = (1/F) * sum_i |S_{u_1} ∩ ... ∩ S_{u_i}|`
//! bounds the load from below, where `S_k` is the set of packets user `k`
//! cannot retrieve. The index-coding converse is the maximum over all orders;
//! the greedy converse follows a single order built by maximizing each
//! running intersection.

use std::fmt;

use num_rational::Ratio;
use rayon::prelude::*;

use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::macc::{uncached_sets, RetrieveArray};

pub const ENUM_USER_LIMIT: usize = 10;
pub const DP_USER_LIMIT: usize = 24;

/// The sets `S_{d_k}` over `F` packets, one per user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DemandSetFamily {
    packets: usize,
    sets: Vec<BitSet>,
}

impl DemandSetFamily {
    pub fn from_retrieve_array(u: &RetrieveArray) -> Self {
        Self {
            packets: u.rows(),
            sets: uncached_sets(u),
        }
    }

    pub fn from_sets(packets: usize, sets: Vec<BitSet>) -> Result<Self> {
        if packets == 0 {
            return Err(Error::InvalidParameter("subpacketization must be positive".into()));
        }
        if let Some(k) = sets.iter().position(|s| s.capacity() != packets) {
            return Err(Error::DimensionMismatch(format!(
                "set of user {} spans {} packets, expected {packets}",
                k + 1,
                sets[k].capacity()
            )));
        }
        Ok(Self { packets, sets })
    }

    pub fn users(&self) -> usize {
        self.sets.len()
    }

    pub fn packets(&self) -> usize {
        self.packets
    }

    pub fn set(&self, k: usize) -> &BitSet {
        &self.sets[k]
    }

    pub fn sets(&self) -> &[BitSet] {
        &self.sets
    }

    /// Sizes of the running intersections along `order` (0-based users).
    pub fn cumulative_sizes(&self, order: &[usize]) -> Result<Vec<usize>> {
        check_permutation(order, self.users())?;
        let mut acc = BitSet::full(self.packets);
        Ok(order
            .iter()
            .map(|&k| {
                acc.intersect_with(&self.sets[k]);
                acc.count()
            })
            .collect())
    }
}

fn check_permutation(order: &[usize], k: usize) -> Result<()> {
    let mut seen = vec![false; k];
    let ok = order.len() == k
        && order
            .iter()
            .all(|&u| u < k && !std::mem::replace(&mut seen[u], true));
    if ok {
        Ok(())
    } else {
        let shown: Vec<String> = order.iter().map(|u| (u + 1).to_string()).collect();
        Err(Error::NotAPermutation(format!("({})", shown.join(","))))
    }
}

/// `R_u` for a 0-based user order.
pub fn permutation_value(family: &DemandSetFamily, order: &[usize]) -> Result<Ratio<u64>> {
    let total: usize = family.cumulative_sizes(order)?.iter().sum();
    Ok(Ratio::new(total as u64, family.packets as u64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConverseMethod {
    Greedy,
    IcEnum,
    IcDp,
}

impl ConverseMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            ConverseMethod::Greedy => "greedy",
            ConverseMethod::IcEnum => "ic-enum",
            ConverseMethod::IcDp => "ic-dp",
        }
    }
}

impl fmt::Display for ConverseMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConverseReport {
    pub method: ConverseMethod,
    pub bound: Ratio<u64>,
    /// 0-based user order attaining `bound`.
    pub witness: Vec<usize>,
    /// Running intersection sizes along `witness`.
    pub terms: Vec<usize>,
    /// Intersections evaluated (greedy), permutations visited (enumeration)
    /// or subsets visited (dynamic program).
    pub work: u64,
}

impl ConverseReport {
    pub fn witness_one_based(&self) -> Vec<usize> {
        self.witness.iter().map(|k| k + 1).collect()
    }
}

/// `method bound_num bound_den witness_order work_count`, with the witness
/// written as comma-separated 1-based users (`-` when there are none).
impl fmt::Display for ConverseReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let order = if self.witness.is_empty() {
            "-".to_string()
        } else {
            self.witness_one_based()
                .iter()
                .map(|k| k.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(
            f,
            "{} {} {} {} {}",
            self.method,
            self.bound.numer(),
            self.bound.denom(),
            order,
            self.work
        )
    }
}

fn finish(
    family: &DemandSetFamily,
    method: ConverseMethod,
    witness: Vec<usize>,
    work: u64,
) -> ConverseReport {
    let terms = family
        .cumulative_sizes(&witness)
        .expect("witness is a permutation");
    let total: usize = terms.iter().sum();
    ConverseReport {
        method,
        bound: Ratio::new(total as u64, family.packets as u64),
        witness,
        terms,
        work,
    }
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

pub fn ic_converse_enum(family: &DemandSetFamily) -> Result<ConverseReport> {
    ic_converse_enum_with_limit(family, ENUM_USER_LIMIT)
}

/// Maximize `R_u` over all `K!` orders. The witness is the lexicographically
/// smallest maximizer.
pub fn ic_converse_enum_with_limit(
    family: &DemandSetFamily,
    limit: usize,
) -> Result<ConverseReport> {
    let k = family.users();
    if k > limit {
        return Err(Error::TooManyUsers {
            users: k,
            limit,
            method: "enumeration",
            hint: "; use the dynamic-programming converse instead",
        });
    }
    if k == 0 {
        return Ok(finish(family, ConverseMethod::IcEnum, Vec::new(), 1));
    }

    let best = (0..k)
        .into_par_iter()
        .map(|first| {
            let mut search = EnumSearch {
                family,
                order: vec![first],
                used: vec![false; k],
                best_total: 0,
                best_order: Vec::new(),
                visited: 0,
            };
            search.used[first] = true;
            let start = family.sets[first].clone();
            let size = start.count();
            search.descend(&start, size);
            (search.best_total, search.best_order, search.visited)
        })
        .collect::<Vec<_>>();

    let visited: u64 = best.iter().map(|b| b.2).sum();
    if visited != factorial(k) {
        return Err(Error::Internal(format!(
            "visited {visited} of {} permutations",
            factorial(k)
        )));
    }
    // Branches come back in first-element order; keep the earliest maximum.
    let (_, order, _) = best
        .into_iter()
        .reduce(|a, b| if b.0 > a.0 { b } else { a })
        .expect("at least one branch");
    Ok(finish(family, ConverseMethod::IcEnum, order, visited))
}

struct EnumSearch<'a> {
    family: &'a DemandSetFamily,
    order: Vec<usize>,
    used: Vec<bool>,
    best_total: usize,
    best_order: Vec<usize>,
    visited: u64,
}

impl EnumSearch<'_> {
    fn descend(&mut self, acc: &BitSet, total: usize) {
        let k = self.used.len();
        if self.order.len() == k {
            self.visited += 1;
            if self.best_order.is_empty() || total > self.best_total {
                self.best_total = total;
                self.best_order = self.order.clone();
            }
            return;
        }
        for next in 0..k {
            if self.used[next] {
                continue;
            }
            let inter = acc.intersection(&self.family.sets[next]);
            let size = inter.count();
            self.used[next] = true;
            self.order.push(next);
            self.descend(&inter, total + size);
            self.order.pop();
            self.used[next] = false;
        }
    }
}

pub fn ic_converse_dp(family: &DemandSetFamily) -> Result<ConverseReport> {
    let k = family.users();
    if k > DP_USER_LIMIT {
        return Err(Error::TooManyUsers {
            users: k,
            limit: DP_USER_LIMIT,
            method: "dynamic-programming",
            hint: "",
        });
    }
    let f_count = family.packets;
    if (f_count as u64) * (k as u64).max(1) > u32::MAX as u64 {
        return Err(Error::InvalidParameter(format!(
            "F * K = {} is too large for the subset table",
            f_count * k
        )));
    }

    // g[B] = number of packets missing for every user in B.
    let states = 1usize << k;
    let mut g = vec![0u32; states];
    for p in 0..f_count {
        let mask = (0..k)
            .filter(|&j| family.sets[j].contains(p))
            .fold(0usize, |m, j| m | 1 << j);
        g[mask] += 1;
    }
    for bit in 0..k {
        let b = 1usize << bit;
        for mask in 0..states {
            if mask & b == 0 {
                g[mask] += g[mask | b];
            }
        }
    }

    // best[B] = max over orders of B of the summed running intersections.
    let mut best = vec![0u32; states];
    for mask in 1..states {
        let mut m = mask;
        let mut inner = 0;
        while m != 0 {
            let j = m.trailing_zeros() as usize;
            m &= m - 1;
            inner = inner.max(best[mask & !(1 << j)]);
        }
        best[mask] = g[mask] + inner;
    }

    // Walk back from the full set, peeling off the smallest valid last user.
    let mut witness = Vec::with_capacity(k);
    let mut mask = states - 1;
    while mask != 0 {
        let rest = best[mask] - g[mask];
        let j = (0..k)
            .find(|&j| mask & (1 << j) != 0 && best[mask & !(1 << j)] == rest)
            .expect("some predecessor attains the maximum");
        witness.push(j);
        mask &= !(1 << j);
    }
    witness.reverse();

    let report = finish(family, ConverseMethod::IcDp, witness, states as u64);
    debug_assert_eq!(
        report.bound,
        Ratio::new(best[states - 1] as u64, f_count as u64)
    );
    Ok(report)
}

/// Greedy order: each step takes the remaining user whose set keeps the
/// running intersection largest, smallest index on ties. Every candidate
/// inspected counts as one intersection evaluation.
pub fn greedy_converse(family: &DemandSetFamily) -> ConverseReport {
    let k = family.users();
    let mut remaining: Vec<usize> = (0..k).collect();
    let mut acc = BitSet::full(family.packets);
    let mut witness = Vec::with_capacity(k);
    let mut evaluations = 0u64;
    while !remaining.is_empty() {
        let mut pick = 0;
        let mut pick_size = 0;
        for (pos, &j) in remaining.iter().enumerate() {
            evaluations += 1;
            let size = acc.intersection_count(&family.sets[j]);
            if pos == 0 || size > pick_size {
                pick = pos;
                pick_size = size;
            }
        }
        let j = remaining.remove(pick);
        acc.intersect_with(&family.sets[j]);
        witness.push(j);
    }
    finish(family, ConverseMethod::Greedy, witness, evaluations)
}
