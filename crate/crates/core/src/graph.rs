//! Undirected graphs and the conflict graph of a user-retrieve array.
//!
//! Vertices of a conflict graph are the null cells of `U` in row-major order.
//! Two null cells conflict, and are joined by an edge, when they could not
//! carry the same multicast index: they share a row or a column, or one of
//! their two crossing cells is not a star.

use rayon::prelude::*;

use crate::bitset::{BitSet, Ones};
use crate::error::{Error, Result};
use crate::macc::RetrieveArray;

/// Vertex count above which neighbor sets are stored as packed bit rows.
pub const DENSE_THRESHOLD: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Adjacency {
    Lists(Vec<Vec<u32>>),
    Bits(Vec<BitSet>),
}

/// Simple undirected graph on `0..n` with a sorted edge list and precomputed
/// neighbor sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(u32, u32)>,
    degrees: Vec<usize>,
    adjacency: Adjacency,
}

impl Graph {
    /// Build from an edge list, rejecting self-loops, out-of-range ids and
    /// duplicates. Pair orientation and list order are normalized.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        Self::from_edges_with_threshold(n, edges, DENSE_THRESHOLD)
    }

    pub fn from_edges_with_threshold(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        dense_threshold: usize,
    ) -> Result<Self> {
        let mut list = Vec::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::Document(format!("self-loop on vertex {a}")));
            }
            if a >= n || b >= n {
                return Err(Error::Document(format!(
                    "edge [{a}, {b}] references a vertex outside 0..{n}"
                )));
            }
            list.push((a.min(b) as u32, a.max(b) as u32));
        }
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Document(format!(
                "duplicate edge [{}, {}]",
                w[0].0, w[0].1
            )));
        }
        Ok(Self::from_sorted_unchecked(n, list, dense_threshold))
    }

    fn from_sorted_unchecked(n: usize, edges: Vec<(u32, u32)>, dense_threshold: usize) -> Self {
        let mut degrees = vec![0usize; n];
        for &(a, b) in &edges {
            degrees[a as usize] += 1;
            degrees[b as usize] += 1;
        }
        let adjacency = if n > dense_threshold {
            let mut rows = vec![BitSet::new(n); n];
            for &(a, b) in &edges {
                rows[a as usize].insert(b as usize);
                rows[b as usize].insert(a as usize);
            }
            Adjacency::Bits(rows)
        } else {
            let mut lists: Vec<Vec<u32>> =
                degrees.iter().map(|&d| Vec::with_capacity(d)).collect();
            for &(a, b) in &edges {
                lists[a as usize].push(b);
                lists[b as usize].push(a);
            }
            for l in &mut lists {
                l.sort_unstable();
            }
            Adjacency::Lists(lists)
        };
        Self {
            n,
            edges,
            degrees,
            adjacency,
        }
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n as u32)
            .flat_map(|a| (a + 1..n as u32).map(move |b| (a, b)))
            .collect();
        Self::from_sorted_unchecked(n, edges, DENSE_THRESHOLD)
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(min, max)` pairs in lexicographic order.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn degree(&self, v: usize) -> usize {
        self.degrees[v]
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn max_degree(&self) -> usize {
        self.degrees.iter().copied().max().unwrap_or(0)
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.adjacency, Adjacency::Bits(_))
    }

    pub fn neighbors(&self, v: usize) -> Neighbors<'_> {
        match &self.adjacency {
            Adjacency::Lists(l) => Neighbors::List(l[v].iter()),
            Adjacency::Bits(rows) => Neighbors::Bits(rows[v].iter()),
        }
    }

    pub fn is_adjacent(&self, u: usize, v: usize) -> bool {
        match &self.adjacency {
            Adjacency::Lists(l) => l[u].binary_search(&(v as u32)).is_ok(),
            Adjacency::Bits(rows) => rows[u].contains(v),
        }
    }
}

pub enum Neighbors<'a> {
    List(std::slice::Iter<'a, u32>),
    Bits(Ones<'a>),
}

impl Iterator for Neighbors<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        match self {
            Neighbors::List(it) => it.next().map(|&v| v as usize),
            Neighbors::Bits(it) => it.next(),
        }
    }
}

/// Conflict graph together with the `(f, k)` cell (0-based) behind each
/// vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConflictGraph {
    rows: usize,
    cols: usize,
    cells: Vec<(usize, usize)>,
    graph: Graph,
}

/// Whether two distinct null cells of `u` conflict.
#[inline]
pub fn cells_conflict(u: &RetrieveArray, a: (usize, usize), b: (usize, usize)) -> bool {
    a.0 == b.0 || a.1 == b.1 || !u.is_star(a.0, b.1) || !u.is_star(b.0, a.1)
}

pub fn build_conflict_graph(u: &RetrieveArray) -> ConflictGraph {
    build_conflict_graph_with_threshold(u, DENSE_THRESHOLD)
}

pub fn build_conflict_graph_with_threshold(
    u: &RetrieveArray,
    dense_threshold: usize,
) -> ConflictGraph {
    let cells: Vec<(usize, usize)> = (0..u.rows())
        .flat_map(|f| (0..u.cols()).map(move |k| (f, k)))
        .filter(|&(f, k)| !u.is_star(f, k))
        .collect();
    let n = cells.len();
    let edges: Vec<(u32, u32)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let a = cells[i];
            let cells = &cells;
            (i + 1..n)
                .filter(move |&j| cells_conflict(u, a, cells[j]))
                .map(move |j| (i as u32, j as u32))
        })
        .collect();
    ConflictGraph {
        rows: u.rows(),
        cols: u.cols(),
        cells,
        graph: Graph::from_sorted_unchecked(n, edges, dense_threshold),
    }
}

impl ConflictGraph {
    /// Assemble from parts, checking that cells fit the grid and follow
    /// row-major order.
    pub fn from_parts(
        rows: usize,
        cols: usize,
        cells: Vec<(usize, usize)>,
        graph: Graph,
    ) -> Result<Self> {
        if cells.len() != graph.vertex_count() {
            return Err(Error::Document(format!(
                "{} cells for {} vertices",
                cells.len(),
                graph.vertex_count()
            )));
        }
        if let Some(&(f, k)) = cells.iter().find(|&&(f, k)| f >= rows || k >= cols) {
            return Err(Error::Document(format!(
                "cell ({}, {}) outside a {rows}x{cols} grid",
                f + 1,
                k + 1
            )));
        }
        if cells.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Document(
                "vertex cells must be distinct and in row-major order".into(),
            ));
        }
        Ok(Self {
            rows,
            cols,
            cells,
            graph,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cell(&self, v: usize) -> (usize, usize) {
        self.cells[v]
    }

    pub fn cells(&self) -> &[(usize, usize)] {
        &self.cells
    }

    pub fn vertex_of(&self, f: usize, k: usize) -> Option<usize> {
        self.cells.binary_search(&(f, k)).ok()
    }
}
