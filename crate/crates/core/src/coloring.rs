//! Vertex colorings of conflict graphs: DSatur, conflict repair, and the
//! assembly of user-delivery arrays from a proper coloring.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::macc::RetrieveArray;
use crate::pda::{validate_pda, Cell, PdaArray, ValidationMode};

/// Colors per vertex id, compacted to the contiguous range `1..=used_colors`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexColoring {
    assignment: Vec<u32>,
    used_colors: usize,
}

impl VertexColoring {
    /// Relabel arbitrary positive colors onto `1..=S`, keeping their relative
    /// order.
    pub fn from_colors(colors: Vec<u32>) -> Result<Self> {
        if let Some(v) = colors.iter().position(|&c| c == 0) {
            return Err(Error::MissingAssignment(v));
        }
        let distinct: BTreeSet<u32> = colors.iter().copied().collect();
        let already_compact = distinct.iter().copied().eq(1..=distinct.len() as u32);
        let assignment = if already_compact {
            colors
        } else {
            let relabel: HashMap<u32, u32> = distinct
                .iter()
                .enumerate()
                .map(|(i, &c)| (c, i as u32 + 1))
                .collect();
            colors.iter().map(|c| relabel[c]).collect()
        };
        Ok(Self {
            assignment,
            used_colors: distinct.len(),
        })
    }

    pub fn colors(&self) -> &[u32] {
        &self.assignment
    }

    pub fn color(&self, v: usize) -> u32 {
        self.assignment[v]
    }

    pub fn used_colors(&self) -> usize {
        self.used_colors
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn into_colors(self) -> Vec<u32> {
        self.assignment
    }
}

/// Saturation degrees of a partially colored graph: for each vertex, the
/// number of distinct colors among its colored neighbors.
#[derive(Debug, Clone)]
pub struct SaturationState {
    seen: Vec<Vec<u64>>,
    saturation: Vec<usize>,
    colored: Vec<bool>,
    uncolored: usize,
}

impl SaturationState {
    pub fn new(n: usize) -> Self {
        Self {
            seen: vec![Vec::new(); n],
            saturation: vec![0; n],
            colored: vec![false; n],
            uncolored: n,
        }
    }

    pub fn saturation(&self, v: usize) -> usize {
        self.saturation[v]
    }

    pub fn is_colored(&self, v: usize) -> bool {
        self.colored[v]
    }

    pub fn uncolored(&self) -> usize {
        self.uncolored
    }

    fn has_neighbor_color(&self, v: usize, color: u32) -> bool {
        let (w, b) = (color as usize / 64, color as usize % 64);
        self.seen[v].get(w).is_some_and(|word| word & (1 << b) != 0)
    }

    /// Record that a neighbor of `v` now has `color`. Returns whether the
    /// saturation of `v` grew.
    fn note_neighbor_color(&mut self, v: usize, color: u32) -> bool {
        let (w, b) = (color as usize / 64, color as usize % 64);
        let words = &mut self.seen[v];
        if words.len() <= w {
            words.resize(w + 1, 0);
        }
        if words[w] & (1 << b) != 0 {
            return false;
        }
        words[w] |= 1 << b;
        self.saturation[v] += 1;
        true
    }

    /// Smallest positive color absent from the colored neighbors of `v`.
    fn first_free_color(&self, v: usize) -> u32 {
        let mut c = 1;
        while self.has_neighbor_color(v, c) {
            c += 1;
        }
        c
    }
}

/// Work done by one DSatur run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DsaturStats {
    pub steps: usize,
    pub saturation_updates: usize,
}

pub fn dsatur(graph: &Graph) -> VertexColoring {
    dsatur_with_stats(graph).0
}

/// Greedy coloring in order of maximum saturation, then maximum degree, then
/// smallest vertex id; each vertex takes the smallest color its neighbors
/// leave free.
pub fn dsatur_with_stats(graph: &Graph) -> (VertexColoring, DsaturStats) {
    let n = graph.vertex_count();
    let mut state = SaturationState::new(n);
    let mut colors = vec![0u32; n];
    let mut stats = DsaturStats::default();

    while state.uncolored > 0 {
        let mut best: Option<usize> = None;
        for v in (0..n).filter(|&v| !state.colored[v]) {
            best = match best {
                None => Some(v),
                Some(b) => {
                    let key_v = (state.saturation[v], graph.degree(v));
                    let key_b = (state.saturation[b], graph.degree(b));
                    // strict comparison keeps the smaller id on ties
                    Some(if key_v > key_b { v } else { b })
                }
            };
        }
        let u = best.expect("an uncolored vertex remains");
        let c = state.first_free_color(u);
        colors[u] = c;
        state.colored[u] = true;
        state.uncolored -= 1;
        stats.steps += 1;
        for w in graph.neighbors(u) {
            if !state.colored[w] && state.note_neighbor_color(w, c) {
                stats.saturation_updates += 1;
            }
        }
    }

    let coloring = VertexColoring::from_colors(colors).expect("dsatur colors every vertex");
    (coloring, stats)
}

/// Monochromatic edges of a coloring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColoringCheck {
    pub conflicts: Vec<(u32, u32)>,
}

impl ColoringCheck {
    pub fn is_proper(&self) -> bool {
        self.conflicts.is_empty()
    }

    /// Endpoints of conflicting edges, ascending.
    pub fn conflict_vertices(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self
            .conflicts
            .iter()
            .flat_map(|&(a, b)| [a as usize, b as usize])
            .collect();
        set.into_iter().collect()
    }
}

fn check_cover(graph: &Graph, colors: &[u32]) -> Result<()> {
    let n = graph.vertex_count();
    if colors.len() < n {
        return Err(Error::MissingAssignment(colors.len()));
    }
    if colors.len() > n {
        return Err(Error::DimensionMismatch(format!(
            "{} colors for {n} vertices",
            colors.len()
        )));
    }
    if let Some(v) = colors.iter().position(|&c| c == 0) {
        return Err(Error::MissingAssignment(v));
    }
    Ok(())
}

pub fn validate_coloring(graph: &Graph, colors: &[u32]) -> Result<ColoringCheck> {
    check_cover(graph, colors)?;
    let conflicts = graph
        .edges()
        .iter()
        .copied()
        .filter(|&(a, b)| colors[a as usize] == colors[b as usize])
        .collect();
    Ok(ColoringCheck { conflicts })
}

/// Repair an arbitrary coloring into a proper one.
///
/// Conflict vertices are visited one at a time, always taking the pending
/// vertex with the largest saturation under the current assignment (smallest
/// id on ties). A vertex that is no longer in conflict when its turn comes is
/// left alone; otherwise it gets the smallest already-used color absent from
/// its neighbors, or `max(used) + 1` when every used color is taken.
pub fn repair(graph: &Graph, colors: &[u32]) -> Result<VertexColoring> {
    check_cover(graph, colors)?;
    let n = graph.vertex_count();
    let mut colors = colors.to_vec();
    let mut used: BTreeSet<u32> = colors.iter().copied().collect();

    // neighbor color multiplicities; the map size is the saturation degree
    let mut around: Vec<HashMap<u32, u32>> = vec![HashMap::new(); n];
    for &(a, b) in graph.edges() {
        let (a, b) = (a as usize, b as usize);
        *around[a].entry(colors[b]).or_default() += 1;
        *around[b].entry(colors[a]).or_default() += 1;
    }
    let in_conflict =
        |v: usize, colors: &[u32], around: &[HashMap<u32, u32>]| around[v].contains_key(&colors[v]);

    let mut pending: Vec<usize> = (0..n).filter(|&v| in_conflict(v, &colors, &around)).collect();

    while !pending.is_empty() {
        let mut pick = 0;
        for i in 1..pending.len() {
            let (v, b) = (pending[i], pending[pick]);
            if around[v].len() > around[b].len() || (around[v].len() == around[b].len() && v < b)
            {
                pick = i;
            }
        }
        let v = pending.swap_remove(pick);
        if !in_conflict(v, &colors, &around) {
            continue;
        }
        let new = used
            .iter()
            .copied()
            .find(|c| !around[v].contains_key(c))
            .unwrap_or_else(|| used.last().copied().unwrap_or(0) + 1);
        used.insert(new);

        let old = std::mem::replace(&mut colors[v], new);
        for w in graph.neighbors(v) {
            let counts = &mut around[w];
            if let Some(cnt) = counts.get_mut(&old) {
                *cnt -= 1;
                if *cnt == 0 {
                    counts.remove(&old);
                }
            }
            *counts.entry(new).or_default() += 1;
        }
    }

    let check = validate_coloring(graph, &colors)?;
    if !check.is_proper() {
        return Err(Error::Internal(format!(
            "repair left {} conflicting edges",
            check.conflicts.len()
        )));
    }
    VertexColoring::from_colors(colors)
}

/// Fill the null cells of `u` (row-major vertex order) with their colors.
/// Rejects colorings whose result breaks the delivery conditions.
pub fn assemble_q(u: &RetrieveArray, coloring: &VertexColoring) -> Result<PdaArray> {
    let nulls = u.null_count();
    if coloring.len() != nulls {
        return Err(Error::DimensionMismatch(format!(
            "{} colors for {nulls} null cells",
            coloring.len()
        )));
    }
    let mut cells = Vec::with_capacity(u.rows() * u.cols());
    let mut next = 0;
    for f in 0..u.rows() {
        for k in 0..u.cols() {
            if u.is_star(f, k) {
                cells.push(Cell::Star);
            } else {
                cells.push(Cell::Code(coloring.color(next)));
                next += 1;
            }
        }
    }
    let q = PdaArray::new(u.rows(), u.cols(), cells)?;
    let report = validate_pda(&q, ValidationMode::DeliveryOnly);
    if !report.passed() {
        return Err(Error::ImproperColoring(report.violations.len()));
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_conflict_graph;

    fn dedicated_three_u() -> RetrieveArray {
        RetrieveArray::parse_grid("* . .\n. * .\n. . *").unwrap()
    }

    #[test]
    fn dsatur_on_dedicated_three() {
        let cg = build_conflict_graph(&dedicated_three_u());
        let coloring = dsatur(cg.graph());
        assert_eq!(coloring.used_colors(), 3);
        let at = |f: usize, k: usize| coloring.color(cg.vertex_of(f - 1, k - 1).unwrap());
        assert_eq!(at(1, 2), at(2, 1));
        assert_eq!(at(1, 3), at(3, 1));
        assert_eq!(at(2, 3), at(3, 2));
        assert!(validate_coloring(cg.graph(), coloring.colors())
            .unwrap()
            .is_proper());

        let q = assemble_q(&dedicated_three_u(), &coloring).unwrap();
        assert_eq!(q.get(0, 1), q.get(1, 0));
        assert_eq!(q.get(0, 2), q.get(2, 0));
        assert_eq!(q.get(1, 2), q.get(2, 1));
        assert_eq!(q.code_count(), 3);
    }

    #[test]
    fn dsatur_trivial_graphs() {
        let empty = Graph::from_edges(5, []).unwrap();
        let c = dsatur(&empty);
        assert_eq!(c.used_colors(), 1);
        assert!(c.colors().iter().all(|&x| x == 1));

        for n in 1..8 {
            assert_eq!(dsatur(&Graph::complete(n)).used_colors(), n);
        }
        assert_eq!(dsatur(&Graph::from_edges(0, []).unwrap()).used_colors(), 0);
    }

    #[test]
    fn dsatur_tie_breaks() {
        // path 0-1-2: vertex 1 has the largest degree and is colored first
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(dsatur(&g).colors(), &[2, 1, 2]);
        // two disjoint edges: equal keys resolve to the smallest id
        let g = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert_eq!(dsatur(&g).colors(), &[1, 2, 1, 2]);
    }

    #[test]
    fn all_ones_on_dedicated_three_conflicts_everywhere() {
        let cg = build_conflict_graph(&dedicated_three_u());
        let check = validate_coloring(cg.graph(), &[1; 6]).unwrap();
        assert_eq!(check.conflicts.len(), 12);
        assert_eq!(check.conflict_vertices(), (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn validate_requires_full_cover() {
        let g = Graph::complete(3);
        assert_eq!(
            validate_coloring(&g, &[1, 2]),
            Err(Error::MissingAssignment(2))
        );
        assert_eq!(
            validate_coloring(&g, &[1, 0, 2]),
            Err(Error::MissingAssignment(1))
        );
        assert!(validate_coloring(&g, &[1, 2, 3, 4]).is_err());
    }

    #[test]
    fn repair_with_two_conflict_edges() {
        // Vertex order v12, v13, v21, v23, v31, v32. The coloring has
        // two monochromatic edges: v13-v32 (color 2) and v23-v31 (color 3).
        let cg = build_conflict_graph(&dedicated_three_u());
        let initial = [1, 2, 1, 3, 3, 2];
        let check = validate_coloring(cg.graph(), &initial).unwrap();
        assert_eq!(check.conflicts, vec![(1, 5), (3, 4)]);
        assert_eq!(check.conflict_vertices(), vec![1, 3, 4, 5]);

        // All four conflict vertices see colors {1,2,3}. v13 goes first on the
        // id tie and needs a fresh color 4; v23 then takes 2 and v31, v32 are
        // already clean.
        let fixed = repair(cg.graph(), &initial).unwrap();
        assert_eq!(fixed.colors(), &[1, 4, 1, 2, 3, 2]);
        assert_eq!(fixed.used_colors(), 4);
    }

    #[test]
    fn repair_prefers_higher_saturation() {
        // With v23 starting at color 2 the conflicts are v13-v23 and v13-v32.
        // v23 and v32 (saturation 3) outrank v13 (saturation 2); v23 is
        // recolored to the fresh color 4, after which v13 takes 3 and v32 is
        // clean.
        let cg = build_conflict_graph(&dedicated_three_u());
        let initial = [1, 2, 1, 2, 3, 2];
        let check = validate_coloring(cg.graph(), &initial).unwrap();
        assert_eq!(check.conflict_vertices(), vec![1, 3, 5]);
        let fixed = repair(cg.graph(), &initial).unwrap();
        assert_eq!(fixed.colors(), &[1, 3, 1, 4, 3, 2]);
        assert!(validate_coloring(cg.graph(), fixed.colors())
            .unwrap()
            .is_proper());
    }

    #[test]
    fn repair_triangle_all_ones() {
        let g = Graph::complete(3);
        // v0: neighbors {1} -> fresh 2; v1: neighbors {2,1} -> fresh 3; v2 clean
        let fixed = repair(&g, &[1, 1, 1]).unwrap();
        assert_eq!(fixed.colors(), &[2, 3, 1]);
        assert_eq!(fixed.used_colors(), 3);
    }

    #[test]
    fn repair_keeps_proper_input() {
        let cg = build_conflict_graph(&dedicated_three_u());
        let c = dsatur(cg.graph());
        assert_eq!(repair(cg.graph(), c.colors()).unwrap(), c);
    }

    #[test]
    fn repair_compacts_gapped_colors() {
        let g = Graph::from_edges(3, [(0, 1)]).unwrap();
        let fixed = repair(&g, &[5, 9, 5]).unwrap();
        assert_eq!(fixed.colors(), &[1, 2, 1]);
    }

    #[test]
    fn assemble_all_star() {
        let u = RetrieveArray::parse_grid("* *\n* *").unwrap();
        let empty = VertexColoring::from_colors(vec![]).unwrap();
        let q = assemble_q(&u, &empty).unwrap();
        assert_eq!(q.to_string(), "* *\n* *\n");
    }

    #[test]
    fn assemble_rejects_improper() {
        let bad = VertexColoring::from_colors(vec![1; 6]).unwrap();
        assert!(matches!(
            assemble_q(&dedicated_three_u(), &bad),
            Err(Error::ImproperColoring(_))
        ));
        let short = VertexColoring::from_colors(vec![1; 5]).unwrap();
        assert!(matches!(
            assemble_q(&dedicated_three_u(), &short),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn compaction_preserves_order() {
        let c = VertexColoring::from_colors(vec![7, 3, 7, 10]).unwrap();
        assert_eq!(c.colors(), &[2, 1, 2, 3]);
        assert_eq!(c.used_colors(), 3);
        assert!(VertexColoring::from_colors(vec![1, 0]).is_err());
    }
}
