//! File boundary with external coloring models: exported graph documents
//! with DSatur label colorings, and scoring of colorings that come back.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use macc_core::coloring::{dsatur, repair, validate_coloring, VertexColoring};
use macc_core::delivery::load;
use macc_core::graph::build_conflict_graph;
use macc_core::interchange::{
    export_graph_string, import_graph_str, ColoringDocument, GraphBundle, GraphMeta,
    SCHEMA_VERSION,
};
use macc_core::macc::{build_node_placement, derive_retrieve_array, PRNG_NAME};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::batch::{instance_key, instance_topology, parse_instance_key, write_atomic, GENERATOR};
use crate::config::ExperimentSpec;
use crate::metrics::MetricsRow;

pub const GRAPHS_DIR: &str = "graphs";
pub const LABELS_DIR: &str = "labels";
pub const STATS_FILE: &str = "stats.json";

/// Dataset-wide vertex-degree statistics used to standardize features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub schema: u32,
    pub graphs: usize,
    pub vertices: u64,
    pub degree_mean: f64,
    /// Population variance.
    pub degree_variance: f64,
    pub seed: u64,
    pub prng: String,
}

#[derive(Debug, Clone)]
pub struct DatasetSummary {
    pub graphs: usize,
    pub stats: DatasetStats,
}

/// Mean and population variance of a degree multiset given by its count,
/// sum and sum of squares.
fn degree_moments(n: u64, sum: u128, sum_sq: u128) -> (f64, f64) {
    if n == 0 {
        return (0.0, 0.0);
    }
    let n128 = n as u128;
    let mean = sum as f64 / n as f64;
    let var = (sum_sq * n128 - sum * sum) as f64 / (n128 * n128) as f64;
    (mean, var)
}

/// Write `graphs/<key>.json`, `labels/<key>.json` (DSatur colorings) and
/// `stats.json` under `spec.out`.
pub fn export_dataset(spec: &ExperimentSpec) -> Result<DatasetSummary> {
    let graphs_dir = spec.out.join(GRAPHS_DIR);
    let labels_dir = spec.out.join(LABELS_DIR);
    for dir in [&graphs_dir, &labels_dir] {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }

    let moments: Vec<(u64, u128, u128)> = spec
        .instances()
        .into_par_iter()
        .map(|(users, t, seed)| -> Result<(u64, u128, u128)> {
            let key = instance_key(users, spec.cache_nodes, t, seed);
            let topology = instance_topology(spec, users, seed)?;
            let u = derive_retrieve_array(&build_node_placement(spec.cache_nodes, t)?, &topology)?;
            let graph = build_conflict_graph(&u);
            let coloring = dsatur(graph.graph());
            let label = ColoringDocument::new(
                coloring.colors().to_vec(),
                coloring.used_colors(),
                "dsatur",
            );
            let degrees = graph.graph().degrees();
            let n = degrees.len() as u64;
            let sum: u128 = degrees.iter().map(|&d| d as u128).sum();
            let sum_sq: u128 = degrees.iter().map(|&d| (d as u128) * (d as u128)).sum();
            let bundle = GraphBundle {
                graph,
                meta: GraphMeta {
                    users,
                    cache_nodes: spec.cache_nodes,
                    t,
                    subpacketization: u.rows(),
                    seed,
                    topology: topology.to_one_based(),
                    generator: GENERATOR.into(),
                },
            };
            let name = format!("{key}.json");
            write_atomic(&graphs_dir.join(&name), export_graph_string(&bundle)?.as_bytes())?;
            write_atomic(&labels_dir.join(&name), label.to_json()?.as_bytes())?;
            Ok((n, sum, sum_sq))
        })
        .collect::<Result<_>>()?;

    let (n, sum, sum_sq) = moments
        .iter()
        .fold((0u64, 0u128, 0u128), |a, m| (a.0 + m.0, a.1 + m.1, a.2 + m.2));
    let (degree_mean, degree_variance) = degree_moments(n, sum, sum_sq);
    let stats = DatasetStats {
        schema: SCHEMA_VERSION,
        graphs: moments.len(),
        vertices: n,
        degree_mean,
        degree_variance,
        seed: spec.seed,
        prng: PRNG_NAME.into(),
    };
    let mut text = serde_json::to_string_pretty(&stats)?;
    text.push('\n');
    write_atomic(&spec.out.join(STATS_FILE), text.as_bytes())?;
    Ok(DatasetSummary {
        graphs: moments.len(),
        stats,
    })
}

fn json_stems(dir: &Path) -> Result<BTreeSet<String>> {
    let mut stems = BTreeSet::new();
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "json") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                stems.insert(stem.to_string());
            }
        }
    }
    Ok(stems)
}

fn keyed_row(key: &str) -> MetricsRow {
    match parse_instance_key(key) {
        Some((k, l, t, s)) => MetricsRow::instance(k, l, t, s),
        None => MetricsRow {
            n: 1,
            ..MetricsRow::default()
        },
    }
}

/// Score the colorings in `colorings` against the graph documents of the
/// same file name in `graphs`. Improper colorings are repaired first.
/// Unreadable, malformed or unmatched documents give rows with only an
/// error filled in.
pub fn import_and_score(colorings: &Path, graphs: &Path) -> Result<Vec<MetricsRow>> {
    let coloring_keys = json_stems(colorings)?;
    let graph_keys = json_stems(graphs)?;
    let keys: Vec<&String> = coloring_keys.union(&graph_keys).collect();
    Ok(keys
        .into_par_iter()
        .map(|key| {
            let mut row = keyed_row(key);
            let file = PathBuf::from(format!("{key}.json"));
            let result = if !graph_keys.contains(key) {
                Err(anyhow::anyhow!("no graph document for {key}"))
            } else if !coloring_keys.contains(key) {
                Err(anyhow::anyhow!("no coloring document for {key}"))
            } else {
                score_one(&colorings.join(&file), &graphs.join(&file), &mut row)
            };
            if let Err(e) = result {
                row.error = Some(format!("{e:#}"));
            }
            row.fill_ratios();
            row
        })
        .collect())
}

fn score_one(coloring_path: &Path, graph_path: &Path, row: &mut MetricsRow) -> Result<()> {
    let bundle = import_graph_str(&fs::read_to_string(graph_path)?)
        .with_context(|| format!("graph {}", graph_path.display()))?;
    let meta = &bundle.meta;
    *row = MetricsRow::instance(meta.users, meta.cache_nodes, meta.t, meta.seed);
    let g = bundle.graph.graph();
    row.subpacketization = Some(meta.subpacketization);
    row.vertices = Some(g.vertex_count());
    row.edges = Some(g.edge_count());

    let reference = dsatur(g).used_colors();
    row.s_dsatur = Some(reference);
    row.r_dsatur = Some(load(reference, meta.subpacketization));

    let doc = ColoringDocument::parse(&fs::read_to_string(coloring_path)?)
        .with_context(|| format!("coloring {}", coloring_path.display()))?;
    if doc.colors.len() != g.vertex_count() {
        bail!(
            "coloring has {} entries for {} vertices",
            doc.colors.len(),
            g.vertex_count()
        );
    }
    let proper = validate_coloring(g, &doc.colors)?.is_proper();
    row.external_proper = Some(proper);
    let fixed = if proper {
        VertexColoring::from_colors(doc.colors)?
    } else {
        repair(g, &doc.colors)?
    };
    row.s_external = Some(fixed.used_colors());
    row.r_external = Some(load(fixed.used_colors(), meta.subpacketization));
    Ok(())
}
