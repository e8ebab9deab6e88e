//! Batch pipeline: generate, derive, color, bound and simulate every
//! instance of an [`ExperimentSpec`].

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use macc_core::coloring::{assemble_q, dsatur_with_stats};
use macc_core::converse::{greedy_converse, ic_converse_dp, DemandSetFamily, DP_USER_LIMIT};
use macc_core::delivery::{decode_all, load, make_schedule, DemandVector, FileLibrary};
use macc_core::graph::build_conflict_graph;
use macc_core::interchange::{export_graph_string, ColoringDocument, GraphBundle, GraphMeta};
use macc_core::macc::{
    build_node_placement, derive_retrieve_array, generate_topology, AccessTopology,
    TopologyFile, PRNG_NAME,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{ExperimentSpec, Stage};
use crate::metrics::{aggregate, write_table, MetricsRow};

pub const METRICS_FILE: &str = "metrics.csv";
pub const RUN_FILE: &str = "run.txt";
pub const GENERATOR: &str = concat!("macc ", env!("CARGO_PKG_VERSION"));

/// Stream separating demand and content draws from topology draws.
const DEMAND_STREAM: u64 = 0xd3_6a_4d;

pub fn instance_key(users: usize, cache_nodes: usize, t: usize, seed: u64) -> String {
    format!("K{users}-L{cache_nodes}-t{t}-s{seed}")
}

/// Inverse of [`instance_key`].
pub fn parse_instance_key(key: &str) -> Option<(usize, usize, usize, u64)> {
    let mut parts = key.split('-');
    let mut field = |prefix: char| parts.next()?.strip_prefix(prefix)?.parse::<u64>().ok();
    let k = field('K')? as usize;
    let l = field('L')? as usize;
    let t = field('t')? as usize;
    let s = field('s')?;
    parts.next().is_none().then_some((k, l, t, s))
}

/// Write through a temporary sibling and rename into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub(crate) fn instance_topology(
    spec: &ExperimentSpec,
    users: usize,
    seed: u64,
) -> macc_core::Result<AccessTopology> {
    match &spec.topology {
        Some(file) => Ok(file.topology.clone()),
        None => generate_topology(users, spec.cache_nodes, spec.degree, seed),
    }
}

/// Everything one instance produced, text artifacts included.
#[derive(Debug, Clone)]
pub struct InstanceOutput {
    pub key: String,
    pub row: MetricsRow,
    pub artifacts: Vec<(&'static str, String)>,
    /// Converse report lines, when bounds were computed.
    pub bound_lines: Vec<String>,
    /// `K Lambda t seed S F R decode_ok`, when simulated.
    pub delivery_line: Option<String>,
}

pub fn run_instance(spec: &ExperimentSpec, users: usize, t: usize, seed: u64) -> InstanceOutput {
    let key = instance_key(users, spec.cache_nodes, t, seed);
    let mut out = InstanceOutput {
        key,
        row: MetricsRow::instance(users, spec.cache_nodes, t, seed),
        artifacts: Vec::new(),
        bound_lines: Vec::new(),
        delivery_line: None,
    };
    if let Err(e) = fill_instance(spec, t, seed, &mut out) {
        out.row.error = Some(format!("{e:#}"));
    }
    out.row.fill_ratios();
    out
}

fn fill_instance(
    spec: &ExperimentSpec,
    t: usize,
    seed: u64,
    out: &mut InstanceOutput,
) -> Result<()> {
    let users = out.row.users;
    let topology = instance_topology(spec, users, seed)?;
    out.artifacts.push((
        "topology.txt",
        TopologyFile {
            t,
            seed,
            topology: topology.clone(),
        }
        .to_string(),
    ));
    let u = derive_retrieve_array(&build_node_placement(spec.cache_nodes, t)?, &topology)?;
    let row = &mut out.row;
    row.subpacketization = Some(u.rows());

    let needs_graph = spec.has(Stage::Graph) || spec.has(Stage::Color) || spec.has(Stage::Simulate);
    let graph = needs_graph.then(|| build_conflict_graph(&u));
    if let Some(cg) = &graph {
        row.vertices = Some(cg.graph().vertex_count());
        row.edges = Some(cg.graph().edge_count());
    }
    if spec.has(Stage::Graph) {
        let bundle = GraphBundle {
            graph: graph.clone().expect("graph built"),
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
        out.artifacts.push(("graph.json", export_graph_string(&bundle)?));
    }

    let mut q = None;
    if spec.has(Stage::Color) || spec.has(Stage::Simulate) {
        let cg = graph.as_ref().expect("graph built");
        let (coloring, stats) = dsatur_with_stats(cg.graph());
        let s = coloring.used_colors();
        row.s_dsatur = Some(s);
        row.r_dsatur = Some(load(s, u.rows()));
        row.dsatur_steps = Some(stats.steps as u64);
        let assembled = assemble_q(&u, &coloring)?;
        if spec.has(Stage::Color) {
            let doc = ColoringDocument::new(coloring.colors().to_vec(), s, "dsatur");
            out.artifacts.push(("coloring.json", doc.to_json()?));
            out.artifacts.push(("delivery.txt", assembled.to_string()));
        }
        q = Some(assembled);
    }

    if spec.has(Stage::Bound) {
        let family = DemandSetFamily::from_retrieve_array(&u);
        let greedy = greedy_converse(&family);
        row.r_greedy = Some(greedy.bound);
        row.greedy_intersections = Some(greedy.work);
        out.bound_lines.push(greedy.to_string());
        if users <= DP_USER_LIMIT {
            let ic = ic_converse_dp(&family)?;
            row.r_ic = Some(ic.bound);
            row.ic_subsets = Some(ic.work);
            out.bound_lines.push(ic.to_string());
        } else {
            row.error = Some(format!("exact converse skipped: K = {users} above {DP_USER_LIMIT}"));
        }
        let mut text = out.bound_lines.join("\n");
        text.push('\n');
        out.artifacts.push(("bounds.txt", text));
    }

    if spec.has(Stage::Simulate) {
        let q = q.as_ref().expect("delivery array assembled");
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ DEMAND_STREAM);
        let files = users;
        let demands = (0..users).map(|_| rng.random_range(0..files)).collect();
        let demand = DemandVector::new(files, demands)?;
        let lib = FileLibrary::random(files, u.rows(), spec.packet_bits, rng.random())?;
        let schedule = make_schedule(q, &demand, &lib)?;
        let report = decode_all(&schedule, &u, q, &demand, &lib)?;
        row.decode_ok = Some(report.success());
        let r = load(schedule.len(), u.rows());
        let line = format!(
            "{users} {} {t} {seed} {} {} {}/{} {}",
            spec.cache_nodes,
            schedule.len(),
            u.rows(),
            r.numer(),
            r.denom(),
            u8::from(report.success())
        );
        out.artifacts.push(("delivery.log", format!("{line}\n")));
        out.delivery_line = Some(line);
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct BatchOutput {
    pub instances: Vec<InstanceOutput>,
    /// Instance rows followed by one aggregate row per configuration.
    pub table: Vec<MetricsRow>,
}

/// Run every instance of `spec` and write artifacts under `spec.out`:
/// `run.txt` with the resolved settings, `metrics.csv`, and one directory
/// per instance under `instances/`. With no stages only `run.txt` is
/// written.
pub fn run_batch(spec: &ExperimentSpec) -> Result<BatchOutput> {
    fs::create_dir_all(&spec.out)
        .with_context(|| format!("creating output directory {}", spec.out.display()))?;
    write_atomic(&spec.out.join(RUN_FILE), run_metadata(spec).as_bytes())?;
    if spec.stages.is_empty() {
        return Ok(BatchOutput {
            instances: Vec::new(),
            table: Vec::new(),
        });
    }

    let instances: Vec<InstanceOutput> = spec
        .instances()
        .into_par_iter()
        .map(|(k, t, seed)| run_instance(spec, k, t, seed))
        .collect();

    let root = spec.out.join("instances");
    instances.par_iter().try_for_each(|inst| -> Result<()> {
        let dir = root.join(&inst.key);
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        for (name, text) in &inst.artifacts {
            write_atomic(&dir.join(name), text.as_bytes())?;
        }
        Ok(())
    })?;

    let mut table: Vec<MetricsRow> = instances.iter().map(|i| i.row.clone()).collect();
    let agg = aggregate(&table);
    table.extend(agg);
    write_atomic(&spec.out.join(METRICS_FILE), write_table(&table).as_bytes())?;
    Ok(BatchOutput { instances, table })
}

pub(crate) fn run_metadata(spec: &ExperimentSpec) -> String {
    let mut text = format!("generator={GENERATOR}\nprng={PRNG_NAME}\n{}", spec.to_config());
    if let Some(file) = &spec.topology {
        for line in file.to_string().lines() {
            text.push_str("# topology ");
            text.push_str(line);
            text.push('\n');
        }
    }
    text
}
