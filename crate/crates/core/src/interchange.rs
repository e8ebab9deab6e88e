//! JSON documents exchanged with external consumers: conflict graphs with
//! their instance metadata, and vertex colorings.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::combinatorics::binomial;
use crate::graph::{build_conflict_graph, ConflictGraph, Graph};
use crate::macc::{build_node_placement, derive_retrieve_array, AccessTopology};

pub const SCHEMA_VERSION: u32 = 1;

/// Instance summary attached to an exported graph. Topology lists are
/// 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphMeta {
    #[serde(rename = "K")]
    pub users: usize,
    #[serde(rename = "Lambda")]
    pub cache_nodes: usize,
    pub t: usize,
    #[serde(rename = "F")]
    pub subpacketization: usize,
    pub seed: u64,
    pub topology: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub generator: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphBundle {
    pub graph: ConflictGraph,
    pub meta: GraphMeta,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VertexDoc {
    id: usize,
    f: usize,
    k: usize,
    degree: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct GraphDoc {
    schema: u32,
    meta: GraphMeta,
    vertices: Vec<VertexDoc>,
    edges: Vec<[usize; 2]>,
}

#[derive(Deserialize)]
struct SchemaProbe {
    schema: u32,
}

fn doc_err(e: impl std::fmt::Display) -> Error {
    Error::Document(e.to_string())
}

fn check_schema(value: &serde_json::Value) -> Result<()> {
    let probe: SchemaProbe = serde_json::from_value(value.clone()).map_err(doc_err)?;
    if probe.schema != SCHEMA_VERSION {
        return Err(Error::UnsupportedSchema(probe.schema));
    }
    Ok(())
}

impl GraphBundle {
    pub fn validate(&self) -> Result<()> {
        let m = &self.meta;
        if m.subpacketization != self.graph.rows() || m.users != self.graph.cols() {
            return Err(Error::Document(format!(
                "meta (F={}, K={}) disagrees with a {}x{} graph grid",
                m.subpacketization,
                m.users,
                self.graph.rows(),
                self.graph.cols()
            )));
        }
        if m.topology.len() != m.users {
            return Err(Error::Document(format!(
                "topology lists {} users, meta says K = {}",
                m.topology.len(),
                m.users
            )));
        }
        if m.topology
            .iter()
            .flatten()
            .any(|&l| l == 0 || l > m.cache_nodes)
        {
            return Err(Error::Document(format!(
                "topology references a cache outside [1, {}]",
                m.cache_nodes
            )));
        }
        if m.t == 0 || m.t > m.cache_nodes {
            return Err(Error::Document(format!(
                "t = {} outside [1, Lambda = {}]",
                m.t, m.cache_nodes
            )));
        }
        if m.subpacketization != binomial(m.cache_nodes, m.t) {
            return Err(Error::Document(format!(
                "F = {} but C({}, {}) = {}",
                m.subpacketization,
                m.cache_nodes,
                m.t,
                binomial(m.cache_nodes, m.t)
            )));
        }
        let topology = AccessTopology::from_one_based(m.cache_nodes, &m.topology)
            .map_err(|e| Error::Document(format!("topology: {e}")))?;
        let u = derive_retrieve_array(&build_node_placement(m.cache_nodes, m.t)?, &topology)?;
        let expected = build_conflict_graph(&u);
        if expected.cells() != self.graph.cells()
            || expected.graph().edges() != self.graph.graph().edges()
        {
            return Err(Error::Document(
                "graph is not the conflict graph of the stated instance".into(),
            ));
        }
        Ok(())
    }
}

/// Serialize a bundle as a single-line JSON document followed by a newline.
pub fn export_graph<W: Write>(bundle: &GraphBundle, mut sink: W) -> Result<()> {
    bundle.validate()?;
    let g = bundle.graph.graph();
    let doc = GraphDoc {
        schema: SCHEMA_VERSION,
        meta: bundle.meta.clone(),
        vertices: bundle
            .graph
            .cells()
            .iter()
            .enumerate()
            .map(|(id, &(f, k))| VertexDoc {
                id,
                f: f + 1,
                k: k + 1,
                degree: g.degree(id),
            })
            .collect(),
        edges: g
            .edges()
            .iter()
            .map(|&(a, b)| [a as usize, b as usize])
            .collect(),
    };
    serde_json::to_writer(&mut sink, &doc).map_err(doc_err)?;
    sink.write_all(b"\n").map_err(doc_err)?;
    Ok(())
}

pub fn export_graph_string(bundle: &GraphBundle) -> Result<String> {
    let mut buf = Vec::new();
    export_graph(bundle, &mut buf)?;
    String::from_utf8(buf).map_err(doc_err)
}

pub fn import_graph<R: Read>(source: R) -> Result<GraphBundle> {
    let value: serde_json::Value = serde_json::from_reader(source).map_err(doc_err)?;
    check_schema(&value)?;
    let doc: GraphDoc = serde_json::from_value(value).map_err(doc_err)?;

    let n = doc.vertices.len();
    let mut cells = Vec::with_capacity(n);
    for (i, v) in doc.vertices.iter().enumerate() {
        if v.id != i {
            return Err(Error::Document(format!(
                "vertex ids must be 0..{n} in order, found {} at position {i}",
                v.id
            )));
        }
        if v.f == 0 || v.k == 0 {
            return Err(Error::Document(format!("vertex {i} has a 0 coordinate")));
        }
        cells.push((v.f - 1, v.k - 1));
    }
    let graph = Graph::from_edges(n, doc.edges.iter().map(|e| (e[0], e[1])))?;
    for (i, v) in doc.vertices.iter().enumerate() {
        if graph.degree(i) != v.degree {
            return Err(Error::Document(format!(
                "vertex {i} declares degree {} but has {} edges",
                v.degree,
                graph.degree(i)
            )));
        }
    }
    let graph = ConflictGraph::from_parts(
        doc.meta.subpacketization,
        doc.meta.users,
        cells,
        graph,
    )?;
    let bundle = GraphBundle {
        graph,
        meta: doc.meta,
    };
    bundle.validate()?;
    Ok(bundle)
}

pub fn import_graph_str(text: &str) -> Result<GraphBundle> {
    import_graph(text.as_bytes())
}

/// 1-based color per vertex id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColoringDocument {
    pub schema: u32,
    pub colors: Vec<u32>,
    pub num_colors: usize,
    pub source: String,
}

impl ColoringDocument {
    pub fn new(colors: Vec<u32>, num_colors: usize, source: impl Into<String>) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            colors,
            num_colors,
            source: source.into(),
        }
    }

    /// Structural checks: schema version and every color in `[1, num_colors]`.
    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::UnsupportedSchema(self.schema));
        }
        if let Some((v, &c)) = self
            .colors
            .iter()
            .enumerate()
            .find(|(_, &c)| c == 0 || c as usize > self.num_colors)
        {
            return Err(Error::Document(format!(
                "vertex {v} has color {c} outside [1, {}]",
                self.num_colors
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string(self).map_err(doc_err)?;
        s.push('\n');
        Ok(s)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(doc_err)?;
        check_schema(&value)?;
        let doc: ColoringDocument = serde_json::from_value(value).map_err(doc_err)?;
        doc.validate()?;
        Ok(doc)
    }
}
