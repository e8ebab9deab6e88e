//! Delivery-scheme synthesis and converse bounds for multi-access coded
//! caching with arbitrary user-to-cache access topologies.
//!
//! The pipeline: an [`AccessTopology`] and MN node placement give a
//! user-retrieve array [`RetrieveArray`]; its null cells form a conflict
//! graph whose proper colorings are exactly the delivery arrays for it. Load
//! lower bounds come from the index-coding converse on the same array.

pub mod bitset;
pub mod coloring;
pub mod combinatorics;
pub mod converse;
pub mod delivery;
pub mod error;
pub mod graph;
pub mod interchange;
pub mod macc;
pub mod pda;

pub use bitset::BitSet;
pub use coloring::{assemble_q, dsatur, repair, validate_coloring, VertexColoring};
pub use converse::{
    greedy_converse, ic_converse_dp, ic_converse_enum, permutation_value, ConverseMethod,
    ConverseReport, DemandSetFamily,
};
pub use delivery::{decode_all, load, make_schedule, DemandVector, FileLibrary};
pub use error::{Error, Result};
pub use graph::{build_conflict_graph, ConflictGraph, Graph};
pub use macc::{
    build_node_placement, derive_retrieve_array, generate_topology, AccessTopology,
    RetrieveArray, SystemConfig, TopologyFile,
};
pub use pda::{build_mn_pda, validate_pda, Cell, PdaArray, ValidationMode};
