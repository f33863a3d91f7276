//! Graph JSON format shared by every CLI command:
//!
//! ```json
//! { "nodes": n, "dimension": d,
//!   "edges": [ { "u": 1, "v": 2, "weight": [[...], ...] }, ... ] }
//! ```
//!
//! Node labels are one-based; weights are row-major `d×d` arrays of finite
//! doubles. Parsing classifies every weight and validates the graph, so a
//! successfully parsed file always yields a usable network.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{classify_weight, Edge, GraphError, MatrixWeightedGraph, DEFAULT_CLASS_TOL};
use nalgebra::DMatrix;

#[derive(Debug, Error)]
pub enum JsonError {
    #[error("invalid graph JSON: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("edge ({u}, {v}): weight row {row} has {found} entries, expected {expected}")]
    RaggedWeight { u: usize, v: usize, row: usize, found: usize, expected: usize },

    #[error("edge ({u}, {v}): weight contains a non-finite entry")]
    NonFinite { u: usize, v: usize },

    #[error("edge ({u}, {v}): {source}")]
    BadWeight { u: usize, v: usize, source: GraphError },

    #[error(transparent)]
    Graph(#[from] GraphError),

    #[error("{0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GraphFile {
    pub nodes: usize,
    pub dimension: usize,
    pub edges: Vec<EdgeFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct EdgeFile {
    pub u: usize,
    pub v: usize,
    pub weight: Vec<Vec<f64>>,
}

/// Parses and validates a graph from JSON text.
pub fn parse_graph(text: &str) -> Result<MatrixWeightedGraph, JsonError> {
    let file: GraphFile = serde_json::from_str(text)?;
    graph_from_file(&file)
}

/// Builds a validated graph from the deserialized file representation.
pub fn graph_from_file(file: &GraphFile) -> Result<MatrixWeightedGraph, JsonError> {
    let d = file.dimension;
    let mut edges = Vec::with_capacity(file.edges.len());
    for e in &file.edges {
        if e.weight.len() != d {
            return Err(JsonError::RaggedWeight {
                u: e.u,
                v: e.v,
                row: 0,
                found: e.weight.len(),
                expected: d,
            });
        }
        for (r, row) in e.weight.iter().enumerate() {
            if row.len() != d {
                return Err(JsonError::RaggedWeight {
                    u: e.u,
                    v: e.v,
                    row: r + 1,
                    found: row.len(),
                    expected: d,
                });
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(JsonError::NonFinite { u: e.u, v: e.v });
            }
        }
        let m = DMatrix::from_fn(d, d, |i, j| e.weight[i][j]);
        let weight = classify_weight(&m, DEFAULT_CLASS_TOL)
            .map_err(|source| JsonError::BadWeight { u: e.u, v: e.v, source })?;
        if e.u == 0 || e.v == 0 {
            return Err(JsonError::Graph(GraphError::NodeOutOfRange {
                u: e.u,
                v: e.v,
                n: file.nodes,
            }));
        }
        edges.push(Edge::new(e.u - 1, e.v - 1, weight));
    }
    Ok(MatrixWeightedGraph::new(file.nodes, d, edges)?)
}

/// The file representation of a graph, with one-based node labels.
pub fn graph_to_file(g: &MatrixWeightedGraph) -> GraphFile {
    let d = g.state_dim();
    GraphFile {
        nodes: g.node_count(),
        dimension: d,
        edges: g
            .edges()
            .iter()
            .map(|e| EdgeFile {
                u: e.u + 1,
                v: e.v + 1,
                weight: (0..d)
                    .map(|i| (0..d).map(|j| e.weight.entries()[(i, j)]).collect())
                    .collect(),
            })
            .collect(),
    }
}

/// Serializes a graph to pretty-printed JSON.
pub fn graph_to_string(g: &MatrixWeightedGraph) -> String {
    serde_json::to_string_pretty(&graph_to_file(g)).expect("graph serialization cannot fail")
}

/// Reads and parses a graph file from disk.
pub fn load_graph(path: &std::path::Path) -> Result<MatrixWeightedGraph, JsonError> {
    let text = std::fs::read_to_string(path)?;
    parse_graph(&text)
}
