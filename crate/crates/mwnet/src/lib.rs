//! Analysis of signed matrix-weighted networks.
//!
//! Edges carry symmetric positive or negative (semi-)definite matrices as
//! weights. This crate builds the matrix-valued Laplacian and signed
//! incidence matrix, detects structural balance, enumerates non-trivial
//! balancing sets (edge sets whose sign negation balances the graph and
//! whose weight kernels intersect non-trivially), tests for
//! positive-negative spanning trees, and simulates the consensus dynamics
//! `ẋ = −Lx` to classify and predict steady states — trivial, consensus,
//! bipartite, or clustered.
//!
//! | Module | Responsibility |
//! |--------|----------------|
//! | [`graph`] | weight classification, graph model, Laplacian, incidence |
//! | [`subspace`] | kernels, intersections, sums, projections |
//! | [`balance`] | balancing sets, NBS enumeration, gauges, trees, paths |
//! | [`dynamics`] | simulation, exact steady state, classification, prediction |
//! | [`verify`] | random instances and numeric property suites |
//! | [`json`] | the graph file format |

pub mod balance;
pub mod dynamics;
pub mod graph;
pub mod json;
pub mod subspace;
pub mod verify;

pub use balance::{
    balancing_set, canonical_bipartitions, enumerate_nbs, gauge_matrix, is_structurally_balanced,
    merge_check, path_null_space, path_sign, pn_spanning_tree, BalanceReport, BalancingSet,
    Bipartition,
};
pub use dynamics::{
    classify_steady_state, default_t_final, predict_from_nbs, simulate, steady_state_exact,
    NbsPrediction, SteadyStateClass, Trajectory,
};
pub use graph::{classify_weight, Edge, GraphError, MatrixWeightedGraph, SignClass, WeightMatrix};
pub use subspace::Subspace;
