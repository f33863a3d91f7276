//! Structural balance and balancing-set machinery.
//!
//! A bipartition `(V₁, V₂)` of the nodes defines a balancing set: the edges
//! whose sign negation would make the graph `(V₁, V₂)`-structurally
//! balanced. A balancing set whose member weights share a non-trivial
//! intersection of kernels is a non-trivial balancing set (NBS); those are
//! what this module enumerates, together with gauge matrices, the
//! positive-negative spanning tree test, path signs and kernels, and the
//! merge condition for attaching an outside vertex through semi-definite
//! paths.

use std::collections::HashMap;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::graph::MatrixWeightedGraph;
use crate::subspace::{self, Subspace};

/// Hard cap on bipartition enumeration; `2^(n−1)` partitions stay
/// desk-scale up to here and the tool refuses beyond it.
pub const MAX_ENUM_NODES: usize = 24;

#[derive(Debug, Error)]
pub enum BalanceError {
    #[error("bipartition enumeration is capped at {MAX_ENUM_NODES} nodes, got {n}")]
    TooManyNodes { n: usize },

    #[error("edge sequence does not form a walk")]
    NotAPath,

    #[error("path passes through core node {node} before its endpoint")]
    PathTouchesCore { node: usize },

    #[error("path ends at node {node}, which is outside the core")]
    PathMissesCore { node: usize },

    #[error("vertex {node} already belongs to the core")]
    VertexInCore { node: usize },
}

/// A node bipartition stored as per-node signs, `+1` for `V₁` and `−1` for
/// `V₂`. The canonical form pins node 1 to `V₁`, which identifies
/// `(V₁, V₂)` with `(V₂, V₁)` and the gauges `D` with `−D`.
///
/// Partitions order lexicographically with `V₁` membership first, the
/// order [`canonical_bipartitions`] enumerates in.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bipartition {
    signs: Vec<i8>,
}

impl Ord for Bipartition {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let key = |s: &i8| u8::from(*s < 0);
        self.signs
            .iter()
            .map(key)
            .cmp(other.signs.iter().map(key))
    }
}

impl PartialOrd for Bipartition {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Bipartition {
    /// Canonicalizes a sign vector; entries must be `±1`.
    pub fn new(mut signs: Vec<i8>) -> Self {
        assert!(!signs.is_empty());
        assert!(signs.iter().all(|&s| s == 1 || s == -1));
        if signs[0] < 0 {
            for s in &mut signs {
                *s = -*s;
            }
        }
        Bipartition { signs }
    }

    /// Partition number `mask` of `n` nodes in lexicographic order: node 1
    /// is pinned positive and the remaining signs read off the mask bits,
    /// most significant bit first.
    fn from_mask(n: usize, mask: u64) -> Self {
        let signs = (0..n)
            .map(|i| {
                if i == 0 || (mask >> (n - 1 - i)) & 1 == 0 {
                    1
                } else {
                    -1
                }
            })
            .collect();
        Bipartition { signs }
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    /// Sign of a zero-based node index.
    pub fn sign(&self, node: usize) -> i8 {
        self.signs[node]
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    /// Zero-based members of the positive (`+1`) or negative (`−1`) side.
    pub fn side(&self, sign: i8) -> Vec<usize> {
        self.signs
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == sign)
            .map(|(i, _)| i)
            .collect()
    }
}

/// All `2^(n−1)` canonical bipartitions of `n` nodes in lexicographic
/// order.
pub fn canonical_bipartitions(
    n: usize,
) -> Result<impl Iterator<Item = Bipartition>, BalanceError> {
    if n > MAX_ENUM_NODES {
        return Err(BalanceError::TooManyNodes { n });
    }
    assert!(n >= 1);
    let count = 1u64 << (n - 1);
    Ok((0..count).map(move |mask| Bipartition::from_mask(n, mask)))
}

/// The balancing set of a bipartition: its member edges, and the
/// intersection of their weight kernels.
#[derive(Clone, Debug)]
pub struct BalancingSet {
    pub partition: Bipartition,
    /// Indices into the graph's edge list, ascending.
    pub edges: Vec<usize>,
    /// `⋂ null(W(e))` over the member edges; all of `R^d` when the set is
    /// empty, matching `W(E^nb) = 0` for a balanced partition.
    pub null: Subspace,
}

impl BalancingSet {
    /// An empty balancing set certifies that the graph is already
    /// structurally balanced for this partition.
    pub fn is_balanced_certificate(&self) -> bool {
        self.edges.is_empty()
    }
}

// Membership test on a raw sign vector; global sign flips leave it
// unchanged, which canonicalization then makes unobservable.
fn balancing_edge_indices(g: &MatrixWeightedGraph, signs: &[i8]) -> Vec<usize> {
    g.edges()
        .iter()
        .enumerate()
        .filter(|(_, e)| {
            let same_side = signs[e.u] == signs[e.v];
            let positive = e.weight.sign_class().is_positive();
            (same_side && !positive) || (!same_side && positive)
        })
        .map(|(k, _)| k)
        .collect()
}

/// The balancing set of `p`: every edge that breaks the
/// `(V₁, V₂)`-balance pattern, i.e. negative-class weights within a side
/// or positive-class weights across sides.
pub fn balancing_set(g: &MatrixWeightedGraph, p: &Bipartition) -> BalancingSet {
    let d = g.state_dim();
    let edges = balancing_edge_indices(g, p.signs());
    let null = if edges.is_empty() {
        Subspace::full(d)
    } else if edges
        .iter()
        .any(|&k| g.edges()[k].weight.sign_class().is_definite())
    {
        // A definite member has a trivial kernel, so the intersection is
        // trivial without any further decomposition.
        Subspace::trivial(d)
    } else {
        let mats: Vec<&DMatrix<f64>> = edges
            .iter()
            .map(|&k| g.edges()[k].weight.entries())
            .collect();
        subspace::intersect_nulls(d, &mats)
    };
    BalancingSet {
        partition: p.clone(),
        edges,
        null,
    }
}

/// Two-colors the graph: crossing a positive edge keeps the color, a
/// negative edge flips it. Returns the balanced partition if no edge
/// conflicts, which for a connected graph is unique up to swapping sides.
pub fn is_structurally_balanced(g: &MatrixWeightedGraph) -> Option<Bipartition> {
    let n = g.node_count();
    let mut adjacency: Vec<Vec<(usize, i8)>> = vec![Vec::new(); n];
    for e in g.edges() {
        let sign = e.weight.sign();
        adjacency[e.u].push((e.v, sign));
        adjacency[e.v].push((e.u, sign));
    }
    let mut color = vec![0i8; n];
    color[0] = 1;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(node) = queue.pop_front() {
        for &(next, sign) in &adjacency[node] {
            let expected = color[node] * sign;
            if color[next] == 0 {
                color[next] = expected;
                queue.push_back(next);
            } else if color[next] != expected {
                return None;
            }
        }
    }
    // Validated graphs are connected, so every node is colored.
    Some(Bipartition::new(color))
}

/// Full balance analysis of a graph.
#[derive(Clone, Debug)]
pub struct BalanceReport {
    /// Balanced partition from two-coloring, if one exists.
    pub structurally_balanced: Option<Bipartition>,
    /// Every bipartition whose balancing set is empty or has a
    /// non-trivial kernel intersection, in lexicographic partition order.
    pub nbs_list: Vec<BalancingSet>,
    /// Exactly one entry in `nbs_list`.
    pub nbs_unique: bool,
    /// Edge indices of a spanning tree of definite edges, if one exists.
    pub pn_spanning_tree: Option<Vec<usize>>,
}

/// Scans every canonical bipartition for non-trivial balancing sets and
/// bundles the structural-balance and spanning-tree verdicts.
pub fn enumerate_nbs(g: &MatrixWeightedGraph) -> Result<BalanceReport, BalanceError> {
    let mut nbs_list = Vec::new();
    for p in canonical_bipartitions(g.node_count())? {
        let bs = balancing_set(g, &p);
        if bs.is_balanced_certificate() || bs.null.dimension() > 0 {
            nbs_list.push(bs);
        }
    }
    let nbs_unique = nbs_list.len() == 1;
    Ok(BalanceReport {
        structurally_balanced: is_structurally_balanced(g),
        nbs_unique,
        nbs_list,
        pn_spanning_tree: pn_spanning_tree(g),
    })
}

/// The gauge transformation of a bipartition: block-diagonal with
/// `σ_i·I_d` per node. Satisfies `D² = I` and `D = Dᵀ`.
pub fn gauge_matrix(p: &Bipartition, d: usize) -> DMatrix<f64> {
    let n = p.len();
    DMatrix::from_fn(n * d, n * d, |i, j| {
        if i == j {
            f64::from(p.sign(i / d))
        } else {
            0.0
        }
    })
}

/// The subspace `span{D(1_n ⊗ Ξ)}` for an orthonormal `Ξ`: each basis
/// vector `ξ` maps to the stacked vector with block `σ_i·ξ/√n`.
pub fn gauge_consensus_subspace(p: &Bipartition, basis: &Subspace) -> Subspace {
    let n = p.len();
    let d = basis.ambient_dim();
    let scale = 1.0 / (n as f64).sqrt();
    let mut stacked = DMatrix::zeros(n * d, basis.dimension());
    for (j, xi) in basis.basis().column_iter().enumerate() {
        for i in 0..n {
            let signed = xi * (f64::from(p.sign(i)) * scale);
            stacked.view_mut((i * d, j), (d, 1)).copy_from(&signed);
        }
    }
    Subspace::from_orthonormal_basis(stacked)
}

/// Extracts `{v ∈ R^d : D(1_n ⊗ v) ∈ S}` for the gauge of `p`, by
/// projecting the candidate columns `D(1_n ⊗ e_k)` onto the complement of
/// `S` and taking the kernel of the residual.
pub fn gauge_fixed_vectors(s: &Subspace, p: &Bipartition, d: usize) -> Subspace {
    let n = p.len();
    let mut candidates = DMatrix::zeros(n * d, d);
    for k in 0..d {
        for i in 0..n {
            candidates[(i * d + k, k)] = f64::from(p.sign(i));
        }
    }
    let projected = s.basis() * (s.basis().transpose() * &candidates);
    let residual = candidates - projected;
    subspace::null_space(&residual, subspace::DEFAULT_NULL_TOL)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, i: usize) -> usize {
        if self.parent[i] != i {
            let root = self.find(self.parent[i]);
            self.parent[i] = root;
        }
        self.parent[i]
    }

    fn union(&mut self, i: usize, j: usize) -> bool {
        let ri = self.find(i);
        let rj = self.find(j);
        if ri == rj {
            return false;
        }
        self.parent[ri] = rj;
        true
    }
}

/// Kruskal-style scan over the definite (not semi-definite) edges in
/// input order; returns the `n−1` tree edge indices if they span every
/// node.
pub fn pn_spanning_tree(g: &MatrixWeightedGraph) -> Option<Vec<usize>> {
    let n = g.node_count();
    let mut uf = UnionFind::new(n);
    let mut tree = Vec::with_capacity(n - 1);
    for (k, e) in g.edges().iter().enumerate() {
        if e.weight.sign_class().is_definite() && uf.union(e.u, e.v) {
            tree.push(k);
        }
    }
    (tree.len() == n.saturating_sub(1)).then_some(tree)
}

// Resolves an edge-index sequence into the node sequence it walks,
// fixing the first edge's orientation from the second.
fn walk_nodes(g: &MatrixWeightedGraph, path: &[usize]) -> Result<Vec<usize>, BalanceError> {
    if path.is_empty() || path.iter().any(|&k| k >= g.edge_count()) {
        return Err(BalanceError::NotAPath);
    }
    let ends = |k: usize| (g.edges()[k].u, g.edges()[k].v);
    let (u0, v0) = ends(path[0]);
    if path.len() == 1 {
        return Ok(vec![u0, v0]);
    }
    let (a1, b1) = ends(path[1]);
    let start = if v0 == a1 || v0 == b1 {
        u0
    } else if u0 == a1 || u0 == b1 {
        v0
    } else {
        return Err(BalanceError::NotAPath);
    };
    walk_nodes_from_inner(g, start, path)
}

fn walk_nodes_from_inner(
    g: &MatrixWeightedGraph,
    start: usize,
    path: &[usize],
) -> Result<Vec<usize>, BalanceError> {
    let mut nodes = vec![start];
    let mut cur = start;
    for &k in path {
        let e = &g.edges()[k];
        cur = if e.u == cur {
            e.v
        } else if e.v == cur {
            e.u
        } else {
            return Err(BalanceError::NotAPath);
        };
        nodes.push(cur);
    }
    Ok(nodes)
}

/// Product of `sgn(A)` over the walk's edges; a cycle is negative exactly
/// when it carries an odd number of negative-class weights.
pub fn path_sign(g: &MatrixWeightedGraph, path: &[usize]) -> Result<i8, BalanceError> {
    walk_nodes(g, path)?;
    Ok(path
        .iter()
        .map(|&k| g.edges()[k].weight.sign())
        .product())
}

/// The subspace generated by the member edges' kernels; trivial exactly
/// when the path is positive/negative definite.
pub fn path_null_space(
    g: &MatrixWeightedGraph,
    path: &[usize],
) -> Result<Subspace, BalanceError> {
    walk_nodes(g, path)?;
    let nulls: Vec<&Subspace> = path
        .iter()
        .map(|&k| g.edges()[k].weight.null_basis())
        .collect();
    Ok(subspace::sum(g.state_dim(), &nulls))
}

/// Merge condition for attaching `vertex` to a core subgraph through the
/// given paths: every path must agree on the product of its sign with the
/// core division sign of its endpoint, and the paths' kernels must
/// intersect trivially.
///
/// `core` lists the core nodes (zero-based) with their division signs;
/// each path starts at `vertex` and only its last node may lie in the
/// core. The caller is responsible for the core satisfying the
/// spanning-tree and uniqueness premises.
pub fn merge_check(
    g: &MatrixWeightedGraph,
    core: &[(usize, i8)],
    vertex: usize,
    paths: &[Vec<usize>],
) -> Result<bool, BalanceError> {
    let core_signs: HashMap<usize, i8> = core.iter().copied().collect();
    if core_signs.contains_key(&vertex) {
        return Err(BalanceError::VertexInCore { node: vertex + 1 });
    }
    let mut reference: Option<i8> = None;
    let mut kernels = Vec::with_capacity(paths.len());
    for path in paths {
        let nodes = walk_nodes_from_inner(g, vertex, path)?;
        for &node in &nodes[..nodes.len() - 1] {
            if core_signs.contains_key(&node) {
                return Err(BalanceError::PathTouchesCore { node: node + 1 });
            }
        }
        let end = *nodes.last().expect("walk has at least two nodes");
        let sigma = *core_signs
            .get(&end)
            .ok_or(BalanceError::PathMissesCore { node: end + 1 })?;
        let sign: i8 = path
            .iter()
            .map(|&k| g.edges()[k].weight.sign())
            .product::<i8>()
            * sigma;
        match reference {
            None => reference = Some(sign),
            Some(s) if s != sign => return Ok(false),
            Some(_) => {}
        }
        let nulls: Vec<&Subspace> = path
            .iter()
            .map(|&k| g.edges()[k].weight.null_basis())
            .collect();
        kernels.push(subspace::sum(g.state_dim(), &nulls));
    }
    let refs: Vec<&Subspace> = kernels.iter().collect();
    Ok(subspace::intersect(g.state_dim(), &refs).dimension() == 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{classify_weight, Edge, DEFAULT_CLASS_TOL};
    use crate::subspace::DEFAULT_CONTAIN_TOL;
    use nalgebra::DVector;
    use proptest::prelude::*;

    fn g1() -> MatrixWeightedGraph {
        crate::json::parse_graph(include_str!("../fixtures/g1.json")).unwrap()
    }

    fn g1_mod_a34() -> MatrixWeightedGraph {
        crate::json::parse_graph(include_str!("../fixtures/g1_mod_a34.json")).unwrap()
    }

    fn g1_a23_negdef() -> MatrixWeightedGraph {
        crate::json::parse_graph(include_str!("../fixtures/g1_a23_negdef.json")).unwrap()
    }

    fn g_counter() -> MatrixWeightedGraph {
        crate::json::parse_graph(include_str!("../fixtures/g_counter.json")).unwrap()
    }

    fn partition(signs: &[i8]) -> Bipartition {
        Bipartition::new(signs.to_vec())
    }

    fn vec3(a: f64, b: f64, c: f64) -> DVector<f64> {
        DVector::from_vec(vec![a, b, c])
    }

    fn weight3(entries: &[f64; 9]) -> crate::graph::WeightMatrix {
        classify_weight(&DMatrix::from_row_slice(3, 3, entries), DEFAULT_CLASS_TOL).unwrap()
    }

    #[test]
    fn bipartition_enumeration_counts_and_order() {
        let two: Vec<_> = canonical_bipartitions(2).unwrap().collect();
        assert_eq!(two.len(), 2);
        assert_eq!(two[0].signs(), &[1, 1]);
        assert_eq!(two[1].signs(), &[1, -1]);

        assert_eq!(canonical_bipartitions(5).unwrap().count(), 16);
        assert!(matches!(
            canonical_bipartitions(25),
            Err(BalanceError::TooManyNodes { n: 25 })
        ));

        let all: Vec<_> = canonical_bipartitions(4).unwrap().collect();
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(all, sorted, "enumeration must be lexicographic");
    }

    #[test]
    fn balancing_set_of_the_nbs_partition_of_g1() {
        let g = g1();
        let bs = balancing_set(&g, &partition(&[1, -1, -1, -1, 1]));
        assert_eq!(bs.edges, vec![1]); // edge (2,3)
        assert_eq!(bs.null.dimension(), 1);
        assert!(bs.null.contains(&vec3(1.0, 1.0, 0.0), DEFAULT_CONTAIN_TOL));
    }

    #[test]
    fn balancing_set_with_definite_member_is_trivial() {
        let g = g1();
        // V1 = {1,3,5}, V2 = {2,4} isolates the positive definite edge (3,4).
        let bs = balancing_set(&g, &partition(&[1, -1, 1, -1, 1]));
        assert_eq!(bs.edges, vec![2]);
        assert_eq!(bs.null.dimension(), 0);
    }

    #[test]
    fn balanced_partition_has_empty_set_and_full_kernel() {
        let g = g1().negate_edges(&[1]);
        let p = is_structurally_balanced(&g).expect("negating e23 balances G1");
        assert_eq!(p.signs(), &[1, -1, -1, -1, 1]);
        let bs = balancing_set(&g, &p);
        assert!(bs.is_balanced_certificate());
        assert_eq!(bs.null.dimension(), 3);
    }

    #[test]
    fn g1_is_structurally_imbalanced() {
        assert!(is_structurally_balanced(&g1()).is_none());
    }

    #[test]
    fn single_positive_edge_is_balanced_with_one_side() {
        let w = classify_weight(&DMatrix::from_row_slice(1, 1, &[1.0]), DEFAULT_CLASS_TOL).unwrap();
        let g = MatrixWeightedGraph::new(2, 1, vec![Edge::new(0, 1, w)]).unwrap();
        let p = is_structurally_balanced(&g).unwrap();
        assert_eq!(p.signs(), &[1, 1]);
    }

    #[test]
    fn g1_has_a_unique_nbs() {
        let report = enumerate_nbs(&g1()).unwrap();
        assert!(report.nbs_unique);
        assert_eq!(report.nbs_list.len(), 1);
        let nbs = &report.nbs_list[0];
        assert_eq!(nbs.partition.signs(), &[1, -1, -1, -1, 1]);
        assert_eq!(nbs.edges, vec![1]);
        assert!(nbs.null.contains(&vec3(1.0, 1.0, 0.0), DEFAULT_CONTAIN_TOL));
        assert!(report.structurally_balanced.is_none());
        assert!(report.pn_spanning_tree.is_none());
    }

    #[test]
    fn modified_a34_yields_two_nbs() {
        let report = enumerate_nbs(&g1_mod_a34()).unwrap();
        assert!(!report.nbs_unique);
        assert_eq!(report.nbs_list.len(), 2);
        let partitions: Vec<&[i8]> = report
            .nbs_list
            .iter()
            .map(|bs| bs.partition.signs())
            .collect();
        assert!(partitions.contains(&[1, -1, -1, -1, 1].as_slice()));
        assert!(partitions.contains(&[1, -1, 1, -1, 1].as_slice()));
        let edge_sets: Vec<&[usize]> =
            report.nbs_list.iter().map(|bs| bs.edges.as_slice()).collect();
        assert!(edge_sets.contains(&[1usize].as_slice())); // {e23}
        assert!(edge_sets.contains(&[2usize].as_slice())); // {e34}
    }

    #[test]
    fn counter_example_has_unique_nbs_with_three_edges() {
        let g = g_counter();
        let report = enumerate_nbs(&g).unwrap();
        assert!(report.nbs_unique);
        let nbs = &report.nbs_list[0];
        assert_eq!(nbs.partition.signs(), &[1, 1, 1, 1, 1, 1, 1]);
        let pairs: Vec<(usize, usize)> = nbs
            .edges
            .iter()
            .map(|&k| g.edges()[k].endpoints())
            .collect();
        assert_eq!(pairs, vec![(1, 2), (1, 4), (3, 5)]); // (2,3), (2,5), (4,6) one-based
        assert_eq!(nbs.null.dimension(), 2);
        assert!(report.pn_spanning_tree.is_none());
    }

    #[test]
    fn gauge_matrix_cases() {
        let identity = gauge_matrix(&partition(&[1, 1]), 2);
        assert!((identity - DMatrix::<f64>::identity(4, 4)).amax() < 1e-15);

        let mixed = gauge_matrix(&partition(&[1, -1]), 1);
        assert!((mixed - DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])).amax() < 1e-15);

        let d = gauge_matrix(&partition(&[1, -1, -1, -1, 1]), 3);
        for i in 0..5 {
            let expected = if i == 0 || i == 4 { 1.0 } else { -1.0 };
            for k in 0..3 {
                assert_eq!(d[(i * 3 + k, i * 3 + k)], expected);
            }
        }
    }

    #[test]
    fn gauge_matrix_squares_to_identity() {
        for signs in [[1i8, 1, -1].as_slice(), &[1, -1, -1, 1]] {
            let d = gauge_matrix(&partition(signs), 2);
            let n = d.nrows();
            assert!((&d * &d - DMatrix::<f64>::identity(n, n)).amax() <= 1e-14);
        }
    }

    #[test]
    fn g1_lacks_a_pn_spanning_tree_but_the_negdef_variant_has_one() {
        assert!(pn_spanning_tree(&g1()).is_none());

        let g = g1_a23_negdef();
        let tree = pn_spanning_tree(&g).expect("definite edges span the variant");
        assert_eq!(tree, vec![0, 1, 2, 4]); // e12, e23, e34, e45
    }

    #[test]
    fn path_sign_cases() {
        let g = g1();
        assert_eq!(path_sign(&g, &[2]).unwrap(), 1); // positive definite e34
        assert_eq!(path_sign(&g, &[0]).unwrap(), -1); // negative definite e12
        assert_eq!(path_sign(&g, &[0, 1]).unwrap(), 1); // two negative edges
        // Cycle 2-3-4-2 contains exactly one negative edge.
        assert_eq!(path_sign(&g, &[1, 2, 3]).unwrap(), -1);
        // Edges (1,2) and (4,5) share no endpoint.
        assert!(matches!(path_sign(&g, &[0, 4]), Err(BalanceError::NotAPath)));
    }

    #[test]
    fn path_null_space_cases() {
        let g = g1();
        // Definite path 1-2 has a trivial kernel.
        assert_eq!(path_null_space(&g, &[0]).unwrap().dimension(), 0);
        let single = path_null_space(&g, &[1]).unwrap();
        assert_eq!(single.dimension(), 1);
        assert!(single.contains(&vec3(1.0, 1.0, 0.0), DEFAULT_CONTAIN_TOL));
        // Walk 3-2-4 over e23 and e24 accumulates both kernels.
        let two = path_null_space(&g, &[1, 3]).unwrap();
        assert_eq!(two.dimension(), 2);
        assert!(two.contains(&vec3(0.0, 1.0, 0.0), DEFAULT_CONTAIN_TOL));
    }

    // Core 1-2 joined by a positive definite edge, with vertex 3 attached
    // through two semi-definite edges whose kernels are independent.
    fn merge_fixture(second_weight: [f64; 9]) -> MatrixWeightedGraph {
        let posdef = weight3(&[2.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        // Kernel span{[1,1,0]}.
        let kernel_a = weight3(&[2.0, -2.0, 0.0, -2.0, 2.0, 0.0, 0.0, 0.0, 1.0]);
        let second = weight3(&second_weight);
        MatrixWeightedGraph::new(
            3,
            3,
            vec![
                Edge::new(0, 1, posdef),
                Edge::new(2, 0, kernel_a),
                Edge::new(2, 1, second),
            ],
        )
        .unwrap()
    }

    #[test]
    fn merge_with_single_definite_path() {
        let g = merge_fixture([2.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let ok = merge_check(&g, &[(0, 1), (1, 1)], 2, &[vec![2]]).unwrap();
        assert!(ok);
    }

    #[test]
    fn merge_with_independent_semidefinite_kernels() {
        // Second path kernel span{[0,1,0]}.
        let g = merge_fixture([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let ok = merge_check(&g, &[(0, 1), (1, 1)], 2, &[vec![1], vec![2]]).unwrap();
        assert!(ok);
    }

    #[test]
    fn merge_fails_on_inconsistent_path_signs() {
        // Second path is negative semi-definite, flipping its sign product.
        let g = merge_fixture([-1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0]);
        let ok = merge_check(&g, &[(0, 1), (1, 1)], 2, &[vec![1], vec![2]]).unwrap();
        assert!(!ok);
    }

    #[test]
    fn merge_fails_on_shared_kernel_direction() {
        // Both paths carry the same kernel span{[1,1,0]}.
        let g = merge_fixture([2.0, -2.0, 0.0, -2.0, 2.0, 0.0, 0.0, 0.0, 1.0]);
        let ok = merge_check(&g, &[(0, 1), (1, 1)], 2, &[vec![1], vec![2]]).unwrap();
        assert!(!ok);
    }

    #[test]
    fn merge_rejects_bad_setups() {
        let g = merge_fixture([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            merge_check(&g, &[(0, 1), (1, 1), (2, 1)], 2, &[vec![1]]),
            Err(BalanceError::VertexInCore { node: 3 })
        ));
        // Walking 3-1-2 enters the core at node 1 before the endpoint.
        assert!(matches!(
            merge_check(&g, &[(0, 1), (1, 1)], 2, &[vec![1, 0]]),
            Err(BalanceError::PathTouchesCore { node: 1 })
        ));
        // A path ending outside the core is rejected as well.
        assert!(matches!(
            merge_check(&g, &[(1, 1)], 2, &[vec![1]]),
            Err(BalanceError::PathMissesCore { node: 1 })
        ));
    }

    #[test]
    fn theorem1_direction_one_to_two_on_g1() {
        let g = g1();
        let d = g.state_dim();
        let lap = g.laplacian();
        let report = enumerate_nbs(&g).unwrap();
        for bs in &report.nbs_list {
            let gauge = gauge_matrix(&bs.partition, d);
            for xi in bs.null.basis().column_iter() {
                let mut stacked = DVector::zeros(g.node_count() * d);
                for i in 0..g.node_count() {
                    stacked
                        .view_mut((i * d, 0), (d, 1))
                        .copy_from(&xi.into_owned());
                }
                let candidate = &gauge * stacked;
                assert!((&lap * candidate).norm() <= 1e-8);
            }
        }
    }

    #[test]
    fn theorem1_direction_two_to_one_extraction_on_g1() {
        let g = g1();
        let null_l = g.laplacian_null_space();
        let mut found = Vec::new();
        for p in canonical_bipartitions(g.node_count()).unwrap() {
            let fixed = gauge_fixed_vectors(&null_l, &p, g.state_dim());
            if fixed.dimension() > 0 {
                found.push((p, fixed));
            }
        }
        assert_eq!(found.len(), 1);
        let (p, fixed) = &found[0];
        assert_eq!(p.signs(), &[1, -1, -1, -1, 1]);
        assert_eq!(fixed.dimension(), 1);
        assert!(fixed.contains(&vec3(1.0, 1.0, 0.0), DEFAULT_CONTAIN_TOL));
        // The extracted vectors sit inside the balancing set's kernel.
        let bs = balancing_set(&g, p);
        for v in fixed.basis().column_iter() {
            assert!(bs.null.contains(&v.into_owned(), DEFAULT_CONTAIN_TOL));
        }
    }

    proptest! {
        #[test]
        fn balancing_edges_ignore_global_sign_flips(seed in 0u64..50, mask in 0u64..16) {
            let g = crate::verify::sample_graph(seed, 5, 3);
            let p = Bipartition::from_mask(g.node_count(), mask % (1 << (g.node_count() - 1)));
            let flipped: Vec<i8> = p.signs().iter().map(|s| -s).collect();
            prop_assert_eq!(
                balancing_edge_indices(&g, p.signs()),
                balancing_edge_indices(&g, &flipped)
            );
        }

        // Negating exactly the balancing set's edges must produce a graph
        // that two-colors to the same partition.
        #[test]
        fn negating_a_balancing_set_balances_the_graph(seed in 0u64..40, mask in 0u64..16) {
            let g = crate::verify::sample_graph(seed, 5, 3);
            let p = Bipartition::from_mask(g.node_count(), mask % (1 << (g.node_count() - 1)));
            let bs = balancing_set(&g, &p);
            let negated = g.negate_edges(&bs.edges);
            let balanced = is_structurally_balanced(&negated);
            prop_assert!(balanced.is_some());
            let balanced = balanced.unwrap();
            prop_assert_eq!(balanced.signs(), p.signs());
        }

        #[test]
        fn balance_verdict_matches_empty_balancing_set_search(seed in 0u64..40) {
            let g = crate::verify::sample_graph(seed, 5, 3);
            let by_coloring = is_structurally_balanced(&g).is_some();
            let by_enumeration = canonical_bipartitions(g.node_count())
                .unwrap()
                .any(|p| balancing_set(&g, &p).edges.is_empty());
            prop_assert_eq!(by_coloring, by_enumeration);
        }

        // Every NBS direction must be flat for the Laplacian.
        #[test]
        fn nbs_directions_lie_in_the_laplacian_kernel(seed in 0u64..60) {
            let g = crate::verify::sample_graph(seed, 5, 3);
            let lap = g.laplacian();
            let report = enumerate_nbs(&g).unwrap();
            for bs in &report.nbs_list {
                let consensus = gauge_consensus_subspace(&bs.partition, &bs.null);
                for col in consensus.basis().column_iter() {
                    prop_assert!((&lap * col.into_owned()).norm() <= 1e-8);
                }
            }
        }
    }
}
