//! Matrix-weighted graph model: definiteness-classified edge weights, the
//! matrix-valued Laplacian `L = C − A`, and the signed incidence matrix.
//!
//! Nodes are indexed from zero internally; every user-facing report and
//! file format labels them from one.

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

use crate::subspace::{self, Subspace};

/// Relative eigenvalue tolerance for definiteness classification.
pub const DEFAULT_CLASS_TOL: f64 = 1e-9;
/// Relative tolerance for the symmetry check on weight matrices.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("weight matrix is not symmetric (asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("weight matrix is numerically zero; zero weights denote absent edges")]
    ZeroMatrix,

    #[error("weight matrix is indefinite (λ_min {lambda_min:.3e}, λ_max {lambda_max:.3e})")]
    Indefinite { lambda_min: f64, lambda_max: f64 },

    #[error("edge ({u}, {v}) carries a {found}×{found} weight, expected {expected}×{expected}")]
    DimensionMismatch { u: usize, v: usize, found: usize, expected: usize },

    #[error("self loop at node {u}")]
    SelfLoop { u: usize },

    #[error("duplicate edge ({u}, {v})")]
    DuplicateEdge { u: usize, v: usize },

    #[error("edge ({u}, {v}) references a node outside 1..={n}")]
    NodeOutOfRange { u: usize, v: usize, n: usize },

    #[error("graph is disconnected: node {node} is unreachable from node 1")]
    Disconnected { node: usize },

    #[error("graph must have at least one node")]
    Empty,
}

/// Definiteness class of a symmetric weight matrix. The matrix-valued
/// sign function maps the positive classes to `+1` and the negative
/// classes to `−1`; the zero matrix is rejected as an edge weight.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignClass {
    PosDef,
    PosSemiDef,
    NegDef,
    NegSemiDef,
}

impl SignClass {
    /// `sgn(A)`: +1 for positive classes, −1 for negative classes.
    pub fn sign(self) -> i8 {
        match self {
            SignClass::PosDef | SignClass::PosSemiDef => 1,
            SignClass::NegDef | SignClass::NegSemiDef => -1,
        }
    }

    pub fn is_positive(self) -> bool {
        self.sign() > 0
    }

    /// Definite classes have a trivial kernel.
    pub fn is_definite(self) -> bool {
        matches!(self, SignClass::PosDef | SignClass::NegDef)
    }
}

impl std::fmt::Display for SignClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SignClass::PosDef => "positive definite",
            SignClass::PosSemiDef => "positive semi-definite",
            SignClass::NegDef => "negative definite",
            SignClass::NegSemiDef => "negative semi-definite",
        };
        f.write_str(s)
    }
}

/// A classified symmetric edge weight with its cached absolute value
/// `|A| = sgn(A)·A` and kernel basis.
///
/// Values of this type only come out of [`classify_weight`], so the class,
/// absolute entries and kernel are always mutually consistent.
#[derive(Clone, Debug)]
pub struct WeightMatrix {
    entries: DMatrix<f64>,
    abs_entries: DMatrix<f64>,
    sign_class: SignClass,
    null_basis: Subspace,
}

impl WeightMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// `|A| = sgn(A)·A`, positive semi-definite by construction.
    pub fn abs_entries(&self) -> &DMatrix<f64> {
        &self.abs_entries
    }

    pub fn sign_class(&self) -> SignClass {
        self.sign_class
    }

    /// `sgn(A)` as a scalar.
    pub fn sign(&self) -> i8 {
        self.sign_class.sign()
    }

    /// Orthonormal basis of `null(A)`.
    pub fn null_basis(&self) -> &Subspace {
        &self.null_basis
    }

    /// The weight with its sign negated: entries flip, the definiteness
    /// class mirrors, the absolute value and kernel are unchanged.
    pub fn negated(&self) -> WeightMatrix {
        let sign_class = match self.sign_class {
            SignClass::PosDef => SignClass::NegDef,
            SignClass::PosSemiDef => SignClass::NegSemiDef,
            SignClass::NegDef => SignClass::PosDef,
            SignClass::NegSemiDef => SignClass::PosSemiDef,
        };
        WeightMatrix {
            entries: -&self.entries,
            abs_entries: self.abs_entries.clone(),
            sign_class,
            null_basis: self.null_basis.clone(),
        }
    }
}

/// Classifies a symmetric matrix as a definite or semi-definite edge
/// weight via its eigendecomposition.
///
/// Eigenvalues within `ε = tol·max(1, maxabs(M))` of zero count as zero;
/// the kernel basis is taken from the same decomposition so the class and
/// the kernel dimension can never disagree.
pub fn classify_weight(m: &DMatrix<f64>, tol: f64) -> Result<WeightMatrix, GraphError> {
    let d = m.nrows();
    let max_abs = if d == 0 { 0.0 } else { m.amax() };
    let asymmetry = if m.ncols() != d {
        f64::INFINITY
    } else {
        (m - m.transpose()).amax()
    };
    if asymmetry > SYMMETRY_TOL * max_abs.max(1.0) {
        return Err(GraphError::NotSymmetric { asymmetry });
    }

    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let eps = tol * max_abs.max(1.0);
    let lambda_min = eig.eigenvalues.min();
    let lambda_max = eig.eigenvalues.max();

    if lambda_max <= eps && lambda_min >= -eps {
        return Err(GraphError::ZeroMatrix);
    }
    if lambda_min < -eps && lambda_max > eps {
        return Err(GraphError::Indefinite { lambda_min, lambda_max });
    }
    let positive = lambda_max > eps;

    let kernel_cols: Vec<usize> = (0..d)
        .filter(|&i| eig.eigenvalues[i].abs() <= eps)
        .collect();
    let mut basis = DMatrix::zeros(d, kernel_cols.len());
    for (j, &i) in kernel_cols.iter().enumerate() {
        basis.column_mut(j).copy_from(&eig.eigenvectors.column(i));
    }
    let null_basis = Subspace::from_orthonormal_basis(basis);

    let sign_class = match (positive, null_basis.dimension() == 0) {
        (true, true) => SignClass::PosDef,
        (true, false) => SignClass::PosSemiDef,
        (false, true) => SignClass::NegDef,
        (false, false) => SignClass::NegSemiDef,
    };
    let entries = m.clone();
    let abs_entries = &entries * f64::from(sign_class.sign());
    Ok(WeightMatrix {
        entries,
        abs_entries,
        sign_class,
        null_basis,
    })
}

/// An undirected edge between two zero-based node indices.
#[derive(Clone, Debug)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: WeightMatrix,
}

impl Edge {
    pub fn new(u: usize, v: usize, weight: WeightMatrix) -> Self {
        Edge { u, v, weight }
    }

    /// Unordered endpoint pair with the smaller index first.
    pub fn endpoints(&self) -> (usize, usize) {
        (self.u.min(self.v), self.u.max(self.v))
    }
}

/// A connected, simple, undirected graph whose edges carry classified
/// matrix weights of a common dimension. Construction validates every
/// invariant, so a value of this type is always a usable network.
#[derive(Clone, Debug)]
pub struct MatrixWeightedGraph {
    n: usize,
    d: usize,
    edges: Vec<Edge>,
}

impl MatrixWeightedGraph {
    /// Builds and validates a graph; `edges` use zero-based node indices.
    pub fn new(n: usize, d: usize, edges: Vec<Edge>) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut seen = std::collections::HashSet::new();
        for e in &edges {
            // Error labels are one-based to match all reports.
            if e.u >= n || e.v >= n {
                return Err(GraphError::NodeOutOfRange { u: e.u + 1, v: e.v + 1, n });
            }
            if e.u == e.v {
                return Err(GraphError::SelfLoop { u: e.u + 1 });
            }
            if !seen.insert(e.endpoints()) {
                let (u, v) = e.endpoints();
                return Err(GraphError::DuplicateEdge { u: u + 1, v: v + 1 });
            }
            if e.weight.dim() != d {
                return Err(GraphError::DimensionMismatch {
                    u: e.u + 1,
                    v: e.v + 1,
                    found: e.weight.dim(),
                    expected: d,
                });
            }
        }

        // Breadth-first reachability from node 1.
        let mut adjacency = vec![Vec::new(); n];
        for e in &edges {
            adjacency[e.u].push(e.v);
            adjacency[e.v].push(e.u);
        }
        let mut visited = vec![false; n];
        let mut queue = std::collections::VecDeque::from([0usize]);
        visited[0] = true;
        while let Some(node) = queue.pop_front() {
            for &next in &adjacency[node] {
                if !visited[next] {
                    visited[next] = true;
                    queue.push_back(next);
                }
            }
        }
        if let Some(node) = visited.iter().position(|&v| !v) {
            return Err(GraphError::Disconnected { node: node + 1 });
        }

        Ok(MatrixWeightedGraph { n, d, edges })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Per-agent state dimension `d`.
    pub fn state_dim(&self) -> usize {
        self.d
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// A copy of the graph with the listed edges (by index) sign-negated.
    pub fn negate_edges(&self, indices: &[usize]) -> MatrixWeightedGraph {
        let mut edges = self.edges.clone();
        for &k in indices {
            edges[k].weight = edges[k].weight.negated();
        }
        MatrixWeightedGraph { n: self.n, d: self.d, edges }
    }

    /// The matrix-valued Laplacian `L = C − A`, where `C` holds the block
    /// degrees `Σ_{j∈N_i} |A_ij|` and `A` is the block adjacency matrix.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let d = self.d;
        let mut lap = DMatrix::zeros(self.n * d, self.n * d);
        for e in &self.edges {
            let abs = e.weight.abs_entries();
            let w = e.weight.entries();
            for (i, j) in [(e.u, e.u), (e.v, e.v)] {
                let mut block = lap.view_mut((i * d, j * d), (d, d));
                block += abs;
            }
            for (i, j) in [(e.u, e.v), (e.v, e.u)] {
                let mut block = lap.view_mut((i * d, j * d), (d, d));
                block -= w;
            }
        }
        lap
    }

    /// The signed incidence matrix `H`: row block `k` carries `I_d` at
    /// endpoint `u` and `∓I_d` at endpoint `v`, the sign encoding whether
    /// edge `k` is positive or negative class.
    pub fn signed_incidence(&self) -> DMatrix<f64> {
        let d = self.d;
        let mut h = DMatrix::zeros(self.edges.len() * d, self.n * d);
        let identity = DMatrix::<f64>::identity(d, d);
        for (k, e) in self.edges.iter().enumerate() {
            h.view_mut((k * d, e.u * d), (d, d)).copy_from(&identity);
            let v_block = if e.weight.sign_class().is_positive() {
                -&identity
            } else {
                identity.clone()
            };
            h.view_mut((k * d, e.v * d), (d, d)).copy_from(&v_block);
        }
        h
    }

    /// The Laplacian assembled through the incidence factorization
    /// `Hᵀ·blkdiag{|A_k|}·H`, an independent construction of
    /// [`MatrixWeightedGraph::laplacian`] used to cross-check it.
    pub fn laplacian_via_incidence(&self) -> DMatrix<f64> {
        let d = self.d;
        let m = self.edges.len();
        let h = self.signed_incidence();
        let mut weights = DMatrix::zeros(m * d, m * d);
        for (k, e) in self.edges.iter().enumerate() {
            weights
                .view_mut((k * d, k * d), (d, d))
                .copy_from(e.weight.abs_entries());
        }
        h.transpose() * weights * h
    }

    /// Largest Laplacian eigenvalue; zero only for the edgeless single node.
    pub fn laplacian_lambda_max(&self) -> f64 {
        let eig = SymmetricEigen::new(self.laplacian());
        eig.eigenvalues.max()
    }

    /// Orthonormal basis of `null(L)`.
    pub fn laplacian_null_space(&self) -> Subspace {
        subspace::null_space(&self.laplacian(), subspace::DEFAULT_NULL_TOL)
    }
}
