//! Numerically robust subspace arithmetic over `R^m`.
//!
//! Every subspace is stored as a matrix with orthonormal columns; the zero
//! subspace has a basis with zero columns. Rank decisions use a
//! scale-relative singular-value cutoff with an absolute floor, which is
//! unambiguous for the small-integer weight matrices this crate deals in.

use nalgebra::{DMatrix, DVector};

/// Relative singular-value cutoff for rank decisions.
pub const DEFAULT_NULL_TOL: f64 = 1e-9;
/// Default tolerance for membership and equality tests.
pub const DEFAULT_CONTAIN_TOL: f64 = 1e-8;
/// Absolute floor under the relative cutoff.
const ABS_FLOOR: f64 = 1e-12;

fn cutoff(tol: f64, sigma_max: f64) -> f64 {
    (tol * sigma_max.max(1.0)).max(ABS_FLOOR)
}

/// A linear subspace of `R^m`, held as an orthonormal basis.
#[derive(Clone, Debug)]
pub struct Subspace {
    ambient: usize,
    basis: DMatrix<f64>,
}

impl Subspace {
    /// The zero subspace `{0}`.
    pub fn trivial(ambient: usize) -> Self {
        Self {
            ambient,
            basis: DMatrix::zeros(ambient, 0),
        }
    }

    /// All of `R^ambient`.
    pub fn full(ambient: usize) -> Self {
        Self {
            ambient,
            basis: DMatrix::identity(ambient, ambient),
        }
    }

    /// Wraps a matrix whose columns are already orthonormal.
    pub fn from_orthonormal_basis(basis: DMatrix<f64>) -> Self {
        debug_assert!(
            {
                let k = basis.ncols();
                let gram = basis.transpose() * &basis;
                (gram - DMatrix::identity(k, k)).amax() <= 1e-10
            },
            "basis columns are not orthonormal"
        );
        Self {
            ambient: basis.nrows(),
            basis,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn dimension(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Orthogonal projection of `x` onto the subspace, `B Bᵀ x`.
    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        if self.dimension() == 0 {
            return DVector::zeros(self.ambient);
        }
        &self.basis * (self.basis.transpose() * x)
    }

    /// True iff the projection residual `‖v − B Bᵀ v‖` is at most `tol·‖v‖`.
    pub fn contains(&self, v: &DVector<f64>, tol: f64) -> bool {
        (v - self.project(v)).norm() <= tol * v.norm()
    }

    /// Subspace equality: equal dimensions and mutual containment of all
    /// basis columns. Bases are non-unique, so projections are compared,
    /// never the basis matrices themselves.
    pub fn equals(&self, other: &Subspace, tol: f64) -> bool {
        if self.ambient != other.ambient || self.dimension() != other.dimension() {
            return false;
        }
        let contained = |a: &Subspace, b: &Subspace| {
            a.basis
                .column_iter()
                .all(|col| b.contains(&col.into_owned(), tol))
        };
        contained(self, other) && contained(other, self)
    }
}

/// Orthonormal basis of the kernel of `m`.
///
/// Singular values at or below `tol·max(1, σ_max)` are treated as zero.
pub fn null_space(m: &DMatrix<f64>, tol: f64) -> Subspace {
    let cols = m.ncols();
    // A thin SVD of a wide matrix omits part of the right-singular space;
    // padding with zero rows exposes every right-singular vector.
    let work = if m.nrows() < cols {
        let mut padded = DMatrix::zeros(cols, cols);
        padded.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
        padded
    } else {
        m.clone()
    };
    let svd = work.svd(false, true);
    let v_t = svd.v_t.expect("SVD computed without right-singular vectors");
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let eps = cutoff(tol, sigma_max);
    let kernel_rows: Vec<usize> = (0..v_t.nrows())
        .filter(|&i| svd.singular_values[i] <= eps)
        .collect();
    let mut basis = DMatrix::zeros(cols, kernel_rows.len());
    for (j, &i) in kernel_rows.iter().enumerate() {
        basis.column_mut(j).copy_from(&v_t.row(i).transpose());
    }
    Subspace {
        ambient: cols,
        basis,
    }
}

/// Orthonormal basis of the column space of `m`.
pub fn column_space(m: &DMatrix<f64>, tol: f64) -> Subspace {
    let rows = m.nrows();
    if m.ncols() == 0 {
        return Subspace::trivial(rows);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("SVD computed without left-singular vectors");
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let eps = cutoff(tol, sigma_max);
    let range_cols: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > eps)
        .collect();
    let mut basis = DMatrix::zeros(rows, range_cols.len());
    for (j, &i) in range_cols.iter().enumerate() {
        basis.column_mut(j).copy_from(&u.column(i));
    }
    Subspace {
        ambient: rows,
        basis,
    }
}

/// Intersection of the kernels of a family of matrices, computed as the
/// kernel of the vertical stack `[A₁; A₂; …]`.
///
/// The empty family yields all of `R^ambient`, the intersection over no
/// constraints.
pub fn intersect_nulls(ambient: usize, mats: &[&DMatrix<f64>]) -> Subspace {
    if mats.is_empty() {
        return Subspace::full(ambient);
    }
    let total_rows: usize = mats.iter().map(|m| m.nrows()).sum();
    let mut stacked = DMatrix::zeros(total_rows, ambient);
    let mut row = 0;
    for m in mats {
        assert_eq!(m.ncols(), ambient, "kernel intersection dimension mismatch");
        stacked
            .view_mut((row, 0), (m.nrows(), ambient))
            .copy_from(*m);
        row += m.nrows();
    }
    null_space(&stacked, DEFAULT_NULL_TOL)
}

/// Smallest subspace containing every input: the span of all basis columns.
pub fn sum(ambient: usize, subs: &[&Subspace]) -> Subspace {
    let total: usize = subs.iter().map(|s| s.dimension()).sum();
    if total == 0 {
        return Subspace::trivial(ambient);
    }
    let mut stacked = DMatrix::zeros(ambient, total);
    let mut col = 0;
    for s in subs {
        assert_eq!(s.ambient_dim(), ambient, "subspace sum dimension mismatch");
        stacked
            .view_mut((0, col), (ambient, s.dimension()))
            .copy_from(s.basis());
        col += s.dimension();
    }
    column_space(&stacked, DEFAULT_NULL_TOL)
}

/// Intersection of subspaces, computed by stacking the complement
/// projectors `I − Bₖ Bₖᵀ` and taking the kernel of the stack.
///
/// The empty family yields all of `R^ambient`.
pub fn intersect(ambient: usize, subs: &[&Subspace]) -> Subspace {
    if subs.is_empty() {
        return Subspace::full(ambient);
    }
    let mut stacked = DMatrix::zeros(ambient * subs.len(), ambient);
    for (k, s) in subs.iter().enumerate() {
        assert_eq!(
            s.ambient_dim(),
            ambient,
            "subspace intersection dimension mismatch"
        );
        let complement = DMatrix::identity(ambient, ambient) - s.basis() * s.basis().transpose();
        stacked
            .view_mut((k * ambient, 0), (ambient, ambient))
            .copy_from(&complement);
    }
    null_space(&stacked, DEFAULT_NULL_TOL)
}
