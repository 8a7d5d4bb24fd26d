//! Dense complex matrix kernel.
//!
//! Operators are `nalgebra` dense matrices of `Complex64`. Superoperators act on
//! column-stacked vectorizations, `vec(X)[j*d + i] = X[(i, j)]`, which is exactly
//! the column-major storage order of [`ComplexMatrix`]. Every superoperator matrix
//! in the crate relies on that convention, in particular
//! `vec(A X B) = kron(B^T, A) vec(X)`.

mod expm;
mod factor;
mod gemm;
mod lu;

pub use expm::{expm, Propagator};
pub use factor::{cholesky_lower, pivoted_cholesky, PivotedCholesky};
pub use gemm::matmul;
pub use lu::LuFactor;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Relative scale used by structural checks: `1e-9 * max(1, ||X||_F)`.
pub fn structural_tol(x: &ComplexMatrix) -> f64 {
    1e-9 * x.norm().max(1.0)
}

/// Which factor of a bipartite `A ⊗ B` space to trace out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Kronecker product, `kron(A,B)[(i*rB + k, j*cB + l)] = A[i,j] B[k,l]`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Partial trace of an operator on `H_A ⊗ H_B`.
pub fn partial_trace(
    x: &ComplexMatrix,
    dim_a: usize,
    dim_b: usize,
    over: Subsystem,
) -> Result<ComplexMatrix> {
    let n = dim_a * dim_b;
    if x.nrows() != n || x.ncols() != n {
        return Err(Error::Dimension(format!(
            "partial trace of a {}x{} operator with dims {dim_a} x {dim_b}",
            x.nrows(),
            x.ncols()
        )));
    }
    Ok(match over {
        Subsystem::A => ComplexMatrix::from_fn(dim_b, dim_b, |k, l| {
            (0..dim_a).map(|i| x[(i * dim_b + k, i * dim_b + l)]).sum()
        }),
        Subsystem::B => ComplexMatrix::from_fn(dim_a, dim_a, |i, j| {
            (0..dim_b).map(|k| x[(i * dim_b + k, j * dim_b + k)]).sum()
        }),
    })
}

pub fn vectorize(x: &ComplexMatrix) -> ComplexVector {
    ComplexVector::from_column_slice(x.as_slice())
}

/// Inverse of [`vectorize`] for square operators.
pub fn devectorize(v: &ComplexVector) -> Result<ComplexMatrix> {
    let d = (v.len() as f64).sqrt().round() as usize;
    if d * d != v.len() {
        return Err(Error::Dimension(format!(
            "vector of length {} is not a vectorized square operator",
            v.len()
        )));
    }
    Ok(ComplexMatrix::from_column_slice(d, d, v.as_slice()))
}

pub fn trace(x: &ComplexMatrix) -> C64 {
    x.diagonal().sum()
}

pub fn identity(d: usize) -> ComplexMatrix {
    ComplexMatrix::identity(d, d)
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b + b * a
}

pub fn fro_norm(x: &ComplexMatrix) -> f64 {
    x.norm()
}

/// Sum of singular values.
pub fn trace_norm(x: &ComplexMatrix) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.clone().singular_values().sum()
}

/// Maximum absolute column sum.
pub fn norm1(x: &ComplexMatrix) -> f64 {
    x.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn hermitian_part(x: &ComplexMatrix) -> ComplexMatrix {
    (x + x.adjoint()).scale(0.5)
}

/// Eigen-decomposition of a Hermitian matrix (the input is Hermitized first).
/// Eigenvalues are returned in ascending order with matching eigenvector columns.
pub fn hermitian_eigen(x: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let n = x.nrows();
    if n == 0 {
        return (Vec::new(), ComplexMatrix::zeros(0, 0));
    }
    let eig = hermitian_part(x).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn min_hermitian_eigenvalue(x: &ComplexMatrix) -> f64 {
    hermitian_eigen(x).0.first().copied().unwrap_or(0.0)
}

/// Moore-Penrose pseudo-inverse of a Hermitian matrix; eigenvalues with
/// magnitude at or below `tol` are treated as zero.
pub fn hermitian_pinv(x: &ComplexMatrix, tol: f64) -> ComplexMatrix {
    let (vals, vecs) = hermitian_eigen(x);
    let n = x.nrows();
    let mut out = ComplexMatrix::zeros(n, n);
    for (k, &lam) in vals.iter().enumerate() {
        if lam.abs() > tol {
            let v = vecs.column(k);
            out += (v * v.adjoint()).scale(1.0 / lam);
        }
    }
    out
}

/// Predicates shared by operators, states and coefficient matrices.
pub trait MatrixExt {
    fn dagger(&self) -> ComplexMatrix;
    fn is_hermitian(&self, tol: f64) -> bool;
    fn is_psd(&self, tol: f64) -> bool;
    fn is_trace_one(&self, tol: f64) -> bool;
}

impl MatrixExt for ComplexMatrix {
    fn dagger(&self) -> ComplexMatrix {
        self.adjoint()
    }

    fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && (self - self.adjoint()).norm() <= tol
    }

    fn is_psd(&self, tol: f64) -> bool {
        self.is_hermitian(tol) && min_hermitian_eigenvalue(self) >= -tol
    }

    fn is_trace_one(&self, tol: f64) -> bool {
        self.is_square() && (trace(self) - ONE).norm() <= tol
    }
}

/// `1/2 (X + X^†)` when the anti-Hermitian part is within `tol`, an error otherwise.
pub fn require_hermitian(x: &ComplexMatrix, tol: f64, what: &str) -> Result<ComplexMatrix> {
    if !x.is_square() {
        return Err(Error::Dimension(format!("{what} is not square")));
    }
    let defect = (x - x.adjoint()).norm() * 0.5;
    if defect > tol {
        return Err(Error::NotHermitian { what: what.to_string(), defect, tol });
    }
    Ok(hermitian_part(x))
}
