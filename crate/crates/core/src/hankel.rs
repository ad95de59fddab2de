//! Hankel matrices of moment sequences and their positivity tests.

use thiserror::Error;

use crate::linalg::{leading_minors_ldl, Cholesky, LinalgError, Matrix, SymmetricEigen};
use crate::moments::MomentSequence;
use crate::real::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HankelError {
    #[error("Hankel matrix needs μ_{needed} but the sequence stops at μ_{max_order}")]
    OrderOverflow { needed: usize, max_order: usize },
    #[error("base offset must be even, got {0}")]
    OddOffset(usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `(N+1)×(N+1)` matrix with entries `μ_{m + stride·(i+j)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelMatrix<R> {
    entries: Matrix<R>,
    base_offset: usize,
    stride: usize,
}

impl<R: Real> HankelMatrix<R> {
    pub fn entries(&self) -> &Matrix<R> {
        &self.entries
    }

    pub fn into_entries(self) -> Matrix<R> {
        self.entries
    }

    pub fn base_offset(&self) -> usize {
        self.base_offset
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn dimension(&self) -> usize {
        self.entries.nrows()
    }

    /// Highest moment order the matrix reads.
    pub fn source_max_moment(&self) -> usize {
        self.base_offset + self.stride * 2 * (self.dimension() - 1)
    }
}

/// Hankel matrix `[μ_{m+i+j}]` of dimension `n + 1`.
pub fn build_hankel<R: Real>(
    seq: &MomentSequence<R>,
    m: usize,
    n: usize,
) -> Result<HankelMatrix<R>, HankelError> {
    if m % 2 == 1 {
        return Err(HankelError::OddOffset(m));
    }
    build_strided(seq.values(), m, 1, n)
}

/// `[μ_{m + stride·(i+j)}]`; stride 2 gives the parity blocks used for
/// parity-even (Stieltjes-reduced) sequences.
pub fn build_strided<R: Real>(
    values: &[R],
    m: usize,
    stride: usize,
    n: usize,
) -> Result<HankelMatrix<R>, HankelError> {
    let needed = m + stride * 2 * n;
    if needed >= values.len() {
        return Err(HankelError::OrderOverflow {
            needed,
            max_order: values.len() - 1,
        });
    }
    let entries = Matrix::from_fn(n + 1, n + 1, |i, j| values[m + stride * (i + j)].clone());
    Ok(HankelMatrix {
        entries,
        base_offset: m,
        stride,
    })
}

#[derive(Debug, Clone)]
pub struct PositivityReport<R> {
    pub is_positive_definite: bool,
    pub min_eigenvalue: R,
    /// Unit eigenvector of the minimal eigenvalue.
    pub witness_vector: Vec<R>,
    /// Leading principal minors Δ_{0,n}, n = 0..N.
    pub determinants: Vec<R>,
    pub tolerance: R,
}

impl<R: Real> PositivityReport<R> {
    /// Verdict of the determinant route: every leading minor strictly positive.
    pub fn minors_positive(&self) -> bool {
        let zero = self.min_eigenvalue.lift(0.0);
        self.determinants.iter().all(|d| *d > zero)
    }
}

/// Default definiteness threshold `ε·‖M‖₁·dim`.
pub fn default_tolerance<R: Real>(m: &Matrix<R>) -> R {
    let norm = m.norm1();
    let dim = norm.lift(m.nrows() as f64);
    norm.epsilon() * norm * dim
}

pub fn check_positivity<R: Real>(
    m: &HankelMatrix<R>,
    tolerance: Option<R>,
) -> Result<PositivityReport<R>, HankelError> {
    check_matrix_positivity(m.entries(), tolerance)
}

/// Positivity of any symmetric matrix by eigen-decomposition, with leading
/// minors for cross-validation.
pub fn check_matrix_positivity<R: Real>(
    m: &Matrix<R>,
    tolerance: Option<R>,
) -> Result<PositivityReport<R>, HankelError> {
    let tol = tolerance.unwrap_or_else(|| default_tolerance(m));
    let eig = SymmetricEigen::new(m)?;
    let min_eigenvalue = eig.min().clone();
    let witness_vector = eig.vector(0);
    let determinants = match Cholesky::new(m) {
        Ok(ch) => ch.leading_minors(),
        Err(_) => leading_minors_ldl(m),
    };
    Ok(PositivityReport {
        is_positive_definite: min_eigenvalue > tol,
        min_eigenvalue,
        witness_vector,
        determinants,
        tolerance: tol,
    })
}

/// Symmetric diagonal scaling `D M D` with `D = diag(1/√|M_ii|)`. Zero
/// diagonal entries are left unscaled.
pub fn jacobi_scale<R: Real>(m: &Matrix<R>) -> (Matrix<R>, Vec<R>) {
    let d: Vec<R> = (0..m.nrows())
        .map(|i| {
            let a = m[(i, i)].abs();
            if a.is_zero() {
                a.lift(1.0)
            } else {
                a.lift(1.0) / a.sqrt()
            }
        })
        .collect();
    let scaled = Matrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        d[i].clone() * m[(i, j)].clone() * d[j].clone()
    });
    (scaled, d)
}
