//! Dense complex linear algebra used by every solver.
//!
//! Everything is computed in complex double precision. Real inputs are
//! promoted with zero imaginary parts so there is a single code path.
//! Residuals and errors are always measured in the Frobenius norm.

mod lu;
mod spectral;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

pub use lu::{lu_factor, LuFactors, SINGULAR_RCOND};
pub use spectral::{
    eigenvalues, hermitian_eigenvalues, least_squares, orthonormal_basis, singular_triplet_smallest,
    singular_values, spectral_radius, SmallestSingular,
};

/// Errors raised by the dense kernel.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is numerically singular (rcond estimate {rcond:.3e})")]
    SingularMatrix { rcond: f64 },
    #[error("{0} did not converge")]
    EigenFailure(&'static str),
    #[error("invalid matrix data: {0}")]
    InvalidData(String),
}

pub type Result<T> = std::result::Result<T, LinalgError>;

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Complex double-precision dense matrix.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix(DMatrix<Complex64>);

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    /// 1x1 matrix holding `value`.
    pub fn scalar(value: Complex64) -> Self {
        Self(DMatrix::from_element(1, 1, value))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        Self(DMatrix::from_fn(rows, cols, f))
    }

    /// Builds a matrix from row-major entries, rejecting non-finite values.
    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::InvalidData(format!(
                "matrix must have positive dimensions, got {rows}x{cols}"
            )));
        }
        if entries.len() != rows * cols {
            return Err(LinalgError::InvalidData(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if let Some(pos) = entries.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LinalgError::InvalidData(format!(
                "non-finite entry at ({}, {})",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Self(DMatrix::from_row_slice(rows, cols, &entries)))
    }

    /// Real rows promoted to complex. Panics on ragged input.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == ncols), "ragged rows");
        Self::from_fn(nrows, ncols, |i, j| c64(rows[i][j], 0.0))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { c64(diag[i], 0.0) } else { c64(0.0, 0.0) })
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { diag[i] } else { Complex64::default() })
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: Complex64) {
        self.0[(i, j)] = value;
    }

    /// The (0, 0) entry; convenient for 1x1 states.
    pub fn first(&self) -> Complex64 {
        self.0[(0, 0)]
    }

    pub fn to_row_major(&self) -> Vec<Complex64> {
        let (r, c) = self.shape();
        (0..r).flat_map(|i| (0..c).map(move |j| (i, j))).map(|ij| self.0[ij]).collect()
    }

    pub fn as_inner(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn scale(&self, alpha: Complex64) -> Self {
        Self(self.0.map(|z| z * alpha))
    }

    pub fn scale_real(&self, alpha: f64) -> Self {
        Self(self.0.map(|z| z * alpha))
    }

    /// (M + Mᴴ) / 2
    pub fn hermitian_part(&self) -> Self {
        Self((&self.0 + self.0.adjoint()) * c64(0.5, 0.0))
    }

    /// ‖M − Mᴴ‖_F / max(1, ‖M‖_F)
    pub fn hermitian_defect(&self) -> f64 {
        fro(&(&self.0 - self.0.adjoint())) / self.fro_norm().max(1.0)
    }

    pub fn fro_norm(&self) -> f64 {
        fro(&self.0)
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        self.0
            .column_iter()
            .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn columns(&self, start: usize, count: usize) -> Self {
        Self(self.0.columns(start, count).into_owned())
    }

    pub fn powi(&self, exponent: u32) -> Self {
        assert!(self.is_square());
        let mut acc = Self::identity(self.rows());
        for _ in 0..exponent {
            acc = &acc * self;
        }
        acc
    }

    pub fn checked_mul(&self, rhs: &Self) -> Result<Self> {
        if self.cols() != rhs.rows() {
            return Err(LinalgError::DimensionMismatch {
                op: "multiply",
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        Ok(self * rhs)
    }

    pub fn checked_add(&self, rhs: &Self) -> Result<Self> {
        if self.shape() != rhs.shape() {
            return Err(LinalgError::DimensionMismatch {
                op: "add",
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        Ok(self + rhs)
    }
}

/// Frobenius norm, √(Σ|mᵢⱼ|²).
pub fn fro_norm(m: &DenseMatrix) -> f64 {
    m.fro_norm()
}

fn fro(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// ‖a − b‖_F / ‖a‖_F, or the absolute difference when `a` is zero.
pub fn relative_error(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    let diff = (a - b).fro_norm();
    let scale = a.fro_norm();
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

impl From<DMatrix<Complex64>> for DenseMatrix {
    fn from(m: DMatrix<Complex64>) -> Self {
        Self(m)
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DenseMatrix {}x{} [", self.rows(), self.cols())?;
        for i in 0..self.rows() {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols() {
                let z = self.get(i, j);
                if j > 0 {
                    write!(f, ", ")?;
                }
                if z.im == 0.0 {
                    write!(f, "{}", z.re)?;
                } else {
                    write!(f, "{}{:+}i", z.re, z.im)?;
                }
            }
        }
        write!(f, "]")
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident) => {
        impl<'a> $trait<&'a DenseMatrix> for &'a DenseMatrix {
            type Output = DenseMatrix;
            fn $method(self, rhs: &'a DenseMatrix) -> DenseMatrix {
                DenseMatrix($trait::$method(&self.0, &rhs.0))
            }
        }
        impl $trait<DenseMatrix> for DenseMatrix {
            type Output = DenseMatrix;
            fn $method(self, rhs: DenseMatrix) -> DenseMatrix {
                DenseMatrix($trait::$method(self.0, rhs.0))
            }
        }
        impl<'a> $trait<&'a DenseMatrix> for DenseMatrix {
            type Output = DenseMatrix;
            fn $method(self, rhs: &'a DenseMatrix) -> DenseMatrix {
                DenseMatrix($trait::$method(self.0, &rhs.0))
            }
        }
        impl<'a> $trait<DenseMatrix> for &'a DenseMatrix {
            type Output = DenseMatrix;
            fn $method(self, rhs: DenseMatrix) -> DenseMatrix {
                DenseMatrix($trait::$method(&self.0, rhs.0))
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);

impl Neg for &DenseMatrix {
    type Output = DenseMatrix;
    fn neg(self) -> DenseMatrix {
        DenseMatrix(-&self.0)
    }
}

impl Neg for DenseMatrix {
    type Output = DenseMatrix;
    fn neg(self) -> DenseMatrix {
        DenseMatrix(-self.0)
    }
}
