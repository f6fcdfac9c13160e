use nalgebra::linalg::{Schur, SymmetricEigen, SVD};
use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{DenseMatrix, LinalgError, Result};

const MAX_SWEEPS: usize = 10_000;

fn require_square(m: &DenseMatrix) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(LinalgError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        })
    }
}

/// Eigenvalues from a complex Schur decomposition.
pub fn eigenvalues(m: &DenseMatrix) -> Result<Vec<Complex64>> {
    require_square(m)?;
    let schur = Schur::try_new(m.as_inner().clone(), f64::EPSILON, MAX_SWEEPS)
        .ok_or(LinalgError::EigenFailure("Schur decomposition"))?;
    let values = schur
        .eigenvalues()
        .ok_or(LinalgError::EigenFailure("Schur eigenvalue extraction"))?;
    Ok(values.iter().copied().collect())
}

/// max |λᵢ(M)|
pub fn spectral_radius(m: &DenseMatrix) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Ascending eigenvalues of the Hermitian part of `m`.
pub fn hermitian_eigenvalues(m: &DenseMatrix) -> Result<Vec<f64>> {
    require_square(m)?;
    let h = m.hermitian_part().into_inner();
    let eig = SymmetricEigen::try_new(h, f64::EPSILON, MAX_SWEEPS)
        .ok_or(LinalgError::EigenFailure("Hermitian eigendecomposition"))?;
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Singular values in descending order.
pub fn singular_values(m: &DenseMatrix) -> Result<Vec<f64>> {
    let svd = SVD::try_new(m.as_inner().clone(), false, false, f64::EPSILON, MAX_SWEEPS)
        .ok_or(LinalgError::EigenFailure("singular value decomposition"))?;
    let mut values: Vec<f64> = svd.singular_values.iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

/// The `count` smallest singular values of a matrix with their right
/// singular vectors.
#[derive(Debug, Clone)]
pub struct SmallestSingular {
    /// Ascending.
    pub values: Vec<f64>,
    /// Orthonormal columns, one per entry of `values`.
    pub vectors: DenseMatrix,
    /// The next singular value above the returned ones, if any.
    pub next_value: Option<f64>,
}

pub fn singular_triplet_smallest(m: &DenseMatrix, count: usize) -> Result<SmallestSingular> {
    let (rows, cols) = m.shape();
    if count == 0 || count > cols {
        return Err(LinalgError::InvalidData(format!(
            "requested {count} singular triplets from a matrix with {cols} columns"
        )));
    }
    // A wide matrix is padded with zero rows so the full right basis is computed.
    let work = if rows < cols {
        let mut padded = DMatrix::zeros(cols, cols);
        padded.rows_mut(0, rows).copy_from(m.as_inner());
        padded
    } else {
        m.as_inner().clone()
    };
    let svd = SVD::try_new(work, false, true, f64::EPSILON, MAX_SWEEPS)
        .ok_or(LinalgError::EigenFailure("singular value decomposition"))?;
    let v_t = svd
        .v_t
        .as_ref()
        .ok_or(LinalgError::EigenFailure("singular vectors"))?;

    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));

    let values = order[..count].iter().map(|&i| svd.singular_values[i]).collect();
    let vectors = DMatrix::from_fn(cols, count, |r, c| v_t[(order[c], r)].conj());
    let next_value = order.get(count).map(|&i| svd.singular_values[i]);
    Ok(SmallestSingular {
        values,
        vectors: vectors.into(),
        next_value,
    })
}

/// Minimum-norm least-squares solution of `a·X ≈ b`.
pub fn least_squares(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.rows() != b.rows() {
        return Err(LinalgError::DimensionMismatch {
            op: "least squares",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let svd = SVD::try_new(a.as_inner().clone(), true, true, f64::EPSILON, MAX_SWEEPS)
        .ok_or(LinalgError::EigenFailure("singular value decomposition"))?;
    let largest = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = largest * a.rows().max(a.cols()) as f64 * f64::EPSILON;
    let x = svd
        .solve(b.as_inner(), cutoff)
        .map_err(|_| LinalgError::EigenFailure("least-squares solve"))?;
    Ok(x.into())
}

/// Orthonormal basis for the column space of a full-column-rank matrix.
pub fn orthonormal_basis(m: &DenseMatrix) -> DenseMatrix {
    m.as_inner().clone().qr().q().into()
}
