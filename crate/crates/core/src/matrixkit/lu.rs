use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{DenseMatrix, LinalgError, Result};

/// Factorizations whose reciprocal condition estimate falls below this are
/// reported as singular.
pub const SINGULAR_RCOND: f64 = 1e-14;

/// LU factors of a square matrix with partial (row) pivoting, `P·M = L·U`.
///
/// `L` is unit lower triangular and shares storage with `U`.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: DMatrix<Complex64>,
    /// Row `i` of `P·M` is row `perm[i]` of `M`.
    perm: Vec<usize>,
    rcond: f64,
}

/// Factors `m`, failing with [`LinalgError::SingularMatrix`] when an exact
/// zero pivot appears or the 1-norm reciprocal condition estimate is below
/// [`SINGULAR_RCOND`].
pub fn lu_factor(m: &DenseMatrix) -> Result<LuFactors> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let n = m.rows();
    let anorm = m.one_norm();
    let mut lu = m.as_inner().clone();
    let mut perm: Vec<usize> = (0..n).collect();

    for k in 0..n {
        let (offset, pivot_mag) = lu
            .view((k, k), (n - k, 1))
            .iter()
            .map(|z| z.norm())
            .enumerate()
            .fold((0, -1.0), |best, (i, v)| if v > best.1 { (i, v) } else { best });
        if pivot_mag == 0.0 || !pivot_mag.is_finite() {
            return Err(LinalgError::SingularMatrix { rcond: 0.0 });
        }
        let p = k + offset;
        if p != k {
            lu.swap_rows(k, p);
            perm.swap(k, p);
        }
        let pivot = lu[(k, k)];
        for i in k + 1..n {
            let factor = lu[(i, k)] / pivot;
            lu[(i, k)] = factor;
            if factor != Complex64::default() {
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= factor * u;
                }
            }
        }
    }

    let mut factors = LuFactors { lu, perm, rcond: 1.0 };
    let inv_norm = factors.inverse_one_norm_estimate();
    factors.rcond = if anorm == 0.0 || inv_norm == 0.0 {
        0.0
    } else {
        1.0 / (anorm * inv_norm)
    };
    if factors.rcond < SINGULAR_RCOND || !factors.rcond.is_finite() {
        return Err(LinalgError::SingularMatrix {
            rcond: factors.rcond,
        });
    }
    Ok(factors)
}

impl LuFactors {
    pub fn dim(&self) -> usize {
        self.lu.nrows()
    }

    /// Estimate of 1 / (‖M‖₁ ‖M⁻¹‖₁).
    pub fn rcond(&self) -> f64 {
        self.rcond
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Solves `M·X = rhs`.
    pub fn solve(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_rhs(rhs)?;
        let mut out = DMatrix::zeros(rhs.rows(), rhs.cols());
        let mut work = vec![Complex64::default(); self.dim()];
        for (j, col) in rhs.as_inner().column_iter().enumerate() {
            for (i, &p) in self.perm.iter().enumerate() {
                work[i] = col[p];
            }
            self.solve_in_place(&mut work);
            out.column_mut(j).copy_from_slice(&work);
        }
        Ok(out.into())
    }

    /// Solves `Mᴴ·X = rhs`.
    pub fn solve_adjoint(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_rhs(rhs)?;
        let mut out = DMatrix::zeros(rhs.rows(), rhs.cols());
        let mut work = vec![Complex64::default(); self.dim()];
        for (j, col) in rhs.as_inner().column_iter().enumerate() {
            work.copy_from_slice(col.as_slice());
            self.solve_adjoint_in_place(&mut work);
            let mut column = out.column_mut(j);
            for (i, &p) in self.perm.iter().enumerate() {
                column[p] = work[i];
            }
        }
        Ok(out.into())
    }

    pub fn inverse(&self) -> DenseMatrix {
        self.solve(&DenseMatrix::identity(self.dim()))
            .expect("identity conforms")
    }

    /// Reassembles `Pᵀ·L·U`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let n = self.dim();
        let l = DMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Greater => self.lu[(i, j)],
            std::cmp::Ordering::Equal => Complex64::new(1.0, 0.0),
            std::cmp::Ordering::Less => Complex64::default(),
        });
        let u = DMatrix::from_fn(n, n, |i, j| if i <= j { self.lu[(i, j)] } else { Complex64::default() });
        let plu = l * u;
        let mut out = DMatrix::zeros(n, n);
        for (i, &p) in self.perm.iter().enumerate() {
            out.row_mut(p).copy_from(&plu.row(i));
        }
        out.into()
    }

    fn check_rhs(&self, rhs: &DenseMatrix) -> Result<()> {
        if rhs.rows() != self.dim() {
            return Err(LinalgError::DimensionMismatch {
                op: "solve",
                left: (self.dim(), self.dim()),
                right: rhs.shape(),
            });
        }
        Ok(())
    }

    // L·U·x = b, b already permuted.
    #[allow(clippy::needless_range_loop)]
    fn solve_in_place(&self, x: &mut [Complex64]) {
        let n = self.dim();
        for i in 0..n {
            let mut acc = x[i];
            for k in 0..i {
                acc -= self.lu[(i, k)] * x[k];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for k in i + 1..n {
                acc -= self.lu[(i, k)] * x[k];
            }
            x[i] = acc / self.lu[(i, i)];
        }
    }

    // Uᴴ·Lᴴ·z = b; caller scatters z through the permutation.
    #[allow(clippy::needless_range_loop)]
    fn solve_adjoint_in_place(&self, x: &mut [Complex64]) {
        let n = self.dim();
        for i in 0..n {
            let mut acc = x[i];
            for k in 0..i {
                acc -= self.lu[(k, i)].conj() * x[k];
            }
            x[i] = acc / self.lu[(i, i)].conj();
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for k in i + 1..n {
                acc -= self.lu[(k, i)].conj() * x[k];
            }
            x[i] = acc;
        }
    }

    fn apply_inverse(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut work: Vec<_> = self.perm.iter().map(|&p| v[p]).collect();
        self.solve_in_place(&mut work);
        work
    }

    fn apply_inverse_adjoint(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut work = v.to_vec();
        self.solve_adjoint_in_place(&mut work);
        let mut out = vec![Complex64::default(); v.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            out[p] = work[i];
        }
        out
    }

    /// Hager/Higham lower bound on ‖M⁻¹‖₁ using a handful of solves.
    fn inverse_one_norm_estimate(&self) -> f64 {
        let n = self.dim();
        let one_norm = |v: &[Complex64]| v.iter().map(|z| z.norm()).sum::<f64>();

        let mut x = vec![Complex64::new(1.0 / n as f64, 0.0); n];
        let mut estimate = 0.0;
        for iteration in 0..5 {
            let y = self.apply_inverse(&x);
            let y_norm = one_norm(&y);
            if iteration > 0 && y_norm <= estimate {
                break;
            }
            estimate = y_norm;
            let signs: Vec<_> = y
                .iter()
                .map(|z| {
                    let m = z.norm();
                    if m == 0.0 {
                        Complex64::new(1.0, 0.0)
                    } else {
                        z / m
                    }
                })
                .collect();
            let z = self.apply_inverse_adjoint(&signs);
            let (j, zj) = z
                .iter()
                .map(|w| w.norm())
                .enumerate()
                .fold((0, -1.0), |best, (i, v)| if v > best.1 { (i, v) } else { best });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum();
            if zj <= ztx {
                break;
            }
            x = vec![Complex64::default(); n];
            x[j] = Complex64::new(1.0, 0.0);
        }

        // Alternating test vector guards against the estimator stalling.
        if n > 1 {
            let alt: Vec<_> = (0..n)
                .map(|i| {
                    let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                    Complex64::new(sign * (1.0 + i as f64 / (n - 1) as f64), 0.0)
                })
                .collect();
            let alt_est = 2.0 * one_norm(&self.apply_inverse(&alt)) / (3.0 * n as f64);
            estimate = estimate.max(alt_est);
        }
        estimate
    }
}
