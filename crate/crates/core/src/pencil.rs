//! Stable deflating subspace of a regular pencil `A − λB`.
//!
//! The inverse-free iteration `A_{k+1} = A_1·Δ·A_k`, `B_{k+1} = B_k·Δ·B_1`
//! with `Δ = (A_1 + B_k)⁻¹` comes from the operator
//! `F(X_a, X_b) = (A_a·Δ·A_b, B_b·Δ·B_a)`, `Δ = (A_a + B_b)⁻¹`. `A_k`
//! converges to a matrix whose right null space is the span of the
//! eigenvectors with `|λ| < 1`.

use crate::engine::{
    conclude, iterate_observed, ConfigError, ConvergenceReport, MatrixState, RunFailure, SemigroupOperator,
    SolverConfig,
};
use crate::matrixkit::{
    least_squares, lu_factor, singular_triplet_smallest, singular_values, DenseMatrix, LinalgError,
};

/// Ratio `σ_{m+1} / σ_m` of the final `A_k` below which the null space
/// dimension is considered ambiguous.
pub const RANK_GAP: f64 = 1e2;

/// Growth of `‖B_k‖_F` over `‖B_1‖_F` beyond which the run is flagged.
pub const B_GROWTH_LIMIT: f64 = 1e8;

#[derive(Debug, Clone, PartialEq)]
pub struct PencilState {
    pub a: DenseMatrix,
    pub b: DenseMatrix,
}

impl PencilState {
    pub fn new(a: DenseMatrix, b: DenseMatrix) -> Result<Self, LinalgError> {
        if !a.is_square() {
            return Err(LinalgError::NotSquare { rows: a.rows(), cols: a.cols() });
        }
        if a.shape() != b.shape() {
            return Err(LinalgError::DimensionMismatch { op: "pencil", left: a.shape(), right: b.shape() });
        }
        Ok(Self { a, b })
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }
}

impl MatrixState for PencilState {
    fn fields(&self) -> Vec<&DenseMatrix> {
        vec![&self.a, &self.b]
    }
}

/// `(A_a·Δ·A_b, B_b·Δ·B_a)` with `Δ = (A_a + B_b)⁻¹`.
pub fn pencil_operator(xa: &PencilState, xb: &PencilState) -> Result<PencilState, LinalgError> {
    let delta = lu_factor(&xa.a.checked_add(&xb.b)?)?;
    Ok(PencilState {
        a: &xa.a * delta.solve(&xb.a)?,
        b: &xb.b * delta.solve(&xa.b)?,
    })
}

/// The same operator as `(A_b − B_b·Δ·A_b, B_a − A_a·Δ·B_a)`.
pub fn pencil_operator_second_form(xa: &PencilState, xb: &PencilState) -> Result<PencilState, LinalgError> {
    let delta = lu_factor(&xa.a.checked_add(&xb.b)?)?;
    Ok(PencilState {
        a: &xb.a - &xb.b * delta.solve(&xb.a)?,
        b: &xa.b - &xa.a * delta.solve(&xa.b)?,
    })
}

#[derive(Debug, Clone)]
pub struct PencilOperator {
    /// Dimension of the sought stable subspace.
    pub m: usize,
}

impl SemigroupOperator for PencilOperator {
    type State = PencilState;

    fn apply(&self, left: &PencilState, right: &PencilState) -> Result<PencilState, LinalgError> {
        pencil_operator(left, right)
    }

    /// `sqrt(σ_n² + ... + σ_{n−m+1}²) / max(‖A_k‖_F, ‖B_k‖_F)` over the `m`
    /// smallest singular values of `A_k`.
    fn residual(&self, state: &PencilState) -> Result<f64, LinalgError> {
        let sv = singular_values(&state.a)?;
        let tail: f64 = sv.iter().rev().take(self.m).map(|s| s * s).sum();
        let scale = state.a.fro_norm().max(state.b.fro_norm());
        Ok(if scale == 0.0 { 0.0 } else { tail.sqrt() / scale })
    }

    fn solution_view(&self, state: &PencilState) -> DenseMatrix {
        state.a.clone()
    }

    fn change(&self, previous: &PencilState, current: &PencilState) -> Option<f64> {
        let base = previous.a.fro_norm();
        (base > 0.0).then(|| (&current.a - &previous.a).fro_norm() / base)
    }
}

#[derive(Debug, Clone)]
pub struct SubspaceResult {
    /// Orthonormal basis, n×m.
    pub u: DenseMatrix,
    /// m×m with `A·U ≈ B·U·Λ`.
    pub lambda: DenseMatrix,
    /// `‖A·U − B·U·Λ‖_F / ‖A‖_F`
    pub residual: f64,
    pub report: ConvergenceReport,
    pub max_b_norm: f64,
    /// `max ‖B_k‖_F > B_GROWTH_LIMIT · ‖B_1‖_F`
    pub b_growth: bool,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum PencilError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("subspace dimension m = {m} must lie in 1..={n}")]
    SubspaceDimension { m: usize, n: usize },
    #[error(transparent)]
    Run(#[from] RunFailure),
    #[error("rank ambiguity: sigma_(m+1)/sigma_m = {ratio:.3e} is below {RANK_GAP:e}")]
    RankAmbiguity { ratio: f64, report: Box<ConvergenceReport> },
}

/// Runs the pencil iteration and extracts the `m`-dimensional stable
/// subspace from the null space of the final `A_k`.
pub fn stable_subspace_solve(problem: &PencilState, m: usize, cfg: &SolverConfig) -> Result<SubspaceResult, PencilError> {
    let n = problem.dim();
    if m == 0 || m > n {
        return Err(PencilError::SubspaceDimension { m, n });
    }
    let op = PencilOperator { m };
    let mut max_b_norm = problem.b.fro_norm();
    let run = iterate_observed(&op, problem, cfg, |s| max_b_norm = max_b_norm.max(s.b.fro_norm()))?;
    let b_growth = max_b_norm > B_GROWTH_LIMIT * problem.b.fro_norm();
    let final_a = run.state.a.clone();
    let report = conclude(&op, run)?.report;

    let smallest = singular_triplet_smallest(&final_a, m)?;
    if let Some(next) = smallest.next_value {
        let sigma_m = smallest.values[m - 1];
        let ratio = if sigma_m == 0.0 { f64::INFINITY } else { next / sigma_m };
        if ratio < RANK_GAP {
            return Err(PencilError::RankAmbiguity { ratio, report: Box::new(report) });
        }
    }

    let u = smallest.vectors;
    let au = &problem.a * &u;
    let bu = &problem.b * &u;
    let lambda = least_squares(&bu, &au)?;
    let residual = (&au - &bu * &lambda).fro_norm() / problem.a.fro_norm().max(f64::MIN_POSITIVE);
    Ok(SubspaceResult { u, lambda, residual, report, max_b_norm, b_growth })
}

/// Principal angles between the column spaces of `u` and `v`, both with
/// orthonormal columns, in ascending order.
///
/// Angles near zero come from the sines `σ(V − U·UᴴV)`, the rest from the
/// cosines `σ(UᴴV)`, which keeps small angles accurate.
pub fn principal_angles(u: &DenseMatrix, v: &DenseMatrix) -> Result<Vec<f64>, LinalgError> {
    if u.rows() != v.rows() {
        return Err(LinalgError::DimensionMismatch { op: "principal angles", left: u.shape(), right: v.shape() });
    }
    let (u, v) = if v.cols() <= u.cols() { (u, v) } else { (v, u) };
    let uhv = u.adjoint() * v;
    let cosines = singular_values(&uhv)?;
    let mut sines = singular_values(&(v - u * &uhv))?;
    sines.reverse();
    Ok((0..v.cols())
        .map(|i| {
            let c = cosines[i].min(1.0);
            if c * c < 0.5 {
                c.acos()
            } else {
                sines[i].min(1.0).asin()
            }
        })
        .collect())
}
