//! Stein equation `X = A·X·B + C` by Smith and r-Smith iteration.

use std::time::Instant;

use crate::engine::{
    conclude, iterate, Breakdown, ConfigError, ConvergenceReport, Iteration, MatrixState, Mode, Phase,
    RunFailure, SemigroupOperator, Solved, SolverConfig, Status,
};
use crate::matrixkit::{spectral_radius, DenseMatrix, LinalgError};

/// `(A, B, C)` with `A` m×m, `B` n×n and `C` m×n. Used both for the problem
/// data and for iteration states.
#[derive(Debug, Clone, PartialEq)]
pub struct SteinState {
    pub a: DenseMatrix,
    pub b: DenseMatrix,
    pub c: DenseMatrix,
}

impl SteinState {
    pub fn new(a: DenseMatrix, b: DenseMatrix, c: DenseMatrix) -> Result<Self, LinalgError> {
        if !a.is_square() {
            return Err(LinalgError::NotSquare { rows: a.rows(), cols: a.cols() });
        }
        if !b.is_square() {
            return Err(LinalgError::NotSquare { rows: b.rows(), cols: b.cols() });
        }
        if c.rows() != a.rows() {
            return Err(LinalgError::DimensionMismatch { op: "stein A·C", left: a.shape(), right: c.shape() });
        }
        if c.cols() != b.rows() {
            return Err(LinalgError::DimensionMismatch { op: "stein C·B", left: c.shape(), right: b.shape() });
        }
        Ok(Self { a, b, c })
    }
}

impl MatrixState for SteinState {
    fn fields(&self) -> Vec<&DenseMatrix> {
        vec![&self.a, &self.b, &self.c]
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum SteinError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("precondition rho(A)*rho(B) < 1 violated: rho(A)*rho(B) = {product:.6}")]
    SpectralCondition { product: f64 },
    #[error(transparent)]
    Run(#[from] RunFailure),
}

/// `F(X_a, X_b) = (A_a·A_b, B_b·B_a, C_a + A_a·C_b·B_a)`
pub fn stein_operator(xa: &SteinState, xb: &SteinState) -> Result<SteinState, LinalgError> {
    Ok(SteinState {
        a: xa.a.checked_mul(&xb.a)?,
        b: xb.b.checked_mul(&xa.b)?,
        c: xa.c.checked_add(&xa.a.checked_mul(&xb.c)?.checked_mul(&xa.b)?)?,
    })
}

/// `‖X − A·X·B − C‖_F / max(1, ‖C‖_F)`
pub fn stein_residual(problem: &SteinState, x: &DenseMatrix) -> Result<f64, LinalgError> {
    let axb = problem.a.checked_mul(x)?.checked_mul(&problem.b)?;
    let r = x.checked_add(&-(axb + &problem.c))?;
    Ok(r.fro_norm() / problem.c.fro_norm().max(1.0))
}

/// `ρ(A)·ρ(B)`
pub fn spectral_product(problem: &SteinState) -> Result<f64, LinalgError> {
    Ok(spectral_radius(&problem.a)? * spectral_radius(&problem.b)?)
}

/// Returns `ρ(A)·ρ(B)`, failing when it is at least 1 unless `force` is set.
pub fn check_spectral_condition(problem: &SteinState, force: bool) -> Result<f64, SteinError> {
    let product = spectral_product(problem)?;
    if product >= 1.0 && !force {
        return Err(SteinError::SpectralCondition { product });
    }
    Ok(product)
}

#[derive(Debug, Clone)]
pub struct SteinOperator {
    pub problem: SteinState,
}

impl SteinOperator {
    pub fn new(problem: SteinState) -> Self {
        Self { problem }
    }
}

impl SemigroupOperator for SteinOperator {
    type State = SteinState;

    fn apply(&self, left: &SteinState, right: &SteinState) -> Result<SteinState, LinalgError> {
        stein_operator(left, right)
    }

    fn residual(&self, state: &SteinState) -> Result<f64, LinalgError> {
        stein_residual(&self.problem, &state.c)
    }

    fn solution_view(&self, state: &SteinState) -> DenseMatrix {
        state.c.clone()
    }
}

/// Smith or r-Smith iteration through the generic engine.
pub fn stein_solve(problem: &SteinState, cfg: &SolverConfig, force: bool) -> Result<Solved, SteinError> {
    check_spectral_condition(problem, force)?;
    let op = SteinOperator::new(problem.clone());
    let run = iterate(&op, problem, cfg)?;
    Ok(conclude(&op, run)?)
}

/// r-Smith iteration written out directly:
/// `Â ← Âʳ`, `B̂ ← B̂ʳ`, `Ĉ ← Σ_{l<r} Âˡ·Ĉ·B̂ˡ`, the sum evaluated by Horner's
/// rule. `cfg.order` and `cfg.mode` are ignored in favour of `r`.
pub fn r_smith_direct(problem: &SteinState, r: u32, cfg: &SolverConfig, force: bool) -> Result<Solved, SteinError> {
    SolverConfig { order: r, mode: Mode::Accelerated, ..cfg.clone() }.validate()?;
    check_spectral_condition(problem, force)?;

    let start = Instant::now();
    let mut report = ConvergenceReport::new(Mode::Accelerated, r);
    let (mut a, mut b, mut c) = (problem.a.clone(), problem.b.clone(), problem.c.clone());
    let mut index: u64 = 1;
    let mut applies: u64 = 0;

    let record = |report: &mut ConvergenceReport, c: &DenseMatrix, index: u64, applies: u64| -> bool {
        let residual = stein_residual(problem, c).unwrap_or(f64::NAN);
        if !residual.is_finite() {
            report.status = Status::Breakdown;
            report.breakdown = Some(Breakdown {
                step: report.len(),
                phase: Phase::Residual,
                cause: LinalgError::InvalidData("non-finite residual".into()),
            });
            return true;
        }
        report.push_row(residual, index, applies, start.elapsed().as_micros() as u64);
        if residual <= cfg.tol {
            report.status = Status::Converged;
            return true;
        }
        false
    };

    let mut last_good = c.clone();
    if !record(&mut report, &c, index, applies) {
        for _ in 0..cfg.max_outer {
            let Some(next) = index.checked_mul(r as u64) else { break };
            let mut sum = c.clone();
            for _ in 1..r {
                sum = &c + &a * &sum * &b;
            }
            c = sum;
            a = a.powi(r);
            b = b.powi(r);
            index = next;
            applies += r as u64 - 1;
            let done = record(&mut report, &c, index, applies);
            if report.status == Status::Breakdown {
                break;
            }
            last_good = c.clone();
            if done {
                break;
            }
        }
    }
    report.refresh_estimates();

    let op = SteinOperator::new(problem.clone());
    let state = SteinState { a: DenseMatrix::zeros(0, 0), b: DenseMatrix::zeros(0, 0), c: last_good };
    Ok(conclude(&op, Iteration { state, report })?)
}
