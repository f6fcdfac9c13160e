//! Dispatch from a [`Problem`] to the matching solver, with errors folded
//! into a status label and an exit code.

use semiflow::dare::{dare_solve, indefinite_inputs, DareError};
use semiflow::engine::{conclude, iterate, ConvergenceReport, Mode, RunFailure, SemigroupOperator, SolverConfig, Solved};
use semiflow::matrixkit::DenseMatrix;
use semiflow::nme::{nme_solve, NmeError};
use semiflow::pencil::{stable_subspace_solve, PencilError};
use semiflow::scalar::{LinearScalarOperator, PairOperator, RationalOperator};
use semiflow::stein::{stein_solve, SteinError};

use crate::problem::Problem;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub mode: Mode,
    pub order: u32,
    pub tol: f64,
    pub max_iter: usize,
    pub force: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { mode: Mode::Accelerated, order: 2, tol: 1e-12, max_iter: 200, force: false }
    }
}

impl SolveOptions {
    pub fn config(&self) -> SolverConfig {
        let base = match self.mode {
            Mode::Plain => SolverConfig::plain(),
            Mode::Accelerated => SolverConfig::accelerated(self.order),
        };
        base.with_tol(self.tol).with_max_outer(self.max_iter)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Converged,
    MaxIterations,
    Breakdown,
    SingularIterate,
    RankAmbiguity,
}

impl RunStatus {
    pub fn label(self) -> &'static str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::MaxIterations => "max_iterations",
            RunStatus::Breakdown => "breakdown",
            RunStatus::SingularIterate => "singular_iterate",
            RunStatus::RankAmbiguity => "rank_ambiguity",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Converged => 0,
            RunStatus::MaxIterations => 2,
            RunStatus::Breakdown | RunStatus::SingularIterate | RunStatus::RankAmbiguity => 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PencilExtras {
    pub lambda: DenseMatrix,
    pub residual: f64,
}

/// Everything a finished run leaves behind, converged or not.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub status: RunStatus,
    /// Last solution view; absent when the run produced nothing usable.
    pub x: Option<DenseMatrix>,
    pub report: ConvergenceReport,
    pub message: String,
    pub pencil: Option<PencilExtras>,
    pub warnings: Vec<String>,
}

/// Rejected before or instead of iterating: bad configuration, violated
/// precondition or malformed data. Maps to exit code 1.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{0}")]
pub struct SolveError(pub String);

fn from_solved(s: Solved, warnings: Vec<String>) -> RunOutput {
    RunOutput {
        status: RunStatus::Converged,
        x: Some(s.x),
        report: s.report,
        message: "converged".into(),
        pencil: None,
        warnings,
    }
}

fn from_failure(f: RunFailure, warnings: Vec<String>) -> RunOutput {
    let status = match f {
        RunFailure::MaxIterations(_) => RunStatus::MaxIterations,
        RunFailure::Breakdown(_) => RunStatus::Breakdown,
    };
    let message = f.to_string();
    let u = f.unconverged().clone();
    RunOutput { status, x: Some(u.x), report: u.report, message, pencil: None, warnings }
}

fn scalar_run<O: SemigroupOperator>(op: &O, x1: &O::State, cfg: &SolverConfig, warnings: Vec<String>) -> Result<RunOutput, SolveError> {
    let run = iterate(op, x1, cfg).map_err(|e| SolveError(e.to_string()))?;
    Ok(match conclude(op, run) {
        Ok(s) => from_solved(s, warnings),
        Err(f) => from_failure(f, warnings),
    })
}

pub fn run(problem: &Problem, opts: &SolveOptions) -> Result<RunOutput, SolveError> {
    let cfg = opts.config();
    cfg.validate().map_err(|e| SolveError(e.to_string()))?;
    let mut warnings = Vec::new();
    match problem {
        Problem::Stein(p) => match stein_solve(p, &cfg, opts.force) {
            Ok(s) => Ok(from_solved(s, warnings)),
            Err(SteinError::Run(f)) => {
                if opts.force {
                    warnings.push("spectral precondition bypassed with --force".into());
                }
                Ok(from_failure(f, warnings))
            }
            Err(SteinError::SpectralCondition { product }) => Err(SolveError(format!(
                "precondition rho(A)*rho(B) < 1 violated: rho(A)*rho(B) = {product:.6}; rerun with --force to iterate anyway"
            ))),
            Err(e) => Err(SolveError(e.to_string())),
        },
        Problem::Pencil { state, m } => match stable_subspace_solve(state, *m, &cfg) {
            Ok(s) => {
                if s.b_growth {
                    warnings.push(format!("B_k grew to {:.3e}; the basis may be inaccurate", s.max_b_norm));
                }
                let mut out = from_solved(Solved { x: s.u, report: s.report }, warnings);
                out.pencil = Some(PencilExtras { lambda: s.lambda, residual: s.residual });
                Ok(out)
            }
            Err(PencilError::Run(f)) => Ok(from_failure(f, warnings)),
            Err(e @ PencilError::RankAmbiguity { .. }) => {
                let message = e.to_string();
                let PencilError::RankAmbiguity { report, .. } = e else { unreachable!() };
                Ok(RunOutput { status: RunStatus::RankAmbiguity, x: None, report: *report, message, pencil: None, warnings })
            }
            Err(e) => Err(SolveError(e.to_string())),
        },
        Problem::Nme { q, a, b } => match nme_solve(q, a, b, &cfg) {
            Ok(s) => Ok(from_solved(s, warnings)),
            Err(NmeError::Run(f)) => Ok(from_failure(f, warnings)),
            Err(e @ NmeError::SingularIterate(_)) => {
                let message = e.to_string();
                let NmeError::SingularIterate(u) = e else { unreachable!() };
                Ok(RunOutput {
                    status: RunStatus::SingularIterate,
                    x: Some(u.x),
                    report: u.report,
                    message,
                    pencil: None,
                    warnings,
                })
            }
            Err(e) => Err(SolveError(e.to_string())),
        },
        Problem::Dare(p) => {
            if let Ok(list) = indefinite_inputs(p) {
                for (name, eig) in list {
                    warnings.push(format!("{name} is indefinite (smallest eigenvalue {eig:.3e}); convergence is not guaranteed"));
                }
            }
            match dare_solve(p, &cfg) {
                Ok(s) => Ok(from_solved(s, warnings)),
                Err(DareError::Run(f)) => Ok(from_failure(f, warnings)),
                Err(e) => Err(SolveError(e.to_string())),
            }
        }
        Problem::ScalarLinear(p) => {
            if !p.is_contractive() {
                warnings.push(format!("|a| = {:.6} >= 1; the iteration is not a contraction", p.a.norm()));
            }
            let op = LinearScalarOperator::new(*p);
            scalar_run(&op, &op.initial_state(), &cfg, warnings)
        }
        Problem::ScalarRational(p) => {
            let op = RationalOperator::new(*p);
            scalar_run(&op, &op.initial_state(), &cfg, warnings)
        }
        Problem::ScalarPair(p) => {
            let op = PairOperator::new(*p);
            scalar_run(&op, &op.initial_state(), &cfg, warnings)
        }
    }
}
