//! Generic semigroup iteration engine.
//!
//! A binary operator `F` drives the fixed-point sequence
//! `X_{k+1} = F(X_k, X_1)`. When `F` is associative the sequence obeys
//! `X_{i+j} = F(X_i, X_j)`, and the order-`r` accelerated driver visits
//! `X_1, X_r, X_{r^2}, ...` at a cost of `r - 1` applications per step.

mod order;

use std::fmt;
use std::time::Instant;

use crate::matrixkit::{DenseMatrix, LinalgError};

pub use order::{estimate_order, estimation_window, EstimateError, OrderEstimate, NOISE_FLOOR};

/// A state made of one or more matrix components.
pub trait MatrixState: Clone {
    fn fields(&self) -> Vec<&DenseMatrix>;
}

/// Binary operator on a state domain, possibly breaking down on a singular
/// intermediate.
pub trait SemigroupOperator {
    type State: MatrixState;

    fn apply(&self, left: &Self::State, right: &Self::State) -> Result<Self::State, LinalgError>;

    /// Distance of the state's solution candidate from solving the equation.
    fn residual(&self, state: &Self::State) -> Result<f64, LinalgError>;

    /// The component that converges to the answer.
    fn solution_view(&self, state: &Self::State) -> DenseMatrix;

    /// Optional successive-change measure; the drivers also stop once it
    /// drops to the tolerance.
    fn change(&self, _previous: &Self::State, _current: &Self::State) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Plain,
    Accelerated,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Plain => "plain",
            Mode::Accelerated => "accelerated",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub order: u32,
    pub tol: f64,
    pub max_outer: usize,
    pub mode: Mode,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            order: 2,
            tol: 1e-12,
            max_outer: 200,
            mode: Mode::Accelerated,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("order must be at least 2, got {0}")]
    Order(u32),
    #[error("tolerance must be positive and finite, got {0}")]
    Tolerance(f64),
    #[error("iteration cap must be at least 1")]
    MaxOuter,
}

impl SolverConfig {
    pub fn plain() -> Self {
        Self {
            mode: Mode::Plain,
            ..Self::default()
        }
    }

    pub fn accelerated(order: u32) -> Self {
        Self {
            order,
            ..Self::default()
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_outer(mut self, max_outer: usize) -> Self {
        self.max_outer = max_outer;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.order < 2 {
            return Err(ConfigError::Order(self.order));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(ConfigError::Tolerance(self.tol));
        }
        if self.max_outer == 0 {
            return Err(ConfigError::MaxOuter);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIterations,
    Breakdown,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Converged => "converged",
            Status::MaxIterations => "max_iterations",
            Status::Breakdown => "breakdown",
        })
    }
}

/// Where in an outer step a breakdown happened.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Applying the operator.
    Apply,
    /// Evaluating the residual of a freshly computed iterate.
    Residual,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Apply => "operator",
            Phase::Residual => "residual",
        })
    }
}

/// Operator failure during an iteration.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("breakdown in {phase} at outer step {step}: {cause}")]
pub struct Breakdown {
    pub step: usize,
    pub phase: Phase,
    pub cause: LinalgError,
}

/// Per-iterate history of a run. Row `k` (0-based) describes the `k+1`-th
/// visited iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub mode: Mode,
    /// 1 for plain runs.
    pub order: u32,
    pub residuals: Vec<f64>,
    /// Plain index `k`, or `r^(k-1)` in accelerated mode.
    pub iterate_indices: Vec<u64>,
    /// Cumulative operator applications when the row was recorded.
    pub applies: Vec<u64>,
    pub elapsed_us: Vec<u64>,
    pub estimated_order: Option<f64>,
    pub estimated_rate: Option<f64>,
    pub status: Status,
    pub breakdown: Option<Breakdown>,
}

impl ConvergenceReport {
    /// Empty report; the status starts as `MaxIterations`.
    pub fn new(mode: Mode, order: u32) -> Self {
        Self {
            mode,
            order,
            residuals: Vec::new(),
            iterate_indices: Vec::new(),
            applies: Vec::new(),
            elapsed_us: Vec::new(),
            estimated_order: None,
            estimated_rate: None,
            status: Status::MaxIterations,
            breakdown: None,
        }
    }

    /// Appends one history row.
    pub fn push_row(&mut self, residual: f64, index: u64, applies: u64, elapsed_us: u64) {
        self.residuals.push(residual);
        self.iterate_indices.push(index);
        self.applies.push(applies);
        self.elapsed_us.push(elapsed_us);
    }

    pub fn len(&self) -> usize {
        self.residuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residuals.is_empty()
    }

    /// Outer steps taken after the initial state.
    pub fn outer_steps(&self) -> usize {
        self.len().saturating_sub(1)
    }

    pub fn total_applies(&self) -> u64 {
        self.applies.last().copied().unwrap_or(0)
    }

    pub fn final_residual(&self) -> Option<f64> {
        self.residuals.last().copied()
    }

    /// Fills the order and rate estimates from the usable part of the
    /// residual history.
    pub fn refresh_estimates(&mut self) {
        match estimate_order(estimation_window(&self.residuals)) {
            Ok(est) => {
                self.estimated_order = Some(est.order);
                self.estimated_rate = Some(est.rate);
            }
            Err(_) => {
                self.estimated_order = None;
                self.estimated_rate = None;
            }
        }
    }
}

/// Final state of a run together with its history. On breakdown `state` is
/// the last successfully computed iterate.
#[derive(Debug, Clone)]
pub struct Iteration<S> {
    pub state: S,
    pub report: ConvergenceReport,
}

struct Recorder {
    report: ConvergenceReport,
    start: Instant,
    tol: f64,
}

impl Recorder {
    /// Records a row and returns true when the run should stop.
    fn record<O: SemigroupOperator>(
        &mut self,
        op: &O,
        previous: Option<&O::State>,
        current: &O::State,
        index: u64,
        applies: u64,
    ) -> bool {
        let step = self.report.len();
        let residual = match op.residual(current) {
            Ok(r) if r.is_finite() => r,
            Ok(_) => {
                self.fail(step, Phase::Residual, LinalgError::InvalidData("non-finite residual".into()));
                return true;
            }
            Err(cause) => {
                self.fail(step, Phase::Residual, cause);
                return true;
            }
        };
        let elapsed = self.start.elapsed().as_micros() as u64;
        self.report.push_row(residual, index, applies, elapsed);

        let changed_little = previous
            .and_then(|p| op.change(p, current))
            .is_some_and(|c| c <= self.tol);
        if residual <= self.tol || changed_little {
            self.report.status = Status::Converged;
            return true;
        }
        false
    }

    fn fail(&mut self, step: usize, phase: Phase, cause: LinalgError) {
        self.report.status = Status::Breakdown;
        self.report.breakdown = Some(Breakdown { step, phase, cause });
    }

    fn finish(mut self) -> ConvergenceReport {
        self.report.refresh_estimates();
        self.report
    }
}

/// Runs the plain or accelerated driver according to `cfg.mode`.
pub fn iterate<O: SemigroupOperator>(
    op: &O,
    x1: &O::State,
    cfg: &SolverConfig,
) -> Result<Iteration<O::State>, ConfigError> {
    iterate_observed(op, x1, cfg, |_| {})
}

/// [`iterate`] with a callback invoked on every accepted iterate.
pub fn iterate_observed<O: SemigroupOperator>(
    op: &O,
    x1: &O::State,
    cfg: &SolverConfig,
    observer: impl FnMut(&O::State),
) -> Result<Iteration<O::State>, ConfigError> {
    match cfg.mode {
        Mode::Plain => run_plain(op, x1, cfg, observer),
        Mode::Accelerated => run_accelerated(op, x1, cfg, observer),
    }
}

/// `X_{k+1} = F(X_k, X_1)` until the residual reaches `cfg.tol` or
/// `cfg.max_outer` steps have been taken.
pub fn plain_iterate<O: SemigroupOperator>(
    op: &O,
    x1: &O::State,
    cfg: &SolverConfig,
) -> Result<Iteration<O::State>, ConfigError> {
    run_plain(op, x1, cfg, |_| {})
}

/// Order-`r` accelerated iteration.
///
/// Each outer step builds the inner ladder `L_1 = X̂_k`,
/// `L_{l+1} = F(X̂_k, L_l)` for `l = 1..r-2`, then sets
/// `X̂_{k+1} = F(X̂_k, L_{r-1})`, so that `X̂_k = X_{r^(k-1)}`.
pub fn accelerated_iterate<O: SemigroupOperator>(
    op: &O,
    x1: &O::State,
    cfg: &SolverConfig,
) -> Result<Iteration<O::State>, ConfigError> {
    run_accelerated(op, x1, cfg, |_| {})
}

fn run_plain<O: SemigroupOperator>(
    op: &O,
    x1: &O::State,
    cfg: &SolverConfig,
    mut observer: impl FnMut(&O::State),
) -> Result<Iteration<O::State>, ConfigError> {
    cfg.validate()?;
    let mut rec = Recorder {
        report: ConvergenceReport::new(Mode::Plain, 1),
        start: Instant::now(),
        tol: cfg.tol,
    };
    let mut current = x1.clone();
    observer(&current);
    if rec.record(op, None, &current, 1, 0) {
        return Ok(Iteration { state: current, report: rec.finish() });
    }
    for step in 1..=cfg.max_outer {
        let next = match op.apply(&current, x1) {
            Ok(s) => s,
            Err(cause) => {
                rec.fail(step, Phase::Apply, cause);
                break;
            }
        };
        observer(&next);
        let done = rec.record(op, Some(&current), &next, step as u64 + 1, step as u64);
        if rec.report.status == Status::Breakdown {
            break;
        }
        current = next;
        if done {
            break;
        }
    }
    Ok(Iteration { state: current, report: rec.finish() })
}

fn run_accelerated<O: SemigroupOperator>(
    op: &O,
    x1: &O::State,
    cfg: &SolverConfig,
    mut observer: impl FnMut(&O::State),
) -> Result<Iteration<O::State>, ConfigError> {
    cfg.validate()?;
    let r = cfg.order;
    let mut rec = Recorder {
        report: ConvergenceReport::new(Mode::Accelerated, r),
        start: Instant::now(),
        tol: cfg.tol,
    };
    let mut hat = x1.clone();
    observer(&hat);
    if rec.record(op, None, &hat, 1, 0) {
        return Ok(Iteration { state: hat, report: rec.finish() });
    }
    let mut index: u64 = 1;
    let mut applies: u64 = 0;
    'outer: for step in 1..=cfg.max_outer {
        let Some(next_index) = index.checked_mul(r as u64) else {
            break;
        };
        let mut ladder = hat.clone();
        for _ in 0..r - 1 {
            ladder = match op.apply(&hat, &ladder) {
                Ok(s) => s,
                Err(cause) => {
                    rec.fail(step, Phase::Apply, cause);
                    break 'outer;
                }
            };
            applies += 1;
        }
        index = next_index;
        observer(&ladder);
        let done = rec.record(op, Some(&hat), &ladder, index, applies);
        if rec.report.status == Status::Breakdown {
            break;
        }
        hat = ladder;
        if done {
            break;
        }
    }
    Ok(Iteration { state: hat, report: rec.finish() })
}

/// A converged run reduced to its solution matrix.
#[derive(Debug, Clone)]
pub struct Solved {
    pub x: DenseMatrix,
    pub report: ConvergenceReport,
}

/// A run that stopped without converging, with the last good solution
/// view.
#[derive(Debug, Clone)]
pub struct Unconverged {
    pub x: DenseMatrix,
    pub report: ConvergenceReport,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum RunFailure {
    #[error("no convergence after {} outer steps (last residual {:.3e})", .0.report.outer_steps(), .0.report.final_residual().unwrap_or(f64::NAN))]
    MaxIterations(Box<Unconverged>),
    #[error("{}", .0.report.breakdown.as_ref().map_or("breakdown".to_string(), |b| b.to_string()))]
    Breakdown(Box<Unconverged>),
}

impl RunFailure {
    pub fn unconverged(&self) -> &Unconverged {
        match self {
            RunFailure::MaxIterations(u) | RunFailure::Breakdown(u) => u,
        }
    }
}

/// Splits a finished run by status.
pub fn conclude<O: SemigroupOperator>(op: &O, run: Iteration<O::State>) -> Result<Solved, RunFailure> {
    let x = op.solution_view(&run.state);
    let report = run.report;
    match report.status {
        Status::Converged => Ok(Solved { x, report }),
        Status::MaxIterations => Err(RunFailure::MaxIterations(Box::new(Unconverged { x, report }))),
        Status::Breakdown => Err(RunFailure::Breakdown(Box::new(Unconverged { x, report }))),
    }
}

/// `X_n` from `X_1` by binary decomposition of `n`, using
/// `X_{i+j} = F(X_i, X_j)` on cached powers `X_{2^p}`.
pub fn flow_element<O: SemigroupOperator>(
    op: &O,
    x1: &O::State,
    n: u64,
) -> Result<O::State, LinalgError> {
    assert!(n >= 1, "flow index starts at 1");
    let mut power = x1.clone();
    let mut acc: Option<O::State> = None;
    let mut bits = n;
    loop {
        if bits & 1 == 1 {
            acc = Some(match acc {
                None => power.clone(),
                Some(a) => op.apply(&a, &power)?,
            });
        }
        bits >>= 1;
        if bits == 0 {
            break;
        }
        power = op.apply(&power, &power)?;
    }
    Ok(acc.expect("n >= 1 has a set bit"))
}

/// Maximum over matrix fields of `‖L − R‖_F / max(1, ‖L‖_F)` where
/// `L = F(F(X,Y),Z)` and `R = F(X,F(Y,Z))`.
pub fn check_associativity<O: SemigroupOperator>(
    op: &O,
    x: &O::State,
    y: &O::State,
    z: &O::State,
) -> Result<f64, LinalgError> {
    let left = op.apply(&op.apply(x, y)?, z)?;
    let right = op.apply(x, &op.apply(y, z)?)?;
    Ok(fieldwise_error(&left, &right))
}

/// Maximum over fields of `‖a − b‖_F / max(1, ‖a‖_F)`.
pub fn fieldwise_error<S: MatrixState>(a: &S, b: &S) -> f64 {
    a.fields()
        .into_iter()
        .zip(b.fields())
        .map(|(l, r)| (l - r).fro_norm() / l.fro_norm().max(1.0))
        .fold(0.0, f64::max)
}

/// Frobenius norm of the stacked fields.
pub fn state_norm<S: MatrixState>(s: &S) -> f64 {
    s.fields()
        .into_iter()
        .map(|m| m.fro_norm().powi(2))
        .sum::<f64>()
        .sqrt()
}

/// `‖a − b‖ / ‖a‖` over the stacked fields.
pub fn state_relative_error<S: MatrixState>(a: &S, b: &S) -> f64 {
    let diff = a
        .fields()
        .into_iter()
        .zip(b.fields())
        .map(|(l, r)| (l - r).fro_norm().powi(2))
        .sum::<f64>()
        .sqrt();
    let scale = state_norm(a);
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}
