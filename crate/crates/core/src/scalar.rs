//! Scalar problems with closed-form accelerated iterates.
//!
//! Each problem is available twice: as direct complex arithmetic (closed
//! forms and hand recursions) and as a [`SemigroupOperator`] whose state is
//! a tiny [`DenseMatrix`], so the generic engine can be checked against
//! exact values.

use num_complex::Complex64;

use crate::engine::{MatrixState, SemigroupOperator};
use crate::matrixkit::{c64, lu_factor, DenseMatrix, LinalgError};

/// Relative size below which a scalar denominator counts as zero.
const BREAKDOWN_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScalarError {
    #[error("coefficient a_k = 1 makes the recursion degenerate")]
    DegenerateCoefficient,
    #[error("breakdown: {0} vanishes")]
    Breakdown(&'static str),
    #[error("invalid problem: {0}")]
    InvalidProblem(&'static str),
}

fn checked_div(num: Complex64, den: Complex64, scale: f64, what: &'static str) -> Result<Complex64, ScalarError> {
    if den.norm() <= BREAKDOWN_TOL * scale.max(f64::MIN_POSITIVE) || den.norm() == 0.0 {
        return Err(ScalarError::Breakdown(what));
    }
    Ok(num / den)
}

fn powu(z: Complex64, n: u64) -> Complex64 {
    let mut acc = c64(1.0, 0.0);
    let mut base = z;
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    acc
}

/// Single-field state used by the scalar operators.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarState(pub DenseMatrix);

impl MatrixState for ScalarState {
    fn fields(&self) -> Vec<&DenseMatrix> {
        vec![&self.0]
    }
}

// ---------------------------------------------------------------------------
// x = a x + b

/// `x = a·x + b` with starting value `x1`. Expected `|a| < 1`; callers may
/// check [`LinearScalarProblem::is_contractive`] and warn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearScalarProblem {
    pub a: Complex64,
    pub b: Complex64,
    pub x1: Complex64,
}

impl LinearScalarProblem {
    pub fn new(a: Complex64, b: Complex64, x1: Complex64) -> Self {
        Self { a, b, x1 }
    }

    pub fn is_contractive(&self) -> bool {
        self.a.norm() < 1.0
    }

    /// `b / (1 − a)`
    pub fn fixed_point(&self) -> Result<Complex64, ScalarError> {
        if self.a == c64(1.0, 0.0) {
            return Err(ScalarError::DegenerateCoefficient);
        }
        Ok(self.b / (c64(1.0, 0.0) - self.a))
    }

    /// `x_1, ..., x_n` of the plain recursion.
    pub fn plain_sequence(&self, n: usize) -> Vec<Complex64> {
        std::iter::successors(Some(self.x1), |x| Some(self.a * x + self.b))
            .take(n)
            .collect()
    }

    /// `x̂_1, ..., x̂_k` from the coefficient recursion, with `x̂_j = x_{r^(j-1)}`.
    ///
    /// The starting coefficients are `a^(r-1)` and `b(1 + a + ... + a^(r-2))`,
    /// which reduce to `(a, b)` when `r = 2`.
    pub fn accelerated_sequence(&self, r: u32, k: usize) -> Result<Vec<Complex64>, ScalarError> {
        assert!(r >= 2);
        let mut a_k = powu(self.a, r as u64 - 1);
        let mut b_k = (0..r - 1).map(|j| powu(self.a, j as u64)).sum::<Complex64>() * self.b;
        let mut out = Vec::with_capacity(k);
        let mut x = self.x1;
        for step in 0..k {
            out.push(x);
            if step + 1 == k {
                break;
            }
            x = a_k * x + b_k;
            (a_k, b_k) = linear_accel_step(a_k, b_k, r)?;
        }
        Ok(out)
    }
}

/// One step of the coefficient recursion
/// `a_{k+1} = a_k^r`, `b_{k+1} = b_k (1 − a_{k+1}) / (1 − a_k)`.
pub fn linear_accel_step(a_k: Complex64, b_k: Complex64, r: u32) -> Result<(Complex64, Complex64), ScalarError> {
    if a_k == c64(1.0, 0.0) {
        return Err(ScalarError::DegenerateCoefficient);
    }
    let a_next = powu(a_k, r as u64);
    // (1 − a^r)/(1 − a) evaluated as the geometric sum to stay accurate near a = 1.
    let ratio: Complex64 = (0..r).map(|j| powu(a_k, j as u64)).sum();
    Ok((a_next, b_k * ratio))
}

/// `|x̂_k − x*| = |a|^(r^(k−1) − 1) · |x_1 − x*|`, the error of the k-th
/// accelerated iterate obtained from direct recursion.
pub fn linear_exact_error(prob: &LinearScalarProblem, r: u32, k: u32) -> Result<f64, ScalarError> {
    assert!(r >= 2 && k >= 1);
    let x_star = prob.fixed_point()?;
    let exponent = (r as f64).powi(k as i32 - 1) - 1.0;
    let e1 = (prob.x1 - x_star).norm();
    if e1 == 0.0 {
        return Ok(0.0);
    }
    Ok(prob.a.norm().powf(exponent) * e1)
}

/// Limit of `|x̂_{k+1} − x*| / |x̂_k − x*|^r` implied by
/// [`linear_exact_error`]: `(|a| / |x_1 − x*|)^(r−1)`.
pub fn linear_q_ratio_limit(prob: &LinearScalarProblem, r: u32) -> Result<f64, ScalarError> {
    let e1 = (prob.x1 - prob.fixed_point()?).norm();
    Ok((prob.a.norm() / e1).powi(r as i32 - 1))
}

/// Composition of affine maps carrying the current iterate.
///
/// State `[s, o, x]` stands for the map `t ↦ s·t + o` after some number of
/// steps together with the iterate it produced. Composition
/// `F(X, Y) = [s_X s_Y, s_X o_Y + o_X, s_X x_Y + o_X]` is associative and
/// `F(X_k, X_1)` reproduces `x_{k+1} = a x_k + b`.
#[derive(Debug, Clone)]
pub struct LinearScalarOperator {
    pub problem: LinearScalarProblem,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffineState {
    pub slope: DenseMatrix,
    pub offset: DenseMatrix,
    pub value: DenseMatrix,
}

impl MatrixState for AffineState {
    fn fields(&self) -> Vec<&DenseMatrix> {
        vec![&self.slope, &self.offset, &self.value]
    }
}

impl LinearScalarOperator {
    pub fn new(problem: LinearScalarProblem) -> Self {
        Self { problem }
    }

    pub fn initial_state(&self) -> AffineState {
        AffineState {
            slope: DenseMatrix::scalar(self.problem.a),
            offset: DenseMatrix::scalar(self.problem.b),
            value: DenseMatrix::scalar(self.problem.x1),
        }
    }
}

impl SemigroupOperator for LinearScalarOperator {
    type State = AffineState;

    fn apply(&self, l: &AffineState, r: &AffineState) -> Result<AffineState, LinalgError> {
        Ok(AffineState {
            slope: &l.slope * &r.slope,
            offset: &l.slope * &r.offset + &l.offset,
            value: &l.slope * &r.value + &l.offset,
        })
    }

    fn residual(&self, s: &AffineState) -> Result<f64, LinalgError> {
        let x = s.value.first();
        let p = &self.problem;
        Ok((x - p.a * x - p.b).norm() / p.b.norm().max(1.0))
    }

    fn solution_view(&self, s: &AffineState) -> DenseMatrix {
        s.value.clone()
    }
}

// ---------------------------------------------------------------------------
// x = b x / (b + x − a)

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RationalScalarProblem {
    pub a: Complex64,
    pub b: Complex64,
}

impl RationalScalarProblem {
    pub fn new(a: Complex64, b: Complex64) -> Result<Self, ScalarError> {
        if b == Complex64::default() {
            return Err(ScalarError::InvalidProblem("b must be nonzero"));
        }
        if a == b {
            return Err(ScalarError::InvalidProblem("a and b must differ"));
        }
        Ok(Self { a, b })
    }
}

/// `g(x, y) = y·x / (y + x − a)`
pub fn rational_g(x: Complex64, y: Complex64, a: Complex64) -> Result<Complex64, ScalarError> {
    let den = y + x - a;
    checked_div(y * x, den, y.norm() + x.norm() + a.norm(), "y + x - a")
}

/// Closed form of the r-fold composition `h_r(x) = g(h_{r−1}(x), x)`:
/// `a xʳ / (xʳ − (x − a)ʳ)`, or `x / r` when `a = 0`.
pub fn rational_h(x: Complex64, a: Complex64, r: u32) -> Result<Complex64, ScalarError> {
    if a == Complex64::default() {
        return Ok(x / r as f64);
    }
    let xr = powu(x, r as u64);
    let xar = powu(x - a, r as u64);
    checked_div(a * xr, xr - xar, xr.norm() + xar.norm(), "x^r - (x - a)^r")
}

/// `y_k` of the accelerated sequence started at `y_1`, from
/// `y_k − a = a / ((y_1/(y_1 − a))^(r^(k−1)) − 1)`.
pub fn rational_closed_form(y1: Complex64, a: Complex64, r: u32, k: u32) -> Result<Complex64, ScalarError> {
    if a == Complex64::default() {
        return Ok(y1 / (r as f64).powi(k as i32 - 1));
    }
    let q = checked_div(y1, y1 - a, y1.norm() + a.norm(), "y1 - a")?;
    let qn = powu(q, (r as u64).pow(k - 1));
    let one = c64(1.0, 0.0);
    Ok(a + checked_div(a, qn - one, qn.norm() + 1.0, "q^(r^(k-1)) - 1")?)
}

/// `F(X, Y) = Y·(Y + X − a)⁻¹·X` on 1x1 matrices.
#[derive(Debug, Clone)]
pub struct RationalOperator {
    pub problem: RationalScalarProblem,
}

impl RationalOperator {
    pub fn new(problem: RationalScalarProblem) -> Self {
        Self { problem }
    }

    /// The iteration starts from `x_1 = b`.
    pub fn initial_state(&self) -> ScalarState {
        ScalarState(DenseMatrix::scalar(self.problem.b))
    }
}

impl SemigroupOperator for RationalOperator {
    type State = ScalarState;

    fn apply(&self, l: &ScalarState, r: &ScalarState) -> Result<ScalarState, LinalgError> {
        let shift = DenseMatrix::scalar(self.problem.a);
        let delta = lu_factor(&(&r.0 + &l.0 - shift))?;
        Ok(ScalarState(&r.0 * delta.solve(&l.0)?))
    }

    fn residual(&self, s: &ScalarState) -> Result<f64, LinalgError> {
        let y = s.0.first();
        let p = &self.problem;
        let g = rational_g(y, p.b, p.a).map_err(|_| LinalgError::SingularMatrix { rcond: 0.0 })?;
        Ok((y - g).norm() / p.b.norm().max(1.0))
    }

    fn solution_view(&self, s: &ScalarState) -> DenseMatrix {
        s.0.clone()
    }
}

// ---------------------------------------------------------------------------
// [x; y] = [a x / (a + y); b y / (a + y)]

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairProblem {
    pub x1: Complex64,
    pub y1: Complex64,
}

impl PairProblem {
    pub fn new(x1: Complex64, y1: Complex64) -> Result<Self, ScalarError> {
        if x1 * y1 == Complex64::default() {
            return Err(ScalarError::InvalidProblem("x1 * y1 must be nonzero"));
        }
        Ok(Self { x1, y1 })
    }
}

pub type Pair = (Complex64, Complex64);

/// `G(Z_a, Z_b) = [x_b x_a, y_b y_a] / (x_b + y_a)`
pub fn pair_g(za: Pair, zb: Pair) -> Result<Pair, ScalarError> {
    let den = zb.0 + za.1;
    let scale = zb.0.norm() + za.1.norm();
    Ok((
        checked_div(zb.0 * za.0, den, scale, "x_b + y_a")?,
        checked_div(zb.1 * za.1, den, scale, "x_b + y_a")?,
    ))
}

/// Closed form of `H_r(Z) = G(H_{r−1}(Z), Z)`:
/// `[xʳ, yʳ] / Σ_{j<r} xʲ y^(r−1−j)`.
pub fn pair_h(x: Complex64, y: Complex64, r: u32) -> Result<Pair, ScalarError> {
    let terms: Vec<Complex64> = (0..r)
        .map(|j| powu(x, j as u64) * powu(y, (r - 1 - j) as u64))
        .collect();
    let den: Complex64 = terms.iter().sum();
    let scale: f64 = terms.iter().map(|t| t.norm()).sum();
    let what = "sum x^j y^(r-1-j)";
    Ok((
        checked_div(powu(x, r as u64), den, scale, what)?,
        checked_div(powu(y, r as u64), den, scale, what)?,
    ))
}

/// k-th accelerated iterate from `(x_1, y_1)`:
/// `(x_1 − y_1)·[x_1^N, y_1^N] / (x_1^N − y_1^N)` with `N = r^(k−1)`, or
/// `x_1 / N` in both entries when `x_1 = y_1`.
pub fn pair_closed_form(x1: Complex64, y1: Complex64, r: u32, k: u32) -> Result<Pair, ScalarError> {
    let n = (r as u64).pow(k - 1);
    if x1 == y1 {
        let v = x1 / n as f64;
        return Ok((v, v));
    }
    let xn = powu(x1, n);
    let yn = powu(y1, n);
    let den = xn - yn;
    let scale = xn.norm() + yn.norm();
    let what = "x1^N - y1^N";
    Ok((
        checked_div((x1 - y1) * xn, den, scale, what)?,
        checked_div((x1 - y1) * yn, den, scale, what)?,
    ))
}

/// `G` on 2x1 column states through the dense kernel.
#[derive(Debug, Clone)]
pub struct PairOperator {
    pub problem: PairProblem,
}

impl PairOperator {
    pub fn new(problem: PairProblem) -> Self {
        Self { problem }
    }

    pub fn initial_state(&self) -> ScalarState {
        ScalarState(DenseMatrix::from_fn(2, 1, |i, _| {
            if i == 0 {
                self.problem.x1
            } else {
                self.problem.y1
            }
        }))
    }
}

impl SemigroupOperator for PairOperator {
    type State = ScalarState;

    fn apply(&self, l: &ScalarState, r: &ScalarState) -> Result<ScalarState, LinalgError> {
        let den = lu_factor(&DenseMatrix::scalar(r.0.get(0, 0) + l.0.get(1, 0)))?;
        let num = DenseMatrix::from_fn(2, 1, |i, _| r.0.get(i, 0) * l.0.get(i, 0));
        let scale = den.solve(&DenseMatrix::identity(1))?.first();
        Ok(ScalarState(num.scale(scale)))
    }

    fn residual(&self, s: &ScalarState) -> Result<f64, LinalgError> {
        let (x, y) = (s.0.get(0, 0), s.0.get(1, 0));
        let (a, b) = (self.problem.x1, self.problem.y1);
        let den = a + y;
        if den.norm() == 0.0 {
            return Err(LinalgError::SingularMatrix { rcond: 0.0 });
        }
        let rx = x - a * x / den;
        let ry = y - b * y / den;
        Ok((rx.norm_sqr() + ry.norm_sqr()).sqrt() / a.norm().max(b.norm()).max(1.0))
    }

    fn solution_view(&self, s: &ScalarState) -> DenseMatrix {
        s.0.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{accelerated_iterate, check_associativity, iterate_observed, SolverConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn re(x: f64) -> Complex64 {
        c64(x, 0.0)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1.0)
    }

    #[test]
    fn linear_accel_step_examples() {
        assert_eq!(linear_accel_step(re(0.5), re(1.0), 2).unwrap(), (re(0.25), re(1.5)));
        assert_eq!(linear_accel_step(re(0.0), re(3.0), 4).unwrap(), (re(0.0), re(3.0)));
        assert_eq!(linear_accel_step(re(0.5), re(1.0), 3).unwrap(), (re(0.125), re(1.75)));
        assert_eq!(linear_accel_step(re(1.0), re(1.0), 2), Err(ScalarError::DegenerateCoefficient));
    }

    #[test]
    fn linear_sequences_match_plain_subsequence() {
        let p = LinearScalarProblem::new(re(0.5), re(1.0), re(0.0));
        let acc = p.accelerated_sequence(2, 4).unwrap();
        assert_eq!(acc, vec![re(0.0), re(1.0), re(1.75), re(1.984375)]);
        let acc3 = p.accelerated_sequence(3, 3).unwrap();
        assert_eq!(acc3, vec![re(0.0), re(1.5), re(1.9921875)]);
        let plain = p.plain_sequence(9);
        assert_eq!(acc3[2], plain[8]);
    }

    #[test]
    fn linear_exact_error_examples() {
        let p = LinearScalarProblem::new(re(0.5), re(1.0), re(0.0));
        assert_eq!(linear_exact_error(&p, 2, 1).unwrap(), 2.0);
        // x̂_3 = x_4 = 1.75
        assert_eq!(linear_exact_error(&p, 2, 3).unwrap(), 0.25);
        let q = LinearScalarProblem::new(re(0.0), re(3.0), re(3.0));
        assert_eq!(linear_exact_error(&q, 2, 5).unwrap(), 0.0);
    }

    #[test]
    fn linear_exact_error_matches_recursion() {
        let p = LinearScalarProblem::new(c64(0.3, 0.4), c64(1.0, -2.0), c64(0.5, 0.5));
        let x_star = p.fixed_point().unwrap();
        for r in 2..=4 {
            let seq = p.accelerated_sequence(r, 4).unwrap();
            for (k, x) in seq.iter().enumerate() {
                let expected = linear_exact_error(&p, r, k as u32 + 1).unwrap();
                let got = (x - x_star).norm();
                assert!((got - expected).abs() <= 1e-13 * expected.max(1e-300) + 1e-15, "r={r} k={k}");
            }
        }
    }

    #[test]
    fn linear_q_ratio_from_recursion() {
        // The ratio is constant along the sequence: 0.5 / 2 = 0.25.
        let p = LinearScalarProblem::new(re(0.5), re(1.0), re(0.0));
        let seq = p.accelerated_sequence(2, 6).unwrap();
        let e: Vec<f64> = seq.iter().map(|x| (x - re(2.0)).norm()).collect();
        let limit = linear_q_ratio_limit(&p, 2).unwrap();
        assert_eq!(limit, 0.25);
        for k in 0..4 {
            assert!((e[k + 1] / (e[k] * e[k]) - limit).abs() < 1e-6 * limit, "k={k}");
        }
    }

    #[test]
    fn linear_matrix_path_agrees() {
        let p = LinearScalarProblem::new(c64(-0.6, 0.2), c64(2.0, 1.0), c64(0.1, 0.0));
        let op = LinearScalarOperator::new(p);
        for r in 2..=4 {
            let direct = p.accelerated_sequence(r, 5).unwrap();
            let mut via_engine = Vec::new();
            let cfg = SolverConfig::accelerated(r).with_tol(1e-300).with_max_outer(4);
            iterate_observed(&op, &op.initial_state(), &cfg, |s| via_engine.push(s.value.first())).unwrap();
            for (d, m) in direct.iter().zip(&via_engine) {
                assert!(close(*m, *d, 1e-13), "r={r}: {m} vs {d}");
            }
        }
    }

    #[test]
    fn rational_h_examples() {
        assert!(close(rational_h(re(3.0), re(2.0), 2).unwrap(), re(2.25), 1e-15));
        assert!(close(rational_h(re(3.0), re(0.0), 3).unwrap(), re(1.0), 1e-15));
        assert!(close(rational_h(re(2.25), re(2.0), 2).unwrap(), re(2.025), 1e-14));
        // x^2 = (x - a)^2 at x = a/2.
        assert!(matches!(rational_h(re(1.0), re(2.0), 2), Err(ScalarError::Breakdown(_))));
        // Composing g(·, 3) twice from 3 gives h_3(3) = 54/26.
        let g1 = rational_g(re(3.0), re(3.0), re(2.0)).unwrap();
        let g2 = rational_g(g1, re(3.0), re(2.0)).unwrap();
        assert!(close(g2, rational_h(re(3.0), re(2.0), 3).unwrap(), 1e-15));
        assert!(close(g2, re(54.0 / 26.0), 1e-15));
    }

    #[test]
    fn rational_closed_form_examples() {
        let ys: Vec<_> = (1..=3).map(|k| rational_closed_form(re(3.0), re(2.0), 2, k).unwrap()).collect();
        assert!(close(ys[0], re(3.0), 1e-15));
        assert!(close(ys[1], re(2.25), 1e-15));
        assert!(close(ys[2], re(2.025), 1e-15));
        assert!(RationalScalarProblem::new(re(1.0), re(0.0)).is_err());
        assert!(RationalScalarProblem::new(re(1.0), re(1.0)).is_err());
    }

    #[test]
    fn pair_examples() {
        let (x, y) = pair_h(re(1.0), re(2.0), 2).unwrap();
        assert!(close(x, re(1.0 / 3.0), 1e-15) && close(y, re(4.0 / 3.0), 1e-15));
        let (gx, gy) = pair_g((re(1.0), re(2.0)), (re(1.0), re(2.0))).unwrap();
        assert!(close(gx, x, 1e-15) && close(gy, y, 1e-15));

        let c = c64(0.7, -0.2);
        for r in 2..=5 {
            let (x, y) = pair_h(c, c, r).unwrap();
            assert!(close(x, c / r as f64, 1e-14) && close(y, c / r as f64, 1e-14));
        }

        let (x3, y3) = pair_closed_form(re(1.0), re(2.0), 2, 3).unwrap();
        assert!(close(x3, re(1.0 / 15.0), 1e-15) && close(y3, re(16.0 / 15.0), 1e-15));
        let (hx, hy) = pair_h(re(1.0 / 3.0), re(4.0 / 3.0), 2).unwrap();
        assert!(close(hx, x3, 1e-15) && close(hy, y3, 1e-15));

        // x + y = 0 kills the r = 2 denominator.
        assert!(pair_h(re(1.0), re(-1.0), 2).is_err());
        assert!(PairProblem::new(re(0.0), re(1.0)).is_err());
    }

    #[test]
    fn matrix_paths_are_associative() {
        let rat = RationalOperator::new(RationalScalarProblem::new(re(2.0), re(3.0)).unwrap());
        let s = |v: f64| ScalarState(DenseMatrix::scalar(re(v)));
        assert!(check_associativity(&rat, &s(3.0), &s(5.0), &s(-1.5)).unwrap() < 1e-15);

        let pair = PairOperator::new(PairProblem::new(re(1.0), re(2.0)).unwrap());
        let z = |x: f64, y: f64| ScalarState(DenseMatrix::from_real_rows(&[&[x], &[y]]));
        assert!(check_associativity(&pair, &z(1.0, 2.0), &z(0.5, 3.0), &z(2.0, -0.25)).unwrap() < 1e-15);
    }

    #[test]
    fn engine_reproduces_closed_forms() {
        let rat = RationalOperator::new(RationalScalarProblem::new(re(2.0), re(3.0)).unwrap());
        let cfg = SolverConfig::accelerated(2).with_tol(1e-300).with_max_outer(2);
        let mut ys = Vec::new();
        iterate_observed(&rat, &rat.initial_state(), &cfg, |s| ys.push(s.0.first())).unwrap();
        assert!(close(ys[1], re(2.25), 1e-15) && close(ys[2], re(2.025), 1e-15));

        let pair = PairOperator::new(PairProblem::new(re(1.0), re(2.0)).unwrap());
        let out = accelerated_iterate(&pair, &pair.initial_state(), &cfg).unwrap();
        assert!(close(out.state.0.get(0, 0), re(1.0 / 15.0), 1e-15));
        assert!(close(out.state.0.get(1, 0), re(16.0 / 15.0), 1e-15));
    }

    #[test]
    fn rational_h_agrees_with_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        while checked < 200 {
            let x = c64(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let a = c64(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let r = rng.random_range(2..=5u32);
            // Skip the neighbourhood of the breakdown set.
            let den = powu(x, r as u64) - powu(x - a, r as u64);
            if den.norm() < 1e-8 {
                continue;
            }
            let mut composed = x;
            let mut ok = true;
            for _ in 1..r {
                match rational_g(composed, x, a) {
                    Ok(v) if (composed + x - a).norm() >= 1e-8 => composed = v,
                    _ => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                continue;
            }
            let closed = rational_h(x, a, r).unwrap();
            assert!(close(closed, composed, 1e-12), "x={x} a={a} r={r}");
            checked += 1;
        }
    }

    #[test]
    fn pair_h_agrees_with_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut checked = 0;
        while checked < 200 {
            let x = c64(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let y = c64(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let r = rng.random_range(2..=5u32);
            let mut z = (x, y);
            let mut ok = true;
            for _ in 1..r {
                if (x + z.1).norm() < 1e-8 {
                    ok = false;
                    break;
                }
                z = pair_g(z, (x, y)).unwrap();
            }
            let den: Complex64 = (0..r).map(|j| powu(x, j as u64) * powu(y, (r - 1 - j) as u64)).sum();
            if !ok || den.norm() < 1e-8 {
                continue;
            }
            let (hx, hy) = pair_h(x, y, r).unwrap();
            assert!(close(hx, z.0, 1e-12) && close(hy, z.1, 1e-12), "x={x} y={y} r={r}");
            checked += 1;
        }
    }

    #[test]
    fn rational_limit_classification() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut checked = 0;
        while checked < 50 {
            let a = c64(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let x1 = c64(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let q = (x1 / (x1 - a)).norm();
            if a.norm() < 0.1 || (0.5..2.0).contains(&q) {
                continue;
            }
            let r = rng.random_range(2..=4u32);
            let op = RationalOperator::new(RationalScalarProblem::new(a, x1).unwrap());
            let cfg = SolverConfig::accelerated(r).with_tol(1e-300).with_max_outer(5);
            let out = accelerated_iterate(&op, &op.initial_state(), &cfg).unwrap();
            assert_ne!(out.report.status, crate::engine::Status::Breakdown);
            let y6 = out.state.0.first();
            let limit = if q < 1.0 { c64(0.0, 0.0) } else { a };
            assert!((y6 - limit).norm() <= 1e-8, "a={a} x1={x1} r={r}: {y6}");
            checked += 1;
        }
    }
}
