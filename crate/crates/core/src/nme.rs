//! Nonlinear matrix equation `X = Q − A·X⁻¹·B`.
//!
//! The iteration carries four matrices `(A_k, B_k, P_k, Q_k)` starting from
//! `(A, B, 0, Q)`; `Q_k` converges to a solution under suitable conditions
//! on the coefficients.

use crate::engine::{
    conclude, iterate, ConfigError, MatrixState, Phase, RunFailure, SemigroupOperator, Solved, SolverConfig,
    Unconverged,
};
use crate::matrixkit::{lu_factor, relative_error, DenseMatrix, LinalgError};

#[derive(Debug, Clone, PartialEq)]
pub struct NmeState {
    pub a: DenseMatrix,
    pub b: DenseMatrix,
    pub p: DenseMatrix,
    pub q: DenseMatrix,
}

impl NmeState {
    /// `(A, B, 0, Q)`
    pub fn initial(q: &DenseMatrix, a: &DenseMatrix, b: &DenseMatrix) -> Result<Self, LinalgError> {
        for m in [q, a, b] {
            if !m.is_square() {
                return Err(LinalgError::NotSquare { rows: m.rows(), cols: m.cols() });
            }
            if m.shape() != q.shape() {
                return Err(LinalgError::DimensionMismatch { op: "nme coefficients", left: q.shape(), right: m.shape() });
            }
        }
        Ok(Self {
            a: a.clone(),
            b: b.clone(),
            p: DenseMatrix::zeros(q.rows(), q.cols()),
            q: q.clone(),
        })
    }
}

impl MatrixState for NmeState {
    fn fields(&self) -> Vec<&DenseMatrix> {
        vec![&self.a, &self.b, &self.p, &self.q]
    }
}

/// `(A_b·Δ·A_a, B_a·Δ·B_b, P_a + B_a·Δ·A_a, Q_b − A_b·Δ·B_b)` with
/// `Δ = (Q_a − P_b)⁻¹`.
pub fn nme_operator(xa: &NmeState, xb: &NmeState) -> Result<NmeState, LinalgError> {
    let delta = lu_factor(&xa.q.checked_add(&-&xb.p)?)?;
    let d_aa = delta.solve(&xa.a)?;
    let d_bb = delta.solve(&xb.b)?;
    Ok(NmeState {
        a: &xb.a * &d_aa,
        b: &xa.b * &d_bb,
        p: &xa.p + &xa.b * &d_aa,
        q: &xb.q - &xb.a * &d_bb,
    })
}

/// `‖X − Q + A·X⁻¹·B‖_F / ‖Q‖_F`
pub fn nme_residual(q: &DenseMatrix, a: &DenseMatrix, b: &DenseMatrix, x: &DenseMatrix) -> Result<f64, LinalgError> {
    let x_inv_b = lu_factor(x)?.solve(b)?;
    let r = x - q + a.checked_mul(&x_inv_b)?;
    Ok(r.fro_norm() / q.fro_norm().max(f64::MIN_POSITIVE))
}

#[derive(Debug, Clone)]
pub struct NmeOperator {
    pub q: DenseMatrix,
    pub a: DenseMatrix,
    pub b: DenseMatrix,
}

impl SemigroupOperator for NmeOperator {
    type State = NmeState;

    fn apply(&self, left: &NmeState, right: &NmeState) -> Result<NmeState, LinalgError> {
        nme_operator(left, right)
    }

    fn residual(&self, state: &NmeState) -> Result<f64, LinalgError> {
        nme_residual(&self.q, &self.a, &self.b, &state.q)
    }

    fn solution_view(&self, state: &NmeState) -> DenseMatrix {
        state.q.clone()
    }

    fn change(&self, previous: &NmeState, current: &NmeState) -> Option<f64> {
        let base = previous.q.fro_norm();
        (base > 0.0).then(|| (&current.q - &previous.q).fro_norm() / base)
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum NmeError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("Q is singular (rcond {rcond:.3e})")]
    SingularQ { rcond: f64 },
    #[error(transparent)]
    Run(RunFailure),
    #[error("iterate became numerically singular at outer step {}", .0.report.len())]
    SingularIterate(Box<Unconverged>),
}

impl From<RunFailure> for NmeError {
    fn from(f: RunFailure) -> Self {
        match f {
            RunFailure::Breakdown(u)
                if matches!(&u.report.breakdown, Some(b) if b.phase == Phase::Residual
                    && matches!(b.cause, LinalgError::SingularMatrix { .. })) =>
            {
                NmeError::SingularIterate(u)
            }
            other => NmeError::Run(other),
        }
    }
}

/// Iterates from `(A, B, 0, Q)` and returns the limit of `Q_k`.
pub fn nme_solve(q: &DenseMatrix, a: &DenseMatrix, b: &DenseMatrix, cfg: &SolverConfig) -> Result<Solved, NmeError> {
    let x1 = NmeState::initial(q, a, b)?;
    if let Err(LinalgError::SingularMatrix { rcond }) = lu_factor(q) {
        return Err(NmeError::SingularQ { rcond });
    }
    let op = NmeOperator { q: q.clone(), a: a.clone(), b: b.clone() };
    let run = iterate(&op, &x1, cfg)?;
    Ok(conclude(&op, run)?)
}

fn delta(qa: &DenseMatrix, pb: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    Ok(lu_factor(&(qa - pb))?.inverse())
}

/// Relative errors of the four identities linking `Δ_{a,b}`, `Δ_{b,c}`,
/// `Δ_{a,e}` and `Δ_{d,c}` for `X_d = F(X_a, X_b)`, `X_e = F(X_b, X_c)`:
///
/// 1. `Δ_{a,e} = Δ_{a,b} + Δ_{a,b}·B_b·Δ_{d,c}·A_b·Δ_{a,b}`
/// 2. `Δ_{d,c} = Δ_{b,c} + Δ_{b,c}·A_b·Δ_{a,e}·B_b·Δ_{b,c}`
/// 3. `Δ_{a,b}·B_b·Δ_{d,c} = Δ_{a,e}·B_b·Δ_{b,c}`
/// 4. `Δ_{d,c}·A_b·Δ_{a,b} = Δ_{b,c}·A_b·Δ_{a,e}`
pub fn nme_lemma_suite(xa: &NmeState, xb: &NmeState, xc: &NmeState) -> Result<[f64; 4], LinalgError> {
    let xd = nme_operator(xa, xb)?;
    let xe = nme_operator(xb, xc)?;
    let d_ab = delta(&xa.q, &xb.p)?;
    let d_bc = delta(&xb.q, &xc.p)?;
    let d_ae = delta(&xa.q, &xe.p)?;
    let d_dc = delta(&xd.q, &xc.p)?;
    let (ab, bb) = (&xb.a, &xb.b);
    Ok([
        relative_error(&d_ae, &(&d_ab + &d_ab * bb * &d_dc * ab * &d_ab)),
        relative_error(&d_dc, &(&d_bc + &d_bc * ab * &d_ae * bb * &d_bc)),
        relative_error(&(&d_ab * bb * &d_dc), &(&d_ae * bb * &d_bc)),
        relative_error(&(&d_dc * ab * &d_ab), &(&d_bc * ab * &d_ae)),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{check_associativity, iterate_observed, state_relative_error, Status};
    use crate::instances;
    use crate::matrixkit::c64;
    use rand::Rng;

    fn s(v: f64) -> DenseMatrix {
        DenseMatrix::scalar(c64(v, 0.0))
    }

    fn scalar_state(a: f64, b: f64, p: f64, q: f64) -> NmeState {
        NmeState { a: s(a), b: s(b), p: s(p), q: s(q) }
    }

    #[test]
    fn operator_examples() {
        let x = scalar_state(1.0, 1.0, 0.0, 3.0);
        let y = nme_operator(&x, &x).unwrap();
        let third = 1.0 / 3.0;
        assert!(state_relative_error(&scalar_state(third, third, third, 8.0 / 3.0), &y) < 1e-15);

        let mut rng = instances::rng(51);
        let xa = instances::random_nme_state(&mut rng, 4);
        let mut xb = instances::random_nme_state(&mut rng, 4);
        xb.a = DenseMatrix::zeros(4, 4);
        let y = nme_operator(&xa, &xb).unwrap();
        assert_eq!(y.a.fro_norm(), 0.0);
        assert_eq!(y.q, xb.q);
    }

    #[test]
    fn random_associativity() {
        let mut rng = instances::rng(52);
        let op = NmeOperator { q: s(1.0), a: s(0.0), b: s(0.0) };
        for _ in 0..20 {
            let t: Vec<_> = (0..3).map(|_| instances::random_nme_state(&mut rng, 4)).collect();
            assert!(check_associativity(&op, &t[0], &t[1], &t[2]).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn scalar_golden_ratio() {
        let x_star = (3.0 + 5f64.sqrt()) / 2.0;
        for cfg in [SolverConfig::plain(), SolverConfig::accelerated(2), SolverConfig::accelerated(3)] {
            let out = nme_solve(&s(3.0), &s(1.0), &s(1.0), &cfg).unwrap();
            assert!((out.x.first() - c64(x_star, 0.0)).norm() <= 1e-12, "{}", cfg.mode);
        }
    }

    #[test]
    fn decoupled_cases() {
        let mut rng = instances::rng(53);
        let q = instances::random_nme_state(&mut rng, 3).q;
        let a = instances::small(&mut rng, 3, 0.3);
        let out = nme_solve(&q, &DenseMatrix::zeros(3, 3), &a, &SolverConfig::default()).unwrap();
        assert_eq!(out.x, q);
        assert_eq!(out.report.len(), 1);
        let out = nme_solve(&s(2.0), &s(0.7), &s(0.0), &SolverConfig::default()).unwrap();
        assert_eq!(out.x, s(2.0));
    }

    #[test]
    fn singular_q_rejected() {
        let err = nme_solve(&s(0.0), &s(1.0), &s(1.0), &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, NmeError::SingularQ { .. }));
    }

    #[test]
    fn singular_iterate_reported() {
        // x = 1 − 1/x has no real fixed point; Q_2 = 1 − 1 = 0 is singular.
        let err = nme_solve(&s(1.0), &s(1.0), &s(1.0), &SolverConfig::plain()).unwrap_err();
        match err {
            NmeError::SingularIterate(u) => assert_eq!(u.report.len(), 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn constructed_solution_recovered() {
        let (q, a, b, x) = instances::constructed_nme(54, 10);
        for cfg in [SolverConfig::plain(), SolverConfig::accelerated(2)] {
            let out = nme_solve(&q, &a, &b, &cfg).unwrap();
            assert_eq!(out.report.status, Status::Converged);
            assert!(nme_residual(&q, &a, &b, &out.x).unwrap() <= 1e-10);
            assert!(relative_error(&x, &out.x) <= 1e-9);
        }
    }

    #[test]
    fn composite_map_consistency() {
        // X = Q_{k+1} − A_{k+1}·(X − P_{k+1})⁻¹·B_{k+1} for any solution X.
        let (q, a, b, x) = instances::constructed_nme(55, 5);
        let x1 = NmeState::initial(&q, &a, &b).unwrap();
        let mut xk = x1.clone();
        for k in 1..=8 {
            xk = nme_operator(&xk, &x1).unwrap();
            let inner = lu_factor(&(&x - &xk.p)).unwrap().solve(&xk.b).unwrap();
            let composite = &xk.q - &xk.a * inner;
            assert!(relative_error(&x, &composite) <= 1e-9, "k={k}");
        }
    }

    #[test]
    fn acceleration_matches_plain_index() {
        let (q, a, b, _) = instances::constructed_nme(56, 4);
        let x1 = NmeState::initial(&q, &a, &b).unwrap();
        let op = NmeOperator { q, a, b };
        let mut plain = vec![x1.clone()];
        for _ in 1..64 {
            plain.push(nme_operator(plain.last().unwrap(), &x1).unwrap());
        }
        for r in 2..=4u32 {
            let cfg = SolverConfig::accelerated(r).with_tol(1e-300).with_max_outer(3);
            let mut hats = Vec::new();
            iterate_observed(&op, &x1, &cfg, |st| hats.push(st.clone())).unwrap();
            for (k, hat) in hats.iter().enumerate() {
                let idx = (r as usize).pow(k as u32);
                assert!(relative_error(&plain[idx - 1].q, &hat.q) <= 1e-9, "r={r} k={k}");
            }
        }
    }

    #[test]
    fn lemma_identities() {
        let mut rng = instances::rng(57);
        for _ in 0..50 {
            let mut st = || {
                scalar_state(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    0.0,
                    rng.random_range(2.0..4.0),
                )
            };
            let (xa, xb, xc) = (st(), st(), st());
            assert!(nme_lemma_suite(&xa, &xb, &xc).unwrap().iter().all(|&e| e <= 1e-13));
            assert!(nme_lemma_suite(&xa, &xa, &xa).unwrap().iter().all(|&e| e <= 1e-13));
        }
        for _ in 0..10 {
            let t: Vec<_> = (0..3).map(|_| instances::random_nme_state(&mut rng, 6)).collect();
            let errs = nme_lemma_suite(&t[0], &t[1], &t[2]).unwrap();
            assert!(errs.iter().all(|&e| e <= 1e-10), "{errs:?}");
        }
    }
}
