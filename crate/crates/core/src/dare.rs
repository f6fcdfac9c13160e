//! Discrete-time algebraic Riccati equation `X = H + Aᴴ·X·(I + G·X)⁻¹·A`.
//!
//! The order-2 accelerated iteration of this operator is the
//! structure-preserving doubling algorithm.

use crate::engine::{
    conclude, iterate, ConfigError, MatrixState, RunFailure, SemigroupOperator, Solved, SolverConfig,
};
use crate::matrixkit::{hermitian_eigenvalues, lu_factor, relative_error, DenseMatrix, LinalgError};

/// Hermitian defect of `G` or `H` tolerated on input.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DareState {
    pub a: DenseMatrix,
    pub g: DenseMatrix,
    pub h: DenseMatrix,
}

impl DareState {
    pub fn new(a: DenseMatrix, g: DenseMatrix, h: DenseMatrix) -> Result<Self, LinalgError> {
        for m in [&a, &g, &h] {
            if !m.is_square() {
                return Err(LinalgError::NotSquare { rows: m.rows(), cols: m.cols() });
            }
            if m.shape() != a.shape() {
                return Err(LinalgError::DimensionMismatch { op: "dare coefficients", left: a.shape(), right: m.shape() });
            }
        }
        Ok(Self { a, g, h })
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }
}

impl MatrixState for DareState {
    fn fields(&self) -> Vec<&DenseMatrix> {
        vec![&self.a, &self.g, &self.h]
    }
}

/// The operator without re-Hermitianizing `G` and `H`:
/// `(A_b·Δ·A_a, G_b + A_b·Δ·G_a·A_bᴴ, H_a + A_aᴴ·H_b·Δ·A_a)` with
/// `Δ = (I + G_a·H_b)⁻¹`.
pub fn dare_operator_raw(xa: &DareState, xb: &DareState) -> Result<DareState, LinalgError> {
    let n = xa.a.rows();
    let delta = lu_factor(&(DenseMatrix::identity(n) + xa.g.checked_mul(&xb.h)?))?;
    let d_a = delta.solve(&xa.a)?;
    Ok(DareState {
        a: xb.a.checked_mul(&d_a)?,
        g: &xb.g + &xb.a * delta.solve(&(&xa.g * xb.a.adjoint()))?,
        h: &xa.h + xa.a.adjoint() * &xb.h * &d_a,
    })
}

/// [`dare_operator_raw`] followed by `G ← (G + Gᴴ)/2`, `H ← (H + Hᴴ)/2`.
pub fn dare_operator(xa: &DareState, xb: &DareState) -> Result<DareState, LinalgError> {
    let raw = dare_operator_raw(xa, xb)?;
    Ok(DareState { a: raw.a, g: raw.g.hermitian_part(), h: raw.h.hermitian_part() })
}

/// `‖X − H − Aᴴ·X·(I + G·X)⁻¹·A‖_F / max(1, ‖H‖_F)`
pub fn dare_residual(problem: &DareState, x: &DenseMatrix) -> Result<f64, LinalgError> {
    let n = problem.dim();
    let inner = lu_factor(&(DenseMatrix::identity(n) + problem.g.checked_mul(x)?))?.solve(&problem.a)?;
    let r = x - &problem.h - problem.a.adjoint() * x * inner;
    Ok(r.fro_norm() / problem.h.fro_norm().max(1.0))
}

#[derive(Debug, Clone)]
pub struct DareOperator {
    pub problem: DareState,
}

impl SemigroupOperator for DareOperator {
    type State = DareState;

    fn apply(&self, left: &DareState, right: &DareState) -> Result<DareState, LinalgError> {
        dare_operator(left, right)
    }

    fn residual(&self, state: &DareState) -> Result<f64, LinalgError> {
        dare_residual(&self.problem, &state.h)
    }

    fn solution_view(&self, state: &DareState) -> DenseMatrix {
        state.h.clone()
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum DareError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{name} is not Hermitian (relative defect {defect:.3e})")]
    NotHermitian { name: &'static str, defect: f64 },
    #[error(transparent)]
    Run(#[from] RunFailure),
}

/// Inputs that are Hermitian but have a negative eigenvalue, as
/// `(name, smallest eigenvalue)`.
pub fn indefinite_inputs(problem: &DareState) -> Result<Vec<(&'static str, f64)>, LinalgError> {
    let mut out = Vec::new();
    for (name, m) in [("G", &problem.g), ("H", &problem.h)] {
        let smallest = hermitian_eigenvalues(m)?[0];
        if smallest < -HERMITIAN_TOL * m.fro_norm().max(1.0) {
            out.push((name, smallest));
        }
    }
    Ok(out)
}

/// Iterates from `(A, G, H)` and returns the limit of `H_k`.
pub fn dare_solve(problem: &DareState, cfg: &SolverConfig) -> Result<Solved, DareError> {
    let problem = DareState::new(problem.a.clone(), problem.g.clone(), problem.h.clone())?;
    for (name, m) in [("G", &problem.g), ("H", &problem.h)] {
        let defect = m.hermitian_defect();
        if defect > HERMITIAN_TOL {
            return Err(DareError::NotHermitian { name, defect });
        }
    }
    let x1 = DareState { a: problem.a.clone(), g: problem.g.hermitian_part(), h: problem.h.hermitian_part() };
    let op = DareOperator { problem };
    let run = iterate(&op, &x1, cfg)?;
    Ok(conclude(&op, run)?)
}

fn delta(g: &DenseMatrix, h: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    Ok(lu_factor(&(DenseMatrix::identity(g.rows()) + g * h))?.inverse())
}

/// Relative errors of the four identities linking `Δ_{a,b}`, `Δ_{b,c}`,
/// `Δ_{a,e}` and `Δ_{d,c}` for `X_d = F(X_a, X_b)`, `X_e = F(X_b, X_c)`,
/// with `K = G_a·A_bᴴ·H_c`:
///
/// 1. `Δ_{a,e} = Δ_{a,b} − Δ_{a,b}·K·Δ_{d,c}·A_b·Δ_{a,b}`
/// 2. `Δ_{d,c} = Δ_{b,c} − Δ_{b,c}·A_b·Δ_{a,e}·K·Δ_{b,c}`
/// 3. `Δ_{a,b}·K·Δ_{d,c} = Δ_{a,e}·K·Δ_{b,c}`
/// 4. `Δ_{d,c}·A_b·Δ_{a,b} = Δ_{b,c}·A_b·Δ_{a,e}`
pub fn dare_lemma_suite(xa: &DareState, xb: &DareState, xc: &DareState) -> Result<[f64; 4], LinalgError> {
    let xd = dare_operator_raw(xa, xb)?;
    let xe = dare_operator_raw(xb, xc)?;
    let d_ab = delta(&xa.g, &xb.h)?;
    let d_bc = delta(&xb.g, &xc.h)?;
    let d_ae = delta(&xa.g, &xe.h)?;
    let d_dc = delta(&xd.g, &xc.h)?;
    let ab = &xb.a;
    let k = &xa.g * ab.adjoint() * &xc.h;
    Ok([
        relative_error(&d_ae, &(&d_ab - &d_ab * &k * &d_dc * ab * &d_ab)),
        relative_error(&d_dc, &(&d_bc - &d_bc * ab * &d_ae * &k * &d_bc)),
        relative_error(&(&d_ab * &k * &d_dc), &(&d_ae * &k * &d_bc)),
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

    fn scalar_state(a: f64, g: f64, h: f64) -> DareState {
        DareState::new(s(a), s(g), s(h)).unwrap()
    }

    #[test]
    fn operator_examples() {
        let x1 = scalar_state(1.0, 1.0, 1.0);
        let x2 = dare_operator(&x1, &x1).unwrap();
        assert!(state_relative_error(&scalar_state(0.5, 1.5, 1.5), &x2) < 1e-15);

        let x4 = dare_operator(&x2, &x2).unwrap();
        let expected = scalar_state(1.0 / 13.0, 21.0 / 13.0, 21.0 / 13.0);
        assert!(state_relative_error(&expected, &x4) < 1e-15);
        let mut plain = x1.clone();
        for _ in 0..3 {
            plain = dare_operator(&plain, &x1).unwrap();
        }
        assert!(state_relative_error(&plain, &x4) < 1e-15);

        let mut rng = instances::rng(61);
        let mut xa = instances::random_dare_state(&mut rng, 4);
        let mut xb = instances::random_dare_state(&mut rng, 4);
        xa.a = DenseMatrix::zeros(4, 4);
        xb.a = DenseMatrix::zeros(4, 4);
        let y = dare_operator(&xa, &xb).unwrap();
        assert_eq!(y.a.fro_norm(), 0.0);
        assert_eq!(y.g, xb.g);
        assert_eq!(y.h, xa.h);
    }

    #[test]
    fn random_associativity() {
        let mut rng = instances::rng(62);
        let op = DareOperator { problem: scalar_state(0.0, 0.0, 0.0) };
        for _ in 0..20 {
            let t: Vec<_> = (0..3).map(|_| instances::random_dare_state(&mut rng, 8)).collect();
            assert!(check_associativity(&op, &t[0], &t[1], &t[2]).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn scalar_golden_ratio() {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        for cfg in [SolverConfig::plain(), SolverConfig::accelerated(2), SolverConfig::accelerated(3)] {
            let out = dare_solve(&scalar_state(1.0, 1.0, 1.0), &cfg).unwrap();
            assert!((out.x.first() - c64(phi, 0.0)).norm() <= 1e-12);
        }
    }

    #[test]
    fn zero_a_solves_immediately() {
        let mut rng = instances::rng(63);
        let mut p = instances::random_dare_state(&mut rng, 3);
        p.a = DenseMatrix::zeros(3, 3);
        let out = dare_solve(&p, &SolverConfig::default()).unwrap();
        assert_eq!(out.x, p.h);
        assert_eq!(out.report.len(), 1);
    }

    #[test]
    fn random_instance_modes_agree() {
        let p = instances::dare_instance(64, 10);
        let fast = dare_solve(&p, &SolverConfig::accelerated(2).with_max_outer(10)).unwrap();
        assert!(fast.report.final_residual().unwrap() <= 1e-10);
        let slow = dare_solve(&p, &SolverConfig::plain().with_max_outer(5000)).unwrap();
        assert!(relative_error(&slow.x, &fast.x) <= 1e-9);
    }

    #[test]
    fn doubling_visits_powers_of_two() {
        let p = instances::dare_instance(65, 5);
        let op = DareOperator { problem: p.clone() };
        let mut plain = vec![p.clone()];
        for _ in 1..32 {
            plain.push(dare_operator(plain.last().unwrap(), &p).unwrap());
        }
        let mut hats = Vec::new();
        let cfg = SolverConfig::accelerated(2).with_tol(1e-300).with_max_outer(5);
        iterate_observed(&op, &p, &cfg, |st| hats.push(st.clone())).unwrap();
        for (k, hat) in hats.iter().enumerate() {
            assert!(state_relative_error(&plain[(1 << k) - 1], hat) <= 1e-9, "k={k}");
        }
    }

    #[test]
    fn hermitian_structure_kept() {
        let p = instances::dare_instance(66, 6);
        let mut x = p.clone();
        for _ in 0..10 {
            let raw = dare_operator_raw(&x, &x).unwrap();
            assert!(raw.g.hermitian_defect() <= 1e-11 && raw.h.hermitian_defect() <= 1e-11);
            x = dare_operator(&x, &x).unwrap();
            assert_eq!(x.g.hermitian_defect(), 0.0);
            assert_eq!(x.h.hermitian_defect(), 0.0);
        }
    }

    #[test]
    fn plain_h_is_monotone() {
        let p = instances::dare_instance(67, 6);
        let mut x = p.clone();
        for _ in 0..30 {
            let next = dare_operator(&x, &p).unwrap();
            let step = &next.h - &x.h;
            let smallest = hermitian_eigenvalues(&step).unwrap()[0];
            assert!(smallest >= -1e-12 * next.h.fro_norm());
            x = next;
        }
    }

    #[test]
    fn input_validation() {
        let g = DenseMatrix::from_real_rows(&[&[1.0, 2.0], &[0.0, 1.0]]);
        let p = DareState::new(DenseMatrix::identity(2), g, DenseMatrix::identity(2)).unwrap();
        assert!(matches!(dare_solve(&p, &SolverConfig::default()), Err(DareError::NotHermitian { name: "G", .. })));
        let p = scalar_state(0.5, -1.0, 1.0);
        assert_eq!(indefinite_inputs(&p).unwrap(), vec![("G", -1.0)]);
        assert!(DareState::new(s(1.0), DenseMatrix::identity(2), s(1.0)).is_err());
    }

    #[test]
    fn indefinite_input_can_break_down() {
        // 1 + G·H = 0 at the first step.
        let p = scalar_state(1.0, -1.0, 1.0);
        let err = dare_solve(&p, &SolverConfig::plain()).unwrap_err();
        assert!(matches!(err, DareError::Run(RunFailure::Breakdown(_)) | DareError::Linalg(_)), "{err:?}");
        if let DareError::Run(f) = err {
            assert_eq!(f.unconverged().report.status, Status::Breakdown);
        }
    }

    #[test]
    fn lemma_identities() {
        let mut rng = instances::rng(68);
        for _ in 0..50 {
            let mut st = || {
                scalar_state(rng.random_range(-1.0..1.0), rng.random_range(0.1..2.0), rng.random_range(0.1..2.0))
            };
            let (xa, xb, xc) = (st(), st(), st());
            assert!(dare_lemma_suite(&xa, &xb, &xc).unwrap().iter().all(|&e| e <= 1e-13));
            assert!(dare_lemma_suite(&xa, &xa, &xa).unwrap().iter().all(|&e| e <= 1e-13));
        }
        for _ in 0..10 {
            let t: Vec<_> = (0..3).map(|_| instances::random_dare_state(&mut rng, 6)).collect();
            let errs = dare_lemma_suite(&t[0], &t[1], &t[2]).unwrap();
            assert!(errs.iter().all(|&e| e <= 1e-10), "{errs:?}");
        }
    }
}
